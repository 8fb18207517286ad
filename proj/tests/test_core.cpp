#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "support/oracles.hpp"
#include "tripgrid/core/csv_io.hpp"
#include "tripgrid/core/metrics.hpp"
#include "tripgrid/core/tste.hpp"

using namespace tripgrid;
using tripgrid::testing::all_oriented_triplets;
using tripgrid::testing::finite_difference_gradient;
using tripgrid::testing::max_relative_error;
using tripgrid::testing::random_embedding;
using tripgrid::testing::random_triplets;

namespace {

Embedding line(std::vector<double> xs) {
  const auto n = xs.size();
  return Embedding(n, 1, std::move(xs));
}

}  // namespace

// ---- log-likelihood --------------------------------------------------------

TEST(TsteLogLikelihood, EquidistantGivesHalf) {
  const auto emb = line({0.0, -2.0, 2.0});
  const std::vector<Triplet> ts{{0, 1, 2}};
  EXPECT_NEAR(tste_log_likelihood(emb, ts, 1.0), std::log(0.5), 1e-15);
  EXPECT_NEAR(tste_log_likelihood(emb, ts, 3.5), -0.6931471805599453, 1e-15);
}

TEST(TsteLogLikelihood, EmptyIsZero) {
  const auto emb = line({0.0, 1.0});
  EXPECT_EQ(tste_log_likelihood(emb, {}, 1.0), 0.0);
}

TEST(TsteLogLikelihood, ClosedFormOneDimension) {
  // K(0,1) = (1+1)^-1, K(0,2) = (1+25)^-1, so p = 0.5 / (0.5 + 1/26) = 13/14.
  const auto emb = line({0.0, 1.0, 5.0});
  const std::vector<Triplet> ts{{0, 1, 2}};
  EXPECT_NEAR(tste_log_likelihood(emb, ts, 1.0), -0.07410797215372185, 1e-14);
}

TEST(TsteLogLikelihood, RejectsBadInput) {
  const auto emb = line({0.0, 1.0, 5.0});
  const std::vector<Triplet> out_of_range{{0, 1, 3}};
  EXPECT_THROW(tste_log_likelihood(emb, out_of_range, 1.0), ConstraintError);
  const std::vector<Triplet> repeated{{0, 0, 1}};
  EXPECT_THROW(tste_log_likelihood(emb, repeated, 1.0), ConstraintError);
  auto bad = emb;
  bad(1, 0) = std::nan("");
  const std::vector<Triplet> ok{{0, 1, 2}};
  EXPECT_THROW(tste_log_likelihood(bad, ok, 1.0), NumericError);
  EXPECT_THROW(tste_gradient(bad, ok, 1.0), NumericError);
}

TEST(TsteLogLikelihood, NonPositiveAndProbabilitiesInUnitInterval) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto emb = random_embedding(6, 2, rng, 3.0);
    const auto ts = random_triplets(6, 10, rng);
    EXPECT_LE(tste_log_likelihood(emb, ts, 1.0), 0.0);
    for (const auto& t : ts) {
      const std::vector<Triplet> one{t};
      const double p = std::exp(tste_log_likelihood(emb, one, 1.0));
      EXPECT_GT(p, 0.0);
      EXPECT_LT(p, 1.0);
    }
  }
}

// ---- gradient ------------------------------------------------------------

TEST(TsteGradient, EmptyIsZero) {
  const auto emb = line({0.0, 1.0, 2.0});
  const auto g = tste_gradient(emb, {}, 1.0);
  for (double v : g.data()) EXPECT_EQ(v, 0.0);
}

TEST(TsteGradient, MirrorSymmetryZeroesProbeAlongAxis) {
  // b and c mirror each other across the y axis through a: no pull along that axis.
  Embedding emb(3, 2, {0.0, 0.3, 1.0, 0.0, -1.0, 0.0});
  const std::vector<Triplet> ts{{0, 1, 2}};
  const auto g = tste_gradient(emb, ts, 1.0);
  EXPECT_NEAR(g(0, 1), 0.0, 1e-15);
  EXPECT_GT(g(0, 0), 0.0);
}

TEST(TsteGradient, OnlyInvolvedRowsNonZero) {
  std::mt19937_64 rng(3);
  const auto emb = random_embedding(6, 2, rng);
  const std::vector<Triplet> ts{{0, 1, 2}};
  const auto g = tste_gradient(emb, ts, 1.0);
  for (std::size_t i = 3; i < 6; ++i)
    for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(g(i, k), 0.0);
}

TEST(TsteGradient, MatchesFiniteDifferencesFivePoints) {
  std::mt19937_64 rng(11);
  const auto emb = random_embedding(5, 2, rng);
  const auto ts = random_triplets(5, 10, rng);
  const auto analytic = tste_gradient(emb, ts, 1.0);
  const auto numeric = finite_difference_gradient([&](const Embedding& e) { return tste_log_likelihood(e, ts, 1.0); }, emb);
  EXPECT_LT(max_relative_error(analytic, numeric), 1e-4);
}

TEST(TsteGradient, PropertyMatchesFiniteDifferences) {
  std::mt19937_64 rng(12345);
  std::uniform_int_distribution<std::size_t> n_dist(3, 8), d_dist(1, 3), t_dist(1, 20);
  std::uniform_real_distribution<double> alpha_dist(0.5, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = n_dist(rng), d = d_dist(rng), t = t_dist(rng);
    const double alpha = alpha_dist(rng);
    const auto emb = random_embedding(n, d, rng);
    const auto ts = random_triplets(n, t, rng);
    const auto analytic = tste_gradient(emb, ts, alpha);
    const auto numeric =
        finite_difference_gradient([&](const Embedding& e) { return tste_log_likelihood(e, ts, alpha); }, emb);
    ASSERT_LT(max_relative_error(analytic, numeric), 1e-4) << "trial " << trial << " n=" << n << " d=" << d;
  }
}

// ---- fit -----------------------------------------------------------------

TEST(TsteFit, EmptyReturnsInitialization) {
  TsteConfig cfg;
  cfg.seed = 9;
  const auto emb = tste_fit({}, 5, cfg);
  EXPECT_EQ(emb.n_points(), 5u);
  EXPECT_EQ(emb.dim(), 2u);
  EXPECT_EQ(emb, tste_initialization(5, cfg));
  EXPECT_EQ(tste_log_likelihood(emb, {}, 1.0), 0.0);
}

TEST(TsteFit, SingleTripletSatisfied) {
  TsteConfig cfg;
  const std::vector<Triplet> ts{{0, 1, 2}};
  const auto emb = tste_fit(ts, 3, cfg);
  EXPECT_LT(emb.distance(0, 1), emb.distance(0, 2));
}

TEST(TsteFit, RejectsIndicesBeyondN) {
  const std::vector<Triplet> ts{{0, 1, 4}};
  EXPECT_THROW(tste_fit(ts, 3, TsteConfig{}), ConstraintError);
  TsteConfig bad;
  bad.tolerance = 0.0;
  EXPECT_THROW(tste_fit({}, 3, bad), ArgumentError);
}

TEST(TsteFit, RecoversTenPointGroundTruth) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    std::mt19937_64 rng(seed);
    const auto truth = random_embedding(10, 2, rng);
    const auto ts = all_oriented_triplets(truth);
    ASSERT_EQ(ts.size(), 360u);
    TsteConfig cfg;
    cfg.seed = seed;
    const auto emb = tste_fit(ts, 10, cfg);
    EXPECT_LE(triplet_generalization_error(emb, ts), 0.05) << "seed " << seed;
  }
}

TEST(TsteFit, DeterministicAndMonotone) {
  std::mt19937_64 rng(5);
  const auto truth = random_embedding(12, 2, rng);
  const auto ts = random_triplets(12, 150, rng);
  TsteConfig cfg;
  cfg.seed = 77;
  TsteTrace trace;
  const auto a = tste_fit(ts, 12, cfg, &trace);
  const auto b = tste_fit(ts, 12, cfg);
  EXPECT_EQ(a, b);
  ASSERT_GE(trace.accepted_log_likelihoods.size(), 2u);
  for (std::size_t i = 1; i < trace.accepted_log_likelihoods.size(); ++i) {
    EXPECT_GE(trace.accepted_log_likelihoods[i], trace.accepted_log_likelihoods[i - 1]);
  }
  EXPECT_GE(trace.final_log_likelihood, trace.initial_log_likelihood);
  EXPECT_NEAR(trace.final_log_likelihood, tste_log_likelihood(a, ts, cfg.resolved_alpha()), 1e-9);
}

TEST(TsteConfig, DefaultAlphaFloorsAtFive) {
  TsteConfig cfg;
  cfg.dim = 2;
  EXPECT_EQ(cfg.resolved_alpha(), 5.0);
  cfg.dim = 6;
  EXPECT_EQ(cfg.resolved_alpha(), 5.0);
  cfg.dim = 9;
  EXPECT_EQ(cfg.resolved_alpha(), 8.0);
  cfg.alpha = 0.5;
  EXPECT_EQ(cfg.resolved_alpha(), 0.5);
}

// ---- metrics -------------------------------------------------------------

TEST(TripletGeneralizationError, TruthAndComplement) {
  std::mt19937_64 rng(21);
  const auto truth = random_embedding(8, 2, rng);
  const auto ts = all_oriented_triplets(truth);
  EXPECT_EQ(triplet_generalization_error(truth, ts), 0.0);
  std::vector<Triplet> swapped;
  for (const auto& t : ts) swapped.push_back(t.swapped());
  EXPECT_EQ(triplet_generalization_error(truth, swapped), 1.0);
}

TEST(TripletGeneralizationError, TieIsViolation) {
  const auto emb = line({0.0, -1.0, 1.0});
  const std::vector<Triplet> ts{{0, 1, 2}};
  EXPECT_EQ(triplet_generalization_error(emb, ts), 1.0);
}

TEST(TripletGeneralizationError, RandomEmbeddingNearHalf) {
  std::mt19937_64 rng(99);
  const auto truth = random_embedding(50, 2, rng);
  std::vector<Triplet> held_out;
  for (const auto& t : random_triplets(50, 10000, rng)) {
    held_out.push_back(truth.squared_distance(t.probe, t.near) <= truth.squared_distance(t.probe, t.far) ? t : t.swapped());
  }
  const auto unrelated = random_embedding(50, 2, rng);
  EXPECT_NEAR(triplet_generalization_error(unrelated, held_out), 0.5, 0.05);
}

TEST(TripletGeneralizationError, EmptyIsError) {
  EXPECT_THROW(triplet_generalization_error(line({0.0, 1.0, 2.0}), {}), ArgumentError);
}

TEST(LooNnError, SeparatedClusters) {
  const auto emb = line({0.0, 0.1, 0.2, 10.0, 10.1, 10.2});
  const std::vector<std::int64_t> labels{0, 0, 0, 1, 1, 1};
  EXPECT_EQ(loo_nn_error(emb, labels), 0.0);
}

TEST(LooNnError, UniqueLabels) {
  const auto emb = line({0.0, 1.0, 3.0, 7.0});
  const std::vector<std::int64_t> labels{0, 1, 2, 3};
  EXPECT_EQ(loo_nn_error(emb, labels), 1.0);
}

TEST(LooNnError, HandComputedInterleaved) {
  // Nearest neighbours: 0->1 ok, 1->0 ok, 2->3 miss, 3->2 miss, 4->3 miss, 5->4 ok.
  const auto emb = line({0.0, 0.5, 2.0, 2.2, 5.0, 9.0});
  const std::vector<std::int64_t> labels{0, 0, 1, 0, 1, 1};
  EXPECT_DOUBLE_EQ(loo_nn_error(emb, labels), 0.5);
}

TEST(LooNnError, TieGoesToLowestIndex) {
  // Point 1 is equidistant from 0 and 2; neighbour 0 shares its label.
  const auto emb = line({0.0, 1.0, 2.0});
  const std::vector<std::int64_t> labels{7, 7, 8};
  // 0->1 ok, 1->0 ok, 2->1 miss
  EXPECT_DOUBLE_EQ(loo_nn_error(emb, labels), 1.0 / 3.0);
}

TEST(LooNnError, Errors) {
  const std::vector<std::int64_t> one{0};
  EXPECT_THROW(loo_nn_error(line({0.0}), one), ArgumentError);
  const std::vector<std::int64_t> short_labels{0};
  EXPECT_THROW(loo_nn_error(line({0.0, 1.0}), short_labels), ArgumentError);
}

TEST(Metrics, RigidMotionInvariance) {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_int_distribution<std::int64_t> label(0, 2);
  for (int trial = 0; trial < 25; ++trial) {
    const auto emb = random_embedding(9, 2, rng);
    const auto ts = random_triplets(9, 30, rng);
    std::vector<std::int64_t> labels(9);
    for (auto& l : labels) l = label(rng);
    const double th = angle(rng);
    const double tx = 3.0 * std::normal_distribution<double>()(rng);
    const double ty = 3.0 * std::normal_distribution<double>()(rng);
    Embedding moved(9, 2);
    for (std::size_t i = 0; i < 9; ++i) {
      moved(i, 0) = std::cos(th) * emb(i, 0) - std::sin(th) * emb(i, 1) + tx;
      moved(i, 1) = std::sin(th) * emb(i, 0) + std::cos(th) * emb(i, 1) + ty;
    }
    EXPECT_NEAR(tste_log_likelihood(emb, ts, 1.0), tste_log_likelihood(moved, ts, 1.0), 1e-9);
    EXPECT_NEAR(triplet_generalization_error(emb, ts), triplet_generalization_error(moved, ts), 1e-9);
    EXPECT_NEAR(loo_nn_error(emb, labels), loo_nn_error(moved, labels), 1e-9);
  }
}

// ---- file formats --------------------------------------------------------

TEST(CsvIo, EmbeddingRoundTripIsExact) {
  std::mt19937_64 rng(8);
  const auto emb = random_embedding(17, 3, rng, 1e3);
  std::stringstream ss;
  csv::write_embedding(ss, emb);
  EXPECT_EQ(csv::read_embedding(ss), emb);
}

TEST(CsvIo, TripletRoundTripAndErrors) {
  std::mt19937_64 rng(8);
  const auto ts = random_triplets(30, 100, rng);
  std::stringstream ss(csv::triplets_to_string(ts));
  EXPECT_EQ(csv::read_triplets(ss), ts);

  std::stringstream bad("probe,near,far\n0,1,2\n0,1\n");
  try {
    csv::read_triplets(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::stringstream no_header("0,1,2\n");
  EXPECT_THROW(csv::read_triplets(no_header), ParseError);
}
