#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "support/oracles.hpp"
#include "tripgrid/collection/ckl.hpp"
#include "tripgrid/collection/dedup.hpp"
#include "tripgrid/collection/grid.hpp"
#include "tripgrid/collection/sampling.hpp"

using namespace tripgrid;

namespace {

GridTask make_task(TaskId id, ObjectId probe, std::vector<ObjectId> grid, std::size_t k) {
  GridTask t;
  t.task_id = id;
  t.probe = probe;
  t.spec = GridSpec{grid.size(), k};
  t.grid = std::move(grid);
  return t;
}

}  // namespace

// ---- expand_grid_answer ---------------------------------------------------

TEST(ExpandGridAnswer, YieldCounts) {
  Rng rng(1);
  const std::vector<std::pair<std::size_t, std::size_t>> cases{{4, 1}, {16, 4}, {12, 4}};
  const std::vector<std::size_t> expected{3, 48, 32};
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const GridSpec spec{cases[i].first, cases[i].second};
    const auto task = sample_random_grid(50, spec, rng, 7);
    GridAnswer ans{7, {}, 0};
    for (std::size_t p = 0; p < spec.k; ++p) ans.selected.push_back(p);
    EXPECT_EQ(expand_grid_answer(task, ans).size(), expected[i]);
  }
}

TEST(ExpandGridAnswer, OrderAndRoles) {
  const auto task = make_task(3, 0, {9, 4, 7, 2}, 2);
  const GridAnswer ans{3, {2, 0}, 0};  // objects 7 and 9 selected
  const std::vector<Triplet> expected{{0, 7, 2}, {0, 7, 4}, {0, 9, 2}, {0, 9, 4}};
  EXPECT_EQ(expand_grid_answer(task, ans), expected);
}

TEST(ExpandGridAnswer, PropertyYieldAndRoles) {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 20);
    const std::size_t k = 1 + uniform_index(rng, n - 1);
    const GridSpec spec{n, k};
    const auto task = sample_random_grid(n + 1 + uniform_index(rng, 30), spec, rng, trial);
    std::vector<std::size_t> positions(n);
    std::iota(positions.begin(), positions.end(), 0);
    std::shuffle(positions.begin(), positions.end(), rng);
    positions.resize(k);
    const GridAnswer ans{static_cast<TaskId>(trial), positions, 0};
    const auto ts = expand_grid_answer(task, ans);
    ASSERT_EQ(ts.size(), k * (n - k));
    std::set<ObjectId> selected;
    for (auto p : positions) selected.insert(task.grid[p]);
    for (const auto& t : ts) {
      EXPECT_EQ(t.probe, task.probe);
      EXPECT_TRUE(selected.contains(t.near));
      EXPECT_FALSE(selected.contains(t.far));
    }
  }
}

TEST(ExpandGridAnswer, Errors) {
  const auto task = make_task(3, 0, {9, 4, 7, 2}, 2);
  EXPECT_THROW(expand_grid_answer(task, GridAnswer{4, {0, 1}, 0}), ConstraintError);
  EXPECT_THROW(expand_grid_answer(task, GridAnswer{3, {0}, 0}), ConstraintError);
  EXPECT_THROW(expand_grid_answer(task, GridAnswer{3, {0, 0}, 0}), ConstraintError);
  EXPECT_THROW(expand_grid_answer(task, GridAnswer{3, {0, 4}, 0}), ConstraintError);
  const auto catch_like = make_task(5, 0, {9, 0, 7, 2}, 2);
  EXPECT_THROW(expand_grid_answer(catch_like, GridAnswer{5, {0, 1}, 0}), ConstraintError);
  EXPECT_THROW(GridSpec({4, 4}).validate(), ArgumentError);
  EXPECT_THROW(GridSpec({4, 0}).validate(), ArgumentError);
}

// ---- capacity and dedup ---------------------------------------------------

TEST(UniqueTripletCapacity, Values) {
  EXPECT_EQ(unique_triplet_capacity(100), 485100u);
  EXPECT_EQ(unique_triplet_capacity(3), 3u);
  EXPECT_THROW(unique_triplet_capacity(2), ArgumentError);
}

TEST(UniqueTripletCapacity, MatchesEnumeration) {
  for (std::size_t n = 3; n <= 9; ++n) {
    std::set<TripletKey> keys;
    for (ObjectId a = 0; a < n; ++a)
      for (ObjectId b = 0; b < n; ++b)
        for (ObjectId c = 0; c < n; ++c)
          if (a != b && a != c && b != c) keys.insert(TripletKey::of({a, b, c}));
    EXPECT_EQ(unique_triplet_capacity(n), keys.size()) << n;
  }
  EXPECT_EQ(unique_triplet_capacity(5), 30u);
}

TEST(DedupTriplets, DuplicatesAndMajority) {
  const std::vector<Triplet> dup{{0, 1, 2}, {0, 1, 2}};
  auto d = dedup_triplets(dup);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.begin()->second, (Triplet{0, 1, 2}));

  const std::vector<Triplet> majority{{0, 1, 2}, {0, 2, 1}, {0, 2, 1}};
  d = dedup_triplets(majority);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.begin()->second, (Triplet{0, 2, 1}));
}

TEST(DedupTriplets, TieGoesToLastSeen) {
  const std::vector<Triplet> a{{0, 1, 2}, {0, 2, 1}};
  EXPECT_EQ(dedup_triplets(a).begin()->second, (Triplet{0, 2, 1}));
  const std::vector<Triplet> b{{0, 2, 1}, {0, 1, 2}};
  EXPECT_EQ(dedup_triplets(b).begin()->second, (Triplet{0, 1, 2}));
}

TEST(DedupTriplets, MatchesBruteForceGrouping) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ts = tripgrid::testing::random_triplets(6, 200, rng);
    const auto d = dedup_triplets(ts);
    // Brute force: for every key, tally orientations in order.
    std::map<std::tuple<int, int, int>, std::pair<int, int>> tally;  // key -> (lo-near count, hi-near count)
    std::map<std::tuple<int, int, int>, bool> last_lo;
    for (const auto& t : ts) {
      const int lo = std::min(t.near, t.far), hi = std::max(t.near, t.far);
      const auto key = std::make_tuple(int(t.probe), lo, hi);
      const bool lo_near = int(t.near) == lo;
      (lo_near ? tally[key].first : tally[key].second)++;
      last_lo[key] = lo_near;
    }
    ASSERT_EQ(d.size(), tally.size());
    EXPECT_LE(d.size(), 60u);
    for (const auto& [key, counts] : tally) {
      const auto [p, lo, hi] = key;
      const bool lo_wins = counts.first != counts.second ? counts.first > counts.second : last_lo[key];
      const Triplet expected = lo_wins ? Triplet{ObjectId(p), ObjectId(lo), ObjectId(hi)}
                                       : Triplet{ObjectId(p), ObjectId(hi), ObjectId(lo)};
      EXPECT_EQ(d.at(TripletKey{ObjectId(p), ObjectId(lo), ObjectId(hi)}), expected);
    }
  }
}

TEST(DedupTriplets, Idempotent) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ts = tripgrid::testing::random_triplets(7, 150, rng);
    const auto once = dedup_triplets(ts);
    EXPECT_EQ(dedup_triplets(values(once)), once);
  }
}

TEST(TripletStore, ArrivalOrderAndCounts) {
  TripletStore store;
  store.add(Triplet{3, 1, 2});
  store.add(Triplet{0, 1, 2});
  store.add(Triplet{3, 2, 1});
  store.add(Triplet{3, 2, 1});
  EXPECT_EQ(store.raw_count(), 4u);
  EXPECT_EQ(store.unique_count(), 2u);
  const std::vector<Triplet> arrival{{3, 2, 1}, {0, 1, 2}};
  EXPECT_EQ(store.triplets_in_arrival_order(), arrival);
  const std::vector<Triplet> keyed{{0, 1, 2}, {3, 2, 1}};
  EXPECT_EQ(store.triplets(), keyed);
}

// ---- samplers --------------------------------------------------------------

TEST(SampleRandomTripletQuestion, ForcedPair) {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto q = sample_random_triplet_question(3, rng);
    std::set<ObjectId> all{q.probe, q.b, q.c};
    EXPECT_EQ(all.size(), 3u);
    EXPECT_LT(q.b, q.c);
  }
  EXPECT_THROW(sample_random_triplet_question(2, rng), ArgumentError);
}

TEST(SampleRandomTripletQuestion, UniformProbeAndPairs) {
  Rng rng(6);
  std::vector<int> probe_counts(10, 0);
  std::map<std::pair<ObjectId, ObjectId>, int> pair_counts_for_probe0;
  for (int i = 0; i < 100000; ++i) {
    const auto q = sample_random_triplet_question(10, rng);
    ASSERT_NE(q.probe, q.b);
    ASSERT_NE(q.probe, q.c);
    ASSERT_LT(q.b, q.c);
    ++probe_counts[q.probe];
    if (q.probe == 0) ++pair_counts_for_probe0[{q.b, q.c}];
  }
  for (int c : probe_counts) EXPECT_NEAR(c, 10000, 500);
  // 36 pairs exclude object 0; each expected ~278 times.
  EXPECT_EQ(pair_counts_for_probe0.size(), 36u);
  double chi2 = 0.0;
  const double expected = probe_counts[0] / 36.0;
  for (const auto& [_, c] : pair_counts_for_probe0) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 70.0);  // 35 dof, p ~ 5e-4
}

TEST(SampleRandomTripletQuestion, Deterministic) {
  Rng a(77), b(77);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_random_triplet_question(20, a), sample_random_triplet_question(20, b));
}

TEST(SampleRandomGrid, ForcedAndErrors) {
  Rng rng(8);
  const GridSpec spec{4, 2};
  const auto task = sample_random_grid(5, spec, rng);
  std::set<ObjectId> all(task.grid.begin(), task.grid.end());
  all.insert(task.probe);
  EXPECT_EQ(all.size(), 5u);
  EXPECT_THROW(sample_random_grid(4, spec, rng), ArgumentError);
}

TEST(SampleRandomGrid, UniformCoverage) {
  Rng rng(9);
  const GridSpec spec{12, 4};
  std::vector<int> counts(100, 0);
  for (int i = 0; i < 10000; ++i) {
    const auto task = sample_random_grid(100, spec, rng, i);
    ASSERT_EQ(std::find(task.grid.begin(), task.grid.end(), task.probe), task.grid.end());
    std::set<ObjectId> distinct(task.grid.begin(), task.grid.end());
    ASSERT_EQ(distinct.size(), 12u);
    for (auto g : task.grid) ++counts[g];
  }
  for (int c : counts) EXPECT_NEAR(c, 1200, 120);
}

TEST(SampleRandomGrid, Deterministic) {
  Rng a(10), b(10);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sample_random_grid(40, {16, 4}, a, i), sample_random_grid(40, {16, 4}, b, i));
}

// ---- occurrence ------------------------------------------------------------

TEST(OccurrenceStats, HandTally) {
  const std::vector<Triplet> ts{{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 0, 2}, {1, 0, 3}, {1, 2, 3},
                                {2, 0, 1}, {2, 0, 3}, {3, 0, 1}, {3, 1, 2}, {0, 3, 1}, {0, 2, 1}};
  const auto s = occurrence_stats(ts, 4);
  // Object 0 appears in 10 triplets, 1 in 10, 2 in 8, 3 in 8.
  const std::vector<std::size_t> expected{10, 10, 8, 8};
  EXPECT_EQ(s.histogram, expected);
  EXPECT_DOUBLE_EQ(s.mean, 9.0);
  EXPECT_DOUBLE_EQ(s.stddev, 1.0);
}

TEST(OccurrenceStats, EmptyAndPaperMean) {
  const auto empty = occurrence_stats({}, 5);
  EXPECT_EQ(empty.mean, 0.0);
  EXPECT_EQ(empty.stddev, 0.0);
  EXPECT_EQ(empty.histogram, std::vector<std::size_t>(5, 0));

  std::mt19937_64 rng(1);
  const auto ts = tripgrid::testing::random_triplets(100, 59520, rng);
  const auto s = occurrence_stats(ts, 100);
  EXPECT_DOUBLE_EQ(s.mean, 1785.6);
  std::size_t sum = 0;
  for (auto c : s.histogram) sum += c;
  EXPECT_EQ(sum, 3u * ts.size());
}

// ---- CKL ------------------------------------------------------------------

TEST(Ckl, PoolOfOneReturnsCandidate) {
  std::mt19937_64 erng(3);
  const auto emb = tripgrid::testing::random_embedding(10, 2, erng);
  CklConfig cfg;
  cfg.pool_size = 1;
  Rng a(4), b(4);
  const auto choice = ckl_select_question(emb, 10, {}, cfg, a);
  EXPECT_EQ(choice.question, sample_random_triplet_question(10, b));
  EXPECT_FALSE(choice.fallback);
}

TEST(Ckl, SymmetricCandidateHasZeroGain) {
  // Probe at the origin, b and c mirrored across the y axis; posterior only moves along y.
  Embedding emb(4, 2, {0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 3.0});
  const std::vector<std::vector<double>> offsets{{0.0, 0.0}, {0.0, 0.4}, {0.0, -0.4}, {0.0, 0.8}};
  const double symmetric = ckl_information_gain(emb, {}, TripletQuestion{0, 1, 2}, 0.05, offsets);
  EXPECT_NEAR(symmetric, 0.0, 1e-12);
  const double asymmetric = ckl_information_gain(emb, {}, TripletQuestion{0, 1, 3}, 0.05, offsets);
  EXPECT_GT(asymmetric, symmetric);
}

TEST(Ckl, GainIsNonNegative) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal(0.0, 0.3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto emb = tripgrid::testing::random_embedding(8, 2, rng);
    const auto hist = tripgrid::testing::random_triplets(8, 10, rng);
    std::vector<std::vector<double>> offsets(6, std::vector<double>(2));
    for (auto& o : offsets)
      for (auto& v : o) v = normal(rng);
    Rng qrng(trial);
    const auto q = sample_random_triplet_question(8, qrng);
    EXPECT_GE(ckl_information_gain(emb, hist, q, 0.05, offsets), -1e-12);
  }
}

// Independent re-derivation of the selection: replays the documented draw
// order and scores with a separately written mutual-information formula.
TEST(Ckl, MatchesExhaustiveScoringOfPool) {
  std::mt19937_64 erng(42);
  const auto emb = tripgrid::testing::random_embedding(10, 2, erng);
  const auto answered = tripgrid::testing::random_triplets(10, 25, erng);
  CklConfig cfg;
  cfg.pool_size = 20;
  cfg.posterior_samples = 8;
  cfg.mu = 0.05;

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const auto choice = ckl_select_question(emb, 10, answered, cfg, rng);

    Rng replay(seed);
    std::vector<TripletQuestion> pool;
    for (int i = 0; i < 20; ++i) pool.push_back(sample_random_triplet_question(10, replay));
    std::vector<double> all;
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t j = i + 1; j < 10; ++j) all.push_back(emb.distance(i, j));
    std::sort(all.begin(), all.end());
    const double median =
        all.size() % 2 == 1 ? all[all.size() / 2] : 0.5 * (all[all.size() / 2 - 1] + all[all.size() / 2]);
    std::normal_distribution<double> normal(0.0, median / 4.0);

    double best = -1.0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const auto& q = pool[i];
      std::vector<std::array<double, 2>> zs{{emb(q.probe, 0), emb(q.probe, 1)}};
      for (int s = 1; s < 8; ++s) {
        const double dx = normal(replay);
        const double dy = normal(replay);
        zs.push_back({emb(q.probe, 0) + dx, emb(q.probe, 1) + dy});
      }
      auto pos = [&](ObjectId o, const std::array<double, 2>& z) {
        return o == q.probe ? z : std::array<double, 2>{emb(o, 0), emb(o, 1)};
      };
      auto d2 = [](std::array<double, 2> u, std::array<double, 2> v) {
        return (u[0] - v[0]) * (u[0] - v[0]) + (u[1] - v[1]) * (u[1] - v[1]);
      };
      std::vector<double> weights, ps;
      for (const auto& z : zs) {
        double w = 1.0;
        for (const auto& t : answered) {
          if (t.probe != q.probe && t.near != q.probe && t.far != q.probe) continue;
          const double dn = d2(pos(t.probe, z), pos(t.near, z));
          const double df = d2(pos(t.probe, z), pos(t.far, z));
          w *= (df + 0.05) / (dn + df + 0.1);
        }
        weights.push_back(w);
        const double dn = d2(z, pos(q.b, z));
        const double df = d2(z, pos(q.c, z));
        ps.push_back((df + 0.05) / (dn + df + 0.1));
      }
      double wsum = 0.0;
      for (double w : weights) wsum += w;
      auto h = [](double p) { return p <= 0 || p >= 1 ? 0.0 : -(p * std::log2(p) + (1 - p) * std::log2(1 - p)); };
      double mp = 0.0, mh = 0.0;
      for (std::size_t s = 0; s < zs.size(); ++s) {
        mp += weights[s] / wsum * ps[s];
        mh += weights[s] / wsum * h(ps[s]);
      }
      const double gain = h(mp) - mh;
      if (gain > best + 1e-12) {
        best = gain;
        best_i = i;
      }
    }
    EXPECT_EQ(choice.question, pool[best_i]) << "seed " << seed;
    EXPECT_NEAR(choice.gain, best, 1e-9);
  }
}

TEST(Ckl, DegenerateEmbeddingFallsBack) {
  Embedding flat(6, 2);
  CklConfig cfg;
  Rng a(3), b(3);
  const auto choice = ckl_select_question(flat, 6, {}, cfg, a);
  EXPECT_TRUE(choice.fallback);
  EXPECT_EQ(choice.question, sample_random_triplet_question(6, b));
}

TEST(Ckl, Deterministic) {
  std::mt19937_64 erng(1);
  const auto emb = tripgrid::testing::random_embedding(15, 2, erng);
  const auto answered = tripgrid::testing::random_triplets(15, 40, erng);
  Rng a(99), b(99);
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(ckl_select_question(emb, 15, answered, CklConfig{}, a).question,
              ckl_select_question(emb, 15, answered, CklConfig{}, b).question);
  }
}

TEST(Ckl, ConfigValidation) {
  CklConfig cfg;
  cfg.posterior_samples = 1;
  EXPECT_THROW(cfg.validate(), ArgumentError);
  cfg = {};
  cfg.mu = 0.0;
  EXPECT_THROW(cfg.validate(), ArgumentError);
}
