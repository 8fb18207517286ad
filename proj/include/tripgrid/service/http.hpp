#pragma once

// JSON-over-HTTP front end:
//   POST /experiments                          create from a manifest body
//   GET  /experiments/:id/next?worker=W        task payload or {"status":"done"}
//   POST /experiments/:id/answers              {task_id, worker, selected[], elapsed_ms}
//   GET  /experiments/:id/triplets.csv         optional ?exclude_failed_catch_workers=<rate>
//   GET  /experiments/:id/stats
//   GET  /experiments/:id/assets/:object       catalog image
// plus an optional static mount for the browser client.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <httplib.h>

#include "tripgrid/service/service.hpp"

namespace tripgrid::service {

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  // Catalog asset paths are resolved against this directory.
  std::string asset_root = ".";
  // Served at / when non-empty.
  std::string ui_dir;
};

inline json task_payload(const CollectionExperiment& exp, const ScheduledTask& st) {
  const std::string base = "/experiments/" + exp.experiment_id + "/assets/";
  json grid = json::array();
  for (auto id : st.task.grid) grid.push_back(base + std::to_string(id));
  return {{"status", "task"},
          {"task_id", st.task.task_id},
          {"probe_url", base + std::to_string(st.task.probe)},
          {"grid_urls", grid},
          {"k", exp.spec.k},
          {"instruction", exp.instruction}};
}

inline int rejection_status(const std::string& code) {
  if (code == "unknown_task") return 404;
  if (code == "already_answered" || code == "not_assigned") return 409;
  return 400;
}

class HttpServer {
 public:
  HttpServer(CollectionService& service, ServeConfig config) : service_(service), config_(std::move(config)) {
    routes();
  }

  httplib::Server& raw() noexcept { return server_; }

  /// Binds (port 0 picks a free port) and returns the bound port.
  int bind() {
    if (config_.port == 0) {
      port_ = server_.bind_to_any_port(config_.host);
    } else {
      port_ = server_.bind_to_port(config_.host, config_.port) ? config_.port : -1;
    }
    if (port_ < 0) throw IoError("cannot bind " + config_.host + ":" + std::to_string(config_.port));
    return port_;
  }

  /// Blocks until stop().
  void listen() { server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }
  int port() const noexcept { return port_; }

 private:
  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, status, {{"status", "error"}, {"code", code}, {"message", message}});
  }

  void routes() {
    server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const NotFoundError& e) {
        send_error(res, 404, "not_found", e.what());
      } catch (const json::exception& e) {
        send_error(res, 400, "bad_request", e.what());
      } catch (const ArgumentError& e) {
        send_error(res, 400, "bad_request", e.what());
      } catch (const ConstraintError& e) {
        send_error(res, 400, "bad_request", e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    });

    server_.Post("/experiments", [this](const httplib::Request& req, httplib::Response& res) {
      const auto exp = experiment_from_json(json::parse(req.body));
      if (!exp.experiment_id.empty() && service_.contains(exp.experiment_id)) {
        send_error(res, 409, "exists", "experiment '" + exp.experiment_id + "' already exists");
        return;
      }
      const auto id = service_.create_experiment(exp);
      const auto& created = service_.experiment(id).experiment();
      send_json(res, 201,
                {{"experiment_id", id},
                 {"tasks", service_.experiment(id).tasks().size()},
                 {"blocks", created.block_count()},
                 {"projected_cost", econ::screens_cost(created.target_screens, created.pricing)}});
    });

    server_.Get("/experiments/:id/next", [this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      const auto worker = req.get_param_value("worker");
      if (worker.empty()) {
        send_error(res, 400, "missing_worker", "query parameter 'worker' is required");
        return;
      }
      const auto next = service_.next_task(id, worker);
      if (next.done) {
        send_json(res, 200, {{"status", "done"}, {"screens_answered", next.screens_answered}});
        return;
      }
      send_json(res, 200, task_payload(service_.experiment(id).experiment(), *next.task));
    });

    server_.Post("/experiments/:id/answers", [this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      const auto body = json::parse(req.body);
      const auto result = service_.submit_answer(id, body.at("worker").get<std::string>(),
                                                 body.at("task_id").get<TaskId>(),
                                                 body.at("selected").get<std::vector<std::int64_t>>(),
                                                 body.at("elapsed_ms").get<std::int64_t>());
      if (!result.accepted) {
        send_json(res, rejection_status(result.code),
                  {{"status", "rejected"}, {"code", result.code}, {"message", result.message}});
        return;
      }
      json ack{{"status", "ok"}, {"duplicate", result.duplicate}};
      send_json(res, 200, ack);
    });

    server_.Get("/experiments/:id/triplets.csv", [this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      std::optional<double> threshold;
      if (req.has_param("exclude_failed_catch_workers")) {
        threshold = std::stod(req.get_param_value("exclude_failed_catch_workers"));
      }
      const auto out = service_.export_triplets(id, threshold);
      res.set_header("X-Raw-Triplets", std::to_string(out.raw));
      res.set_header("X-Unique-Triplets", std::to_string(out.unique));
      res.set_content(out.csv, "text/csv");
    });

    server_.Get("/experiments/:id/stats", [this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      json workers = json::array();
      for (const auto& s : service_.worker_stats(id)) workers.push_back(to_json(s));
      const auto& state = service_.experiment(id);
      const auto exported = state.export_triplets();
      send_json(res, 200,
                {{"experiment_id", id},
                 {"answers", state.answered_count()},
                 {"raw_triplets", exported.raw},
                 {"unique_triplets", exported.unique},
                 {"workers", workers}});
    });

    server_.Get("/experiments/:id/assets/:object", [this](const httplib::Request& req, httplib::Response& res) {
      const auto& exp = service_.experiment(req.path_params.at("id")).experiment();
      const auto& obj = req.path_params.at("object");
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(obj, &used);
        if (used != obj.size()) throw std::invalid_argument(obj);
      } catch (const std::exception&) {
        send_error(res, 404, "not_found", "no object '" + obj + "'");
        return;
      }
      if (idx >= exp.catalog.size()) {
        send_error(res, 404, "not_found", "no object " + obj);
        return;
      }
      const auto path = std::filesystem::path(config_.asset_root) / exp.catalog[idx];
      std::ifstream in(path, std::ios::binary);
      if (!in) {
        send_error(res, 404, "not_found", "asset missing for object " + obj);
        return;
      }
      std::ostringstream data;
      data << in.rdbuf();
      res.set_content(data.str(), httplib::detail::find_content_type(path.string(), {}, "application/octet-stream"));
    });

    if (!config_.ui_dir.empty() && !server_.set_mount_point("/", config_.ui_dir)) {
      throw IoError("cannot serve UI directory " + config_.ui_dir);
    }
  }

  CollectionService& service_;
  ServeConfig config_;
  httplib::Server server_;
  int port_ = -1;
};

}  // namespace tripgrid::service
