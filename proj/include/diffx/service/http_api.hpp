// Copyright (C) 2026 The diffx Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <thread>

#include <json.hpp>

#include "diffx/detail/httplib.hpp"
#include "diffx/service/orchestrator.hpp"

namespace diffx {

inline int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnknownSession: return 404;
    case ErrorCode::IllegalTransition: return 409;
    case ErrorCode::BackendUnavailable:
    case ErrorCode::BackendFailure:
    case ErrorCode::Timeout:
    case ErrorCode::ProtocolError: return 503;
    case ErrorCode::InvalidArgument:
    case ErrorCode::EmptyText:
    case ErrorCode::ParseError:
    case ErrorCode::ConfigError: return 400;
    default: return 500;
    }
}

/// HTTP/JSON front end:
///   POST /sessions                    {"predictor": bool}?   -> 201 session
///   POST /sessions/{id}/prompt        {"prompt": str}        -> round
///   POST /sessions/{id}/finalize                             -> cloud round
///   POST /sessions/{id}/close
///   GET  /sessions/{id}                                      -> session + history
///   GET  /images/{digest}                                    -> image/png
///   GET  /metrics                                            -> report JSON
///   GET  /healthz
/// Errors come back as {"error": <code>, "message": str}.
class ApiServer {
public:
    explicit ApiServer(Orchestrator& orchestrator) : orch_(orchestrator) { routes(); }

    ~ApiServer() { stop(); }

    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds and serves on a background thread; port 0 picks a free port.
    int start(const std::string& host, int port) {
        port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
        if (port_ <= 0) raise(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port_;
    }

    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    void wait() {
        if (thread_.joinable()) thread_.join();
    }

    int port() const noexcept { return port_; }

private:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    static void send_json(httplib::Response& res, const nlohmann::ordered_json& body, int status = 200) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static Handler guarded(Handler fn) {
        return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
            try {
                fn(req, res);
            } catch (const Error& e) {
                send_json(res, {{"error", std::string(to_string(e.code()))}, {"message", e.what()}},
                          http_status(e.code()));
            } catch (const nlohmann::json::exception& e) {
                send_json(res, {{"error", "ParseError"}, {"message", e.what()}}, 400);
            } catch (const std::exception& e) {
                send_json(res, {{"error", "Internal"}, {"message", e.what()}}, 500);
            }
        };
    }

    static nlohmann::json body_json(const httplib::Request& req) {
        if (req.body.empty()) return nlohmann::json::object();
        auto j = nlohmann::json::parse(req.body);
        if (!j.is_object()) raise(ErrorCode::ParseError, "request body must be a JSON object");
        return j;
    }

    static nlohmann::ordered_json round_json(const std::string& id, const RoundRecord& r, const SessionView& view) {
        auto j = record_json(r);
        j["session_id"] = id;
        j["phase"] = std::string(to_string(view.state.phase));
        j["image_url"] = "/images/" + r.image_ref;
        return j;
    }

    void routes() {
        server_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
        server_.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });
        server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            send_json(res, {{"status", "ok"}});
        });
        server_.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = body_json(req);
            std::optional<bool> predictor;
            if (body.contains("predictor") && !body["predictor"].is_null()) predictor = body["predictor"].get<bool>();
            const auto id = orch_.create_session(predictor);
            send_json(res, session_view_json(orch_.get_session(id)), 201);
        }));
        server_.Post(R"(/sessions/([^/]+)/prompt)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            const auto body = body_json(req);
            if (!body.contains("prompt") || !body["prompt"].is_string()) {
                raise(ErrorCode::InvalidArgument, "body must carry a string 'prompt'");
            }
            const auto rec = orch_.submit_prompt(id, body["prompt"].get<std::string>());
            send_json(res, round_json(id, rec, orch_.get_session(id)));
        }));
        server_.Post(R"(/sessions/([^/]+)/finalize)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            const auto rec = orch_.finalize(id);
            auto j = round_json(id, rec, orch_.get_session(id));
            j["strength_used"] = rec.predicted_strength ? rec.predicted_strength->value : 0.0;
            send_json(res, j);
        }));
        server_.Post(R"(/sessions/([^/]+)/close)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            orch_.close(id);
            send_json(res, session_view_json(orch_.get_session(id)));
        }));
        server_.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, session_view_json(orch_.get_session(req.matches[1])));
        }));
        server_.Get(R"(/images/([0-9a-f]{64}))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string digest = req.matches[1];
            if (!orch_.images().contains(digest)) {
                send_json(res, {{"error", "NotFound"}, {"message", "no image " + digest}}, 404);
                return;
            }
            const auto bytes = orch_.images().bytes(digest);
            res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
        }));
        server_.Get("/metrics", guarded([this](const httplib::Request&, httplib::Response& res) {
            send_json(res, report_to_json(orch_.metrics()));
        }));
    }

    Orchestrator& orch_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace diffx
