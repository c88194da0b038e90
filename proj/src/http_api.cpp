#include "nsbot/http_api.hpp"

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

namespace nsbot::service {

using json = nlohmann::json;

namespace {

void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const char* kind, const std::string& message) {
    send(res, status, {{"error", kind}, {"message", message}});
}

// Runs a handler and maps library errors to HTTP statuses.
template <class F>
void guarded(httplib::Response& res, F&& handler) {
    try {
        handler();
    } catch (const BadTask& e) {
        send_error(res, 400, "BadTask", e.what());
    } catch (const UnknownSession& e) {
        send_error(res, 404, "UnknownSession", e.what());
    } catch (const StateClosed& e) {
        send_error(res, 409, "StateClosed", e.what());
    } catch (const nl::BackendUnavailable& e) {
        res.set_header("Retry-After", std::to_string(e.retry_after()));
        send_error(res, 503, "BackendUnavailable", e.what());
    } catch (const nl::Timeout& e) {
        res.set_header("Retry-After", "1");
        send_error(res, 504, "Timeout", e.what());
    } catch (const nl::UnparseableOutput& e) {
        send_error(res, 422, "UnparseableOutput", e.what());
    } catch (const ValidationFailed& e) {
        send_error(res, 422, "ValidationFailed", e.what());
    } catch (const json::exception& e) {
        send_error(res, 400, "BadRequest", e.what());
    } catch (const std::exception& e) {
        spdlog::error("internal error: {}", e.what());
        send_error(res, 500, "Internal", e.what());
    }
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    auto body = json::parse(req.body);
    if (!body.is_object()) throw json::type_error::create(302, "request body must be a JSON object", nullptr);
    return body;
}

SerializeStyle style_of(const Service& service, const std::string& id) {
    return service.engine(service.info(id).task).style();
}

} // namespace

void install_routes(httplib::Server& server, Service& service) {
    server.set_default_headers({
        {"Access-Control-Allow-Origin", "*"},
        {"Access-Control-Allow-Headers", "Content-Type"},
        {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
    });
    server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/v1/health", [&](const httplib::Request&, httplib::Response& res) {
        send(res, 200, {{"status", "ok"}, {"sessions", service.session_count()}});
    });

    server.Post("/v1/sessions", [&](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            auto body = parse_body(req);
            auto task = body.value("task", std::string());
            auto backend = body.value("backend", std::string("mock"));
            std::optional<std::uint64_t> seed;
            if (body.contains("seed") && !body["seed"].is_null()) seed = body["seed"].get<std::uint64_t>();
            auto [info, greeting] = service.create_session(task, backend, seed);
            send(res, 201, {{"session", to_json(info)}, {"greeting", to_json(greeting, service.engine(task).style())}});
        });
    });

    server.Post(R"(/v1/sessions/([0-9a-f]+)/messages)", [&](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const std::string id = req.matches[1];
            auto body = parse_body(req);
            if (!body.contains("text") || !body["text"].is_string()) {
                send_error(res, 400, "BadRequest", "body needs a string field 'text'");
                return;
            }
            auto style = style_of(service, id);
            auto turn = service.post_message(id, body["text"].get<std::string>());
            send(res, 200, to_json(turn, style));
        });
    });

    server.Get(R"(/v1/sessions/([0-9a-f]+)/transcript)", [&](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const std::string id = req.matches[1];
            auto info = service.info(id);
            auto style = service.engine(info.task).style();
            json entries = json::array();
            for (const auto& e : service.transcript(id)) entries.push_back(to_json(e, style));
            send(res, 200, {{"session", to_json(info)}, {"entries", entries}});
        });
    });

    server.Get(R"(/v1/sessions/([0-9a-f]+)/state)", [&](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const std::string id = req.matches[1];
            send(res, 200, {{"session", to_json(service.info(id))},
                            {"digest", service.state_digest(id)},
                            {"snapshot", service.state(id)}});
        });
    });

    server.Get(R"(/v1/sessions/([^/]+)(/.*)?)", [](const httplib::Request& req, httplib::Response& res) {
        send_error(res, 404, "UnknownSession", "no session '" + std::string(req.matches[1]) + "'");
    });
}

bool serve(Service& service, const std::string& host, int port, const std::function<void(int)>& on_ready) {
    httplib::Server server;
    install_routes(server, service);
    server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
        spdlog::info("{} {} -> {}", req.method, req.path, res.status);
    });
    if (port == 0) {
        port = server.bind_to_any_port(host);
        if (port < 0) return false;
    } else if (!server.bind_to_port(host, port)) {
        return false;
    }
    spdlog::info("listening on {}:{}", host, port);
    if (on_ready) on_ready(port);
    return server.listen_after_bind();
}

} // namespace nsbot::service
