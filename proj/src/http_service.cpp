#include "psychat/http_service.hpp"

#include <httplib.h>

#include "psychat/service.hpp"

namespace psychat {

using nlohmann::json;

namespace {

void send_json(httplib::Response &res, int status, const json &body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

template <class F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request &req, httplib::Response &res) {
        try {
            send_json(res, 200, f(req));
        } catch (const ServiceError &e) {
            send_json(res, e.status(), {{"error", e.what()}});
        } catch (const json::exception &e) {
            send_json(res, 400, {{"error", std::string("bad request body: ") + e.what()}});
        } catch (const std::exception &e) {
            send_json(res, 500, {{"error", e.what()}});
        }
    };
}

bool debug_flag(const httplib::Request &req) {
    if (!req.has_param("debug")) return false;
    const auto v = req.get_param_value("debug");
    return v == "1" || v == "true";
}

} // namespace

void install_service_routes(httplib::Server &server, ChatService &service, const std::optional<std::string> &static_dir) {
    server.Post("/api/sessions", guarded([&service](const httplib::Request &) {
                    return json{{"session_id", service.create_session()}};
                }));
    server.Post(R"(/api/sessions/([^/]+)/messages)", guarded([&service](const httplib::Request &req) {
                    const auto body = json::parse(req.body);
                    if (!body.is_object() || !body.contains("text") || !body.at("text").is_string())
                        throw ServiceError(400, "body must be {\"text\": string}");
                    return service.post_message(req.matches[1].str(), body.at("text").get<std::string>(),
                                                debug_flag(req));
                }));
    server.Get(R"(/api/sessions/([^/]+))", guarded([&service](const httplib::Request &req) {
                   return service.session_json(req.matches[1].str(), debug_flag(req));
               }));
    server.Get("/api/health", guarded([&service](const httplib::Request &) { return service.health(); }));
    server.Get("/api/vocab", guarded([&service](const httplib::Request &) { return service.vocabulary_json(); }));
    if (static_dir && !server.set_mount_point("/", *static_dir))
        throw ConfigError("static directory does not exist: " + *static_dir);
}

std::pair<std::string, int> parse_address(const std::string &addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == addr.size())
        throw ConfigError("address must be host:port, got '" + addr + "'");
    int port = 0;
    try {
        std::size_t used = 0;
        port = std::stoi(addr.substr(colon + 1), &used);
        if (used != addr.size() - colon - 1) throw std::invalid_argument(addr);
    } catch (const std::exception &) {
        throw ConfigError("bad port in address '" + addr + "'");
    }
    if (port < 0 || port > 65535) throw ConfigError("port out of range in '" + addr + "'");
    return {addr.substr(0, colon), port};
}

} // namespace psychat
