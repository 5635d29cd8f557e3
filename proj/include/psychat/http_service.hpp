#pragma once

#include <optional>
#include <string>

namespace httplib {
class Server;
}

namespace psychat {

class ChatService;

/// Chat API:
///   POST /api/sessions                     -> {session_id}
///   POST /api/sessions/{id}/messages {text} -> response payload (?debug=1 adds candidates)
///   GET  /api/sessions/{id}                -> transcript (?debug=1 keeps candidates)
///   GET  /api/health                       -> {status, backends}
///   GET  /api/vocab                        -> label vocabulary
/// Errors are {"error": message} with status 400, 404, 502 or 500.
/// When `static_dir` is set its files are served under "/".
void install_service_routes(httplib::Server &server, ChatService &service,
                            const std::optional<std::string> &static_dir = std::nullopt);

/// Splits "host:port"; throws ConfigError on malformed input.
std::pair<std::string, int> parse_address(const std::string &addr);

} // namespace psychat
