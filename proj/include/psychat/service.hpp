#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "psychat/pipeline.hpp"

namespace psychat {

/// Error carrying the HTTP status class it maps to (400, 404, 502, 500).
class ServiceError : public Error {
  public:
    ServiceError(int status, const std::string &what) : Error(what), status_(status) {}
    int status() const noexcept { return status_; }

  private:
    int status_;
};

struct Session {
    std::string session_id;
    std::string created_at; // ISO-8601 UTC
    std::vector<Utterance> utterances;
    std::vector<nlohmann::json> metadata; // one pipeline result per counselor turn

    /// Alternating client/counselor turns starting with the client, one metadata entry per counselor turn.
    bool valid() const;
    bool operator==(const Session &) const = default;
};

/// One append-only log file per session under `<data_dir>/sessions/`. Every
/// write goes to a temp file that is fsynced and renamed over the log, so a
/// crash leaves either the old or the new log.
class SessionStore {
  public:
    explicit SessionStore(std::filesystem::path data_dir);

    /// Creates and persists an empty session.
    Session create();
    /// Nullopt when no such session exists (or the id is malformed).
    std::optional<Session> load(const std::string &session_id) const;
    /// Appends one exchange (client + counselor + metadata) atomically.
    void append_turn(Session &session, Utterance client, Utterance counselor, nlohmann::json metadata);

    static bool is_valid_id(std::string_view id) noexcept;

  private:
    std::filesystem::path path_for(const std::string &id) const;
    void write_atomic(const std::filesystem::path &path, const std::string &content) const;

    std::filesystem::path dir_;
};

/// Chat sessions on top of the pipeline. Sessions are single-writer: concurrent
/// posts to one session run one after another; different sessions run in parallel.
class ChatService {
  public:
    ChatService(std::shared_ptr<const PipelineContext> ctx, std::filesystem::path data_dir);

    std::string create_session();

    /// Runs the pipeline on the session history plus `client_text` and persists
    /// the exchange. Throws ServiceError 404 (unknown session), 400 (empty text)
    /// or 502 (pipeline failure; nothing is persisted).
    nlohmann::json post_message(const std::string &session_id, const std::string &client_text, bool debug = false);

    /// Throws ServiceError 404 for unknown sessions.
    Session get_session(const std::string &session_id) const;
    nlohmann::json session_json(const std::string &session_id, bool debug = false) const;

    /// {"status": "ok"|"degraded", "backends": {role: "ok"|error}}
    nlohmann::json health() const;
    nlohmann::json vocabulary_json() const;

    const PipelineContext &context() const noexcept { return *ctx_; }

  private:
    struct Slot {
        std::mutex mutex;
    };
    std::shared_ptr<Slot> slot_for(const std::string &session_id) const;

    std::shared_ptr<const PipelineContext> ctx_;
    SessionStore store_;
    mutable std::mutex slots_mutex_;
    mutable std::map<std::string, std::shared_ptr<Slot>> slots_;
};

/// Transcript JSON; pipeline candidates are dropped unless `debug`.
nlohmann::json session_to_json(const Session &s, bool debug);

} // namespace psychat
