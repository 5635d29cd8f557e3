#include "psychat/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>

#include "psychat/json_io.hpp"
#include "psychat/text.hpp"

namespace psychat {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kIdHexLength = 32;

std::string random_id() {
    static thread_local std::random_device rd;
    std::string out;
    out.reserve(kIdHexLength);
    static constexpr char hex[] = "0123456789abcdef";
    for (int word = 0; word < 4; ++word) {
        std::uint32_t v = rd();
        for (int nibble = 0; nibble < 8; ++nibble) {
            out.push_back(hex[v & 0xF]);
            v >>= 4;
        }
    }
    return out;
}

std::string utc_now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string errno_message(const std::string &what, const fs::path &p) {
    return what + " " + p.string() + ": " + std::strerror(errno);
}

void write_all(int fd, const std::string &content, const fs::path &p) {
    std::size_t done = 0;
    while (done < content.size()) {
        const auto n = ::write(fd, content.data() + done, content.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error(errno_message("write", p));
        }
        done += static_cast<std::size_t>(n);
    }
}

void fsync_dir(const fs::path &dir) {
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

std::string header_line(const Session &s) {
    return json{{"type", "session"}, {"session_id", s.session_id}, {"created_at", s.created_at}}.dump() + "\n";
}

std::string turn_line(const Utterance &client, const Utterance &counselor, const json &meta) {
    return json{{"type", "turn"},
                {"client", utterance_to_json(client)},
                {"counselor", utterance_to_json(counselor)},
                {"metadata", meta}}
               .dump() +
           "\n";
}

std::string normalize_text(std::string_view in) {
    std::string out(in);
    for (auto &c : out)
        if (c == '\n' || c == '\r') c = ' ';
    return out;
}

} // namespace

bool Session::valid() const {
    for (std::size_t i = 0; i < utterances.size(); ++i) {
        const auto want = i % 2 == 0 ? Speaker::client : Speaker::counselor;
        if (utterances[i].speaker != want || utterances[i].sentences.empty()) return false;
    }
    return utterances.size() % 2 == 0 && metadata.size() == utterances.size() / 2;
}

SessionStore::SessionStore(fs::path data_dir) : dir_(std::move(data_dir) / "sessions") {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create data directory " + dir_.string() + ": " + ec.message());
}

bool SessionStore::is_valid_id(std::string_view id) noexcept {
    if (id.size() != kIdHexLength) return false;
    for (char c : id)
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    return true;
}

fs::path SessionStore::path_for(const std::string &id) const { return dir_ / (id + ".jsonl"); }

void SessionStore::write_atomic(const fs::path &path, const std::string &content) const {
    fs::path tmp = path;
    tmp += ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw Error(errno_message("open", tmp));
    try {
        write_all(fd, content, tmp);
        if (::fsync(fd) != 0) throw Error(errno_message("fsync", tmp));
    } catch (...) {
        ::close(fd);
        ::unlink(tmp.c_str());
        throw;
    }
    ::close(fd);
    if (::rename(tmp.c_str(), path.c_str()) != 0) {
        const auto msg = errno_message("rename", tmp);
        ::unlink(tmp.c_str());
        throw Error(msg);
    }
    fsync_dir(dir_);
}

Session SessionStore::create() {
    Session s;
    s.created_at = utc_now_iso8601();
    for (;;) {
        s.session_id = random_id();
        // Reserve the name; O_EXCL makes concurrent creators with the same id fail.
        const auto path = path_for(s.session_id);
        const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
        if (fd < 0) {
            if (errno == EEXIST) continue;
            throw Error(errno_message("create", path));
        }
        ::close(fd);
        write_atomic(path, header_line(s));
        return s;
    }
}

std::optional<Session> SessionStore::load(const std::string &id) const {
    if (!is_valid_id(id)) return std::nullopt;
    std::ifstream in(path_for(id), std::ios::binary);
    if (!in) return std::nullopt;
    Session s;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::is_blank(line)) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error &e) {
            throw CorpusError(line_no, std::string("session log: ") + e.what());
        }
        const auto type = j.value("type", std::string());
        if (type == "session") {
            if (have_header) throw CorpusError(line_no, "session log: duplicate header");
            have_header = true;
            s.session_id = j.at("session_id").get<std::string>();
            s.created_at = j.at("created_at").get<std::string>();
        } else if (type == "turn") {
            if (!have_header) throw CorpusError(line_no, "session log: turn before header");
            s.utterances.push_back(utterance_from_json(j.at("client"), line_no));
            s.utterances.push_back(utterance_from_json(j.at("counselor"), line_no));
            s.metadata.push_back(j.at("metadata"));
        } else {
            throw CorpusError(line_no, "session log: unknown record type '" + type + "'");
        }
    }
    if (!have_header) return std::nullopt; // reserved by create() but not yet written
    if (s.session_id != id) throw CorpusError(1, "session log: id mismatch");
    if (!s.valid()) throw CorpusError(line_no, "session log: transcript violates turn alternation");
    return s;
}

void SessionStore::append_turn(Session &session, Utterance client, Utterance counselor, json metadata) {
    std::string content = header_line(session);
    for (std::size_t t = 0; t < session.metadata.size(); ++t)
        content += turn_line(session.utterances[2 * t], session.utterances[2 * t + 1], session.metadata[t]);
    content += turn_line(client, counselor, metadata);
    write_atomic(path_for(session.session_id), content);
    session.utterances.push_back(std::move(client));
    session.utterances.push_back(std::move(counselor));
    session.metadata.push_back(std::move(metadata));
}

json session_to_json(const Session &s, bool debug) {
    json turns = json::array();
    for (const auto &u : s.utterances) turns.push_back(utterance_to_json(u));
    json meta = json::array();
    for (auto m : s.metadata) {
        if (!debug) {
            m.erase("candidates");
            m.erase("packed_input");
        }
        meta.push_back(std::move(m));
    }
    return {{"session_id", s.session_id},
            {"created_at", s.created_at},
            {"utterances", std::move(turns)},
            {"metadata", std::move(meta)}};
}

ChatService::ChatService(std::shared_ptr<const PipelineContext> ctx, fs::path data_dir)
    : ctx_(std::move(ctx)), store_(std::move(data_dir)) {
    if (!ctx_) throw PreconditionError("ChatService: null pipeline context");
}

std::shared_ptr<ChatService::Slot> ChatService::slot_for(const std::string &id) const {
    std::lock_guard lock(slots_mutex_);
    auto &slot = slots_[id];
    if (!slot) slot = std::make_shared<Slot>();
    return slot;
}

std::string ChatService::create_session() { return store_.create().session_id; }

Session ChatService::get_session(const std::string &id) const {
    if (!SessionStore::is_valid_id(id)) throw ServiceError(404, "unknown session '" + id + "'");
    const auto slot = slot_for(id);
    std::lock_guard lock(slot->mutex);
    auto s = store_.load(id);
    if (!s) throw ServiceError(404, "unknown session '" + id + "'");
    return *s;
}

json ChatService::session_json(const std::string &id, bool debug) const { return session_to_json(get_session(id), debug); }

json ChatService::post_message(const std::string &id, const std::string &client_text, bool debug) {
    if (!SessionStore::is_valid_id(id)) throw ServiceError(404, "unknown session '" + id + "'");
    const auto text = normalize_text(client_text);
    if (text::is_blank(text)) throw ServiceError(400, "message text is empty");

    const auto slot = slot_for(id);
    std::lock_guard lock(slot->mutex);
    auto session = store_.load(id);
    if (!session) throw ServiceError(404, "unknown session '" + id + "'");

    auto history = session->utterances;
    history.push_back(make_utterance(Speaker::client, text));

    PipelineResult r;
    Utterance counselor;
    try {
        r = respond(history, *ctx_);
        counselor = make_utterance(Speaker::counselor, normalize_text(r.response_text));
    } catch (const std::exception &e) {
        throw ServiceError(502, std::string("pipeline failure: ") + e.what());
    }

    store_.append_turn(*session, history.back(), counselor, to_json(r, true));

    const auto &vocab = ctx_->vocab;
    json behaviors = json::array();
    for (const auto &b : r.behaviors)
        behaviors.push_back({{"sentence_index", b.sentence_index},
                             {"label", b.label},
                             {"name", vocab.display_name(Speaker::client, b.label)}});
    json strategies = json::array();
    for (const auto &s : r.strategies)
        strategies.push_back({{"label", s}, {"name", vocab.display_name(Speaker::counselor, s)}});

    json out = {{"session_id", id},
                {"response_text", counselor.text()},
                {"behaviors", std::move(behaviors)},
                {"strategies", std::move(strategies)},
                {"demonstration_id", r.demonstration_id},
                {"retrieval_distance", r.retrieval_distance}};
    if (debug) {
        out["candidates"] = r.candidates.candidates;
        out["scores"] = r.candidates.scores;
        out["selected_index"] = r.candidates.selected_index;
    }
    return out;
}

json ChatService::health() const {
    const auto &b = ctx_->backends;
    json backends = json::object();
    bool ok = true;
    auto probe = [&](const char *role, auto const &ptr) {
        try {
            if (!ptr) throw Error("not configured");
            ptr->probe();
            backends[role] = "ok";
        } catch (const std::exception &e) {
            backends[role] = e.what();
            ok = false;
        }
    };
    probe("classifier_behavior", b.behavior_classifier);
    probe("classifier_strategy", b.strategy_classifier);
    probe("embedder", b.embedder);
    probe("generator", b.generator);
    probe("ranker", b.ranker);
    return {{"status", ok ? "ok" : "degraded"}, {"backends", std::move(backends)}, {"index_records", ctx_->index->size()}};
}

json ChatService::vocabulary_json() const { return json::parse(ctx_->vocab.to_json_text()); }

} // namespace psychat
