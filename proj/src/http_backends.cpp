#include "psychat/http_backends.hpp"

#include <cmath>

#include <httplib.h>

namespace psychat {

using nlohmann::json;

namespace wire {

namespace {

[[noreturn]] void bad(const std::string &what) { throw BackendError("malformed backend message: " + what); }

const json &field(const json &j, const char *key) {
    if (!j.is_object() || !j.contains(key)) bad(std::string("missing field '") + key + "'");
    return j.at(key);
}

std::string string_field(const json &j, const char *key) {
    const auto &v = field(j, key);
    if (!v.is_string()) bad(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

} // namespace

json to_json(const ClassifyRequest &r) {
    return {{"input", r.input}, {"role", r.role == Speaker::client ? "behavior" : "strategy"}};
}
json to_json(const EmbedRequest &r) { return {{"text", r.text}}; }
json to_json(const GenerationParams &p) {
    return {{"num_candidates", p.num_candidates},
            {"temperature", p.temperature},
            {"top_p", p.top_p},
            {"max_sequence_length", p.max_sequence_length}};
}
json to_json(const GenerateRequest &r) { return {{"input", r.input}, {"params", to_json(r.params)}}; }
json to_json(const RankRequest &r) { return {{"history", r.history}, {"candidate", r.candidate}}; }

ClassifyRequest parse_classify_request(const json &j) {
    ClassifyRequest r;
    r.input = string_field(j, "input");
    const auto role = string_field(j, "role");
    if (role == "behavior")
        r.role = Speaker::client;
    else if (role == "strategy")
        r.role = Speaker::counselor;
    else
        bad("role must be 'behavior' or 'strategy'");
    return r;
}

EmbedRequest parse_embed_request(const json &j) { return {string_field(j, "text")}; }

GenerationParams parse_generation_params(const json &j) {
    GenerationParams p;
    try {
        p.num_candidates = field(j, "num_candidates").get<int>();
        p.temperature = field(j, "temperature").get<double>();
        p.top_p = field(j, "top_p").get<double>();
        p.max_sequence_length = field(j, "max_sequence_length").get<int>();
    } catch (const json::exception &e) {
        bad(std::string("generation params: ") + e.what());
    }
    return p;
}

GenerateRequest parse_generate_request(const json &j) {
    return {string_field(j, "input"), parse_generation_params(field(j, "params"))};
}

RankRequest parse_rank_request(const json &j) { return {string_field(j, "history"), string_field(j, "candidate")}; }

} // namespace wire

// --- client ---------------------------------------------------------------------

HttpJsonClient::HttpJsonClient(std::string endpoint, int timeout_ms, int retries)
    : endpoint_(std::move(endpoint)), timeout_ms_(timeout_ms), retries_(retries) {
    const auto scheme = endpoint_.find("://");
    const auto path_start = endpoint_.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    host_ = endpoint_.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : endpoint_.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    if (host_.empty()) throw ConfigError("invalid backend endpoint '" + endpoint_ + "'");
}

namespace {

void configure(httplib::Client &cli, int timeout_ms) {
    const auto sec = timeout_ms / 1000;
    const auto usec = (timeout_ms % 1000) * 1000;
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);
}

} // namespace

json HttpJsonClient::post(const std::string &route, const json &body) const {
    const std::string path = prefix_ + route;
    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= retries_; ++attempt) {
        httplib::Client cli(host_);
        configure(cli, timeout_ms_);
        auto res = cli.Post(path, payload, "application/json");
        if (!res) {
            last_error = endpoint_ + route + " unreachable: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = endpoint_ + route + " answered HTTP " + std::to_string(res->status);
            if (res->status >= 500) continue;
            break;
        }
        try {
            return json::parse(res->body);
        } catch (const json::parse_error &e) {
            throw BackendError(endpoint_ + route + " returned invalid JSON: " + e.what());
        }
    }
    throw BackendError(last_error);
}

void HttpJsonClient::get_ok(const std::string &route) const {
    httplib::Client cli(host_);
    configure(cli, timeout_ms_);
    auto res = cli.Get(prefix_ + route);
    if (!res) throw BackendError(endpoint_ + route + " unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200) throw BackendError(endpoint_ + route + " answered HTTP " + std::to_string(res->status));
}

namespace {

HttpJsonClient client_for(const BackendDescriptor &d) {
    d.validate();
    if (d.kind != BackendKind::http) throw ConfigError("descriptor is not an http backend");
    return HttpJsonClient(*d.endpoint, d.timeout_ms, d.retries);
}

} // namespace

HttpClassifier::HttpClassifier(const BackendDescriptor &d) : client_(client_for(d)) {}

Classification HttpClassifier::classify(std::string_view input_text, Speaker role) const {
    const auto res = client_.post("/classify", wire::to_json(wire::ClassifyRequest{std::string(input_text), role}));
    Classification c;
    try {
        c.label = res.at("label").get<std::string>();
        c.scores = res.at("scores").get<std::vector<double>>();
    } catch (const json::exception &e) {
        throw BackendError(std::string("classifier response: ") + e.what());
    }
    return c;
}

void HttpClassifier::probe() const { client_.get_ok("/health"); }

HttpEmbedder::HttpEmbedder(const BackendDescriptor &d) : client_(client_for(d)), dim_(d.resolved_dim()) {}

EmbeddingVector HttpEmbedder::embed(std::string_view text) const {
    if (text.empty()) throw PreconditionError("embed: empty text");
    const auto res = client_.post("/embed", wire::to_json(wire::EmbedRequest{std::string(text)}));
    EmbeddingVector v;
    try {
        v.values = res.at("vector").get<std::vector<double>>();
    } catch (const json::exception &e) {
        throw BackendError(std::string("embedder response: ") + e.what());
    }
    if (v.dim() != dim_)
        throw BackendError("embedder returned dim " + std::to_string(v.dim()) + ", expected " + std::to_string(dim_));
    for (double x : v.values)
        if (!std::isfinite(x)) throw BackendError("embedder returned a non-finite value");
    return v;
}

std::string HttpEmbedder::fingerprint() const { return "http:" + client_.endpoint() + ";dim=" + std::to_string(dim_); }

void HttpEmbedder::probe() const { client_.get_ok("/health"); }

HttpGenerator::HttpGenerator(const BackendDescriptor &d) : client_(client_for(d)) {}

std::vector<std::string> HttpGenerator::generate(std::string_view packed_input, const GenerationParams &params) const {
    if (packed_input.empty()) throw PreconditionError("generate: empty input");
    const auto res = client_.post("/generate", wire::to_json(wire::GenerateRequest{std::string(packed_input), params}));
    try {
        return res.at("candidates").get<std::vector<std::string>>();
    } catch (const json::exception &e) {
        throw BackendError(std::string("generator response: ") + e.what());
    }
}

void HttpGenerator::probe() const { client_.get_ok("/health"); }

HttpRanker::HttpRanker(const BackendDescriptor &d) : client_(client_for(d)) {}

double HttpRanker::rank(std::string_view history_string, std::string_view candidate) const {
    const auto res =
        client_.post("/rank", wire::to_json(wire::RankRequest{std::string(history_string), std::string(candidate)}));
    double score = 0.0;
    try {
        score = res.at("score").get<double>();
    } catch (const json::exception &e) {
        throw BackendError(std::string("ranker response: ") + e.what());
    }
    if (!std::isfinite(score)) throw BackendError("ranker returned a non-finite score");
    return score;
}

void HttpRanker::probe() const { client_.get_ok("/health"); }

// --- server side ----------------------------------------------------------------

namespace {

template <class Handler>
void json_route(httplib::Server &server, const char *path, bool available, Handler handler) {
    server.Post(path, [available, handler](const httplib::Request &req, httplib::Response &res) {
        if (!available) {
            res.status = 501;
            res.set_content(json{{"error", "role not served"}}.dump(), "application/json");
            return;
        }
        try {
            const auto body = json::parse(req.body);
            res.set_content(handler(body).dump(), "application/json");
        } catch (const json::parse_error &e) {
            res.status = 400;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        } catch (const Error &e) {
            res.status = 400;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        } catch (const std::exception &e) {
            res.status = 500;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        }
    });
}

} // namespace

void install_backend_routes(httplib::Server &server, const BackendSet &b) {
    server.Get("/health", [](const httplib::Request &, httplib::Response &res) {
        res.set_content(R"({"status":"ok"})", "application/json");
    });
    json_route(server, "/classify", b.behavior_classifier || b.strategy_classifier, [b](const json &body) {
        const auto req = wire::parse_classify_request(body);
        const auto &cls = req.role == Speaker::client ? b.behavior_classifier : b.strategy_classifier;
        if (!cls) throw BackendError("classifier role not served");
        const auto c = cls->classify(req.input, req.role);
        return json{{"label", c.label}, {"scores", c.scores}};
    });
    json_route(server, "/embed", static_cast<bool>(b.embedder), [b](const json &body) {
        const auto req = wire::parse_embed_request(body);
        return json{{"vector", b.embedder->embed(req.text).values}};
    });
    json_route(server, "/generate", static_cast<bool>(b.generator), [b](const json &body) {
        const auto req = wire::parse_generate_request(body);
        return json{{"candidates", b.generator->generate(req.input, req.params)}};
    });
    json_route(server, "/rank", static_cast<bool>(b.ranker), [b](const json &body) {
        const auto req = wire::parse_rank_request(body);
        return json{{"score", b.ranker->rank(req.history, req.candidate)}};
    });
}

} // namespace psychat
