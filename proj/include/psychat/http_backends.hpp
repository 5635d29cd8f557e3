#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "psychat/backends.hpp"

namespace httplib {
class Server;
}

namespace psychat {

/// Request/response bodies of the backend protocol: one POST route per role.
///   /classify {input, role} -> {label, scores}
///   /embed    {text}        -> {vector}
///   /generate {input, params} -> {candidates}
///   /rank     {history, candidate} -> {score}
/// `role` is "behavior" or "strategy". GET /health answers 200 when the server is up.
namespace wire {

struct ClassifyRequest {
    std::string input;
    Speaker role = Speaker::client;
    bool operator==(const ClassifyRequest &) const = default;
};
struct EmbedRequest {
    std::string text;
    bool operator==(const EmbedRequest &) const = default;
};
struct GenerateRequest {
    std::string input;
    GenerationParams params;
    bool operator==(const GenerateRequest &) const = default;
};
struct RankRequest {
    std::string history;
    std::string candidate;
    bool operator==(const RankRequest &) const = default;
};

nlohmann::json to_json(const ClassifyRequest &r);
nlohmann::json to_json(const EmbedRequest &r);
nlohmann::json to_json(const GenerateRequest &r);
nlohmann::json to_json(const RankRequest &r);
nlohmann::json to_json(const GenerationParams &p);

/// Parsers throw BackendError on schema violations.
ClassifyRequest parse_classify_request(const nlohmann::json &j);
EmbedRequest parse_embed_request(const nlohmann::json &j);
GenerateRequest parse_generate_request(const nlohmann::json &j);
RankRequest parse_rank_request(const nlohmann::json &j);
GenerationParams parse_generation_params(const nlohmann::json &j);

} // namespace wire

/// Minimal JSON-over-HTTP client. A fresh connection is opened per call, so one
/// instance can be shared by concurrent callers.
class HttpJsonClient {
  public:
    HttpJsonClient(std::string endpoint, int timeout_ms, int retries);

    nlohmann::json post(const std::string &route, const nlohmann::json &body) const;
    void get_ok(const std::string &route) const;
    const std::string &endpoint() const noexcept { return endpoint_; }

  private:
    std::string endpoint_;
    std::string host_;   // scheme://host:port
    std::string prefix_; // path prefix without trailing '/'
    int timeout_ms_;
    int retries_;
};

class HttpClassifier final : public Classifier {
  public:
    explicit HttpClassifier(const BackendDescriptor &d);
    Classification classify(std::string_view input_text, Speaker role) const override;
    void probe() const override;

  private:
    HttpJsonClient client_;
};

class HttpEmbedder final : public Embedder {
  public:
    explicit HttpEmbedder(const BackendDescriptor &d);
    EmbeddingVector embed(std::string_view text) const override;
    std::size_t dim() const noexcept override { return dim_; }
    std::string fingerprint() const override;
    void probe() const override;

  private:
    HttpJsonClient client_;
    std::size_t dim_;
};

class HttpGenerator final : public Generator {
  public:
    explicit HttpGenerator(const BackendDescriptor &d);
    std::vector<std::string> generate(std::string_view packed_input, const GenerationParams &params) const override;
    void probe() const override;

  private:
    HttpJsonClient client_;
};

class HttpRanker final : public Ranker {
  public:
    explicit HttpRanker(const BackendDescriptor &d);
    double rank(std::string_view history_string, std::string_view candidate) const override;
    void probe() const override;

  private:
    HttpJsonClient client_;
};

/// Serves the backend protocol on `server` using the given implementations
/// (any member may be null; its route then answers 501).
void install_backend_routes(httplib::Server &server, const BackendSet &backends);

} // namespace psychat
