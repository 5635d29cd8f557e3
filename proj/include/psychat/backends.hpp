#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psychat/core.hpp"

namespace psychat {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const noexcept { return values.size(); }
    bool operator==(const EmbeddingVector &) const = default;
};

struct GenerationParams {
    int num_candidates = 10;
    double temperature = 0.8;
    double top_p = 0.8;
    int max_sequence_length = 8192;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
    bool operator==(const GenerationParams &) const = default;
};

enum class BackendRole { classifier_behavior, classifier_strategy, embedder, generator, ranker };
enum class BackendKind { http, mock };

std::string_view to_string(BackendRole r) noexcept;
BackendRole backend_role_from_string(std::string_view s);
std::string_view to_string(BackendKind k) noexcept;
BackendKind backend_kind_from_string(std::string_view s);

struct BackendDescriptor {
    BackendRole role = BackendRole::embedder;
    BackendKind kind = BackendKind::mock;
    std::optional<std::string> endpoint;
    std::optional<std::int64_t> seed;

    // Mock knobs.
    std::optional<std::size_t> dim;        // embedder output size
    std::string ranker_variant = "length"; // length | prefer_target | random
    std::string ranker_target;             // prefer_target only

    int timeout_ms = 30000;
    int retries = 0;

    /// http needs an endpoint, mock needs a seed.
    void validate() const;
    /// Configured dim, else 1024 for http embedders and 8 for mocks.
    std::size_t resolved_dim() const noexcept { return dim.value_or(kind == BackendKind::http ? 1024 : 8); }
};

struct Classification {
    LabelId label;
    std::vector<double> scores;
};

class Classifier {
  public:
    virtual ~Classifier() = default;
    /// `role` selects the behavior (client) or strategy (counselor) vocabulary.
    virtual Classification classify(std::string_view input_text, Speaker role) const = 0;
    /// Throws BackendError when the backend cannot serve requests.
    virtual void probe() const {}
};

class Embedder {
  public:
    virtual ~Embedder() = default;
    virtual EmbeddingVector embed(std::string_view text) const = 0;
    virtual std::size_t dim() const noexcept = 0;
    /// Identifies the embedding model and its settings; stored in index files.
    virtual std::string fingerprint() const = 0;
    virtual void probe() const {}
};

class Generator {
  public:
    virtual ~Generator() = default;
    virtual std::vector<std::string> generate(std::string_view packed_input, const GenerationParams &params) const = 0;
    virtual void probe() const {}
};

class Ranker {
  public:
    virtual ~Ranker() = default;
    /// Higher is better.
    virtual double rank(std::string_view history_string, std::string_view candidate) const = 0;
    virtual void probe() const {}
};

struct BackendSet {
    std::shared_ptr<const Classifier> behavior_classifier;
    std::shared_ptr<const Classifier> strategy_classifier;
    std::shared_ptr<const Embedder> embedder;
    std::shared_ptr<const Generator> generator;
    std::shared_ptr<const Ranker> ranker;
};

/// Checks the classifier contract: label in vocabulary, one score per label,
/// a probability distribution, label at the argmax. Throws BackendError.
void validate_classification(const Classification &c, const LabelVocabulary &vocab, Speaker role);

// --- deterministic mocks ----------------------------------------------------------
//
// h(text) = sum of UTF-8 bytes.
//   classifier: label index h mod |vocab|; the chosen label scores 2/(|V|+1), others 1/(|V|+1)
//   embedder:   v[i] = ((h + i) mod 97) / 97
//   generator:  "echo:<last client sentence>#k", k = 1..N
//   rankers:    prefer_target (1 on exact match, else 0), length (-|len(c) - len(last history line)|
//               in code points), random (uniform [0,1) hashed from seed and inputs)

class MockClassifier final : public Classifier {
  public:
    MockClassifier(LabelVocabulary vocab, std::int64_t seed);
    Classification classify(std::string_view input_text, Speaker role) const override;

  private:
    LabelVocabulary vocab_;
    std::int64_t seed_;
};

class MockEmbedder final : public Embedder {
  public:
    explicit MockEmbedder(std::size_t dim = 8, std::int64_t seed = 0);
    EmbeddingVector embed(std::string_view text) const override;
    std::size_t dim() const noexcept override { return dim_; }
    std::string fingerprint() const override;

  private:
    std::size_t dim_;
    std::int64_t seed_;
};

class MockGenerator final : public Generator {
  public:
    /// Pulls the last client sentence out of a packed prompt.
    using SentenceExtractor = std::function<std::string(std::string_view packed_input)>;

    /// Without an extractor the last non-empty line of the prompt is echoed.
    explicit MockGenerator(std::int64_t seed = 0, SentenceExtractor extractor = {});
    std::vector<std::string> generate(std::string_view packed_input, const GenerationParams &params) const override;

  private:
    std::int64_t seed_;
    SentenceExtractor extractor_;
};

class PreferTargetRanker final : public Ranker {
  public:
    explicit PreferTargetRanker(std::string target) : target_(std::move(target)) {}
    double rank(std::string_view history_string, std::string_view candidate) const override;

  private:
    std::string target_;
};

class LengthRanker final : public Ranker {
  public:
    double rank(std::string_view history_string, std::string_view candidate) const override;
};

class RandomRanker final : public Ranker {
  public:
    explicit RandomRanker(std::int64_t seed) : seed_(seed) {}
    double rank(std::string_view history_string, std::string_view candidate) const override;

  private:
    std::int64_t seed_;
};

/// Builds the mock implementation described by `d` (d.kind must be mock).
std::shared_ptr<const Classifier> make_mock_classifier(const BackendDescriptor &d, const LabelVocabulary &vocab);
std::shared_ptr<const Embedder> make_mock_embedder(const BackendDescriptor &d);
std::shared_ptr<const Generator> make_mock_generator(const BackendDescriptor &d, MockGenerator::SentenceExtractor extractor);
std::shared_ptr<const Ranker> make_mock_ranker(const BackendDescriptor &d);

} // namespace psychat
