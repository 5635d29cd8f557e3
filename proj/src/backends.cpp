#include "psychat/backends.hpp"

#include <cmath>
#include <cstdlib>

#include "psychat/text.hpp"

namespace psychat {

void GenerationParams::validate() const {
    if (num_candidates <= 0) throw ConfigError("num_candidates must be positive");
    if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("temperature must be > 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in (0, 1]");
    if (max_sequence_length <= 0) throw ConfigError("max_sequence_length must be positive");
}

std::string_view to_string(BackendRole r) noexcept {
    switch (r) {
    case BackendRole::classifier_behavior: return "classifier_behavior";
    case BackendRole::classifier_strategy: return "classifier_strategy";
    case BackendRole::embedder: return "embedder";
    case BackendRole::generator: return "generator";
    case BackendRole::ranker: return "ranker";
    }
    return "?";
}

BackendRole backend_role_from_string(std::string_view s) {
    for (auto r : {BackendRole::classifier_behavior, BackendRole::classifier_strategy, BackendRole::embedder,
                   BackendRole::generator, BackendRole::ranker})
        if (to_string(r) == s) return r;
    throw ConfigError("unknown backend role '" + std::string(s) + "'");
}

std::string_view to_string(BackendKind k) noexcept { return k == BackendKind::http ? "http" : "mock"; }

BackendKind backend_kind_from_string(std::string_view s) {
    if (s == "http") return BackendKind::http;
    if (s == "mock") return BackendKind::mock;
    throw ConfigError("unknown backend kind '" + std::string(s) + "'");
}

void BackendDescriptor::validate() const {
    const std::string who = "backend " + std::string(to_string(role)) + ": ";
    if (kind == BackendKind::http && (!endpoint || endpoint->empty())) throw ConfigError(who + "http backends need an endpoint");
    if (kind == BackendKind::mock && !seed) throw ConfigError(who + "mock backends need a seed");
    if (role == BackendRole::embedder && resolved_dim() == 0) throw ConfigError(who + "dim must be positive");
    if (role == BackendRole::ranker && kind == BackendKind::mock && ranker_variant != "length" &&
        ranker_variant != "prefer_target" && ranker_variant != "random")
        throw ConfigError(who + "unknown ranker variant '" + ranker_variant + "'");
    if (timeout_ms <= 0) throw ConfigError(who + "timeout_ms must be positive");
    if (retries < 0) throw ConfigError(who + "retries must be >= 0");
}

void validate_classification(const Classification &c, const LabelVocabulary &vocab, Speaker role) {
    const auto &labels = vocab.labels_for(role);
    const auto idx = vocab.index_of(role, c.label);
    if (!idx) throw BackendError("classifier returned label '" + c.label + "' outside the vocabulary");
    if (c.scores.size() != labels.size())
        throw BackendError("classifier returned " + std::to_string(c.scores.size()) + " scores for " +
                           std::to_string(labels.size()) + " labels");
    double sum = 0.0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < c.scores.size(); ++i) {
        const double s = c.scores[i];
        if (!std::isfinite(s) || s < 0.0) throw BackendError("classifier returned a negative or non-finite score");
        sum += s;
        if (s > c.scores[best]) best = i;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw BackendError("classifier scores do not sum to 1");
    if (c.scores[*idx] < c.scores[best]) throw BackendError("classifier label is not the argmax of its scores");
}

// --- mocks ------------------------------------------------------------------------

MockClassifier::MockClassifier(LabelVocabulary vocab, std::int64_t seed) : vocab_(std::move(vocab)), seed_(seed) {}

Classification MockClassifier::classify(std::string_view input_text, Speaker role) const {
    const auto &labels = vocab_.labels_for(role);
    const std::size_t n = labels.size();
    const std::size_t idx = static_cast<std::size_t>(text::byte_sum(input_text) % n);
    Classification c;
    c.label = labels[idx].id;
    c.scores.assign(n, 1.0 / static_cast<double>(n + 1));
    c.scores[idx] = 2.0 / static_cast<double>(n + 1);
    return c;
}

MockEmbedder::MockEmbedder(std::size_t dim, std::int64_t seed) : dim_(dim), seed_(seed) {
    if (dim_ == 0) throw ConfigError("embedder dim must be positive");
}

EmbeddingVector MockEmbedder::embed(std::string_view text) const {
    if (text.empty()) throw PreconditionError("embed: empty text");
    const std::uint64_t h = text::byte_sum(text);
    EmbeddingVector v;
    v.values.resize(dim_);
    for (std::size_t i = 0; i < dim_; ++i) v.values[i] = static_cast<double>((h + i) % 97) / 97.0;
    return v;
}

std::string MockEmbedder::fingerprint() const {
    return "mock-bytesum-v1;dim=" + std::to_string(dim_) + ";seed=" + std::to_string(seed_);
}

MockGenerator::MockGenerator(std::int64_t seed, SentenceExtractor extractor) : seed_(seed), extractor_(std::move(extractor)) {}

namespace {

std::string last_nonempty_line(std::string_view s) {
    while (!s.empty()) {
        const auto nl = s.rfind('\n');
        std::string_view line = nl == std::string_view::npos ? s : s.substr(nl + 1);
        if (!text::is_blank(line)) return std::string(line);
        if (nl == std::string_view::npos) break;
        s = s.substr(0, nl);
    }
    return {};
}

} // namespace

std::vector<std::string> MockGenerator::generate(std::string_view packed_input, const GenerationParams &params) const {
    if (packed_input.empty()) throw PreconditionError("generate: empty input");
    const std::string sentence = extractor_ ? extractor_(packed_input) : last_nonempty_line(packed_input);
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(params.num_candidates));
    for (int k = 1; k <= params.num_candidates; ++k) out.push_back("echo:" + sentence + "#" + std::to_string(k));
    return out;
}

double PreferTargetRanker::rank(std::string_view, std::string_view candidate) const {
    return candidate == target_ ? 1.0 : 0.0;
}

double LengthRanker::rank(std::string_view history_string, std::string_view candidate) const {
    const auto nl = history_string.rfind('\n');
    const auto last = nl == std::string_view::npos ? history_string : history_string.substr(nl + 1);
    const auto a = static_cast<double>(text::codepoint_count(candidate));
    const auto b = static_cast<double>(text::codepoint_count(last));
    return -std::abs(a - b);
}

double RandomRanker::rank(std::string_view history_string, std::string_view candidate) const {
    std::uint64_t h = text::splitmix64(static_cast<std::uint64_t>(seed_));
    h = text::fnv1a64(history_string, h);
    h = text::fnv1a64("\x1f", h);
    h = text::fnv1a64(candidate, h);
    h = text::splitmix64(h);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::shared_ptr<const Classifier> make_mock_classifier(const BackendDescriptor &d, const LabelVocabulary &vocab) {
    d.validate();
    return std::make_shared<MockClassifier>(vocab, *d.seed);
}

std::shared_ptr<const Embedder> make_mock_embedder(const BackendDescriptor &d) {
    d.validate();
    return std::make_shared<MockEmbedder>(d.resolved_dim(), *d.seed);
}

std::shared_ptr<const Generator> make_mock_generator(const BackendDescriptor &d, MockGenerator::SentenceExtractor extractor) {
    d.validate();
    return std::make_shared<MockGenerator>(*d.seed, std::move(extractor));
}

std::shared_ptr<const Ranker> make_mock_ranker(const BackendDescriptor &d) {
    d.validate();
    if (d.ranker_variant == "prefer_target") return std::make_shared<PreferTargetRanker>(d.ranker_target);
    if (d.ranker_variant == "random") return std::make_shared<RandomRanker>(*d.seed);
    return std::make_shared<LengthRanker>();
}

} // namespace psychat
