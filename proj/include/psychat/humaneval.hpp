#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace psychat::humaneval {

struct TaggedResponse {
    std::string source; // e.g. "ground_truth", "baseline", "finetuned"
    std::string text;

    bool operator==(const TaggedResponse &) const = default;
};

struct Sample {
    std::string id;
    std::string history;
    std::array<TaggedResponse, 3> responses;

    bool operator==(const Sample &) const = default;
};

/// What annotators see: no source tags.
struct BlindedEntry {
    std::string id;
    std::string history;
    std::array<std::string, 3> options;

    bool operator==(const BlindedEntry &) const = default;
};

/// permutation[k] is the index in the original sample shown as option k.
struct KeyEntry {
    std::string id;
    std::array<std::size_t, 3> permutation{};
    std::array<std::string, 3> sources;

    bool operator==(const KeyEntry &) const = default;
};

struct Bundle {
    std::vector<BlindedEntry> blinded;
    std::vector<KeyEntry> key;
};

/// Shuffles each sample's three responses independently with a generator seeded
/// from (seed, sample id). Throws PreconditionError on duplicate ids.
Bundle build_humaneval_bundle(const std::vector<Sample> &samples, std::uint64_t seed);

/// Reattaches source tags; inverse of build_humaneval_bundle.
std::vector<Sample> unblind(const std::vector<BlindedEntry> &blinded, const std::vector<KeyEntry> &key);

/// JSONL readers/writers. Input lines: {"id", "history", "responses": [{"source", "text"} x3]}.
std::vector<Sample> parse_samples(const std::string &jsonl);
std::string blinded_to_jsonl(const std::vector<BlindedEntry> &entries);
std::string key_to_jsonl(const std::vector<KeyEntry> &entries);
std::vector<BlindedEntry> parse_blinded(const std::string &jsonl);
std::vector<KeyEntry> parse_key(const std::string &jsonl);

} // namespace psychat::humaneval
