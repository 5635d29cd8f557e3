#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psychat/backends.hpp"
#include "psychat/core.hpp"

namespace psychat {

/// One demonstration: an embedded history string mapped to the counselor reply that followed it.
struct RetrievalRecord {
    std::uint32_t record_id = 0;
    std::string history_string;
    std::vector<float> vector;
    Utterance golden_response;
    Utterance client_utterance;
    std::vector<LabelId> behaviors;
    std::vector<LabelId> strategies;

    bool operator==(const RetrievalRecord &) const = default;
};

/// Exact flat index over demonstration records, searched by Euclidean distance.
/// Immutable once built, so concurrent queries are safe.
class RetrievalIndex {
  public:
    /// Checks dims, dense ids and non-empty strategies.
    RetrievalIndex(std::vector<RetrievalRecord> records, std::size_t dim, std::string fingerprint);

    const std::vector<RetrievalRecord> &records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::string &fingerprint() const noexcept { return fingerprint_; }
    const RetrievalRecord &at(std::size_t id) const { return records_.at(id); }

    bool operator==(const RetrievalIndex &) const = default;

  private:
    std::vector<RetrievalRecord> records_;
    std::size_t dim_;
    std::string fingerprint_;
};

struct Neighbor {
    const RetrievalRecord *record = nullptr;
    double distance = 0.0;
};

/// sqrt(sum (a_i - b_i)^2), accumulated in double.
double euclidean_distance(std::span<const float> a, std::span<const float> b);

/// Fingerprint stored in index files: the embedder's identity plus the history rendering.
std::string index_fingerprint(const Embedder &embedder);

/// One record per session; every session must be fully labeled.
RetrievalIndex build_index(const std::vector<DialogueSession> &sessions, const Embedder &embedder);

/// Linear scan; ties go to the lowest record_id.
Neighbor nearest_vector(const RetrievalIndex &index, std::span<const float> query);

/// Embeds the rendered history (speaker tokens on) and scans the index.
Neighbor nearest(const RetrievalIndex &index, const std::vector<Utterance> &query_history, const Embedder &embedder);

/// Binary layout (little-endian):
///   "PSYIDX\0\0" | u32 version | u32 dim | str fingerprint | u32 count | records... | u64 fnv1a checksum
/// Strings are u32 length + UTF-8 bytes; vectors are `dim` float32 values.
void save_index(const RetrievalIndex &index, const std::string &path);

struct IndexExpectations {
    std::optional<std::size_t> dim;
    std::optional<std::string> fingerprint;
};

/// Throws IndexFileError on truncation, corruption, version or expectation mismatch.
RetrievalIndex load_index(const std::string &path, const IndexExpectations &expect = {});

} // namespace psychat
