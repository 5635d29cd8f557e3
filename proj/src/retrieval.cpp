#include "psychat/retrieval.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "psychat/text.hpp"

namespace psychat {

namespace {

constexpr char kMagic[8] = {'P', 'S', 'Y', 'I', 'D', 'X', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "index I/O assumes a little-endian host");

std::vector<float> to_float(const EmbeddingVector &v) {
    std::vector<float> out(v.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(v.values[i]);
    return out;
}

class Writer {
  public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void f32(float v) { raw(&v, sizeof v); }
    void str(const std::string &s) {
        u32(static_cast<std::uint32_t>(s.size()));
        buf_ += s;
    }
    void raw(const void *p, std::size_t n) { buf_.append(static_cast<const char *>(p), n); }
    void labels(const std::vector<LabelId> &ls) {
        u32(static_cast<std::uint32_t>(ls.size()));
        for (const auto &l : ls) str(l);
    }
    void utterance(const Utterance &u) {
        u8(u.speaker == Speaker::client ? 0 : 1);
        u32(static_cast<std::uint32_t>(u.sentences.size()));
        for (const auto &s : u.sentences) {
            str(s.text);
            u8(s.label ? 1 : 0);
            if (s.label) str(*s.label);
        }
    }
    const std::string &bytes() const noexcept { return buf_; }

  private:
    std::string buf_;
};

class Reader {
  public:
    explicit Reader(std::string_view data) : data_(data) {}

    void raw(void *p, std::size_t n) {
        if (data_.size() - pos_ < n) throw IndexFileError("index file is truncated or corrupt");
        std::memcpy(p, data_.data() + pos_, n);
        pos_ += n;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        raw(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, sizeof v);
        return v;
    }
    float f32() {
        float v;
        raw(&v, sizeof v);
        return v;
    }
    std::string str() {
        const auto n = u32();
        if (data_.size() - pos_ < n) throw IndexFileError("index file is truncated or corrupt");
        std::string s(data_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    std::vector<LabelId> labels() {
        const auto n = u32();
        std::vector<LabelId> out;
        for (std::uint32_t i = 0; i < n; ++i) out.push_back(str());
        return out;
    }
    Utterance utterance() {
        Utterance u;
        const auto sp = u8();
        if (sp > 1) throw IndexFileError("index file is corrupt: bad speaker tag");
        u.speaker = sp == 0 ? Speaker::client : Speaker::counselor;
        const auto n = u32();
        for (std::uint32_t i = 0; i < n; ++i) {
            Sentence s;
            s.text = str();
            const auto has = u8();
            if (has > 1) throw IndexFileError("index file is corrupt: bad label flag");
            if (has) s.label = str();
            u.sentences.push_back(std::move(s));
        }
        return u;
    }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }

  private:
    std::string_view data_;
    std::size_t pos_ = 0;
};

} // namespace

RetrievalIndex::RetrievalIndex(std::vector<RetrievalRecord> records, std::size_t dim, std::string fingerprint)
    : records_(std::move(records)), dim_(dim), fingerprint_(std::move(fingerprint)) {
    if (dim_ == 0) throw PreconditionError("index dim must be positive");
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto &r = records_[i];
        if (r.record_id != i) throw PreconditionError("record ids must be dense 0..n-1");
        if (r.vector.size() != dim_) throw PreconditionError("record " + std::to_string(i) + " has the wrong dim");
        if (r.strategies.empty()) throw PreconditionError("record " + std::to_string(i) + " has no strategies");
    }
}

double euclidean_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) throw PreconditionError("dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return std::sqrt(acc);
}

std::string index_fingerprint(const Embedder &embedder) { return embedder.fingerprint() + ";history=speaker-tokens"; }

RetrievalIndex build_index(const std::vector<DialogueSession> &sessions, const Embedder &embedder) {
    if (sessions.empty()) throw PreconditionError("build_index: no sessions");
    std::vector<RetrievalRecord> records;
    records.reserve(sessions.size());
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        const auto &s = sessions[i];
        if (s.history.empty() || s.history.back().speaker != Speaker::client)
            throw PreconditionError("session " + std::to_string(i) + " does not end with a client utterance");
        if (!s.fully_labeled()) throw PreconditionError("session " + std::to_string(i) + " is not fully labeled");
        RetrievalRecord r;
        r.record_id = static_cast<std::uint32_t>(i);
        r.history_string = render_history_string(s.history, true);
        const auto v = embedder.embed(r.history_string);
        if (v.dim() != embedder.dim())
            throw BackendError("embedder returned dim " + std::to_string(v.dim()) + ", expected " +
                               std::to_string(embedder.dim()));
        r.vector = to_float(v);
        r.golden_response = s.golden_response;
        r.client_utterance = s.history.back();
        r.behaviors = r.client_utterance.distinct_labels();
        r.strategies = r.golden_response.distinct_labels();
        records.push_back(std::move(r));
    }
    return RetrievalIndex(std::move(records), embedder.dim(), index_fingerprint(embedder));
}

Neighbor nearest_vector(const RetrievalIndex &index, std::span<const float> query) {
    if (index.empty()) throw PreconditionError("nearest: empty index");
    if (query.size() != index.dim())
        throw PreconditionError("nearest: query dim " + std::to_string(query.size()) + " != index dim " +
                                std::to_string(index.dim()));
    const RetrievalRecord *best = nullptr;
    double best_sq = 0.0;
    for (const auto &r : index.records()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < query.size(); ++i) {
            const double d = static_cast<double>(query[i]) - static_cast<double>(r.vector[i]);
            acc += d * d;
        }
        if (!best || acc < best_sq) {
            best = &r;
            best_sq = acc;
        }
    }
    return {best, std::sqrt(best_sq)};
}

Neighbor nearest(const RetrievalIndex &index, const std::vector<Utterance> &query_history, const Embedder &embedder) {
    if (index.empty()) throw PreconditionError("nearest: empty index");
    if (embedder.dim() != index.dim())
        throw PreconditionError("embedder dim " + std::to_string(embedder.dim()) + " != index dim " +
                                std::to_string(index.dim()));
    const auto v = embedder.embed(render_history_string(query_history, true));
    if (v.dim() != index.dim()) throw BackendError("embedder returned dim " + std::to_string(v.dim()));
    const auto q = to_float(v);
    return nearest_vector(index, q);
}

void save_index(const RetrievalIndex &index, const std::string &path) {
    Writer w;
    w.raw(kMagic, sizeof kMagic);
    w.u32(kVersion);
    w.u32(static_cast<std::uint32_t>(index.dim()));
    w.str(index.fingerprint());
    w.u32(static_cast<std::uint32_t>(index.size()));
    for (const auto &r : index.records()) {
        w.u32(r.record_id);
        w.str(r.history_string);
        for (float x : r.vector) w.f32(x);
        w.utterance(r.golden_response);
        w.utterance(r.client_utterance);
        w.labels(r.behaviors);
        w.labels(r.strategies);
    }
    w.u64(text::fnv1a64(w.bytes()));

    const auto tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IndexFileError("cannot write index file " + path);
        out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
        if (!out) throw IndexFileError("cannot write index file " + path);
    }
    std::filesystem::rename(tmp, path);
}

RetrievalIndex load_index(const std::string &path, const IndexExpectations &expect) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IndexFileError("cannot open index file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();

    if (data.size() < sizeof kMagic + 8) throw IndexFileError("index file is truncated or corrupt");
    if (std::memcmp(data.data(), kMagic, sizeof kMagic) != 0) throw IndexFileError("not a psychat index file");
    const std::string_view body(data.data(), data.size() - 8);
    std::uint64_t stored = 0;
    std::memcpy(&stored, data.data() + body.size(), 8);

    Reader r(body);
    char magic[sizeof kMagic];
    r.raw(magic, sizeof magic);
    const auto version = r.u32();
    if (version != kVersion)
        throw IndexFileError("unsupported index version " + std::to_string(version) + " (expected " +
                             std::to_string(kVersion) + ")");
    if (stored != text::fnv1a64(body)) throw IndexFileError("index file is truncated or corrupt (checksum mismatch)");

    const std::size_t dim = r.u32();
    std::string fingerprint = r.str();
    if (expect.dim && *expect.dim != dim)
        throw IndexFileError("index dim " + std::to_string(dim) + " does not match configured dim " +
                             std::to_string(*expect.dim));
    if (expect.fingerprint && *expect.fingerprint != fingerprint)
        throw IndexFileError("index fingerprint mismatch: built with '" + fingerprint + "', configured embedder is '" +
                             *expect.fingerprint + "'");

    const auto count = r.u32();
    std::vector<RetrievalRecord> records;
    for (std::uint32_t i = 0; i < count; ++i) {
        RetrievalRecord rec;
        rec.record_id = r.u32();
        rec.history_string = r.str();
        rec.vector.resize(dim);
        for (auto &x : rec.vector) x = r.f32();
        rec.golden_response = r.utterance();
        rec.client_utterance = r.utterance();
        rec.behaviors = r.labels();
        rec.strategies = r.labels();
        records.push_back(std::move(rec));
    }
    if (r.remaining() != 0) throw IndexFileError("index file has trailing bytes");
    try {
        return RetrievalIndex(std::move(records), dim, std::move(fingerprint));
    } catch (const PreconditionError &e) {
        throw IndexFileError(std::string("index file is corrupt: ") + e.what());
    }
}

} // namespace psychat
