#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "psychat/core.hpp"
#include "psychat/recognition.hpp"

namespace psychat::testing {

inline std::filesystem::path source_dir() { return PSYCHAT_SOURCE_DIR; }
inline std::filesystem::path asset(const std::string &name) { return source_dir() / "assets" / name; }
inline std::filesystem::path golden(const std::string &name) { return source_dir() / "tests" / "golden" / name; }

inline std::string read_file(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path &p, const std::string &s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("psychat-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    const std::filesystem::path &path() const { return path_; }
    std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

/// Three behavior labels and three strategy labels.
inline LabelVocabulary small_vocab() {
    return LabelVocabulary({{"b_desc", "描述"}, {"b_emotion", "情绪"}, {"b_ask", "求助"}},
                           {{"s_question", "提问"}, {"s_comfort", "安慰"}, {"s_advice", "建议"}});
}

inline Sentence sent(std::string text, std::optional<LabelId> label = std::nullopt) {
    return {std::move(text), std::move(label)};
}

inline Utterance client(std::vector<Sentence> s) { return {Speaker::client, std::move(s)}; }
inline Utterance counselor(std::vector<Sentence> s) { return {Speaker::counselor, std::move(s)}; }

/// Random alternating, client-first, fully labeled dialogue with `turns` utterances.
inline Dialogue random_dialogue(std::mt19937_64 &rng, const LabelVocabulary &vocab, std::size_t turns,
                                const std::string &id) {
    static const char *words[] = {"我很累", "睡不着", "工作忙", "想休息", "有点难过", "谢谢你", "慢慢来",
                                  "怎么办", "压力大", "你好",   "ok",     "why"};
    static const char *ends[] = {"。", "！", "？"};
    Dialogue d{id, {}};
    for (std::size_t t = 0; t < turns; ++t) {
        const auto speaker = t % 2 == 0 ? Speaker::client : Speaker::counselor;
        const auto &labels = vocab.labels_for(speaker);
        Utterance u{speaker, {}};
        const auto n = 1 + rng() % 3;
        for (std::size_t i = 0; i < n; ++i) {
            std::string text = words[rng() % std::size(words)];
            text += ends[rng() % std::size(ends)];
            u.sentences.push_back({text, labels[rng() % labels.size()].id});
        }
        d.utterances.push_back(std::move(u));
    }
    return d;
}

} // namespace psychat::testing
