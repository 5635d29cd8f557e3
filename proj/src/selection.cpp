#include "psychat/selection.hpp"

#include <unordered_map>
#include <unordered_set>

#include "psychat/rng.hpp"

namespace psychat {

std::size_t argmax_lowest(const std::vector<double> &scores) {
    if (scores.empty()) throw PreconditionError("argmax of an empty score list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

RankedCandidates select_response(const std::string &history_string, const std::vector<std::string> &candidates,
                                 const Ranker &ranker) {
    if (candidates.empty()) throw PreconditionError("select_response: no candidates");
    RankedCandidates out;
    out.candidates = candidates;
    out.scores.reserve(candidates.size());
    for (const auto &c : candidates) out.scores.push_back(ranker.rank(history_string, c));
    out.selected_index = argmax_lowest(out.scores);
    return out;
}

std::vector<RankingExample> build_ranking_dataset(const std::vector<DialogueSession> &sessions,
                                                  std::size_t negatives_per_example, std::uint64_t seed) {
    std::vector<std::string> pool;
    std::unordered_map<std::string, std::size_t> pool_index;
    for (const auto &s : sessions) {
        auto text = s.golden_response.text();
        if (pool_index.emplace(text, pool.size()).second) pool.push_back(std::move(text));
    }
    if (pool.size() < negatives_per_example + 1)
        throw PreconditionError("ranking dataset needs at least " + std::to_string(negatives_per_example + 1) +
                                " distinct golden responses, found " + std::to_string(pool.size()));

    SeededRng rng(seed);
    std::vector<RankingExample> out;
    out.reserve(sessions.size());
    for (const auto &s : sessions) {
        RankingExample ex;
        ex.history_string = render_history_string(s.history, true);
        const std::string gold = s.golden_response.text();
        const std::size_t gold_pool = pool_index.at(gold);

        std::unordered_set<std::size_t> chosen;
        std::vector<std::string> candidates{gold};
        while (chosen.size() < negatives_per_example) {
            const auto j = static_cast<std::size_t>(rng.below(pool.size()));
            if (j == gold_pool || !chosen.insert(j).second) continue;
            candidates.push_back(pool[j]);
        }
        std::vector<std::size_t> order(candidates.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            ex.candidates.push_back(candidates[order[pos]]);
            if (order[pos] == 0) ex.gold_index = pos;
        }
        out.push_back(std::move(ex));
    }
    return out;
}

bool gold_in_top_k(const std::vector<double> &scores, std::size_t gold_index, std::size_t k) {
    const double g = scores.at(gold_index);
    std::size_t ahead = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (scores[i] > g || (scores[i] == g && i < gold_index)) ++ahead;
    return ahead < k;
}

double recall_at_k(const std::vector<RankingExample> &examples, const Ranker &ranker, std::size_t k) {
    if (examples.empty()) throw PreconditionError("recall_at_k: no examples");
    if (k == 0) throw PreconditionError("recall_at_k: k must be positive");
    std::size_t hits = 0;
    for (const auto &ex : examples) {
        std::vector<double> scores;
        scores.reserve(ex.candidates.size());
        for (const auto &c : ex.candidates) scores.push_back(ranker.rank(ex.history_string, c));
        if (gold_in_top_k(scores, ex.gold_index, k)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(examples.size());
}

} // namespace psychat
