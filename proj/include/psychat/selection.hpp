#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "psychat/backends.hpp"
#include "psychat/core.hpp"

namespace psychat {

struct RankedCandidates {
    std::vector<std::string> candidates;
    std::vector<double> scores;
    std::size_t selected_index = 0;

    const std::string &selected() const { return candidates.at(selected_index); }
    bool operator==(const RankedCandidates &) const = default;
};

struct RankingExample {
    std::string history_string;
    std::vector<std::string> candidates;
    std::size_t gold_index = 0;

    bool operator==(const RankingExample &) const = default;
};

/// Index of the maximum score; the lowest index wins ties.
std::size_t argmax_lowest(const std::vector<double> &scores);

/// Scores every candidate against the history (in candidate order) and picks the argmax.
RankedCandidates select_response(const std::string &history_string, const std::vector<std::string> &candidates,
                                 const Ranker &ranker);

/// One example per session: its golden response plus `negatives_per_example`
/// distinct golden responses of other sessions (never equal to the gold text),
/// in seeded shuffled order.
std::vector<RankingExample> build_ranking_dataset(const std::vector<DialogueSession> &sessions,
                                                  std::size_t negatives_per_example, std::uint64_t seed);

/// True when the gold candidate is within the top k (ties broken by lower index).
bool gold_in_top_k(const std::vector<double> &scores, std::size_t gold_index, std::size_t k);

/// Fraction of examples whose gold candidate ranks within the top k.
double recall_at_k(const std::vector<RankingExample> &examples, const Ranker &ranker, std::size_t k = 1);

} // namespace psychat
