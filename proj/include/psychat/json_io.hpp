#pragma once

#include <json.hpp>

#include "psychat/core.hpp"

namespace psychat {

nlohmann::json utterance_to_json(const Utterance &u);
/// Throws CorpusError (tagged with `line`) on schema violations.
Utterance utterance_from_json(const nlohmann::json &j, std::size_t line = 0);

nlohmann::json utterances_to_json(const std::vector<Utterance> &us);
std::vector<Utterance> utterances_from_json(const nlohmann::json &j, std::size_t line = 0);

} // namespace psychat
