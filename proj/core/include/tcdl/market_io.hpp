#pragma once

#include <filesystem>
#include <string>

#include "tcdl/market.hpp"
#include "tcdl/primal.hpp"

namespace tcdl {

/// Parses a market file: {"nodes": [{"id", "parent", "time"}], "prices": {id: S}, "lambda": l,
/// "endowment": {leaf: e}, "probabilities": {leaf: p}}. "conditional_probabilities" may replace
/// "probabilities"; missing endowment entries default to 0. Throws InputError.
MarketModel market_from_json(const std::string& text);
MarketModel load_market(const std::filesystem::path& path);

/// Canonical serialization (leaf-probability form, sorted keys, 17 significant digits).
std::string market_to_json(const MarketModel& model);

/// Payoff file: {leaf id: value}; every leaf must be present.
PayoffVector payoff_from_json(const std::string& text, const ScenarioTree& tree);
PayoffVector load_payoff(const std::filesystem::path& path, const ScenarioTree& tree);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace tcdl
