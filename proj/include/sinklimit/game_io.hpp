#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "game.hpp"

namespace sinklimit {

inline constexpr int kSchemaVersion = 1;

// {"players": p, "strategies": [s_1, ...], "utilities": [[player 0 tensor], ...]}
// with tensors in ProfileId order. "schema_version" is optional on input.
inline Game game_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("game: top-level value must be an object");
  if (j.contains("schema_version") && j["schema_version"] != kSchemaVersion)
    throw InputError("field 'schema_version': unsupported version " + j["schema_version"].dump());
  if (!j.contains("players") || !j["players"].is_number_unsigned())
    throw InputError("field 'players': missing or not a non-negative integer");
  if (!j.contains("strategies") || !j["strategies"].is_array())
    throw InputError("field 'strategies': missing or not an array");
  if (!j.contains("utilities") || !j["utilities"].is_array())
    throw InputError("field 'utilities': missing or not an array");
  const auto players = j["players"].get<std::size_t>();
  const auto& js = j["strategies"];
  if (js.size() != players)
    throw InputError("field 'strategies': expected " + std::to_string(players) + " entries, got " +
                     std::to_string(js.size()));
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < js.size(); ++i) {
    if (!js[i].is_number_unsigned())
      throw InputError("field 'strategies[" + std::to_string(i) + "]': not a non-negative integer");
    counts.push_back(js[i].get<std::size_t>());
  }
  std::vector<std::vector<double>> utils;
  const auto& ju = j["utilities"];
  for (std::size_t i = 0; i < ju.size(); ++i) {
    if (!ju[i].is_array()) throw InputError("field 'utilities[" + std::to_string(i) + "]': not an array");
    std::vector<double> tensor;
    tensor.reserve(ju[i].size());
    for (std::size_t v = 0; v < ju[i].size(); ++v) {
      if (!ju[i][v].is_number())
        throw InputError("field 'utilities[" + std::to_string(i) + "][" + std::to_string(v) + "]': not a number");
      tensor.push_back(ju[i][v].get<double>());
    }
    utils.push_back(std::move(tensor));
  }
  return Game(std::move(counts), std::move(utils));
}

inline nlohmann::ordered_json game_to_json(const Game& game) {
  nlohmann::ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["players"] = game.num_players();
  j["strategies"] = game.strategy_counts();
  auto& ju = j["utilities"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < game.num_players(); ++i) {
    auto u = game.utilities(i);
    ju.push_back(std::vector<double>(u.begin(), u.end()));
  }
  return j;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline Game load_game(const std::string& path) { return game_from_json(read_json_file(path)); }

inline void save_game(const Game& game, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << game_to_json(game).dump(2) << '\n';
}

}  // namespace sinklimit
