#pragma once

// JSON emitters and parsers behind the sinklimit command-line tool. Kept in
// the library so the commands can be exercised without spawning a process.

#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynamics.hpp"
#include "errors.hpp"
#include "game.hpp"
#include "game_io.hpp"
#include "limit.hpp"
#include "response_graph.hpp"

namespace sinklimit::cli {

using ojson = nlohmann::ordered_json;

inline std::string sink_label(const Game& game, const SinkList& sinks, std::size_t k) {
  std::string s = "sink_" + std::to_string(k) + " {";
  for (std::size_t m = 0; m < sinks[k].size(); ++m) {
    if (m) s += ',';
    s += game.profile_label(sinks[k][m]);
  }
  return s + "}";
}

inline ojson sinks_json(const Game& game, const SinkList& sinks) {
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["sinks"] = ojson::array();
  j["sink_profiles"] = ojson::array();
  for (const auto& sink : sinks) {
    j["sinks"].push_back(sink);
    auto labels = ojson::array();
    for (auto v : sink) labels.push_back(game.profile_label(v));
    j["sink_profiles"].push_back(labels);
  }
  return j;
}

inline ojson hitting_json(const Game& game, const HittingMatrix& hm, std::string_view method = "limit") {
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["method"] = method;
  j["sinks"] = ojson::array();
  for (std::size_t k = 0; k < hm.num_sinks(); ++k)
    j["sinks"].push_back({{"label", sink_label(game, hm.sinks, k)}, {"profiles", hm.sinks[k]}});
  auto& rows = j["rows"] = ojson::object();
  for (ProfileId v = 0; v < hm.num_profiles; ++v) {
    ojson row = ojson::object();
    for (std::size_t k = 0; k < hm.num_sinks(); ++k) row[sink_label(game, hm.sinks, k)] = hm.at(v, k);
    rows[game.profile_label(v)] = std::move(row);
  }
  j["collapse_rounds"] = hm.trace.rounds();
  j["initial_max_order"] = hm.trace.initial_max_order;
  j["max_order_trace"] = hm.trace.max_order_after_round;
  return j;
}

// Inverse of hitting_json for the fields the DOT exporter needs. The sinks
// must be the game's own.
inline HittingMatrix hitting_from_json(const Game& game, const nlohmann::json& j, double tie_tolerance = 0.0) {
  if (!j.is_object() || !j.contains("sinks") || !j["sinks"].is_array() || !j.contains("rows") ||
      !j["rows"].is_object())
    throw InputError("hitting matrix: expected fields 'sinks' and 'rows'");
  HittingMatrix hm;
  hm.num_profiles = game.num_profiles();
  for (const auto& s : j["sinks"]) {
    if (!s.contains("profiles") || !s["profiles"].is_array())
      throw InputError("hitting matrix: field 'sinks[].profiles' missing");
    hm.sinks.push_back(s["profiles"].get<std::vector<ProfileId>>());
  }
  if (hm.sinks != sink_equilibria(game, tie_tolerance))
    throw InputError("hitting matrix: sinks do not match the game's sink equilibria");
  const auto& rows = j["rows"];
  if (rows.size() != game.num_profiles())
    throw InputError("hitting matrix has " + std::to_string(rows.size()) + " rows, game has " +
                     std::to_string(game.num_profiles()) + " profiles");
  hm.probs.assign(hm.num_profiles * hm.sinks.size(), 0.0);
  for (ProfileId v = 0; v < game.num_profiles(); ++v) {
    const auto label = game.profile_label(v);
    if (!rows.contains(label)) throw InputError("hitting matrix: missing row '" + label + "'");
    const auto& row = rows[label];
    if (!row.is_object() || row.size() != hm.sinks.size())
      throw InputError("hitting matrix: row '" + label + "' has the wrong number of sinks");
    for (std::size_t k = 0; k < hm.sinks.size(); ++k) {
      const auto key = sink_label(game, hm.sinks, k);
      if (!row.contains(key) || !row[key].is_number())
        throw InputError("hitting matrix: row '" + label + "' lacks '" + key + "'");
      hm.probs[v * hm.sinks.size() + k] = row[key].get<double>();
    }
  }
  return hm;
}

inline ojson limit_json(const Game& game, const LimitDistribution& d, std::string_view method) {
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["method"] = method;
  auto& dist = j["distribution"] = ojson::object();
  for (std::size_t k = 0; k < d.sinks.size(); ++k) dist[sink_label(game, d.sinks, k)] = d.probs[k];
  j["non_converged_fraction"] = d.nonconverged;
  j["samples"] = d.samples;
  j["runs"] = d.runs;
  j["non_converged_runs"] = d.nonconverged_runs;
  j["converged"] = d.converged;
  j["tv_trace"] = d.tv_trace;
  j["ex_post_tv_trace"] = d.ex_post_tv_trace;
  return j;
}

// Weights over ProfileIds: a bare array, or {"weights": [...]}.
inline std::vector<double> pure_weights_from_json(const Game& game, const nlohmann::json& j) {
  const auto& arr = j.is_object() && j.contains("weights") ? j["weights"] : j;
  if (!arr.is_array()) throw InputError("pure prior: expected an array of weights");
  if (arr.size() != game.num_profiles())
    throw InputError("pure prior: expected " + std::to_string(game.num_profiles()) + " weights, got " +
                     std::to_string(arr.size()));
  std::vector<double> w;
  for (const auto& x : arr) {
    if (!x.is_number()) throw InputError("pure prior: non-numeric weight");
    w.push_back(x.get<double>());
  }
  double sum = 0.0;
  for (double x : w) sum += x;
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("pure prior: weights sum to " + std::to_string(sum) + ", not 1");
  return w;
}

struct ParsedPrior {
  enum class Kind { kPure, kSimulated };
  Kind kind = Kind::kSimulated;
  std::string weights_path;
  PriorSpec spec;
};

// "pure:<weights file>", "uniform" or "dirichlet:<alpha>".
inline ParsedPrior parse_prior(std::string_view text) {
  ParsedPrior p;
  if (text.starts_with("pure:")) {
    p.kind = ParsedPrior::Kind::kPure;
    p.weights_path = std::string(text.substr(5));
    if (p.weights_path.empty()) throw InputError("prior 'pure:' needs a weights file");
    return p;
  }
  if (text == "uniform") {
    p.spec = PriorSpec::uniform();
    return p;
  }
  if (text.starts_with("dirichlet:")) {
    const std::string num(text.substr(10));
    char* end = nullptr;
    const double alpha = std::strtod(num.c_str(), &end);
    if (num.empty() || *end != '\0' || !(alpha > 0.0)) throw InputError("prior: bad dirichlet alpha '" + num + "'");
    p.spec = PriorSpec::dirichlet(alpha);
    return p;
  }
  throw InputError("unknown prior spec '" + std::string(text) + "'");
}

}  // namespace sinklimit::cli
