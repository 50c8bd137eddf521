#pragma once

#include "svdtr/core.hpp"
#include "svdtr/io.hpp"
#include "svdtr/simulation.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace svdtr {

using json = nlohmann::json;

enum class RunMode { FitStatic, FitDynamic, Simulate, Enumerate, Validate };

inline RunMode parse_mode(const std::string& s) {
  if (s == "fit-static") return RunMode::FitStatic;
  if (s == "fit-dynamic") return RunMode::FitDynamic;
  if (s == "simulate") return RunMode::Simulate;
  if (s == "enumerate") return RunMode::Enumerate;
  if (s == "validate") return RunMode::Validate;
  throw ConfigError("unknown mode '" + s + "'");
}

/// Named model spec as written in config; resolved against a history column
/// list at load time.
struct NamedModelSpec {
  std::vector<std::string> main_cols;
  std::vector<std::string> interact_cols;
  bool intercept_main = true;
  bool intercept_interact = true;

  ModelSpec resolve(const std::vector<std::string>& history_names) const {
    auto index_of = [&](const std::string& name) {
      for (std::size_t i = 0; i < history_names.size(); ++i) {
        if (history_names[i] == name) return static_cast<int>(i);
      }
      throw ConfigError("model column '" + name + "' is not a bound history column");
    };
    ModelSpec spec;
    spec.intercept_main = intercept_main;
    spec.intercept_interact = intercept_interact;
    for (const auto& n : main_cols) spec.main_cols.push_back(index_of(n));
    for (const auto& n : interact_cols) spec.interact_cols.push_back(index_of(n));
    return spec;
  }
};

struct TreeConfig {
  int max_depth = 3;
  int min_leaf = 10;
};

/// Fully parsed run configuration. Unknown keys anywhere are errors.
struct RunConfig {
  RunMode mode = RunMode::Validate;
  std::filesystem::path input;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;
  int threads = 1;
  std::size_t labeling_cap = 1'000'000;
  std::optional<Thresholds> thresholds;

  DataBindings data;
  bool two_stage = false;

  NamedModelSpec model_y, model_z;          // fit-static
  NamedModelSpec model_1y, model_1z;        // fit-dynamic
  NamedModelSpec model_2y, model_2z;        // fit-dynamic / enumerate
  std::optional<TreeConfig> tree;
  std::vector<std::vector<double>> query_histories;
  bool dump_labelings = false;

  GenModelParams params;                    // simulate
  std::vector<PolicySpec> policies;
  std::vector<double> delta_grid;
  std::size_t n_mc = 100'000;
};

namespace detail {

inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

inline const json& require(const json& obj, const std::string& key,
                           const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError("missing key '" + key + "' in " + where);
  return *it;
}

inline std::vector<std::string> string_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string()) throw ConfigError(where + " must contain only strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

inline NamedModelSpec parse_model_spec(const json& j, const std::string& where) {
  check_keys(j, {"main_cols", "interact_cols", "intercept_main", "intercept_interact"},
             where);
  NamedModelSpec spec;
  spec.main_cols = string_list(require(j, "main_cols", where), where + ".main_cols");
  spec.interact_cols =
      string_list(require(j, "interact_cols", where), where + ".interact_cols");
  spec.intercept_main = j.value("intercept_main", true);
  spec.intercept_interact = j.value("intercept_interact", true);
  return spec;
}

inline OutcomeSource parse_outcome(const json& j, const std::string& where) {
  check_keys(j, {"col", "slope", "percentile_100_minus"}, where);
  OutcomeSource src;
  int forms = 0;
  if (j.contains("col")) {
    src.kind = OutcomeSource::Kind::Column;
    src.col = j.at("col").get<std::string>();
    ++forms;
  }
  if (j.contains("slope")) {
    const json& s = j.at("slope");
    check_keys(s, {"value_cols", "times"}, where + ".slope");
    src.kind = OutcomeSource::Kind::Slope;
    src.value_cols = string_list(require(s, "value_cols", where), where + ".value_cols");
    for (const auto& t : require(s, "times", where)) src.times.push_back(t.get<double>());
    ++forms;
  }
  if (j.contains("percentile_100_minus")) {
    const json& s = j.at("percentile_100_minus");
    check_keys(s, {"col", "reference_col"}, where + ".percentile_100_minus");
    src.kind = OutcomeSource::Kind::PercentileComplement;
    src.col = require(s, "col", where).get<std::string>();
    src.reference_col = require(s, "reference_col", where).get<std::string>();
    ++forms;
  }
  if (forms != 1) {
    throw ConfigError(where + " must specify exactly one of col/slope/percentile_100_minus");
  }
  return src;
}

inline DataBindings parse_bindings(const json& j, bool two_stage) {
  check_keys(j,
             {"history_cols", "action_col", "stage1_history_cols", "action1_col",
              "stage2_history_cols", "action2_col", "action_recode", "y", "z"},
             "data");
  DataBindings b;
  if (two_stage) {
    b.stage1_history_cols =
        string_list(require(j, "stage1_history_cols", "data"), "data.stage1_history_cols");
    b.stage2_history_cols =
        string_list(require(j, "stage2_history_cols", "data"), "data.stage2_history_cols");
    b.action1_col = require(j, "action1_col", "data").get<std::string>();
    b.action2_col = require(j, "action2_col", "data").get<std::string>();
  } else {
    b.history_cols = string_list(require(j, "history_cols", "data"), "data.history_cols");
    b.action_col = require(j, "action_col", "data").get<std::string>();
  }
  if (j.contains("action_recode")) {
    for (const auto& [key, value] : j.at("action_recode").items()) {
      b.action_recode[key] = value.get<int>();
    }
  }
  b.y = parse_outcome(require(j, "y", "data"), "data.y");
  b.z = parse_outcome(require(j, "z", "data"), "data.z");
  return b;
}

inline Thresholds parse_thresholds(const json& j) {
  check_keys(j, {"delta_y", "delta_z"}, "thresholds");
  return Thresholds(require(j, "delta_y", "thresholds").get<double>(),
                    require(j, "delta_z", "thresholds").get<double>());
}

inline Eigen::Vector4d parse_psi(const json& j, const std::string& where) {
  if (!j.is_array() || (j.size() != 3 && j.size() != 4)) {
    throw ConfigError(where + " must be an array of 3 or 4 numbers");
  }
  // 3-component vectors map to (psi_1, psi_2, psi_3) with psi_4 = 0.
  Eigen::Vector4d psi = Eigen::Vector4d::Zero();
  for (std::size_t i = 0; i < j.size(); ++i) {
    psi[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return psi;
}

inline PolicySpec parse_policy(const json& j) {
  check_keys(j, {"kind", "delta", "q"}, "policies[]");
  const std::string kind = require(j, "kind", "policies[]").get<std::string>();
  PolicySpec p;
  if (kind == "composite") {
    p = PolicySpec::composite(require(j, "delta", "composite policy").get<double>());
  } else if (kind == "opt_compatible") {
    p = PolicySpec::opt_compatible(require(j, "q", "opt_compatible policy").get<double>());
  } else if (kind == "opt_unrestricted") {
    p = PolicySpec::opt_unrestricted(
        require(j, "q", "opt_unrestricted policy").get<double>());
  } else {
    throw ConfigError("unknown policy kind '" + kind + "'");
  }
  p.check();
  return p;
}

}  // namespace detail

inline RunConfig parse_config(const json& root) {
  using detail::check_keys;
  using detail::require;
  RunConfig cfg;
  cfg.mode = parse_mode(require(root, "mode", "config").get<std::string>());

  std::set<std::string> allowed = {"mode", "seed", "threads", "output_dir"};
  switch (cfg.mode) {
    case RunMode::FitStatic:
      allowed.insert({"input", "thresholds", "data", "model_y", "model_z", "tree"});
      break;
    case RunMode::FitDynamic:
      allowed.insert({"input", "thresholds", "data", "model_1y", "model_1z", "model_2y",
                      "model_2z", "labeling_cap", "query_histories", "dump_labelings"});
      break;
    case RunMode::Enumerate:
      allowed.insert({"input", "thresholds", "data", "model_2y", "model_2z",
                      "labeling_cap"});
      break;
    case RunMode::Simulate:
      allowed.insert({"params", "policies", "delta_grid", "n_mc"});
      break;
    case RunMode::Validate:
      allowed.insert({"input", "data", "stage_count"});
      break;
  }
  check_keys(root, allowed, "config");

  cfg.seed = root.value("seed", std::uint64_t{1});
  cfg.threads = root.value("threads", 1);
  cfg.output_dir = root.value("output_dir", std::string("out"));
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");

  switch (cfg.mode) {
    case RunMode::FitStatic: {
      cfg.input = require(root, "input", "config").get<std::string>();
      cfg.thresholds = detail::parse_thresholds(require(root, "thresholds", "config"));
      cfg.two_stage = false;
      cfg.data = detail::parse_bindings(require(root, "data", "config"), false);
      cfg.model_y = detail::parse_model_spec(require(root, "model_y", "config"), "model_y");
      cfg.model_z = detail::parse_model_spec(require(root, "model_z", "config"), "model_z");
      if (root.contains("tree")) {
        check_keys(root.at("tree"), {"max_depth", "min_leaf"}, "tree");
        TreeConfig tc;
        tc.max_depth = root.at("tree").value("max_depth", 3);
        tc.min_leaf = root.at("tree").value("min_leaf", 10);
        cfg.tree = tc;
      }
      break;
    }
    case RunMode::FitDynamic: {
      cfg.input = require(root, "input", "config").get<std::string>();
      cfg.thresholds = detail::parse_thresholds(require(root, "thresholds", "config"));
      cfg.two_stage = true;
      cfg.data = detail::parse_bindings(require(root, "data", "config"), true);
      cfg.model_1y =
          detail::parse_model_spec(require(root, "model_1y", "config"), "model_1y");
      cfg.model_1z =
          detail::parse_model_spec(require(root, "model_1z", "config"), "model_1z");
      cfg.model_2y =
          detail::parse_model_spec(require(root, "model_2y", "config"), "model_2y");
      cfg.model_2z =
          detail::parse_model_spec(require(root, "model_2z", "config"), "model_2z");
      cfg.labeling_cap = root.value("labeling_cap", std::size_t{1'000'000});
      cfg.dump_labelings = root.value("dump_labelings", false);
      if (root.contains("query_histories")) {
        for (const auto& row : root.at("query_histories")) {
          std::vector<double> h;
          for (const auto& v : row) h.push_back(v.get<double>());
          cfg.query_histories.push_back(std::move(h));
        }
      }
      break;
    }
    case RunMode::Enumerate: {
      cfg.input = require(root, "input", "config").get<std::string>();
      cfg.thresholds = detail::parse_thresholds(require(root, "thresholds", "config"));
      cfg.two_stage = true;
      cfg.data = detail::parse_bindings(require(root, "data", "config"), true);
      cfg.model_2y =
          detail::parse_model_spec(require(root, "model_2y", "config"), "model_2y");
      cfg.model_2z =
          detail::parse_model_spec(require(root, "model_2z", "config"), "model_2z");
      cfg.labeling_cap = root.value("labeling_cap", std::size_t{1'000'000});
      break;
    }
    case RunMode::Simulate: {
      const json& pj = require(root, "params", "config");
      check_keys(pj, {"psi_y", "psi_z", "rho", "delta_y", "delta_z"}, "params");
      cfg.params.psi_y = detail::parse_psi(require(pj, "psi_y", "params"), "params.psi_y");
      cfg.params.psi_z = detail::parse_psi(require(pj, "psi_z", "params"), "params.psi_z");
      cfg.params.rho = require(pj, "rho", "params").get<double>();
      cfg.params.thresholds = Thresholds(require(pj, "delta_y", "params").get<double>(),
                                         require(pj, "delta_z", "params").get<double>());
      cfg.params.check();
      for (const auto& pol : require(root, "policies", "config")) {
        cfg.policies.push_back(detail::parse_policy(pol));
      }
      for (const auto& d : require(root, "delta_grid", "config")) {
        cfg.delta_grid.push_back(d.get<double>());
      }
      cfg.n_mc = root.value("n_mc", std::size_t{100'000});
      if (cfg.n_mc < 1) throw ConfigError("n_mc must be >= 1");
      break;
    }
    case RunMode::Validate: {
      cfg.input = require(root, "input", "config").get<std::string>();
      cfg.two_stage = root.value("stage_count", 1) == 2;
      cfg.data = detail::parse_bindings(require(root, "data", "config"), cfg.two_stage);
      break;
    }
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  return parse_config(root);
}

}  // namespace svdtr
