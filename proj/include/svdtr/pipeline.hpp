#pragma once

#include "svdtr/config.hpp"
#include "svdtr/dynamic_rule.hpp"
#include "svdtr/io.hpp"
#include "svdtr/tree.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace svdtr {

struct RunArtifacts {
  json summary;
  std::vector<std::filesystem::path> files;
};

namespace detail {

inline VectorXd outcome_vector(const Dataset& ds, Outcome which) {
  const auto n = static_cast<Eigen::Index>(ds.n());
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    if (ds.stage_count == 1) {
      v[i] = which == Outcome::Y ? ds.rows1[idx].y : ds.rows1[idx].z;
    } else {
      v[i] = which == Outcome::Y ? ds.rows2[idx].y : ds.rows2[idx].z;
    }
  }
  return v;
}

inline std::filesystem::path emit(RunArtifacts& art, const std::filesystem::path& dir,
                                  const std::string& name) {
  auto path = dir / name;
  art.files.push_back(path);
  return path;
}

inline void write_summary(RunArtifacts& art, const std::filesystem::path& dir) {
  auto path = emit(art, dir, "run_summary.json");
  std::ofstream out(path);
  out << art.summary.dump(2) << "\n";
}

inline void emit_coefficient_table(RunArtifacts& art, const std::filesystem::path& dir,
                                   const std::string& name, const Dataset& ds,
                                   const ModelSpec& spec, const VectorXd& outcome,
                                   int stage, const std::vector<std::string>& hist_names,
                                   const std::string& action_name) {
  FilteredDesign fd = build_filtered_design(ds, spec, outcome, stage);
  CoefficientTable table =
      coefficient_table(fd.design, fd.response, term_names(spec, hist_names, action_name));
  table.n_dropped = fd.n_dropped;
  write_coefficient_table(table, emit(art, dir, name));
}

}  // namespace detail

inline RunArtifacts run_validate(const RunConfig& cfg, std::ostream& log = std::cout) {
  RunArtifacts art;
  LoadResult loaded = load_csv(cfg.input, cfg.data, cfg.two_stage ? 2 : 1);
  auto violations = validate(loaded.dataset);
  art.summary["mode"] = "validate";
  art.summary["n_rows"] = loaded.dataset.n();
  art.summary["n_dropped"] = loaded.n_dropped;
  art.summary["violations"] = violations;
  for (const auto& v : violations) log << "violation: " << v << "\n";
  log << "rows: " << loaded.dataset.n() << ", dropped: " << loaded.n_dropped
      << ", violations: " << violations.size() << "\n";
  return art;
}

inline RunArtifacts run_fit_static(const RunConfig& cfg, std::ostream& log = std::cout) {
  RunArtifacts art;
  std::filesystem::create_directories(cfg.output_dir);
  LoadResult loaded = load_csv(cfg.input, cfg.data, 1);
  const Dataset& ds = loaded.dataset;
  if (auto violations = validate(ds); !violations.empty()) {
    throw ParseError("dataset failed validation: " + violations.front());
  }
  const ModelSpec spec_y = cfg.model_y.resolve(ds.h1_names);
  const ModelSpec spec_z = cfg.model_z.resolve(ds.h1_names);
  const SetValuedRule rule = estimate_static_rule(ds, spec_y, spec_z, *cfg.thresholds);

  detail::emit_coefficient_table(art, cfg.output_dir, "model_y_coefficients.txt", ds,
                                 spec_y, detail::outcome_vector(ds, Outcome::Y), 1,
                                 ds.h1_names, cfg.data.action_col);
  detail::emit_coefficient_table(art, cfg.output_dir, "model_z_coefficients.txt", ds,
                                 spec_z, detail::outcome_vector(ds, Outcome::Z), 1,
                                 ds.h1_names, cfg.data.action_col);

  std::vector<std::pair<double, double>> points;
  points.reserve(ds.rows1.size());
  for (const auto& r : ds.rows1) {
    points.push_back(rule.contrasts(r.h));
  }
  auto counts = write_region_diagram(points, *cfg.thresholds,
                                     detail::emit(art, cfg.output_dir, "region_points.txt"));

  art.summary["mode"] = "fit-static";
  art.summary["n_rows"] = ds.n();
  art.summary["n_dropped"] = loaded.n_dropped;
  art.summary["delta_y"] = cfg.thresholds->delta_y;
  art.summary["delta_z"] = cfg.thresholds->delta_z;
  art.summary["region_counts"] = counts;

  if (cfg.tree) {
    std::vector<VectorXd> sample;
    sample.reserve(ds.rows1.size());
    for (const auto& r : ds.rows1) sample.push_back(r.h);
    TreeOptions topts;
    topts.max_depth = cfg.tree->max_depth;
    topts.min_leaf = cfg.tree->min_leaf;
    TreeApproxResult tree = tree_approx(rule, sample, topts);
    std::ofstream tout(detail::emit(art, cfg.output_dir, "tree.txt"));
    tout << "decision tree approximation (training agreement "
         << format_sig(tree.agreement, 6) << ")\n";
    render_tree(*tree.root, ds.h1_names, "", tout);
    art.summary["tree_agreement"] = tree.agreement;
  }
  detail::write_summary(art, cfg.output_dir);
  log << "fit-static: n=" << ds.n() << " dropped=" << loaded.n_dropped << "\n";
  return art;
}

inline RunArtifacts run_enumerate(const RunConfig& cfg, std::ostream& log = std::cout) {
  RunArtifacts art;
  std::filesystem::create_directories(cfg.output_dir);
  LoadResult loaded = load_csv(cfg.input, cfg.data, 2);
  const Dataset& ds = loaded.dataset;
  const ModelSpec spec_2y = cfg.model_2y.resolve(ds.h2_names);
  const ModelSpec spec_2z = cfg.model_2z.resolve(ds.h2_names);
  SetValuedRule rule{fit_q_model(ds, spec_2y, Outcome::Y, 2),
                     fit_q_model(ds, spec_2z, Outcome::Z, 2), *cfg.thresholds};
  std::vector<VectorXd> h2s;
  h2s.reserve(ds.rows2.size());
  for (const auto& r : ds.rows2) h2s.push_back(r.h2);
  EnumerationOptions opts;
  opts.labeling_cap = cfg.labeling_cap;
  auto labelings = enumerate_feasible(rule, h2s, opts);
  write_labeling_dump(labelings, detail::emit(art, cfg.output_dir, "labelings.txt"));

  const VectorXd canon =
      canonical_feasible_rule(rule.model_y, rule.model_z, *cfg.thresholds);
  MatrixXd pts(static_cast<Eigen::Index>(h2s.size()), rule.model_y.spec.interact_dim());
  for (std::size_t i = 0; i < h2s.size(); ++i) {
    pts.row(static_cast<Eigen::Index>(i)) = rule.model_y.interact_vector(h2s[i]).transpose();
  }
  const InducedLabels canon_labels = induce_labels(canon, pts);

  art.summary["mode"] = "enumerate";
  art.summary["n_rows"] = ds.n();
  art.summary["n_dropped"] = loaded.n_dropped;
  art.summary["feasible_labelings"] = labelings.size();
  art.summary["canonical_zero_score_points"] = canon_labels.zero_score_points;
  detail::write_summary(art, cfg.output_dir);
  log << "enumerate: " << labelings.size() << " feasible labelings\n";
  return art;
}

inline RunArtifacts run_fit_dynamic(const RunConfig& cfg, std::ostream& log = std::cout) {
  RunArtifacts art;
  std::filesystem::create_directories(cfg.output_dir);
  LoadResult loaded = load_csv(cfg.input, cfg.data, 2);
  const Dataset& ds = loaded.dataset;
  if (auto violations = validate(ds); !violations.empty()) {
    throw ParseError("dataset failed validation: " + violations.front());
  }
  const ModelSpec spec_1y = cfg.model_1y.resolve(ds.h1_names);
  const ModelSpec spec_1z = cfg.model_1z.resolve(ds.h1_names);
  const ModelSpec spec_2y = cfg.model_2y.resolve(ds.h2_names);
  const ModelSpec spec_2z = cfg.model_2z.resolve(ds.h2_names);

  DynamicEstimateOptions opts;
  opts.enumeration.labeling_cap = cfg.labeling_cap;
  opts.threads = cfg.threads;
  const TwoStageRule rule =
      estimate_dynamic_rule(ds, spec_1y, spec_1z, spec_2y, spec_2z, *cfg.thresholds, opts);

  detail::emit_coefficient_table(art, cfg.output_dir, "stage2_model_y_coefficients.txt",
                                 ds, spec_2y, detail::outcome_vector(ds, Outcome::Y), 2,
                                 ds.h2_names, cfg.data.action2_col);
  detail::emit_coefficient_table(art, cfg.output_dir, "stage2_model_z_coefficients.txt",
                                 ds, spec_2z, detail::outcome_vector(ds, Outcome::Z), 2,
                                 ds.h2_names, cfg.data.action2_col);

  std::vector<std::pair<double, double>> points;
  points.reserve(ds.rows2.size());
  for (const auto& r : ds.rows2) points.push_back(rule.stage2.contrasts(r.h2));
  auto counts = write_region_diagram(
      points, *cfg.thresholds,
      detail::emit(art, cfg.output_dir, "stage2_region_points.txt"));

  // Example stage-1 tables for the first feasible labeling, mirroring the
  // single-rule printouts: coefficients depend on which labeling is chosen.
  if (!rule.bundles.empty()) {
    std::vector<VectorXd> h2s;
    h2s.reserve(ds.rows2.size());
    for (const auto& r : ds.rows2) h2s.push_back(r.h2);
    auto [ytilde, ztilde] = pseudo_outcomes(rule.stage2.model_y, rule.stage2.model_z,
                                            rule.bundles.front().labeling.labels, h2s);
    detail::emit_coefficient_table(art, cfg.output_dir, "stage1_model_y_coefficients.txt",
                                   ds, spec_1y, ytilde, 1, ds.h1_names,
                                   cfg.data.action1_col);
    detail::emit_coefficient_table(art, cfg.output_dir, "stage1_model_z_coefficients.txt",
                                   ds, spec_1z, ztilde, 1, ds.h1_names,
                                   cfg.data.action1_col);
  }

  if (cfg.dump_labelings) {
    std::vector<Labeling> labelings;
    labelings.reserve(rule.bundles.size());
    for (const auto& b : rule.bundles) labelings.push_back(b.labeling);
    write_labeling_dump(labelings, detail::emit(art, cfg.output_dir, "labelings.txt"));
  }

  art.summary["mode"] = "fit-dynamic";
  art.summary["n_rows"] = ds.n();
  art.summary["n_dropped"] = loaded.n_dropped;
  art.summary["feasible_labelings"] = rule.bundles.size();
  art.summary["stage2_region_counts"] = counts;

  json queries = json::array();
  for (std::size_t qi = 0; qi < cfg.query_histories.size(); ++qi) {
    const auto& raw = cfg.query_histories[qi];
    VectorXd h1 = Eigen::Map<const VectorXd>(raw.data(), static_cast<Eigen::Index>(raw.size()));
    UnionResult u = union_rule(rule, h1);
    write_trace(u.trace, detail::emit(art, cfg.output_dir,
                                      "stage1_trace_q" + std::to_string(qi) + ".txt"));
    json q;
    q["h1"] = raw;
    q["set"] = u.set.to_string();
    q["region"] = region_name(u.region);
    queries.push_back(std::move(q));
  }
  art.summary["query_histories"] = queries;
  detail::write_summary(art, cfg.output_dir);
  log << "fit-dynamic: n=" << ds.n() << " labelings=" << rule.bundles.size() << "\n";
  return art;
}

inline RunArtifacts run_simulate(const RunConfig& cfg, std::ostream& log = std::cout) {
  RunArtifacts art;
  std::filesystem::create_directories(cfg.output_dir);
  CounterRng rng(cfg.seed);
  auto rows =
      preference_sweep(cfg.params, cfg.policies, cfg.delta_grid, cfg.n_mc, rng, cfg.threads);
  write_sweep(rows, detail::emit(art, cfg.output_dir, "sweep.csv"));

  ClassProbs probs = class_probs(cfg.params, cfg.n_mc, rng.substream(0x636c617373ULL),
                                 cfg.threads);
  art.summary["mode"] = "simulate";
  art.summary["n_mc"] = cfg.n_mc;
  art.summary["seed"] = cfg.seed;
  art.summary["class_probs"] = {{"uniq", probs.uniq}, {"null", probs.null_},
                                {"opst", probs.opst}};
  art.summary["rows"] = rows.size();
  detail::write_summary(art, cfg.output_dir);
  log << "simulate: " << rows.size() << " sweep rows\n";
  return art;
}

inline RunArtifacts run(const RunConfig& cfg, std::ostream& log = std::cout) {
  switch (cfg.mode) {
    case RunMode::FitStatic: return run_fit_static(cfg, log);
    case RunMode::FitDynamic: return run_fit_dynamic(cfg, log);
    case RunMode::Simulate: return run_simulate(cfg, log);
    case RunMode::Enumerate: return run_enumerate(cfg, log);
    case RunMode::Validate: return run_validate(cfg, log);
  }
  throw ConfigError("unknown mode");
}

}  // namespace svdtr
