#include "svdtr/svdtr.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitBudget = 5;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<std::size_t> labeling_cap;
};

void add_common_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--config", ov.config_path, "path to the run configuration (JSON)")
      ->required();
  cmd->add_option("--seed", ov.seed, "override the config seed");
  cmd->add_option("--out", ov.out, "override the output directory");
  cmd->add_option("--threads", ov.threads, "override the worker count");
  cmd->add_option("--labeling-cap", ov.labeling_cap,
                  "override the feasible-labeling budget");
}

int run_mode(svdtr::RunMode mode, const Overrides& ov) {
  try {
    svdtr::RunConfig cfg = svdtr::load_config(ov.config_path);
    if (cfg.mode != mode) {
      std::cerr << "error: config mode does not match the requested subcommand\n";
      return kExitConfig;
    }
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.out) cfg.output_dir = *ov.out;
    if (ov.threads) cfg.threads = *ov.threads;
    if (ov.labeling_cap) cfg.labeling_cap = *ov.labeling_cap;

    svdtr::RunArtifacts art = svdtr::run(cfg);
    if (mode == svdtr::RunMode::Validate) {
      const auto& v = art.summary["violations"];
      return v.empty() ? kExitOk : kExitData;
    }
    return kExitOk;
  } catch (const svdtr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const svdtr::BudgetExceeded& e) {
    std::cerr << "budget exceeded: " << e.what() << "\n";
    return kExitBudget;
  } catch (const svdtr::RankDeficient& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const svdtr::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const svdtr::ParseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const svdtr::BindingError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const svdtr::DimensionMismatch& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const svdtr::InsufficientData& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const svdtr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"set-valued dynamic treatment regimes for competing outcomes"};
  app.require_subcommand(1);

  Overrides ov;
  auto* fit_static = app.add_subcommand(
      "fit-static", "fit a single-stage set-valued rule and export diagrams");
  auto* fit_dynamic = app.add_subcommand(
      "fit-dynamic", "fit a two-stage rule with feasible-labeling enumeration");
  auto* simulate =
      app.add_subcommand("simulate", "regret-versus-preference simulation sweep");
  auto* enumerate_cmd =
      app.add_subcommand("enumerate", "enumerate feasible stage-2 labelings");
  auto* validate_cmd =
      app.add_subcommand("validate", "check dataset invariants and report violations");
  for (auto* cmd : {fit_static, fit_dynamic, simulate, enumerate_cmd, validate_cmd}) {
    add_common_flags(cmd, ov);
  }

  CLI11_PARSE(app, argc, argv);

  if (fit_static->parsed()) return run_mode(svdtr::RunMode::FitStatic, ov);
  if (fit_dynamic->parsed()) return run_mode(svdtr::RunMode::FitDynamic, ov);
  if (simulate->parsed()) return run_mode(svdtr::RunMode::Simulate, ov);
  if (enumerate_cmd->parsed()) return run_mode(svdtr::RunMode::Enumerate, ov);
  if (validate_cmd->parsed()) return run_mode(svdtr::RunMode::Validate, ov);
  return kExitConfig;
}
