// Regenerates the bundled synthetic datasets under data/. The files are
// committed; this tool exists so they can be rebuilt deterministically.

#include "svdtr/io.hpp"
#include "svdtr/simulation.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>

namespace {

using svdtr::CounterRng;
using svdtr::format_sig;

double clamp50(double x) { return std::clamp(x, -50.0, 50.0); }

// Two-stage data shaped like a sequential antipsychotic trial: binary
// baseline flags, two percentile-scale covariates re-measured at stage 2,
// both interacting with the stage-2 treatment.
void write_catie_like(const std::filesystem::path& path, int n, std::uint64_t seed,
                      const std::set<int>& missing_y_rows,
                      const std::set<int>& missing_cov_rows) {
  std::ofstream out(path);
  out << "td,exacer,panss1,bmi1,a1,panss2,bmi2,a2,y,z\n";
  CounterRng base(seed);
  for (int i = 0; i < n; ++i) {
    CounterRng rng = base.substream(static_cast<std::uint64_t>(i));
    const int td = rng.next_uniform() < 0.20 ? 1 : 0;
    const int exacer = rng.next_uniform() < 0.35 ? 1 : 0;
    const double panss1 = -50.0 + 100.0 * rng.next_uniform();
    const double bmi1 = -50.0 + 100.0 * rng.next_uniform();
    const int a1 = rng.next_sign();
    auto [e1, e2] = rng.next_normal_pair();
    const double panss2 = clamp50(0.55 * panss1 - 3.0 * a1 + 12.0 * e1);
    const double bmi2 = clamp50(0.80 * bmi1 - 2.5 * a1 + 8.0 * e2);
    const int a2 = rng.next_sign();
    auto [e3, e4] = rng.next_normal_pair();
    const double y = 55.0 + 0.45 * panss2 - 3.0 * td + 1.2 * exacer + 1.5 * a1 +
                     a2 * (7.5 + 0.10 * panss2 + 0.02 * bmi2) + 6.0 * e3;
    const double z = 50.0 + 0.85 * bmi2 + 0.8 * td - 2.0 * exacer - 1.0 * a1 +
                     a2 * (-0.5 + 0.01 * panss2 + 0.035 * bmi2) + 4.0 * e4;

    out << td << "," << exacer << ","
        << (missing_cov_rows.count(i) ? std::string() : format_sig(panss1)) << ","
        << format_sig(bmi1) << "," << a1 << "," << format_sig(panss2) << ","
        << format_sig(bmi2) << "," << a2 << ","
        << (missing_y_rows.count(i) ? std::string() : format_sig(y)) << ","
        << format_sig(z) << "\n";
  }
}

// One-stage data shaped like a depression trial: repeated symptom scores
// whose least-squares slope is the first outcome, a functioning score the
// second, and a string-coded treatment column.
void write_depression_like(const std::filesystem::path& path, int n, std::uint64_t seed) {
  std::ofstream out(path);
  out << "hamd,rolfun,gender,slpsc,trt";
  for (int w = 0; w <= 8; ++w) out << ",y" << w;
  out << ",pf12\n";
  CounterRng base(seed);
  for (int i = 0; i < n; ++i) {
    CounterRng rng = base.substream(static_cast<std::uint64_t>(i));
    const double hamd = 8.0 + 22.0 * rng.next_uniform();
    const double rolfun = 100.0 * rng.next_uniform();
    const int gender = rng.next_uniform() < 0.5 ? 1 : 0;
    const double slpsc = 10.0 * rng.next_uniform();
    const int trt = rng.next_sign();
    const double slope_true =
        -0.8 - 0.02 * hamd + trt * (-0.2 + 0.005 * rolfun + 0.002 * hamd);
    out << format_sig(hamd) << "," << format_sig(rolfun) << "," << gender << ","
        << format_sig(slpsc) << "," << (trt > 0 ? "DrugCBT" : "Drug");
    int missing_budget = (rng.next_uniform() < 0.25) ? 2 : 0;
    for (int w = 0; w <= 8; ++w) {
      const double e = rng.next_normal_pair().first;
      const bool drop = w >= 2 && missing_budget > 0 && rng.next_uniform() < 0.2;
      if (drop) {
        --missing_budget;
        out << ",";
      } else {
        out << "," << format_sig(hamd + slope_true * w + 1.2 * e);
      }
    }
    const double e5 = rng.next_normal_pair().first;
    const double pf12 =
        45.0 - 3.0 * gender + 1.5 * slpsc + trt * (4.0 - 0.9 * slpsc) + 8.0 * e5;
    out << "," << format_sig(pf12) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "data";
  std::filesystem::create_directories(dir);
  write_catie_like(dir / "catie_like_two_stage.csv", 1000, 0x5eed01,
                   {37, 203, 664}, {512, 777});
  write_catie_like(dir / "catie_like_small.csv", 220, 0x5eed02, {}, {});
  write_depression_like(dir / "depression_like_one_stage.csv", 350, 0x5eed03);
  std::cout << "wrote synthetic datasets to " << dir << "\n";
  return 0;
}
