#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace svdtr {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

class Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
  using Error::Error;
};
class RankDeficient : public Error {
  using Error::Error;
};
class InsufficientData : public Error {
  using Error::Error;
};
class NumericalFailure : public Error {
  using Error::Error;
};
class BudgetExceeded : public Error {
  using Error::Error;
};
class ParseError : public Error {
  using Error::Error;
};
class BindingError : public Error {
  using Error::Error;
};
class ConfigError : public Error {
  using Error::Error;
};

/// Elicited clinically meaningful differences for the two outcomes.
struct Thresholds {
  double delta_y = 0.0;
  double delta_z = 0.0;

  Thresholds() = default;
  Thresholds(double dy, double dz) : delta_y(dy), delta_z(dz) {
    if (!(delta_y > 0.0) || !(delta_z > 0.0)) {
      throw ConfigError("thresholds must be strictly positive");
    }
  }
};

/// Nonempty set of recommended action codes, kept sorted ascending.
class TreatmentSet {
 public:
  explicit TreatmentSet(std::vector<int> members) : members_(std::move(members)) {
    canonicalize();
  }
  TreatmentSet(std::initializer_list<int> members)
      : TreatmentSet(std::vector<int>(members)) {}

  static TreatmentSet both_binary() { return TreatmentSet{-1, 1}; }

  const std::vector<int>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool singleton() const { return members_.size() == 1; }
  int only() const {
    if (!singleton()) throw Error("treatment set is not a singleton");
    return members_.front();
  }
  bool contains(int a) const {
    return std::binary_search(members_.begin(), members_.end(), a);
  }
  void insert(int a) {
    auto it = std::lower_bound(members_.begin(), members_.end(), a);
    if (it == members_.end() || *it != a) members_.insert(it, a);
  }
  void unite(const TreatmentSet& other) {
    for (int a : other.members_) insert(a);
  }
  TreatmentSet negated() const {
    std::vector<int> flipped;
    flipped.reserve(members_.size());
    for (int a : members_) flipped.push_back(-a);
    return TreatmentSet(std::move(flipped));
  }

  bool operator==(const TreatmentSet& other) const = default;

  std::string to_string() const {
    std::string out = "{";
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (i > 0) out += ",";
      out += std::to_string(members_[i]);
    }
    out += "}";
    return out;
  }

 private:
  void canonicalize() {
    std::sort(members_.begin(), members_.end());
    members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
    if (members_.empty()) throw Error("treatment set may not be empty");
  }

  std::vector<int> members_;
};

enum class Region { OnlyPos, OnlyNeg, BothNull, BothConflict, BothMixed };
enum class Driver { None, Y, Z };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::OnlyPos: return "only_pos";
    case Region::OnlyNeg: return "only_neg";
    case Region::BothNull: return "both_null";
    case Region::BothConflict: return "both_conflict";
    case Region::BothMixed: return "both_mixed";
  }
  return "?";
}

struct Classification {
  TreatmentSet set = TreatmentSet::both_binary();
  Region region = Region::BothNull;
  Driver driver = Driver::None;
};

struct TrajectoryOneStage {
  VectorXd h;
  int a = 1;
  double y = 0.0;
  double z = 0.0;
};

struct TrajectoryTwoStage {
  VectorXd h1;
  int a1 = 1;
  VectorXd h2;
  int a2 = 1;
  double y = 0.0;
  double z = 0.0;
};

/// Selects the main-effect and treatment-interaction subvectors of a history.
/// The two column lists may overlap; duplicates within a list are rejected.
struct ModelSpec {
  std::vector<int> main_cols;
  std::vector<int> interact_cols;
  bool intercept_main = true;
  bool intercept_interact = true;

  int main_dim() const {
    return static_cast<int>(main_cols.size()) + (intercept_main ? 1 : 0);
  }
  int interact_dim() const {
    return static_cast<int>(interact_cols.size()) + (intercept_interact ? 1 : 0);
  }

  void check_resolvable(int history_dim) const {
    check_list(main_cols, history_dim, "main_cols");
    check_list(interact_cols, history_dim, "interact_cols");
    if (main_dim() == 0 || interact_dim() == 0) {
      throw ConfigError("model spec selects no columns and no intercept");
    }
  }

  bool same_interaction(const ModelSpec& other) const {
    return interact_cols == other.interact_cols &&
           intercept_interact == other.intercept_interact;
  }

 private:
  static void check_list(const std::vector<int>& cols, int dim, const char* which) {
    std::vector<int> seen(cols);
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
      throw ConfigError(std::string(which) + " contains duplicate indices");
    }
    for (int c : cols) {
      if (c < 0 || c >= dim) {
        throw ConfigError(std::string(which) + " index " + std::to_string(c) +
                          " out of bounds for history of length " + std::to_string(dim));
      }
    }
  }
};

/// Immutable container for one- or two-stage trial trajectories.
struct Dataset {
  int stage_count = 1;
  std::vector<TrajectoryOneStage> rows1;
  std::vector<TrajectoryTwoStage> rows2;
  std::vector<std::string> h1_names;
  std::vector<std::string> h2_names;

  std::size_t n() const {
    return stage_count == 1 ? rows1.size() : rows2.size();
  }
  int h1_dim() const {
    if (stage_count == 1) return rows1.empty() ? 0 : static_cast<int>(rows1.front().h.size());
    return rows2.empty() ? 0 : static_cast<int>(rows2.front().h1.size());
  }
  int h2_dim() const {
    return rows2.empty() ? 0 : static_cast<int>(rows2.front().h2.size());
  }
};

/// Diagnostic invariant check; empty result means the dataset is well formed.
/// Binary action coding (-1/+1) is assumed unless multi_actions is set.
inline std::vector<std::string> validate(const Dataset& ds, bool multi_actions = false) {
  std::vector<std::string> violations;
  auto check_action = [&](int a, std::size_t row, const char* field) {
    if (multi_actions ? (a < 1) : (a != -1 && a != 1)) {
      violations.push_back("row " + std::to_string(row) + ": " + field + "=" +
                           std::to_string(a) + " is not a valid action code");
    }
  };
  if (ds.stage_count == 1) {
    if (!ds.rows2.empty()) violations.push_back("one-stage dataset has two-stage rows");
    const int p = ds.h1_dim();
    for (std::size_t i = 0; i < ds.rows1.size(); ++i) {
      const auto& r = ds.rows1[i];
      if (static_cast<int>(r.h.size()) != p) {
        violations.push_back("row " + std::to_string(i) + ": h has length " +
                             std::to_string(r.h.size()) + ", expected " + std::to_string(p));
      }
      check_action(r.a, i, "a");
    }
  } else if (ds.stage_count == 2) {
    if (!ds.rows1.empty()) violations.push_back("two-stage dataset has one-stage rows");
    const int p1 = ds.h1_dim();
    const int p2 = ds.h2_dim();
    for (std::size_t i = 0; i < ds.rows2.size(); ++i) {
      const auto& r = ds.rows2[i];
      if (static_cast<int>(r.h1.size()) != p1) {
        violations.push_back("row " + std::to_string(i) + ": h1 has length " +
                             std::to_string(r.h1.size()) + ", expected " + std::to_string(p1));
      }
      if (static_cast<int>(r.h2.size()) != p2) {
        violations.push_back("row " + std::to_string(i) + ": h2 has length " +
                             std::to_string(r.h2.size()) + ", expected " + std::to_string(p2));
      }
      check_action(r.a1, i, "a1");
      check_action(r.a2, i, "a2");
    }
  } else {
    violations.push_back("stage_count must be 1 or 2");
  }
  return violations;
}

// sgn with sgn(0) = +1; thresholds being positive keeps the zero case out of
// every singleton rule branch, but the labeling convention relies on it.
inline int sign_pos(double x) { return x >= 0.0 ? 1 : -1; }

inline bool is_missing(double x) { return std::isnan(x); }

}  // namespace svdtr
