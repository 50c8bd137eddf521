#pragma once

#include "svdtr/core.hpp"
#include "svdtr/dynamic_rule.hpp"
#include "svdtr/enumeration.hpp"
#include "svdtr/regression.hpp"
#include "svdtr/simulation.hpp"
#include "svdtr/static_rule.hpp"
#include "svdtr/tree.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace svdtr {

inline std::string format_sig(double x, int digits = 12) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
  return buf;
}

inline std::string format_full(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string format_fixed(double x, int decimals = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    throw BindingError("column '" + name + "' not found in input header");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line, std::size_t lineno) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  if (quoted) {
    throw ParseError("line " + std::to_string(lineno) + ": unterminated quote");
  }
  cells.push_back(trim(cell));
  return cells;
}

inline bool missing_token(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "." ||
         s == "NULL";
}

inline double parse_cell(const std::string& s, std::size_t lineno, const std::string& col) {
  if (missing_token(s)) return std::numeric_limits<double>::quiet_NaN();
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(lineno) + ", column '" + col +
                     "': cannot parse '" + s + "' as a number");
  }
  if (pos != s.size()) {
    throw ParseError("line " + std::to_string(lineno) + ", column '" + col +
                     "': trailing characters in '" + s + "'");
  }
  return v;
}

}  // namespace detail

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  CsvTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      table.header = detail::split_csv_line(line, lineno);
      continue;
    }
    if (line.empty()) continue;
    auto cells = detail::split_csv_line(line, lineno);
    if (cells.size() != table.header.size()) {
      throw ParseError("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(table.header.size()) + " cells, found " +
                       std::to_string(cells.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (table.header.empty()) throw ParseError("'" + path.string() + "' has no header row");
  return table;
}

// ---------------------------------------------------------------------------
// Outcome construction
// ---------------------------------------------------------------------------

/// Midpoint-convention percentile of v within the reference sample.
inline double percentile_of(double v, const std::vector<double>& reference) {
  if (reference.empty()) throw InsufficientData("empty percentile reference sample");
  std::size_t less = 0, equal = 0;
  for (double r : reference) {
    if (r < v) ++less;
    if (r == v) ++equal;
  }
  return 100.0 * (static_cast<double>(less) + 0.5 * static_cast<double>(equal)) /
         static_cast<double>(reference.size());
}

/// How an outcome column is derived from the raw table.
struct OutcomeSource {
  enum class Kind { Column, Slope, PercentileComplement };
  Kind kind = Kind::Column;
  std::string col;                      // Column / PercentileComplement value
  std::string reference_col;            // PercentileComplement reference sample
  std::vector<std::string> value_cols;  // Slope repeated measures
  std::vector<double> times;            // Slope observation times
};

struct DataBindings {
  // One-stage: history_cols/action_col; two-stage: the stage-specific ones.
  std::vector<std::string> history_cols;
  std::string action_col;
  std::vector<std::string> stage1_history_cols;
  std::string action1_col;
  std::vector<std::string> stage2_history_cols;
  std::string action2_col;
  std::map<std::string, int> action_recode;
  OutcomeSource y;
  OutcomeSource z;
};

struct LoadResult {
  Dataset dataset;
  std::size_t n_dropped = 0;
};

namespace detail {

inline int decode_action(const std::string& raw, const std::map<std::string, int>& recode,
                         std::size_t lineno, const std::string& col) {
  if (auto it = recode.find(raw); it != recode.end()) return it->second;
  const double v = parse_cell(raw, lineno, col);
  if (is_missing(v)) throw ParseError("line " + std::to_string(lineno) +
                                      ": missing action in column '" + col + "'");
  const int a = static_cast<int>(std::lround(v));
  if (static_cast<double>(a) != v) {
    throw ParseError("line " + std::to_string(lineno) + ", column '" + col +
                     "': action '" + raw + "' is not an integer code");
  }
  return a;
}

struct OutcomeExtractor {
  OutcomeSource source;
  std::vector<int> col_idx;       // resolved per kind
  std::vector<double> reference;  // PercentileComplement only

  static OutcomeExtractor make(const OutcomeSource& src, const CsvTable& table) {
    OutcomeExtractor ex;
    ex.source = src;
    switch (src.kind) {
      case OutcomeSource::Kind::Column:
        ex.col_idx.push_back(table.column(src.col));
        break;
      case OutcomeSource::Kind::Slope: {
        if (src.value_cols.size() != src.times.size() || src.value_cols.size() < 2) {
          throw ConfigError("slope outcome needs matching value_cols and times (>= 2)");
        }
        for (const auto& c : src.value_cols) ex.col_idx.push_back(table.column(c));
        break;
      }
      case OutcomeSource::Kind::PercentileComplement: {
        ex.col_idx.push_back(table.column(src.col));
        const int ref = table.column(src.reference_col);
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
          const double v = parse_cell(table.rows[r][static_cast<std::size_t>(ref)], r + 2,
                                      src.reference_col);
          if (!is_missing(v)) ex.reference.push_back(v);
        }
        break;
      }
    }
    return ex;
  }

  // NaN when the outcome cannot be formed for this row.
  double extract(const std::vector<std::string>& row, std::size_t lineno) const {
    switch (source.kind) {
      case OutcomeSource::Kind::Column:
        return parse_cell(row[static_cast<std::size_t>(col_idx[0])], lineno, source.col);
      case OutcomeSource::Kind::Slope: {
        VectorXd times(static_cast<Eigen::Index>(source.times.size()));
        VectorXd values(static_cast<Eigen::Index>(source.times.size()));
        for (std::size_t k = 0; k < source.times.size(); ++k) {
          times[static_cast<Eigen::Index>(k)] = source.times[k];
          values[static_cast<Eigen::Index>(k)] = parse_cell(
              row[static_cast<std::size_t>(col_idx[k])], lineno, source.value_cols[k]);
        }
        try {
          return slope_outcome(times, values);
        } catch (const InsufficientData&) {
          return std::numeric_limits<double>::quiet_NaN();
        }
      }
      case OutcomeSource::Kind::PercentileComplement: {
        const double v =
            parse_cell(row[static_cast<std::size_t>(col_idx[0])], lineno, source.col);
        if (is_missing(v)) return v;
        return 100.0 - percentile_of(v, reference);
      }
    }
    return std::numeric_limits<double>::quiet_NaN();
  }
};

inline VectorXd extract_history(const std::vector<std::string>& row,
                                const std::vector<int>& cols,
                                const std::vector<std::string>& names, std::size_t lineno) {
  VectorXd h(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    h[static_cast<Eigen::Index>(k)] =
        parse_cell(row[static_cast<std::size_t>(cols[k])], lineno, names[k]);
  }
  return h;
}

inline bool has_nan(const VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (is_missing(v[i])) return true;
  }
  return false;
}

}  // namespace detail

/// Loads a one- or two-stage dataset from CSV with the given bindings.
/// Rows with a missing value in any bound column are dropped (complete case);
/// missing repeated measures inside a slope outcome are tolerated as long as
/// the slope itself is computable.
inline LoadResult load_csv(const std::filesystem::path& path, const DataBindings& b,
                           int stage_count) {
  const CsvTable table = read_csv(path);
  LoadResult out;
  out.dataset.stage_count = stage_count;

  auto resolve = [&](const std::vector<std::string>& names) {
    std::vector<int> idx;
    idx.reserve(names.size());
    for (const auto& n : names) idx.push_back(table.column(n));
    return idx;
  };

  const auto y_ex = detail::OutcomeExtractor::make(b.y, table);
  const auto z_ex = detail::OutcomeExtractor::make(b.z, table);

  if (stage_count == 1) {
    out.dataset.h1_names = b.history_cols;
    const auto hcols = resolve(b.history_cols);
    const int acol = table.column(b.action_col);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const std::size_t lineno = r + 2;
      const auto& row = table.rows[r];
      TrajectoryOneStage t;
      t.h = detail::extract_history(row, hcols, b.history_cols, lineno);
      t.y = y_ex.extract(row, lineno);
      t.z = z_ex.extract(row, lineno);
      const std::string raw_a = row[static_cast<std::size_t>(acol)];
      if (detail::missing_token(raw_a) || detail::has_nan(t.h) || is_missing(t.y) ||
          is_missing(t.z)) {
        ++out.n_dropped;
        continue;
      }
      t.a = detail::decode_action(raw_a, b.action_recode, lineno, b.action_col);
      out.dataset.rows1.push_back(std::move(t));
    }
  } else if (stage_count == 2) {
    out.dataset.h1_names = b.stage1_history_cols;
    out.dataset.h2_names = b.stage2_history_cols;
    const auto h1cols = resolve(b.stage1_history_cols);
    const auto h2cols = resolve(b.stage2_history_cols);
    const int a1col = table.column(b.action1_col);
    const int a2col = table.column(b.action2_col);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const std::size_t lineno = r + 2;
      const auto& row = table.rows[r];
      TrajectoryTwoStage t;
      t.h1 = detail::extract_history(row, h1cols, b.stage1_history_cols, lineno);
      t.h2 = detail::extract_history(row, h2cols, b.stage2_history_cols, lineno);
      t.y = y_ex.extract(row, lineno);
      t.z = z_ex.extract(row, lineno);
      const std::string raw_a1 = row[static_cast<std::size_t>(a1col)];
      const std::string raw_a2 = row[static_cast<std::size_t>(a2col)];
      if (detail::missing_token(raw_a1) || detail::missing_token(raw_a2) ||
          detail::has_nan(t.h1) || detail::has_nan(t.h2) || is_missing(t.y) ||
          is_missing(t.z)) {
        ++out.n_dropped;
        continue;
      }
      t.a1 = detail::decode_action(raw_a1, b.action_recode, lineno, b.action1_col);
      t.a2 = detail::decode_action(raw_a2, b.action_recode, lineno, b.action2_col);
      out.dataset.rows2.push_back(std::move(t));
    }
  } else {
    throw ConfigError("stage_count must be 1 or 2");
  }
  return out;
}

/// Canonical CSV serialization; fields round-trip exactly through load_csv.
inline void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  if (ds.stage_count == 1) {
    for (const auto& n : ds.h1_names) out << n << ",";
    out << "a,y,z\n";
    for (const auto& r : ds.rows1) {
      for (Eigen::Index i = 0; i < r.h.size(); ++i) out << format_full(r.h[i]) << ",";
      out << r.a << "," << format_full(r.y) << "," << format_full(r.z) << "\n";
    }
  } else {
    for (const auto& n : ds.h1_names) out << n << ",";
    out << "a1,";
    for (const auto& n : ds.h2_names) out << n << ",";
    out << "a2,y,z\n";
    for (const auto& r : ds.rows2) {
      for (Eigen::Index i = 0; i < r.h1.size(); ++i) out << format_full(r.h1[i]) << ",";
      out << r.a1 << ",";
      for (Eigen::Index i = 0; i < r.h2.size(); ++i) out << format_full(r.h2[i]) << ",";
      out << r.a2 << "," << format_full(r.y) << "," << format_full(r.z) << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// Figure-ready exports
// ---------------------------------------------------------------------------

/// Two-column contrast cloud plus a JSON sidecar with thresholds and
/// per-region counts.
inline std::map<std::string, int> write_region_diagram(
    const std::vector<std::pair<double, double>>& points, const Thresholds& thresholds,
    const std::filesystem::path& path) {
  std::map<std::string, int> counts = {{region_name(Region::OnlyPos), 0},
                                       {region_name(Region::OnlyNeg), 0},
                                       {region_name(Region::BothNull), 0},
                                       {region_name(Region::BothConflict), 0},
                                       {region_name(Region::BothMixed), 0}};
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "# r_Y r_Z\n";
  for (const auto& [ry, rz] : points) {
    out << format_sig(ry) << " " << format_sig(rz) << "\n";
    ++counts[region_name(classify(ry, rz, thresholds).region)];
  }
  std::ofstream meta(path.string() + ".meta.json");
  meta << "{\n  \"delta_y\": " << format_sig(thresholds.delta_y)
       << ",\n  \"delta_z\": " << format_sig(thresholds.delta_z)
       << ",\n  \"n\": " << points.size() << ",\n  \"region_counts\": {";
  bool first = true;
  for (const auto& [name, count] : counts) {
    meta << (first ? "\n" : ",\n") << "    \"" << name << "\": " << count;
    first = false;
  }
  meta << "\n  }\n}\n";
  return counts;
}

/// One line per feasible labeling: labels, a separator bar, then the witness.
inline void write_labeling_dump(const std::vector<Labeling>& labelings,
                                const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const auto& l : labelings) {
    for (std::size_t i = 0; i < l.labels.size(); ++i) {
      if (i > 0) out << " ";
      out << l.labels[i];
    }
    out << " |";
    for (Eigen::Index i = 0; i < l.witness.size(); ++i) {
      out << " " << format_sig(l.witness[i]);
    }
    out << "\n";
  }
}

inline void write_sweep(const std::vector<SweepRow>& rows,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "delta_star,policy,regret_abs,se\n";
  for (const auto& r : rows) {
    out << format_sig(r.delta_star) << "," << r.policy << ","
        << format_sig(r.estimate.regret_abs()) << "," << format_sig(r.estimate.se)
        << "\n";
  }
}

/// Stage-1 contrast cloud for one fixed h1 as the stage-2 rule varies.
inline void write_trace(const std::vector<UnionTraceRow>& trace,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "# labeling_index r_1Y r_1Z set\n";
  for (const auto& row : trace) {
    out << row.bundle_index << " " << format_sig(row.r1y) << " " << format_sig(row.r1z)
        << " " << row.set.to_string() << "\n";
  }
}

// ---------------------------------------------------------------------------
// Coefficient tables
// ---------------------------------------------------------------------------

struct CoefficientRow {
  std::string term;
  double estimate = 0.0;
  double std_error = 0.0;
  double t_value = 0.0;
  double p_value = 0.0;
};

struct CoefficientTable {
  std::vector<CoefficientRow> rows;
  ResidualSummary summary;
  std::size_t n_used = 0;
  std::size_t n_dropped = 0;
};

/// Term names in the design order: main block then interaction block, with
/// the action column naming the treatment main effect and its interactions.
inline std::vector<std::string> term_names(const ModelSpec& spec,
                                           const std::vector<std::string>& history_names,
                                           const std::string& action_name) {
  std::vector<std::string> names;
  if (spec.intercept_main) names.push_back("(Intercept)");
  for (int c : spec.main_cols) names.push_back(history_names[static_cast<std::size_t>(c)]);
  if (spec.intercept_interact) names.push_back(action_name);
  for (int c : spec.interact_cols) {
    names.push_back(history_names[static_cast<std::size_t>(c)] + "*" + action_name);
  }
  return names;
}

/// Classical homoskedastic standard errors, t statistics, and two-sided
/// p-values for a fitted design; display only (stage-1 estimators after
/// enumeration are non-regular and these are not valid for inference there).
inline CoefficientTable coefficient_table(const MatrixXd& design, const VectorXd& response,
                                          const std::vector<std::string>& names) {
  const Eigen::Index n = design.rows();
  const Eigen::Index q = design.cols();
  if (static_cast<Eigen::Index>(names.size()) != q) {
    throw DimensionMismatch("term name count does not match design");
  }
  VectorXd coef = fit_ols(design, response);
  VectorXd residuals = response - design * coef;
  const double rss = residuals.squaredNorm();
  const double df = static_cast<double>(n - q);
  const double sigma2 = df > 0 ? rss / df : 0.0;
  MatrixXd xtx_inv = (design.transpose() * design).ldlt().solve(MatrixXd::Identity(q, q));

  CoefficientTable table;
  table.n_used = static_cast<std::size_t>(n);
  table.summary = summarize_residuals(residuals, response, static_cast<int>(q));
  boost::math::students_t tdist(df > 0 ? df : 1.0);
  for (Eigen::Index j = 0; j < q; ++j) {
    CoefficientRow row;
    row.term = names[static_cast<std::size_t>(j)];
    row.estimate = coef[j];
    row.std_error = std::sqrt(std::max(0.0, sigma2 * xtx_inv(j, j)));
    row.t_value = row.std_error > 0 ? row.estimate / row.std_error : 0.0;
    row.p_value =
        df > 0 ? 2.0 * boost::math::cdf(boost::math::complement(
                            tdist, std::abs(row.t_value)))
               : 1.0;
    table.rows.push_back(std::move(row));
  }
  return table;
}

inline void write_coefficient_table(const CoefficientTable& table,
                                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  std::size_t width = 12;
  for (const auto& r : table.rows) width = std::max(width, r.term.size() + 1);
  auto pad = [width](const std::string& s) {
    return s + std::string(width > s.size() ? width - s.size() : 1, ' ');
  };
  auto col = [](const std::string& s) {
    return s.size() >= 11 ? " " + s : std::string(11 - s.size(), ' ') + s;
  };
  out << pad("") << col("Estimate") << col("Std. Error") << col("t value")
      << col("Pr(>|t|)") << "\n";
  for (const auto& r : table.rows) {
    out << pad(r.term) << col(format_fixed(r.estimate)) << col(format_fixed(r.std_error))
        << col(format_fixed(r.t_value, 2)) << col(format_fixed(r.p_value)) << "\n";
  }
  const auto& s = table.summary;
  out << "\nResiduals:\n";
  out << "  Min " << format_fixed(s.min) << "  1Q " << format_fixed(s.q1) << "  Median "
      << format_fixed(s.median) << "  3Q " << format_fixed(s.q3) << "  Max "
      << format_fixed(s.max) << "\n";
  out << "Residual standard error: " << format_fixed(s.residual_std_error)
      << "  Multiple R-squared: " << format_fixed(s.r_squared) << "\n";
  if (table.n_dropped > 0) {
    out << "(" << table.n_dropped << " observation(s) deleted due to missingness)\n";
  }
}

}  // namespace svdtr
