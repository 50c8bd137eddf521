#pragma once

#include "svdtr/core.hpp"
#include "svdtr/static_rule.hpp"

#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace svdtr {

struct TreeOptions {
  int max_depth = 4;
  int min_leaf = 5;
};

/// Node of a CART-style approximation of a set-valued rule. Leaves carry the
/// majority TreatmentSet and the dominant region among their samples.
struct TreeNode {
  bool is_leaf = true;
  int column = -1;
  double threshold = 0.0;
  std::unique_ptr<TreeNode> left;
  std::unique_ptr<TreeNode> right;
  TreatmentSet leaf_set = TreatmentSet::both_binary();
  Region leaf_region = Region::BothNull;
  int n_samples = 0;
};

struct TreeApproxResult {
  std::unique_ptr<TreeNode> root;
  double agreement = 0.0;  // fraction of the sample the tree reproduces
};

namespace detail {

struct TreeSample {
  std::vector<VectorXd> h;
  std::vector<int> cls;                 // class id per sample
  std::vector<TreatmentSet> class_sets;
  std::vector<Region> class_regions;
};

inline double gini(const std::vector<int>& counts, int total) {
  if (total == 0) return 0.0;
  double g = 1.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / total;
    g -= p * p;
  }
  return g;
}

inline std::pair<int, Region> majority_class(const TreeSample& sample,
                                             const std::vector<int>& idx) {
  std::vector<int> counts(sample.class_sets.size(), 0);
  for (int i : idx) ++counts[static_cast<std::size_t>(sample.cls[static_cast<std::size_t>(i)])];
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c) {
    if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return {best, sample.class_regions[static_cast<std::size_t>(best)]};
}

inline std::unique_ptr<TreeNode> grow(const TreeSample& sample, std::vector<int> idx,
                                      int depth, const TreeOptions& opts) {
  auto node = std::make_unique<TreeNode>();
  node->n_samples = static_cast<int>(idx.size());
  auto [maj, region] = majority_class(sample, idx);
  node->leaf_set = sample.class_sets[static_cast<std::size_t>(maj)];
  node->leaf_region = region;

  const int n_classes = static_cast<int>(sample.class_sets.size());
  std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
  for (int i : idx) ++counts[static_cast<std::size_t>(sample.cls[static_cast<std::size_t>(i)])];
  const double parent_gini = gini(counts, static_cast<int>(idx.size()));
  if (depth >= opts.max_depth || parent_gini == 0.0 ||
      static_cast<int>(idx.size()) < 2 * opts.min_leaf) {
    return node;
  }

  const int p = static_cast<int>(sample.h.front().size());
  int best_col = -1;
  double best_thr = 0.0;
  double best_impurity = parent_gini;
  for (int col = 0; col < p; ++col) {
    std::vector<int> order(idx);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double va = sample.h[static_cast<std::size_t>(a)][col];
      const double vb = sample.h[static_cast<std::size_t>(b)][col];
      if (va != vb) return va < vb;
      return a < b;
    });
    std::vector<int> left_counts(static_cast<std::size_t>(n_classes), 0);
    std::vector<int> right_counts(counts);
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      const int cls = sample.cls[static_cast<std::size_t>(order[k])];
      ++left_counts[static_cast<std::size_t>(cls)];
      --right_counts[static_cast<std::size_t>(cls)];
      const double v = sample.h[static_cast<std::size_t>(order[k])][col];
      const double vnext = sample.h[static_cast<std::size_t>(order[k + 1])][col];
      if (v == vnext) continue;
      const int nl = static_cast<int>(k) + 1;
      const int nr = static_cast<int>(order.size()) - nl;
      if (nl < opts.min_leaf || nr < opts.min_leaf) continue;
      const double impurity =
          (nl * gini(left_counts, nl) + nr * gini(right_counts, nr)) /
          static_cast<double>(order.size());
      if (impurity < best_impurity - 1e-12) {
        best_impurity = impurity;
        best_col = col;
        best_thr = 0.5 * (v + vnext);
      }
    }
  }
  if (best_col < 0) return node;

  std::vector<int> left_idx, right_idx;
  for (int i : idx) {
    if (sample.h[static_cast<std::size_t>(i)][best_col] <= best_thr) {
      left_idx.push_back(i);
    } else {
      right_idx.push_back(i);
    }
  }
  node->is_leaf = false;
  node->column = best_col;
  node->threshold = best_thr;
  node->left = grow(sample, std::move(left_idx), depth + 1, opts);
  node->right = grow(sample, std::move(right_idx), depth + 1, opts);
  return node;
}

}  // namespace detail

inline const TreeNode& tree_leaf_for(const TreeNode& node, const VectorXd& h) {
  if (node.is_leaf) return node;
  return h[node.column] <= node.threshold ? tree_leaf_for(*node.left, h)
                                          : tree_leaf_for(*node.right, h);
}

inline TreatmentSet tree_predict(const TreeNode& root, const VectorXd& h) {
  return tree_leaf_for(root, h).leaf_set;
}

/// Greedy Gini tree approximating apply_rule over the given sample.
inline TreeApproxResult tree_approx(const SetValuedRule& rule,
                                    const std::vector<VectorXd>& sample,
                                    const TreeOptions& opts = {}) {
  if (sample.empty()) throw InsufficientData("tree approximation needs samples");
  detail::TreeSample s;
  s.h = sample;
  std::map<std::vector<int>, int> class_ids;
  for (const auto& h : sample) {
    const Classification c = rule.classify_history(h);
    auto [it, inserted] =
        class_ids.try_emplace(c.set.members(), static_cast<int>(s.class_sets.size()));
    if (inserted) {
      s.class_sets.push_back(c.set);
      s.class_regions.push_back(c.region);
    }
    s.cls.push_back(it->second);
  }
  std::vector<int> idx(sample.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  TreeApproxResult out;
  out.root = detail::grow(s, std::move(idx), 0, opts);
  int agree = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (tree_predict(*out.root, sample[i]) ==
        s.class_sets[static_cast<std::size_t>(s.cls[i])]) {
      ++agree;
    }
  }
  out.agreement = static_cast<double>(agree) / static_cast<double>(sample.size());
  return out;
}

/// Text rendering of the tree, one node per line.
inline void render_tree(const TreeNode& node, const std::vector<std::string>& col_names,
                        std::string indent, std::ostream& os) {
  if (node.is_leaf) {
    os << indent << "leaf: " << node.leaf_set.to_string() << " ["
       << region_name(node.leaf_region) << ", n=" << node.n_samples << "]\n";
    return;
  }
  const std::string name = node.column < static_cast<int>(col_names.size())
                               ? col_names[static_cast<std::size_t>(node.column)]
                               : "h" + std::to_string(node.column);
  os << indent << name << " <= " << node.threshold << " ?\n";
  render_tree(*node.left, col_names, indent + "  ", os);
  os << indent << name << " > " << node.threshold << " ?\n";
  render_tree(*node.right, col_names, indent + "  ", os);
}

}  // namespace svdtr
