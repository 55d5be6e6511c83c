#include "climit/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace climit {

int RegressionTree::route(std::span<const double> x) const {
  int node = 0;
  while (!nodes[node].is_leaf()) {
    const TreeNode& n = nodes[node];
    node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return node;
}

int GbdtModel::total_leaves() const {
  int total = 0;
  for (const auto& tree : trees) total += tree.num_leaves;
  return total;
}

namespace {

void check_width(const GbdtModel& model, std::size_t width) {
  if (width != model.schema.size()) {
    throw std::invalid_argument("feature width mismatch: model expects " +
                                std::to_string(model.schema.size()) + " values, got " +
                                std::to_string(width));
  }
}

// One boosting round: fits a tree to the residuals by variance-reduction
// split search, level by level, reusing the globally presorted feature order.
RegressionTree build_tree(const std::vector<std::vector<double>>& cols,
                          const std::vector<std::vector<std::size_t>>& sorted_idx,
                          const std::vector<double>& residual, const GbdtParams& params,
                          std::vector<int>& node_of) {
  const std::size_t n = residual.size();
  const std::size_t p = cols.size();
  const double min_leaf = static_cast<double>(params.min_samples_leaf);

  RegressionTree tree;
  tree.nodes.emplace_back();
  std::fill(node_of.begin(), node_of.end(), 0);
  std::vector<int> level = {0};

  struct Best {
    double gain = -1.0;
    int feature = -1;
    double threshold = 0.0;
  };

  for (int depth = 0; depth < params.max_depth && !level.empty(); ++depth) {
    const std::size_t num_nodes = tree.nodes.size();
    std::vector<double> total_cnt(num_nodes, 0.0), total_sum(num_nodes, 0.0);
    std::vector<char> in_level(num_nodes, 0);
    for (int id : level) in_level[static_cast<std::size_t>(id)] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      const auto id = static_cast<std::size_t>(node_of[i]);
      total_cnt[id] += 1.0;
      total_sum[id] += residual[i];
    }
    std::vector<char> splittable(num_nodes, 0);
    for (int id : level) {
      splittable[static_cast<std::size_t>(id)] =
          total_cnt[static_cast<std::size_t>(id)] >= 2.0 * min_leaf;
    }

    std::vector<Best> best(num_nodes);
    std::vector<double> cnt_left(num_nodes), sum_left(num_nodes), last_value(num_nodes);
    std::vector<char> seen(num_nodes);
    for (std::size_t f = 0; f < p; ++f) {
      std::fill(cnt_left.begin(), cnt_left.end(), 0.0);
      std::fill(sum_left.begin(), sum_left.end(), 0.0);
      std::fill(seen.begin(), seen.end(), 0);
      const auto& col = cols[f];
      for (std::size_t idx : sorted_idx[f]) {
        const auto id = static_cast<std::size_t>(node_of[idx]);
        if (!in_level[id] || !splittable[id]) continue;
        const double v = col[idx];
        if (seen[id] && v > last_value[id]) {
          const double nl = cnt_left[id];
          const double nr = total_cnt[id] - nl;
          if (nl >= min_leaf && nr >= min_leaf) {
            const double sl = sum_left[id];
            const double sr = total_sum[id] - sl;
            const double gain = sl * sl / nl + sr * sr / nr -
                                total_sum[id] * total_sum[id] / total_cnt[id];
            if (gain > params.min_gain && gain > best[id].gain) {
              best[id] = {gain, static_cast<int>(f), 0.5 * (last_value[id] + v)};
            }
          }
        }
        cnt_left[id] += 1.0;
        sum_left[id] += residual[idx];
        last_value[id] = v;
        seen[id] = 1;
      }
    }

    std::vector<int> next_level;
    for (int id : level) {
      const Best& b = best[static_cast<std::size_t>(id)];
      if (b.feature < 0) continue;
      TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
      node.feature = b.feature;
      node.threshold = b.threshold;
      node.left = static_cast<int>(tree.nodes.size());
      node.right = node.left + 1;
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      next_level.push_back(node.left);
      next_level.push_back(node.right);
    }
    if (next_level.empty()) break;
    for (std::size_t i = 0; i < n; ++i) {
      const TreeNode& node = tree.nodes[static_cast<std::size_t>(node_of[i])];
      if (node.is_leaf()) continue;
      node_of[i] = cols[static_cast<std::size_t>(node.feature)][i] <= node.threshold
                       ? node.left
                       : node.right;
    }
    level = std::move(next_level);
  }

  // Leaf values are mean residuals (squared-loss gradient step); ordinals
  // follow node index order.
  std::vector<double> leaf_cnt(tree.nodes.size(), 0.0), leaf_sum(tree.nodes.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<std::size_t>(node_of[i]);
    leaf_cnt[id] += 1.0;
    leaf_sum[id] += residual[i];
  }
  int ordinal = 0;
  for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
    TreeNode& node = tree.nodes[id];
    if (!node.is_leaf()) continue;
    node.leaf_value = leaf_cnt[id] > 0.0 ? leaf_sum[id] / leaf_cnt[id] : 0.0;
    node.leaf_ordinal = ordinal++;
  }
  tree.num_leaves = ordinal;
  return tree;
}

}  // namespace

GbdtModel fit_gbdt(const std::vector<FeatureVector>& X, const std::vector<double>& y,
                   const GbdtParams& params) {
  if (X.empty() || y.empty()) {
    throw std::invalid_argument("fit_gbdt: empty training data");
  }
  if (X.size() != y.size()) {
    throw std::invalid_argument("fit_gbdt: feature/target size mismatch");
  }
  if (!(params.learning_rate > 0.0 && params.learning_rate <= 1.0)) {
    throw std::invalid_argument("fit_gbdt: learning_rate must be in (0,1]");
  }
  const std::size_t n = X.size();
  const std::size_t p = X[0].values.size();
  for (double v : y) {
    if (!std::isfinite(v)) throw std::invalid_argument("fit_gbdt: non-finite target");
  }

  GbdtModel model;
  model.params = params;
  model.schema = X[0].schema ? *X[0].schema : Schema(p);

  // Column-major copy plus one global presort per feature.
  std::vector<std::vector<double>> cols(p, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (X[i].values.size() != p) {
      throw std::invalid_argument("fit_gbdt: inconsistent feature width");
    }
    for (std::size_t f = 0; f < p; ++f) {
      const double v = X[i].values[f];
      if (!std::isfinite(v)) throw std::invalid_argument("fit_gbdt: non-finite feature");
      cols[f][i] = v;
    }
  }
  std::vector<std::vector<std::size_t>> sorted_idx(p);
  for (std::size_t f = 0; f < p; ++f) {
    auto& order = sorted_idx[f];
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& col = cols[f];
    std::sort(order.begin(), order.end(), [&col](std::size_t a, std::size_t b) {
      return col[a] != col[b] ? col[a] < col[b] : a < b;
    });
  }

  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  model.base_prediction = mean;

  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - mean;

  std::vector<int> node_of(n);
  model.trees.reserve(static_cast<std::size_t>(params.num_trees));
  for (int t = 0; t < params.num_trees; ++t) {
    RegressionTree tree = build_tree(cols, sorted_idx, residual, params, node_of);
    for (std::size_t i = 0; i < n; ++i) {
      residual[i] -= params.learning_rate *
                     tree.nodes[static_cast<std::size_t>(node_of[i])].leaf_value;
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

double predict_gbdt(const GbdtModel& model, std::span<const double> values) {
  check_width(model, values.size());
  double sum = model.base_prediction;
  for (const auto& tree : model.trees) {
    sum += model.params.learning_rate * tree.nodes[static_cast<std::size_t>(tree.route(values))].leaf_value;
  }
  return sum;
}

double predict_gbdt(const GbdtModel& model, const FeatureVector& x) {
  return predict_gbdt(model, std::span<const double>(x.values));
}

void encode_leaves_into(const GbdtModel& model, std::span<const double> values,
                        std::vector<double>& out) {
  check_width(model, values.size());
  out.assign(static_cast<std::size_t>(model.total_leaves()), 0.0);
  std::size_t offset = 0;
  for (const auto& tree : model.trees) {
    const int leaf = tree.route(values);
    out[offset + static_cast<std::size_t>(tree.nodes[static_cast<std::size_t>(leaf)].leaf_ordinal)] = 1.0;
    offset += static_cast<std::size_t>(tree.num_leaves);
  }
}

SchemaPtr leaf_schema(const GbdtModel& model) {
  auto schema = std::make_shared<Schema>();
  schema->reserve(static_cast<std::size_t>(model.total_leaves()));
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    for (int l = 0; l < model.trees[t].num_leaves; ++l) {
      schema->push_back("t" + std::to_string(t) + "_leaf" + std::to_string(l));
    }
  }
  return schema;
}

std::vector<std::pair<int, int>> leaf_blocks(const GbdtModel& model) {
  std::vector<std::pair<int, int>> blocks;
  int offset = 0;
  for (const auto& tree : model.trees) {
    blocks.emplace_back(offset, tree.num_leaves);
    offset += tree.num_leaves;
  }
  return blocks;
}

FeatureVector encode_leaves(const GbdtModel& model, std::span<const double> values) {
  FeatureVector out;
  encode_leaves_into(model, values, out.values);
  out.schema = leaf_schema(model);
  return out;
}

FeatureVector encode_leaves(const GbdtModel& model, const FeatureVector& x) {
  return encode_leaves(model, std::span<const double>(x.values));
}

GbdtModel fit_encoder(const std::vector<FeatureVector>& X, const std::vector<double>& y,
                      const GbdtParams& params) {
  if (!X.empty() && X[0].schema) {
    for (const auto& name : *X[0].schema) {
      if (name == "treatment") {
        throw std::invalid_argument(
            "fit_encoder: schema contains the treatment column; the encoder is "
            "built from features only");
      }
    }
  }
  return fit_gbdt(X, y, params);
}

}  // namespace climit
