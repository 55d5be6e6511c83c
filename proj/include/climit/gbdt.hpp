#pragma once

#include <span>
#include <string>
#include <vector>

#include "climit/domain.hpp"

namespace climit {

struct GbdtParams {
  int num_trees = 50;
  int max_depth = 3;
  double learning_rate = 0.1;  // in (0,1]
  int min_samples_leaf = 20;
  double min_gain = 0.0;
};

// Nodes are stored in creation order; node 0 is the root. Internal nodes
// route left iff value <= threshold. Leaves carry the mean residual of their
// training samples and an ordinal in 0..num_leaves-1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;
  int leaf_ordinal = -1;
  bool is_leaf() const { return left < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  int num_leaves = 0;

  // Index of the leaf node reached by x.
  int route(std::span<const double> x) const;
};

// Squared-error boosted ensemble; doubles as the leaf-index feature encoder.
struct GbdtModel {
  std::vector<RegressionTree> trees;
  GbdtParams params;
  double base_prediction = 0.0;  // training-target mean
  Schema schema;                 // training feature names, fixes input width

  int total_leaves() const;
};

// Greedy boosting with exact split search over midpoints of sorted unique
// values. Deterministic: equal-gain ties resolve to the lowest feature index,
// then the lowest threshold.
GbdtModel fit_gbdt(const std::vector<FeatureVector>& X, const std::vector<double>& y,
                   const GbdtParams& params);

double predict_gbdt(const GbdtModel& model, const FeatureVector& x);
double predict_gbdt(const GbdtModel& model, std::span<const double> values);

// One-hot concatenation over trees; width total_leaves, exactly one 1 per
// tree at column (tree offset + leaf_ordinal). Schema names are "t{i}_leaf{j}".
FeatureVector encode_leaves(const GbdtModel& model, const FeatureVector& x);
FeatureVector encode_leaves(const GbdtModel& model, std::span<const double> values);

// Allocation-light variant for bulk encoding; out is resized to total_leaves.
void encode_leaves_into(const GbdtModel& model, std::span<const double> values,
                        std::vector<double>& out);

SchemaPtr leaf_schema(const GbdtModel& model);

// Per-tree one-hot block layout of the leaf encoding: (start, length) pairs.
std::vector<std::pair<int, int>> leaf_blocks(const GbdtModel& model);

// As fit_gbdt, but refuses schemas that contain the treatment column: the
// encoder must be built from features L only.
GbdtModel fit_encoder(const std::vector<FeatureVector>& X, const std::vector<double>& y,
                      const GbdtParams& params);

}  // namespace climit
