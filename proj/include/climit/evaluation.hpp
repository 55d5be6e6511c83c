#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "climit/design.hpp"
#include "climit/domain.hpp"

namespace climit {

// Numeric customer field (or treatment) by name; throws on unknown names.
double observation_feature(const ObservationRecord& record, const std::string& name);

struct BinningSpec {
  // (feature name, number of quantile bins), bins >= 1.
  std::vector<std::pair<std::string, int>> features;
};

// Default desk-scale grouping: 9 quantile bins on the four segmentation
// features.
BinningSpec default_binning();

struct GroupSpec {
  BinningSpec spec;
  std::vector<std::vector<double>> edges;  // per feature, interior bin edges
  // Bin tuple -> member record indices; empty tuples are absent.
  std::map<std::vector<int>, std::vector<std::size_t>> groups;

  std::size_t num_records = 0;
};

// Quantile edges computed on the given records; right-closed intervals,
// deduplicated edges.
GroupSpec build_groups(const std::vector<ObservationRecord>& records, const BinningSpec& spec);

struct GroupRow {
  std::vector<int> key;
  double weight = 0.0;   // member count
  double y_mean = 0.0;   // group mean observed outcome
  double yhat_mean = 0.0;  // group mean prediction
};

struct EvaluationReport {
  double rmae = 0.0;
  std::vector<GroupRow> rows;
  std::string method;
};

// RMAE = sum_i w_i |yhat_i - y_i| / sum_i w_i y_i over group means. Throws
// when the denominator is not positive (the metric is undefined there).
EvaluationReport rmae(const GroupSpec& groups, const std::vector<double>& outcomes,
                      const std::vector<double>& predictions, std::string method_label = {});

using PredictFn = std::function<double(const CustomerRecord&, double)>;
// Fills predictions over a treatment grid for one customer.
using CurveFn =
    std::function<void(const CustomerRecord&, const std::vector<double>&, std::vector<double>&)>;

struct MethodPredictor {
  std::string name;
  PredictFn predict;
  CurveFn curve;  // may be empty; falls back to pointwise predict
};

// 0, stride, 2*stride, ... up to and including max_treatment when it lands on
// the grid.
std::vector<double> treatment_grid(double max_treatment, double stride);

struct SubgroupCurves {
  std::vector<double> grid;
  // method name -> averaged predictions over the subgroup, aligned with grid.
  std::map<std::string, std::vector<double>> by_method;
  std::size_t count = 0;
};

// Average response curves per subgroup, grid 0..max menu treatment at the
// given stride. Throws on an empty subgroup.
std::map<CreditRating, SubgroupCurves> ablation_curves(
    const std::vector<MethodPredictor>& methods, const std::vector<ObservationRecord>& records,
    const TestingDesign& design, double stride);

enum class PartitionFactor { kProbDefault, kBalanceToLimit, kSpendToLimit };

const std::string& partition_factor_name(PartitionFactor factor);
double partition_value(const CustomerRecord& record, PartitionFactor factor);

struct Partition {
  PartitionFactor factor = PartitionFactor::kProbDefault;
  std::vector<double> edges;  // interior edges, strictly increasing
};

// Quantile edges of the derived quantity over the records, cells tertiles by
// default.
Partition quantile_partition(const std::vector<ObservationRecord>& records,
                             PartitionFactor factor, int cells);

struct PartitionCurves {
  std::vector<double> grid;
  std::vector<std::vector<double>> cell_curves;  // per cell, aligned with grid
  std::vector<std::size_t> cell_counts;
};

// Partial dependence: model evaluated over the grid, averaged within each
// partition cell. Throws on an empty cell.
PartitionCurves partial_dependence(const MethodPredictor& method,
                                   const std::vector<ObservationRecord>& records,
                                   const Partition& partition, const std::vector<double>& grid);

}  // namespace climit
