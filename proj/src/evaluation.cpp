#include "climit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace climit {

double observation_feature(const ObservationRecord& record, const std::string& name) {
  const CustomerRecord& c = record.customer;
  if (name == "prob_default") return c.prob_default;
  if (name == "avg_spend_3m") return c.avg_spend_3m;
  if (name == "avg_spend_6m") return c.avg_spend_6m;
  if (name == "max_spend_12m") return c.max_spend_12m;
  if (name == "avg_balance_3m") return c.avg_balance_3m;
  if (name == "avg_balance_6m") return c.avg_balance_6m;
  if (name == "current_limit") return c.current_limit;
  if (name == "treatment") return record.treatment;
  throw std::invalid_argument("unknown feature name '" + name + "'");
}

BinningSpec default_binning() {
  return {{{"prob_default", 9},
           {"current_limit", 9},
           {"avg_spend_6m", 9},
           {"avg_balance_6m", 9}}};
}

namespace {

// Interior quantile edges; edge for p is the value at rank ceil(p*n)-1.
std::vector<double> quantile_edges(std::vector<double> values, int bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> edges;
  const auto n = static_cast<double>(values.size());
  for (int b = 1; b < bins; ++b) {
    const double p = static_cast<double>(b) / static_cast<double>(bins);
    auto rank = static_cast<std::size_t>(std::ceil(p * n));
    rank = std::min(std::max<std::size_t>(rank, 1), values.size()) - 1;
    edges.push_back(values[rank]);
  }
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

// Right-closed: bin i covers (edge[i-1], edge[i]].
int bin_index(const std::vector<double>& edges, double value) {
  const auto it = std::lower_bound(edges.begin(), edges.end(), value);
  return static_cast<int>(it - edges.begin());
}

}  // namespace

GroupSpec build_groups(const std::vector<ObservationRecord>& records, const BinningSpec& spec) {
  if (records.empty()) throw std::invalid_argument("build_groups: empty dataset");
  GroupSpec out;
  out.spec = spec;
  out.num_records = records.size();
  for (const auto& [name, bins] : spec.features) {
    if (bins < 1) throw std::invalid_argument("build_groups: bins must be >= 1");
    std::vector<double> values;
    values.reserve(records.size());
    for (const auto& r : records) values.push_back(observation_feature(r, name));
    out.edges.push_back(quantile_edges(std::move(values), bins));
  }
  std::vector<int> key(spec.features.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (std::size_t f = 0; f < spec.features.size(); ++f) {
      key[f] = bin_index(out.edges[f], observation_feature(records[i], spec.features[f].first));
    }
    out.groups[key].push_back(i);
  }
  return out;
}

EvaluationReport rmae(const GroupSpec& groups, const std::vector<double>& outcomes,
                      const std::vector<double>& predictions, std::string method_label) {
  if (outcomes.size() != groups.num_records || predictions.size() != groups.num_records) {
    throw std::invalid_argument("rmae: outcomes/predictions not aligned with the group spec");
  }
  EvaluationReport report;
  report.method = std::move(method_label);
  double numerator = 0.0;
  double denominator = 0.0;
  for (const auto& [key, members] : groups.groups) {
    GroupRow row;
    row.key = key;
    row.weight = static_cast<double>(members.size());
    double y_sum = 0.0, yhat_sum = 0.0;
    for (std::size_t i : members) {
      y_sum += outcomes[i];
      yhat_sum += predictions[i];
    }
    row.y_mean = y_sum / row.weight;
    row.yhat_mean = yhat_sum / row.weight;
    numerator += row.weight * std::abs(row.yhat_mean - row.y_mean);
    denominator += row.weight * row.y_mean;
    report.rows.push_back(std::move(row));
  }
  if (!(denominator > 0.0)) {
    throw std::runtime_error(
        "rmae: weighted mean outcome is not positive; the relative metric is "
        "undefined for this data");
  }
  report.rmae = numerator / denominator;
  return report;
}

std::vector<double> treatment_grid(double max_treatment, double stride) {
  if (!(stride > 0.0)) throw std::invalid_argument("stride must be positive");
  std::vector<double> grid;
  for (double t = 0.0; t <= max_treatment * (1.0 + 1e-12); t += stride) grid.push_back(t);
  return grid;
}

std::map<CreditRating, SubgroupCurves> ablation_curves(
    const std::vector<MethodPredictor>& methods, const std::vector<ObservationRecord>& records,
    const TestingDesign& design, double stride) {
  std::map<CreditRating, SubgroupCurves> out;
  for (int i = 0; i < kNumRatings; ++i) {
    const auto rating = static_cast<CreditRating>(i);
    SubgroupCurves curves;
    curves.grid = treatment_grid(design.max_treatment(rating), stride);
    for (const auto& m : methods) {
      curves.by_method[m.name] = std::vector<double>(curves.grid.size(), 0.0);
    }
    out[rating] = std::move(curves);
  }
  std::vector<double> buf;
  for (const auto& r : records) {
    SubgroupCurves& curves = out[r.customer.credit_rating];
    curves.count += 1;
    for (const auto& m : methods) {
      auto& acc = curves.by_method[m.name];
      if (m.curve) {
        m.curve(r.customer, curves.grid, buf);
      } else {
        buf.resize(curves.grid.size());
        for (std::size_t g = 0; g < curves.grid.size(); ++g) {
          buf[g] = m.predict(r.customer, curves.grid[g]);
        }
      }
      for (std::size_t g = 0; g < acc.size(); ++g) acc[g] += buf[g];
    }
  }
  for (auto& [rating, curves] : out) {
    if (curves.count == 0) {
      throw std::runtime_error("ablation_curves: empty subgroup " + rating_name(rating));
    }
    for (auto& [name, acc] : curves.by_method) {
      for (double& v : acc) v /= static_cast<double>(curves.count);
    }
  }
  return out;
}

const std::string& partition_factor_name(PartitionFactor factor) {
  static const std::string names[] = {"prob_default", "balance_to_limit", "spend_to_limit"};
  return names[static_cast<std::size_t>(factor)];
}

double partition_value(const CustomerRecord& record, PartitionFactor factor) {
  switch (factor) {
    case PartitionFactor::kProbDefault: return record.prob_default;
    case PartitionFactor::kBalanceToLimit: return record.avg_balance_6m / record.current_limit;
    case PartitionFactor::kSpendToLimit: return record.avg_spend_6m / record.current_limit;
  }
  return 0.0;
}

Partition quantile_partition(const std::vector<ObservationRecord>& records,
                             PartitionFactor factor, int cells) {
  if (cells < 1) throw std::invalid_argument("quantile_partition: cells must be >= 1");
  std::vector<double> values;
  values.reserve(records.size());
  for (const auto& r : records) values.push_back(partition_value(r.customer, factor));
  return {factor, quantile_edges(std::move(values), cells)};
}

PartitionCurves partial_dependence(const MethodPredictor& method,
                                   const std::vector<ObservationRecord>& records,
                                   const Partition& partition, const std::vector<double>& grid) {
  for (std::size_t i = 1; i < partition.edges.size(); ++i) {
    if (!(partition.edges[i] > partition.edges[i - 1])) {
      throw std::invalid_argument("partial_dependence: edges must be strictly increasing");
    }
  }
  const std::size_t cells = partition.edges.size() + 1;
  PartitionCurves out;
  out.grid = grid;
  out.cell_curves.assign(cells, std::vector<double>(grid.size(), 0.0));
  out.cell_counts.assign(cells, 0);
  std::vector<double> buf;
  for (const auto& r : records) {
    const auto cell = static_cast<std::size_t>(
        bin_index(partition.edges, partition_value(r.customer, partition.factor)));
    out.cell_counts[cell] += 1;
    if (method.curve) {
      method.curve(r.customer, grid, buf);
    } else {
      buf.resize(grid.size());
      for (std::size_t g = 0; g < grid.size(); ++g) buf[g] = method.predict(r.customer, grid[g]);
    }
    auto& acc = out.cell_curves[cell];
    for (std::size_t g = 0; g < grid.size(); ++g) acc[g] += buf[g];
  }
  for (std::size_t cell = 0; cell < cells; ++cell) {
    if (out.cell_counts[cell] == 0) {
      throw std::runtime_error("partial_dependence: empty partition cell " +
                               std::to_string(cell));
    }
    for (double& v : out.cell_curves[cell]) v /= static_cast<double>(out.cell_counts[cell]);
  }
  return out;
}

}  // namespace climit
