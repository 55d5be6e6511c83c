#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "climit/evaluation.hpp"
#include "climit/simulator.hpp"

using namespace climit;

namespace {

ObservationRecord obs_with(double treatment, double limit = 1000.0) {
  ObservationRecord o;
  o.customer.customer_id = "C1";
  o.customer.prob_default = 0.05;
  o.customer.credit_rating = CreditRating::kGood;
  o.customer.avg_spend_3m = 100.0;
  o.customer.avg_spend_6m = 110.0;
  o.customer.max_spend_12m = 300.0;
  o.customer.avg_balance_3m = 150.0;
  o.customer.avg_balance_6m = 160.0;
  o.customer.current_limit = limit;
  o.treatment = treatment;
  return o;
}

std::vector<ObservationRecord> menu_population(std::size_t n, std::uint64_t seed) {
  const auto customers = generate_population(n, seed);
  const double menu[] = {0, 5, 10, 20, 30};
  std::vector<ObservationRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    ObservationRecord o;
    o.customer = customers[i];
    o.treatment = menu[i % 5];
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace

TEST_CASE("observation_feature resolves names") {
  const ObservationRecord o = obs_with(17.0);
  CHECK(observation_feature(o, "current_limit") == 1000.0);
  CHECK(observation_feature(o, "treatment") == 17.0);
  CHECK(observation_feature(o, "prob_default") == 0.05);
  CHECK_THROWS_AS(observation_feature(o, "fico_score"), std::invalid_argument);
}

TEST_CASE("grouped relative error by hand") {
  // Two groups: sizes 2 and 3, split by the treatment median with right-closed
  // bins. Group means (y, yhat): (10, 12) and (20, 17).
  std::vector<ObservationRecord> records = {obs_with(2), obs_with(2), obs_with(1),
                                            obs_with(1), obs_with(1)};
  const GroupSpec groups = build_groups(records, {{{"treatment", 2}}});
  REQUIRE(groups.groups.size() == 2);
  REQUIRE(groups.edges.size() == 1);
  CHECK(groups.edges[0] == std::vector<double>{1.0});
  CHECK(groups.groups.at({0}).size() == 3);  // treatment == 1 sits on the edge
  CHECK(groups.groups.at({1}).size() == 2);

  const std::vector<double> y = {10, 10, 20, 20, 20};
  const std::vector<double> yhat = {12, 12, 17, 17, 17};
  const EvaluationReport report = rmae(groups, y, yhat, "hand");
  // (2*|12-10| + 3*|17-20|) / (2*10 + 3*20) = 13/80.
  CHECK(report.rmae == 13.0 / 80.0);
  CHECK(report.method == "hand");

  double weight_sum = 0.0;
  for (const auto& row : report.rows) weight_sum += row.weight;
  CHECK(weight_sum == 5.0);

  CHECK(rmae(groups, y, y).rmae == 0.0);
}

TEST_CASE("single group collapses to a plain relative error") {
  std::vector<ObservationRecord> records = {obs_with(1), obs_with(2), obs_with(3)};
  const GroupSpec groups = build_groups(records, {{{"treatment", 1}}});
  REQUIRE(groups.groups.size() == 1);
  const EvaluationReport report = rmae(groups, {10, 20, 30}, {11, 19, 33});
  // |21 - 20| / 20 on the group means.
  CHECK(report.rmae == doctest::Approx(1.0 / 20.0));
}

TEST_CASE("rmae matches a brute-force recomputation") {
  auto records = menu_population(100, 77);
  const GroundTruth gt;
  Rng rng(5);
  std::vector<double> y, yhat;
  for (auto& o : records) {
    o.outcome = sample_outcome(gt, o.customer, o.treatment, rng);
    y.push_back(o.outcome);
    yhat.push_back(o.outcome * rng.uniform(0.8, 1.2));
  }
  const BinningSpec spec{{{"prob_default", 3}, {"avg_balance_6m", 3}}};
  const GroupSpec groups = build_groups(records, spec);
  const EvaluationReport report = rmae(groups, y, yhat);

  // Independent pass: assign bins directly from the published edges.
  std::map<std::vector<int>, std::pair<std::vector<double>, std::vector<double>>> acc;
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::vector<int> key;
    for (std::size_t f = 0; f < spec.features.size(); ++f) {
      const double v = observation_feature(records[i], spec.features[f].first);
      int bin = 0;
      for (double edge : groups.edges[f]) {
        if (v > edge) bin += 1;
      }
      key.push_back(bin);
    }
    acc[key].first.push_back(y[i]);
    acc[key].second.push_back(yhat[i]);
  }
  REQUIRE(acc.size() == report.rows.size());
  double num = 0.0, den = 0.0;
  for (const auto& [key, pair] : acc) {
    const double w = static_cast<double>(pair.first.size());
    double ym = 0.0, pm = 0.0;
    for (double v : pair.first) ym += v;
    for (double v : pair.second) pm += v;
    ym /= w;
    pm /= w;
    num += w * std::abs(pm - ym);
    den += w * ym;
  }
  CHECK(report.rmae == doctest::Approx(num / den).epsilon(1e-12));

  // Relative metric: common rescaling leaves it unchanged.
  std::vector<double> y_scaled = y, yhat_scaled = yhat;
  for (double& v : y_scaled) v *= 7.3;
  for (double& v : yhat_scaled) v *= 7.3;
  CHECK(rmae(groups, y_scaled, yhat_scaled).rmae == doctest::Approx(report.rmae).epsilon(1e-12));
}

TEST_CASE("rmae rejects bad inputs") {
  std::vector<ObservationRecord> records = {obs_with(1), obs_with(2)};
  const GroupSpec groups = build_groups(records, {{{"treatment", 2}}});
  CHECK_THROWS_AS(rmae(groups, {1.0}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(rmae(groups, {-5.0, -7.0}, {1.0, 2.0}), std::runtime_error);
  CHECK_THROWS_AS(build_groups({}, default_binning()), std::invalid_argument);
  CHECK_THROWS_AS(build_groups(records, {{{"treatment", 0}}}), std::invalid_argument);
}

TEST_CASE("default binning partitions every record exactly once") {
  const auto records = menu_population(2000, 11);
  const GroupSpec groups = build_groups(records, default_binning());
  REQUIRE(groups.spec.features.size() == 4);
  CHECK(groups.num_records == 2000);
  std::size_t total = 0;
  std::vector<char> seen(records.size(), 0);
  for (const auto& [key, members] : groups.groups) {
    REQUIRE(key.size() == 4);
    CHECK_FALSE(members.empty());
    for (std::size_t i : members) {
      CHECK_FALSE(seen[i]);
      seen[i] = 1;
    }
    total += members.size();
  }
  CHECK(total == 2000);
  CHECK(groups.groups.size() > 100);  // joint bins genuinely stratify
}

TEST_CASE("treatment grid") {
  CHECK(treatment_grid(300.0, 100.0) == std::vector<double>{0, 100, 200, 300});
  CHECK(treatment_grid(30.0, 7.0) == std::vector<double>{0, 7, 14, 21, 28});
  CHECK(treatment_grid(0.0, 5.0) == std::vector<double>{0});
  CHECK_THROWS_AS(treatment_grid(10.0, 0.0), std::invalid_argument);
}

TEST_CASE("ablation curves average per subgroup") {
  const auto records = menu_population(600, 21);
  const TestingDesign design = default_design();

  MethodPredictor linear{"linear",
                         [](const CustomerRecord& c, double t) {
                           return 0.001 * c.avg_balance_6m + 2.0 * t;
                         },
                         nullptr};
  MethodPredictor log_model{"log",
                            [](const CustomerRecord& c, double t) {
                              return c.prob_default + 100.0 * std::log1p(t / 20.0);
                            },
                            nullptr};
  const auto curves = ablation_curves({linear, log_model}, records, design, 10.0);
  REQUIRE(curves.size() == kNumRatings);

  const SubgroupCurves& poor = curves.at(CreditRating::kPoor);
  CHECK(poor.grid.front() == 0.0);
  CHECK(poor.grid.back() == design.max_treatment(CreditRating::kPoor));
  const SubgroupCurves& prime = curves.at(CreditRating::kPrimeHigh);
  CHECK(prime.grid.back() == 300.0);

  for (const auto& [rating, sub] : curves) {
    CHECK(sub.count > 0);
    // Shared slope: consecutive grid steps add exactly 2 * stride.
    const auto& lin = sub.by_method.at("linear");
    for (std::size_t g = 1; g < lin.size(); ++g) {
      CHECK(lin[g] - lin[g - 1] == doctest::Approx(20.0));
    }
    // Concave nondecreasing log curve.
    const auto& lg = sub.by_method.at("log");
    for (std::size_t g = 1; g < lg.size(); ++g) {
      CHECK(lg[g] > lg[g - 1]);
      if (g >= 2) CHECK(lg[g] - lg[g - 1] < lg[g - 1] - lg[g - 2]);
    }
  }

  // A curve callback must agree with pointwise prediction.
  MethodPredictor with_curve = linear;
  with_curve.curve = [&](const CustomerRecord& c, const std::vector<double>& grid,
                         std::vector<double>& out) {
    out.resize(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) out[g] = linear.predict(c, grid[g]);
  };
  const auto again = ablation_curves({with_curve}, records, design, 10.0);
  for (const auto& [rating, sub] : curves) {
    CHECK(again.at(rating).by_method.at("linear") == sub.by_method.at("linear"));
  }

  // Every subgroup must be represented.
  std::vector<ObservationRecord> partial;
  for (const auto& r : records) {
    if (r.customer.credit_rating != CreditRating::kPoor) partial.push_back(r);
  }
  CHECK_THROWS_WITH(ablation_curves({linear}, partial, design, 10.0),
                    doctest::Contains("Poor"));
}

TEST_CASE("partition helpers") {
  CHECK(partition_factor_name(PartitionFactor::kBalanceToLimit) == "balance_to_limit");
  ObservationRecord o = obs_with(0.0, 2000.0);
  o.customer.avg_balance_6m = 500.0;
  o.customer.avg_spend_6m = 100.0;
  CHECK(partition_value(o.customer, PartitionFactor::kBalanceToLimit) == 0.25);
  CHECK(partition_value(o.customer, PartitionFactor::kSpendToLimit) == 0.05);
  CHECK(partition_value(o.customer, PartitionFactor::kProbDefault) == 0.05);

  const auto records = menu_population(900, 31);
  const Partition tertiles = quantile_partition(records, PartitionFactor::kProbDefault, 3);
  REQUIRE(tertiles.edges.size() == 2);
  CHECK(tertiles.edges[0] < tertiles.edges[1]);
  CHECK_THROWS_AS(quantile_partition(records, PartitionFactor::kProbDefault, 0),
                  std::invalid_argument);
}

TEST_CASE("partial dependence averages within cells") {
  const auto records = menu_population(900, 41);
  const std::vector<double> grid = {0.0, 10.0, 20.0, 30.0};

  MethodPredictor risk_scaled{"risk",
                              [](const CustomerRecord& c, double t) {
                                return c.prob_default * t;
                              },
                              nullptr};

  // A single cell is the plain average over all records.
  const PartitionCurves whole =
      partial_dependence(risk_scaled, records, {PartitionFactor::kProbDefault, {}}, grid);
  REQUIRE(whole.cell_curves.size() == 1);
  CHECK(whole.cell_counts[0] == records.size());
  double pd_mean = 0.0;
  for (const auto& r : records) pd_mean += r.customer.prob_default;
  pd_mean /= static_cast<double>(records.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CHECK(whole.cell_curves[0][g] == doctest::Approx(pd_mean * grid[g]));
  }

  // Tertiles on the same factor order the curves cell by cell.
  const Partition tertiles = quantile_partition(records, PartitionFactor::kProbDefault, 3);
  const PartitionCurves cells = partial_dependence(risk_scaled, records, tertiles, grid);
  REQUIRE(cells.cell_curves.size() == 3);
  for (std::size_t cell = 0; cell < 3; ++cell) CHECK(cells.cell_counts[cell] > 0);
  for (std::size_t g = 1; g < grid.size(); ++g) {
    CHECK(cells.cell_curves[0][g] < cells.cell_curves[1][g]);
    CHECK(cells.cell_curves[1][g] < cells.cell_curves[2][g]);
  }

  // An edge beyond the data leaves its upper cell empty.
  CHECK_THROWS_AS(
      partial_dependence(risk_scaled, records, {PartitionFactor::kProbDefault, {10.0}}, grid),
      std::runtime_error);
  CHECK_THROWS_AS(
      partial_dependence(risk_scaled, records, {PartitionFactor::kProbDefault, {0.2, 0.1}}, grid),
      std::invalid_argument);
}
