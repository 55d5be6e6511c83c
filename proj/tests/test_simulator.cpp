#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "climit/simulator.hpp"

using namespace climit;

namespace {

CustomerRecord typical_customer() {
  CustomerRecord r;
  r.customer_id = "C1";
  r.prob_default = 0.10;
  r.credit_rating = CreditRating::kFair;
  r.avg_spend_3m = 600.0;
  r.avg_spend_6m = 650.0;
  r.max_spend_12m = 1500.0;
  r.avg_balance_3m = 800.0;
  r.avg_balance_6m = 850.0;
  r.current_limit = 6000.0;
  return r;
}

}  // namespace

TEST_CASE("noiseless response closed forms") {
  const GroundTruth gt;
  const CustomerRecord r = typical_customer();

  const double a = base_level(gt, r);
  const double b = gain_coefficient(gt, r);
  CHECK(b >= 0.0);

  CHECK(true_response(gt, r, 0.0) == doctest::Approx(a));
  CHECK(true_response(gt, r, gt.k_true) == doctest::Approx(a + b * std::log(2.0)));
  CHECK_THROWS_AS(true_response(gt, r, -1.0), std::invalid_argument);
}

TEST_CASE("response is increasing and concave in treatment") {
  const GroundTruth gt;
  const CustomerRecord r = typical_customer();
  double prev = true_response(gt, r, 0.0);
  double prev_diff = -1.0;
  for (double t = 2.0; t <= 60.0; t += 2.0) {
    const double y = true_response(gt, r, t);
    const double diff = y - prev;
    CHECK(diff > 0.0);
    if (prev_diff > 0.0) CHECK(diff < prev_diff);
    prev_diff = diff;
    prev = y;
  }
}

TEST_CASE("gain rises with risk") {
  const GroundTruth gt;
  CustomerRecord lo = typical_customer();
  CustomerRecord hi = typical_customer();
  lo.prob_default = 0.01;
  hi.prob_default = 0.30;
  CHECK(gain_coefficient(gt, hi) > gain_coefficient(gt, lo));

  // Monotone along a fine sweep, staircase tiers included.
  double prev = -1.0;
  for (double pd = 0.0; pd <= 0.5; pd += 0.005) {
    CustomerRecord r = typical_customer();
    r.prob_default = pd;
    const double b = gain_coefficient(gt, r);
    CHECK(b >= prev);
    prev = b;
  }
}

TEST_CASE("gain rises with utilization and spend intensity") {
  const GroundTruth gt;
  CustomerRecord base = typical_customer();
  CustomerRecord util = base;
  util.avg_balance_6m *= 3.0;
  CustomerRecord spend = base;
  spend.avg_spend_6m *= 3.0;
  CHECK(gain_coefficient(gt, util) > gain_coefficient(gt, base));
  CHECK(gain_coefficient(gt, spend) > gain_coefficient(gt, base));
}

TEST_CASE("zero noise gives the exact structural response") {
  GroundTruth gt;
  gt.noise_sigma = 0.0;
  const CustomerRecord r = typical_customer();
  Rng rng(5);
  CHECK(sample_outcome(gt, r, 20.0, rng) == true_response(gt, r, 20.0));
}

TEST_CASE("noise is centered with the configured spread") {
  GroundTruth gt;
  const CustomerRecord r = typical_customer();
  const double truth = true_response(gt, r, 10.0);
  Rng rng(77);
  const int n = 200000;
  double sum = 0.0, ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = sample_outcome(gt, r, 10.0, rng) - truth;
    sum += d;
    ss += d * d;
  }
  const double mean = sum / n;
  const double var = ss / n - mean * mean;
  CHECK(std::abs(mean) < 5.0 * gt.noise_sigma / std::sqrt(static_cast<double>(n)));
  CHECK(var == doctest::Approx(gt.noise_sigma * gt.noise_sigma).epsilon(0.05));
}

TEST_CASE("population honors the rating risk bands") {
  const auto records = generate_population(20000, 42);
  REQUIRE(records.size() == 20000);

  double pd_lo[kNumRatings], pd_hi[kNumRatings];
  std::size_t counts[kNumRatings] = {};
  for (int i = 0; i < kNumRatings; ++i) {
    pd_lo[i] = 1.0;
    pd_hi[i] = 0.0;
  }
  for (const auto& r : records) {
    validate_record(r);
    const int s = static_cast<int>(r.credit_rating);
    counts[s] += 1;
    pd_lo[s] = std::min(pd_lo[s], r.prob_default);
    pd_hi[s] = std::max(pd_hi[s], r.prob_default);
  }
  for (int i = 0; i < kNumRatings; ++i) CHECK(counts[i] > 0);

  // Sub-prime risk ordering: each band sits above the previous one.
  CHECK(pd_hi[static_cast<int>(CreditRating::kPoor)] >
        pd_hi[static_cast<int>(CreditRating::kFair)]);
  CHECK(pd_hi[static_cast<int>(CreditRating::kFair)] >
        pd_hi[static_cast<int>(CreditRating::kGood)]);
  CHECK(pd_hi[static_cast<int>(CreditRating::kGood)] >
        pd_hi[static_cast<int>(CreditRating::kVeryGood)]);
  CHECK(pd_hi[static_cast<int>(CreditRating::kPrimeHigh)] <
        pd_lo[static_cast<int>(CreditRating::kPoor)]);
}

TEST_CASE("prime demand labels split at the spend quantile") {
  const auto records = generate_population(20000, 42);
  double high_min = 1e300, low_max = -1e300;
  for (const auto& r : records) {
    if (r.credit_rating == CreditRating::kPrimeHigh) {
      high_min = std::min(high_min, r.avg_spend_6m);
    } else if (r.credit_rating == CreditRating::kPrimeLow) {
      low_max = std::max(low_max, r.avg_spend_6m);
    }
  }
  CHECK(low_max <= high_min);
}

TEST_CASE("population generation is deterministic") {
  const auto a = generate_population(5000, 9);
  const auto b = generate_population(5000, 9);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].customer_id == b[i].customer_id);
    CHECK(a[i].prob_default == b[i].prob_default);
    CHECK(a[i].avg_spend_6m == b[i].avg_spend_6m);
    CHECK(a[i].credit_rating == b[i].credit_rating);
  }
  CHECK(generate_population(0, 9).empty());
}

TEST_CASE("build_dataset splits, assigns on menu and is deterministic") {
  const TestingDesign design = default_design();
  const GroundTruth gt;
  const auto ds = build_dataset(10000, design, gt, 42, 0.5);

  CHECK(ds.train.size() + ds.test.size() == 10000);
  CHECK(std::abs(static_cast<double>(ds.train.size()) - 5000.0) < 200.0);

  for (const auto& obs : ds.train) {
    CHECK(design.on_menu(obs.customer.credit_rating, obs.treatment));
  }

  const auto ds2 = build_dataset(10000, design, gt, 42, 0.5);
  REQUIRE(ds2.train.size() == ds.train.size());
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    CHECK(ds.train[i].treatment == ds2.train[i].treatment);
    CHECK(ds.train[i].outcome == ds2.train[i].outcome);
  }

  CHECK_THROWS_AS(build_dataset(10, design, gt, 42, 1.5), std::invalid_argument);
}
