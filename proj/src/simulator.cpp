#include "climit/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace climit {

namespace {

double softplus(double x) {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

struct RatingProfile {
  double pd_lo, pd_hi;      // prob_default band
  double mu_spend;          // log-scale location of avg_spend_6m
  double mu_balance;
  double base_limit;
};

// Prime bands are shared by both demand levels; the split happens later.
const RatingProfile& profile(CreditRating rating) {
  static const RatingProfile profiles[kNumRatings] = {
      /* VeryGood  */ {0.01, 0.06, 6.8, 6.9, 15000.0},
      /* Good      */ {0.03, 0.10, 6.6, 6.8, 10000.0},
      /* Fair      */ {0.06, 0.20, 6.4, 6.7, 6000.0},
      /* Poor      */ {0.12, 0.40, 6.2, 6.6, 3000.0},
      /* PrimeHigh */ {0.002, 0.03, 7.3, 7.2, 30000.0},
      /* PrimeLow  */ {0.002, 0.03, 7.3, 7.2, 30000.0},
  };
  return profiles[static_cast<std::size_t>(rating)];
}

}  // namespace

double base_level(const GroundTruth& gt, const CustomerRecord& record) {
  return gt.base_intercept + gt.base_balance * record.avg_balance_6m +
         gt.base_spend * record.avg_spend_6m +
         gt.base_risk_interaction * record.prob_default * record.avg_balance_6m;
}

double gain_coefficient(const GroundTruth& gt, const CustomerRecord& record) {
  const double balance_ratio = record.avg_balance_6m / record.current_limit;
  const double spend_ratio = record.avg_spend_6m / record.current_limit;
  // Risk-tier cutoffs: response jumps at score-band boundaries.
  static const double kRiskTiers[] = {0.02, 0.04, 0.08, 0.15, 0.25};
  double tier = 0.0;
  for (double t : kRiskTiers) {
    if (record.prob_default > t) tier += 1.0;
  }
  const double score = gt.gain_bias + gt.gain_prob_default * record.prob_default +
                       gt.gain_balance_ratio * balance_ratio +
                       gt.gain_spend_ratio * spend_ratio + gt.gain_risk_step * tier;
  return gt.gain_scale * softplus(score);
}

double true_response(const GroundTruth& gt, const CustomerRecord& record, double treatment) {
  if (treatment < 0.0) {
    throw std::invalid_argument("negative treatment");
  }
  return base_level(gt, record) +
         gain_coefficient(gt, record) * std::log1p(treatment / gt.k_true);
}

double sample_outcome(const GroundTruth& gt, const CustomerRecord& record, double treatment,
                      Rng& rng) {
  return true_response(gt, record, treatment) + rng.normal(0.0, gt.noise_sigma);
}

std::vector<CustomerRecord> generate_population(std::size_t n, std::uint64_t seed,
                                                const PopulationParams& params) {
  std::vector<CustomerRecord> records;
  records.reserve(n);
  Rng rng(seed);

  double mix_sum = 0.0;
  for (double m : params.subprime_mix) mix_sum += m;
  std::vector<double> subprime_probs;
  for (double m : params.subprime_mix) subprime_probs.push_back(m / mix_sum);

  std::vector<std::size_t> prime_indices;
  for (std::size_t i = 0; i < n; ++i) {
    CustomerRecord r;
    r.customer_id = "C" + std::to_string(1000000 + i);
    const bool prime = rng.uniform() < params.prime_fraction;
    if (prime) {
      r.credit_rating = CreditRating::kPrimeHigh;  // provisional; split below
      prime_indices.push_back(i);
    } else {
      r.credit_rating = static_cast<CreditRating>(rng.categorical(subprime_probs));
    }
    const RatingProfile& p = profile(r.credit_rating);
    r.prob_default = rng.uniform(p.pd_lo, p.pd_hi);

    // Shared latent quality drives the spend/balance/limit correlation.
    const double z = rng.normal();
    r.avg_spend_6m = std::exp(p.mu_spend + 0.7 * z + 0.4 * rng.normal());
    r.avg_spend_3m = r.avg_spend_6m * std::exp(0.25 * rng.normal());
    r.max_spend_12m = r.avg_spend_6m * std::exp(0.2 + 0.5 * std::abs(rng.normal()));
    r.avg_balance_6m = std::exp(p.mu_balance + 0.6 * z + 0.5 * rng.normal());
    r.avg_balance_3m = r.avg_balance_6m * std::exp(0.25 * rng.normal());
    r.current_limit = p.base_limit * std::exp(0.4 * z + 0.3 * rng.normal());
    records.push_back(std::move(r));
  }

  if (!prime_indices.empty()) {
    std::vector<double> spends;
    spends.reserve(prime_indices.size());
    for (std::size_t i : prime_indices) spends.push_back(records[i].avg_spend_6m);
    std::sort(spends.begin(), spends.end());
    const double q = std::clamp(params.demand_split_quantile, 0.0, 1.0);
    std::size_t pos = static_cast<std::size_t>(q * static_cast<double>(spends.size()));
    pos = std::min(pos, spends.size() - 1);
    const double threshold = spends[pos];
    for (std::size_t i : prime_indices) {
      records[i].credit_rating = records[i].avg_spend_6m > threshold
                                     ? CreditRating::kPrimeHigh
                                     : CreditRating::kPrimeLow;
    }
  }
  return records;
}

Dataset build_dataset(std::size_t n, const TestingDesign& design, const GroundTruth& gt,
                      std::uint64_t seed, double split_fraction,
                      const PopulationParams& params) {
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw std::invalid_argument("split_fraction must be in (0,1)");
  }
  Rng root(seed);
  auto population = generate_population(n, seed, params);
  Rng assign_rng = root.fork(1);
  Rng outcome_rng = root.fork(2);
  Rng split_rng = root.fork(3);

  Dataset ds;
  for (auto& customer : population) {
    ObservationRecord obs;
    obs.treatment = assign_treatment(design, customer, assign_rng);
    obs.outcome = sample_outcome(gt, customer, obs.treatment, outcome_rng);
    obs.customer = std::move(customer);
    if (split_rng.uniform() < split_fraction) {
      ds.train.push_back(std::move(obs));
    } else {
      ds.test.push_back(std::move(obs));
    }
  }
  return ds;
}

}  // namespace climit
