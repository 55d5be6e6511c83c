#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "climit/design.hpp"
#include "climit/domain.hpp"
#include "climit/rng.hpp"

namespace climit {

// Knobs for the synthetic customer population.
struct PopulationParams {
  double prime_fraction = 0.3;
  // Sub-prime rating mix (VeryGood, Good, Fair, Poor), normalized at use.
  double subprime_mix[4] = {0.3, 0.3, 0.2, 0.2};
  // Prime customers above this avg_spend_6m quantile are labelled high demand.
  double demand_split_quantile = 0.5;
};

// Noiseless response: a(L) + b(L) * ln(1 + T / k_true), with
//   a(L) = base_intercept + base_balance*avg_balance_6m + base_spend*avg_spend_6m
//          + base_risk_interaction*prob_default*avg_balance_6m
//   b(L) = gain_scale * softplus(gain_bias + gain_prob_default*prob_default
//          + gain_balance_ratio*(avg_balance_6m/current_limit)
//          + gain_spend_ratio*(avg_spend_6m/current_limit)
//          + gain_risk_step*tier(prob_default))
// where tier counts the risk-band cutoffs below prob_default.
// The softplus keeps b >= 0, so responses are nondecreasing and concave in T.
// Gain rises with risk, utilization and spend intensity.
struct GroundTruth {
  double k_true = 1.0;        // scaled treatment units; deliberately not the model's k
  double noise_sigma = 20000.0;
  double base_intercept = 4000.0;
  double base_balance = 75.0;
  double base_spend = 50.0;
  double base_risk_interaction = 1000.0;
  double gain_scale = 3.6e6;
  double gain_bias = -1.3;
  double gain_prob_default = 10.0;
  double gain_balance_ratio = 0.3;
  double gain_spend_ratio = 0.3;
  double gain_risk_step = 0.85;
};

double base_level(const GroundTruth& gt, const CustomerRecord& record);      // a(L)
double gain_coefficient(const GroundTruth& gt, const CustomerRecord& record);  // b(L) >= 0

// Throws on negative treatment.
double true_response(const GroundTruth& gt, const CustomerRecord& record, double treatment);

// true_response plus centered gaussian noise.
double sample_outcome(const GroundTruth& gt, const CustomerRecord& record, double treatment,
                      Rng& rng);

// Correlated synthetic population: prob_default banded by rating (Poor
// highest), log-normal spends/balances sharing a latent quality factor,
// limits tied to rating. Prime demand labels split at the configured
// quantile of avg_spend_6m.
std::vector<CustomerRecord> generate_population(std::size_t n, std::uint64_t seed,
                                                const PopulationParams& params = {});

struct Dataset {
  std::vector<ObservationRecord> train;
  std::vector<ObservationRecord> test;
};

// Population -> design assignment -> noisy outcomes -> Bernoulli split.
Dataset build_dataset(std::size_t n, const TestingDesign& design, const GroundTruth& gt,
                      std::uint64_t seed, double split_fraction,
                      const PopulationParams& params = {});

}  // namespace climit
