#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "climit/evaluation.hpp"
#include "climit/gbdt.hpp"
#include "climit/io.hpp"
#include "climit/response.hpp"
#include "climit/simulator.hpp"

namespace climit {

// Bad configuration or bad user input; the CLI maps this to exit code 1
// (other failures exit 2).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All defaults reproduce the published setup: 50 trees of depth 3,
// k = 20000 raw currency units, regularization strength 100. Treatments and
// k live in scaled units internally; unit_multiplier converts scaled units
// to currency (scaled = raw / unit_multiplier).
struct RunConfig {
  std::uint64_t seed = 42;
  std::size_t population = 100000;
  double split_fraction = 0.5;
  double unit_multiplier = 1000.0;
  double k_raw = 20000.0;
  double stride_raw = 1000.0;
  double lambda = 100.0;
  GbdtParams gbdt;  // 50 trees, depth 3, lr 0.1, min leaf 20
  std::vector<std::string> variants = {"linear",     "single_gbdt",   "or",
                                       "or_log",     "enc_or",        "enc_or_log",
                                       "enc_or_log_l2", "enc_or_log_l1"};
  int group_bins = 9;
  int pdp_cells = 3;
  GroundTruth ground_truth;
  PopulationParams population_params;
  std::string design_file;  // empty: default_design()
  std::string out_dir = "out";

  double k_scaled() const { return k_raw / unit_multiplier; }
  double stride_scaled() const { return stride_raw / unit_multiplier; }
};

// Flat "key = value" file, '#' comments. Unknown keys raise.
RunConfig load_config(const std::string& path);
void apply_config_line(RunConfig& config, const std::string& key, const std::string& value);
void validate_config(const RunConfig& config);

// Method names of the ablation, in report order.
const std::vector<std::string>& known_variants();

FitSpec fit_spec_for(const std::string& variant, const RunConfig& config);

FittedMethod train_method(const std::string& variant, const RunConfig& config,
                          const std::vector<ObservationRecord>& train);

// Noiseless ground truth as a predictor, for oracle columns in the outputs.
MethodPredictor oracle_predictor(const GroundTruth& gt);

// Pipeline stages. Each is a pure function of (config, input files); outputs
// are byte-stable. Manifest hashes in <out>/manifest.json guard against
// input drift between stages.
void cmd_simulate(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_evaluate(const RunConfig& config);
void cmd_curves(const RunConfig& config);

}  // namespace climit
