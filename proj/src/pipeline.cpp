#include "climit/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace climit {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& known_variants() {
  static const std::vector<std::string> names = {"linear",     "single_gbdt", "or",
                                                 "or_log",     "enc_or",      "enc_or_log",
                                                 "enc_or_log_l2", "enc_or_log_l1"};
  return names;
}

RunConfig load_config(const std::string& path) {
  RunConfig config;
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw ValidationError("config line " + std::to_string(line_no) +
                              ": expected 'key = value'");
      }
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r\"");
      const auto e = s.find_last_not_of(" \t\r\"");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    try {
      apply_config_line(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw ValidationError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

void apply_config_line(RunConfig& c, const std::string& key, const std::string& value) {
  auto as_double = [&] { return std::stod(value); };
  auto as_int = [&] { return std::stoi(value); };
  if (key == "seed") c.seed = std::stoull(value);
  else if (key == "population") c.population = std::stoull(value);
  else if (key == "split_fraction") c.split_fraction = as_double();
  else if (key == "unit_multiplier") c.unit_multiplier = as_double();
  else if (key == "k") c.k_raw = as_double();
  else if (key == "stride") c.stride_raw = as_double();
  else if (key == "lambda") c.lambda = as_double();
  else if (key == "gbdt_num_trees") c.gbdt.num_trees = as_int();
  else if (key == "gbdt_max_depth") c.gbdt.max_depth = as_int();
  else if (key == "gbdt_learning_rate") c.gbdt.learning_rate = as_double();
  else if (key == "gbdt_min_samples_leaf") c.gbdt.min_samples_leaf = as_int();
  else if (key == "group_bins") c.group_bins = as_int();
  else if (key == "pdp_cells") c.pdp_cells = as_int();
  else if (key == "sim_k_true") c.ground_truth.k_true = as_double();
  else if (key == "sim_noise_sigma") c.ground_truth.noise_sigma = as_double();
  else if (key == "sim_gain_scale") c.ground_truth.gain_scale = as_double();
  else if (key == "sim_prime_fraction") c.population_params.prime_fraction = as_double();
  else if (key == "sim_demand_split_quantile")
    c.population_params.demand_split_quantile = as_double();
  else if (key == "design_file") c.design_file = value;
  else if (key == "out_dir") c.out_dir = value;
  else if (key == "variants") {
    c.variants.clear();
    std::istringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      if (b != std::string::npos) c.variants.push_back(item.substr(b, e - b + 1));
    }
  } else {
    throw ValidationError("unknown config key '" + key + "'");
  }
}

void validate_config(const RunConfig& c) {
  if (c.population < 1) throw ValidationError("population must be >= 1");
  if (!(c.split_fraction > 0.0 && c.split_fraction < 1.0)) {
    throw ValidationError("split_fraction must be in (0,1)");
  }
  if (!(c.unit_multiplier > 0.0)) throw ValidationError("unit_multiplier must be positive");
  if (!(c.k_raw > 0.0)) throw ValidationError("k must be positive");
  if (!(c.stride_raw > 0.0)) throw ValidationError("stride must be positive");
  if (c.lambda < 0.0) throw ValidationError("lambda must be nonnegative");
  if (c.gbdt.num_trees < 0) throw ValidationError("gbdt_num_trees must be nonnegative");
  if (c.gbdt.max_depth < 1) throw ValidationError("gbdt_max_depth must be >= 1");
  if (c.group_bins < 1) throw ValidationError("group_bins must be >= 1");
  if (c.pdp_cells < 1) throw ValidationError("pdp_cells must be >= 1");
  for (const auto& v : c.variants) {
    const auto& known = known_variants();
    if (std::find(known.begin(), known.end(), v) == known.end()) {
      throw ValidationError("unknown variant name '" + v + "'");
    }
  }
}

FitSpec fit_spec_for(const std::string& variant, const RunConfig& config) {
  FitSpec spec;
  spec.encoder_params = config.gbdt;
  spec.transform = {TransformKind::kIdentity, config.k_scaled()};
  if (variant == "linear") {
    spec.variant = Variant::kLinearRegression;
  } else if (variant == "or") {
    spec.variant = Variant::kOutcomeRegression;
  } else if (variant == "or_log") {
    spec.variant = Variant::kOutcomeRegression;
    spec.transform.kind = TransformKind::kLogShift;
  } else if (variant == "enc_or") {
    spec.variant = Variant::kEncodedOutcomeRegression;
  } else if (variant == "enc_or_log") {
    spec.variant = Variant::kEncodedOutcomeRegression;
    spec.transform.kind = TransformKind::kLogShift;
  } else if (variant == "enc_or_log_l1") {
    spec.variant = Variant::kEncodedOutcomeRegression;
    spec.transform.kind = TransformKind::kLogShift;
    spec.regularization = {RegKind::kL1, config.lambda};
  } else if (variant == "enc_or_log_l2") {
    spec.variant = Variant::kEncodedOutcomeRegression;
    spec.transform.kind = TransformKind::kLogShift;
    spec.regularization = {RegKind::kL2, config.lambda};
  } else {
    throw ValidationError("unknown variant name '" + variant + "'");
  }
  return spec;
}

FittedMethod train_method(const std::string& variant, const RunConfig& config,
                          const std::vector<ObservationRecord>& train) {
  FittedMethod method;
  method.name = variant;
  if (variant == "single_gbdt") {
    SingleGbdtModel sg;
    std::vector<CustomerRecord> customers;
    customers.reserve(train.size());
    for (const auto& obs : train) customers.push_back(obs.customer);
    sg.standardizer = fit_standardizer(customers);

    // Both L and T feed the baseline ensemble; T stays raw.
    auto schema = std::make_shared<Schema>(*encoded_schema());
    schema->push_back("treatment");
    std::vector<FeatureVector> X;
    std::vector<double> y;
    X.reserve(train.size());
    y.reserve(train.size());
    for (const auto& obs : train) {
      FeatureVector x = encode_features(obs.customer, sg.standardizer);
      x.values.push_back(obs.treatment);
      x.schema = schema;
      X.push_back(std::move(x));
      y.push_back(obs.outcome);
    }
    sg.model = fit_gbdt(X, y, config.gbdt);
    method.model = std::move(sg);
  } else {
    method.model = fit_response(train, fit_spec_for(variant, config));
  }
  return method;
}

MethodPredictor oracle_predictor(const GroundTruth& gt) {
  MethodPredictor out;
  out.name = "oracle";
  out.predict = [gt](const CustomerRecord& c, double t) { return true_response(gt, c, t); };
  out.curve = [gt](const CustomerRecord& c, const std::vector<double>& grid,
                   std::vector<double>& values) {
    const double a = base_level(gt, c);
    const double b = gain_coefficient(gt, c);
    values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      values[i] = a + b * std::log1p(grid[i] / gt.k_true);
    }
  };
  return out;
}

namespace {

std::string out_path(const RunConfig& config, const std::string& rel) {
  return (fs::path(config.out_dir) / rel).string();
}

json load_manifest(const RunConfig& config) {
  const auto path = out_path(config, "manifest.json");
  if (!fs::exists(path)) return json::object();
  return json::parse(read_file(path));
}

void save_manifest(const RunConfig& config, const json& manifest) {
  write_file(out_path(config, "manifest.json"), manifest.dump(2) + "\n");
}

void record_hash(json& manifest, const RunConfig& config, const std::string& rel) {
  manifest["files"][rel] = file_hash(out_path(config, rel));
}

void check_input(const json& manifest, const RunConfig& config, const std::string& rel) {
  const auto path = out_path(config, rel);
  if (!fs::exists(path)) {
    throw std::runtime_error("missing input file: " + path +
                             " (run the earlier pipeline stage first)");
  }
  if (manifest.contains("files") && manifest["files"].contains(rel)) {
    const std::string recorded = manifest["files"][rel].get<std::string>();
    if (recorded != file_hash(path)) {
      throw ValidationError("input drift detected: " + rel +
                            " no longer matches the manifest hash");
    }
  }
}

TestingDesign load_design(const RunConfig& config) {
  if (!config.design_file.empty()) {
    return design_from_json(read_file(config.design_file));
  }
  const auto path = out_path(config, "design.json");
  if (fs::exists(path)) return design_from_json(read_file(path));
  return default_design();
}

std::string percent(double fraction) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << 100.0 * fraction << "%";
  return out.str();
}

}  // namespace

void cmd_simulate(const RunConfig& config) {
  validate_config(config);
  fs::create_directories(config.out_dir);
  const TestingDesign design =
      config.design_file.empty() ? default_design()
                                 : design_from_json(read_file(config.design_file));

  const Dataset ds = build_dataset(config.population, design, config.ground_truth, config.seed,
                                   config.split_fraction, config.population_params);
  write_dataset_csv(out_path(config, "train.csv"), ds.train);
  write_dataset_csv(out_path(config, "test.csv"), ds.test);
  write_file(out_path(config, "design.json"), design_to_json(design));
  write_file(out_path(config, "groundtruth.json"),
             ground_truth_to_json(config.ground_truth, config.population_params));

  json manifest;
  manifest["seed"] = config.seed;
  manifest["population"] = config.population;
  manifest["split_fraction"] = config.split_fraction;
  for (const auto& rel : {"train.csv", "test.csv", "design.json", "groundtruth.json"}) {
    record_hash(manifest, config, rel);
  }
  save_manifest(config, manifest);
}

void cmd_train(const RunConfig& config) {
  validate_config(config);
  json manifest = load_manifest(config);
  check_input(manifest, config, "train.csv");
  const TestingDesign design = load_design(config);
  const auto train = read_dataset_csv(out_path(config, "train.csv"), &design);

  fs::create_directories(out_path(config, "models"));
  for (const auto& variant : config.variants) {
    const FittedMethod method = train_method(variant, config, train);
    const std::string rel = "models/" + variant + ".json";
    write_file(out_path(config, rel), method_to_json(method));
    record_hash(manifest, config, rel);
  }
  save_manifest(config, manifest);
}

void cmd_evaluate(const RunConfig& config) {
  validate_config(config);
  json manifest = load_manifest(config);
  check_input(manifest, config, "train.csv");
  check_input(manifest, config, "test.csv");
  const TestingDesign design = load_design(config);

  BinningSpec binning = default_binning();
  for (auto& [name, bins] : binning.features) bins = config.group_bins;

  struct Split {
    std::string name;
    std::vector<ObservationRecord> records;
    GroupSpec groups;
    std::vector<double> outcomes;
  };
  std::vector<Split> splits;
  for (const auto& name : {"train", "test"}) {
    Split s;
    s.name = name;
    s.records = read_dataset_csv(out_path(config, std::string(name) + ".csv"), &design);
    s.groups = build_groups(s.records, binning);
    for (const auto& r : s.records) s.outcomes.push_back(r.outcome);
    splits.push_back(std::move(s));
  }

  fs::create_directories(out_path(config, "reports"));
  // method -> split -> rmae, in canonical report order
  std::vector<std::pair<std::string, std::array<double, 2>>> results;
  for (const auto& variant : known_variants()) {
    if (std::find(config.variants.begin(), config.variants.end(), variant) ==
        config.variants.end()) {
      continue;
    }
    const std::string rel = "models/" + variant + ".json";
    check_input(manifest, config, rel);
    const FittedMethod method = method_from_json(read_file(out_path(config, rel)));
    const MethodPredictor predictor = make_predictor(method);
    std::array<double, 2> rmaes{};
    for (std::size_t si = 0; si < splits.size(); ++si) {
      const Split& s = splits[si];
      std::vector<double> predictions;
      predictions.reserve(s.records.size());
      for (const auto& r : s.records) {
        predictions.push_back(predictor.predict(r.customer, r.treatment));
      }
      const EvaluationReport report = rmae(s.groups, s.outcomes, predictions, variant);
      rmaes[si] = report.rmae;

      std::string csv = "group_key,w,y,y_hat\n";
      for (const auto& row : report.rows) {
        std::string key;
        for (std::size_t k = 0; k < row.key.size(); ++k) {
          if (k > 0) key += '|';
          key += std::to_string(row.key[k]);
        }
        csv += key + "," + format_double(row.weight) + "," + format_double(row.y_mean) + "," +
               format_double(row.yhat_mean) + "\n";
      }
      write_file(out_path(config, "reports/groups_" + s.name + "_" + variant + ".csv"), csv);
    }
    results.emplace_back(variant, rmaes);
  }

  std::string csv = "method,train_rmae,test_rmae\n";
  for (const auto& [name, rmaes] : results) {
    csv += name + "," + format_double(rmaes[0]) + "," + format_double(rmaes[1]) + "\n";
  }
  write_file(out_path(config, "reports/rmae.csv"), csv);

  std::ostringstream table;
  table << std::left << std::setw(18) << "Method" << std::right << std::setw(10) << "Training"
        << std::setw(10) << "Test" << "\n";
  table << std::string(38, '-') << "\n";
  for (const auto& [name, rmaes] : results) {
    table << std::left << std::setw(18) << name << std::right << std::setw(10)
          << percent(rmaes[0]) << std::setw(10) << percent(rmaes[1]) << "\n";
  }
  write_file(out_path(config, "reports/rmae.txt"), table.str());

  record_hash(manifest, config, "reports/rmae.csv");
  record_hash(manifest, config, "reports/rmae.txt");
  save_manifest(config, manifest);
}

void cmd_curves(const RunConfig& config) {
  validate_config(config);
  json manifest = load_manifest(config);
  check_input(manifest, config, "test.csv");
  check_input(manifest, config, "groundtruth.json");
  const TestingDesign design = load_design(config);
  const auto test = read_dataset_csv(out_path(config, "test.csv"), &design);
  const auto [gt, pop] = ground_truth_from_json(read_file(out_path(config, "groundtruth.json")));

  std::vector<MethodPredictor> predictors;
  std::vector<FittedMethod> methods;
  for (const auto& variant : known_variants()) {
    if (std::find(config.variants.begin(), config.variants.end(), variant) ==
        config.variants.end()) {
      continue;
    }
    const std::string rel = "models/" + variant + ".json";
    check_input(manifest, config, rel);
    methods.push_back(method_from_json(read_file(out_path(config, rel))));
    predictors.push_back(make_predictor(methods.back()));
  }
  predictors.push_back(oracle_predictor(gt));

  fs::create_directories(out_path(config, "curves"));
  const auto curves = ablation_curves(predictors, test, design, config.stride_scaled());
  for (const auto& [rating, sub] : curves) {
    std::string csv = "T";
    for (const auto& p : predictors) csv += "," + p.name;
    csv += "\n";
    for (std::size_t g = 0; g < sub.grid.size(); ++g) {
      csv += format_double(sub.grid[g]);
      for (const auto& p : predictors) {
        csv += "," + format_double(sub.by_method.at(p.name)[g]);
      }
      csv += "\n";
    }
    const std::string rel = "curves/subgroup_" + rating_name(rating) + ".csv";
    write_file(out_path(config, rel), csv);
    record_hash(manifest, config, rel);
  }

  // PDPs for the strongest requested method (last in report order) plus the
  // oracle, partitioned by the three heterogeneity factors.
  const MethodPredictor& best = predictors[predictors.size() - 2];
  const MethodPredictor oracle = oracle_predictor(gt);
  const auto grid = treatment_grid(design.max_treatment(), config.stride_scaled());
  for (const auto factor : {PartitionFactor::kProbDefault, PartitionFactor::kBalanceToLimit,
                            PartitionFactor::kSpendToLimit}) {
    const Partition partition = quantile_partition(test, factor, config.pdp_cells);
    const PartitionCurves fitted = partial_dependence(best, test, partition, grid);
    const PartitionCurves truth = partial_dependence(oracle, test, partition, grid);
    std::string csv = "T";
    for (std::size_t cell = 0; cell < fitted.cell_curves.size(); ++cell) {
      csv += "," + best.name + "_cell" + std::to_string(cell);
    }
    for (std::size_t cell = 0; cell < truth.cell_curves.size(); ++cell) {
      csv += ",oracle_cell" + std::to_string(cell);
    }
    csv += "\n";
    for (std::size_t g = 0; g < grid.size(); ++g) {
      csv += format_double(grid[g]);
      for (const auto& cell : fitted.cell_curves) csv += "," + format_double(cell[g]);
      for (const auto& cell : truth.cell_curves) csv += "," + format_double(cell[g]);
      csv += "\n";
    }
    const std::string rel = "curves/pdp_" + partition_factor_name(factor) + ".csv";
    write_file(out_path(config, rel), csv);
    record_hash(manifest, config, rel);
  }
  save_manifest(config, manifest);
}

}  // namespace climit
