#include "climit/io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace climit {

using nlohmann::json;

std::string format_double(double value) {
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

std::string file_hash(const std::string& path) { return content_hash(read_file(path)); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

// --- dataset CSV -----------------------------------------------------------

namespace {

constexpr const char* kCsvHeader =
    "customer_id,prob_default,credit_rating,avg_spend_3m,avg_spend_6m,max_spend_12m,"
    "avg_balance_3m,avg_balance_6m,current_limit,treatment,outcome";

double parse_double(const std::string& field, std::size_t line) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw std::runtime_error("malformed numeric field '" + field + "' at line " +
                             std::to_string(line));
  }
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::string dataset_to_csv(const std::vector<ObservationRecord>& records) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : records) {
    const CustomerRecord& c = r.customer;
    out += c.customer_id;
    out += ',';
    out += format_double(c.prob_default);
    out += ',';
    out += rating_name(c.credit_rating);
    for (double v : {c.avg_spend_3m, c.avg_spend_6m, c.max_spend_12m, c.avg_balance_3m,
                     c.avg_balance_6m, c.current_limit, r.treatment, r.outcome}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_dataset_csv(const std::string& path, const std::vector<ObservationRecord>& records) {
  write_file(path, dataset_to_csv(records));
}

std::vector<ObservationRecord> read_dataset_csv(const std::string& path,
                                                const TestingDesign* design) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty dataset: " + path);
  if (line != kCsvHeader) {
    throw std::runtime_error("unexpected CSV header in " + path);
  }
  std::vector<ObservationRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 11) {
      throw std::runtime_error("expected 11 fields, got " + std::to_string(fields.size()) +
                               " at line " + std::to_string(line_no));
    }
    ObservationRecord r;
    CustomerRecord& c = r.customer;
    c.customer_id = fields[0];
    c.prob_default = parse_double(fields[1], line_no);
    c.credit_rating = rating_from_name(fields[2]);
    c.avg_spend_3m = parse_double(fields[3], line_no);
    c.avg_spend_6m = parse_double(fields[4], line_no);
    c.max_spend_12m = parse_double(fields[5], line_no);
    c.avg_balance_3m = parse_double(fields[6], line_no);
    c.avg_balance_6m = parse_double(fields[7], line_no);
    c.current_limit = parse_double(fields[8], line_no);
    r.treatment = parse_double(fields[9], line_no);
    r.outcome = parse_double(fields[10], line_no);
    validate_record(c);
    if (design != nullptr && !design->on_menu(c.credit_rating, r.treatment)) {
      throw std::runtime_error("off-menu treatment " + format_double(r.treatment) +
                               " for subgroup " + rating_name(c.credit_rating) + " at line " +
                               std::to_string(line_no));
    }
    records.push_back(std::move(r));
  }
  return records;
}

// --- design JSON -----------------------------------------------------------

std::string design_to_json(const TestingDesign& design) {
  json doc;
  for (int i = 0; i < kNumRatings; ++i) {
    const auto rating = static_cast<CreditRating>(i);
    json menu = json::array();
    for (const auto& e : design.menu(rating)) {
      menu.push_back({{"t", e.treatment}, {"p", e.probability}});
    }
    doc[rating_name(rating)] = std::move(menu);
  }
  return doc.dump(2) + "\n";
}

TestingDesign design_from_json(const std::string& text) {
  const json doc = json::parse(text);
  std::array<std::vector<MenuEntry>, kNumRatings> menus;
  for (int i = 0; i < kNumRatings; ++i) {
    const std::string& name = rating_name(static_cast<CreditRating>(i));
    if (!doc.contains(name)) {
      throw std::runtime_error("design JSON missing subgroup '" + name + "'");
    }
    for (const auto& entry : doc.at(name)) {
      menus[i].push_back({entry.at("t").get<double>(), entry.at("p").get<double>()});
    }
  }
  return TestingDesign(std::move(menus));
}

// --- ground truth JSON -----------------------------------------------------

std::string ground_truth_to_json(const GroundTruth& gt, const PopulationParams& pop) {
  json doc;
  doc["ground_truth"] = {{"k_true", gt.k_true},
                         {"noise_sigma", gt.noise_sigma},
                         {"base_intercept", gt.base_intercept},
                         {"base_balance", gt.base_balance},
                         {"base_spend", gt.base_spend},
                         {"base_risk_interaction", gt.base_risk_interaction},
                         {"gain_scale", gt.gain_scale},
                         {"gain_bias", gt.gain_bias},
                         {"gain_prob_default", gt.gain_prob_default},
                         {"gain_balance_ratio", gt.gain_balance_ratio},
                         {"gain_spend_ratio", gt.gain_spend_ratio}};
  doc["population"] = {{"prime_fraction", pop.prime_fraction},
                       {"subprime_mix",
                        {pop.subprime_mix[0], pop.subprime_mix[1], pop.subprime_mix[2],
                         pop.subprime_mix[3]}},
                       {"demand_split_quantile", pop.demand_split_quantile}};
  return doc.dump(2) + "\n";
}

std::pair<GroundTruth, PopulationParams> ground_truth_from_json(const std::string& text) {
  const json doc = json::parse(text);
  GroundTruth gt;
  const json& g = doc.at("ground_truth");
  gt.k_true = g.at("k_true").get<double>();
  gt.noise_sigma = g.at("noise_sigma").get<double>();
  gt.base_intercept = g.at("base_intercept").get<double>();
  gt.base_balance = g.at("base_balance").get<double>();
  gt.base_spend = g.at("base_spend").get<double>();
  gt.base_risk_interaction = g.at("base_risk_interaction").get<double>();
  gt.gain_scale = g.at("gain_scale").get<double>();
  gt.gain_bias = g.at("gain_bias").get<double>();
  gt.gain_prob_default = g.at("gain_prob_default").get<double>();
  gt.gain_balance_ratio = g.at("gain_balance_ratio").get<double>();
  gt.gain_spend_ratio = g.at("gain_spend_ratio").get<double>();
  PopulationParams pop;
  const json& p = doc.at("population");
  pop.prime_fraction = p.at("prime_fraction").get<double>();
  for (int i = 0; i < 4; ++i) pop.subprime_mix[i] = p.at("subprime_mix").at(i).get<double>();
  pop.demand_split_quantile = p.at("demand_split_quantile").get<double>();
  return {gt, pop};
}

// --- fitted method JSON ----------------------------------------------------

namespace {

json standardizer_to_json(const Standardizer& st) {
  json arr = json::array();
  for (const auto& s : st.stats()) {
    arr.push_back({{"name", s.name}, {"mean", s.mean}, {"stddev", s.stddev}});
  }
  return arr;
}

Standardizer standardizer_from_json(const json& arr) {
  std::vector<Standardizer::Stats> stats;
  for (const auto& e : arr) {
    stats.push_back({e.at("name").get<std::string>(), e.at("mean").get<double>(),
                     e.at("stddev").get<double>()});
  }
  return Standardizer(std::move(stats));
}

json gbdt_to_json(const GbdtModel& model) {
  json doc;
  doc["base_prediction"] = model.base_prediction;
  doc["schema"] = model.schema;
  doc["params"] = {{"num_trees", model.params.num_trees},
                   {"max_depth", model.params.max_depth},
                   {"learning_rate", model.params.learning_rate},
                   {"min_samples_leaf", model.params.min_samples_leaf},
                   {"min_gain", model.params.min_gain}};
  json trees = json::array();
  for (const auto& tree : model.trees) {
    json nodes = json::array();
    for (const auto& n : tree.nodes) {
      nodes.push_back({{"f", n.feature},
                       {"thr", n.threshold},
                       {"l", n.left},
                       {"r", n.right},
                       {"v", n.leaf_value},
                       {"ord", n.leaf_ordinal}});
    }
    trees.push_back({{"nodes", std::move(nodes)}, {"num_leaves", tree.num_leaves}});
  }
  doc["trees"] = std::move(trees);
  return doc;
}

GbdtModel gbdt_from_json(const json& doc) {
  GbdtModel model;
  model.base_prediction = doc.at("base_prediction").get<double>();
  model.schema = doc.at("schema").get<Schema>();
  const json& p = doc.at("params");
  model.params.num_trees = p.at("num_trees").get<int>();
  model.params.max_depth = p.at("max_depth").get<int>();
  model.params.learning_rate = p.at("learning_rate").get<double>();
  model.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
  model.params.min_gain = p.at("min_gain").get<double>();
  for (const auto& t : doc.at("trees")) {
    RegressionTree tree;
    tree.num_leaves = t.at("num_leaves").get<int>();
    for (const auto& n : t.at("nodes")) {
      TreeNode node;
      node.feature = n.at("f").get<int>();
      node.threshold = n.at("thr").get<double>();
      node.left = n.at("l").get<int>();
      node.right = n.at("r").get<int>();
      node.leaf_value = n.at("v").get<double>();
      node.leaf_ordinal = n.at("ord").get<int>();
      tree.nodes.push_back(node);
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::kLinearRegression: return "linear_regression";
    case Variant::kOutcomeRegression: return "outcome_regression";
    case Variant::kEncodedOutcomeRegression: return "encoded_outcome_regression";
  }
  return "";
}

Variant variant_from_name(const std::string& name) {
  if (name == "linear_regression") return Variant::kLinearRegression;
  if (name == "outcome_regression") return Variant::kOutcomeRegression;
  if (name == "encoded_outcome_regression") return Variant::kEncodedOutcomeRegression;
  throw std::runtime_error("unknown variant '" + name + "'");
}

const char* reg_name(RegKind k) {
  switch (k) {
    case RegKind::kNone: return "none";
    case RegKind::kL1: return "l1";
    case RegKind::kL2: return "l2";
  }
  return "";
}

RegKind reg_from_name(const std::string& name) {
  if (name == "none") return RegKind::kNone;
  if (name == "l1") return RegKind::kL1;
  if (name == "l2") return RegKind::kL2;
  throw std::runtime_error("unknown regularization '" + name + "'");
}

}  // namespace

double SingleGbdtModel::predict(const CustomerRecord& record, double treatment) const {
  FeatureVector x = encode_features(record, standardizer);
  x.values.push_back(treatment);
  return predict_gbdt(model, std::span<const double>(x.values));
}

std::string method_to_json(const FittedMethod& method) {
  json doc;
  doc["method"] = method.name;
  if (const auto* rm = std::get_if<ResponseModel>(&method.model)) {
    doc["kind"] = "response";
    doc["variant"] = variant_name(rm->variant);
    doc["transform"] = {
        {"kind", rm->transform.kind == TransformKind::kLogShift ? "log_shift" : "identity"},
        {"k", rm->transform.k}};
    doc["regularization"] = {{"kind", reg_name(rm->regularization.kind)},
                             {"lambda", rm->regularization.lambda}};
    doc["standardizer"] = standardizer_to_json(rm->standardizer);
    doc["weights"] = rm->weights;
    doc["design_schema"] = rm->design_schema;
    if (rm->encoder) doc["encoder"] = gbdt_to_json(*rm->encoder);
  } else {
    const auto& sg = std::get<SingleGbdtModel>(method.model);
    doc["kind"] = "single_gbdt";
    doc["standardizer"] = standardizer_to_json(sg.standardizer);
    doc["gbdt"] = gbdt_to_json(sg.model);
  }
  return doc.dump(2) + "\n";
}

FittedMethod method_from_json(const std::string& text) {
  const json doc = json::parse(text);
  FittedMethod method;
  method.name = doc.at("method").get<std::string>();
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "response") {
    ResponseModel rm;
    rm.variant = variant_from_name(doc.at("variant").get<std::string>());
    const json& t = doc.at("transform");
    rm.transform.kind = t.at("kind").get<std::string>() == "log_shift"
                            ? TransformKind::kLogShift
                            : TransformKind::kIdentity;
    rm.transform.k = t.at("k").get<double>();
    const json& r = doc.at("regularization");
    rm.regularization.kind = reg_from_name(r.at("kind").get<std::string>());
    rm.regularization.lambda = r.at("lambda").get<double>();
    rm.standardizer = standardizer_from_json(doc.at("standardizer"));
    rm.weights = doc.at("weights").get<std::vector<double>>();
    rm.design_schema = doc.at("design_schema").get<Schema>();
    if (doc.contains("encoder")) rm.encoder = gbdt_from_json(doc.at("encoder"));
    method.model = std::move(rm);
  } else if (kind == "single_gbdt") {
    SingleGbdtModel sg;
    sg.standardizer = standardizer_from_json(doc.at("standardizer"));
    sg.model = gbdt_from_json(doc.at("gbdt"));
    method.model = std::move(sg);
  } else {
    throw std::runtime_error("unknown model kind '" + kind + "'");
  }
  return method;
}

MethodPredictor make_predictor(const FittedMethod& method) {
  MethodPredictor out;
  out.name = method.name;
  if (const auto* rm = std::get_if<ResponseModel>(&method.model)) {
    const ResponseModel model = *rm;  // own a copy; predictors may outlive the method
    out.predict = [model](const CustomerRecord& c, double t) { return model.predict(c, t); };
    out.curve = [model](const CustomerRecord& c, const std::vector<double>& grid,
                        std::vector<double>& values) {
      const auto features = model.model_features(c);
      const double g = model.g_value(features);
      const double h = model.h_value(features);
      values.resize(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) {
        values[i] = g + model.transform.phi(grid[i]) * h;
      }
    };
  } else {
    const SingleGbdtModel model = std::get<SingleGbdtModel>(method.model);
    out.predict = [model](const CustomerRecord& c, double t) { return model.predict(c, t); };
    out.curve = [model](const CustomerRecord& c, const std::vector<double>& grid,
                        std::vector<double>& values) {
      FeatureVector x = encode_features(c, model.standardizer);
      x.values.push_back(0.0);
      values.resize(grid.size());
      for (std::size_t i = 0; i < grid.size(); ++i) {
        x.values.back() = grid[i];
        values[i] = predict_gbdt(model.model, std::span<const double>(x.values));
      }
    };
  }
  return out;
}

}  // namespace climit
