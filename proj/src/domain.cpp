#include "climit/domain.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace climit {

namespace {

const std::array<std::string, kNumRatings> kRatingNames = {
    "VeryGood", "Good", "Fair", "Poor", "PrimeHigh", "PrimeLow"};

void require_finite(double value, const std::string& field) {
  if (!std::isfinite(value)) {
    throw std::invalid_argument("non-finite value in field '" + field + "'");
  }
}

}  // namespace

const std::string& rating_name(CreditRating rating) {
  return kRatingNames.at(static_cast<std::size_t>(rating));
}

CreditRating rating_from_name(const std::string& name) {
  for (int i = 0; i < kNumRatings; ++i) {
    if (kRatingNames[i] == name) return static_cast<CreditRating>(i);
  }
  throw std::invalid_argument("unknown credit rating '" + name + "'");
}

bool is_prime(CreditRating rating) {
  return rating == CreditRating::kPrimeHigh || rating == CreditRating::kPrimeLow;
}

void validate_record(const CustomerRecord& record) {
  require_finite(record.prob_default, "prob_default");
  if (record.prob_default < 0.0 || record.prob_default > 1.0) {
    throw std::invalid_argument("prob_default outside [0,1] for customer '" +
                                record.customer_id + "'");
  }
  const std::pair<const char*, double> currency_fields[] = {
      {"avg_spend_3m", record.avg_spend_3m},   {"avg_spend_6m", record.avg_spend_6m},
      {"max_spend_12m", record.max_spend_12m}, {"avg_balance_3m", record.avg_balance_3m},
      {"avg_balance_6m", record.avg_balance_6m}, {"current_limit", record.current_limit},
  };
  for (const auto& [name, value] : currency_fields) {
    require_finite(value, name);
    if (value < 0.0) {
      throw std::invalid_argument(std::string("negative value in field '") + name +
                                  "' for customer '" + record.customer_id + "'");
    }
  }
  if (record.current_limit <= 0.0) {
    throw std::invalid_argument("current_limit must be positive for customer '" +
                                record.customer_id + "'");
  }
}

const std::vector<std::string>& continuous_feature_names() {
  static const std::vector<std::string> names = {
      "avg_spend_3m", "avg_spend_6m",  "max_spend_12m",
      "avg_balance_3m", "avg_balance_6m", "current_limit"};
  return names;
}

SchemaPtr encoded_schema() {
  static const SchemaPtr schema = [] {
    auto s = std::make_shared<Schema>();
    s->push_back("prob_default");
    for (const auto& name : continuous_feature_names()) s->push_back(name);
    for (int i = 0; i < kNumRatings; ++i) {
      s->push_back("rating_" + kRatingNames[i]);
    }
    return s;
  }();
  return schema;
}

Standardizer::Standardizer(std::vector<Stats> stats) : stats_(std::move(stats)) {
  for (const auto& s : stats_) {
    if (!(s.stddev > 0.0)) {
      throw std::invalid_argument("non-positive stddev for feature '" + s.name + "'");
    }
  }
}

const Standardizer::Stats* Standardizer::find(const std::string& name) const {
  for (const auto& s : stats_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

double Standardizer::standardize(const std::string& name, double value) const {
  const Stats* s = find(name);
  if (s == nullptr) return value;  // exempt
  return (value - s->mean) / s->stddev;
}

double Standardizer::unstandardize(const std::string& name, double value) const {
  const Stats* s = find(name);
  if (s == nullptr) return value;
  return value * s->stddev + s->mean;
}

bool Standardizer::is_exempt(const std::string& name) const { return find(name) == nullptr; }

Standardizer fit_standardizer(const std::vector<CustomerRecord>& records) {
  if (records.size() < 2) {
    throw std::invalid_argument("fit_standardizer requires at least 2 records");
  }
  const auto& names = continuous_feature_names();
  auto field = [](const CustomerRecord& r, std::size_t i) -> double {
    switch (i) {
      case 0: return r.avg_spend_3m;
      case 1: return r.avg_spend_6m;
      case 2: return r.max_spend_12m;
      case 3: return r.avg_balance_3m;
      case 4: return r.avg_balance_6m;
      default: return r.current_limit;
    }
  };
  const double n = static_cast<double>(records.size());
  std::vector<Standardizer::Stats> stats;
  stats.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    double sum = 0.0;
    for (const auto& r : records) sum += field(r, i);
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : records) {
      const double d = field(r, i) - mean;
      ss += d * d;
    }
    const double var = ss / (n - 1.0);  // sample convention
    if (!(var > 0.0)) {
      throw std::invalid_argument("zero-variance feature '" + names[i] + "'");
    }
    stats.push_back({names[i], mean, std::sqrt(var)});
  }
  return Standardizer(std::move(stats));
}

FeatureVector encode_features(const CustomerRecord& record, const Standardizer& standardizer) {
  require_finite(record.prob_default, "prob_default");
  FeatureVector out;
  out.schema = encoded_schema();
  out.values.reserve(out.schema->size());
  out.values.push_back(record.prob_default);  // unscaled
  const auto& names = continuous_feature_names();
  const double raw[] = {record.avg_spend_3m,   record.avg_spend_6m,
                        record.max_spend_12m,  record.avg_balance_3m,
                        record.avg_balance_6m, record.current_limit};
  for (std::size_t i = 0; i < names.size(); ++i) {
    require_finite(raw[i], names[i]);
    out.values.push_back(standardizer.standardize(names[i], raw[i]));
  }
  for (int i = 0; i < kNumRatings; ++i) {
    out.values.push_back(static_cast<int>(record.credit_rating) == i ? 1.0 : 0.0);
  }
  return out;
}

}  // namespace climit
