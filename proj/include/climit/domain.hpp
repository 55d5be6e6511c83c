#pragma once

#include <memory>
#include <string>
#include <vector>

namespace climit {

// The six subgroup labels used throughout: four sub-prime credit ratings and
// two prime demand levels. Their order fixes the dummy-coding layout.
enum class CreditRating {
  kVeryGood = 0,
  kGood,
  kFair,
  kPoor,
  kPrimeHigh,
  kPrimeLow,
};

inline constexpr int kNumRatings = 6;

const std::string& rating_name(CreditRating rating);
CreditRating rating_from_name(const std::string& name);
bool is_prime(CreditRating rating);

// One account's feature snapshot before any limit adjustment.
struct CustomerRecord {
  std::string customer_id;
  double prob_default = 0.0;  // in [0,1], never standardized
  CreditRating credit_rating = CreditRating::kVeryGood;
  double avg_spend_3m = 0.0;
  double avg_spend_6m = 0.0;
  double max_spend_12m = 0.0;
  double avg_balance_3m = 0.0;
  double avg_balance_6m = 0.0;
  double current_limit = 0.0;
};

// Throws std::invalid_argument naming the offending field.
void validate_record(const CustomerRecord& record);

using Schema = std::vector<std::string>;
using SchemaPtr = std::shared_ptr<const Schema>;

struct FeatureVector {
  std::vector<double> values;
  SchemaPtr schema;
};

// One training/test row: features (via the embedded customer), assigned
// treatment (limit increase, scaled units) and observed outcome (balance
// growth, may be negative).
struct ObservationRecord {
  CustomerRecord customer;
  double treatment = 0.0;
  double outcome = 0.0;
};

// Per-feature mean/stddev for the continuous features. prob_default, the
// rating dummies and any leaf-indicator columns are exempt and pass through
// unchanged; exemption is represented by absence from the stats table.
class Standardizer {
 public:
  struct Stats {
    std::string name;
    double mean = 0.0;
    double stddev = 1.0;  // > 0
  };

  Standardizer() = default;
  explicit Standardizer(std::vector<Stats> stats);

  double standardize(const std::string& name, double value) const;
  double unstandardize(const std::string& name, double value) const;
  bool is_exempt(const std::string& name) const;

  const std::vector<Stats>& stats() const { return stats_; }

 private:
  const Stats* find(const std::string& name) const;

  std::vector<Stats> stats_;
};

// Names of the continuous features that get standardized, in schema order.
const std::vector<std::string>& continuous_feature_names();

// Fixed encoded schema: prob_default, six standardized continuous features,
// then the six rating dummies (order of CreditRating).
SchemaPtr encoded_schema();

// Sample (n-1) convention. Throws on fewer than two records or a
// zero-variance feature, naming the feature.
Standardizer fit_standardizer(const std::vector<CustomerRecord>& records);

// [prob_default, standardized continuous block, one-hot rating block].
// Throws std::invalid_argument on non-finite fields, naming the field.
FeatureVector encode_features(const CustomerRecord& record, const Standardizer& standardizer);

}  // namespace climit
