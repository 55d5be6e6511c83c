#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "climit/domain.hpp"
#include "climit/gbdt.hpp"

namespace climit {

enum class TransformKind { kIdentity, kLogShift };

// phi(T): Identity -> T, LogShift -> ln(1 + T/k). phi(0) = 0 either way.
struct TreatmentTransform {
  TransformKind kind = TransformKind::kIdentity;
  double k = 20.0;  // LogShift only, scaled treatment units, > 0

  double phi(double treatment) const;
  double dphi(double treatment) const;
};

enum class Variant { kLinearRegression, kOutcomeRegression, kEncodedOutcomeRegression };

enum class RegKind { kNone, kL1, kL2 };

struct Regularization {
  RegKind kind = RegKind::kNone;
  double lambda = 0.0;
};

// Objective: (1/n)*SSE + lambda*||w||_1 or lambda*||w||_2^2, intercepts
// unpenalized. Unpenalized fits drop one reference column per one-hot block.
struct FitSpec {
  Variant variant = Variant::kOutcomeRegression;
  TreatmentTransform transform;
  Regularization regularization;
  GbdtParams encoder_params;  // EncodedOutcomeRegression only
};

// Y(T) = g(x) + phi(T) * h(x), g and h affine in the (possibly leaf-encoded)
// feature vector. LinearRegression constrains h to a feature-free scalar.
struct ResponseModel {
  Variant variant = Variant::kOutcomeRegression;
  TreatmentTransform transform;
  Regularization regularization;
  Standardizer standardizer;
  std::optional<GbdtModel> encoder;  // EncodedOutcomeRegression only
  std::vector<double> weights;       // full design width; dropped columns hold 0
  Schema design_schema;

  // Feature vector the g/h blocks act on (standardized raw or leaf-encoded).
  std::vector<double> model_features(const CustomerRecord& record) const;

  double g_value(std::span<const double> features) const;
  double h_value(std::span<const double> features) const;

  double predict(const CustomerRecord& record, double treatment) const;
  double predict_encoded(std::span<const double> features, double treatment) const;

  // h(x) * dphi/dT.
  double marginal_effect(const CustomerRecord& record, double treatment) const;

  std::size_t feature_width() const;  // d: columns feeding g and h
};

// Full structural design row: [1, x.., phi(T), phi(T)*x..]. Throws on
// negative treatment.
std::vector<double> build_design_row(std::span<const double> features,
                                     const TreatmentTransform& transform, double treatment);

ResponseModel fit_response(const std::vector<ObservationRecord>& train, const FitSpec& spec);

double predict_response(const ResponseModel& model, const CustomerRecord& record,
                        double treatment);
double marginal_effect(const ResponseModel& model, const CustomerRecord& record,
                       double treatment);

using ResponseCurve = std::vector<std::pair<double, double>>;

ResponseCurve response_curve(const ResponseModel& model, const CustomerRecord& record,
                             const std::vector<double>& grid);

}  // namespace climit
