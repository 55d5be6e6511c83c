#include "climit/response.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace climit {

double TreatmentTransform::phi(double treatment) const {
  if (treatment < 0.0) throw std::invalid_argument("negative treatment");
  switch (kind) {
    case TransformKind::kIdentity: return treatment;
    case TransformKind::kLogShift: return std::log1p(treatment / k);
  }
  return 0.0;
}

double TreatmentTransform::dphi(double treatment) const {
  if (treatment < 0.0) throw std::invalid_argument("negative treatment");
  switch (kind) {
    case TransformKind::kIdentity: return 1.0;
    case TransformKind::kLogShift: return 1.0 / (treatment + k);
  }
  return 0.0;
}

std::vector<double> build_design_row(std::span<const double> features,
                                     const TreatmentTransform& transform, double treatment) {
  const double p = transform.phi(treatment);
  std::vector<double> row;
  row.reserve(2 * (features.size() + 1));
  row.push_back(1.0);
  for (double v : features) row.push_back(v);
  row.push_back(p);
  for (double v : features) row.push_back(p * v);
  return row;
}

namespace {

// Design column layout. OR variants: [1, x.., phi, phi*x..]; the constrained
// linear regression keeps only the scalar treatment column for h.
std::size_t design_width(Variant variant, std::size_t d) {
  return variant == Variant::kLinearRegression ? d + 2 : 2 * (d + 1);
}

void fill_design_row(Variant variant, const TreatmentTransform& transform,
                     std::span<const double> x, double treatment, std::vector<double>& row) {
  const double p = transform.phi(treatment);
  const std::size_t d = x.size();
  row.resize(design_width(variant, d));
  row[0] = 1.0;
  for (std::size_t j = 0; j < d; ++j) row[1 + j] = x[j];
  row[d + 1] = p;
  if (variant != Variant::kLinearRegression) {
    for (std::size_t j = 0; j < d; ++j) row[d + 2 + j] = p * x[j];
  }
}

double soft_threshold(double value, double threshold) {
  if (value > threshold) return value - threshold;
  if (value < -threshold) return value + threshold;
  return 0.0;
}

}  // namespace

std::vector<double> ResponseModel::model_features(const CustomerRecord& record) const {
  FeatureVector raw = encode_features(record, standardizer);
  if (!encoder) return std::move(raw.values);
  std::vector<double> leaves;
  encode_leaves_into(*encoder, raw.values, leaves);
  return leaves;
}

std::size_t ResponseModel::feature_width() const {
  return variant == Variant::kLinearRegression ? weights.size() - 2 : weights.size() / 2 - 1;
}

double ResponseModel::g_value(std::span<const double> features) const {
  const std::size_t d = feature_width();
  if (features.size() != d) {
    throw std::invalid_argument("response model: feature width mismatch");
  }
  double g = weights[0];
  for (std::size_t j = 0; j < d; ++j) g += weights[1 + j] * features[j];
  return g;
}

double ResponseModel::h_value(std::span<const double> features) const {
  const std::size_t d = feature_width();
  if (features.size() != d) {
    throw std::invalid_argument("response model: feature width mismatch");
  }
  double h = weights[d + 1];
  if (variant != Variant::kLinearRegression) {
    for (std::size_t j = 0; j < d; ++j) h += weights[d + 2 + j] * features[j];
  }
  return h;
}

double ResponseModel::predict_encoded(std::span<const double> features, double treatment) const {
  return g_value(features) + transform.phi(treatment) * h_value(features);
}

double ResponseModel::predict(const CustomerRecord& record, double treatment) const {
  const auto features = model_features(record);
  return predict_encoded(features, treatment);
}

double ResponseModel::marginal_effect(const CustomerRecord& record, double treatment) const {
  const auto features = model_features(record);
  return h_value(features) * transform.dphi(treatment);
}

double predict_response(const ResponseModel& model, const CustomerRecord& record,
                        double treatment) {
  return model.predict(record, treatment);
}

double marginal_effect(const ResponseModel& model, const CustomerRecord& record,
                       double treatment) {
  return model.marginal_effect(record, treatment);
}

ResponseCurve response_curve(const ResponseModel& model, const CustomerRecord& record,
                             const std::vector<double>& grid) {
  const auto features = model.model_features(record);
  const double g = model.g_value(features);
  const double h = model.h_value(features);
  ResponseCurve curve;
  curve.reserve(grid.size());
  for (double t : grid) curve.emplace_back(t, g + model.transform.phi(t) * h);
  return curve;
}

ResponseModel fit_response(const std::vector<ObservationRecord>& train, const FitSpec& spec) {
  if (train.empty()) throw std::invalid_argument("fit_response: empty training data");
  if (spec.transform.kind == TransformKind::kLogShift && !(spec.transform.k > 0.0)) {
    throw std::invalid_argument("fit_response: LogShift requires k > 0");
  }
  if (spec.regularization.kind != RegKind::kNone && !(spec.regularization.lambda >= 0.0)) {
    throw std::invalid_argument("fit_response: negative regularization strength");
  }

  ResponseModel model;
  model.variant = spec.variant;
  model.transform = spec.transform;
  model.regularization = spec.regularization;

  std::vector<CustomerRecord> customers;
  customers.reserve(train.size());
  for (const auto& obs : train) customers.push_back(obs.customer);
  model.standardizer = fit_standardizer(customers);

  std::vector<double> y;
  y.reserve(train.size());
  for (const auto& obs : train) {
    if (!std::isfinite(obs.outcome)) {
      throw std::invalid_argument("fit_response: non-finite outcome");
    }
    y.push_back(obs.outcome);
  }

  std::vector<FeatureVector> raw_features;
  raw_features.reserve(train.size());
  for (const auto& obs : train) {
    raw_features.push_back(encode_features(obs.customer, model.standardizer));
  }

  // Feature matrix feeding g/h, and the one-hot block layout within it.
  std::vector<std::vector<double>> features(train.size());
  std::vector<std::pair<int, int>> blocks;
  Schema feature_names;
  if (spec.variant == Variant::kEncodedOutcomeRegression) {
    model.encoder = fit_encoder(raw_features, y, spec.encoder_params);
    for (std::size_t i = 0; i < train.size(); ++i) {
      encode_leaves_into(*model.encoder, raw_features[i].values, features[i]);
    }
    blocks = leaf_blocks(*model.encoder);
    feature_names = *leaf_schema(*model.encoder);
  } else {
    for (std::size_t i = 0; i < train.size(); ++i) {
      features[i] = std::move(raw_features[i].values);
    }
    const int dummy_start = 1 + static_cast<int>(continuous_feature_names().size());
    blocks = {{dummy_start, kNumRatings}};
    feature_names = *encoded_schema();
  }

  const std::size_t d = features[0].size();
  const std::size_t width = design_width(spec.variant, d);
  const std::size_t n = train.size();

  model.design_schema.push_back("intercept");
  for (const auto& name : feature_names) model.design_schema.push_back(name);
  model.design_schema.push_back("phi");
  if (spec.variant != Variant::kLinearRegression) {
    for (const auto& name : feature_names) model.design_schema.push_back("phi*" + name);
  }

  // Gram accumulation via nonzero lists: encoded rows are sparse.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(width, width);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(width);
  {
    std::vector<double> row;
    std::vector<std::pair<std::size_t, double>> nz;
    for (std::size_t i = 0; i < n; ++i) {
      fill_design_row(spec.variant, spec.transform, features[i], train[i].treatment, row);
      nz.clear();
      for (std::size_t c = 0; c < width; ++c) {
        if (row[c] != 0.0) nz.emplace_back(c, row[c]);
      }
      for (const auto& [ci, vi] : nz) {
        xty[static_cast<Eigen::Index>(ci)] += vi * y[i];
        for (const auto& [cj, vj] : nz) {
          if (cj > ci) break;
          gram(static_cast<Eigen::Index>(ci), static_cast<Eigen::Index>(cj)) += vi * vj;
        }
      }
    }
  }
  gram.triangularView<Eigen::Upper>() = gram.transpose();

  // Column roles: intercepts (g at 0, h at d+1) are never penalized;
  // unpenalized fits drop the first column of each one-hot block.
  std::vector<char> penalized(width, 1);
  penalized[0] = 0;
  penalized[d + 1] = 0;
  std::vector<char> keep(width, 1);
  for (const auto& [start, len] : blocks) {
    if (len <= 0) continue;
    keep[static_cast<std::size_t>(1 + start)] = 0;
    if (spec.variant != Variant::kLinearRegression) {
      keep[d + 2 + static_cast<std::size_t>(start)] = 0;
    }
  }

  model.weights.assign(width, 0.0);
  const double dn = static_cast<double>(n);
  const double lambda = spec.regularization.lambda;

  switch (spec.regularization.kind) {
    case RegKind::kNone: {
      std::vector<Eigen::Index> kept;
      for (std::size_t c = 0; c < width; ++c) {
        if (keep[c]) kept.push_back(static_cast<Eigen::Index>(c));
      }
      const auto m = static_cast<Eigen::Index>(kept.size());
      Eigen::MatrixXd sub(m, m);
      Eigen::VectorXd rhs(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        rhs[a] = xty[kept[static_cast<std::size_t>(a)]];
        for (Eigen::Index b = 0; b < m; ++b) {
          sub(a, b) = gram(kept[static_cast<std::size_t>(a)], kept[static_cast<std::size_t>(b)]);
        }
      }
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
      Eigen::VectorXd w;
      if (qr.rank() < m) {
        // Boosted-leaf encodings routinely contain duplicate partitions, so
        // the normal equations stay singular even after reference-column
        // dropping; take the minimum-norm least-squares solution there.
        if (spec.variant != Variant::kEncodedOutcomeRegression) {
          throw std::runtime_error(
              "fit_response: singular unpenalized system (collinear columns); use "
              "L1 or L2 regularization");
        }
        w = sub.completeOrthogonalDecomposition().solve(rhs);
      } else {
        w = qr.solve(rhs);
      }
      for (Eigen::Index a = 0; a < m; ++a) {
        model.weights[static_cast<std::size_t>(kept[static_cast<std::size_t>(a)])] = w[a];
      }
      break;
    }
    case RegKind::kL2: {
      Eigen::MatrixXd a = gram / dn;
      for (std::size_t c = 0; c < width; ++c) {
        if (penalized[c]) a(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c)) += lambda;
      }
      const Eigen::VectorXd w = a.ldlt().solve(xty / dn);
      for (std::size_t c = 0; c < width; ++c) model.weights[c] = w[static_cast<Eigen::Index>(c)];
      break;
    }
    case RegKind::kL1: {
      // Cyclic coordinate descent on the covariance form of
      // (1/n)*SSE + lambda*||w||_1; soft threshold at lambda/2.
      const Eigen::MatrixXd g = gram / dn;
      const Eigen::VectorXd c = xty / dn;
      Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width));
      constexpr int kMaxSweeps = 10000;
      constexpr double kTol = 1e-8;
      for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double max_delta = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
          const auto ej = static_cast<Eigen::Index>(j);
          const double gjj = g(ej, ej);
          if (gjj < 1e-12) {
            w[ej] = 0.0;
            continue;
          }
          const double rho = c[ej] - g.col(ej).dot(w) + gjj * w[ej];  // symmetric gram
          const double updated =
              penalized[j] ? soft_threshold(rho, lambda / 2.0) / gjj : rho / gjj;
          max_delta = std::max(max_delta, std::abs(updated - w[ej]));
          w[ej] = updated;
        }
        if (max_delta < kTol) break;
      }
      for (std::size_t j = 0; j < width; ++j) model.weights[j] = w[static_cast<Eigen::Index>(j)];
      break;
    }
  }
  return model;
}

}  // namespace climit
