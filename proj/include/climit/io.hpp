#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "climit/design.hpp"
#include "climit/domain.hpp"
#include "climit/evaluation.hpp"
#include "climit/gbdt.hpp"
#include "climit/response.hpp"
#include "climit/simulator.hpp"

namespace climit {

// Shortest round-trip decimal form; identical inputs give identical text.
std::string format_double(double value);

// FNV-1a 64-bit over the raw bytes, hex encoded.
std::string content_hash(const std::string& bytes);
std::string file_hash(const std::string& path);

// --- dataset CSV -----------------------------------------------------------
// Header: customer_id,prob_default,credit_rating,avg_spend_3m,avg_spend_6m,
// max_spend_12m,avg_balance_3m,avg_balance_6m,current_limit,treatment,outcome

std::string dataset_to_csv(const std::vector<ObservationRecord>& records);
void write_dataset_csv(const std::string& path, const std::vector<ObservationRecord>& records);

// Validates every record; when a design is supplied, also rejects off-menu
// treatments. Rows with missing or malformed fields raise with the line
// number.
std::vector<ObservationRecord> read_dataset_csv(const std::string& path,
                                                const TestingDesign* design = nullptr);

// --- JSON documents --------------------------------------------------------

std::string design_to_json(const TestingDesign& design);
TestingDesign design_from_json(const std::string& text);

std::string ground_truth_to_json(const GroundTruth& gt, const PopulationParams& pop);
std::pair<GroundTruth, PopulationParams> ground_truth_from_json(const std::string& text);

// --- fitted methods --------------------------------------------------------

// The ablation's GBDT baseline: one ensemble over [features L, treatment].
struct SingleGbdtModel {
  GbdtModel model;
  Standardizer standardizer;

  double predict(const CustomerRecord& record, double treatment) const;
};

struct FittedMethod {
  std::string name;
  std::variant<ResponseModel, SingleGbdtModel> model;
};

std::string method_to_json(const FittedMethod& method);
FittedMethod method_from_json(const std::string& text);

// Evaluation-facing adapter; response models expose an O(1)-per-grid-point
// curve path.
MethodPredictor make_predictor(const FittedMethod& method);

// --- small file helpers ----------------------------------------------------

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace climit
