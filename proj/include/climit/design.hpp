#pragma once

#include <array>
#include <string>
#include <vector>

#include "climit/domain.hpp"
#include "climit/rng.hpp"

namespace climit {

struct MenuEntry {
  double treatment = 0.0;    // scaled units
  double probability = 0.0;  // in (0,1]
};

// Per-subgroup treatment menus with assignment probabilities. Construction
// enforces: nonempty menus, probabilities in (0,1] summing to 1 within 1e-12,
// strictly increasing treatment values. Presence of the control holdout
// (treatment 0) is checked by validate_common_support so that defective
// designs can still be constructed and audited.
class TestingDesign {
 public:
  explicit TestingDesign(std::array<std::vector<MenuEntry>, kNumRatings> menus);

  const std::vector<MenuEntry>& menu(CreditRating rating) const;
  double max_treatment(CreditRating rating) const;
  double max_treatment() const;  // over all subgroups
  bool on_menu(CreditRating rating, double treatment) const;

 private:
  std::array<std::vector<MenuEntry>, kNumRatings> menus_;
};

// The published testing setup: four sub-prime rating menus at 20% each and
// two prime demand-level menus at 25% each.
TestingDesign default_design();

double assign_treatment(const TestingDesign& design, const CustomerRecord& record, Rng& rng);

// Menu probability; 0 when the treatment is off-menu.
double design_propensity(const TestingDesign& design, CreditRating subgroup, double treatment);

struct SupportViolation {
  CreditRating subgroup;
  std::string message;
};

// Checks 0 < p < 1 for every on-menu pair of multi-entry menus and that every
// subgroup keeps a control holdout at treatment 0.
std::vector<SupportViolation> validate_common_support(const TestingDesign& design);

struct BalanceRow {
  CreditRating subgroup;
  std::size_t count = 0;
  double chi_square = 0.0;
  int dof = 0;
  double p_value = 1.0;
  std::size_t off_menu = 0;
  bool flagged = false;
};

struct BalanceReport {
  std::vector<BalanceRow> rows;
  bool any_flagged = false;
};

// Chi-square goodness-of-fit of realized treatment frequencies against the
// menu, per subgroup. Throws on a subgroup with no records.
BalanceReport validate_assignment_balance(const std::vector<ObservationRecord>& records,
                                          const TestingDesign& design, double alpha);

}  // namespace climit
