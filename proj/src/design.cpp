#include "climit/design.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <stdexcept>

namespace climit {

TestingDesign::TestingDesign(std::array<std::vector<MenuEntry>, kNumRatings> menus)
    : menus_(std::move(menus)) {
  for (int i = 0; i < kNumRatings; ++i) {
    const auto& menu = menus_[i];
    const std::string& name = rating_name(static_cast<CreditRating>(i));
    if (menu.empty()) {
      throw std::invalid_argument("empty menu for subgroup " + name);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < menu.size(); ++j) {
      if (!(menu[j].probability > 0.0) || menu[j].probability > 1.0) {
        throw std::invalid_argument("menu probability outside (0,1] for subgroup " + name);
      }
      if (j > 0 && !(menu[j].treatment > menu[j - 1].treatment)) {
        throw std::invalid_argument("menu treatments not strictly increasing for subgroup " + name);
      }
      sum += menu[j].probability;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw std::invalid_argument("menu probabilities do not sum to 1 for subgroup " + name);
    }
  }
}

const std::vector<MenuEntry>& TestingDesign::menu(CreditRating rating) const {
  return menus_[static_cast<std::size_t>(rating)];
}

double TestingDesign::max_treatment(CreditRating rating) const {
  return menu(rating).back().treatment;
}

double TestingDesign::max_treatment() const {
  double m = 0.0;
  for (int i = 0; i < kNumRatings; ++i) {
    m = std::max(m, menus_[i].back().treatment);
  }
  return m;
}

bool TestingDesign::on_menu(CreditRating rating, double treatment) const {
  for (const auto& e : menu(rating)) {
    if (e.treatment == treatment) return true;
  }
  return false;
}

TestingDesign default_design() {
  auto uniform_menu = [](std::initializer_list<double> treatments) {
    std::vector<MenuEntry> menu;
    const double p = 1.0 / static_cast<double>(treatments.size());
    for (double t : treatments) menu.push_back({t, p});
    return menu;
  };
  std::array<std::vector<MenuEntry>, kNumRatings> menus;
  menus[static_cast<int>(CreditRating::kVeryGood)] = uniform_menu({0, 30, 60, 100, 150});
  menus[static_cast<int>(CreditRating::kGood)] = uniform_menu({0, 20, 30, 60, 100});
  menus[static_cast<int>(CreditRating::kFair)] = uniform_menu({0, 10, 20, 30, 60});
  menus[static_cast<int>(CreditRating::kPoor)] = uniform_menu({0, 5, 10, 20, 30});
  menus[static_cast<int>(CreditRating::kPrimeHigh)] = uniform_menu({0, 100, 200, 300});
  menus[static_cast<int>(CreditRating::kPrimeLow)] = uniform_menu({0, 50, 100, 150});
  return TestingDesign(std::move(menus));
}

double assign_treatment(const TestingDesign& design, const CustomerRecord& record, Rng& rng) {
  const auto& menu = design.menu(record.credit_rating);
  std::vector<double> probs;
  probs.reserve(menu.size());
  for (const auto& e : menu) probs.push_back(e.probability);
  return menu[rng.categorical(probs)].treatment;
}

double design_propensity(const TestingDesign& design, CreditRating subgroup, double treatment) {
  for (const auto& e : design.menu(subgroup)) {
    if (e.treatment == treatment) return e.probability;
  }
  return 0.0;
}

std::vector<SupportViolation> validate_common_support(const TestingDesign& design) {
  std::vector<SupportViolation> violations;
  for (int i = 0; i < kNumRatings; ++i) {
    const auto rating = static_cast<CreditRating>(i);
    const auto& menu = design.menu(rating);
    bool has_control = false;
    for (const auto& e : menu) {
      if (e.treatment == 0.0) has_control = true;
      if (menu.size() >= 2 && !(e.probability > 0.0 && e.probability < 1.0)) {
        violations.push_back({rating, "p=" + std::to_string(e.probability) +
                                          " breaks 0<P(T|L)<1 at treatment " +
                                          std::to_string(e.treatment)});
      }
    }
    if (menu.size() == 1 && menu[0].probability >= 1.0 && menu[0].treatment != 0.0) {
      violations.push_back({rating, "p=1 breaks 0<P(T|L)<1"});
    }
    if (!has_control) {
      violations.push_back({rating, "no control holdout (treatment 0 missing)"});
    }
  }
  return violations;
}

BalanceReport validate_assignment_balance(const std::vector<ObservationRecord>& records,
                                          const TestingDesign& design, double alpha) {
  std::array<std::map<double, std::size_t>, kNumRatings> counts;
  std::array<std::size_t, kNumRatings> totals{};
  for (const auto& r : records) {
    const auto idx = static_cast<std::size_t>(r.customer.credit_rating);
    counts[idx][r.treatment] += 1;
    totals[idx] += 1;
  }
  BalanceReport report;
  for (int i = 0; i < kNumRatings; ++i) {
    const auto rating = static_cast<CreditRating>(i);
    if (totals[i] == 0) {
      throw std::invalid_argument("empty subgroup " + rating_name(rating) +
                                  " in balance validation");
    }
    BalanceRow row;
    row.subgroup = rating;
    row.count = totals[i];
    const auto& menu = design.menu(rating);
    double chi2 = 0.0;
    for (const auto& e : menu) {
      const double expected = e.probability * static_cast<double>(totals[i]);
      const auto it = counts[i].find(e.treatment);
      const double observed = it == counts[i].end() ? 0.0 : static_cast<double>(it->second);
      const double d = observed - expected;
      chi2 += d * d / expected;
    }
    for (const auto& [t, c] : counts[i]) {
      if (!design.on_menu(rating, t)) row.off_menu += c;
    }
    row.chi_square = chi2;
    row.dof = static_cast<int>(menu.size()) - 1;
    if (row.dof > 0) {
      boost::math::chi_squared dist(row.dof);
      row.p_value = boost::math::cdf(boost::math::complement(dist, chi2));
    }
    row.flagged = row.p_value < alpha || row.off_menu > 0;
    report.any_flagged = report.any_flagged || row.flagged;
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace climit
