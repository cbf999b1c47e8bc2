#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oegd/error.hpp"
#include "oegd/rng.hpp"

namespace oegd {

struct DpParams {
  double epsilon = 0.0;
  double delta = 0.0;
};

enum class LedgerState { Cont, Halt };

// zCDP privacy filter: spends compose additively; the state flips to Halt on
// the first charge whose running total strictly exceeds the budget, and any
// charge after that is an error.  The strict comparison is on the stored
// double running sum; callers that must land exactly on the budget (the
// engines) arrange their final spend accordingly.
class PrivacyLedger {
 public:
  explicit PrivacyLedger(double budget);

  LedgerState charge(double rho);

  double budget() const { return budget_; }
  double total() const { return total_; }
  LedgerState state() const { return state_; }
  const std::vector<double>& spends() const { return spends_; }

  std::string to_json_text() const;
  static PrivacyLedger from_json_text(const std::string& text);

 private:
  double budget_;
  double total_ = 0.0;
  LedgerState state_ = LedgerState::Cont;
  std::vector<double> spends_;
};

inline double zcdp_compose(double rho1, double rho2) { return rho1 + rho2; }

// eps-DP implies (eps^2/2)-zCDP.
double dp_to_zcdp(double epsilon);

// rho-zCDP implies (rho + 2*sqrt(rho*ln(1/delta)), delta)-DP.
double zcdp_to_dp(double rho, double delta);

// Unique rho > 0 with zcdp_to_dp(rho, delta) == epsilon, in closed form:
// the quadratic in u = sqrt(rho) gives rho = (sqrt(L+eps) - sqrt(L))^2 with
// L = ln(1/delta).
double invert_budget(double epsilon, double delta);

// eps' = sum_i eps_i*(e^{eps_i} - 1) + sqrt(sum_i eps_i^2 * ln(1/delta) / 2).
double advanced_composition(std::span<const double> epsilons, double delta);

// Selects index i with probability proportional to
// exp(param * scores[i] / (2 * sensitivity)), computed in log space.
// Callers charge param^2/2 zCDP to their ledger per draw.
size_t exponential_mechanism(std::span<const double> scores, double sensitivity, double param,
                             Rng& rng);

// Selection probabilities of the mechanism above (for tests and diagnostics).
std::vector<double> exponential_mechanism_probabilities(std::span<const double> scores,
                                                        double sensitivity, double param);

}  // namespace oegd
