#include "oegd/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

namespace oegd {

PrivacyLedger::PrivacyLedger(double budget) : budget_(budget) {
  if (!(budget >= 0)) raise(Errc::InvalidParam, "ledger budget must be nonnegative");
}

LedgerState PrivacyLedger::charge(double rho) {
  if (state_ == LedgerState::Halt) raise(Errc::ChargeAfterHalt, "ledger already halted");
  if (!(rho >= 0) || !std::isfinite(rho))
    raise(Errc::InvalidParam, "charge must be finite and nonnegative");
  spends_.push_back(rho);
  total_ += rho;
  if (total_ > budget_) state_ = LedgerState::Halt;
  return state_;
}

std::string PrivacyLedger::to_json_text() const {
  nlohmann::ordered_json j;
  // JSON has no infinity; an unbounded ledger stores the string marker.
  if (std::isfinite(budget_))
    j["budget"] = budget_;
  else
    j["budget"] = "unbounded";
  j["spends"] = spends_;
  j["state"] = state_ == LedgerState::Halt ? "HALT" : "CONT";
  return j.dump(2);
}

PrivacyLedger PrivacyLedger::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  PrivacyLedger ledger(j.at("budget").is_string() ? std::numeric_limits<double>::infinity()
                                                  : j.at("budget").get<double>());
  for (double rho : j.at("spends").get<std::vector<double>>()) {
    if (ledger.state() == LedgerState::Halt) break;
    ledger.charge(rho);
  }
  return ledger;
}

double dp_to_zcdp(double epsilon) {
  if (!(epsilon >= 0)) raise(Errc::InvalidParam, "epsilon must be nonnegative");
  return 0.5 * epsilon * epsilon;
}

double zcdp_to_dp(double rho, double delta) {
  if (!(rho >= 0)) raise(Errc::InvalidParam, "rho must be nonnegative");
  if (!(delta > 0) || !(delta < 1)) raise(Errc::DeltaOutOfRange, "delta must lie in (0,1)");
  return rho + 2.0 * std::sqrt(rho * std::log(1.0 / delta));
}

double invert_budget(double epsilon, double delta) {
  if (!(epsilon > 0)) raise(Errc::InvalidParam, "epsilon must be positive");
  if (!(delta > 0) || !(delta < 1)) raise(Errc::DeltaOutOfRange, "delta must lie in (0,1)");
  double L = std::log(1.0 / delta);
  double u = std::sqrt(L + epsilon) - std::sqrt(L);
  return u * u;
}

double advanced_composition(std::span<const double> epsilons, double delta) {
  if (!(delta > 0) || !(delta < 1)) raise(Errc::DeltaOutOfRange, "delta must lie in (0,1)");
  double linear = 0.0, squares = 0.0;
  for (double e : epsilons) {
    if (!(e >= 0)) raise(Errc::InvalidParam, "epsilon must be nonnegative");
    linear += e * std::expm1(e);
    squares += e * e;
  }
  return linear + std::sqrt(squares * std::log(1.0 / delta) / 2.0);
}

namespace {

// Max-stabilized log-weights; shared by the sampler and the probability view.
std::vector<double> stabilized_weights(std::span<const double> scores, double sensitivity,
                                       double param) {
  if (scores.empty()) raise(Errc::EmptyCandidates, "exponential mechanism over no candidates");
  if (!(sensitivity > 0)) raise(Errc::InvalidParam, "sensitivity must be positive");
  if (!(param >= 0)) raise(Errc::InvalidParam, "mechanism parameter must be nonnegative");
  double scale = param / (2.0 * sensitivity);
  double top = -std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (!std::isfinite(s)) raise(Errc::InvalidParam, "scores must be finite");
    top = std::max(top, scale * s);
  }
  std::vector<double> w(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) w[i] = std::exp(scale * scores[i] - top);
  return w;
}

}  // namespace

size_t exponential_mechanism(std::span<const double> scores, double sensitivity, double param,
                             Rng& rng) {
  std::vector<double> w = stabilized_weights(scores, sensitivity, param);
  for (size_t i = 1; i < w.size(); ++i) w[i] += w[i - 1];
  return rng.categorical_from_cumulative(w);
}

std::vector<double> exponential_mechanism_probabilities(std::span<const double> scores,
                                                        double sensitivity, double param) {
  std::vector<double> w = stabilized_weights(scores, sensitivity, param);
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
  return w;
}

}  // namespace oegd
