#include "oegd/dual.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>

namespace oegd {

DqrsParams dqrs_params(double alpha, double beta, size_t workload_size, double log_domain_size) {
  if (!(alpha > 0) || !(alpha < 1) || !(beta > 0) || !(beta < 1))
    raise(Errc::InvalidParam, "alpha and beta must lie in (0,1)");
  if (workload_size < 2) raise(Errc::DegenerateWorkload, "need at least two queries");
  if (!(log_domain_size > 0)) raise(Errc::InvalidParam, "log domain size must be positive");
  DqrsParams p;
  p.alpha = alpha;
  p.beta = beta;
  p.eta = alpha / 4.0;
  double a2 = alpha * alpha;
  p.rounds = static_cast<uint32_t>(
      std::max(1.0, std::ceil(16.0 * std::log(static_cast<double>(workload_size)) / a2)));
  double ls = 48.0 *
              (std::log(3.0) + log_domain_size + std::log(static_cast<double>(p.rounds)) -
               std::log(beta)) /
              a2;
  p.samples = static_cast<uint32_t>(std::max(1.0, std::ceil(ls)));
  return p;
}

double dqrs_gamma(uint32_t t) {
  if (t == 0) raise(Errc::InvalidParam, "rounds are 1-based");
  return 1.0 / (2.0 * std::pow(static_cast<double>(t), 2.0 / 3.0));
}

uint32_t dqrs_resample_count(const DqrsParams& p, uint32_t t) {
  double v = (2.0 * dqrs_gamma(t) + 4.0 * p.eta) * static_cast<double>(p.samples);
  return static_cast<uint32_t>(std::ceil(v));
}

std::vector<double> MwState::probabilities() const {
  std::vector<double> prob(log_w.size());
  double top = -std::numeric_limits<double>::infinity();
  for (double lw : log_w) top = std::max(top, lw);
  double total = 0.0;
  for (size_t i = 0; i < log_w.size(); ++i) {
    prob[i] = std::exp(log_w[i] - top);
    total += prob[i];
  }
  for (double& x : prob) x /= total;
  return prob;
}

MwState mw_init(size_t workload_size) {
  if (workload_size == 0) raise(Errc::DegenerateWorkload, "empty workload");
  MwState s;
  s.log_w.assign(workload_size, -std::log(static_cast<double>(workload_size)));
  return s;
}

MwUpdate mw_update(const MwState& state, std::span<const double> payoffs, double eta,
                   double gamma) {
  if (payoffs.size() != state.log_w.size())
    raise(Errc::DimensionMismatch, "payoffs/state length mismatch");
  if (!(eta > 0) || !(gamma > 0)) raise(Errc::InvalidParam, "eta and gamma must be positive");
  MwUpdate out;
  out.accept_ratios.resize(payoffs.size());
  out.next.log_w.resize(payoffs.size());
  for (size_t q = 0; q < payoffs.size(); ++q) {
    out.accept_ratios[q] = std::exp(-eta - gamma - eta * payoffs[q]);
    out.next.log_w[q] = state.log_w[q] - eta * payoffs[q];
  }
  // Normalize in log space (the e^{-eta-gamma} factor cancels).
  double top = -std::numeric_limits<double>::infinity();
  for (double lw : out.next.log_w) top = std::max(top, lw);
  double total = 0.0;
  for (double lw : out.next.log_w) total += std::exp(lw - top);
  double log_z = top + std::log(total);
  for (double& lw : out.next.log_w) lw -= log_z;
  return out;
}

namespace {

std::vector<double> cumulative(const std::vector<double>& prob) {
  std::vector<double> cum(prob.size());
  double acc = 0.0;
  for (size_t i = 0; i < prob.size(); ++i) {
    acc += prob[i];
    cum[i] = acc;
  }
  return cum;
}

}  // namespace

SamplePool rejection_resample(const SamplePool& pool, std::span<const double> accept_ratios,
                              const MwState& next, uint32_t target_size, uint32_t scheduled_fresh,
                              Rng& rng) {
  if (target_size == 0) raise(Errc::InvalidParam, "pool target size must be positive");
  for (double p : accept_ratios)
    if (!(p > 0) || p > 1.0) raise(Errc::InvalidParam, "acceptance ratios must lie in (0,1]");
  SamplePool out;
  out.items.reserve(target_size + scheduled_fresh);
  for (uint32_t id : pool.items) {
    if (id >= accept_ratios.size()) raise(Errc::DimensionMismatch, "pool item out of range");
    if (rng.uniform() < accept_ratios[id])
      out.items.push_back(id);
    else
      ++out.rejected;
  }
  out.kept = static_cast<uint32_t>(out.items.size());

  std::vector<double> cum = cumulative(next.probabilities());
  for (uint32_t j = 0; j < scheduled_fresh; ++j)
    out.items.push_back(static_cast<uint32_t>(rng.categorical_from_cumulative(cum)));
  out.fresh = scheduled_fresh;

  while (out.items.size() < target_size) {
    out.items.push_back(static_cast<uint32_t>(rng.categorical_from_cumulative(cum)));
    ++out.fresh;
    ++out.refilled;
  }
  if (out.items.size() > target_size) {
    // Uniform down-sample: partial Fisher-Yates, keep the first target_size.
    for (uint32_t i = 0; i < target_size; ++i) {
      size_t j = i + static_cast<size_t>(rng.below(out.items.size() - i));
      std::swap(out.items[i], out.items[j]);
    }
    out.items.resize(target_size);
  }
  return out;
}

namespace {

struct RoundSolve {
  BitRow record;
  double payoff = 0.0;  // A_D(x^t, q~_t) with normalized bundle weights
};

class BestResponder {
 public:
  BestResponder(const Workload& w, const GroupLayout& groups, const OracleOptions& oracle,
                uint64_t seed)
      : w_(w), groups_(groups), oracle_(oracle), seed_(seed) {
    if (oracle.backend == OracleBackend::Exact &&
        groups.domain_size() <= std::min<uint64_t>(oracle.cap, uint64_t(1) << 20))
      domain_.emplace(EnumeratedDomain::build(groups, oracle.cap));
  }

  // Maximizes A_D(x, q~) = q~(D) - q~(x), i.e. minimizes the weighted count;
  // integer multiplicities with negated sign keep the arithmetic exact.
  BitRow solve(const std::vector<uint32_t>& counts, uint32_t t) const {
    if (domain_) {
      domain_->reset_base();
      for (size_t q = 0; q < counts.size(); ++q)
        if (counts[q] > 0)
          domain_->add_base_query(w_.queries[q], -static_cast<double>(counts[q]));
      return domain_->solve({}).record;
    }
    OracleProblem p;
    p.groups = groups_;
    for (size_t q = 0; q < counts.size(); ++q)
      if (counts[q] > 0)
        p.queries.push_back(WeightedQuery{w_.queries[q], -static_cast<double>(counts[q])});
    if (oracle_.backend == OracleBackend::Exact) return solve_exact(p, oracle_.cap).record;
    return solve_local_search(p, oracle_.restarts, derive_seed(seed_, {stream::kRound, t, 1}))
        .record;
  }

 private:
  const Workload& w_;
  GroupLayout groups_;
  OracleOptions oracle_;
  uint64_t seed_;
  mutable std::optional<EnumeratedDomain> domain_;
};

DualResult run_dual_core(const EncodedDataset& data, const Workload& w, double alpha, double beta,
                         const OracleOptions& oracle, uint64_t seed, double budget_cap,
                         bool rejection) {
  require_closure(w);
  DqrsParams params =
      dqrs_params(alpha, beta, w.size(), static_cast<double>(data.dim()) * std::log(2.0));
  const size_t n = data.size();
  const double dn = static_cast<double>(n);
  const GroupLayout groups = GroupLayout::from_schema(data.schema());

  // The single bulk read of the private records.
  const std::vector<double> true_answers = answer_vector(w, data);

  BestResponder responder(w, groups, oracle, seed);
  MwState state = mw_init(w.size());

  SamplePool pool;
  {
    Rng rng(derive_seed(seed, {stream::kPool, 0}));
    pool.items.resize(params.samples);
    for (uint32_t i = 0; i < params.samples; ++i)
      pool.items[i] = static_cast<uint32_t>(rng.below(w.size()));
    pool.fresh = params.samples;
  }

  DualResult result{SyntheticDataset{}, {}, PrivacyLedger(budget_cap)};
  result.synthetic.rows = BitMatrix(groups.dim);
  const double weight = 1.0 / static_cast<double>(params.rounds);
  const double eta = params.eta;

  std::vector<uint32_t> counts(w.size());
  for (uint32_t t = 1; t <= params.rounds; ++t) {
    std::fill(counts.begin(), counts.end(), 0);
    for (uint32_t id : pool.items) ++counts[id];

    auto t0 = std::chrono::steady_clock::now();
    BitRow x = responder.solve(counts, t);
    double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    std::vector<double> rec = record_answers(w, x);
    std::vector<double> payoffs(w.size());
    for (size_t q = 0; q < w.size(); ++q) payoffs[q] = true_answers[q] - rec[q];

    double bundle_payoff = 0.0;
    for (size_t q = 0; q < w.size(); ++q)
      if (counts[q]) bundle_payoff += static_cast<double>(counts[q]) * payoffs[q];
    bundle_payoff /= static_cast<double>(params.samples);

    double gamma = dqrs_gamma(t);
    MwUpdate upd = mw_update(state, payoffs, eta, gamma);

    RoundTrace trace;
    trace.t = t;
    trace.score = bundle_payoff;
    trace.oracle_ms = ms;

    double tm1 = static_cast<double>(t) - 1.0;
    double fresh_rate = 2.0 * eta * eta * tm1 * tm1 / (dn * dn);
    double rho_t;
    if (rejection) {
      uint32_t scheduled = dqrs_resample_count(params, t);
      Rng rng(derive_seed(seed, {stream::kPool, t}));
      SamplePool next_pool =
          rejection_resample(pool, upd.accept_ratios, upd.next, params.samples, scheduled, rng);
      rho_t = static_cast<double>(params.samples) * eta * eta / (2.0 * gamma * gamma * dn * dn) +
              static_cast<double>(scheduled + next_pool.refilled) * fresh_rate;
      trace.kept = next_pool.kept;
      trace.fresh = next_pool.fresh;
      trace.rejected = next_pool.rejected;
      pool = std::move(next_pool);
    } else {
      rho_t = static_cast<double>(params.samples) * fresh_rate;
      trace.kept = 0;
      trace.fresh = params.samples;
      trace.rejected = 0;
      if (t < params.rounds) {
        Rng rng(derive_seed(seed, {stream::kPool, t}));
        std::vector<double> cum = cumulative(upd.next.probabilities());
        for (uint32_t i = 0; i < params.samples; ++i)
          pool.items[i] = static_cast<uint32_t>(rng.categorical_from_cumulative(cum));
      }
    }
    trace.rho_t = rho_t;
    if (result.ledger.charge(rho_t) == LedgerState::Halt)
      raise(Errc::BudgetExceeded, "privacy filter halted at round " + std::to_string(t));
    result.traces.push_back(trace);

    state = std::move(upd.next);
    result.synthetic.rows.append(x);
    result.synthetic.weights.push_back(weight);
    result.synthetic.round_of.push_back(t);
  }
  return result;
}

}  // namespace

DualResult run_dqrs(const EncodedDataset& data, const Workload& w, double alpha, double beta,
                    const OracleOptions& oracle, uint64_t seed, double budget_cap) {
  return run_dual_core(data, w, alpha, beta, oracle, seed, budget_cap, true);
}

DualResult run_dualquery(const EncodedDataset& data, const Workload& w, double alpha, double beta,
                         const OracleOptions& oracle, uint64_t seed, double budget_cap) {
  return run_dual_core(data, w, alpha, beta, oracle, seed, budget_cap, false);
}

DqrsCost dqrs_privacy_cost(const DqrsParams& p, size_t n) {
  if (n == 0) raise(Errc::InvalidParam, "n must be positive");
  double dn = static_cast<double>(n);
  double s = static_cast<double>(p.samples);
  DqrsCost c;
  for (uint32_t t = 1; t <= p.rounds; ++t) {
    double gamma = dqrs_gamma(t);
    double tm1 = static_cast<double>(t) - 1.0;
    c.exact += s * p.eta * p.eta / (2.0 * gamma * gamma * dn * dn) +
               static_cast<double>(dqrs_resample_count(p, t)) * 2.0 * p.eta * p.eta * tm1 * tm1 /
                   (dn * dn);
    double td = static_cast<double>(t);
    c.bound += (p.eta * p.eta * s / (dn * dn)) *
               (4.0 * std::pow(td, 4.0 / 3.0) + 8.0 * p.eta * td * td);
  }
  return c;
}

double dualquery_privacy_cost(const DqrsParams& p, size_t n) {
  if (n == 0) raise(Errc::InvalidParam, "n must be positive");
  double dn = static_cast<double>(n);
  double total = 0.0;
  for (uint32_t t = 1; t <= p.rounds; ++t) {
    double tm1 = static_cast<double>(t) - 1.0;
    total += static_cast<double>(p.samples) * 2.0 * p.eta * p.eta * tm1 * tm1 / (dn * dn);
  }
  return total;
}

}  // namespace oegd
