#include "oegd/primal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace oegd {

namespace {

// Domains at most this large are materialized once per run; larger exact
// searches stream the enumeration per sample.
constexpr uint64_t kMaterializeCap = uint64_t(1) << 20;

std::vector<std::vector<double>> draw_sigmas(double eta, uint32_t dim, uint32_t samples,
                                             uint64_t seed, bool laplace) {
  std::vector<std::vector<double>> sigmas(samples);
  for (uint32_t j = 0; j < samples; ++j) {
    Rng rng(derive_seed(seed, {stream::kSample, j}));
    sigmas[j] = laplace ? sample_laplace_vector(eta, dim, rng)
                        : sample_exponential_vector(eta, dim, rng);
  }
  return sigmas;
}

OracleProblem history_problem(const std::vector<MarginalQuery>& history,
                              const GroupLayout& groups) {
  OracleProblem p;
  p.groups = groups;
  p.queries.reserve(history.size());
  for (const MarginalQuery& q : history) p.queries.push_back(WeightedQuery{q, 1.0});
  return p;
}

}  // namespace

std::vector<BitRow> fem_data_update(const std::vector<MarginalQuery>& history,
                                    const GroupLayout& groups, double eta, uint32_t samples,
                                    const OracleOptions& oracle, uint64_t seed) {
  if (samples == 0) raise(Errc::InvalidParam, "need at least one sample per round");
  if (!(eta > 0)) raise(Errc::InvalidParam, "eta must be positive");
  std::vector<std::vector<double>> sigmas = draw_sigmas(eta, groups.dim, samples, seed, false);
  std::vector<BitRow> out(samples);
  if (oracle.backend == OracleBackend::Exact) {
    if (groups.domain_size() <= std::min<uint64_t>(oracle.cap, kMaterializeCap)) {
      EnumeratedDomain dom = EnumeratedDomain::build(groups, oracle.cap);
      for (const MarginalQuery& q : history) dom.add_base_query(q, 1.0);
      std::vector<OracleSolution> sols = dom.solve_batch(sigmas);
      for (uint32_t j = 0; j < samples; ++j) out[j] = std::move(sols[j].record);
      return out;
    }
    OracleProblem p = history_problem(history, groups);
    for (uint32_t j = 0; j < samples; ++j) {
      p.sigma = sigmas[j];
      out[j] = solve_exact(p, oracle.cap).record;
    }
    return out;
  }
  OracleProblem p = history_problem(history, groups);
  for (uint32_t j = 0; j < samples; ++j) {
    p.sigma = sigmas[j];
    out[j] = solve_local_search(p, oracle.restarts, derive_seed(seed, {stream::kSample, j, 1}))
                 .record;
  }
  return out;
}

std::vector<BitRow> sepfem_data_update(const std::vector<MarginalQuery>& history,
                                       const std::vector<MarginalQuery>& separator,
                                       const GroupLayout& groups, double eta, uint32_t samples,
                                       const OracleOptions& oracle, uint64_t seed) {
  if (separator.empty()) raise(Errc::EmptySeparator, "separator set is empty");
  if (samples == 0) raise(Errc::InvalidParam, "need at least one sample per round");
  if (!(eta > 0)) raise(Errc::InvalidParam, "eta must be positive");
  uint32_t M = static_cast<uint32_t>(separator.size());
  std::vector<std::vector<double>> sigmas = draw_sigmas(eta, M, samples, seed, true);
  std::vector<std::vector<WeightedQuery>> overlays(samples);
  for (uint32_t j = 0; j < samples; ++j) {
    overlays[j].reserve(M);
    for (uint32_t i = 0; i < M; ++i)
      overlays[j].push_back(WeightedQuery{separator[i], sigmas[j][i]});
  }
  std::vector<BitRow> out(samples);
  if (oracle.backend == OracleBackend::Exact) {
    if (groups.domain_size() <= std::min<uint64_t>(oracle.cap, kMaterializeCap)) {
      EnumeratedDomain dom = EnumeratedDomain::build(groups, oracle.cap);
      for (const MarginalQuery& q : history) dom.add_base_query(q, 1.0);
      std::vector<OracleSolution> sols = dom.solve_overlay_batch(overlays);
      for (uint32_t j = 0; j < samples; ++j) out[j] = std::move(sols[j].record);
      return out;
    }
    for (uint32_t j = 0; j < samples; ++j) {
      OracleProblem p = history_problem(history, groups);
      for (const WeightedQuery& wq : overlays[j]) p.queries.push_back(wq);
      out[j] = solve_exact(p, oracle.cap).record;
    }
    return out;
  }
  for (uint32_t j = 0; j < samples; ++j) {
    OracleProblem p = history_problem(history, groups);
    for (const WeightedQuery& wq : overlays[j]) p.queries.push_back(wq);
    out[j] = solve_local_search(p, oracle.restarts, derive_seed(seed, {stream::kSample, j, 1}))
                 .record;
  }
  return out;
}

std::vector<MarginalQuery> build_separator(const Schema& schema) {
  std::vector<MarginalQuery> sep;
  sep.reserve(schema.dim());
  for (size_t a = 0; a < schema.attribute_count(); ++a)
    for (uint32_t v = 0; v < schema.cardinality(a); ++v)
      sep.push_back(make_marginal(schema, {static_cast<uint32_t>(a)}, {v}, false));
  return sep;
}

PrimalResult run_primal(const EncodedDataset& data, const Workload& w, const PrimalConfig& cfg) {
  if (cfg.rounds < 1) raise(Errc::InvalidParam, "rounds must be >= 1");
  if (cfg.samples < 1) raise(Errc::InvalidParam, "samples must be >= 1");
  if (!(cfg.eta > 0)) raise(Errc::InvalidParam, "eta must be positive");
  if (!(cfg.rho > 0)) raise(Errc::InvalidParam, "rho must be positive");
  require_closure(w);

  const size_t n = data.size();
  const GroupLayout groups = GroupLayout::from_schema(data.schema());

  // The only read of the private records in the whole run.
  const std::vector<double> true_answers = answer_vector(w, data);

  std::vector<MarginalQuery> separator;
  if (cfg.variant == PrimalVariant::SepFem) separator = build_separator(data.schema());

  const double rho0 = cfg.rho / static_cast<double>(cfg.rounds);
  const double em_param = std::sqrt(2.0 * rho0);
  PrivacyLedger ledger(cfg.rho);

  Rng init_rng(derive_seed(cfg.seed, {stream::kInit}));
  std::vector<MarginalQuery> history;
  history.push_back(w.queries[init_rng.below(w.size())]);

  PrimalResult result{SyntheticDataset{}, {}, ledger};
  result.synthetic.rows = BitMatrix(groups.dim);
  const double weight = 1.0 / (static_cast<double>(cfg.rounds) * cfg.samples);

  for (uint32_t t = 1; t <= cfg.rounds; ++t) {
    uint64_t round_seed = derive_seed(cfg.seed, {stream::kRound, t});
    auto t0 = std::chrono::steady_clock::now();
    std::vector<BitRow> records =
        cfg.variant == PrimalVariant::Fem
            ? fem_data_update(history, groups, cfg.eta, cfg.samples, cfg.oracle, round_seed)
            : sepfem_data_update(history, separator, groups, cfg.eta, cfg.samples, cfg.oracle,
                                 round_seed);
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();

    BitMatrix round_rows(groups.dim);
    round_rows.reserve_rows(records.size());
    for (const BitRow& r : records) round_rows.append(r);
    std::vector<double> synth_answers = answer_vector(w, round_rows);

    std::vector<double> scores(w.size());
    for (size_t q = 0; q < w.size(); ++q) scores[q] = true_answers[q] - synth_answers[q];

    // Final round lands exactly on the budget (floating-point sums of T
    // copies of rho/T can overshoot and trip the strict filter).
    double spend = (t < cfg.rounds) ? rho0 : cfg.rho - result.ledger.total();
    if (result.ledger.charge(spend) == LedgerState::Halt)
      raise(Errc::LedgerHalted, "privacy filter halted inside run_primal");

    Rng em_rng(derive_seed(cfg.seed, {stream::kSelect, t}));
    size_t chosen = exponential_mechanism(scores, 1.0 / static_cast<double>(n), em_param, em_rng);

    RoundTrace trace;
    trace.t = t;
    trace.query_id = chosen;
    trace.score = scores[chosen];
    trace.oracle_ms = ms;
    trace.rho_t = spend;
    result.traces.push_back(trace);

    history.push_back(w.queries[chosen]);
    for (const BitRow& r : records) {
      result.synthetic.rows.append(r);
      result.synthetic.weights.push_back(weight);
      result.synthetic.round_of.push_back(t);
    }
  }
  return result;
}

uint32_t sample_count_formula(double alpha, double beta, uint32_t rounds, size_t workload_size) {
  if (!(alpha > 0) || !(alpha < 1) || !(beta > 0) || !(beta < 1))
    raise(Errc::InvalidParam, "alpha and beta must lie in (0,1)");
  if (rounds == 0 || workload_size == 0) raise(Errc::InvalidParam, "rounds/workload must be positive");
  double v = 8.0 *
             std::log(4.0 * static_cast<double>(rounds) * static_cast<double>(workload_size) /
                      beta) /
             (alpha * alpha);
  return static_cast<uint32_t>(std::max(1.0, std::ceil(v)));
}

double fem_eta_formula(uint32_t rounds, uint32_t d) {
  return std::sqrt(1.0 / (2500.0 * static_cast<double>(rounds) * static_cast<double>(d)));
}

HyperParams default_hyperparameters(PrimalVariant variant, uint32_t d, size_t n,
                                    size_t workload_size, double rho, double alpha, double beta) {
  if (d == 0 || n == 0 || workload_size < 2) raise(Errc::InvalidParam, "degenerate instance");
  if (!(rho > 0)) raise(Errc::InvalidParam, "rho must be positive");
  double dn = static_cast<double>(n);
  double dd = static_cast<double>(d);
  double denom = std::sqrt(2.0 / (rho * dn * dn)) * std::log(static_cast<double>(workload_size));
  HyperParams h;
  double rounds_real;
  if (variant == PrimalVariant::Fem) {
    rounds_real = (5.0 * std::pow(dd, 1.5) / 2.0) / denom;
  } else {
    double M = dd;  // separator size for one-hot marginals
    rounds_real = std::pow(M, 0.75) * std::sqrt(dd) * std::sqrt(40.0) / denom;
  }
  h.rounds = static_cast<uint32_t>(std::max(1.0, std::ceil(rounds_real)));
  if (variant == PrimalVariant::Fem) {
    h.eta = fem_eta_formula(h.rounds, d);
  } else {
    double M = dd;
    h.eta = std::sqrt(5.0 * dd / (2.0 * std::sqrt(M) * static_cast<double>(h.rounds)));
  }
  h.samples = sample_count_formula(alpha, beta, h.rounds, workload_size);
  return h;
}

RegretReport empirical_regret(const PrimalResult& result, const Workload& w,
                              const std::vector<double>& true_answers, const GroupLayout& groups,
                              const OracleOptions& oracle) {
  if (result.traces.empty()) raise(Errc::InvalidParam, "no traces to analyze");
  if (true_answers.size() != w.size())
    raise(Errc::DimensionMismatch, "true answers/workload length mismatch");
  if (oracle.backend != OracleBackend::Exact)
    raise(Errc::RequiresExactOracle, "data-player regret needs the exact oracle");

  const double T = static_cast<double>(result.traces.size());
  double avg_score = 0.0, avg_true = 0.0;
  OracleProblem hist;
  hist.groups = groups;
  for (const RoundTrace& tr : result.traces) {
    avg_score += tr.score;
    avg_true += true_answers[tr.query_id];
    hist.queries.push_back(WeightedQuery{w.queries[tr.query_id], 1.0});
  }
  avg_score /= T;
  avg_true /= T;

  // min_x avg_t A(x, q_t) = avg_t q_t(D) - (1/T) max_x sum_t q_t(x)
  double max_hist = solve_exact(hist, oracle.cap).objective;
  double min_payoff = avg_true - max_hist / T;

  // Output is the uniform mixture of rounds, so q(final) = avg_t q(D-hat^t).
  std::vector<double> final_answers = answer_vector(w, result.synthetic);
  double max_gap = -std::numeric_limits<double>::infinity();
  for (size_t q = 0; q < w.size(); ++q)
    max_gap = std::max(max_gap, true_answers[q] - final_answers[q]);

  RegretReport r;
  r.data_regret = avg_score - min_payoff;
  r.query_regret = max_gap - avg_score;
  return r;
}

}  // namespace oegd
