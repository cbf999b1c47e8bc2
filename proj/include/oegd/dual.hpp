#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "oegd/dataset.hpp"
#include "oegd/marginals.hpp"
#include "oegd/primal.hpp"
#include "oegd/privacy.hpp"

namespace oegd {

// Parameters of the multiplicative-weights dual dynamics:
//   T = ceil(16 ln|Q| / alpha^2),  eta = alpha/4,
//   s = ceil(48 ln(3 |X| T / beta) / alpha^2),
//   gamma_t = 1 / (2 t^{2/3}),  s~_t = ceil((2 gamma_t + 4 eta) s).
struct DqrsParams {
  double alpha = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  uint32_t rounds = 0;   // T
  uint32_t samples = 0;  // s
};

// log_domain_size is ln|X|; for one-hot records over {0,1}^d this is d*ln(2).
DqrsParams dqrs_params(double alpha, double beta, size_t workload_size, double log_domain_size);

double dqrs_gamma(uint32_t t);
uint32_t dqrs_resample_count(const DqrsParams& p, uint32_t t);  // s~_t

// Normalized log-weights over the workload.
struct MwState {
  std::vector<double> log_w;

  std::vector<double> probabilities() const;
};

MwState mw_init(size_t workload_size);

struct MwUpdate {
  MwState next;
  std::vector<double> accept_ratios;  // p_q = e^{-eta-gamma} e^{-eta A_q} in (0, e^{-gamma}]
};

// One multiplicative-weights step against payoffs A_q = q(D) - q(x^t).
MwUpdate mw_update(const MwState& state, std::span<const double> payoffs, double eta,
                   double gamma);

struct SamplePool {
  std::vector<uint32_t> items;  // query ids, |items| = s after construction
  uint32_t kept = 0;
  uint32_t fresh = 0;     // fresh draws made (scheduled + refills)
  uint32_t rejected = 0;  // filtered recycled elements
  uint32_t refilled = 0;  // fresh draws beyond the scheduled s~_t
};

// Keeps each pool element independently with its query's acceptance ratio,
// appends scheduled_fresh draws from the next state, refills from the next
// state on underflow, and uniformly downsamples to target_size on overflow.
SamplePool rejection_resample(const SamplePool& pool, std::span<const double> accept_ratios,
                              const MwState& next, uint32_t target_size, uint32_t scheduled_fresh,
                              Rng& rng);

struct DualResult {
  SyntheticDataset synthetic;
  std::vector<RoundTrace> traces;
  PrivacyLedger ledger;
};

// DQRS (rejection-sampling DualQuery): pools are recycled between rounds.
// Per-round ledger charge:
//   rho_t = s * eta^2 / (2 gamma_t^2 n^2) + (s~_t + refills) * 2 eta^2 (t-1)^2 / n^2.
// budget_cap < infinity turns the ledger into a hard filter (BudgetExceeded on HALT).
DualResult run_dqrs(const EncodedDataset& data, const Workload& w, double alpha, double beta,
                    const OracleOptions& oracle, uint64_t seed,
                    double budget_cap = std::numeric_limits<double>::infinity());

// Baseline DualQuery: s fresh draws per round, charged s * (1/2)(2 eta (t-1)/n)^2.
DualResult run_dualquery(const EncodedDataset& data, const Workload& w, double alpha, double beta,
                         const OracleOptions& oracle, uint64_t seed,
                         double budget_cap = std::numeric_limits<double>::infinity());

struct DqrsCost {
  double exact = 0.0;  // sum of the per-round exact expressions (scheduled s~_t only)
  double bound = 0.0;  // sum of the proof's per-round bound (eta^2 s/n^2)(4 t^{4/3} + 8 eta t^2)
};

DqrsCost dqrs_privacy_cost(const DqrsParams& p, size_t n);

double dualquery_privacy_cost(const DqrsParams& p, size_t n);

}  // namespace oegd
