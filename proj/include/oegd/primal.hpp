#pragma once

#include <cstdint>
#include <vector>

#include "oegd/dataset.hpp"
#include "oegd/marginals.hpp"
#include "oegd/oracle.hpp"
#include "oegd/privacy.hpp"

namespace oegd {

enum class PrimalVariant { Fem, SepFem };
enum class OracleBackend { Exact, Local };

struct OracleOptions {
  OracleBackend backend = OracleBackend::Exact;
  uint64_t cap = kDefaultSearchCap;
  uint32_t restarts = 16;
};

struct PrimalConfig {
  PrimalVariant variant = PrimalVariant::Fem;
  uint32_t rounds = 0;   // T
  double eta = 0.0;      // perturbation scale
  uint32_t samples = 0;  // s oracle draws per round
  double rho = 0.0;      // total zCDP budget
  OracleOptions oracle;
  uint64_t seed = 0;
};

struct RoundTrace {
  uint32_t t = 0;
  size_t query_id = 0;
  double score = 0.0;
  double oracle_ms = 0.0;  // in-memory diagnostic; written only to the timing sidecar
  // dual-engine pool accounting (zero for the primal variants)
  uint32_t kept = 0, fresh = 0, rejected = 0;
  double rho_t = 0.0;
};

struct PrimalResult {
  SyntheticDataset synthetic;
  std::vector<RoundTrace> traces;
  PrivacyLedger ledger;
};

// FTPL update (FEM): s records, sample j solving
//   argmax_x { sum_{q in history} q(x) - <x, sigma_j> },  sigma_j ~ Exp(eta)^d.
// sigma_j is drawn from Rng(derive_seed(seed, {stream::kSample, j})); the
// function never sees the dataset.
std::vector<BitRow> fem_data_update(const std::vector<MarginalQuery>& history,
                                    const GroupLayout& groups, double eta, uint32_t samples,
                                    const OracleOptions& oracle, uint64_t seed);

// FTPL update (sepFEM): the perturbation enters as weighted separator queries,
//   argmax_x { sum_{q in history} q(x) + sum_i sigma_{j,i} * sep_i(x) },
// sigma_j ~ Lap(eta)^M.
std::vector<BitRow> sepfem_data_update(const std::vector<MarginalQuery>& history,
                                       const std::vector<MarginalQuery>& separator,
                                       const GroupLayout& groups, double eta, uint32_t samples,
                                       const OracleOptions& oracle, uint64_t seed);

// The d single-bit indicator queries (arity-1 marginals, one per bit):
// any two distinct domain-valid records differ on at least one of them.
std::vector<MarginalQuery> build_separator(const Schema& schema);

// No-regret dynamics: T rounds of data-player update, scoring against the
// true answers (computed once, up front), exponential-mechanism query
// selection at sensitivity 1/n, and one ledger charge of rho/T per round.
// The initial uniform query draw is free.  Output is the uniform union of
// all rounds' records.
PrimalResult run_primal(const EncodedDataset& data, const Workload& w, const PrimalConfig& cfg);

struct HyperParams {
  uint32_t rounds = 0;
  double eta = 0.0;
  uint32_t samples = 0;
};

// Theory-driven presets (natural logs, ceilings to integers >= 1):
//   s      = ceil(8 ln(4 T |Q| / beta) / alpha^2)
//   FEM    : T = (5 d^{3/2} / 2) / (sqrt(2/(rho n^2)) ln|Q|),  eta = sqrt(1/(2500 T d))
//   sepFEM : T = M^{3/4} d^{1/2} sqrt(40) / (sqrt(2/(rho n^2)) ln|Q|),  M = d,
//            eta = sqrt(5 d / (2 sqrt(M) T))
HyperParams default_hyperparameters(PrimalVariant variant, uint32_t d, size_t n,
                                    size_t workload_size, double rho, double alpha, double beta);

// The s formula alone, for callers that fix T themselves.
uint32_t sample_count_formula(double alpha, double beta, uint32_t rounds, size_t workload_size);

double fem_eta_formula(uint32_t rounds, uint32_t d);

struct RegretReport {
  double data_regret = 0.0;
  double query_regret = 0.0;
};

// Realized regrets of the two players, computed from the traces and final
// synthetic dataset; the data player's counterfactual minimum needs the exact
// oracle (RequiresExactOracle otherwise).
RegretReport empirical_regret(const PrimalResult& result, const Workload& w,
                              const std::vector<double>& true_answers, const GroupLayout& groups,
                              const OracleOptions& oracle);

}  // namespace oegd
