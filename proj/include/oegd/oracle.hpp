#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "oegd/bits.hpp"
#include "oegd/marginals.hpp"
#include "oegd/schema.hpp"

namespace oegd {

// maximize  sum_i weight_i * q_i(x)  -  <x, sigma>  over one-hot valid x.
//
// The perturbation vector may be empty (no linear term).  Privacy rests on
// this problem never containing dataset terms: inputs are queries and noise
// only.
struct WeightedQuery {
  MarginalQuery query;
  double weight = 0.0;
};

struct OracleProblem {
  GroupLayout groups;
  std::vector<WeightedQuery> queries;
  std::vector<double> sigma;  // length groups.dim or empty
};

struct OracleSolution {
  BitRow record;
  double objective = 0.0;
  bool exact = false;
};

inline constexpr uint64_t kDefaultSearchCap = uint64_t(1) << 24;

// Objective of a candidate record, evaluated in the one canonical order used
// everywhere: queries left to right, then the perturbation dot product over
// ascending bit indices.
double oracle_objective(const OracleProblem& p, const uint64_t* row, uint32_t words);
double oracle_objective(const OracleProblem& p, const BitRow& x);

// Exhaustive search over the one-hot domain; ties broken by lexicographically
// smallest record.  Throws SearchSpaceTooLarge past the cap.  The default
// driver splits the domain across OpenMP threads; the serial twin is the
// reference.
OracleSolution solve_exact(const OracleProblem& p, uint64_t cap = kDefaultSearchCap);
OracleSolution solve_exact_serial(const OracleProblem& p, uint64_t cap = kDefaultSearchCap);

// Multi-restart coordinate search: per restart, start from a random valid
// record and repeatedly move the active bit within one group while the
// objective improves.  Deterministic per seed; exact=false.
OracleSolution solve_local_search(const OracleProblem& p, uint32_t restarts, uint64_t seed);

// Writes the problem as solver-neutral LP-style text: one objective, one
// constraint per query (complemented-bit form for negated queries), one
// one-hot equality per group, binary declarations.  Variables x0..x{d-1}
// (record bits) and c0..c{t-1} (query satisfaction indicators).
void export_mip(const OracleProblem& p, std::ostream& out);
void export_mip_file(const OracleProblem& p, const std::string& path);

// A_D(x, q~) = sum_j w_j * (q_j(D) - q_j(x)) for a weighted bundle whose
// true answers on D were computed by the caller.
double best_response_payoff(std::span<const WeightedQuery> bundle,
                            std::span<const double> true_answers, const BitRow& x);

// ---------------------------------------------------------------------------
// Enumerated-domain batch path.
//
// The engines solve many problems that share a growing base query set and
// differ only in a per-sample perturbation.  Materializing every valid record
// once and caching per-record base sums turns each sample into a linear scan;
// incremental base updates keep the arithmetic identical to solve_exact
// (same query order, same dot helper, same tie-break).
class EnumeratedDomain {
 public:
  static EnumeratedDomain build(const GroupLayout& groups, uint64_t cap = kDefaultSearchCap);

  size_t size() const { return records_.n; }
  const BitMatrix& records() const { return records_; }
  const GroupLayout& groups() const { return groups_; }

  // 0/1 satisfaction column of one query over all records.
  std::vector<uint8_t> sat_column(const MarginalQuery& q) const;

  void reset_base();
  void add_base_query(const MarginalQuery& q, double weight);

  // argmax over records of base[r] - <x_r, sigma> (sigma may be empty);
  // overlay queries are added on top of the base in list order.
  OracleSolution solve(std::span<const double> sigma,
                       std::span<const WeightedQuery> overlay = {}) const;

  // Batch of independent perturbations, parallel over samples; results are
  // positionally identical to calling solve() per sample.
  std::vector<OracleSolution> solve_batch(std::span<const std::vector<double>> sigmas) const;
  std::vector<OracleSolution> solve_batch_serial(
      std::span<const std::vector<double>> sigmas) const;
  std::vector<OracleSolution> solve_overlay_batch(
      std::span<const std::vector<WeightedQuery>> overlays) const;

 private:
  GroupLayout groups_;
  BitMatrix records_;
  std::vector<double> base_;

  OracleSolution solve_one(std::span<const double> sigma,
                           std::span<const WeightedQuery> overlay) const;
};

}  // namespace oegd
