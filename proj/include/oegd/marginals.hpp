#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oegd/bits.hpp"
#include "oegd/dataset.hpp"
#include "oegd/schema.hpp"

namespace oegd {

// A k-way marginal: fixes k attributes to target values.  The k-hot mask is
// the evaluation fast path; a record satisfies the positive query iff
// popcount(record & mask) == arity, and the negated query iff it does not.
struct MarginalQuery {
  std::vector<uint32_t> features;  // attribute indices, ascending
  std::vector<uint32_t> targets;   // value index per feature
  bool negated = false;
  BitRow mask;                     // derived from (features, targets)
  uint32_t arity = 0;

  bool eval_words(const uint64_t* row, uint32_t words) const {
    return (and_popcount(row, mask.w.data(), words) == arity) != negated;
  }
};

MarginalQuery make_marginal(const Schema& schema, std::vector<uint32_t> features,
                            std::vector<uint32_t> targets, bool negated);
MarginalQuery negate(const MarginalQuery& q);

// Checked single-record evaluation (0.0 or 1.0).
double eval_query(const MarginalQuery& q, const BitRow& record);

// Query list closed under negation: queries[2i+1] == negate(queries[2i]).
struct Workload {
  std::vector<MarginalQuery> queries;
  uint32_t dim = 0;

  size_t size() const { return queries.size(); }

  std::string to_json_text() const;
  static Workload from_json_text(const std::string& text, const Schema& schema);
  static Workload load(const std::string& path, const Schema& schema);
  void save(const std::string& path) const;
};

// Uniformly samples num_marginals attribute k-subsets without replacement,
// expands every target combination, and interleaves negations.
// num_marginals = 0 selects all subsets.
Workload enumerate_marginals(const Schema& schema, uint32_t k, size_t num_marginals,
                             uint64_t seed);

// Raises DegenerateWorkload unless queries[2i+1] is the negation of queries[2i]
// for all i (the closure the engines' signed payoffs rely on).
void require_closure(const Workload& w);

// q(D) for every workload query: exact counts over n records, parallel over
// queries.  The *_serial twin is the reference implementation.
std::vector<double> answer_vector(const Workload& w, const EncodedDataset& data);
std::vector<double> answer_vector_serial(const Workload& w, const EncodedDataset& data);

// Weighted answers on a synthetic dataset (weights need not be normalized;
// the weighted count is divided by the weight total).
std::vector<double> answer_vector(const Workload& w, const SyntheticDataset& synth);
std::vector<double> answer_vector_serial(const Workload& w, const SyntheticDataset& synth);

// Uniform answers over a bare record matrix (count / n).
std::vector<double> answer_vector(const Workload& w, const BitMatrix& rows);
std::vector<double> answer_vector_serial(const Workload& w, const BitMatrix& rows);

// All workload queries evaluated on a single record (entries in {0,1}).
std::vector<double> record_answers(const Workload& w, const BitRow& record);

// max_i |a[i] - b[i]|; DimensionMismatch when lengths differ.
double max_error(std::span<const double> a, std::span<const double> b);

void write_answers_csv(const std::string& path, std::span<const double> answers);

}  // namespace oegd
