#include "oegd/marginals.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "oegd/rng.hpp"

namespace oegd {

namespace {

// Exact C(n,k) saturating at 2^62 (only magnitudes matter above the caps).
uint64_t binomial(uint64_t n, uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  uint64_t r = 1;
  constexpr uint64_t kCap = uint64_t(1) << 62;
  for (uint64_t i = 1; i <= k; ++i) {
    if (r > kCap / (n - k + i)) return kCap;
    r = r * (n - k + i) / i;
  }
  return r;
}

// All k-subsets of {0..n-1} in lexicographic order.
std::vector<std::vector<uint32_t>> all_combinations(uint32_t n, uint32_t k) {
  std::vector<std::vector<uint32_t>> out;
  std::vector<uint32_t> c(k);
  for (uint32_t i = 0; i < k; ++i) c[i] = i;
  while (true) {
    out.push_back(c);
    uint32_t i = k;
    while (i > 0 && c[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++c[i - 1];
    for (uint32_t j = i; j < k; ++j) c[j] = c[j - 1] + 1;
  }
  return out;
}

}  // namespace

MarginalQuery make_marginal(const Schema& schema, std::vector<uint32_t> features,
                            std::vector<uint32_t> targets, bool negated) {
  if (features.size() != targets.size())
    raise(Errc::DimensionMismatch, "features/targets length mismatch");
  if (features.empty()) raise(Errc::ArityTooLarge, "marginal needs at least one feature");
  if (!std::is_sorted(features.begin(), features.end()) ||
      std::adjacent_find(features.begin(), features.end()) != features.end())
    raise(Errc::DimensionMismatch, "features must be strictly ascending");
  MarginalQuery q;
  q.features = std::move(features);
  q.targets = std::move(targets);
  q.negated = negated;
  q.arity = static_cast<uint32_t>(q.features.size());
  q.mask = BitRow(schema.dim());
  for (uint32_t i = 0; i < q.arity; ++i) {
    uint32_t a = q.features[i];
    if (a >= schema.attribute_count()) raise(Errc::DimensionMismatch, "feature out of range");
    if (q.targets[i] >= schema.cardinality(a))
      raise(Errc::DimensionMismatch, "target value out of range");
    q.mask.set(schema.bit(a, q.targets[i]));
  }
  return q;
}

MarginalQuery negate(const MarginalQuery& q) {
  MarginalQuery out = q;
  out.negated = !q.negated;
  return out;
}

double eval_query(const MarginalQuery& q, const BitRow& record) {
  if (record.dim != q.mask.dim) raise(Errc::DimensionMismatch, "record/query dimension mismatch");
  return q.eval_words(record.w.data(), words_for(record.dim)) ? 1.0 : 0.0;
}

Workload enumerate_marginals(const Schema& schema, uint32_t k, size_t num_marginals,
                             uint64_t seed) {
  uint32_t attrs = static_cast<uint32_t>(schema.attribute_count());
  if (k == 0 || k > attrs)
    raise(Errc::ArityTooLarge, "marginal arity must be in [1, #attributes]");

  uint64_t total = binomial(attrs, k);
  if (num_marginals == 0) num_marginals = total;
  if (num_marginals > total)
    raise(Errc::TooManyMarginals, "requested " + std::to_string(num_marginals) + " of " +
                                      std::to_string(total) + " available marginals");

  std::vector<std::vector<uint32_t>> chosen;
  constexpr uint64_t kEnumCap = uint64_t(1) << 20;
  if (total <= kEnumCap) {
    std::vector<std::vector<uint32_t>> combos = all_combinations(attrs, k);
    if (num_marginals < total) {
      Rng rng(derive_seed(seed, {stream::kWorkload}));
      // Partial Fisher-Yates, then canonical order for the selected subsets.
      for (size_t i = 0; i < num_marginals; ++i) {
        size_t j = i + static_cast<size_t>(rng.below(combos.size() - i));
        std::swap(combos[i], combos[j]);
      }
      combos.resize(num_marginals);
      std::sort(combos.begin(), combos.end());
    }
    chosen = std::move(combos);
  } else {
    // Huge C(attrs,k): rejection-sample distinct subsets.
    Rng rng(derive_seed(seed, {stream::kWorkload}));
    std::set<std::vector<uint32_t>> seen;
    while (seen.size() < num_marginals) {
      std::vector<uint32_t> pool(attrs);
      for (uint32_t i = 0; i < attrs; ++i) pool[i] = i;
      for (uint32_t i = 0; i < k; ++i) {
        size_t j = i + static_cast<size_t>(rng.below(attrs - i));
        std::swap(pool[i], pool[j]);
      }
      std::vector<uint32_t> combo(pool.begin(), pool.begin() + k);
      std::sort(combo.begin(), combo.end());
      seen.insert(std::move(combo));
    }
    chosen.assign(seen.begin(), seen.end());
  }

  Workload w;
  w.dim = schema.dim();
  for (const std::vector<uint32_t>& combo : chosen) {
    // Odometer over target values, last feature fastest.
    std::vector<uint32_t> targets(k, 0);
    while (true) {
      MarginalQuery q = make_marginal(schema, combo, targets, false);
      MarginalQuery qn = negate(q);
      w.queries.push_back(std::move(q));
      w.queries.push_back(std::move(qn));
      uint32_t i = k;
      while (i > 0) {
        if (++targets[i - 1] < schema.cardinality(combo[i - 1])) break;
        targets[i - 1] = 0;
        --i;
      }
      if (i == 0) break;
    }
  }
  return w;
}

void require_closure(const Workload& w) {
  if (w.queries.empty()) raise(Errc::DegenerateWorkload, "empty workload");
  if (w.queries.size() % 2 != 0)
    raise(Errc::DegenerateWorkload, "workload not closed under negation (odd size)");
  for (size_t i = 0; i + 1 < w.queries.size(); i += 2) {
    const MarginalQuery& a = w.queries[i];
    const MarginalQuery& b = w.queries[i + 1];
    if (a.negated == b.negated || !(a.mask == b.mask))
      raise(Errc::DegenerateWorkload,
            "workload not closed under negation at pair " + std::to_string(i / 2));
  }
}

std::string Workload::to_json_text() const {
  nlohmann::ordered_json j;
  j["dim"] = dim;
  j["queries"] = nlohmann::ordered_json::array();
  for (const MarginalQuery& q : queries) {
    nlohmann::ordered_json jq;
    jq["features"] = q.features;
    jq["targets"] = q.targets;
    jq["negated"] = q.negated;
    j["queries"].push_back(std::move(jq));
  }
  return j.dump(2);
}

Workload Workload::from_json_text(const std::string& text, const Schema& schema) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::MalformedRow, std::string("workload JSON parse error: ") + e.what());
  }
  Workload w;
  w.dim = schema.dim();
  for (const auto& jq : j.at("queries")) {
    w.queries.push_back(make_marginal(schema, jq.at("features").get<std::vector<uint32_t>>(),
                                      jq.at("targets").get<std::vector<uint32_t>>(),
                                      jq.at("negated").get<bool>()));
  }
  if (w.queries.empty()) raise(Errc::DegenerateWorkload, "workload JSON has no queries");
  return w;
}

Workload Workload::load(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoFailure, "cannot open workload file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str(), schema);
}

void Workload::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) raise(Errc::IoFailure, "cannot write workload file: " + path);
  out << to_json_text() << "\n";
}

namespace {

// Per-query kernels shared by the serial reference and the OpenMP driver, so
// the two paths are arithmetically identical query by query.

double count_answer(const MarginalQuery& q, const BitMatrix& rows) {
  size_t count = 0;
  for (size_t r = 0; r < rows.n; ++r)
    count += q.eval_words(rows.row(r), rows.words) ? 1 : 0;
  return static_cast<double>(count) / static_cast<double>(rows.n);
}

// Accumulates record weights in row order (fixed summation order).
double weighted_answer(const MarginalQuery& q, const BitMatrix& rows,
                       std::span<const double> weights, double total) {
  double acc = 0.0;
  for (size_t r = 0; r < rows.n; ++r)
    if (q.eval_words(rows.row(r), rows.words)) acc += weights[r];
  return acc / total;
}

void check_encoded(const Workload& w, const BitMatrix& rows) {
  if (w.dim != rows.dim) raise(Errc::DimensionMismatch, "workload/dataset dimension mismatch");
}

double checked_weight_total(const SyntheticDataset& synth) {
  if (synth.weights.size() != synth.rows.n)
    raise(Errc::DimensionMismatch, "weights/record count mismatch");
  double total = 0.0;
  for (double wt : synth.weights) total += wt;
  if (!(total > 0)) raise(Errc::EmptyDataset, "synthetic dataset has zero weight");
  return total;
}

}  // namespace

std::vector<double> answer_vector_serial(const Workload& w, const EncodedDataset& data) {
  const BitMatrix& rows = data.rows();
  check_encoded(w, rows);
  std::vector<double> out(w.size());
  for (size_t qi = 0; qi < w.size(); ++qi) out[qi] = count_answer(w.queries[qi], rows);
  return out;
}

std::vector<double> answer_vector(const Workload& w, const EncodedDataset& data) {
  const BitMatrix& rows = data.rows();
  check_encoded(w, rows);
  std::vector<double> out(w.size());
  const int64_t m = static_cast<int64_t>(w.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int64_t qi = 0; qi < m; ++qi)
    out[static_cast<size_t>(qi)] = count_answer(w.queries[static_cast<size_t>(qi)], rows);
  return out;
}

std::vector<double> answer_vector_serial(const Workload& w, const SyntheticDataset& synth) {
  check_encoded(w, synth.rows);
  double total = checked_weight_total(synth);
  std::vector<double> out(w.size());
  for (size_t qi = 0; qi < w.size(); ++qi)
    out[qi] = weighted_answer(w.queries[qi], synth.rows, synth.weights, total);
  return out;
}

std::vector<double> answer_vector_serial(const Workload& w, const BitMatrix& rows) {
  check_encoded(w, rows);
  if (rows.n == 0) raise(Errc::EmptyDataset, "no records to evaluate");
  std::vector<double> out(w.size());
  for (size_t qi = 0; qi < w.size(); ++qi) out[qi] = count_answer(w.queries[qi], rows);
  return out;
}

std::vector<double> answer_vector(const Workload& w, const BitMatrix& rows) {
  check_encoded(w, rows);
  if (rows.n == 0) raise(Errc::EmptyDataset, "no records to evaluate");
  std::vector<double> out(w.size());
  const int64_t m = static_cast<int64_t>(w.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int64_t qi = 0; qi < m; ++qi)
    out[static_cast<size_t>(qi)] = count_answer(w.queries[static_cast<size_t>(qi)], rows);
  return out;
}

std::vector<double> answer_vector(const Workload& w, const SyntheticDataset& synth) {
  check_encoded(w, synth.rows);
  double total = checked_weight_total(synth);
  std::vector<double> out(w.size());
  const int64_t m = static_cast<int64_t>(w.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int64_t qi = 0; qi < m; ++qi)
    out[static_cast<size_t>(qi)] =
        weighted_answer(w.queries[static_cast<size_t>(qi)], synth.rows, synth.weights, total);
  return out;
}

std::vector<double> record_answers(const Workload& w, const BitRow& record) {
  if (record.dim != w.dim) raise(Errc::DimensionMismatch, "record/workload dimension mismatch");
  std::vector<double> out(w.size());
  uint32_t words = words_for(record.dim);
  for (size_t i = 0; i < w.size(); ++i)
    out[i] = w.queries[i].eval_words(record.w.data(), words) ? 1.0 : 0.0;
  return out;
}

double max_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) raise(Errc::DimensionMismatch, "answer vectors differ in length");
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void write_answers_csv(const std::string& path, std::span<const double> answers) {
  std::ofstream out(path);
  if (!out) raise(Errc::IoFailure, "cannot write answers CSV: " + path);
  out << "query_id,answer\n";
  out.precision(17);
  for (size_t i = 0; i < answers.size(); ++i) out << i << "," << answers[i] << "\n";
  if (!out) raise(Errc::IoFailure, "write failure: " + path);
}

}  // namespace oegd
