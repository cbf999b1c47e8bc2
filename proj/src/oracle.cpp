#include "oegd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "oegd/rng.hpp"

namespace oegd {

namespace {

void check_problem(const OracleProblem& p) {
  if (p.groups.dim == 0 || p.groups.groups() == 0)
    raise(Errc::EmptySchema, "oracle problem needs a group layout");
  if (!p.sigma.empty() && p.sigma.size() != p.groups.dim)
    raise(Errc::DimensionMismatch, "perturbation length != dimension");
  for (const WeightedQuery& wq : p.queries) {
    if (!std::isfinite(wq.weight)) raise(Errc::InvalidParam, "query weight must be finite");
    if (wq.query.mask.dim != p.groups.dim)
      raise(Errc::DimensionMismatch, "query dimension != problem dimension");
  }
}

// Mixed-radix decode of a linear index into per-group values (last group is
// the fastest digit, matching the enumeration order everywhere).
void decode_assignment(uint64_t idx, const GroupLayout& g, std::vector<uint32_t>& values) {
  size_t G = g.groups();
  for (size_t i = G; i-- > 0;) {
    uint32_t card = g.group_size(i);
    values[i] = static_cast<uint32_t>(idx % card);
    idx /= card;
  }
}

void assignment_to_row(const GroupLayout& g, std::span<const uint32_t> values, BitRow& row) {
  std::fill(row.w.begin(), row.w.end(), 0);
  for (size_t i = 0; i < g.groups(); ++i) row.set(g.offsets[i] + values[i]);
}

struct Best {
  double objective = -std::numeric_limits<double>::infinity();
  BitRow record;
  bool valid = false;

  void offer(double obj, const BitRow& row) {
    if (!valid || obj > objective || (obj == objective && lex_less(row, record))) {
      objective = obj;
      record = row;
      valid = true;
    }
  }
};

// Scans assignments [first, last) in enumeration order.
Best scan_range(const OracleProblem& p, uint64_t first, uint64_t last) {
  std::vector<uint32_t> values(p.groups.groups());
  BitRow row(p.groups.dim);
  uint32_t words = words_for(p.groups.dim);
  Best best;
  if (first >= last) return best;
  decode_assignment(first, p.groups, values);
  assignment_to_row(p.groups, values, row);
  for (uint64_t idx = first;;) {
    best.offer(oracle_objective(p, row.w.data(), words), row);
    if (++idx >= last) break;
    // Odometer step: bump the last group, carrying leftwards.
    size_t g = p.groups.groups();
    while (g-- > 0) {
      row.reset(p.groups.offsets[g] + values[g]);
      if (++values[g] < p.groups.group_size(g)) {
        row.set(p.groups.offsets[g] + values[g]);
        break;
      }
      values[g] = 0;
      row.set(p.groups.offsets[g]);
    }
  }
  return best;
}

}  // namespace

double oracle_objective(const OracleProblem& p, const uint64_t* row, uint32_t words) {
  double acc = 0.0;
  for (const WeightedQuery& wq : p.queries)
    if (wq.query.eval_words(row, words)) acc += wq.weight;
  if (!p.sigma.empty()) acc -= one_hot_dot(row, words, p.sigma);
  return acc;
}

double oracle_objective(const OracleProblem& p, const BitRow& x) {
  return oracle_objective(p, x.w.data(), words_for(x.dim));
}

OracleSolution solve_exact_serial(const OracleProblem& p, uint64_t cap) {
  check_problem(p);
  uint64_t domain = p.groups.domain_size();
  if (domain > cap) raise(Errc::SearchSpaceTooLarge, "one-hot domain exceeds the search cap");
  Best best = scan_range(p, 0, domain);
  return OracleSolution{best.record, best.objective, true};
}

OracleSolution solve_exact(const OracleProblem& p, uint64_t cap) {
  check_problem(p);
  uint64_t domain = p.groups.domain_size();
  if (domain > cap) raise(Errc::SearchSpaceTooLarge, "one-hot domain exceeds the search cap");
  // Fixed chunk count so the reduction is independent of the thread count.
  constexpr uint64_t kChunks = 64;
  if (domain < kChunks * 4) {
    Best best = scan_range(p, 0, domain);
    return OracleSolution{best.record, best.objective, true};
  }
  std::vector<Best> partial(kChunks);
  const uint64_t step = (domain + kChunks - 1) / kChunks;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int64_t c = 0; c < static_cast<int64_t>(kChunks); ++c) {
    uint64_t first = static_cast<uint64_t>(c) * step;
    uint64_t last = std::min(first + step, domain);
    partial[static_cast<size_t>(c)] = scan_range(p, first, last);
  }
  Best best;
  for (const Best& b : partial)
    if (b.valid) best.offer(b.objective, b.record);
  return OracleSolution{best.record, best.objective, true};
}

OracleSolution solve_local_search(const OracleProblem& p, uint32_t restarts, uint64_t seed) {
  check_problem(p);
  if (restarts == 0) raise(Errc::InvalidParam, "local search needs at least one restart");
  size_t G = p.groups.groups();
  uint32_t words = words_for(p.groups.dim);
  Best best;
  for (uint32_t r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, {stream::kRestart, r}));
    std::vector<uint32_t> values(G);
    for (size_t g = 0; g < G; ++g)
      values[g] = static_cast<uint32_t>(rng.below(p.groups.group_size(g)));
    BitRow row(p.groups.dim);
    assignment_to_row(p.groups, values, row);
    double obj = oracle_objective(p, row.w.data(), words);
    for (int sweep = 0; sweep < 256; ++sweep) {
      bool moved = false;
      for (size_t g = 0; g < G; ++g) {
        uint32_t cur = values[g];
        uint32_t best_v = cur;
        double best_o = obj;
        for (uint32_t v = 0; v < p.groups.group_size(g); ++v) {
          if (v == cur) continue;
          row.reset(p.groups.offsets[g] + cur);
          row.set(p.groups.offsets[g] + v);
          double o = oracle_objective(p, row.w.data(), words);
          row.reset(p.groups.offsets[g] + v);
          row.set(p.groups.offsets[g] + cur);
          if (o > best_o) {
            best_o = o;
            best_v = v;
          }
        }
        if (best_v != cur) {
          row.reset(p.groups.offsets[g] + cur);
          row.set(p.groups.offsets[g] + best_v);
          values[g] = best_v;
          obj = best_o;
          moved = true;
        }
      }
      if (!moved) break;
    }
    best.offer(obj, row);
  }
  return OracleSolution{best.record, best.objective, false};
}

namespace {

std::string fmt_weight(double w) {
  std::ostringstream os;
  os.precision(17);
  os << std::abs(w);
  return os.str();
}

void append_term(std::ostream& out, bool& first, double coeff, const std::string& var) {
  if (coeff == 0.0) return;
  if (first) {
    if (coeff < 0) out << "- ";
    first = false;
  } else {
    out << (coeff < 0 ? " - " : " + ");
  }
  out << fmt_weight(coeff) << " " << var;
}

}  // namespace

void export_mip(const OracleProblem& p, std::ostream& out) {
  check_problem(p);
  out << "\\ one-hot weighted marginal maximization\n";
  out << "Maximize\n obj: ";
  bool first = true;
  for (size_t i = 0; i < p.queries.size(); ++i)
    append_term(out, first, p.queries[i].weight, "c" + std::to_string(i));
  if (!p.sigma.empty())
    for (uint32_t b = 0; b < p.groups.dim; ++b)
      append_term(out, first, -p.sigma[b], "x" + std::to_string(b));
  if (first) out << "0";
  out << "\nSubject To\n";
  for (size_t i = 0; i < p.queries.size(); ++i) {
    const MarginalQuery& q = p.queries[i].query;
    // Each indicator is pinned from both sides so c_i == q_i(x) holds for
    // any weight sign, not just when maximization pushes c_i up.
    if (!q.negated) {
      // c=1 permitted only when all arity bits are set:  <x,mask> - arity*c >= 0
      out << " q" << i << "u:";
      for (uint32_t b = 0; b < p.groups.dim; ++b)
        if (q.mask.get(b)) out << " + x" << b;
      out << " - " << q.arity << " c" << i << " >= 0\n";
      // c=1 forced when all arity bits are set:  c - <x,mask> >= 1 - arity
      out << " q" << i << "l:";
      for (uint32_t b = 0; b < p.groups.dim; ++b)
        if (q.mask.get(b)) out << " - x" << b;
      out << " + c" << i << " >= " << (1 - static_cast<int64_t>(q.arity)) << "\n";
    } else {
      // c=1 permitted only when some mask bit is clear:  -<x,mask> - c >= -arity
      out << " q" << i << "u:";
      for (uint32_t b = 0; b < p.groups.dim; ++b)
        if (q.mask.get(b)) out << " - x" << b;
      out << " - c" << i << " >= -" << q.arity << "\n";
      // c=1 forced when some mask bit is clear:  <x,mask> + arity*c >= arity
      out << " q" << i << "l:";
      for (uint32_t b = 0; b < p.groups.dim; ++b)
        if (q.mask.get(b)) out << " + x" << b;
      out << " + " << q.arity << " c" << i << " >= " << q.arity << "\n";
    }
  }
  for (size_t g = 0; g < p.groups.groups(); ++g) {
    out << " g" << g << ":";
    for (uint32_t b = p.groups.offsets[g]; b < p.groups.offsets[g + 1]; ++b)
      out << (b == p.groups.offsets[g] ? " x" : " + x") << b;
    out << " = 1\n";
  }
  out << "Binaries\n";
  for (uint32_t b = 0; b < p.groups.dim; ++b) out << " x" << b;
  for (size_t i = 0; i < p.queries.size(); ++i) out << " c" << i;
  out << "\nEnd\n";
}

void export_mip_file(const OracleProblem& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) raise(Errc::IoFailure, "cannot write MIP file: " + path);
  export_mip(p, out);
  if (!out) raise(Errc::IoFailure, "write failure: " + path);
}

double best_response_payoff(std::span<const WeightedQuery> bundle,
                            std::span<const double> true_answers, const BitRow& x) {
  if (bundle.size() != true_answers.size())
    raise(Errc::DimensionMismatch, "bundle/true-answer length mismatch");
  uint32_t words = words_for(x.dim);
  double acc = 0.0;
  for (size_t j = 0; j < bundle.size(); ++j) {
    double qx = bundle[j].query.eval_words(x.w.data(), words) ? 1.0 : 0.0;
    acc += bundle[j].weight * (true_answers[j] - qx);
  }
  return acc;
}

// --------------------------------------------------------------------------
// EnumeratedDomain

EnumeratedDomain EnumeratedDomain::build(const GroupLayout& groups, uint64_t cap) {
  if (groups.dim == 0 || groups.groups() == 0)
    raise(Errc::EmptySchema, "domain needs a group layout");
  uint64_t domain = groups.domain_size();
  if (domain > cap) raise(Errc::SearchSpaceTooLarge, "one-hot domain exceeds the cap");
  EnumeratedDomain d;
  d.groups_ = groups;
  d.records_ = BitMatrix(groups.dim);
  d.records_.reserve_rows(domain);
  std::vector<uint32_t> values(groups.groups(), 0);
  BitRow row(groups.dim);
  assignment_to_row(groups, values, row);
  for (uint64_t idx = 0;;) {
    d.records_.append(row);
    if (++idx >= domain) break;
    size_t g = groups.groups();
    while (g-- > 0) {
      row.reset(groups.offsets[g] + values[g]);
      if (++values[g] < groups.group_size(g)) {
        row.set(groups.offsets[g] + values[g]);
        break;
      }
      values[g] = 0;
      row.set(groups.offsets[g]);
    }
  }
  d.base_.assign(d.records_.n, 0.0);
  return d;
}

std::vector<uint8_t> EnumeratedDomain::sat_column(const MarginalQuery& q) const {
  if (q.mask.dim != groups_.dim) raise(Errc::DimensionMismatch, "query/domain dimension mismatch");
  std::vector<uint8_t> col(records_.n);
  for (size_t r = 0; r < records_.n; ++r)
    col[r] = q.eval_words(records_.row(r), records_.words) ? 1 : 0;
  return col;
}

void EnumeratedDomain::reset_base() { std::fill(base_.begin(), base_.end(), 0.0); }

void EnumeratedDomain::add_base_query(const MarginalQuery& q, double weight) {
  if (q.mask.dim != groups_.dim) raise(Errc::DimensionMismatch, "query/domain dimension mismatch");
  for (size_t r = 0; r < records_.n; ++r)
    if (q.eval_words(records_.row(r), records_.words)) base_[r] += weight;
}

OracleSolution EnumeratedDomain::solve_one(std::span<const double> sigma,
                                           std::span<const WeightedQuery> overlay) const {
  if (!sigma.empty() && sigma.size() != groups_.dim)
    raise(Errc::DimensionMismatch, "perturbation length != dimension");
  size_t best_r = 0;
  double best_obj = -std::numeric_limits<double>::infinity();
  bool have = false;
  for (size_t r = 0; r < records_.n; ++r) {
    const uint64_t* row = records_.row(r);
    double obj = base_[r];
    for (const WeightedQuery& wq : overlay)
      if (wq.query.eval_words(row, records_.words)) obj += wq.weight;
    if (!sigma.empty()) obj -= one_hot_dot(row, records_.words, sigma);
    // Enumeration order is not lexicographic, so ties compare records directly.
    if (!have || obj > best_obj ||
        (obj == best_obj && lex_less(std::span<const uint64_t>(row, records_.words),
                                     std::span<const uint64_t>(records_.row(best_r),
                                                               records_.words)))) {
      best_obj = obj;
      best_r = r;
      have = true;
    }
  }
  return OracleSolution{records_.row_bits(best_r), best_obj, true};
}

OracleSolution EnumeratedDomain::solve(std::span<const double> sigma,
                                       std::span<const WeightedQuery> overlay) const {
  return solve_one(sigma, overlay);
}

std::vector<OracleSolution> EnumeratedDomain::solve_batch_serial(
    std::span<const std::vector<double>> sigmas) const {
  std::vector<OracleSolution> out(sigmas.size());
  for (size_t j = 0; j < sigmas.size(); ++j) out[j] = solve_one(sigmas[j], {});
  return out;
}

std::vector<OracleSolution> EnumeratedDomain::solve_batch(
    std::span<const std::vector<double>> sigmas) const {
  std::vector<OracleSolution> out(sigmas.size());
  const int64_t m = static_cast<int64_t>(sigmas.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int64_t j = 0; j < m; ++j)
    out[static_cast<size_t>(j)] = solve_one(sigmas[static_cast<size_t>(j)], {});
  return out;
}

std::vector<OracleSolution> EnumeratedDomain::solve_overlay_batch(
    std::span<const std::vector<WeightedQuery>> overlays) const {
  std::vector<OracleSolution> out(overlays.size());
  const int64_t m = static_cast<int64_t>(overlays.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int64_t j = 0; j < m; ++j)
    out[static_cast<size_t>(j)] = solve_one({}, overlays[static_cast<size_t>(j)]);
  return out;
}

}  // namespace oegd
