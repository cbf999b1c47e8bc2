// Oracle backends checked against an independently written enumerator, plus a
// dual-route check of the MIP export: the emitted text is re-parsed by a
// standalone LP reader and re-optimized from the parsed model alone.
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oegd/error.hpp"
#include "oegd/marginals.hpp"
#include "oegd/oracle.hpp"
#include "oegd/rng.hpp"
#include "oegd/schema.hpp"

using namespace oegd;

namespace {

GroupLayout make_layout(const std::vector<uint32_t>& sizes) {
  GroupLayout g;
  g.offsets.push_back(0);
  for (uint32_t s : sizes) g.offsets.push_back(g.offsets.back() + s);
  g.dim = g.offsets.back();
  return g;
}

std::string schema_json(const std::vector<uint32_t>& sizes) {
  std::string text = R"({"attributes":[)";
  for (size_t i = 0; i < sizes.size(); ++i) {
    if (i) text += ",";
    text += R"({"name":"a)" + std::to_string(i) + R"(","values":[)";
    for (uint32_t v = 0; v < sizes[i]; ++v) {
      if (v) text += ",";
      text += "\"v" + std::to_string(v) + "\"";
    }
    text += "]}";
  }
  return text + "]}";
}

// A schema of categorical attributes with the given cardinalities, plus its
// derived one-hot layout.
struct Fixture {
  Schema s;
  GroupLayout g;
  explicit Fixture(const std::vector<uint32_t>& sizes)
      : s(Schema::from_json_text(schema_json(sizes))), g(GroupLayout::from_schema(s)) {}
};

bool bit(const BitRow& r, uint32_t b) { return r.get(b); }

// Plain-loop bitstring comparison: first differing index decides, 0 < 1.
// Deliberately avoids the word-level trick used by the library.
bool plain_lex_less(const BitRow& a, const BitRow& b) {
  for (uint32_t i = 0; i < a.dim; ++i) {
    bool x = a.get(i), y = b.get(i);
    if (x != y) return !x;
  }
  return false;
}

// Query satisfaction straight from (features, targets), ignoring the cached
// mask entirely.
bool naive_sat(const GroupLayout& g, const MarginalQuery& q, const BitRow& row) {
  bool all = true;
  for (size_t j = 0; j < q.features.size(); ++j)
    if (!row.get(g.offsets[q.features[j]] + q.targets[j])) all = false;
  return q.negated ? !all : all;
}

double naive_objective(const GroupLayout& g, const OracleProblem& p, const BitRow& row) {
  double acc = 0.0;
  for (const WeightedQuery& wq : p.queries)
    if (naive_sat(g, wq.query, row)) acc += wq.weight;
  if (!p.sigma.empty())
    for (uint32_t b = 0; b < g.dim; ++b)
      if (row.get(b)) acc -= p.sigma[b];
  return acc;
}

// Enumerates every one-hot record with the FIRST group as the fastest digit —
// the opposite order from the library — so agreement cannot come from shared
// iteration structure.
std::vector<BitRow> all_records(const GroupLayout& g) {
  std::vector<BitRow> out;
  std::vector<uint32_t> v(g.groups(), 0);
  for (;;) {
    BitRow row(g.dim);
    for (size_t i = 0; i < g.groups(); ++i) row.set(g.offsets[i] + v[i]);
    out.push_back(row);
    size_t i = 0;
    for (; i < g.groups(); ++i) {
      if (++v[i] < g.group_size(i)) break;
      v[i] = 0;
    }
    if (i == g.groups()) break;
  }
  return out;
}

// Independent reference: max objective, ties resolved by plain_lex_less over
// the full set of optima.
OracleSolution brute_force(const GroupLayout& g, const OracleProblem& p) {
  std::vector<BitRow> recs = all_records(g);
  double best = -1e300;
  std::vector<size_t> argmax;
  for (size_t r = 0; r < recs.size(); ++r) {
    double obj = naive_objective(g, p, recs[r]);
    if (obj > best) {
      best = obj;
      argmax.assign(1, r);
    } else if (obj == best) {
      argmax.push_back(r);
    }
  }
  size_t pick = argmax[0];
  for (size_t idx : argmax)
    if (plain_lex_less(recs[idx], recs[pick])) pick = idx;
  return OracleSolution{recs[pick], best, true};
}

OracleProblem random_problem(const Fixture& f, uint64_t seed, bool with_sigma) {
  const GroupLayout& g = f.g;
  Rng rng(seed);
  OracleProblem p;
  p.groups = g;
  size_t nq = 3 + rng.below(12);
  size_t G = g.groups();
  for (size_t i = 0; i < nq; ++i) {
    size_t k = 1 + rng.below(G);
    std::set<uint32_t> feats;
    while (feats.size() < k) feats.insert(static_cast<uint32_t>(rng.below(G)));
    std::vector<uint32_t> features(feats.begin(), feats.end());
    std::vector<uint32_t> targets;
    for (uint32_t fe : features)
      targets.push_back(static_cast<uint32_t>(rng.below(g.group_size(fe))));
    bool neg = rng.below(2) == 1;
    double w = rng.uniform() * 4.0 - 2.0;
    if (rng.below(8) == 0) w = 0.0;  // exercise zero-weight terms
    p.queries.push_back({make_marginal(f.s, features, targets, neg), w});
  }
  if (with_sigma)
    for (uint32_t b = 0; b < g.dim; ++b) p.sigma.push_back(rng.exponential(0.7));
  return p;
}

}  // namespace

TEST_CASE("exact search matches an independent enumerator on random problems") {
  std::vector<std::vector<uint32_t>> shapes = {
      {2, 2}, {3, 4}, {2, 3, 2}, {4, 4, 4}, {2, 2, 2, 2}, {5, 3, 2, 4}};
  int trial = 0;
  for (const auto& shape : shapes) {
    Fixture f(shape);
    const GroupLayout& g = f.g;
    for (int rep = 0; rep < 10; ++rep, ++trial) {
      OracleProblem p = random_problem(f, 1000 + trial, trial % 2 == 0);
      OracleSolution want = brute_force(g, p);
      OracleSolution got = solve_exact(p);
      OracleSolution serial = solve_exact_serial(p);
      CHECK(got.exact);
      CHECK(got.objective == doctest::Approx(want.objective).epsilon(1e-12));
      CHECK(got.record.w == want.record.w);
      CHECK(serial.objective == got.objective);
      CHECK(serial.record.w == got.record.w);
      // claimed objective is self-consistent
      CHECK(oracle_objective(p, got.record) == got.objective);
    }
  }
}

TEST_CASE("ties go to the lexicographically smallest record") {
  Fixture f({2, 2});
  const GroupLayout& g = f.g;
  OracleProblem p;
  p.groups = g;
  // satisfied by (0,0) and (0,1) alike: only group 0 constrained
  p.queries.push_back({make_marginal(f.s, {0}, {0}, false), 1.0});
  OracleSolution got = solve_exact(p);
  OracleSolution want = brute_force(g, p);
  CHECK(got.record.w == want.record.w);
  // Under bitstring order, the record with bit 2 clear beats the one with
  // bit 2 set: (0,1) i.e. bits {0,3}.
  CHECK(bit(got.record, 0));
  CHECK(bit(got.record, 3));
  CHECK_FALSE(bit(got.record, 2));
}

TEST_CASE("pure-perturbation problems pick the per-group minimum") {
  GroupLayout g = make_layout({3, 2, 4});
  OracleProblem p;
  p.groups = g;
  p.sigma = {0.9, 0.1, 0.5, 0.7, 0.2, 0.61, 0.6, 0.59, 0.62};
  OracleSolution got = solve_exact(p);
  CHECK(bit(got.record, 1));  // min of group 0
  CHECK(bit(got.record, 4));  // min of group 1
  CHECK(bit(got.record, 7));  // min of group 2
  CHECK(got.objective == doctest::Approx(-(0.1 + 0.2 + 0.59)).epsilon(1e-12));
}

TEST_CASE("local search returns valid records and never beats exact") {
  std::vector<std::vector<uint32_t>> shapes = {{3, 4, 2}, {4, 4, 4}, {2, 5, 3, 2}};
  for (size_t si = 0; si < shapes.size(); ++si) {
    Fixture f(shapes[si]);
    const GroupLayout& g = f.g;
    for (int rep = 0; rep < 6; ++rep) {
      OracleProblem p = random_problem(f, 7000 + 10 * si + rep, true);
      OracleSolution exact = solve_exact(p);
      OracleSolution ls = solve_local_search(p, 5, 42 + rep);
      CHECK_FALSE(ls.exact);
      CHECK(g.valid_record(ls.record.w.data(), words_for(g.dim)));
      CHECK(ls.objective == oracle_objective(p, ls.record));
      CHECK(ls.objective <= exact.objective + 1e-12);
      OracleSolution again = solve_local_search(p, 5, 42 + rep);
      CHECK(again.record.w == ls.record.w);
      CHECK(again.objective == ls.objective);
    }
  }
}

TEST_CASE("local search solves separable problems exactly") {
  // With no queries the objective decomposes per group, so single-coordinate
  // moves reach the global optimum from any start.
  GroupLayout g = make_layout({4, 3, 5, 2});
  OracleProblem p;
  p.groups = g;
  Rng rng(99);
  for (uint32_t b = 0; b < g.dim; ++b) p.sigma.push_back(rng.uniform());
  OracleSolution exact = solve_exact(p);
  OracleSolution ls = solve_local_search(p, 1, 5);
  CHECK(ls.objective == doctest::Approx(exact.objective).epsilon(1e-12));
  CHECK(ls.record.w == exact.record.w);
}

TEST_CASE("enumerated domain lists every valid record exactly once") {
  GroupLayout g = make_layout({3, 2, 4});
  EnumeratedDomain dom = EnumeratedDomain::build(g);
  CHECK(dom.size() == 24);
  std::set<std::vector<uint64_t>> seen;
  uint32_t words = words_for(g.dim);
  for (size_t r = 0; r < dom.size(); ++r) {
    CHECK(g.valid_record(dom.records().row(r), words));
    std::vector<uint64_t> key(dom.records().row(r), dom.records().row(r) + words);
    CHECK(seen.insert(key).second);
  }
}

TEST_CASE("enumerated domain sat_column matches naive evaluation") {
  Fixture f({3, 2, 4});
  const GroupLayout& g = f.g;
  EnumeratedDomain dom = EnumeratedDomain::build(g);
  MarginalQuery q = make_marginal(f.s, {0, 2}, {1, 3}, false);
  MarginalQuery nq = make_marginal(f.s, {0, 2}, {1, 3}, true);
  for (const MarginalQuery* query : {&q, &nq}) {
    std::vector<uint8_t> col = dom.sat_column(*query);
    size_t ones = 0;
    for (size_t r = 0; r < dom.size(); ++r) {
      BitRow row(g.dim);
      row.w.assign(dom.records().row(r), dom.records().row(r) + words_for(g.dim));
      CHECK(static_cast<bool>(col[r]) == naive_sat(g, *query, row));
      ones += col[r];
    }
    CHECK(ones > 0);
    CHECK(ones < dom.size());
  }
}

TEST_CASE("enumerated domain solve agrees with solve_exact bit for bit") {
  Fixture f({3, 4, 2, 3});
  EnumeratedDomain dom = EnumeratedDomain::build(f.g);
  for (int rep = 0; rep < 8; ++rep) {
    OracleProblem p = random_problem(f, 3000 + rep, true);
    dom.reset_base();
    for (const WeightedQuery& wq : p.queries) dom.add_base_query(wq.query, wq.weight);
    OracleSolution fast = dom.solve(p.sigma);
    OracleSolution exact = solve_exact(p);
    CHECK(fast.objective == exact.objective);
    CHECK(fast.record.w == exact.record.w);
  }
}

TEST_CASE("enumerated domain overlays are equivalent to baked-in queries") {
  Fixture f({3, 3, 3});
  EnumeratedDomain dom = EnumeratedDomain::build(f.g);
  OracleProblem p = random_problem(f, 4321, true);
  REQUIRE(p.queries.size() >= 4);
  size_t split = p.queries.size() / 2;
  dom.reset_base();
  for (size_t i = 0; i < split; ++i) dom.add_base_query(p.queries[i].query, p.queries[i].weight);
  std::vector<WeightedQuery> overlay(p.queries.begin() + split, p.queries.end());
  OracleSolution combined = dom.solve(p.sigma, overlay);
  OracleSolution exact = solve_exact(p);
  CHECK(combined.objective == exact.objective);
  CHECK(combined.record.w == exact.record.w);

  std::vector<std::vector<WeightedQuery>> overlays = {
      overlay, {}, {p.queries.back()}};
  std::vector<OracleSolution> batch = dom.solve_overlay_batch(overlays);
  REQUIRE(batch.size() == 3);
  for (size_t i = 0; i < overlays.size(); ++i) {
    OracleSolution one = dom.solve({}, overlays[i]);
    CHECK(batch[i].objective == one.objective);
    CHECK(batch[i].record.w == one.record.w);
  }
}

TEST_CASE("batched perturbation solves match the one-at-a-time path") {
  Fixture f({4, 3, 4});
  const GroupLayout& g = f.g;
  EnumeratedDomain dom = EnumeratedDomain::build(g);
  OracleProblem p = random_problem(f, 555, false);
  dom.reset_base();
  for (const WeightedQuery& wq : p.queries) dom.add_base_query(wq.query, wq.weight);
  Rng rng(12);
  std::vector<std::vector<double>> sigmas;
  for (int s = 0; s < 17; ++s) {
    std::vector<double> sig;
    for (uint32_t b = 0; b < g.dim; ++b) sig.push_back(rng.exponential(1.3));
    sigmas.push_back(std::move(sig));
  }
  std::vector<OracleSolution> par = dom.solve_batch(sigmas);
  std::vector<OracleSolution> ser = dom.solve_batch_serial(sigmas);
  REQUIRE(par.size() == sigmas.size());
  REQUIRE(ser.size() == sigmas.size());
  for (size_t s = 0; s < sigmas.size(); ++s) {
    OracleSolution one = dom.solve(sigmas[s]);
    CHECK(par[s].objective == one.objective);
    CHECK(par[s].record.w == one.record.w);
    CHECK(ser[s].objective == one.objective);
    CHECK(ser[s].record.w == one.record.w);
  }
}

// ---------------------------------------------------------------------------
// MIP export, checked by re-parsing the text and re-optimizing the parsed
// model with generic 0/1 linear reasoning (no marginal-specific knowledge).

namespace {

struct LpConstraint {
  std::map<std::string, double> coef;
  bool equality = false;
  double rhs = 0.0;
};

struct LpModel {
  std::map<std::string, double> objective;
  std::vector<LpConstraint> query_rows;          // q...
  std::vector<std::vector<uint32_t>> group_rows;  // g...: x indices summing to 1
  std::set<std::string> binaries;
};

std::vector<std::string> tokens_of(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> t;
  std::string s;
  while (in >> s) t.push_back(s);
  return t;
}

// Parses "<sign> <coef>? <var>" sequences; vars without explicit coefficient
// get 1.  Returns the index one past the last term token.
size_t parse_terms(const std::vector<std::string>& t, size_t i,
                   std::map<std::string, double>& out) {
  double sign = 1.0;
  double pending = 1.0;
  bool have_pending = false;
  for (; i < t.size(); ++i) {
    const std::string& tok = t[i];
    if (tok == "+") {
      sign = 1.0;
    } else if (tok == "-") {
      sign = -1.0;
    } else if (tok == ">=" || tok == "=" || tok == "<=") {
      return i;
    } else if (tok[0] == 'x' || tok[0] == 'c') {
      out[tok] += sign * (have_pending ? pending : 1.0);
      sign = 1.0;
      pending = 1.0;
      have_pending = false;
    } else {
      pending = std::stod(tok);
      have_pending = true;
    }
  }
  return i;
}

LpModel parse_lp(const std::string& text) {
  LpModel m;
  std::istringstream in(text);
  std::string line;
  enum { kNone, kObjective, kConstraints, kBinaries } section = kNone;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '\\') continue;
    if (line == "Maximize") {
      section = kObjective;
      continue;
    }
    if (line == "Subject To") {
      section = kConstraints;
      continue;
    }
    if (line == "Binaries") {
      section = kBinaries;
      continue;
    }
    if (line == "End") break;
    std::vector<std::string> t = tokens_of(line);
    if (t.empty()) continue;
    if (section == kObjective) {
      REQUIRE(t[0] == "obj:");
      if (t.size() == 2 && t[1] == "0") continue;  // empty objective
      parse_terms(t, 1, m.objective);
    } else if (section == kConstraints) {
      REQUIRE(t[0].back() == ':');
      LpConstraint c;
      size_t i = parse_terms(t, 1, c.coef);
      REQUIRE(i < t.size());
      c.equality = (t[i] == "=");
      std::string rhs_text;
      for (size_t j = i + 1; j < t.size(); ++j) rhs_text += t[j];
      c.rhs = std::stod(rhs_text);
      if (t[0][0] == 'q') {
        m.query_rows.push_back(std::move(c));
      } else {
        REQUIRE(t[0][0] == 'g');
        REQUIRE(c.equality);
        REQUIRE(c.rhs == 1.0);
        std::vector<uint32_t> bits;
        for (const auto& [var, coef] : c.coef) {
          REQUIRE(var[0] == 'x');
          REQUIRE(coef == 1.0);
          bits.push_back(static_cast<uint32_t>(std::stoul(var.substr(1))));
        }
        std::sort(bits.begin(), bits.end());
        m.group_rows.push_back(std::move(bits));
      }
    } else if (section == kBinaries) {
      for (const std::string& v : t) m.binaries.insert(v);
    }
  }
  return m;
}

// Maximizes the parsed model exactly: enumerate one-hot x over the parsed
// group rows, then pick each c in {0,1} subject to EVERY row that mentions it.
double optimize_parsed(const LpModel& m) {
  // rows grouped by indicator variable (each q row names exactly one c)
  std::map<std::string, std::vector<const LpConstraint*>> rows_of;
  for (const LpConstraint& row : m.query_rows) {
    std::string cvar;
    for (const auto& [var, coef] : row.coef)
      if (var[0] == 'c') {
        REQUIRE(cvar.empty());
        cvar = var;
      }
    REQUIRE_FALSE(cvar.empty());
    rows_of[cvar].push_back(&row);
  }
  size_t G = m.group_rows.size();
  std::vector<size_t> pick(G, 0);
  double best = -1e300;
  for (;;) {
    std::set<std::string> on;
    for (size_t g = 0; g < G; ++g)
      on.insert("x" + std::to_string(m.group_rows[g][pick[g]]));
    double value = 0.0;
    for (const std::string& v : on) {
      auto it = m.objective.find(v);
      if (it != m.objective.end()) value += it->second;
    }
    bool feasible = true;
    for (const auto& [cvar, rows] : rows_of) {
      double obj_c = 0.0;
      auto it = m.objective.find(cvar);
      if (it != m.objective.end()) obj_c = it->second;
      double best_gain = -1e300;
      for (double cval : {0.0, 1.0}) {
        bool ok = true;
        for (const LpConstraint* row : rows) {
          double lhs = 0.0;
          for (const auto& [var, coef] : row->coef) {
            if (var == cvar)
              lhs += coef * cval;
            else if (on.count(var))
              lhs += coef;
          }
          if (lhs < row->rhs - 1e-9) ok = false;
        }
        if (ok) best_gain = std::max(best_gain, obj_c * cval);
      }
      if (best_gain == -1e300) {
        feasible = false;
        break;
      }
      value += best_gain;
    }
    if (feasible) best = std::max(best, value);
    size_t g = 0;
    for (; g < G; ++g) {
      if (++pick[g] < m.group_rows[g].size()) break;
      pick[g] = 0;
    }
    if (g == G) break;
  }
  return best;
}

}  // namespace

TEST_CASE("MIP export re-parses into an equivalent optimization problem") {
  Fixture f({3, 2, 4});
  const GroupLayout& g = f.g;
  for (int rep = 0; rep < 6; ++rep) {
    OracleProblem p = random_problem(f, 9000 + rep, rep % 2 == 0);
    std::ostringstream out;
    export_mip(p, out);
    LpModel m = parse_lp(out.str());

    // structure: two pinning rows per query, one group row per group, and the
    // binary section declares exactly the record and indicator variables
    CHECK(m.query_rows.size() == 2 * p.queries.size());
    CHECK(m.group_rows.size() == g.groups());
    std::set<std::string> want_bin;
    for (uint32_t b = 0; b < g.dim; ++b) want_bin.insert("x" + std::to_string(b));
    for (size_t i = 0; i < p.queries.size(); ++i) want_bin.insert("c" + std::to_string(i));
    CHECK(m.binaries == want_bin);

    // parsed group rows partition the bit range
    std::set<uint32_t> covered;
    for (const auto& row : m.group_rows)
      for (uint32_t b : row) CHECK(covered.insert(b).second);
    CHECK(covered.size() == g.dim);

    // independent optimum of the parsed model == library optimum
    double parsed_best = optimize_parsed(m);
    OracleSolution exact = solve_exact(p);
    CHECK(parsed_best == doctest::Approx(exact.objective).epsilon(1e-9));
  }
}

TEST_CASE("MIP export round-trips weights exactly") {
  Fixture f({2, 2});
  OracleProblem p;
  p.groups = f.g;
  p.queries.push_back({make_marginal(f.s, {0}, {1}, false), 0.1 + 0.2});  // 0.30000000000000004
  p.sigma = {1.0 / 3.0, 0.0, 2.0 / 7.0, 1e-17};
  std::ostringstream out;
  export_mip(p, out);
  LpModel m = parse_lp(out.str());
  CHECK(m.objective.at("c0") == 0.1 + 0.2);
  CHECK(m.objective.at("x0") == -1.0 / 3.0);
  CHECK(m.objective.at("x2") == -2.0 / 7.0);
  CHECK(m.objective.at("x3") == -1e-17);
  CHECK(m.objective.count("x1") == 0);  // zero coefficients are omitted
}

TEST_CASE("oracle rejects malformed problems and oversized domains") {
  GroupLayout g = make_layout({4, 4, 4, 4, 4, 4});  // 4096 records
  OracleProblem p;
  p.groups = g;
  CHECK_THROWS_AS(solve_exact(p, 4095), Error);
  CHECK_NOTHROW(solve_exact(p, 4096));
  CHECK_THROWS_AS(EnumeratedDomain::build(g, 4095), Error);

  OracleProblem empty;
  CHECK_THROWS_AS(solve_exact(empty), Error);

  OracleProblem bad_sigma;
  bad_sigma.groups = make_layout({2, 2});
  bad_sigma.sigma = {0.1, 0.2};  // wrong length
  CHECK_THROWS_AS(solve_exact(bad_sigma), Error);

  Fixture f22({2, 2});
  Fixture f33({3, 3});
  OracleProblem bad_weight;
  bad_weight.groups = f22.g;
  bad_weight.queries.push_back({make_marginal(f22.s, {0}, {0}, false), std::nan("")});
  CHECK_THROWS_AS(solve_exact(bad_weight), Error);

  OracleProblem bad_dim;
  bad_dim.groups = f22.g;
  bad_dim.queries.push_back({make_marginal(f33.s, {0}, {0}, false), 1.0});
  CHECK_THROWS_AS(solve_exact(bad_dim), Error);
}

TEST_CASE("best_response_payoff computes the weighted answer gap") {
  Fixture f({2, 2});
  const GroupLayout& g = f.g;
  std::vector<WeightedQuery> bundle = {
      {make_marginal(f.s, {0}, {0}, false), 2.0},
      {make_marginal(f.s, {1}, {1}, false), -1.0},
  };
  std::vector<double> truth = {0.75, 0.25};
  BitRow x(g.dim);
  x.set(0);  // satisfies query 0
  x.set(3);  // satisfies query 1
  // 2*(0.75 - 1) + (-1)*(0.25 - 1) = -0.5 + 0.75 = 0.25
  CHECK(best_response_payoff(bundle, truth, x) == doctest::Approx(0.25).epsilon(1e-12));
  std::vector<double> short_truth = {0.5};
  CHECK_THROWS_AS(best_response_payoff(bundle, short_truth, x), Error);
}
