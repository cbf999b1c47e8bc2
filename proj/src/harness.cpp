#include "oegd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

namespace oegd {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::Fem: return "fem";
    case Algorithm::SepFem: return "sepfem";
    case Algorithm::DualQuery: return "dualquery";
    case Algorithm::Dqrs: return "dqrs";
  }
  raise(Errc::ConfigError, "unknown algorithm enum value");
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "fem") return Algorithm::Fem;
  if (name == "sepfem") return Algorithm::SepFem;
  if (name == "dualquery") return Algorithm::DualQuery;
  if (name == "dqrs") return Algorithm::Dqrs;
  raise(Errc::ConfigError,
        "unknown algorithm '" + name + "' (expected fem|sepfem|dualquery|dqrs)");
}

namespace {

bool is_primal(Algorithm a) { return a == Algorithm::Fem || a == Algorithm::SepFem; }

std::string fmt(double x) { return nlohmann::json(x).dump(); }

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

ojson stat_block(const std::vector<double>& v) {
  ojson j;
  j["median"] = median_of(v);
  j["min"] = *std::min_element(v.begin(), v.end());
  j["max"] = *std::max_element(v.begin(), v.end());
  return j;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) raise(Errc::IoFailure, "write failed for " + path.string());
}

std::string resolve_path(const std::string& p, const std::string& base_dir) {
  if (p.empty() || base_dir.empty()) return p;
  fs::path fp(p);
  if (fp.is_absolute()) return p;
  return (fs::path(base_dir) / fp).lexically_normal().string();
}

void require_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      raise(Errc::ConfigError, "unknown key '" + it.key() + "' in " + where);
}

// Everything a run needs once paths are resolved and inputs are loaded.
struct Instance {
  std::optional<Schema> schema;
  std::optional<EncodedDataset> data;
  Workload w;
  std::vector<double> true_answers;
  size_t n = 0;
  double delta = 0.0;
  ojson data_echo;
  ojson workload_echo;
};

// Deletes a generated temp file even if loading throws.
struct TempFile {
  fs::path path;
  bool keep = false;
  ~TempFile() {
    if (!keep && !path.empty()) {
      std::error_code ec;
      fs::remove(path, ec);
    }
  }
};

Instance load_instance(const ExperimentConfig& cfg) {
  if (cfg.data.schema_path.empty()) raise(Errc::ConfigError, "data.schema is required");
  Instance inst;
  inst.schema = Schema::load(cfg.data.schema_path);

  if (cfg.data.generate && !cfg.data.csv_path.empty())
    raise(Errc::ConfigError, "data block takes either csv or generate, not both");
  if (cfg.data.generate) {
    if (cfg.data.generate_n == 0) raise(Errc::ConfigError, "data.generate.n must be >= 1");
    TempFile tmp;
    if (cfg.out_dir.empty()) {
      static std::atomic<uint64_t> counter{0};
      auto tick = std::chrono::steady_clock::now().time_since_epoch().count();
      tmp.path = fs::temp_directory_path() /
                 ("oegd-gen-" + std::to_string(tick) + "-" +
                  std::to_string(counter.fetch_add(1)) + ".csv");
    } else {
      tmp.path = fs::path(cfg.out_dir) / "data.csv";
      tmp.keep = true;
    }
    generate_synthetic_csv(tmp.path.string(), *inst.schema, cfg.data.generate_n,
                           cfg.data.generate_seed);
    inst.data.emplace(load_csv(tmp.path.string(), *inst.schema));
    inst.data_echo["schema"] = cfg.data.schema_path;
    inst.data_echo["generate"] = ojson{{"n", cfg.data.generate_n}, {"seed", cfg.data.generate_seed}};
  } else if (!cfg.data.csv_path.empty()) {
    inst.data.emplace(load_csv(cfg.data.csv_path, *inst.schema));
    inst.data_echo["schema"] = cfg.data.schema_path;
    inst.data_echo["csv"] = cfg.data.csv_path;
  } else {
    raise(Errc::ConfigError, "data block needs either a csv path or a generate spec");
  }

  inst.n = inst.data->size();
  if (cfg.delta) {
    inst.delta = *cfg.delta;
  } else {
    if (inst.n < 2)
      raise(Errc::ConfigError, "delta defaults to 1/n^2, which needs n >= 2; set delta");
    inst.delta = 1.0 / (static_cast<double>(inst.n) * static_cast<double>(inst.n));
  }
  if (!(inst.delta > 0) || !(inst.delta < 1))
    raise(Errc::ConfigError, "delta must lie in (0,1)");

  if (!cfg.workload.file.empty()) {
    inst.w = Workload::load(cfg.workload.file, *inst.schema);
    require_closure(inst.w);
    inst.workload_echo["file"] = cfg.workload.file;
  } else {
    inst.w = enumerate_marginals(*inst.schema, cfg.workload.k, cfg.workload.num_marginals,
                                 cfg.workload.seed);
    inst.workload_echo["k"] = cfg.workload.k;
    inst.workload_echo["marginals"] = cfg.workload.num_marginals;
    inst.workload_echo["seed"] = cfg.workload.seed;
  }
  inst.workload_echo["queries"] = inst.w.size();
  inst.workload_echo["dim"] = inst.schema->dim();

  inst.true_answers = answer_vector(inst.w, *inst.data);
  return inst;
}

// The (T, eta, s, rho) quadruple a run actually uses, after defaults.
struct ResolvedParams {
  uint32_t rounds = 0;
  double eta = 0.0;
  uint32_t samples = 0;
  double rho = 0.0;  // primal: budget to spend; dual: filter cap (may be +inf)
};

ResolvedParams resolve_params(const ExperimentConfig& cfg, const Instance& inst) {
  ResolvedParams r;
  if (is_primal(cfg.algorithm)) {
    if (cfg.epsilon.has_value() == cfg.rho.has_value())
      raise(Errc::ConfigError, "primal engines need exactly one of epsilon or rho");
    // invert_budget makes the reported epsilon_at_delta equal the requested
    // epsilon; converting via dp_to_zcdp would overshoot the (eps,delta) target.
    r.rho = cfg.rho ? *cfg.rho : invert_budget(*cfg.epsilon, inst.delta);
    if (!(r.rho > 0)) raise(Errc::ConfigError, "privacy budget must be positive");
    PrimalVariant variant =
        cfg.algorithm == Algorithm::Fem ? PrimalVariant::Fem : PrimalVariant::SepFem;
    HyperParams def{};
    if (!cfg.rounds || !cfg.eta || !cfg.samples)
      def = default_hyperparameters(variant, inst.schema->dim(), inst.n, inst.w.size(), r.rho,
                                    cfg.alpha, cfg.beta);
    r.rounds = cfg.rounds.value_or(def.rounds);
    r.eta = cfg.eta.value_or(def.eta);
    r.samples = cfg.samples.value_or(def.samples);
    if (r.rounds == 0 || r.samples == 0 || !(r.eta > 0))
      raise(Errc::ConfigError, "rounds, samples must be >= 1 and eta > 0");
  } else {
    if (cfg.epsilon && cfg.rho)
      raise(Errc::ConfigError, "give at most one of epsilon or rho as the dual budget cap");
    r.rho = cfg.rho ? *cfg.rho
                    : (cfg.epsilon ? invert_budget(*cfg.epsilon, inst.delta)
                                   : std::numeric_limits<double>::infinity());
    if (cfg.rounds || cfg.eta || cfg.samples)
      raise(Errc::ConfigError,
            "dual engines derive rounds/eta/samples from alpha and beta; do not set them");
    DqrsParams p = dqrs_params(cfg.alpha, cfg.beta, inst.w.size(),
                               static_cast<double>(inst.schema->dim()) * std::log(2.0));
    r.rounds = p.rounds;
    r.eta = p.eta;
    r.samples = p.samples;
  }
  return r;
}

RepetitionResult run_one(const ExperimentConfig& cfg, const Instance& inst,
                         const ResolvedParams& params, uint32_t rep, uint64_t rep_seed) {
  auto t0 = std::chrono::steady_clock::now();
  SyntheticDataset synthetic;
  std::vector<RoundTrace> traces;
  std::string ledger_json;
  std::vector<double> spends;
  if (is_primal(cfg.algorithm)) {
    PrimalConfig pc;
    pc.variant = cfg.algorithm == Algorithm::Fem ? PrimalVariant::Fem : PrimalVariant::SepFem;
    pc.rounds = params.rounds;
    pc.eta = params.eta;
    pc.samples = params.samples;
    pc.rho = params.rho;
    pc.oracle = cfg.oracle;
    pc.seed = rep_seed;
    PrimalResult res = run_primal(*inst.data, inst.w, pc);
    synthetic = std::move(res.synthetic);
    traces = std::move(res.traces);
    ledger_json = res.ledger.to_json_text();
    spends = res.ledger.spends();
  } else {
    DualResult res =
        cfg.algorithm == Algorithm::Dqrs
            ? run_dqrs(*inst.data, inst.w, cfg.alpha, cfg.beta, cfg.oracle, rep_seed, params.rho)
            : run_dualquery(*inst.data, inst.w, cfg.alpha, cfg.beta, cfg.oracle, rep_seed,
                            params.rho);
    synthetic = std::move(res.synthetic);
    traces = std::move(res.traces);
    ledger_json = res.ledger.to_json_text();
    spends = res.ledger.spends();
  }

  RepetitionResult out;
  out.repetition = rep;
  out.seed = rep_seed;
  out.rounds = static_cast<uint32_t>(traces.size());
  out.max_error = max_error(inst.true_answers, answer_vector(inst.w, synthetic));
  // Privacy totals come from the ledger spends, never from the config.
  out.rho_total = 0.0;
  for (double rho : spends) out.rho_total += rho;
  out.epsilon_at_delta = zcdp_to_dp(out.rho_total, inst.delta);
  for (const RoundTrace& t : traces) out.oracle_ms += t.oracle_ms;
  out.ledger_json = std::move(ledger_json);
  out.traces = std::move(traces);
  out.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::vector<RepetitionResult> run_reps(const ExperimentConfig& cfg, const Instance& inst,
                                       const ResolvedParams& params,
                                       std::optional<uint64_t> grid_tag) {
  std::vector<RepetitionResult> out(cfg.repetitions);
  std::vector<std::exception_ptr> errors(cfg.repetitions);
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < static_cast<int64_t>(cfg.repetitions); ++i) {
    try {
      uint32_t rep = static_cast<uint32_t>(i);
      uint64_t rep_seed =
          grid_tag ? derive_seed(cfg.seed, {stream::kRepetition, *grid_tag, rep})
                   : derive_seed(cfg.seed, {stream::kRepetition, rep});
      out[rep] = run_one(cfg, inst, params, rep, rep_seed);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

ojson config_echo(const ExperimentConfig& cfg, const Instance& inst,
                  const ResolvedParams& params) {
  ojson j;
  j["algorithm"] = algorithm_name(cfg.algorithm);
  if (cfg.epsilon) j["epsilon"] = *cfg.epsilon;
  if (is_primal(cfg.algorithm))
    j["rho"] = params.rho;
  else if (std::isfinite(params.rho))
    j["budget_rho"] = params.rho;
  j["delta"] = inst.delta;
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["rounds"] = params.rounds;
  j["eta"] = params.eta;
  j["samples"] = params.samples;
  j["oracle"] =
      ojson{{"backend", cfg.oracle.backend == OracleBackend::Exact ? "exact" : "local"},
            {"cap", cfg.oracle.cap},
            {"restarts", cfg.oracle.restarts}};
  j["seed"] = cfg.seed;
  j["repetitions"] = cfg.repetitions;
  j["tuning_mode"] = false;
  j["data"] = inst.data_echo;
  return j;
}

ojson rep_entry(const RepetitionResult& r) {
  ojson j;
  j["repetition"] = r.repetition;
  j["seed"] = r.seed;
  j["rounds"] = r.rounds;
  j["max_error"] = r.max_error;
  j["rho_total"] = r.rho_total;
  j["epsilon_at_delta"] = r.epsilon_at_delta;
  j["ledger"] = ojson::parse(r.ledger_json);
  return j;
}

ojson summary_block(const std::vector<RepetitionResult>& reps) {
  std::vector<double> err, rho, eps;
  for (const RepetitionResult& r : reps) {
    err.push_back(r.max_error);
    rho.push_back(r.rho_total);
    eps.push_back(r.epsilon_at_delta);
  }
  ojson j;
  j["max_error"] = stat_block(err);
  j["rho_total"] = stat_block(rho);
  j["epsilon_at_delta"] = stat_block(eps);
  return j;
}

std::string timings_json(const std::vector<RepetitionResult>& reps, double total_ms) {
  ojson j;
  j["total_ms"] = total_ms;
  j["repetitions"] = ojson::array();
  for (const RepetitionResult& r : reps)
    j["repetitions"].push_back(
        ojson{{"repetition", r.repetition}, {"wall_ms", r.wall_ms}, {"oracle_ms", r.oracle_ms}});
  return j.dump(2) + "\n";
}

void validate_common(const ExperimentConfig& cfg) {
  if (cfg.repetitions < 1) raise(Errc::ConfigError, "repetitions must be >= 1");
  if (!(cfg.alpha > 0) || !(cfg.alpha < 1) || !(cfg.beta > 0) || !(cfg.beta < 1))
    raise(Errc::ConfigError, "alpha and beta must lie in (0,1)");
  if (cfg.oracle.restarts < 1) raise(Errc::ConfigError, "oracle.restarts must be >= 1");
  if (cfg.epsilon && !(*cfg.epsilon > 0)) raise(Errc::ConfigError, "epsilon must be positive");
  if (cfg.rho && !(*cfg.rho > 0)) raise(Errc::ConfigError, "rho must be positive");
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::string& base_dir) {
  try {
    nlohmann::json j = nlohmann::json::parse(json_text);
    if (!j.is_object()) raise(Errc::ConfigError, "config must be a JSON object");
    require_keys(j,
                 {"algorithm", "epsilon", "rho", "delta", "rounds", "eta", "samples", "alpha",
                  "beta", "oracle", "seed", "repetitions", "data", "workload", "out_dir"},
                 "config");
    ExperimentConfig cfg;
    cfg.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
    if (j.contains("rho")) cfg.rho = j["rho"].get<double>();
    if (j.contains("delta")) cfg.delta = j["delta"].get<double>();
    if (j.contains("rounds")) cfg.rounds = j["rounds"].get<uint32_t>();
    if (j.contains("eta")) cfg.eta = j["eta"].get<double>();
    if (j.contains("samples")) cfg.samples = j["samples"].get<uint32_t>();
    if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
    if (j.contains("beta")) cfg.beta = j["beta"].get<double>();
    if (j.contains("oracle")) {
      const auto& o = j["oracle"];
      require_keys(o, {"backend", "cap", "restarts"}, "oracle");
      if (o.contains("backend")) {
        std::string b = o["backend"].get<std::string>();
        if (b == "exact") {
          cfg.oracle.backend = OracleBackend::Exact;
        } else if (b == "local") {
          cfg.oracle.backend = OracleBackend::Local;
        } else if (b == "export") {
          raise(Errc::ConfigError,
                "the 'export' backend does not run; use the export-mip subcommand");
        } else {
          raise(Errc::ConfigError, "unknown oracle backend '" + b + "'");
        }
      }
      if (o.contains("cap")) cfg.oracle.cap = o["cap"].get<uint64_t>();
      if (o.contains("restarts")) cfg.oracle.restarts = o["restarts"].get<uint32_t>();
    }
    if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
    if (j.contains("repetitions")) cfg.repetitions = j["repetitions"].get<uint32_t>();

    if (!j.contains("data")) raise(Errc::ConfigError, "config needs a data block");
    const auto& d = j["data"];
    require_keys(d, {"schema", "csv", "generate"}, "data");
    if (d.contains("schema"))
      cfg.data.schema_path = resolve_path(d["schema"].get<std::string>(), base_dir);
    if (d.contains("csv")) cfg.data.csv_path = resolve_path(d["csv"].get<std::string>(), base_dir);
    if (d.contains("generate")) {
      const auto& g = d["generate"];
      require_keys(g, {"n", "seed"}, "data.generate");
      cfg.data.generate = true;
      cfg.data.generate_n = g.at("n").get<uint64_t>();
      if (g.contains("seed")) cfg.data.generate_seed = g["seed"].get<uint64_t>();
    }
    if (cfg.data.generate && !cfg.data.csv_path.empty())
      raise(Errc::ConfigError, "data block takes either csv or generate, not both");

    if (!j.contains("workload")) raise(Errc::ConfigError, "config needs a workload block");
    const auto& w = j["workload"];
    require_keys(w, {"file", "k", "marginals", "seed"}, "workload");
    if (w.contains("file")) {
      cfg.workload.file = resolve_path(w["file"].get<std::string>(), base_dir);
      if (w.contains("k") || w.contains("marginals") || w.contains("seed"))
        raise(Errc::ConfigError, "workload file excludes k/marginals/seed");
    } else {
      if (!w.contains("k")) raise(Errc::ConfigError, "workload needs k (or a file)");
      cfg.workload.k = w["k"].get<uint32_t>();
      if (w.contains("marginals")) cfg.workload.num_marginals = w["marginals"].get<uint64_t>();
      if (w.contains("seed")) cfg.workload.seed = w["seed"].get<uint64_t>();
    }

    if (j.contains("out_dir"))
      cfg.out_dir = resolve_path(j["out_dir"].get<std::string>(), base_dir);
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::ConfigError, std::string("config parse error: ") + e.what());
  }
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  validate_common(cfg);
  if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);
  auto t0 = std::chrono::steady_clock::now();

  Instance inst = load_instance(cfg);
  ResolvedParams params = resolve_params(cfg, inst);

  RunReport run;
  run.repetitions = run_reps(cfg, inst, params, std::nullopt);

  ojson report;
  report["config"] = config_echo(cfg, inst, params);
  report["workload"] = inst.workload_echo;
  report["n"] = inst.n;
  report["repetitions"] = ojson::array();
  for (const RepetitionResult& r : run.repetitions) report["repetitions"].push_back(rep_entry(r));
  report["summary"] = summary_block(run.repetitions);
  run.report_text = report.dump(2) + "\n";

  run.total_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  run.timings_text = timings_json(run.repetitions, run.total_ms);

  if (!cfg.out_dir.empty()) {
    fs::path dir(cfg.out_dir);
    write_text_file(dir / "report.json", run.report_text);
    for (const RepetitionResult& r : run.repetitions)
      write_text_file(dir / ("trace_rep" + std::to_string(r.repetition) + ".csv"),
                      trace_csv(cfg.algorithm, r.traces));
    write_text_file(dir / "timings.json", run.timings_text);
  }
  return run;
}

const std::vector<TuningPoint>& preset_grid(const std::string& name) {
  static const std::vector<TuningPoint> sweep1 = [] {
    std::vector<TuningPoint> g;
    for (double eps0 : {0.003, 0.005, 0.007, 0.009, 0.011, 0.015, 0.017, 0.019})
      for (double eta : {1.0, 2.0, 3.0, 4.0}) g.push_back({eps0, eta});
    return g;
  }();
  static const std::vector<TuningPoint> sweep2 = [] {
    std::vector<TuningPoint> g;
    for (double eps0 : {0.0025, 0.003, 0.0035})
      for (double eta : {0.75, 1.0, 1.25}) g.push_back({eps0, eta});
    return g;
  }();
  if (name == "fem-sweep-1") return sweep1;
  if (name == "fem-sweep-2") return sweep2;
  raise(Errc::ConfigError, "unknown preset '" + name + "' (expected fem-sweep-1|fem-sweep-2)");
}

RunReport run_tuning_sweep(const ExperimentConfig& cfg, const std::string& preset) {
  validate_common(cfg);
  if (!is_primal(cfg.algorithm))
    raise(Errc::ConfigError, "tuning presets drive the primal engines only");
  if (cfg.rounds || cfg.eta)
    raise(Errc::ConfigError, "the preset grid sets rounds and eta; remove them from the config");
  const std::vector<TuningPoint>& grid = preset_grid(preset);
  if (!cfg.out_dir.empty()) fs::create_directories(cfg.out_dir);
  auto t0 = std::chrono::steady_clock::now();

  Instance inst = load_instance(cfg);
  if (cfg.epsilon.has_value() == cfg.rho.has_value())
    raise(Errc::ConfigError, "primal engines need exactly one of epsilon or rho");
  double rho = cfg.rho ? *cfg.rho : invert_budget(*cfg.epsilon, inst.delta);
  if (!(rho > 0)) raise(Errc::ConfigError, "privacy budget must be positive");

  struct GridRun {
    ResolvedParams params;
    std::vector<RepetitionResult> reps;
    double median_err = 0.0;
  };
  std::vector<GridRun> runs(grid.size());
  for (size_t g = 0; g < grid.size(); ++g) {
    ResolvedParams p;
    double rho0 = 0.5 * grid[g].eps0 * grid[g].eps0;
    p.rounds = static_cast<uint32_t>(std::max(1.0, std::floor(rho / rho0)));
    p.eta = grid[g].eta;
    p.samples =
        cfg.samples ? *cfg.samples : sample_count_formula(cfg.alpha, cfg.beta, p.rounds,
                                                          inst.w.size());
    p.rho = rho;
    runs[g].params = p;
    runs[g].reps = run_reps(cfg, inst, p, g);
    std::vector<double> errs;
    for (const RepetitionResult& r : runs[g].reps) errs.push_back(r.max_error);
    runs[g].median_err = median_of(errs);
  }

  size_t best = 0;
  for (size_t g = 1; g < runs.size(); ++g)
    if (runs[g].median_err < runs[best].median_err) best = g;

  ojson report;
  report["config"] = config_echo(cfg, inst, runs[best].params);
  report["config"]["tuning_mode"] = true;
  report["config"]["preset"] = preset;
  report["workload"] = inst.workload_echo;
  report["n"] = inst.n;
  report["privacy_note"] =
      "grid search reruns the mechanism per point; the aggregate is not covered by a single "
      "privacy budget and is for benchmarking only";
  report["grid"] = ojson::array();
  for (size_t g = 0; g < grid.size(); ++g) {
    ojson entry;
    entry["eps0"] = grid[g].eps0;
    entry["eta"] = grid[g].eta;
    entry["rounds"] = runs[g].params.rounds;
    entry["samples"] = runs[g].params.samples;
    entry["median_max_error"] = runs[g].median_err;
    entry["repetitions"] = ojson::array();
    for (const RepetitionResult& r : runs[g].reps)
      entry["repetitions"].push_back(ojson{{"repetition", r.repetition},
                                           {"seed", r.seed},
                                           {"max_error", r.max_error},
                                           {"rho_total", r.rho_total}});
    report["grid"].push_back(std::move(entry));
  }
  report["best"] = ojson{{"eps0", grid[best].eps0},
                         {"eta", grid[best].eta},
                         {"rounds", runs[best].params.rounds},
                         {"samples", runs[best].params.samples},
                         {"median_max_error", runs[best].median_err}};

  RunReport run;
  run.report_text = report.dump(2) + "\n";
  run.repetitions = std::move(runs[best].reps);
  run.total_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  run.timings_text = timings_json(run.repetitions, run.total_ms);

  if (!cfg.out_dir.empty()) {
    write_text_file(fs::path(cfg.out_dir) / "report.json", run.report_text);
    write_text_file(fs::path(cfg.out_dir) / "timings.json", run.timings_text);
  }
  return run;
}

std::string compare_reports(const std::vector<std::string>& report_texts) {
  if (report_texts.empty()) raise(Errc::ConfigError, "no reports to compare");
  std::vector<ojson> reports;
  for (const std::string& text : report_texts) {
    try {
      reports.push_back(ojson::parse(text));
    } catch (const nlohmann::json::exception& e) {
      raise(Errc::ConfigError, std::string("report parse error: ") + e.what());
    }
  }
  for (const ojson& r : reports)
    if (!r.contains("workload") || !r.contains("config") || !r.contains("summary"))
      raise(Errc::ConfigError, "report missing workload/config/summary blocks");
  for (size_t i = 1; i < reports.size(); ++i)
    if (reports[i]["workload"] != reports[0]["workload"])
      raise(Errc::MismatchedWorkloads, "reports answer different workloads");

  std::set<std::string> algorithms;
  std::map<double, std::map<std::string, double>> cells;  // epsilon -> algorithm -> median
  for (const ojson& r : reports) {
    const ojson& c = r["config"];
    double eps = c.contains("epsilon")
                     ? c["epsilon"].get<double>()
                     : r["summary"]["epsilon_at_delta"]["median"].get<double>();
    std::string alg = c["algorithm"].get<std::string>();
    algorithms.insert(alg);
    auto [it, fresh] = cells[eps].emplace(alg, r["summary"]["max_error"]["median"].get<double>());
    if (!fresh)
      raise(Errc::ConfigError,
            "duplicate cell: algorithm " + alg + " at epsilon " + fmt(eps));
  }

  std::ostringstream out;
  out << "epsilon";
  for (const std::string& alg : algorithms) out << "," << alg;
  out << "\n";
  for (const auto& [eps, row] : cells) {
    out << fmt(eps);
    for (const std::string& alg : algorithms) {
      out << ",";
      auto it = row.find(alg);
      if (it != row.end()) out << fmt(it->second);
    }
    out << "\n";
  }
  return out.str();
}

std::string trace_csv(Algorithm a, std::span<const RoundTrace> traces) {
  std::ostringstream out;
  if (is_primal(a)) {
    out << "t,query_id,score\n";
    for (const RoundTrace& t : traces)
      out << t.t << "," << t.query_id << "," << fmt(t.score) << "\n";
  } else {
    out << "t,kept,fresh,rejected,rho_t\n";
    for (const RoundTrace& t : traces)
      out << t.t << "," << t.kept << "," << t.fresh << "," << t.rejected << ","
          << fmt(t.rho_t) << "\n";
  }
  return out.str();
}

}  // namespace oegd
