// Command-line front end: encode, gen-data, workload, run, export-mip, compare.
// Exit codes: 0 success, 2 config error, 3 component failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oegd/harness.hpp"
#include "oegd/oracle.hpp"

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) oegd::raise(oegd::Errc::IoFailure, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) oegd::raise(oegd::Errc::IoFailure, "cannot open " + path + " for writing");
  out << text;
  if (!out) oegd::raise(oegd::Errc::IoFailure, "write failed for " + path);
}

struct RunArgs {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
  std::string algorithm;
  std::optional<double> epsilon, delta, rho;
  std::optional<uint32_t> k;
  std::optional<uint64_t> marginals;
  std::string oracle;
  std::string tune;
};

int do_run(const RunArgs& a) {
  std::string base_dir = std::filesystem::path(a.config).parent_path().string();
  oegd::ExperimentConfig cfg =
      oegd::parse_experiment_config(read_text_file(a.config), base_dir);

  if (a.seed) cfg.seed = *a.seed;
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (!a.algorithm.empty()) cfg.algorithm = oegd::parse_algorithm(a.algorithm);
  if (a.epsilon) {
    cfg.epsilon = *a.epsilon;
    cfg.rho.reset();
  }
  if (a.rho) {
    cfg.rho = *a.rho;
    cfg.epsilon.reset();
  }
  if (a.delta) cfg.delta = *a.delta;
  if (a.k || a.marginals) {
    if (!cfg.workload.file.empty())
      oegd::raise(oegd::Errc::ConfigError, "--k/--marginals clash with a workload file");
    if (a.k) cfg.workload.k = *a.k;
    if (a.marginals) cfg.workload.num_marginals = *a.marginals;
  }
  if (!a.oracle.empty()) {
    if (a.oracle == "exact") {
      cfg.oracle.backend = oegd::OracleBackend::Exact;
    } else if (a.oracle == "local") {
      cfg.oracle.backend = oegd::OracleBackend::Local;
    } else if (a.oracle == "export") {
      oegd::raise(oegd::Errc::ConfigError,
                  "the 'export' backend does not run; use the export-mip subcommand");
    } else {
      oegd::raise(oegd::Errc::ConfigError, "unknown oracle backend '" + a.oracle + "'");
    }
  }

  oegd::RunReport run = a.tune.empty() ? oegd::run_experiment(cfg)
                                       : oegd::run_tuning_sweep(cfg, a.tune);
  if (cfg.out_dir.empty()) {
    std::cout << run.report_text;
  } else {
    std::cout << "wrote " << (std::filesystem::path(cfg.out_dir) / "report.json").string()
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic data release for k-way marginal workloads"};
  app.require_subcommand(1);

  // encode
  auto* encode = app.add_subcommand("encode", "print one-hot encoding stats for a CSV");
  std::string enc_schema, enc_csv, enc_out;
  encode->add_option("--schema", enc_schema, "schema JSON")->required();
  encode->add_option("--csv", enc_csv, "records CSV")->required();
  encode->add_option("--out", enc_out, "output path (default: stdout)");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "write a seeded synthetic records CSV");
  std::string gen_schema, gen_out;
  uint64_t gen_n = 0, gen_seed = 0;
  gen->add_option("--schema", gen_schema, "schema JSON")->required();
  gen->add_option("--n", gen_n, "number of records")->required();
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output CSV path")->required();

  // workload
  auto* wl = app.add_subcommand("workload", "enumerate a closed k-way marginal workload");
  std::string wl_schema, wl_out;
  uint32_t wl_k = 3;
  uint64_t wl_marginals = 0, wl_seed = 0;
  wl->add_option("--schema", wl_schema, "schema JSON")->required();
  wl->add_option("--k", wl_k, "marginal width");
  wl->add_option("--marginals", wl_marginals, "feature subsets to keep (0 = all)");
  wl->add_option("--seed", wl_seed, "subset selection seed");
  wl->add_option("--out", wl_out, "output workload JSON")->required();

  // run
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  RunArgs ra;
  run->add_option("--config", ra.config, "experiment config JSON")->required();
  uint64_t ra_seed = 0;
  auto* ra_seed_opt = run->add_option("--seed", ra_seed, "master seed override");
  run->add_option("--out", ra.out, "output directory override");
  run->add_option("--algorithm", ra.algorithm, "fem|sepfem|dualquery|dqrs");
  double ra_eps = 0, ra_delta = 0, ra_rho = 0;
  auto* ra_eps_opt = run->add_option("--epsilon", ra_eps, "privacy budget epsilon");
  auto* ra_delta_opt = run->add_option("--delta", ra_delta, "privacy parameter delta");
  auto* ra_rho_opt = run->add_option("--rho", ra_rho, "zCDP budget rho");
  uint32_t ra_k = 0;
  uint64_t ra_marginals = 0;
  auto* ra_k_opt = run->add_option("--k", ra_k, "marginal width override");
  auto* ra_marg_opt = run->add_option("--marginals", ra_marginals, "marginal count override");
  run->add_option("--oracle", ra.oracle, "exact|local");
  run->add_option("--tune", ra.tune, "tuning preset (fem-sweep-1|fem-sweep-2)");

  // export-mip
  auto* mip = app.add_subcommand("export-mip", "write one oracle round as LP-format text");
  std::string mip_schema, mip_workload, mip_out;
  double mip_eta = 0.0;
  uint64_t mip_sigma_seed = 0;
  mip->add_option("--schema", mip_schema, "schema JSON")->required();
  mip->add_option("--workload", mip_workload, "workload JSON")->required();
  auto* mip_eta_opt = mip->add_option("--eta", mip_eta, "perturbation scale (omit for none)");
  mip->add_option("--sigma-seed", mip_sigma_seed, "perturbation seed");
  mip->add_option("--out", mip_out, "output LP path")->required();

  // compare
  auto* cmp = app.add_subcommand("compare", "pivot run reports into an error table CSV");
  std::vector<std::string> cmp_reports;
  std::string cmp_out;
  cmp->add_option("--reports", cmp_reports, "report.json paths")->required()->expected(-1);
  cmp->add_option("--out", cmp_out, "output CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*encode) {
      oegd::Schema schema = oegd::Schema::load(enc_schema);
      oegd::EncodedDataset data = oegd::load_csv(enc_csv, schema);
      std::string text = oegd::record_stats(data).to_json_text(schema) + "\n";
      if (enc_out.empty())
        std::cout << text;
      else
        write_text_file(enc_out, text);
      return 0;
    }
    if (*gen) {
      oegd::Schema schema = oegd::Schema::load(gen_schema);
      if (gen_n == 0) oegd::raise(oegd::Errc::ConfigError, "--n must be >= 1");
      oegd::generate_synthetic_csv(gen_out, schema, gen_n, gen_seed);
      std::cout << "wrote " << gen_out << "\n";
      return 0;
    }
    if (*wl) {
      oegd::Schema schema = oegd::Schema::load(wl_schema);
      oegd::Workload w = oegd::enumerate_marginals(schema, wl_k, wl_marginals, wl_seed);
      w.save(wl_out);
      std::cout << "wrote " << wl_out << " (" << w.size() << " queries)\n";
      return 0;
    }
    if (*run) {
      if (*ra_seed_opt) ra.seed = ra_seed;
      if (*ra_eps_opt) ra.epsilon = ra_eps;
      if (*ra_delta_opt) ra.delta = ra_delta;
      if (*ra_rho_opt) ra.rho = ra_rho;
      if (*ra_k_opt) ra.k = ra_k;
      if (*ra_marg_opt) ra.marginals = ra_marginals;
      return do_run(ra);
    }
    if (*mip) {
      oegd::Schema schema = oegd::Schema::load(mip_schema);
      oegd::Workload w = oegd::Workload::load(mip_workload, schema);
      oegd::OracleProblem p;
      p.groups = oegd::GroupLayout::from_schema(schema);
      for (const oegd::MarginalQuery& q : w.queries)
        p.queries.push_back(oegd::WeightedQuery{q, 1.0});
      if (*mip_eta_opt) {
        if (!(mip_eta > 0)) oegd::raise(oegd::Errc::ConfigError, "--eta must be positive");
        oegd::Rng rng(oegd::derive_seed(mip_sigma_seed, {oegd::stream::kSample, 0}));
        p.sigma = oegd::sample_exponential_vector(mip_eta, schema.dim(), rng);
      }
      oegd::export_mip_file(p, mip_out);
      std::cout << "wrote " << mip_out << "\n";
      return 0;
    }
    if (*cmp) {
      std::vector<std::string> texts;
      for (const std::string& path : cmp_reports) texts.push_back(read_text_file(path));
      std::string table = oegd::compare_reports(texts);
      if (cmp_out.empty())
        std::cout << table;
      else
        write_text_file(cmp_out, table);
      return 0;
    }
  } catch (const oegd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == oegd::Errc::ConfigError ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
