// Compares the OpenMP kernels against their serial reference implementations
// on a generated instance: workload answering over records, and batched
// perturbed-oracle solves over an enumerated domain.  Fails (exit 1) if any
// parallel result deviates from the serial one, so this doubles as a smoke
// check; pass --quick for a small instance suitable for test suites.

#include <chrono>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "oegd/dataset.hpp"
#include "oegd/marginals.hpp"
#include "oegd/oracle.hpp"
#include "oegd/rng.hpp"
#include "oegd/schema.hpp"

using namespace oegd;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Schema make_schema(uint32_t attributes, uint32_t values) {
  std::string text = R"({"attributes":[)";
  for (uint32_t a = 0; a < attributes; ++a) {
    if (a) text += ",";
    text += R"({"name":"a)" + std::to_string(a) + R"(","values":[)";
    for (uint32_t v = 0; v < values; ++v) {
      if (v) text += ",";
      text += "\"v" + std::to_string(v) + "\"";
    }
    text += "]}";
  }
  text += "]}";
  return Schema::from_json_text(text);
}

struct Row {
  std::string name;
  double serial_ms = 0.0;
  double parallel_ms = 0.0;
  bool match = false;
};

void print_row(const Row& r) {
  std::cout << r.name << ": serial " << r.serial_ms << " ms, parallel " << r.parallel_ms
            << " ms, speedup " << (r.parallel_ms > 0 ? r.serial_ms / r.parallel_ms : 0.0)
            << "x, match " << (r.match ? "yes" : "NO") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--quick") == 0) quick = true;

  const size_t n = quick ? 2000 : 20000;
  const int iters = quick ? 3 : 10;
  const size_t batch = quick ? 32 : 128;

#ifdef _OPENMP
  std::cout << "openmp threads: " << omp_get_max_threads() << "\n";
#else
  std::cout << "openmp: disabled at build time\n";
#endif

  Schema schema = make_schema(6, 4);
  auto csv = std::filesystem::temp_directory_path() / "oegd-bench.csv";
  generate_synthetic_csv(csv.string(), schema, n, 7);
  EncodedDataset data = load_csv(csv.string(), schema);
  std::filesystem::remove(csv);

  Workload w = enumerate_marginals(schema, 3, 0, 11);
  std::cout << "instance: n=" << n << " dim=" << schema.dim() << " queries=" << w.size()
            << " iterations=" << iters << "\n";

  bool all_match = true;

  {
    Row row{"answer_vector", 0, 0, false};
    std::vector<double> serial, parallel;
    auto t0 = Clock::now();
    for (int i = 0; i < iters; ++i) serial = answer_vector_serial(w, data);
    row.serial_ms = ms_since(t0) / iters;
    t0 = Clock::now();
    for (int i = 0; i < iters; ++i) parallel = answer_vector(w, data);
    row.parallel_ms = ms_since(t0) / iters;
    row.match = serial == parallel;
    all_match = all_match && row.match;
    print_row(row);
  }

  {
    GroupLayout groups = GroupLayout::from_schema(schema);
    EnumeratedDomain domain = EnumeratedDomain::build(groups);
    for (size_t q = 0; q < w.size(); q += 2) domain.add_base_query(w.queries[q], 1.0);
    std::vector<std::vector<double>> sigmas(batch);
    for (size_t j = 0; j < batch; ++j) {
      Rng rng(derive_seed(13, {stream::kSample, j}));
      sigmas[j] = sample_exponential_vector(2.0, schema.dim(), rng);
    }

    Row row{"oracle_batch", 0, 0, false};
    std::vector<OracleSolution> serial, parallel;
    auto t0 = Clock::now();
    for (int i = 0; i < iters; ++i) serial = domain.solve_batch_serial(sigmas);
    row.serial_ms = ms_since(t0) / iters;
    t0 = Clock::now();
    for (int i = 0; i < iters; ++i) parallel = domain.solve_batch(sigmas);
    row.parallel_ms = ms_since(t0) / iters;
    row.match = serial.size() == parallel.size();
    for (size_t j = 0; row.match && j < serial.size(); ++j)
      row.match = serial[j].objective == parallel[j].objective &&
                  serial[j].record == parallel[j].record;
    all_match = all_match && row.match;
    print_row(row);
  }

  if (!all_match) {
    std::cerr << "parallel kernels deviate from the serial reference\n";
    return 1;
  }
  return 0;
}
