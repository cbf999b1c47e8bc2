#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "oegd/bits.hpp"
#include "oegd/schema.hpp"

namespace oegd {

/// Immutable one-hot encoded dataset.
///
/// Bulk record access goes through rows(), which bumps the optional access
/// probe.  The probe exists so tests can assert that privacy-critical code
/// paths (the FTPL data-player updates) never touch the private records.
class EncodedDataset {
 public:
  EncodedDataset(Schema schema, BitMatrix rows);

  size_t size() const { return rows_.n; }
  uint32_t dim() const { return rows_.dim; }
  const Schema& schema() const { return schema_; }

  const BitMatrix& rows() const {
    if (probe_) probe_->fetch_add(1, std::memory_order_relaxed);
    return rows_;
  }

  /// Counts one per bulk record access; pass nullptr to detach.
  void set_access_probe(std::atomic<uint64_t>* probe) const { probe_ = probe; }

 private:
  Schema schema_;
  BitMatrix rows_;
  mutable std::atomic<uint64_t>* probe_ = nullptr;
};

/// Weighted record set produced by the engines.
/// round_of[i] is the 1-based round that emitted record i.
struct SyntheticDataset {
  BitMatrix rows;
  std::vector<double> weights;
  std::vector<uint32_t> round_of;

  size_t size() const { return rows.n; }
};

/// Per-attribute value counts plus basic shape.
struct RecordStats {
  size_t n = 0;
  uint32_t dim = 0;
  std::vector<std::vector<size_t>> value_counts;  // [attribute][value]

  std::string to_json_text(const Schema& schema) const;
};

/// Reads a header-bearing comma-separated file against the schema.
/// Header must list exactly the schema's attribute names in order.
EncodedDataset load_csv(const std::string& path, const Schema& schema);

/// Writes n deterministic synthetic rows drawable by load_csv.  Rows come
/// from a seeded latent-class mixture so marginals carry correlations.
void generate_synthetic_csv(const std::string& path, const Schema& schema, size_t n,
                            uint64_t seed);

RecordStats record_stats(const EncodedDataset& data);

/// Decodes one packed record to raw cells (inverse of the CSV encoding).
std::vector<std::string> decode_record(const Schema& schema, const uint64_t* row,
                                       uint32_t words);

/// Writes a synthetic dataset as CSV rows (each record repeated per its
/// provenance round ordering; weights are uniform by construction).
void write_synthetic_csv(const std::string& path, const Schema& schema,
                         const SyntheticDataset& synth);

}  // namespace oegd
