#include "oegd/dataset.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "oegd/rng.hpp"

namespace oegd {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

}  // namespace

EncodedDataset::EncodedDataset(Schema schema, BitMatrix rows)
    : schema_(std::move(schema)), rows_(std::move(rows)) {
  if (rows_.n == 0) raise(Errc::EmptyDataset, "dataset has no records");
  if (rows_.dim != schema_.dim())
    raise(Errc::DimensionMismatch, "record width does not match schema");
}

EncodedDataset load_csv(const std::string& path, const Schema& schema) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoFailure, "cannot open CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) raise(Errc::EmptyFile, "empty CSV: " + path);

  std::vector<std::string> header = split_csv_line(line);
  if (header.size() != schema.attribute_count())
    raise(Errc::MalformedRow, "CSV header width does not match schema");
  for (size_t a = 0; a < header.size(); ++a)
    if (header[a] != schema.attribute(a).name)
      raise(Errc::MalformedRow, "CSV header column '" + header[a] + "' != schema attribute '" +
                                    schema.attribute(a).name + "'");

  BitMatrix rows(schema.dim());
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != schema.attribute_count())
      raise(Errc::MalformedRow, "row " + std::to_string(lineno) + " has " +
                                    std::to_string(cells.size()) + " cells, expected " +
                                    std::to_string(schema.attribute_count()));
    BitRow r(schema.dim());
    for (size_t a = 0; a < cells.size(); ++a)
      r.set(schema.bit(a, schema.value_index(a, cells[a])));
    rows.append(r);
  }
  if (rows.n == 0) raise(Errc::EmptyDataset, "CSV has a header but no rows: " + path);
  return EncodedDataset(schema, std::move(rows));
}

void generate_synthetic_csv(const std::string& path, const Schema& schema, size_t n,
                            uint64_t seed) {
  if (n == 0) raise(Errc::EmptyDataset, "cannot generate zero rows");
  std::ofstream out(path);
  if (!out) raise(Errc::IoFailure, "cannot write CSV: " + path);

  for (size_t a = 0; a < schema.attribute_count(); ++a)
    out << (a ? "," : "") << schema.attribute(a).name;
  out << "\n";

  // Three latent classes; per (class, attribute) one preferred value carries
  // extra mass.  Gives correlated marginals while staying trivially decodable.
  constexpr uint32_t kClasses = 3;
  constexpr double kPreferredMass = 0.55;
  Rng rng(derive_seed(seed, {stream::kData}));
  for (size_t i = 0; i < n; ++i) {
    uint64_t cls = rng.below(kClasses);
    for (size_t a = 0; a < schema.attribute_count(); ++a) {
      uint32_t card = schema.cardinality(a);
      uint64_t preferred = derive_seed(seed, {stream::kData, cls, uint64_t(a)}) % card;
      uint32_t value;
      if (rng.uniform() < kPreferredMass)
        value = static_cast<uint32_t>(preferred);
      else
        value = static_cast<uint32_t>(rng.below(card));
      out << (a ? "," : "") << schema.label(a, value);
    }
    out << "\n";
  }
  if (!out) raise(Errc::IoFailure, "write failure: " + path);
}

RecordStats record_stats(const EncodedDataset& data) {
  RecordStats st;
  const Schema& schema = data.schema();
  const BitMatrix& rows = data.rows();
  st.n = rows.n;
  st.dim = rows.dim;
  st.value_counts.resize(schema.attribute_count());
  for (size_t a = 0; a < schema.attribute_count(); ++a)
    st.value_counts[a].assign(schema.cardinality(a), 0);
  for (size_t i = 0; i < rows.n; ++i) {
    const uint64_t* row = rows.row(i);
    for (size_t a = 0; a < schema.attribute_count(); ++a) {
      uint32_t lo = schema.offset(a), card = schema.cardinality(a);
      for (uint32_t v = 0; v < card; ++v) {
        uint32_t b = lo + v;
        if ((row[b >> 6] >> (b & 63)) & 1) {
          ++st.value_counts[a][v];
          break;
        }
      }
    }
  }
  return st;
}

std::string RecordStats::to_json_text(const Schema& schema) const {
  nlohmann::ordered_json j;
  j["n"] = n;
  j["dim"] = dim;
  j["attributes"] = nlohmann::ordered_json::array();
  for (size_t a = 0; a < value_counts.size(); ++a) {
    nlohmann::ordered_json ja;
    ja["name"] = schema.attribute(a).name;
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (uint32_t v = 0; v < value_counts[a].size(); ++v)
      counts[schema.label(a, v)] = value_counts[a][v];
    ja["counts"] = std::move(counts);
    j["attributes"].push_back(std::move(ja));
  }
  return j.dump(2);
}

std::vector<std::string> decode_record(const Schema& schema, const uint64_t* row,
                                       uint32_t words) {
  (void)words;
  std::vector<std::string> cells;
  cells.reserve(schema.attribute_count());
  for (size_t a = 0; a < schema.attribute_count(); ++a) {
    uint32_t lo = schema.offset(a), card = schema.cardinality(a);
    bool found = false;
    for (uint32_t v = 0; v < card && !found; ++v) {
      uint32_t b = lo + v;
      if ((row[b >> 6] >> (b & 63)) & 1) {
        cells.push_back(schema.label(a, v));
        found = true;
      }
    }
    if (!found) raise(Errc::DimensionMismatch, "record is not one-hot valid");
  }
  return cells;
}

void write_synthetic_csv(const std::string& path, const Schema& schema,
                         const SyntheticDataset& synth) {
  std::ofstream out(path);
  if (!out) raise(Errc::IoFailure, "cannot write CSV: " + path);
  for (size_t a = 0; a < schema.attribute_count(); ++a)
    out << (a ? "," : "") << schema.attribute(a).name;
  out << "\n";
  for (size_t i = 0; i < synth.size(); ++i) {
    std::vector<std::string> cells = decode_record(schema, synth.rows.row(i), synth.rows.words);
    for (size_t a = 0; a < cells.size(); ++a) out << (a ? "," : "") << cells[a];
    out << "\n";
  }
  if (!out) raise(Errc::IoFailure, "write failure: " + path);
}

}  // namespace oegd
