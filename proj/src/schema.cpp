#include "oegd/schema.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace oegd {

Schema::Schema(std::vector<Attribute> attrs) : attrs_(std::move(attrs)) {
  if (attrs_.empty()) raise(Errc::EmptySchema, "schema needs at least one attribute");
  std::unordered_set<std::string> names;
  offsets_.reserve(attrs_.size());
  uint64_t dim = 0;
  for (const Attribute& a : attrs_) {
    if (a.name.empty()) raise(Errc::EmptySchema, "attribute with empty name");
    if (!names.insert(a.name).second)
      raise(Errc::EmptySchema, "duplicate attribute name: " + a.name);
    if (a.continuous) {
      if (a.bounds.empty())
        raise(Errc::EmptySchema, "continuous attribute needs boundaries: " + a.name);
      for (size_t i = 1; i < a.bounds.size(); ++i)
        if (!(a.bounds[i - 1] < a.bounds[i]))
          raise(Errc::EmptySchema, "boundaries must be strictly increasing: " + a.name);
    } else {
      if (a.values.empty())
        raise(Errc::EmptySchema, "categorical attribute needs values: " + a.name);
      std::unordered_set<std::string> vals(a.values.begin(), a.values.end());
      if (vals.size() != a.values.size())
        raise(Errc::EmptySchema, "duplicate categorical value in " + a.name);
    }
    offsets_.push_back(static_cast<uint32_t>(dim));
    dim += a.cardinality();
  }
  if (dim > (uint64_t(1) << 31)) raise(Errc::EmptySchema, "one-hot dimension too large");
  dim_ = static_cast<uint32_t>(dim);
}

Schema Schema::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(Errc::MalformedRow, std::string("schema JSON parse error: ") + e.what());
  }
  if (!j.contains("attributes") || !j["attributes"].is_array())
    raise(Errc::EmptySchema, "schema JSON needs an 'attributes' array");
  std::vector<Attribute> attrs;
  for (const auto& ja : j["attributes"]) {
    Attribute a;
    a.name = ja.value("name", std::string());
    if (ja.contains("values")) {
      a.continuous = false;
      for (const auto& v : ja["values"]) a.values.push_back(v.get<std::string>());
    } else if (ja.contains("bounds")) {
      a.continuous = true;
      for (const auto& b : ja["bounds"]) a.bounds.push_back(b.get<double>());
    } else {
      raise(Errc::EmptySchema, "attribute needs 'values' or 'bounds': " + a.name);
    }
    attrs.push_back(std::move(a));
  }
  return Schema(std::move(attrs));
}

Schema Schema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoFailure, "cannot open schema file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string Schema::to_json_text() const {
  nlohmann::ordered_json j;
  j["attributes"] = nlohmann::ordered_json::array();
  for (const Attribute& a : attrs_) {
    nlohmann::ordered_json ja;
    ja["name"] = a.name;
    if (a.continuous)
      ja["bounds"] = a.bounds;
    else
      ja["values"] = a.values;
    j["attributes"].push_back(std::move(ja));
  }
  return j.dump(2);
}

uint32_t Schema::value_index(size_t a, const std::string& cell) const {
  const Attribute& attr = attrs_[a];
  if (attr.continuous) {
    try {
      size_t pos = 0;
      double v = std::stod(cell, &pos);
      if (pos != cell.size()) throw std::invalid_argument(cell);
      return bucket_index(a, v);
    } catch (const std::exception&) {
      raise(Errc::MalformedRow, "non-numeric cell for continuous attribute " + attr.name +
                                    ": '" + cell + "'");
    }
  }
  for (uint32_t i = 0; i < attr.values.size(); ++i)
    if (attr.values[i] == cell) return i;
  raise(Errc::UnknownCategoricalValue,
        "unknown value '" + cell + "' for attribute " + attr.name);
}

uint32_t Schema::bucket_index(size_t a, double v) const {
  const Attribute& attr = attrs_[a];
  uint32_t b = 0;
  while (b < attr.bounds.size() && attr.bounds[b] <= v) ++b;
  return b;
}

std::string Schema::label(size_t a, uint32_t value) const {
  const Attribute& attr = attrs_[a];
  if (!attr.continuous) return attr.values[value];
  // Representative value strictly inside the bucket so the encoding round-trips.
  double rep;
  if (value == 0)
    rep = attr.bounds.front() - 1.0;
  else if (value == attr.bounds.size())
    rep = attr.bounds.back() + 1.0;
  else
    rep = 0.5 * (attr.bounds[value - 1] + attr.bounds[value]);
  std::ostringstream os;
  os << rep;
  return os.str();
}

GroupLayout GroupLayout::from_schema(const Schema& s) {
  GroupLayout g;
  g.dim = s.dim();
  g.offsets.reserve(s.attribute_count() + 1);
  for (size_t a = 0; a < s.attribute_count(); ++a) g.offsets.push_back(s.offset(a));
  g.offsets.push_back(s.dim());
  return g;
}

uint64_t GroupLayout::domain_size() const {
  uint64_t prod = 1;
  for (size_t g = 0; g < groups(); ++g) {
    uint64_t c = group_size(g);
    if (prod > (uint64_t(1) << 63) / c) return uint64_t(1) << 63;
    prod *= c;
  }
  return prod;
}

bool GroupLayout::valid_record(const uint64_t* row, uint32_t words) const {
  (void)words;
  for (size_t g = 0; g < groups(); ++g) {
    uint32_t lo = offsets[g], hi = offsets[g + 1];
    uint32_t count = 0;
    for (uint32_t b = lo; b < hi; ++b)
      count += (row[b >> 6] >> (b & 63)) & 1;
    if (count != 1) return false;
  }
  return true;
}

}  // namespace oegd
