#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oegd/bits.hpp"
#include "oegd/error.hpp"

namespace oegd {

/// One column of the raw data.
///
/// Categorical attributes carry their value labels; continuous attributes
/// carry an ordered list of bucket boundaries b_0 < ... < b_{m-1} defining
/// m+1 buckets: values below b_0 fall in bucket 0, values in [b_{i-1}, b_i)
/// in bucket i, and values >= b_{m-1} in the final bucket.
struct Attribute {
  std::string name;
  bool continuous = false;
  std::vector<std::string> values;  // categorical labels
  std::vector<double> bounds;       // continuous bucket boundaries

  size_t cardinality() const { return continuous ? bounds.size() + 1 : values.size(); }
};

/// Attribute list plus the derived one-hot layout.
///
/// Attribute a owns the contiguous bit group [offset(a), offset(a)+cardinality(a));
/// a record is domain-valid iff it sets exactly one bit per group.  dim() is the
/// total one-hot dimension d.
class Schema {
 public:
  explicit Schema(std::vector<Attribute> attrs);

  static Schema from_json_text(const std::string& text);
  static Schema load(const std::string& path);
  std::string to_json_text() const;

  size_t attribute_count() const { return attrs_.size(); }
  const Attribute& attribute(size_t a) const { return attrs_[a]; }
  uint32_t offset(size_t a) const { return offsets_[a]; }
  uint32_t cardinality(size_t a) const { return static_cast<uint32_t>(attrs_[a].cardinality()); }
  uint32_t dim() const { return dim_; }

  /// Bit index for (attribute, value index).
  uint32_t bit(size_t a, uint32_t value) const { return offsets_[a] + value; }

  /// Value index for a raw categorical cell; throws UnknownCategoricalValue.
  uint32_t value_index(size_t a, const std::string& cell) const;

  /// Bucket index for a raw continuous cell: #{i : bounds[i] <= v}.
  uint32_t bucket_index(size_t a, double v) const;

  /// Human-readable cell for (attribute, value index); continuous buckets
  /// decode to a representative value inside the bucket.
  std::string label(size_t a, uint32_t value) const;

 private:
  std::vector<Attribute> attrs_;
  std::vector<uint32_t> offsets_;
  uint32_t dim_ = 0;
};

/// Group layout detached from labels; all the oracle needs to enumerate
/// domain-valid records.
struct GroupLayout {
  std::vector<uint32_t> offsets;  // offsets.size() = groups + 1, offsets.back() = dim
  uint32_t dim = 0;

  static GroupLayout from_schema(const Schema& s);
  size_t groups() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  uint32_t group_size(size_t g) const { return offsets[g + 1] - offsets[g]; }

  /// Product of group sizes, saturating at 2^63.
  uint64_t domain_size() const;

  /// True iff the record sets exactly one bit in every group.
  bool valid_record(const uint64_t* row, uint32_t words) const;
};

}  // namespace oegd
