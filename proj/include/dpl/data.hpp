#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dpl/json_io.hpp"
#include "dpl/logic.hpp"

namespace dpl {

// bool for vote fields, double for reals, string for group keys,
// vector<string> for pairs fields (ids of linked instances).
using FieldValue = std::variant<bool, double, std::string, std::vector<std::string>>;

struct Instance {
  std::string id;
  std::vector<double> features;
  std::map<std::string, FieldValue> fields;
  std::optional<int> gold;  // evaluation only; training never reads it
  json extra;               // undeclared fields, preserved verbatim

  bool field_true(const std::string& name) const;
  std::optional<std::string> key_of(const std::string& name) const;
};

struct Dataset {
  Schema schema;
  std::vector<Instance> instances;
  // key field -> key value -> instance indices (in file order)
  std::map<std::string, std::map<std::string, std::vector<int>>> groups;
  // pairs field -> normalized (i < j), deduplicated index pairs
  std::map<std::string, std::vector<std::pair<int, int>>> pairs;

  int size() const { return static_cast<int>(instances.size()); }

  // Rebuilds groups/pairs from the instances. Reports the offending
  // instance id on dangling or self pair references.
  void reindex();
};

// JSONL: header {"d": int, "fields": {name: "bool"|"real"|"key"|"pairs"}},
// then one instance object per line:
// {"id": str, "x": [real...], "fields": {...}, "gold": 0|1?}.
Dataset parse_dataset(const std::string& text);
Dataset load_dataset(const std::string& path);
std::string serialize_dataset(const Dataset& ds, bool include_gold = true);

// Deterministic, group-respecting split: instances connected through any
// group or pair stay in the same part. Returns (~fraction, rest).
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double fraction,
                                          std::uint64_t seed);

}  // namespace dpl
