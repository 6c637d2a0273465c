#include "dpl/data.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "dpl/error.hpp"
#include "dpl/rng.hpp"

namespace dpl {

bool Instance::field_true(const std::string& name) const {
  auto it = fields.find(name);
  if (it == fields.end()) return false;
  const bool* b = std::get_if<bool>(&it->second);
  return b && *b;
}

std::optional<std::string> Instance::key_of(const std::string& name) const {
  auto it = fields.find(name);
  if (it == fields.end()) return std::nullopt;
  const std::string* s = std::get_if<std::string>(&it->second);
  if (!s) return std::nullopt;
  return *s;
}

void Dataset::reindex() {
  groups.clear();
  pairs.clear();
  std::map<std::string, int> index_of;
  for (int i = 0; i < size(); ++i) index_of[instances[i].id] = i;

  for (const auto& [fname, ftype] : schema.fields) {
    if (ftype == FieldType::key) {
      for (int i = 0; i < size(); ++i) {
        auto key = instances[i].key_of(fname);
        if (key) groups[fname][*key].push_back(i);
      }
    } else if (ftype == FieldType::pairs) {
      std::set<std::pair<int, int>> seen;
      for (int i = 0; i < size(); ++i) {
        auto it = instances[i].fields.find(fname);
        if (it == instances[i].fields.end()) continue;
        const auto* ids = std::get_if<std::vector<std::string>>(&it->second);
        if (!ids) continue;
        for (const auto& other : *ids) {
          auto oit = index_of.find(other);
          if (oit == index_of.end())
            throw ConfigError(strfmt("instance %s: pairs field '%s' references unknown id '%s'",
                                     instances[i].id.c_str(), fname.c_str(), other.c_str()));
          int j = oit->second;
          if (j == i)
            throw ConfigError(strfmt("instance %s: pairs field '%s' links the instance to itself",
                                     instances[i].id.c_str(), fname.c_str()));
          seen.insert({std::min(i, j), std::max(i, j)});
        }
      }
      pairs[fname].assign(seen.begin(), seen.end());
    }
  }
}

namespace {

Schema parse_header(const json& h) {
  Schema schema;
  if (!h.is_object() || !h.contains("d") || !h.contains("fields"))
    throw ConfigError("header must be an object with \"d\" and \"fields\"");
  if (!h["d"].is_number_integer() || h["d"].get<int>() < 0)
    throw ConfigError("header: \"d\" must be a non-negative integer");
  schema.feature_dim = h["d"].get<int>();
  if (!h["fields"].is_object()) throw ConfigError("header: \"fields\" must be an object");
  for (auto it = h["fields"].begin(); it != h["fields"].end(); ++it) {
    std::string t = it.value().is_string() ? it.value().get<std::string>() : "";
    if (t == "bool")
      schema.fields[it.key()] = FieldType::boolean;
    else if (t == "real")
      schema.fields[it.key()] = FieldType::real;
    else if (t == "key")
      schema.fields[it.key()] = FieldType::key;
    else if (t == "pairs")
      schema.fields[it.key()] = FieldType::pairs;
    else
      throw ConfigError(strfmt("header: field '%s' has unknown type '%s'", it.key().c_str(),
                               t.c_str()));
  }
  return schema;
}

FieldValue parse_field_value(const std::string& name, FieldType type, const json& v) {
  switch (type) {
    case FieldType::boolean:
      if (!v.is_boolean()) throw ConfigError(strfmt("field '%s' must be a bool", name.c_str()));
      return v.get<bool>();
    case FieldType::real:
      if (!v.is_number()) throw ConfigError(strfmt("field '%s' must be a number", name.c_str()));
      return v.get<double>();
    case FieldType::key:
      if (!v.is_string()) throw ConfigError(strfmt("field '%s' must be a string key", name.c_str()));
      return v.get<std::string>();
    case FieldType::pairs: {
      if (!v.is_array())
        throw ConfigError(strfmt("field '%s' must be an array of instance ids", name.c_str()));
      std::vector<std::string> ids;
      for (const auto& el : v) {
        if (!el.is_string())
          throw ConfigError(strfmt("field '%s': pair entries must be id strings", name.c_str()));
        ids.push_back(el.get<std::string>());
      }
      return ids;
    }
  }
  throw Error("unreachable");
}

json field_value_to_json(const FieldValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

}  // namespace

Dataset parse_dataset(const std::string& text) {
  Dataset ds;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool have_header = false;

  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string line = text.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
    start = nl == std::string::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError(strfmt("line %zu: malformed JSON: %s", line_no, e.what()));
    }

    try {
      if (!have_header) {
        ds.schema = parse_header(j);
        have_header = true;
        continue;
      }
      if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
        throw ConfigError("instance must be an object with a string \"id\"");
      Instance inst;
      inst.id = j["id"].get<std::string>();
      if (!ids.insert(inst.id).second) throw ConfigError("duplicate id: " + inst.id);

      if (j.contains("x")) {
        if (!j["x"].is_array()) throw ConfigError("\"x\" must be an array");
        for (const auto& el : j["x"]) {
          if (!el.is_number()) throw ConfigError("\"x\" entries must be numbers");
          inst.features.push_back(el.get<double>());
        }
      }
      if (static_cast<int>(inst.features.size()) != ds.schema.feature_dim)
        throw ConfigError(strfmt("feature dimension %zu, header declares %d",
                                 inst.features.size(), ds.schema.feature_dim));

      if (j.contains("fields")) {
        if (!j["fields"].is_object()) throw ConfigError("\"fields\" must be an object");
        for (auto it = j["fields"].begin(); it != j["fields"].end(); ++it) {
          auto type = ds.schema.type_of(it.key());
          if (!type) {
            inst.extra[it.key()] = it.value();  // undeclared: keep, ignore
            continue;
          }
          inst.fields[it.key()] = parse_field_value(it.key(), *type, it.value());
        }
      }
      if (j.contains("gold")) {
        if (!j["gold"].is_number_integer() ||
            (j["gold"].get<int>() != 0 && j["gold"].get<int>() != 1))
          throw ConfigError("\"gold\" must be 0 or 1");
        inst.gold = j["gold"].get<int>();
      }
      ds.instances.push_back(std::move(inst));
    } catch (const ConfigError& e) {
      throw ConfigError(strfmt("line %zu: %s", line_no, e.what()));
    }
  }
  if (!have_header) throw ConfigError("dataset is empty: missing header line");
  ds.reindex();
  return ds;
}

Dataset load_dataset(const std::string& path) {
  try {
    return parse_dataset(read_text_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string serialize_dataset(const Dataset& ds, bool include_gold) {
  json fields = json::object();
  for (const auto& [name, type] : ds.schema.fields) fields[name] = field_type_name(type);
  json header = {{"d", ds.schema.feature_dim}, {"fields", fields}};

  std::string out = canonical_dump(header) + "\n";
  for (const auto& inst : ds.instances) {
    json f = inst.extra.is_object() ? inst.extra : json::object();
    for (const auto& [name, value] : inst.fields) f[name] = field_value_to_json(value);
    json row = {{"id", inst.id}, {"x", inst.features}, {"fields", f}};
    if (include_gold && inst.gold) row["gold"] = *inst.gold;
    out += canonical_dump(row) + "\n";
  }
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double fraction,
                                          std::uint64_t seed) {
  if (ds.instances.empty()) throw ConfigError("split: dataset is empty");
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ConfigError("split: fraction must be in (0, 1)");

  const int n = ds.size();
  // Union instances linked by any group or pair so no linked unit is divided.
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };

  for (const auto& [fname, keys] : ds.groups)
    for (const auto& [key, members] : keys)
      for (std::size_t k = 1; k < members.size(); ++k) unite(members[0], members[k]);
  for (const auto& [fname, ps] : ds.pairs)
    for (const auto& [a, b] : ps) unite(a, b);

  std::map<int, std::vector<int>> components;
  for (int i = 0; i < n; ++i) components[find(i)].push_back(i);
  std::vector<std::vector<int>> comps;
  comps.reserve(components.size());
  for (auto& [root, members] : components) comps.push_back(std::move(members));

  Rng rng(derive_seed(seed, seed_stream::kSplit));
  rng.shuffle(comps);

  const int target = static_cast<int>(std::lround(fraction * n));
  std::vector<bool> in_first(n, false);
  int assigned = 0;
  for (const auto& comp : comps) {
    if (assigned < target) {
      for (int i : comp) in_first[i] = true;
      assigned += static_cast<int>(comp.size());
    }
  }

  Dataset a, b;
  a.schema = ds.schema;
  b.schema = ds.schema;
  for (int i = 0; i < n; ++i) (in_first[i] ? a : b).instances.push_back(ds.instances[i]);
  a.reindex();
  b.reindex();
  return {std::move(a), std::move(b)};
}

}  // namespace dpl
