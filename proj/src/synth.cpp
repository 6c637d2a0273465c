#include "dpl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dpl/error.hpp"
#include "dpl/rng.hpp"

namespace dpl {

SynthSpec SynthSpec::from_json(const json& j) {
  SynthSpec s;
  s.n = j.at("n").get<int>();
  s.d = j.at("d").get<int>();
  if (j.contains("concept")) {
    const json& c = j["concept"];
    std::string kind = c.value("kind", "linear");
    if (kind == "linear")
      s.concept_spec.kind = ConceptSpec::Kind::linear;
    else if (kind == "xor2")
      s.concept_spec.kind = ConceptSpec::Kind::xor2;
    else
      throw ConfigError("synth spec: unknown concept kind '" + kind + "'");
    s.concept_spec.margin = c.value("margin", 0.0);
  }
  s.kb_coverage = j.value("kbCoverage", 0.5);
  s.kb_noise = j.value("kbNoise", 0.0);
  if (j.contains("lfs")) {
    for (const json& lf : j["lfs"]) {
      LabelingFunctionSpec l;
      l.name = lf.at("name").get<std::string>();
      l.accuracy = lf.at("accuracy").get<double>();
      l.coverage = lf.at("coverage").get<double>();
      std::string pol = lf.value("polarity", "+");
      if (pol != "+" && pol != "-")
        throw ConfigError("synth spec: lf polarity must be '+' or '-'");
      l.positive = pol == "+";
      s.lfs.push_back(std::move(l));
    }
  }
  s.group_rate = j.value("groupRate", 0.0);
  s.mean_group_size = j.value("meanGroupSize", 3.0);
  s.seed = j.value("seed", 0ULL);
  return s;
}

json SynthSpec::to_json() const {
  json lf_list = json::array();
  for (const auto& lf : lfs)
    lf_list.push_back(json{{"name", lf.name},
                           {"accuracy", lf.accuracy},
                           {"coverage", lf.coverage},
                           {"polarity", lf.positive ? "+" : "-"}});
  return json{{"n", n},
              {"d", d},
              {"concept",
               {{"kind", concept_spec.kind == ConceptSpec::Kind::linear ? "linear" : "xor2"},
                {"margin", concept_spec.margin}}},
              {"kbCoverage", kb_coverage},
              {"kbNoise", kb_noise},
              {"lfs", lf_list},
              {"groupRate", group_rate},
              {"meanGroupSize", mean_group_size},
              {"seed", seed}};
}

namespace {

void validate(const SynthSpec& s) {
  if (s.n < 0) throw ConfigError("synth spec: n must be >= 0");
  if (s.d < 1) throw ConfigError("synth spec: d must be >= 1");
  if (s.concept_spec.kind == ConceptSpec::Kind::xor2 && s.d < 2)
    throw ConfigError("synth spec: xor2 concept needs d >= 2");
  if (!(s.kb_coverage >= 0.0 && s.kb_coverage <= 1.0))
    throw ConfigError("synth spec: kbCoverage must be in [0, 1]");
  if (!(s.kb_noise >= 0.0 && s.kb_noise <= 1.0))
    throw ConfigError("synth spec: kbNoise must be in [0, 1]");
  for (const auto& lf : s.lfs) {
    if (!(lf.accuracy > 0.5 && lf.accuracy <= 1.0))
      throw ConfigError("synth spec: lf '" + lf.name + "' accuracy must be in (0.5, 1]");
    if (!(lf.coverage > 0.0 && lf.coverage <= 1.0))
      throw ConfigError("synth spec: lf '" + lf.name + "' coverage must be in (0, 1]");
  }
  if (!(s.group_rate >= 0.0 && s.group_rate <= 1.0))
    throw ConfigError("synth spec: groupRate must be in [0, 1]");
  if (!(s.mean_group_size >= 1.0))
    throw ConfigError("synth spec: meanGroupSize must be >= 1");
}

}  // namespace

Dataset generate(const SynthSpec& spec) {
  validate(spec);
  Rng rng(derive_seed(spec.seed, seed_stream::kSynth));

  Dataset ds;
  ds.schema.feature_dim = spec.d;
  ds.schema.fields["kb_match"] = FieldType::boolean;
  ds.schema.fields["kb_miss"] = FieldType::boolean;
  for (const auto& lf : spec.lfs) ds.schema.fields[lf.name] = FieldType::boolean;
  ds.schema.fields["group_id"] = FieldType::key;

  // Concept direction drawn before any instance so the stream layout is
  // stable under n changes.
  std::vector<double> w_star(spec.d);
  double norm = 0.0;
  for (double& w : w_star) {
    w = rng.gaussian();
    norm += w * w;
  }
  norm = std::sqrt(std::max(norm, 1e-12));
  for (double& w : w_star) w /= norm;

  for (int i = 0; i < spec.n; ++i) {
    Instance inst;
    inst.id = "i" + std::to_string(i);
    inst.features.resize(spec.d);
    for (double& x : inst.features) x = rng.gaussian();

    int gold;
    if (spec.concept_spec.kind == ConceptSpec::Kind::linear) {
      double s = std::inner_product(inst.features.begin(), inst.features.end(),
                                    w_star.begin(), 0.0);
      double sign = s >= 0.0 ? 1.0 : -1.0;
      if (std::abs(s) < spec.concept_spec.margin) {
        double shift = (spec.concept_spec.margin - std::abs(s)) * sign;
        for (int k = 0; k < spec.d; ++k) inst.features[k] += shift * w_star[k];
      }
      gold = s >= 0.0 ? 1 : 0;
    } else {
      gold = (inst.features[0] > 0.0) != (inst.features[1] > 0.0) ? 1 : 0;
    }
    inst.gold = gold;

    bool kb = rng.bernoulli(gold == 1 ? spec.kb_coverage : spec.kb_noise);
    inst.fields["kb_match"] = kb;
    inst.fields["kb_miss"] = !kb;

    for (const auto& lf : spec.lfs) {
      if (!rng.bernoulli(lf.coverage)) continue;  // abstain
      int implied = rng.bernoulli(lf.accuracy) ? gold : 1 - gold;
      bool fired = implied == (lf.positive ? 1 : 0);
      if (fired) inst.fields[lf.name] = true;
    }
    ds.instances.push_back(std::move(inst));
  }

  if (spec.group_rate > 0.0 && spec.n > 0) {
    std::vector<int> positives;
    for (int i = 0; i < spec.n; ++i)
      if (*ds.instances[i].gold == 1) positives.push_back(i);
    if (positives.empty())
      throw ConfigError("synth spec: groupRate > 0 but the sample has no positives");

    std::vector<int> pool(spec.n);
    std::iota(pool.begin(), pool.end(), 0);
    rng.shuffle(pool);
    rng.shuffle(positives);

    std::vector<bool> used(spec.n, false);
    const int target = static_cast<int>(std::lround(spec.group_rate * spec.n));
    std::size_t pos_cursor = 0, pool_cursor = 0;
    int assigned = 0, gid = 0;
    while (assigned < target) {
      while (pos_cursor < positives.size() && used[positives[pos_cursor]]) ++pos_cursor;
      if (pos_cursor >= positives.size()) break;
      int anchor = positives[pos_cursor++];
      used[anchor] = true;

      int size = 1 + rng.geometric(1.0 / spec.mean_group_size);
      size = std::min(size, 12);
      std::vector<int> members{anchor};
      while (static_cast<int>(members.size()) < size && pool_cursor < pool.size()) {
        int cand = pool[pool_cursor++];
        if (used[cand]) continue;
        used[cand] = true;
        members.push_back(cand);
      }
      std::string key = "g" + std::to_string(gid++);
      for (int m : members) ds.instances[m].fields["group_id"] = key;
      assigned += static_cast<int>(members.size());
    }
  }

  ds.reindex();
  return ds;
}

std::vector<int> baseline_labels(const Dataset& ds, const std::vector<std::string>& rule_fields) {
  for (const auto& name : rule_fields) {
    auto type = ds.schema.type_of(name);
    if (!type || *type != FieldType::boolean)
      throw ConfigError("baseline labels: no boolean field '" + name + "'");
  }
  std::vector<int> labels;
  labels.reserve(ds.instances.size());
  for (const Instance& inst : ds.instances) {
    int label = 0;
    for (const auto& name : rule_fields)
      if (inst.field_true(name)) {
        label = 1;
        break;
      }
    labels.push_back(label);
  }
  return labels;
}

}  // namespace dpl
