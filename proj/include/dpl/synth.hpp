#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpl/data.hpp"
#include "dpl/json_io.hpp"

namespace dpl {

struct LabelingFunctionSpec {
  std::string name;
  double accuracy = 0.8;  // must be in (0.5, 1]
  double coverage = 0.3;  // must be in (0, 1]
  bool positive = true;   // fires toward label 1 (+) or label 0 (-)
};

struct ConceptSpec {
  enum class Kind { linear, xor2 };
  Kind kind = Kind::linear;
  double margin = 0.0;  // linear only: minimum |w*.x| enforced by shifting
};

// Emulates the indirect-supervision regime: a noisy KB-match flag (distant
// supervision), noisy labeling-function votes (data programming), and
// groups guaranteed to contain a gold positive (joint inference).
struct SynthSpec {
  int n = 0;
  int d = 2;
  ConceptSpec concept_spec;
  double kb_coverage = 0.5;  // fraction of positives flagged kb_match
  double kb_noise = 0.0;     // fraction of negatives falsely flagged
  std::vector<LabelingFunctionSpec> lfs;
  double group_rate = 0.0;       // fraction of instances placed in groups
  double mean_group_size = 3.0;  // >= 1
  std::uint64_t seed = 0;

  static SynthSpec from_json(const json& j);
  json to_json() const;
};

// Deterministic per seed. Emitted fields: kb_match / kb_miss (complement),
// one boolean field per labeling function (present only where it fires),
// group_id key field. Every emitted group contains at least one gold
// positive, so an at-least-one rule over group_id is sound by construction.
Dataset generate(const SynthSpec& spec);

// Distant-supervision-only baseline: label 1 iff any of the named boolean
// fields is true (with the single field kb_match this is the field
// verbatim).
std::vector<int> baseline_labels(const Dataset& ds, const std::vector<std::string>& rule_fields);

}  // namespace dpl
