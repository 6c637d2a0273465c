#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dpl {

// Weight of a supervision rule. Fixed and learnable weights are natural
// log-odds; a fixed weight w on a singleton gives posterior sigmoid(w) under
// a uniform prior. "hard" marks a constraint (infinite weight).
struct Weight {
  enum class Kind { fixed, learnable, hard };
  Kind kind = Kind::fixed;
  double init = 0.0;     // fixed value, or learnable initial value
  double current = 0.0;  // learnable running value; mirrors init otherwise

  static Weight fixed(double v) { return {Kind::fixed, v, v}; }
  static Weight learnable(double v) { return {Kind::learnable, v, v}; }
  static Weight hard() { return {Kind::hard, 0.0, 0.0}; }

  bool is_hard() const { return kind == Kind::hard; }
  bool is_learnable() const { return kind == Kind::learnable; }
};

// Per-instance virtual evidence: fires toward label 1 (positive polarity) or
// label 0 (negative polarity) on every instance whose boolean field is true.
struct Vote {
  std::string field;
  bool positive = true;
};

// High-order factor over all instances sharing a value of the key field:
// at least one of them carries label 1.
struct AtLeastOne {
  std::string field;
};

// Pairwise factor rewarding equal labels on instance pairs linked through
// the named pairs field.
struct Agree {
  std::string field;
};

using RuleBody = std::variant<Vote, AtLeastOne, Agree>;

struct Rule {
  std::string name;  // unique within a Program; empty until assigned
  Weight weight;
  RuleBody body;
  std::string tag;  // ablation tag (e.g. DS/DP/JI); empty = always active

  const std::string& field() const;
};

enum class FieldType { boolean, real, key, pairs };

const char* field_type_name(FieldType t);

// Declared instance fields with their types.
struct Schema {
  int feature_dim = 0;
  std::map<std::string, FieldType> fields;

  std::optional<FieldType> type_of(const std::string& name) const;
};

// A validated rule program: every field reference resolves against the
// schema and rule names are unique. Immutable after validation except for
// learnable weight current values, which the EM loop owns.
struct Program {
  std::vector<Rule> rules;
  Schema schema;

  std::vector<std::size_t> learnable_indices() const;
  // Rules whose tag is empty or contained in `tags`.
  Program restricted_to_tags(const std::vector<std::string>& tags) const;
};

// Parses one rule line. Grammar:
//   rule   := weight ":" body
//   weight := REAL | "learn(" REAL ")" | "hard"
//   body   := "vote(" ("+"|"-") IDENT ")" | "at_least_one(" IDENT ")"
//           | "agree(" IDENT ")"
// Trailing "#" comments are ignored. Errors carry a column number.
Rule parse_rule(const std::string& text);

// Inverse of parse_rule; learnable weights render their init value, not the
// current one.
std::string render_rule(const Rule& rule);

// Parses a whole program file: one rule per line, '#' comments, blank lines.
// Two comment annotations are honored:
//   "# tag: X"  sets the ablation tag for all following rules,
//   "# name: n" names the next rule.
// Unnamed rules get r1, r2, ... by position. Errors carry line:column.
std::vector<Rule> parse_program_text(const std::string& text);

Program validate_program(std::vector<Rule> rules, Schema schema);

}  // namespace dpl
