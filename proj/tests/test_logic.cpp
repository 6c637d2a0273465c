#include <cmath>

#include "doctest.h"
#include "dpl/error.hpp"
#include "dpl/logic.hpp"
#include "dpl/rng.hpp"

using namespace dpl;

namespace {

bool same_rule(const Rule& a, const Rule& b) {
  if (a.weight.kind != b.weight.kind) return false;
  if (a.weight.kind != Weight::Kind::hard && a.weight.init != b.weight.init) return false;
  if (a.body.index() != b.body.index()) return false;
  if (a.field() != b.field()) return false;
  if (const Vote* va = std::get_if<Vote>(&a.body))
    return va->positive == std::get<Vote>(b.body).positive;
  return true;
}

Schema bool_schema(std::initializer_list<std::string> names) {
  Schema s;
  s.feature_dim = 0;
  for (const auto& n : names) s.fields[n] = FieldType::boolean;
  return s;
}

}  // namespace

TEST_CASE("parse fixed-weight vote") {
  Rule r = parse_rule("2.1972: vote(+kb_match)");
  CHECK(r.weight.kind == Weight::Kind::fixed);
  CHECK(r.weight.init == doctest::Approx(2.1972).epsilon(1e-15));
  const Vote& v = std::get<Vote>(r.body);
  CHECK(v.field == "kb_match");
  CHECK(v.positive);
}

TEST_CASE("parse learnable negative vote") {
  Rule r = parse_rule("learn(1.0): vote(-lf_table_noise)");
  CHECK(r.weight.kind == Weight::Kind::learnable);
  CHECK(r.weight.init == 1.0);
  CHECK(r.weight.current == 1.0);
  const Vote& v = std::get<Vote>(r.body);
  CHECK(v.field == "lf_table_noise");
  CHECK_FALSE(v.positive);
}

TEST_CASE("parse hard at-least-one") {
  Rule r = parse_rule("hard: at_least_one(group_id)");
  CHECK(r.weight.kind == Weight::Kind::hard);
  CHECK(std::get<AtLeastOne>(r.body).field == "group_id");
}

TEST_CASE("parse agree") {
  Rule r = parse_rule("0.5: agree(coref)");
  CHECK(std::get<Agree>(r.body).field == "coref");
}

TEST_CASE("render examples") {
  CHECK(render_rule(parse_rule("2.1972: vote(+kb_match)")) == "2.1972: vote(+kb_match)");
  CHECK(render_rule(parse_rule("hard: at_least_one(group_id)")) ==
        "hard: at_least_one(group_id)");
}

TEST_CASE("render uses init, not drifted current") {
  Rule r = parse_rule("learn(1.0): vote(+f)");
  r.weight.current = 1.7;
  CHECK(render_rule(r) == "learn(1): vote(+f)");
}

TEST_CASE("parse errors") {
  CHECK_THROWS_WITH_AS(parse_rule("soft: vote(+f)"), doctest::Contains("unknown weight token"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_rule("inf: vote(+f)"), doctest::Contains("non-finite"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_rule("1e999: vote(+f)"), doctest::Contains("non-finite"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_rule("1.0 vote(+f)"), doctest::Contains("col"), ConfigError);
  CHECK_THROWS_AS(parse_rule("1.0: vote(f)"), ConfigError);          // missing polarity
  CHECK_THROWS_AS(parse_rule("1.0: shout(+f)"), ConfigError);        // unknown body
  CHECK_THROWS_AS(parse_rule("1.0: vote(+f) extra"), ConfigError);   // trailing junk
  CHECK_THROWS_AS(parse_rule("learn(nan): vote(+f)"), ConfigError);  // non-finite init
}

TEST_CASE("parse/render identity over generated rules") {
  Rng rng(7);
  for (int i = 0; i < 300; ++i) {
    Rule r;
    switch (rng.below(3)) {
      case 0: r.weight = Weight::fixed(rng.uniform(-50.0, 50.0)); break;
      case 1: r.weight = Weight::learnable(rng.uniform(-5.0, 5.0)); break;
      default: r.weight = Weight::hard();
    }
    std::string field = "f_" + std::to_string(rng.below(1000));
    switch (rng.below(3)) {
      case 0: r.body = Vote{field, rng.bernoulli(0.5)}; break;
      case 1: r.body = AtLeastOne{field}; break;
      default: r.body = Agree{field};
    }
    Rule back = parse_rule(render_rule(r));
    CHECK(same_rule(r, back));
  }
}

TEST_CASE("program text: names, tags, line numbers") {
  std::string text =
      "# benchmark rules\n"
      "# tag: DS\n"
      "# name: ds\n"
      "2.0: vote(+kb_match)\n"
      "\n"
      "# tag: DP\n"
      "learn(1.5): vote(-lf_noise)\n"
      "# tag: JI\n"
      "hard: at_least_one(group_id)   # soundness guaranteed by generator\n";
  auto rules = parse_program_text(text);
  REQUIRE(rules.size() == 3);
  CHECK(rules[0].name == "ds");
  CHECK(rules[0].tag == "DS");
  CHECK(rules[1].name == "r2");
  CHECK(rules[1].tag == "DP");
  CHECK(rules[2].tag == "JI");
  CHECK(std::get<AtLeastOne>(rules[2].body).field == "group_id");

  CHECK_THROWS_WITH_AS(parse_program_text("1.0: vote(+a)\nbogus line\n"),
                       doctest::Contains("line 2"), ConfigError);
}

TEST_CASE("validate program") {
  Schema schema = bool_schema({"kb_match"});
  schema.fields["group_id"] = FieldType::key;

  SUBCASE("valid") {
    auto rules = parse_program_text("1.0: vote(+kb_match)\nhard: at_least_one(group_id)\n");
    Program p = validate_program(rules, schema);
    CHECK(p.rules.size() == 2);
    CHECK(p.learnable_indices().empty());
  }
  SUBCASE("unknown field") {
    auto rules = parse_program_text("1.0: vote(+missing_field)\n");
    CHECK_THROWS_WITH_AS(validate_program(rules, schema), doctest::Contains("unknown field"),
                         ConfigError);
  }
  SUBCASE("duplicate name") {
    auto rules = parse_program_text("1.0: vote(+kb_match)\n2.0: vote(-kb_match)\n");
    rules[0].name = "ds";
    rules[1].name = "ds";
    CHECK_THROWS_WITH_AS(validate_program(rules, schema), doctest::Contains("duplicate"),
                         ConfigError);
  }
  SUBCASE("type mismatch") {
    auto rules = parse_program_text("hard: at_least_one(kb_match)\n");
    CHECK_THROWS_WITH_AS(validate_program(rules, schema), doctest::Contains("type"),
                         ConfigError);
  }
}

TEST_CASE("tag restriction keeps untagged rules") {
  Schema schema = bool_schema({"a", "b"});
  auto rules = parse_program_text("1.0: vote(+a)\n# tag: DP\n1.0: vote(+b)\n");
  Program p = validate_program(rules, schema);
  Program ds_only = p.restricted_to_tags({"DS"});
  REQUIRE(ds_only.rules.size() == 1);
  CHECK(ds_only.rules[0].field() == "a");
  CHECK(p.restricted_to_tags({"DS", "DP"}).rules.size() == 2);
}
