#include <cmath>

#include "doctest.h"
#include "dpl/error.hpp"
#include "dpl/graph.hpp"
#include "dpl/rng.hpp"
#include "testutil.hpp"

using namespace dpl;

namespace {

Dataset vote_dataset(std::vector<bool> kb, std::vector<std::string> group = {}) {
  Dataset ds;
  ds.schema.feature_dim = 0;
  ds.schema.fields["kb_match"] = FieldType::boolean;
  ds.schema.fields["group_id"] = FieldType::key;
  for (std::size_t i = 0; i < kb.size(); ++i) {
    Instance inst;
    inst.id = "i" + std::to_string(i);
    inst.fields["kb_match"] = kb[i];
    if (i < group.size() && !group[i].empty()) inst.fields["group_id"] = group[i];
    ds.instances.push_back(inst);
  }
  ds.reindex();
  return ds;
}

Program program_of(const Dataset& ds, const std::string& text) {
  return validate_program(parse_program_text(text), ds.schema);
}

}  // namespace

TEST_CASE("one vote on a matching instance") {
  Dataset ds = vote_dataset({true});
  Program p = program_of(ds, "2.0: vote(+kb_match)\n");
  FactorGraph g = ground(p, ds);
  CHECK(g.num_vars == 1);
  REQUIRE(g.factors.size() == 1);
  CHECK(g.factors[0].kind == FactorKind::singleton_vote);
  CHECK(g.factors[0].weight.value == 2.0);
  CHECK(g.factors[0].source == "r1");
}

TEST_CASE("votes fire only where the field is true") {
  Dataset ds = vote_dataset({false, false});
  Program p = program_of(ds, "2.0: vote(+kb_match)\n");
  FactorGraph g = ground(p, ds);
  CHECK(g.num_vars == 2);
  CHECK(g.factors.empty());
}

TEST_CASE("hard at-least-one over one group") {
  Dataset ds = vote_dataset({false, false, false}, {"g", "g", "g"});
  Program p = program_of(ds, "hard: at_least_one(group_id)\n");
  FactorGraph g = ground(p, ds);
  REQUIRE(g.factors.size() == 1);
  CHECK(g.factors[0].kind == FactorKind::at_least_one);
  CHECK(g.factors[0].vars == std::vector<int>{0, 1, 2});
  CHECK(g.factors[0].weight.hard);

  StatsReport s = graph_stats(g);
  CHECK(s.vars == 3);
  CHECK(s.at_least_one == 1);
  CHECK(s.max_arity == 3);
  CHECK(s.is_tree);
  CHECK(s.to_json()["by_kind"]["at_least_one"] == 1);
}

TEST_CASE("singleton group degenerates to a positive vote") {
  Dataset ds = vote_dataset({false}, {"g"});
  Program p = program_of(ds, "1.5: at_least_one(group_id)\n");
  FactorGraph g = ground(p, ds);
  REQUIRE(g.factors.size() == 1);
  CHECK(g.factors[0].kind == FactorKind::singleton_vote);
  CHECK(g.factors[0].positive);
  CHECK(g.factors[0].weight.value == 1.5);
}

TEST_CASE("predictor priors append one factor per instance") {
  Dataset ds = vote_dataset({true, false});
  Program p = program_of(ds, "2.0: vote(+kb_match)\n");
  PredictorLogProbs lp = {{std::log(0.5), std::log(0.5)}, {std::log(0.2), std::log(0.8)}};

  FactorGraph with = ground(p, ds, lp);
  FactorGraph without = ground(p, ds);
  REQUIRE(with.factors.size() == without.factors.size() + 2);
  for (std::size_t i = 0; i < without.factors.size(); ++i) {
    CHECK(with.factors[i].kind == without.factors[i].kind);
    CHECK(with.factors[i].vars == without.factors[i].vars);
  }
  CHECK(with.factors.back().kind == FactorKind::predictor_prior);

  SUBCASE("length mismatch") {
    lp.pop_back();
    CHECK_THROWS_AS(ground(p, ds, lp), Error);
  }
  SUBCASE("non-normalized") {
    lp[0] = {std::log(0.5), std::log(0.6)};
    CHECK_THROWS_WITH_AS(ground(p, ds, lp), doctest::Contains("not normalized"), Error);
  }
}

TEST_CASE("grounding is deterministic and order-stable") {
  Dataset ds = vote_dataset({true, true, false}, {"g", "g", "h"});
  Program p = program_of(ds, "1.0: vote(+kb_match)\nhard: at_least_one(group_id)\n");
  FactorGraph a = ground(p, ds);
  FactorGraph b = ground(p, ds);
  REQUIRE(a.factors.size() == b.factors.size());
  for (std::size_t i = 0; i < a.factors.size(); ++i) {
    CHECK(a.factors[i].kind == b.factors[i].kind);
    CHECK(a.factors[i].vars == b.factors[i].vars);
    CHECK(a.factors[i].rule_index == b.factors[i].rule_index);
  }
}

TEST_CASE("vote factor count equals field-true count per rule") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 1 + static_cast<int>(rng.below(30));
    std::vector<bool> kb(n);
    int expected = 0;
    for (int i = 0; i < n; ++i) {
      kb[i] = rng.bernoulli(0.4);
      if (kb[i]) ++expected;
    }
    Dataset ds = vote_dataset(kb);
    Program p = program_of(ds, "1.0: vote(+kb_match)\nlearn(0.5): vote(-kb_match)\n");
    FactorGraph g = ground(p, ds);
    CHECK(static_cast<int>(g.factors.size()) == 2 * expected);
  }
}

TEST_CASE("empty dataset grounds to an empty graph") {
  Dataset ds = vote_dataset({});
  Program p = program_of(ds, "1.0: vote(+kb_match)\n");
  StatsReport s = graph_stats(ground(p, ds));
  CHECK(s.vars == 0);
  CHECK(s.factors == 0);
}

TEST_CASE("cycle detection against edge-count oracle") {
  using namespace dpltest;
  // A forest iff edges = nodes - components; compare against union-find flag.
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    FactorGraph g =
        rng.bernoulli(0.5) ? random_tree_graph(rng, 8) : random_loopy_graph(rng, 8);
    StatsReport s = graph_stats(g);

    int edges = 0;
    for (const Factor& f : g.factors) edges += f.arity();
    int nodes = g.num_vars + static_cast<int>(g.factors.size());
    // Count components of the incidence graph.
    std::vector<int> comp(nodes, -1);
    int components = 0;
    for (int start = 0; start < nodes; ++start) {
      if (comp[start] >= 0) continue;
      std::vector<int> stack{start};
      comp[start] = components;
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        if (u < g.num_vars) {
          for (int fi : g.var_factors[u]) {
            int fnode = g.num_vars + fi;
            if (comp[fnode] < 0) {
              comp[fnode] = components;
              stack.push_back(fnode);
            }
          }
        } else {
          for (int v : g.factors[u - g.num_vars].vars)
            if (comp[v] < 0) {
              comp[v] = components;
              stack.push_back(v);
            }
        }
      }
      ++components;
    }
    CHECK(s.is_tree == (edges == nodes - components));
  }
}

TEST_CASE("hard weights use the finite penalty sentinel") {
  FactorWeight hard{true, 0.0};
  CHECK(hard.log_potential(true) == 0.0);
  CHECK(hard.log_potential(false) == kHardPenalty);
  CHECK(std::isfinite(hard.log_potential(false)));
}
