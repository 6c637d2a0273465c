#include "dpl/graph.hpp"

#include <cmath>
#include <numeric>

#include "dpl/error.hpp"

namespace dpl {

bool Factor::satisfied(const std::vector<int>& assignment) const {
  switch (kind) {
    case FactorKind::singleton_vote:
      return assignment[vars[0]] == (positive ? 1 : 0);
    case FactorKind::at_least_one:
      for (int v : vars)
        if (assignment[v] == 1) return true;
      return false;
    case FactorKind::agree:
      return assignment[vars[0]] == assignment[vars[1]];
    case FactorKind::predictor_prior:
      return true;
  }
  return true;
}

double Factor::log_potential(const std::vector<int>& assignment) const {
  if (kind == FactorKind::predictor_prior) return log_prior[assignment[vars[0]]];
  return weight.log_potential(satisfied(assignment));
}

void FactorGraph::rebuild_adjacency() {
  var_factors.assign(num_vars, {});
  for (std::size_t f = 0; f < factors.size(); ++f)
    for (int v : factors[f].vars) {
      if (v < 0 || v >= num_vars) throw Error("factor references out-of-range variable");
      var_factors[v].push_back(static_cast<int>(f));
    }
}

namespace {

FactorWeight resolve(const Weight& w) {
  switch (w.kind) {
    case Weight::Kind::fixed:
      return {false, w.init};
    case Weight::Kind::learnable:
      return {false, w.current};
    case Weight::Kind::hard:
      return {true, 0.0};
  }
  return {false, 0.0};
}

}  // namespace

void FactorGraph::refresh_weights(const Program& program) {
  for (Factor& f : factors) {
    if (f.rule_index < 0) continue;
    if (!program.rules[f.rule_index].weight.is_learnable()) continue;
    f.weight = resolve(program.rules[f.rule_index].weight);
  }
}

FactorGraph ground(const Program& program, const Dataset& ds,
                   const std::optional<PredictorLogProbs>& predictor) {
  FactorGraph g;
  g.num_vars = ds.size();

  for (std::size_t r = 0; r < program.rules.size(); ++r) {
    const Rule& rule = program.rules[r];
    FactorWeight w = resolve(rule.weight);
    if (!w.hard && !std::isfinite(w.value))
      throw Error("rule " + rule.name + ": non-finite weight");

    if (const Vote* vote = std::get_if<Vote>(&rule.body)) {
      for (int i = 0; i < ds.size(); ++i) {
        if (!ds.instances[i].field_true(vote->field)) continue;
        Factor f;
        f.kind = FactorKind::singleton_vote;
        f.vars = {i};
        f.positive = vote->positive;
        f.weight = w;
        f.rule_index = static_cast<int>(r);
        f.source = rule.name;
        g.factors.push_back(std::move(f));
      }
    } else if (const AtLeastOne* alo = std::get_if<AtLeastOne>(&rule.body)) {
      auto git = ds.groups.find(alo->field);
      if (git == ds.groups.end()) continue;
      for (const auto& [key, members] : git->second) {
        Factor f;
        f.rule_index = static_cast<int>(r);
        f.source = rule.name;
        f.weight = w;
        if (members.size() == 1) {
          // A one-member group degenerates to a positive vote with the same
          // weight; identical distribution, simpler messages.
          f.kind = FactorKind::singleton_vote;
          f.positive = true;
          f.vars = {members[0]};
        } else {
          f.kind = FactorKind::at_least_one;
          f.vars = members;
        }
        g.factors.push_back(std::move(f));
      }
    } else if (const Agree* agree = std::get_if<Agree>(&rule.body)) {
      auto pit = ds.pairs.find(agree->field);
      if (pit == ds.pairs.end()) continue;
      for (const auto& [a, b] : pit->second) {
        Factor f;
        f.kind = FactorKind::agree;
        f.vars = {a, b};
        f.weight = w;
        f.rule_index = static_cast<int>(r);
        f.source = rule.name;
        g.factors.push_back(std::move(f));
      }
    }
  }

  if (predictor) {
    if (static_cast<int>(predictor->size()) != ds.size())
      throw Error(strfmt("predictor log-probs cover %zu instances, dataset has %d",
                         predictor->size(), ds.size()));
    for (int i = 0; i < ds.size(); ++i) {
      const auto& lp = (*predictor)[i];
      double mass = std::exp(lp[0]) + std::exp(lp[1]);
      if (!(std::abs(mass - 1.0) <= 1e-6))
        throw Error(strfmt("predictor log-probs for instance %d are not normalized", i));
      Factor f;
      f.kind = FactorKind::predictor_prior;
      f.vars = {i};
      f.log_prior = lp;
      f.source = "predictor";
      g.factors.push_back(std::move(f));
    }
  }

  g.rebuild_adjacency();
  return g;
}

StatsReport graph_stats(const FactorGraph& g) {
  StatsReport s;
  s.vars = g.num_vars;
  s.factors = static_cast<int>(g.factors.size());

  // Union-find over the bipartite incidence graph; a repeated union within
  // one component means a cycle.
  int total = g.num_vars + s.factors;
  std::vector<int> parent(total);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  for (int fi = 0; fi < s.factors; ++fi) {
    const Factor& f = g.factors[fi];
    switch (f.kind) {
      case FactorKind::singleton_vote: ++s.singleton_vote; break;
      case FactorKind::at_least_one: ++s.at_least_one; break;
      case FactorKind::agree: ++s.agree; break;
      case FactorKind::predictor_prior: ++s.predictor_prior; break;
    }
    s.max_arity = std::max(s.max_arity, f.arity());
    if (f.arity() == 0) throw Error("zero-arity factor");
    int fnode = g.num_vars + fi;
    for (int v : f.vars) {
      int a = find(fnode), b = find(v);
      if (a == b) {
        s.is_tree = false;
      } else {
        parent[a] = b;
      }
    }
  }
  return s;
}

json StatsReport::to_json() const {
  return json{{"vars", vars},
              {"factors", factors},
              {"by_kind",
               {{"singleton_vote", singleton_vote},
                {"at_least_one", at_least_one},
                {"agree", agree},
                {"predictor_prior", predictor_prior}}},
              {"max_arity", max_arity},
              {"is_tree", is_tree}};
}

}  // namespace dpl
