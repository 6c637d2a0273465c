#include "dpl/learning.hpp"

#include <algorithm>
#include <cmath>

#include "dpl/error.hpp"
#include "dpl/rng.hpp"

namespace dpl {

namespace {

constexpr double kWeightClamp = 20.0;

double clamp_weight(double w) { return std::clamp(w, -kWeightClamp, kWeightClamp); }

std::map<std::string, double> learnable_weight_map(const Program& program) {
  std::map<std::string, double> out;
  for (const Rule& r : program.rules)
    if (r.weight.is_learnable()) out[r.name] = r.weight.current;
  return out;
}

}  // namespace

json EmTrace::to_json() const {
  json arr = json::array();
  for (const auto& rec : iterations) {
    json weights = json::object();
    for (const auto& [name, value] : rec.weight_values) weights[name] = value;
    json j{{"iteration", rec.iteration},
           {"qSummary", {{"meanQ1", rec.q_mean}, {"minQ1", rec.q_min}, {"maxQ1", rec.q_max}}},
           {"distillLoss", rec.distill_loss},
           {"weightValues", weights},
           {"bpConverged", rec.bp_converged}};
    j["surrogateObjective"] =
        rec.surrogate_objective ? json(*rec.surrogate_objective) : json(nullptr);
    arr.push_back(std::move(j));
  }
  return json{{"iterations", arr}};
}

MarginalTable e_step(const Program& program, const Dataset& ds, const Classifier& c,
                     const BpOptions& bp) {
  FactorGraph g = ground(program, ds, predict_log_probs(c, ds));
  return loopy_bp(g, bp);
}

namespace {

std::vector<int> learnable_slots(const Program& program,
                                 const std::vector<std::size_t>& learnable) {
  std::vector<int> slot_of_rule(program.rules.size(), -1);
  for (std::size_t k = 0; k < learnable.size(); ++k)
    slot_of_rule[learnable[k]] = static_cast<int>(k);
  return slot_of_rule;
}

// True when q's retained message table starts with the edges of g, i.e. q
// came from BP on g or on g extended by per-instance priors.
bool beliefs_cover_graph(const FactorGraph& g, const MarginalTable& q) {
  if (q.edge_offset.size() < g.factors.size()) return false;
  int e = 0;
  for (std::size_t fi = 0; fi < g.factors.size(); ++fi) {
    if (q.edge_offset[fi] != e) return false;
    for (int v : g.factors[fi].vars) {
      if (e >= static_cast<int>(q.edge_var.size()) || q.edge_var[e] != v) return false;
      ++e;
    }
  }
  return true;
}

double product_form_satisfaction(const Factor& f, const MarginalTable& q) {
  switch (f.kind) {
    case FactorKind::singleton_vote:
      return q.q[f.vars[0]][f.positive ? 1 : 0];
    case FactorKind::at_least_one: {
      double all_zero = 1.0;
      for (int v : f.vars) all_zero *= q.q[v][0];
      return 1.0 - all_zero;
    }
    case FactorKind::agree:
      return q.q[f.vars[0]][0] * q.q[f.vars[1]][0] + q.q[f.vars[0]][1] * q.q[f.vars[1]][1];
    case FactorKind::predictor_prior:
      return 1.0;
  }
  return 1.0;
}

}  // namespace

std::vector<double> expected_counts_under_q(const Program& program, const Dataset& ds,
                                            const MarginalTable& q) {
  FactorGraph g = ground(program, ds);
  if (static_cast<int>(q.q.size()) != g.num_vars)
    throw Error("expected counts: q does not cover the dataset");
  auto learnable = program.learnable_indices();
  auto slot_of_rule = learnable_slots(program, learnable);

  const bool use_beliefs = beliefs_cover_graph(g, q);
  std::optional<BeliefView> view;
  if (use_beliefs) view.emplace(q);

  std::vector<double> counts(learnable.size(), 0.0);
  for (std::size_t fi = 0; fi < g.factors.size(); ++fi) {
    const Factor& f = g.factors[fi];
    if (f.rule_index < 0 || slot_of_rule[f.rule_index] < 0) continue;
    double e;
    if (f.kind == FactorKind::singleton_vote || !use_beliefs)
      e = product_form_satisfaction(f, q);
    else
      e = factor_belief_terms(f, view->incoming(static_cast<int>(fi))).satisfied;
    counts[slot_of_rule[f.rule_index]] += e;
  }
  return counts;
}

namespace {

// Objective/gradient on an already-grounded supervision graph whose weights
// reflect the program's current values.
WeightObjective objective_on_graph(const Program& program, const FactorGraph& g,
                                   const std::vector<double>& eq, const BpOptions& bp);

}  // namespace

WeightObjective weight_objective(const Program& program, const Dataset& ds,
                                 const std::vector<double>& eq, const BpOptions& bp) {
  FactorGraph g = ground(program, ds);
  return objective_on_graph(program, g, eq, bp);
}

namespace {

WeightObjective objective_on_graph(const Program& program, const FactorGraph& g,
                                   const std::vector<double>& eq, const BpOptions& bp) {
  MarginalTable beliefs = loopy_bp(g, bp);
  BeliefView view(beliefs);

  auto learnable = program.learnable_indices();
  if (eq.size() != learnable.size())
    throw Error("weight objective: expectation vector does not match learnable rules");
  auto slot_of_rule = learnable_slots(program, learnable);

  std::vector<double> ep(learnable.size(), 0.0);
  for (std::size_t fi = 0; fi < g.factors.size(); ++fi) {
    const Factor& f = g.factors[fi];
    if (f.rule_index < 0 || slot_of_rule[f.rule_index] < 0) continue;
    double e = f.kind == FactorKind::singleton_vote
                   ? beliefs.q[f.vars[0]][f.positive ? 1 : 0]
                   : factor_belief_terms(f, view.incoming(static_cast<int>(fi))).satisfied;
    ep[slot_of_rule[f.rule_index]] += e;
  }

  WeightObjective out;
  out.gradient.resize(learnable.size());
  double weighted = 0.0;
  for (std::size_t k = 0; k < learnable.size(); ++k) {
    out.gradient[k] = eq[k] - ep[k];
    weighted += program.rules[learnable[k]].weight.current * eq[k];
  }
  out.objective = weighted - bethe_objective(g, beliefs);
  return out;
}

}  // namespace

WeightObjective weight_objective(const Program& program, const Dataset& ds,
                                 const MarginalTable& q, const BpOptions& bp) {
  return weight_objective(program, ds, expected_counts_under_q(program, ds, q), bp);
}

MStepResult m_step_weights(Program& program, const Dataset& ds, const MarginalTable& q,
                           [[maybe_unused]] const Classifier& c, const EmOptions& opts) {
  MStepResult result;
  auto learnable = program.learnable_indices();
  result.weights = learnable_weight_map(program);
  if (learnable.empty() || opts.weight_steps <= 0) return result;

  auto get_weights = [&]() {
    std::vector<double> w(learnable.size());
    for (std::size_t k = 0; k < learnable.size(); ++k)
      w[k] = program.rules[learnable[k]].weight.current;
    return w;
  };
  auto set_weights = [&](const std::vector<double>& w) {
    for (std::size_t k = 0; k < learnable.size(); ++k)
      program.rules[learnable[k]].weight.current = clamp_weight(w[k]);
  };

  // Expectations under q are fixed targets for the whole M-step; only the
  // model side E_p moves with the weights.
  std::vector<double> eq = expected_counts_under_q(program, ds, q);
  FactorGraph g = ground(program, ds);
  auto evaluate_current = [&]() {
    g.refresh_weights(program);
    return objective_on_graph(program, g, eq, opts.bp);
  };
  WeightObjective cur = evaluate_current();
  result.objectives.push_back(cur.objective);

  for (int step = 0; step < opts.weight_steps; ++step) {
    std::vector<double> base = get_weights();
    double lr = opts.weight_learning_rate;
    bool accepted = false;
    for (int attempt = 0; attempt <= 10; ++attempt) {
      std::vector<double> proposal(base.size());
      for (std::size_t k = 0; k < base.size(); ++k)
        proposal[k] = base[k] + lr * cur.gradient[k];
      set_weights(proposal);
      WeightObjective next = evaluate_current();
      if (!opts.line_search || next.objective >= cur.objective) {
        cur = next;
        accepted = true;
        break;
      }
      lr *= 0.5;
    }
    if (!accepted) {
      set_weights(base);
      result.steps_skipped = opts.weight_steps - step;
      break;
    }
    ++result.steps_accepted;
    result.objectives.push_back(cur.objective);
  }

  result.weights = learnable_weight_map(program);
  return result;
}

FitResult fit(const Program& program, const Dataset& ds, const EmOptions& opts,
              std::uint64_t seed) {
  if (opts.em_iterations < 1) throw Error("fit: em_iterations must be >= 1");
  if (opts.weight_steps < 0) throw Error("fit: weight_steps must be >= 0");

  FitResult result;
  result.program = program;
  result.classifier = opts.classifier.kind == Classifier::Kind::logreg
                          ? Classifier::logreg(program.schema.feature_dim)
                          : Classifier::mlp1(program.schema.feature_dim,
                                             opts.classifier.hidden, seed);

  for (int it = 1; it <= opts.em_iterations; ++it) {
    MarginalTable q = e_step(result.program, ds, result.classifier, opts.bp);

    Classifier estep_classifier = result.classifier;
    TrainOptions topts = opts.train;
    topts.seed = derive_seed(seed, 1000 + static_cast<std::uint64_t>(it));
    TrainResult trained = train_distill(std::move(result.classifier), ds, q, topts);
    result.classifier = std::move(trained.classifier);

    MStepResult mres = m_step_weights(result.program, ds, q, estep_classifier, opts);

    EmIterationRecord rec;
    rec.iteration = it;
    if (!q.q.empty()) {
      double sum = 0.0, lo = 1.0, hi = 0.0;
      for (const auto& pair : q.q) {
        sum += pair[1];
        lo = std::min(lo, pair[1]);
        hi = std::max(hi, pair[1]);
      }
      rec.q_mean = sum / static_cast<double>(q.q.size());
      rec.q_min = lo;
      rec.q_max = hi;
    }
    rec.distill_loss = trained.final_loss;
    rec.weight_values = mres.weights;
    if (!mres.objectives.empty()) rec.surrogate_objective = mres.objectives.back();
    rec.bp_converged = q.converged;
    result.trace.iterations.push_back(std::move(rec));
  }
  return result;
}

}  // namespace dpl
