#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dpl/data.hpp"
#include "dpl/json_io.hpp"
#include "dpl/logic.hpp"

namespace dpl {

// Log-penalty standing in for -infinity on hard-constraint violations.
// Keeps every message finite; indistinguishable from a constraint in double
// arithmetic.
constexpr double kHardPenalty = -1e30;

// Resolved factor weight: soft factors add `value` to satisfying
// configurations, hard factors add kHardPenalty to violating ones.
struct FactorWeight {
  bool hard = false;
  double value = 0.0;

  double log_potential(bool satisfied) const {
    if (hard) return satisfied ? 0.0 : kHardPenalty;
    return satisfied ? value : 0.0;
  }
};

enum class FactorKind { singleton_vote, at_least_one, agree, predictor_prior };

struct Factor {
  FactorKind kind;
  std::vector<int> vars;
  bool positive = true;               // vote target: true -> label 1
  FactorWeight weight;                // unused for predictor_prior
  std::array<double, 2> log_prior{};  // predictor_prior only: {logp0, logp1}
  int rule_index = -1;                // -1 for predictor priors
  std::string source;                 // rule name or "predictor"

  int arity() const { return static_cast<int>(vars.size()); }
  bool satisfied(const std::vector<int>& assignment) const;
  // Log-potential under a full variable assignment (0/1 per variable).
  double log_potential(const std::vector<int>& assignment) const;
};

// One binary latent label variable per instance; factors instantiate rule
// groundings plus optional per-instance predictor priors. Immutable; BP
// workspaces are allocated per inference call.
struct FactorGraph {
  int num_vars = 0;
  std::vector<Factor> factors;
  std::vector<std::vector<int>> var_factors;  // variable -> incident factor ids

  void rebuild_adjacency();
  // Re-reads learnable weight values from the program; structure unchanged.
  // Lets the weight-refinement loop re-evaluate without re-grounding.
  void refresh_weights(const Program& program);
};

// Per-instance classifier snapshot (log p0, log p1), normalized.
using PredictorLogProbs = std::vector<std::array<double, 2>>;

FactorGraph ground(const Program& program, const Dataset& ds,
                   const std::optional<PredictorLogProbs>& predictor = std::nullopt);

struct StatsReport {
  int vars = 0;
  int factors = 0;
  int singleton_vote = 0;
  int at_least_one = 0;
  int agree = 0;
  int predictor_prior = 0;
  int max_arity = 0;
  bool is_tree = true;

  json to_json() const;
};

StatsReport graph_stats(const FactorGraph& g);

}  // namespace dpl
