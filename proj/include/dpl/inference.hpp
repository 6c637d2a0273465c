#pragma once

#include <array>
#include <vector>

#include "dpl/graph.hpp"

namespace dpl {

enum class BpSchedule { synchronous };

struct BpOptions {
  int max_iterations = 50;
  double tolerance = 1e-6;
  double damping = 0.3;  // ignored on trees, where flooding is exact
  BpSchedule schedule = BpSchedule::synchronous;
};

// Posterior marginals plus the converged factor->variable messages, kept so
// bethe_objective and factor-belief expectations can be evaluated afterwards.
struct MarginalTable {
  std::vector<std::array<double, 2>> q;  // per variable (q0, q1), q0 + q1 = 1
  bool converged = false;
  int iterations = 0;
  double max_residual = 0.0;

  std::vector<std::array<double, 2>> factor_to_var;  // per edge, log domain
  std::vector<int> edge_offset;                      // per factor
  std::vector<int> edge_var;                         // per edge

  bool has_messages() const { return !edge_offset.empty() || factor_to_var.empty(); }
  double q1(int v) const { return q[v][1]; }
};

double logsumexp2(double a, double b);

// Synchronous (flooding) loopy BP with log-domain messages, damped updates,
// sup-norm residual convergence test. Exact on trees (damping is disabled
// there so messages settle to the fixed point in finitely many sweeps).
// Non-convergence is not an error: marginals at the cap are returned with
// converged = false.
MarginalTable loopy_bp(const FactorGraph& g, const BpOptions& opts = {});

// Outgoing messages of one at-least-one factor, O(n) total via
// prefix/suffix mass sums separating the all-zero configuration from the
// rest. `incoming` holds per-variable (log m(0), log m(1)); outgoing
// messages are normalized.
std::vector<std::array<double, 2>> at_least_one_messages(
    const std::vector<std::array<double, 2>>& incoming, FactorWeight w);

// Exact marginals by enumerating all 2^n assignments in the log domain.
// Test oracle; n <= 20.
MarginalTable brute_force_marginals(const FactorGraph& g);

// Exact log partition function by enumeration; n <= 20.
double brute_force_log_z(const FactorGraph& g);

// Bethe variational estimate of log Z from BP beliefs; exact on trees.
double bethe_objective(const FactorGraph& g, const MarginalTable& m);

// P(factor satisfied) under the BP factor belief. For predictor priors
// returns 1.
double factor_satisfaction(const FactorGraph& g, const MarginalTable& m, int factor_index);

// Energy, entropy and satisfaction probability of one factor belief
// b_f(x) proportional to exp(log potential + sum of incoming messages).
// At-least-one factors use a closed form linear in the arity.
struct FactorBeliefTerms {
  double energy = 0.0;
  double entropy = 0.0;
  double satisfied = 1.0;
};
FactorBeliefTerms factor_belief_terms(const Factor& f,
                                      const std::vector<std::array<double, 2>>& incoming);

// Read-only companion to a MarginalTable: reconstructs variable->factor
// messages of the producing BP run from the retained message table alone.
class BeliefView {
 public:
  explicit BeliefView(const MarginalTable& m);
  int factor_count() const { return static_cast<int>(m_->edge_offset.size()); }
  std::vector<std::array<double, 2>> incoming(int factor_index) const;

 private:
  const MarginalTable* m_;
  std::vector<std::array<double, 2>> var_sums_;
};

}  // namespace dpl
