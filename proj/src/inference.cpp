#include "dpl/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dpl/error.hpp"

namespace dpl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// A belief entry below this can only come from stacked hard penalties.
constexpr double kContradiction = -1e29;

double clamp_log(double v) { return std::max(v, kHardPenalty); }

// log(1 - e^x) for x <= 0, stable near both ends.
double log1m_exp(double x) {
  if (x >= 0.0) return kNegInf;
  if (x > -0.6931471805599453) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

std::array<double, 2> normalize_pair(std::array<double, 2> m) {
  double z = logsumexp2(m[0], m[1]);
  return {clamp_log(m[0] - z), clamp_log(m[1] - z)};
}

void check_options(const BpOptions& opts) {
  if (opts.max_iterations < 1) throw Error("bp: max_iterations must be >= 1");
  if (!(opts.tolerance > 0.0)) throw Error("bp: tolerance must be positive");
  if (!(opts.damping >= 0.0 && opts.damping < 1.0))
    throw Error("bp: damping must be in [0, 1)");
  if (opts.schedule != BpSchedule::synchronous) throw Error("bp: unsupported schedule");
}

struct EdgeIndex {
  std::vector<int> offset;                  // per factor
  std::vector<int> edge_var;                // per edge
  std::vector<std::vector<int>> var_edges;  // per variable
  int num_edges = 0;

  explicit EdgeIndex(const FactorGraph& g) {
    offset.reserve(g.factors.size());
    var_edges.assign(g.num_vars, {});
    for (const Factor& f : g.factors) {
      offset.push_back(num_edges);
      for (int v : f.vars) {
        edge_var.push_back(v);
        var_edges[v].push_back(num_edges);
        ++num_edges;
      }
    }
  }
};

// Messages from one factor given incoming variable->factor messages
// (in[0..arity)), written to out[0..arity).
void factor_messages(const Factor& f, const std::array<double, 2>* in,
                     std::array<double, 2>* out) {
  switch (f.kind) {
    case FactorKind::singleton_vote: {
      double w1 = f.weight.log_potential(f.positive);
      double w0 = f.weight.log_potential(!f.positive);
      out[0] = normalize_pair({w0, w1});
      break;
    }
    case FactorKind::predictor_prior:
      out[0] = normalize_pair(f.log_prior);
      break;
    case FactorKind::agree: {
      double ws = f.weight.log_potential(true);
      double wv = f.weight.log_potential(false);
      for (int slot = 0; slot < 2; ++slot) {
        const std::array<double, 2>& other = in[1 - slot];
        out[slot] = normalize_pair({logsumexp2(ws + other[0], wv + other[1]),
                                    logsumexp2(wv + other[0], ws + other[1])});
      }
      break;
    }
    case FactorKind::at_least_one: {
      std::vector<std::array<double, 2>> incoming(in, in + f.arity());
      auto msgs = at_least_one_messages(incoming, f.weight);
      std::copy(msgs.begin(), msgs.end(), out);
      break;
    }
  }
}

}  // namespace

double logsumexp2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

std::vector<std::array<double, 2>> at_least_one_messages(
    const std::vector<std::array<double, 2>>& incoming, FactorWeight w) {
  const int n = static_cast<int>(incoming.size());
  const double ws = w.log_potential(true);
  const double wv = w.log_potential(false);

  // Prefix/suffix sums of per-variable total mass and zero-state mass keep
  // the leave-one-out sums exact even when sentinel penalties dwarf the
  // other terms.
  std::vector<double> pre_all(n + 1, 0.0), suf_all(n + 1, 0.0);
  std::vector<double> pre_zero(n + 1, 0.0), suf_zero(n + 1, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = logsumexp2(incoming[i][0], incoming[i][1]);
    pre_all[i + 1] = pre_all[i] + s;
    pre_zero[i + 1] = pre_zero[i] + incoming[i][0];
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = logsumexp2(incoming[i][0], incoming[i][1]);
    suf_all[i] = suf_all[i + 1] + s;
    suf_zero[i] = suf_zero[i + 1] + incoming[i][0];
  }

  std::vector<std::array<double, 2>> out(n);
  for (int i = 0; i < n; ++i) {
    double rest_all = pre_all[i] + suf_all[i + 1];    // log mass of others, any state
    double rest_zero = pre_zero[i] + suf_zero[i + 1]; // log mass of others all-zero
    // x_i = 1: factor satisfied whatever the others do.
    double m1 = ws + rest_all;
    // x_i = 0: either the others are all zero (violation) or at least one
    // of them is one (satisfied).
    double sat0 = rest_all + log1m_exp(std::min(rest_zero - rest_all, 0.0));
    double m0 = logsumexp2(wv + rest_zero, ws + sat0);
    out[i] = normalize_pair({m0, m1});
  }
  return out;
}

MarginalTable loopy_bp(const FactorGraph& g, const BpOptions& opts) {
  check_options(opts);
  if (g.num_vars == 0) throw Error("bp: empty graph");

  const EdgeIndex edges(g);
  const bool tree = graph_stats(g).is_tree;
  // Flooding on a tree reaches the exact fixed point in at most diameter
  // sweeps, after which the residual is exactly zero; running to that point
  // (undamped) makes tree marginals machine-exact instead of
  // tolerance-exact.
  const double damping = tree ? 0.0 : opts.damping;
  const double stop_tolerance = tree ? 0.0 : opts.tolerance;
  const int num_factors = static_cast<int>(g.factors.size());

  std::vector<std::array<double, 2>> f2v(edges.num_edges, {0.0, 0.0});
  std::vector<std::array<double, 2>> v2f(edges.num_edges, {0.0, 0.0});
  std::vector<std::array<double, 2>> fresh(edges.num_edges, {0.0, 0.0});

  MarginalTable result;
  result.iterations = 0;
  double residual = 0.0;

  for (int iter = 1; iter <= opts.max_iterations; ++iter) {
    // Variable -> factor: leave-one-out sums of the previous sweep.
    for (int v = 0; v < g.num_vars; ++v) {
      double s0 = 0.0, s1 = 0.0;
      for (int e : edges.var_edges[v]) {
        s0 += f2v[e][0];
        s1 += f2v[e][1];
      }
      for (int e : edges.var_edges[v])
        v2f[e] = normalize_pair({s0 - f2v[e][0], s1 - f2v[e][1]});
    }

    // Factor -> variable, damped.
    residual = 0.0;
    for (int fi = 0; fi < num_factors; ++fi) {
      int off = edges.offset[fi];
      factor_messages(g.factors[fi], v2f.data() + off, fresh.data() + off);
    }
    for (int e = 0; e < edges.num_edges; ++e) {
      std::array<double, 2> next = fresh[e];
      if (damping > 0.0)
        next = normalize_pair({(1.0 - damping) * next[0] + damping * f2v[e][0],
                               (1.0 - damping) * next[1] + damping * f2v[e][1]});
      residual = std::max(residual, std::abs(next[0] - f2v[e][0]));
      residual = std::max(residual, std::abs(next[1] - f2v[e][1]));
      f2v[e] = next;
    }

    result.iterations = iter;
    if (residual <= stop_tolerance) break;
  }
  result.converged = residual <= opts.tolerance;
  result.max_residual = residual;

  result.q.resize(g.num_vars);
  for (int v = 0; v < g.num_vars; ++v) {
    double b0 = 0.0, b1 = 0.0;
    for (int e : edges.var_edges[v]) {
      b0 += f2v[e][0];
      b1 += f2v[e][1];
    }
    if (b0 < kContradiction && b1 < kContradiction)
      throw Error(strfmt("contradictory constraints: variable %d has no admissible state", v));
    // q1 via stable sigmoid of the log-odds; q0 set so the pair sums to 1.
    double q1 = 1.0 / (1.0 + std::exp(b0 - b1));
    result.q[v] = {1.0 - q1, q1};
  }

  result.factor_to_var = std::move(f2v);
  result.edge_offset = edges.offset;
  result.edge_var = edges.edge_var;
  return result;
}

namespace {

// Shared enumeration over all 2^n assignments.
template <typename Visit>
void enumerate_assignments(const FactorGraph& g, Visit&& visit) {
  const int n = g.num_vars;
  if (n > 20) throw Error("brute force: too many variables (limit 20)");
  std::vector<int> assignment(n, 0);
  const std::uint32_t count = 1u << n;
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    for (int v = 0; v < n; ++v) assignment[v] = (mask >> v) & 1;
    double logw = 0.0;
    for (const Factor& f : g.factors) logw += f.log_potential(assignment);
    visit(assignment, logw);
  }
}

}  // namespace

MarginalTable brute_force_marginals(const FactorGraph& g) {
  if (g.num_vars == 0) throw Error("brute force: empty graph");
  const int n = g.num_vars;
  std::vector<std::array<double, 2>> acc(n, {kNegInf, kNegInf});
  double log_z = kNegInf;
  enumerate_assignments(g, [&](const std::vector<int>& a, double logw) {
    log_z = logsumexp2(log_z, logw);
    for (int v = 0; v < n; ++v) acc[v][a[v]] = logsumexp2(acc[v][a[v]], logw);
  });
  if (log_z < kContradiction) throw Error("contradictory constraints: no admissible assignment");

  MarginalTable result;
  result.converged = true;
  result.q.resize(n);
  for (int v = 0; v < n; ++v) {
    double q1 = 1.0 / (1.0 + std::exp(acc[v][0] - acc[v][1]));
    result.q[v] = {1.0 - q1, q1};
  }
  return result;
}

double brute_force_log_z(const FactorGraph& g) {
  double log_z = kNegInf;
  enumerate_assignments(g, [&](const std::vector<int>&, double logw) {
    log_z = logsumexp2(log_z, logw);
  });
  return log_z;
}

namespace {

double xlny(double x, double ln_y) { return x > 0.0 ? x * ln_y : 0.0; }

}  // namespace

BeliefView::BeliefView(const MarginalTable& m) : m_(&m) {
  var_sums_.assign(m.q.size(), {0.0, 0.0});
  for (std::size_t e = 0; e < m.factor_to_var.size(); ++e) {
    var_sums_[m.edge_var[e]][0] += m.factor_to_var[e][0];
    var_sums_[m.edge_var[e]][1] += m.factor_to_var[e][1];
  }
}

// mu_{v->f} = belief(v) - mu_{f->v}, per slot of the factor.
std::vector<std::array<double, 2>> BeliefView::incoming(int factor_index) const {
  int begin = m_->edge_offset[factor_index];
  int end = factor_index + 1 < static_cast<int>(m_->edge_offset.size())
                ? m_->edge_offset[factor_index + 1]
                : static_cast<int>(m_->factor_to_var.size());
  std::vector<std::array<double, 2>> in(end - begin);
  for (int e = begin; e < end; ++e) {
    int v = m_->edge_var[e];
    in[e - begin] = normalize_pair({var_sums_[v][0] - m_->factor_to_var[e][0],
                                    var_sums_[v][1] - m_->factor_to_var[e][1]});
  }
  return in;
}

FactorBeliefTerms factor_belief_terms(const Factor& f,
                                      const std::vector<std::array<double, 2>>& in) {
  FactorBeliefTerms out;
  if (f.kind == FactorKind::at_least_one) {
    // Closed form through the all-zero/rest decomposition; enumeration would
    // be exponential in the group size.
    const double ws = f.weight.log_potential(true);
    const double wv = f.weight.log_potential(false);
    double log_p0 = 0.0;
    double sum_plogp = 0.0;  // E_P[log P] over the product of incoming messages
    for (const auto& msg : in) {
      log_p0 += msg[0];
      sum_plogp += xlny(std::exp(msg[0]), msg[0]) + xlny(std::exp(msg[1]), msg[1]);
    }
    double log_s = log1m_exp(std::min(log_p0, 0.0));
    double log_zf = logsumexp2(ws + log_s, wv + log_p0);
    double b_sat = std::exp(ws + log_s - log_zf);  // total satisfied mass
    double b0 = std::exp(wv + log_p0 - log_zf);
    out.satisfied = b_sat;
    out.energy = xlny(b_sat, ws) + xlny(b0, wv);
    // sum over satisfied configs of b log b, using
    // sum_{x in S} P log P = E_P[log P] - P0 log P0.
    double p0 = std::exp(log_p0);
    double s = std::exp(std::min(log_s, 0.0));
    double sat_blogb =
        std::exp(ws - log_zf) * (s * (ws - log_zf) + (sum_plogp - xlny(p0, log_p0)));
    out.entropy = -(sat_blogb + xlny(b0, wv + log_p0 - log_zf));
    return out;
  }

  // Arity 1 or 2: enumerate the factor table.
  const int arity = f.arity();
  const int configs = 1 << arity;
  std::vector<int> assignment(arity);
  double log_zf = kNegInf;
  std::vector<double> logw(configs);
  std::vector<bool> sat(configs);
  for (int mask = 0; mask < configs; ++mask) {
    double lw = 0.0;
    for (int k = 0; k < arity; ++k) {
      assignment[k] = (mask >> k) & 1;
      lw += in[k][assignment[k]];
    }
    bool satisfied = true;
    if (f.kind == FactorKind::singleton_vote)
      satisfied = assignment[0] == (f.positive ? 1 : 0);
    else if (f.kind == FactorKind::agree)
      satisfied = assignment[0] == assignment[1];
    double pot = f.kind == FactorKind::predictor_prior ? f.log_prior[assignment[0]]
                                                       : f.weight.log_potential(satisfied);
    logw[mask] = lw + pot;
    sat[mask] = satisfied;
    log_zf = logsumexp2(log_zf, logw[mask]);
  }
  out.satisfied = 0.0;
  for (int mask = 0; mask < configs; ++mask) {
    double b = std::exp(logw[mask] - log_zf);
    if (sat[mask]) out.satisfied += b;
    if (b <= 0.0) continue;
    double pot = f.kind == FactorKind::predictor_prior ? f.log_prior[mask & 1]
                                                       : f.weight.log_potential(sat[mask]);
    out.energy += b * pot;
    out.entropy -= b * (logw[mask] - log_zf);
  }
  return out;
}

double bethe_objective(const FactorGraph& g, const MarginalTable& m) {
  if (static_cast<int>(m.q.size()) != g.num_vars)
    throw Error("bethe: marginal table does not match graph");
  if (m.edge_offset.size() != g.factors.size() && !g.factors.empty())
    throw Error("bethe: marginal table has no retained messages (use loopy_bp)");

  BeliefView view(m);
  double total = 0.0;
  for (std::size_t fi = 0; fi < g.factors.size(); ++fi) {
    FactorBeliefTerms fb =
        factor_belief_terms(g.factors[fi], view.incoming(static_cast<int>(fi)));
    total += fb.energy + fb.entropy;
  }
  for (int v = 0; v < g.num_vars; ++v) {
    double h = -(xlny(m.q[v][0], std::log(std::max(m.q[v][0], 1e-300))) +
                 xlny(m.q[v][1], std::log(std::max(m.q[v][1], 1e-300))));
    double degree = static_cast<double>(g.var_factors[v].size());
    total += (1.0 - degree) * h;
  }
  return total;
}

double factor_satisfaction(const FactorGraph& g, const MarginalTable& m, int factor_index) {
  const Factor& f = g.factors[factor_index];
  if (f.kind == FactorKind::predictor_prior) return 1.0;
  if (f.kind == FactorKind::singleton_vote)
    return m.q[f.vars[0]][f.positive ? 1 : 0];
  BeliefView view(m);
  return factor_belief_terms(f, view.incoming(factor_index)).satisfied;
}

}  // namespace dpl
