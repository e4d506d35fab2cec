#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "lostsales/demand.hpp"
#include "lostsales/errors.hpp"
#include "lostsales/policy.hpp"
#include "lostsales/value.hpp"

namespace lostsales {

// Truncated discrete MDP for the lost-sales system at small leadtime.
// States are (J, q_1, ..., q_L) on the grid d' = d / refine with
// J in [0, J_max] and each pipeline slot in [0, q_max]; actions share the
// pipeline grid. Demand mass that would push J above the cap is mapped to
// the boundary state (a conservative holding-cost truncation, reported via
// truncation_mass).
struct MdpModel {
  DemandModel demand;
  CostParams costs;
  int leadtime = 0;
  int refine = 1;
  double span = 1.0;
  std::int64_t nj = 0;        // J grid size (units 0..nj-1)
  std::int64_t nq = 0;        // action / pipeline grid size
  std::int64_t n_states = 0;  // nj * nq^L
  double truncation_mass = 0.0;

  double j_max() const { return span * static_cast<double>(nj - 1); }
  double q_max() const { return span * static_cast<double>(nq - 1); }

  std::int64_t encode(std::int64_t j, const std::int64_t* q) const {
    std::int64_t idx = j;
    for (int i = 0; i < leadtime; ++i) idx = idx * nq + q[i];
    return idx;
  }

  void decode(std::int64_t idx, std::int64_t& j, std::int64_t* q) const {
    for (int i = leadtime - 1; i >= 0; --i) {
      q[i] = idx % nq;
      idx /= nq;
    }
    j = idx;
  }
};

inline MdpModel build_mdp(const DemandModel& demand, CostParams costs,
                          int leadtime, double j_max, double q_max,
                          int refine = 1,
                          std::int64_t state_budget = 2'000'000) {
  require(demand.lattice, ErrorCode::NotLattice, "MDP needs lattice demand");
  require(leadtime >= 0, ErrorCode::BadParam, "leadtime must be >= 0");
  MdpModel m;
  m.demand = demand;
  m.costs = costs;
  m.leadtime = leadtime;
  m.refine = refine;
  m.span = demand.span / static_cast<double>(refine);
  m.nj = static_cast<std::int64_t>(std::floor(j_max / m.span + 1e-9)) + 1;
  m.nq = static_cast<std::int64_t>(std::floor(q_max / m.span + 1e-9)) + 1;
  require(m.nj >= 2 && m.nq >= 2, ErrorCode::BadParam,
          "state grid must contain at least two points per dimension");
  double states = static_cast<double>(m.nj);
  for (int i = 0; i < leadtime; ++i) states *= static_cast<double>(m.nq);
  require(states <= static_cast<double>(state_budget),
          ErrorCode::StateBudgetExceeded,
          "state count exceeds the configured budget");
  m.n_states = static_cast<std::int64_t>(states);
  // demand mass invisible to the J grid: truncated tail plus atoms beyond J_max
  double beyond = demand.truncated_mass;
  for (std::size_t k = 0; k < demand.pmf.size(); ++k) {
    if (demand.span * static_cast<double>(k) > j_max) beyond += demand.pmf[k];
  }
  m.truncation_mass = beyond;
  return m;
}

struct MdpSolution {
  double g_star = 0.0;
  std::vector<double> values;        // relative values, v(ref) = 0
  std::vector<std::int64_t> policy;  // greedy order in grid units
  double span_residual = 0.0;
  std::int64_t iterations = 0;
  double lower_bound = 0.0;  // min of the final value difference
  double upper_bound = 0.0;  // max of the final value difference
  bool bounds_monotone = true;
};

namespace detail {

// Expected value of v after one period from on-hand o (units), plus the
// expected one-period cost, shared by RVI and policy evaluation.
// next-state J index is computed by the caller through `land`.
struct MdpSweep {
  const MdpModel* m;
  std::vector<double> cost_by_onhand;  // c(o) for o = j + q1
  std::vector<std::int64_t> atoms;     // demand atom offsets in grid units
  std::vector<double> atom_p;

  explicit MdpSweep(const MdpModel& model) : m(&model) {
    const auto K = static_cast<std::int64_t>(model.refine);
    const std::int64_t o_max = (model.nj - 1) + (model.nq - 1);
    cost_by_onhand.resize(static_cast<std::size_t>(o_max) + 1);
    for (std::int64_t o = 0; o <= o_max; ++o) {
      const double oh = model.span * static_cast<double>(o);
      double c = 0.0;
      for (std::size_t k = 0; k < model.demand.pmf.size(); ++k) {
        const double d = model.demand.span * static_cast<double>(k);
        c += model.demand.pmf[k] *
             (model.costs.h * std::max(oh - d, 0.0) +
              model.costs.p * std::max(d - oh, 0.0));
      }
      cost_by_onhand[static_cast<std::size_t>(o)] = c;
    }
    for (std::size_t k = 0; k < model.demand.pmf.size(); ++k) {
      if (model.demand.pmf[k] == 0.0) continue;
      atoms.push_back(static_cast<std::int64_t>(k) * K);
      atom_p.push_back(model.demand.pmf[k]);
    }
  }

  std::int64_t land(std::int64_t o, std::int64_t demand_units) const {
    std::int64_t j = o - demand_units;
    if (j < 0) j = 0;
    if (j >= m->nj) j = m->nj - 1;  // boundary truncation
    return j;
  }
};

}  // namespace detail

// Relative value iteration with reference state (J=0, empty pipeline).
// Running lower/upper bounds min/max(w - v) bracket g*; their monotonicity
// is recorded for the diagnostics.
inline MdpSolution relative_value_iteration(const MdpModel& m, double tol,
                                            std::int64_t max_iters = 100'000) {
  detail::MdpSweep sweep(m);
  const std::int64_t n = m.n_states;
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  std::vector<double> w(static_cast<std::size_t>(n), 0.0);
  std::vector<std::int64_t> q(static_cast<std::size_t>(std::max(m.leadtime, 1)));

  MdpSolution sol;
  sol.policy.assign(static_cast<std::size_t>(n), 0);
  double lo_prev = -std::numeric_limits<double>::infinity();
  double hi_prev = std::numeric_limits<double>::infinity();
  std::int64_t mult = 1;
  for (int i = 0; i < m.leadtime; ++i) mult *= m.nq;

  for (std::int64_t it = 1; it <= max_iters; ++it) {
    for (std::int64_t s = 0; s < n; ++s) {
      std::int64_t j;
      m.decode(s, j, q.data());
      const std::int64_t q1 = m.leadtime > 0 ? q[0] : 0;
      double best = std::numeric_limits<double>::infinity();
      std::int64_t best_a = 0;
      for (std::int64_t a = 0; a < m.nq; ++a) {
        // successor pipeline: shift left, append a
        std::int64_t o, nxt_base;
        if (m.leadtime == 0) {
          o = j + a;
          nxt_base = 0;  // filled per atom below
        } else {
          o = j + q1;
          nxt_base = 0;
          for (int i = 1; i < m.leadtime; ++i) nxt_base = nxt_base * m.nq + q[i];
          nxt_base = nxt_base * m.nq + a;
        }
        double ev = 0.0;
        for (std::size_t t = 0; t < sweep.atoms.size(); ++t) {
          const std::int64_t jn = sweep.land(o, sweep.atoms[t]);
          const std::int64_t sn = m.leadtime == 0 ? jn : jn * mult + nxt_base;
          ev += sweep.atom_p[t] * v[static_cast<std::size_t>(sn)];
        }
        const double qv =
            sweep.cost_by_onhand[static_cast<std::size_t>(o)] + ev;
        if (qv < best - 1e-12) {
          best = qv;
          best_a = a;
        }
      }
      w[static_cast<std::size_t>(s)] = best;
      sol.policy[static_cast<std::size_t>(s)] = best_a;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::int64_t s = 0; s < n; ++s) {
      const double d = w[static_cast<std::size_t>(s)] -
                       v[static_cast<std::size_t>(s)];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    if (lo < lo_prev - 1e-9 || hi > hi_prev + 1e-9) sol.bounds_monotone = false;
    lo_prev = std::max(lo_prev, lo);
    hi_prev = std::min(hi_prev, hi);
    const double ref = w[0];
    for (std::int64_t s = 0; s < n; ++s)
      v[static_cast<std::size_t>(s)] = w[static_cast<std::size_t>(s)] - ref;
    sol.iterations = it;
    sol.span_residual = hi - lo;
    sol.lower_bound = lo;
    sol.upper_bound = hi;
    if (hi - lo <= tol) {
      sol.g_star = 0.5 * (lo + hi);
      sol.values = std::move(v);
      return sol;
    }
  }
  fail(ErrorCode::NoConvergence,
       "relative value iteration did not reach the span tolerance");
}

// Long-run average cost of a fixed stationary policy on the truncated chain,
// by fixed-policy relative iteration. The action map receives the decoded
// state and must return an order in grid units.
inline double exact_policy_eval(
    const MdpModel& m,
    const std::function<std::int64_t(double j, const std::vector<double>& pipe)>&
        action_units,
    double tol = 1e-10, std::int64_t max_iters = 200'000) {
  detail::MdpSweep sweep(m);
  const std::int64_t n = m.n_states;
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);
  std::vector<double> w(static_cast<std::size_t>(n), 0.0);
  std::vector<std::int64_t> q(static_cast<std::size_t>(std::max(m.leadtime, 1)));
  std::vector<std::int64_t> act(static_cast<std::size_t>(n));
  std::vector<double> pipe(static_cast<std::size_t>(m.leadtime));

  for (std::int64_t s = 0; s < n; ++s) {
    std::int64_t j;
    m.decode(s, j, q.data());
    for (int i = 0; i < m.leadtime; ++i)
      pipe[static_cast<std::size_t>(i)] =
          m.span * static_cast<double>(q[static_cast<std::size_t>(i)]);
    std::int64_t a = action_units(m.span * static_cast<double>(j), pipe);
    if (a < 0) a = 0;
    if (a >= m.nq) a = m.nq - 1;
    act[static_cast<std::size_t>(s)] = a;
  }

  std::int64_t mult = 1;
  for (int i = 0; i < m.leadtime; ++i) mult *= m.nq;

  for (std::int64_t it = 1; it <= max_iters; ++it) {
    for (std::int64_t s = 0; s < n; ++s) {
      std::int64_t j;
      m.decode(s, j, q.data());
      const std::int64_t a = act[static_cast<std::size_t>(s)];
      std::int64_t o, nxt_base = 0;
      if (m.leadtime == 0) {
        o = j + a;
      } else {
        o = j + q[0];
        for (int i = 1; i < m.leadtime; ++i) nxt_base = nxt_base * m.nq + q[i];
        nxt_base = nxt_base * m.nq + a;
      }
      double ev = 0.0;
      for (std::size_t t = 0; t < sweep.atoms.size(); ++t) {
        const std::int64_t jn = sweep.land(o, sweep.atoms[t]);
        const std::int64_t sn = m.leadtime == 0 ? jn : jn * mult + nxt_base;
        ev += sweep.atom_p[t] * v[static_cast<std::size_t>(sn)];
      }
      w[static_cast<std::size_t>(s)] =
          sweep.cost_by_onhand[static_cast<std::size_t>(o)] + ev;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::int64_t s = 0; s < n; ++s) {
      const double d = w[static_cast<std::size_t>(s)] -
                       v[static_cast<std::size_t>(s)];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    const double ref = w[0];
    for (std::int64_t s = 0; s < n; ++s)
      v[static_cast<std::size_t>(s)] = w[static_cast<std::size_t>(s)] - ref;
    if (hi - lo <= tol) return 0.5 * (lo + hi);
    (void)it;
  }
  fail(ErrorCode::Multichain,
       "policy evaluation did not converge; the induced chain may be "
       "multichain or periodic on the truncated grid");
}

// Convenience adapters from PolicySpec to grid actions. PIL projections are
// evaluated exactly on the grid and the resulting real order is rounded to
// the nearest action grid point (recorded approximation).
inline std::function<std::int64_t(double, const std::vector<double>&)>
mdp_action_adapter(const MdpModel& m, const PolicySpec& policy) {
  const double span = m.span;
  switch (policy.kind) {
    case PolicySpec::Kind::Constant: {
      const auto units = static_cast<std::int64_t>(std::llround(policy.r / span));
      return [units](double, const std::vector<double>&) { return units; };
    }
    case PolicySpec::Kind::BaseStock: {
      const double S = policy.base_level;
      return [S, span](double j, const std::vector<double>& pipe) {
        double pos = j;
        for (double x : pipe) pos += x;
        const double order = std::max(S - pos, 0.0);
        return static_cast<std::int64_t>(std::llround(order / span));
      };
    }
    case PolicySpec::Kind::CappedBaseStock: {
      const double S = policy.base_level;
      const double cap = policy.cap;
      return [S, cap, span](double j, const std::vector<double>& pipe) {
        double pos = j;
        for (double x : pipe) pos += x;
        const double order = std::min(std::max(S - pos, 0.0), cap);
        return static_cast<std::int64_t>(std::llround(order / span));
      };
    }
    case PolicySpec::Kind::Pil: {
      const double xi = policy.xi;
      const DemandModel demand = m.demand;
      const int refine = m.refine;
      return [xi, demand, refine, span](double j,
                                        const std::vector<double>& pipe) {
        SystemState st;
        st.on_hand = j;
        st.pipeline = pipe;
        const double proj = project_inventory_exact(st, demand, refine);
        const double order = std::max(xi - proj, 0.0);
        return static_cast<std::int64_t>(std::llround(order / span));
      };
    }
    case PolicySpec::Kind::HybridSwitch:
      break;
  }
  fail(ErrorCode::BadParam,
       "policy kind not supported for exact evaluation");
}

}  // namespace lostsales
