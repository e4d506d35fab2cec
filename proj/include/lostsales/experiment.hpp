#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lostsales/demand.hpp"
#include "lostsales/errors.hpp"
#include "lostsales/ladder.hpp"
#include "lostsales/mdp.hpp"
#include "lostsales/policy.hpp"
#include "lostsales/simulate.hpp"
#include "lostsales/value.hpp"

namespace lostsales {

// Memoized stationary means across a tuning run. E[J_inf(C_r)] does not
// depend on p, so the evaluations are shared across the whole p grid.
class StationaryCache {
 public:
  StationaryCache(const DemandModel& demand, int refine,
                  StationaryOptions opts = {})
      : demand_(&demand), refine_(refine), opts_(opts) {
    opts_.refine = refine;
  }

  double mean(std::int64_t r_units) {
    auto it = memo_.find(r_units);
    if (it != memo_.end()) return it->second;
    const double span = demand_->span / static_cast<double>(refine_);
    const double r = span * static_cast<double>(r_units);
    StationaryOptions opts = opts_;
    if (r_units > 0) {
      const double mu_y = demand_->mu - r;
      // cap scaled to the heavy-traffic mean, bounded below by the default
      const double kingman = demand_->sigma2 / (2.0 * mu_y);
      opts.j_cap = std::max(64.0 * demand_->mu, 14.0 * kingman);
    }
    const double m = r_units == 0
                         ? 0.0
                         : stationary_inventory(*demand_, r, opts).mean;
    memo_.emplace(r_units, m);
    return m;
  }

  double span() const { return demand_->span / static_cast<double>(refine_); }

  std::int64_t grid_size() const {
    // admissible constant orders: r in [0, mu_D)
    const double span = this->span();
    auto n = static_cast<std::int64_t>(std::ceil(demand_->mu / span));
    while (span * static_cast<double>(n - 1) >= demand_->mu) --n;
    return n;
  }

 private:
  const DemandModel* demand_;
  int refine_;
  StationaryOptions opts_;
  std::map<std::int64_t, double> memo_;
};

struct OptimizeRResult {
  double r_p = 0.0;
  std::int64_t r_units = 0;
  double cost = 0.0;
  int evaluations = 0;
};

// Minimizer of C(C_r) = h E[J_inf(C_r)] + p (mu_D - r) over the refined r
// grid, by integer ternary search justified by convexity; ties break toward
// the smaller r. lo_units can seed the bracket (r_p is non-decreasing in p,
// so sweeps over an ascending p grid restart from the previous optimum).
inline OptimizeRResult optimize_r(const DemandModel& demand, CostParams costs,
                                  StationaryCache& cache,
                                  std::int64_t lo_units = 0) {
  const double span = cache.span();
  std::int64_t lo = lo_units;
  std::int64_t hi = cache.grid_size() - 1;
  require(lo >= 0 && lo <= hi, ErrorCode::BadParam, "bad bracket for optimize_r");
  int evals = 0;
  auto f = [&](std::int64_t u) {
    ++evals;
    const double r = span * static_cast<double>(u);
    return costs.h * cache.mean(u) + costs.p * (demand.mu - r);
  };
  while (hi - lo > 2) {
    const std::int64_t m1 = lo + (hi - lo) / 3;
    const std::int64_t m2 = hi - (hi - lo) / 3;
    const double f1 = f(m1), f2 = f(m2);
    // cost ties (within numerical noise) keep the left candidates so the
    // smaller r wins
    if (f1 <= f2 + 1e-11 * std::max(1.0, std::abs(f1))) {
      hi = m2 - 1;
    } else {
      lo = m1 + 1;
    }
  }
  OptimizeRResult best;
  best.cost = std::numeric_limits<double>::infinity();
  for (std::int64_t u = lo; u <= hi; ++u) {
    const double c = f(u);
    const bool better =
        !std::isfinite(best.cost) ||
        c < best.cost - 1e-12 * std::max(1.0, std::abs(best.cost));
    if (better) {
      best.cost = c;
      best.r_units = u;
    }
  }
  best.r_p = span * static_cast<double>(best.r_units);
  best.evaluations = evals;
  return best;
}

// sup of kappa over an r grid (plus any extra points), via the exact ladder.
inline double kappa_bar(const DemandModel& demand, int refine,
                        const std::vector<double>& r_values) {
  double best = 0.0;
  for (double r : r_values) {
    if (r >= demand.mu) continue;
    const IncrementModel inc = increment_model(demand, r, refine);
    const LadderDistribution dist = ascending_ladder_exact(inc);
    const LadderSummary s = ladder_moments_kappa(dist, true, inc.span);
    best = std::max(best, s.kappa);
  }
  require(best > 0.0, ErrorCode::BadParam, "empty r grid for kappa_bar");
  return best;
}

struct HeavyTrafficRow {
  double r = 0.0;
  double mu_y = 0.0;
  double ej_inf = 0.0;
  double ratio = 0.0;  // 2 mu_Y E[J_inf] / sigma_D^2
};

inline std::vector<HeavyTrafficRow> heavy_traffic_scan(
    const DemandModel& demand, const std::vector<double>& r_grid, int refine,
    StationaryOptions opts = {}) {
  std::vector<HeavyTrafficRow> rows;
  opts.refine = refine;
  for (double r : r_grid) {
    HeavyTrafficRow row;
    row.r = r;
    row.mu_y = demand.mu - r;
    if (r == 0.0) {
      row.ej_inf = 0.0;
    } else {
      StationaryOptions o = opts;
      const double kingman = demand.sigma2 / (2.0 * row.mu_y);
      o.j_cap = std::max(64.0 * demand.mu, 14.0 * kingman);
      row.ej_inf = stationary_inventory(demand, r, o).mean;
    }
    row.ratio = 2.0 * row.mu_y * row.ej_inf / demand.sigma2;
    rows.push_back(row);
  }
  return rows;
}

struct XiSample {
  double xi = 0.0;
  double cost = 0.0;
  double se = 0.0;
};

struct OptimizeXiResult {
  double xi_p = 0.0;
  double cost = 0.0;
  double se = 0.0;
  std::vector<XiSample> samples;
  bool unimodal = true;
};

// Golden-section search on the simulated PIL cost-rate under common random
// numbers. Unimodality is assumed, not proven; the sampled points are
// scanned afterwards and any interior local minimum pattern flags the run.
inline OptimizeXiResult optimize_xi(const DemandModel& demand, CostParams costs,
                                    const SimConfig& cfg, double lo, double hi,
                                    double tol = 0.25,
                                    const std::vector<double>& must_try = {}) {
  require(hi >= lo && lo >= 0.0, ErrorCode::BadParam, "bad xi bracket");
  OptimizeXiResult out;
  auto eval = [&](double xi) {
    const CostRateEstimate est =
        estimate_cost_rate(PolicySpec::pil(xi), demand, costs, cfg);
    out.samples.push_back({xi, est.mean, est.se});
    return est.mean;
  };

  if (hi - lo < 1e-12) {
    out.xi_p = lo;
    out.cost = hi > 0.0 || lo > 0.0 ? eval(lo) : eval(0.0);
    out.se = out.samples.back().se;
    return out;
  }

  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = eval(c), fd = eval(d);
  double f_lo = eval(lo), f_hi = eval(hi);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = eval(d);
    }
  }
  for (double xi : must_try) {
    if (xi >= 0.0) eval(xi);
  }
  // pick the best sampled point
  const XiSample* best = &out.samples.front();
  for (const auto& s : out.samples)
    if (s.cost < best->cost) best = &s;
  out.xi_p = best->xi;
  out.cost = best->cost;
  out.se = best->se;

  // bracket-edge miss: the minimum sits at an endpoint and points outward
  const double edge_tol = 1e-9 + tol;
  if ((std::abs(best->xi - hi) < edge_tol && f_hi < f_lo) && hi > lo) {
    if (best->cost >= f_hi - 1e-12)
      fail(ErrorCode::BracketMiss, "xi search minimum sits at the upper edge");
  }
  if (std::abs(best->xi - lo) < edge_tol && lo > 0.0 && f_lo < f_hi) {
    if (best->cost >= f_lo - 1e-12)
      fail(ErrorCode::BracketMiss, "xi search minimum sits at the lower edge");
  }

  // unimodality diagnostic over the sorted samples
  std::vector<XiSample> sorted = out.samples;
  std::sort(sorted.begin(), sorted.end(),
            [](const XiSample& x, const XiSample& y) { return x.xi < y.xi; });
  int sign_changes = 0;
  for (std::size_t i = 2; i < sorted.size(); ++i) {
    const double d1 = sorted[i - 1].cost - sorted[i - 2].cost;
    const double d2 = sorted[i].cost - sorted[i - 1].cost;
    const double noise = 3.0 * (sorted[i].se + sorted[i - 1].se);
    if (d1 < -noise && d2 > noise) continue;     // proper valley
    if (d1 > noise && d2 < -noise) ++sign_changes;  // interior bump
  }
  out.unimodal = sign_changes == 0;
  return out;
}

struct GapCell {
  double p = 0.0;
  int leadtime = 0;
  double r_p = 0.0;
  double xi_rp = 0.0;
  double cost_constant = 0.0;
  double se_constant = 0.0;
  double cost_pil = 0.0;
  double se_pil = 0.0;
  double gap = 0.0;
  double se_gap = 0.0;  // paired SE under CRN
  double rel_gap = 0.0;
  double kappa_bar = 0.0;
  double bound = 0.0;  // h * kappa_bar^2
  double g_term_mean = 0.0;  // measured b(r) mu+ E[int g_r] per period
  std::int64_t order_bound_violations = 0;
  std::int64_t state_bound_violations = 0;
};

struct GapStudyInputs {
  const DemandModel* demand;
  CostParams costs;
  int refine = 1;
  Convention convention = Convention::Derived;
  double kappa_bar_value = 0.0;  // precomputed sup kappa
};

// One (p, L) cell of the gap study: CRN estimates of C(C_{r_p}) and
// C(P_{xi(r_p)}), their paired gap, and the correction-term accumulator.
inline GapCell gap_cell(const GapStudyInputs& in, StationaryCache& cache,
                        double p, int leadtime, const SimConfig& base_cfg) {
  const DemandModel& demand = *in.demand;
  CostParams costs = in.costs;
  costs.p = p;

  GapCell cell;
  cell.p = p;
  cell.leadtime = leadtime;
  const OptimizeRResult tuned = optimize_r(demand, costs, cache);
  cell.r_p = tuned.r_p;

  const IncrementModel inc = increment_model(demand, cell.r_p, in.refine);
  const LadderDistribution dist = ascending_ladder_exact(inc);
  const LadderSummary ladder = ladder_moments_kappa(dist, true, inc.span);
  cell.xi_rp = pil_target(demand.mu, cell.r_p, costs, ladder, in.convention);
  cell.kappa_bar = in.kappa_bar_value;
  cell.bound = costs.h * in.kappa_bar_value * in.kappa_bar_value;

  SimConfig cfg = base_cfg;
  cfg.leadtime = leadtime;

  // renewal table covering every state the PIL system can reach
  const double x_max = std::max(cell.xi_rp, 0.0) +
                       static_cast<double>(leadtime) * demand.mu +
                       10.0 * std::sqrt(demand.sigma2);
  const RenewalTable renewal = renewal_measure(ladder, x_max);
  TrajectoryProbe probe;
  probe.renewal = &renewal;
  probe.r = cell.r_p;
  probe.b_mu_plus =
      costs.h / (2.0 * (demand.mu - cell.r_p)) * ladder.mu_plus;

  const CostRateEstimate est_c = estimate_cost_rate(
      PolicySpec::constant(cell.r_p), demand, costs, cfg);
  const CostRateEstimate est_p = estimate_cost_rate(
      PolicySpec::pil(std::max(cell.xi_rp, 0.0)), demand, costs, cfg, &probe);

  cell.cost_constant = est_c.mean;
  cell.se_constant = est_c.se;
  cell.cost_pil = est_p.mean;
  cell.se_pil = est_p.se;
  cell.gap = est_p.mean - est_c.mean;
  cell.rel_gap = cell.gap / est_c.mean;
  cell.order_bound_violations = est_p.order_bound_violations;
  cell.state_bound_violations = est_p.state_bound_violations;
  if (probe.g_term_count > 0)
    cell.g_term_mean = probe.g_term_sum / static_cast<double>(probe.g_term_count);

  double ss = 0.0, md = 0.0;
  const auto reps = est_c.rep_means.size();
  for (std::size_t i = 0; i < reps; ++i)
    md += est_p.rep_means[i] - est_c.rep_means[i];
  md /= static_cast<double>(reps);
  for (std::size_t i = 0; i < reps; ++i) {
    const double d = est_p.rep_means[i] - est_c.rep_means[i] - md;
    ss += d * d;
  }
  if (reps >= 2)
    cell.se_gap = std::sqrt(ss / (static_cast<double>(reps) - 1.0)) /
                  std::sqrt(static_cast<double>(reps));
  return cell;
}

struct MdpBenchRow {
  double p = 0.0;
  int leadtime = 0;
  double g_star = 0.0;
  double r_p = 0.0;
  double xi_rp = 0.0;
  double eval_constant = 0.0;
  double eval_pil = 0.0;
  double eval_capped = 0.0;
  double capped_S = 0.0;
  double capped_cap = 0.0;
  std::int64_t rvi_iterations = 0;
  double span_residual = 0.0;
  double truncation_mass = 0.0;
};

// Exact optimality benchmark for small leadtimes: g* via RVI plus exact
// evaluations of the tuned constant-order, PIL, and capped base-stock
// policies on the same truncated chain.
inline MdpBenchRow mdp_benchmark_cell(const DemandModel& demand,
                                      CostParams costs, double p, int leadtime,
                                      double j_max, double q_max, int refine,
                                      StationaryCache& cache,
                                      Convention convention,
                                      double rvi_tol = 1e-9) {
  CostParams c = costs;
  c.p = p;
  MdpBenchRow row;
  row.p = p;
  row.leadtime = leadtime;

  const MdpModel model = build_mdp(demand, c, leadtime, j_max, q_max, refine);
  row.truncation_mass = model.truncation_mass;
  const MdpSolution sol = relative_value_iteration(model, rvi_tol);
  row.g_star = sol.g_star;
  row.rvi_iterations = sol.iterations;
  row.span_residual = sol.span_residual;

  const OptimizeRResult tuned = optimize_r(demand, c, cache);
  row.r_p = tuned.r_p;
  const IncrementModel inc = increment_model(demand, row.r_p, refine);
  const LadderSummary ladder =
      ladder_moments_kappa(ascending_ladder_exact(inc), true, inc.span);
  row.xi_rp = pil_target(demand.mu, row.r_p, c, ladder, convention);

  row.eval_constant =
      exact_policy_eval(model, mdp_action_adapter(model, PolicySpec::constant(row.r_p)));
  row.eval_pil = exact_policy_eval(
      model, mdp_action_adapter(model, PolicySpec::pil(std::max(row.xi_rp, 0.0))));

  // small search for the capped base-stock contrast: S near the newsvendor
  // fractile of leadtime-demand, cap near r_p
  const double frac = c.p / (c.p + c.h);
  double s_star = 0.0;
  {
    double target = frac;
    double acc = 0.0;
    for (std::size_t k = 0; k < demand.pmf.size(); ++k) {
      acc += demand.pmf[k];
      if (acc >= target) {
        s_star = demand.span * static_cast<double>(k) *
                 static_cast<double>(leadtime + 1);
        break;
      }
    }
  }
  row.eval_capped = std::numeric_limits<double>::infinity();
  for (double ds = -2.0; ds <= 2.0; ds += 1.0) {
    const double S = std::max(0.0, s_star + ds * demand.span);
    for (double cap : {row.r_p, demand.mu, q_max}) {
      const double v = exact_policy_eval(
          model, mdp_action_adapter(model, PolicySpec::capped_base_stock(S, cap)));
      if (v < row.eval_capped) {
        row.eval_capped = v;
        row.capped_S = S;
        row.capped_cap = cap;
      }
    }
  }
  return row;
}

}  // namespace lostsales
