#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lostsales/demand.hpp"
#include "lostsales/errors.hpp"
#include "lostsales/ladder.hpp"
#include "lostsales/policy.hpp"
#include "lostsales/rng.hpp"
#include "lostsales/value.hpp"

namespace lostsales {

struct SimConfig {
  int leadtime = 0;                // L
  std::int64_t horizon = 100'000;  // T
  std::int64_t warmup = 1'000;     // W, accounting starts at max(W, L)
  int replications = 20;           // R
  std::uint64_t seed = 1;
  bool crn = true;  // demand streams keyed by (seed, rep) only

  void validate() const {
    require(horizon > 0, ErrorCode::BadConfig, "horizon must be positive");
    require(warmup < horizon, ErrorCode::BadConfig, "need warmup < horizon");
    require(replications >= 1, ErrorCode::BadConfig, "need R >= 1");
    require(leadtime >= 0, ErrorCode::BadConfig, "leadtime must be >= 0");
  }
};

struct TrajectoryResult {
  double mean_cost = 0.0;
  double mean_order = 0.0;
  double mean_inventory = 0.0;  // J_t observed at period start
  double lost_fraction = 0.0;   // lost units / demanded units
  std::int64_t periods_counted = 0;
  std::string projector = "none";
  // Lemma-8 style running order mean check (PIL runs)
  std::int64_t order_bound_violations = 0;
  // realized-state bound xi + L mu_D (PIL runs); violations are reported,
  // not fatal
  std::int64_t state_bound_violations = 0;
  double max_state = 0.0;
};

// Optional per-period observer, e.g. the correction-term accumulator used
// by the gap experiments.
struct TrajectoryProbe {
  const RenewalTable* renewal = nullptr;  // enables the g_r integral term
  double r = 0.0;
  double b_mu_plus = 0.0;  // b(r) * mu_plus
  double g_term_sum = 0.0;
  std::int64_t g_term_count = 0;
};

// One replication of the periodic-review lost-sales loop:
// observe x_t, place q_{t+L}, receive q_t, realize D_t, incur costs,
// J_{t+1} = (J_t + q_t - D_t)^+. Costs are accounted over t in
// [max(W, L), T] per the cost-rate definition.
inline TrajectoryResult simulate_trajectory(const PolicySpec& policy,
                                            const DemandModel& demand,
                                            CostParams costs,
                                            const SimConfig& cfg, int rep,
                                            TrajectoryProbe* probe = nullptr) {
  cfg.validate();
  const std::uint64_t policy_salt =
      cfg.crn ? 0u : splitmix64(static_cast<std::uint64_t>(policy.kind) * 31 +
                                static_cast<std::uint64_t>(policy.r * 1e6) +
                                static_cast<std::uint64_t>(policy.xi * 1e3));
  RngStream demand_rng(
      derive_seed(cfg.seed, static_cast<std::uint64_t>(rep), policy_salt));
  RngStream decision_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(rep),
                                     /*salt=*/0xdec1510));

  const bool needs_projection = policy.kind == PolicySpec::Kind::Pil ||
                                policy.kind == PolicySpec::Kind::HybridSwitch;
  std::optional<GridProjector> grid_proj;
  if (demand.lattice && needs_projection) grid_proj.emplace(demand);
  DecisionContext ctx;
  ctx.grid = grid_proj ? &*grid_proj : nullptr;
  ctx.mc_rng = &decision_rng;
  ctx.mc_paths = policy.mc_paths;
  const bool track_pil = policy.kind == PolicySpec::Kind::Pil;

  SystemState state;
  state.on_hand = 0.0;
  state.pipeline.assign(static_cast<std::size_t>(cfg.leadtime), 0.0);

  const std::int64_t first_accounted = std::max<std::int64_t>(cfg.warmup,
                                                              cfg.leadtime);
  const double mu_d = demand.mu;
  const double state_bound =
      policy.kind == PolicySpec::Kind::Pil
          ? policy.xi + static_cast<double>(cfg.leadtime) * mu_d
          : std::numeric_limits<double>::infinity();

  TrajectoryResult out;
  double cost_sum = 0.0, order_sum = 0.0, inv_sum = 0.0;
  double lost_sum = 0.0, demand_sum = 0.0;
  // Welford stats of accounted orders for the running-mean bound check
  double q_mean = 0.0, q_m2 = 0.0;
  std::int64_t q_n = 0;
  const double order_bound = std::min(policy.xi, mu_d);

  for (std::int64_t t = 0; t <= cfg.horizon; ++t) {
    state.period = t;
    const double q_new = decide(policy, state, demand, &ctx);
    const double q_arriving =
        cfg.leadtime == 0 ? q_new : state.pipeline.front();
    const double on_hand_before = state.on_hand;
    const double available = on_hand_before + q_arriving;
    const double d_t = demand.sample(demand_rng);
    const double held = std::max(available - d_t, 0.0);
    const double lost = std::max(d_t - available, 0.0);
    const double cost = costs.h * held + costs.p * lost;

    // flow conservation: available units either serve demand or carry over
    const double sold = d_t - lost;
    if (std::abs(available - sold - held) >
        1e-9 * (1.0 + std::abs(available))) {
      fail(ErrorCode::NoConvergence, "flow conservation violated");
    }

    const bool accounted = t >= first_accounted;
    if (accounted) {
      cost_sum += cost;
      order_sum += q_new;
      inv_sum += on_hand_before;
      lost_sum += lost;
      demand_sum += d_t;
      ++out.periods_counted;
    }
    if (probe != nullptr && probe->renewal != nullptr && accounted) {
      const double a = on_hand_before;
      const double b = on_hand_before + q_new - probe->r;
      probe->g_term_sum += probe->b_mu_plus * probe->renewal->integral_g(a, b);
      ++probe->g_term_count;
    }
    if (track_pil && t >= cfg.leadtime + 1) {
      // running mean of PIL orders against min(xi, mu_D) + 3 SE
      ++q_n;
      const double delta = q_new - q_mean;
      q_mean += delta / static_cast<double>(q_n);
      q_m2 += delta * (q_new - q_mean);
      if (q_n >= 100) {
        const double se = std::sqrt(
            std::max(q_m2, 0.0) /
            (static_cast<double>(q_n - 1) * static_cast<double>(q_n)));
        if (q_mean > order_bound + 3.0 * se + 1e-9)
          ++out.order_bound_violations;
      }
      if (state.on_hand > state_bound + 1e-9) ++out.state_bound_violations;
      out.max_state = std::max(out.max_state, state.on_hand);
    }

    // state update
    state.on_hand = held;
    if (cfg.leadtime > 0) {
      for (std::size_t i = 0; i + 1 < state.pipeline.size(); ++i)
        state.pipeline[i] = state.pipeline[i + 1];
      state.pipeline.back() = q_new;
    }
  }

  const auto n = static_cast<double>(out.periods_counted);
  out.mean_cost = cost_sum / n;
  out.mean_order = order_sum / n;
  out.mean_inventory = inv_sum / n;
  out.lost_fraction = demand_sum > 0.0 ? lost_sum / demand_sum : 0.0;
  out.projector = ctx.projector_used;
  return out;
}

struct CostRateEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::vector<double> rep_means;
  std::vector<double> rep_orders;
  std::vector<double> rep_inventory;
  std::vector<double> rep_lost_fraction;
  std::int64_t warmup = 0;
  std::string projector = "none";
  std::int64_t order_bound_violations = 0;
  std::int64_t state_bound_violations = 0;
};

inline CostRateEstimate estimate_cost_rate(const PolicySpec& policy,
                                           const DemandModel& demand,
                                           CostParams costs,
                                           const SimConfig& cfg,
                                           TrajectoryProbe* probe = nullptr) {
  cfg.validate();
  CostRateEstimate est;
  est.warmup = cfg.warmup;
  for (int rep = 0; rep < cfg.replications; ++rep) {
    const TrajectoryResult tr =
        simulate_trajectory(policy, demand, costs, cfg, rep, probe);
    est.rep_means.push_back(tr.mean_cost);
    est.rep_orders.push_back(tr.mean_order);
    est.rep_inventory.push_back(tr.mean_inventory);
    est.rep_lost_fraction.push_back(tr.lost_fraction);
    est.order_bound_violations += tr.order_bound_violations;
    est.state_bound_violations += tr.state_bound_violations;
    est.projector = tr.projector;
  }
  const auto r = static_cast<double>(cfg.replications);
  for (double m : est.rep_means) est.mean += m;
  est.mean /= r;
  if (cfg.replications >= 2) {
    double ss = 0.0;
    for (double m : est.rep_means) ss += (m - est.mean) * (m - est.mean);
    est.se = std::sqrt(ss / (r - 1.0)) / std::sqrt(r);
  }
  return est;
}

// Start distribution for the improvement-identity check.
struct StartDist {
  std::vector<double> values;
  std::vector<double> probs;  // empty = uniform over values

  double sample(RngStream& rng) const {
    require(!values.empty(), ErrorCode::BadParam, "empty start distribution");
    if (probs.empty()) {
      auto i = static_cast<std::size_t>(rng.next_uniform() *
                                        static_cast<double>(values.size()));
      if (i >= values.size()) i = values.size() - 1;
      return values[i];
    }
    const double u = rng.next_uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      acc += probs[i];
      if (u < acc) return values[i];
    }
    return values.back();
  }
};

struct ImprovementCheck {
  double residual = 0.0;  // Monte Carlo mean of the identity defect
  double se = 0.0;
  std::int64_t n_paths = 0;
  std::int64_t segment_length = 0;
};

// Monte Carlo check of the segment identity
//   E[c_{[t1,t2]}(C_r) | J_{t1}] =
//       v_r(J_{t1}) - E[v_r(J_{t2+1}) | J_{t1}] + (t2+1-t1) C(C_r).
// Under a constant order the inventory is the one-dimensional chain
// J' = (J + r - D)^+, so the segment is simulated directly on J.
inline ImprovementCheck improvement_identity_check(const ValueTable& table,
                                                   const DemandModel& demand,
                                                   std::int64_t segment_length,
                                                   std::int64_t n_paths,
                                                   std::uint64_t seed,
                                                   const StartDist& start) {
  require(segment_length >= 1, ErrorCode::BadParam,
          "segment length must be >= 1");
  require(n_paths >= 2, ErrorCode::BadParam, "need at least two paths");
  const CostParams costs = table.costs();
  const double r = table.r();
  const double cr = table.cost_rate();
  RngStream rng(derive_seed(seed, 17, /*salt=*/0x1d3a));

  double sum = 0.0, sum2 = 0.0;
  for (std::int64_t path = 0; path < n_paths; ++path) {
    double j = start.sample(rng);
    const double v0 = table.value(j);
    double cost = 0.0;
    for (std::int64_t s = 0; s < segment_length; ++s) {
      const double available = j + r;
      const double d_t = demand.sample(rng);
      cost += costs.h * std::max(available - d_t, 0.0) +
              costs.p * std::max(d_t - available, 0.0);
      j = std::max(available - d_t, 0.0);
    }
    const double x = cost - (v0 - table.value(j) +
                             static_cast<double>(segment_length) * cr);
    sum += x;
    sum2 += x * x;
  }
  ImprovementCheck out;
  out.n_paths = n_paths;
  out.segment_length = segment_length;
  const auto n = static_cast<double>(n_paths);
  out.residual = sum / n;
  const double var = std::max(0.0, (sum2 - sum * sum / n) / (n - 1.0));
  out.se = std::sqrt(var / n);
  return out;
}

}  // namespace lostsales
