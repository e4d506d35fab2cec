#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "lostsales/demand.hpp"
#include "lostsales/errors.hpp"
#include "lostsales/rng.hpp"

namespace lostsales {

// Distribution of the first weak ascending ladder height S_{tau+} of the
// walk S_t = sum(D_i - r). Heights live on {0, d', 2d', ...}; mass absorbed
// at exactly 0 counts (weak convention).
struct LadderDistribution {
  enum class Method { ExactAbsorbing, MonteCarlo };

  std::vector<double> pmf;   // pmf[k] = P(S_{tau+} = k * span)
  double span = 1.0;         // d' (histogram bin width in MC continuous mode)
  double residual_mass = 0.0;
  Method method = Method::ExactAbsorbing;
  bool lattice = true;
  std::uint64_t sample_count = 0;

  // sample statistics, MC mode only (bin-free)
  double sample_mean = 0.0;
  double sample_var = 0.0;
  double tau_mean = 0.0;

  double total_mass() const {
    return std::accumulate(pmf.begin(), pmf.end(), 0.0);
  }
};

struct LadderSummary {
  LadderDistribution dist;
  double mu_plus = 0.0;
  double sigma2_plus = 0.0;
  double sigma_plus = 0.0;
  double kappa = 0.0;
  bool lattice = true;
  double span = 1.0;        // grid span d'
  double kappa_span = 1.0;  // maximal lattice span of G+ used in kappa
};

// Renewal measure U+(x) = sum_t G+^{*t}(x) tabulated on the grid, together
// with the correction g_r(x) = U+(x) - x/mu+ - kappa. U+ is a right-continuous
// step function; between grid points it is constant, so left-step sums give
// exact integrals at grid points. g_r is only meaningful at renewal lattice
// points and is never interpolated.
struct RenewalTable {
  double span = 1.0;
  double mu_plus = 0.0;
  double kappa = 0.0;
  std::int64_t renewal_step = 1;  // G+ support lattice, in grid units
  std::vector<double> u;  // renewal mass at k*span
  std::vector<double> U;  // U+(k*span), cumulative
  std::vector<double> g;  // g_r(k*span); meaningful at renewal lattice points

  bool analytic_exponential = false;
  double lambda = 0.0;

  double x_max() const {
    if (analytic_exponential) return std::numeric_limits<double>::infinity();
    return span * static_cast<double>(U.size() - 1);
  }

  double U_at(double x) const {
    if (x < 0.0) return 0.0;
    if (analytic_exponential) return 1.0 + lambda * x;
    auto k = static_cast<std::size_t>(std::floor(x / span + 1e-9));
    require(k < U.size(), ErrorCode::BeyondTable, "U_at beyond table range");
    return U[k];
  }

  // exact integral of the step function U+ over [0, x]
  double integral_U(double x) const {
    if (x <= 0.0) return 0.0;
    if (analytic_exponential) return x + 0.5 * lambda * x * x;
    const double pos = x / span;
    auto k = static_cast<std::size_t>(std::floor(pos + 1e-9));
    require(k < U.size() + 1 && x <= x_max() + 1e-9 * span,
            ErrorCode::BeyondTable, "integral_U beyond table range");
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) acc += U[i];
    acc *= span;
    const double frac = x - span * static_cast<double>(k);
    if (frac > 1e-12 * span && k < U.size()) acc += U[k] * frac;
    return acc;
  }

  // integral of g_r over [a, b] with the same step convention
  double integral_g(double a, double b) const {
    if (analytic_exponential) return 0.0;
    if (b < a) return -integral_g(b, a);
    const double step_U = integral_U_interval(a, b);
    const double linear = (b * b - a * a) / (2.0 * mu_plus) + kappa * (b - a);
    return step_U - linear;
  }

 private:
  double integral_U_interval(double a, double b) const {
    a = std::max(a, 0.0);
    if (b <= a) return 0.0;
    return integral_U(b) - integral_U(a);
  }
};

struct LadderOptions {
  double mass_tol = 1e-12;
  std::int64_t max_depth_units = 1 << 23;  // hard memory guard
  std::int64_t max_iters = 4'000'000;
};

namespace detail {

// Shared helper: does the demand model admit the O(n) geometric convolution
// shortcut? The shortcut assumes the untruncated geometric tail; with
// tail_eps <= 1e-10 the discrepancy against the stored pmf is below every
// tolerance used in this project.
inline bool geometric_fast_path(const DemandModel& d) {
  return d.family == DemandFamily::Geometric && d.tail_eps <= 1e-10;
}

}  // namespace detail

// Exact distribution of S_{tau+} by propagating probability mass over the
// strictly negative lattice levels and absorbing everything that lands at
// >= 0. Terminates because mu_Y > 0 drives the unabsorbed mass to zero.
inline LadderDistribution ascending_ladder_exact(const IncrementModel& inc,
                                                 const LadderOptions& opts = {}) {
  require(inc.demand.lattice, ErrorCode::NotLattice,
          "exact ladder needs a lattice demand model");
  const auto K = static_cast<std::int64_t>(inc.refine);
  const std::int64_t R = inc.r_units;
  const auto& q = inc.demand.pmf;
  const auto n_atoms = static_cast<std::int64_t>(q.size());
  const std::int64_t max_jump = (n_atoms - 1) * K - R;
  require(max_jump > 0, ErrorCode::RTooLarge,
          "increment law has no upward support");

  LadderDistribution out;
  out.span = inc.span;
  out.method = LadderDistribution::Method::ExactAbsorbing;
  out.lattice = true;
  out.pmf.assign(static_cast<std::size_t>(max_jump) + 1, 0.0);

  // cur[i] = mass at level -(i+1)
  std::int64_t depth = std::max<std::int64_t>(R + K, 64);
  std::vector<double> cur(static_cast<std::size_t>(depth), 0.0);

  // first step: from level 0
  double unabsorbed = 0.0;
  for (std::int64_t k = 0; k < n_atoms; ++k) {
    const std::int64_t lvl = k * K - R;
    if (lvl >= 0) {
      out.pmf[static_cast<std::size_t>(lvl)] += q[static_cast<std::size_t>(k)];
    } else {
      cur[static_cast<std::size_t>(-lvl - 1)] += q[static_cast<std::size_t>(k)];
      unabsorbed += q[static_cast<std::size_t>(k)];
    }
  }

  const bool fast = detail::geometric_fast_path(inc.demand);
  const double rho = inc.demand.rho;
  std::vector<double> next(cur.size(), 0.0);
  std::vector<double> scratch;  // A(s) for the geometric recursion
  std::int64_t deepest = depth;  // deepest active level index + 1

  std::int64_t iters = 0;
  while (unabsorbed > opts.mass_tol) {
    require(++iters <= opts.max_iters, ErrorCode::NoConvergence,
            "ladder propagation did not drain within the iteration budget");
    // active window of cur
    std::int64_t hi = -1;  // largest index with mass
    for (std::int64_t i = deepest - 1; i >= 0; --i) {
      if (cur[static_cast<std::size_t>(i)] != 0.0) { hi = i; break; }
    }
    if (hi < 0) break;
    const std::int64_t low_needed = hi + R + 1;  // deepest reachable next level
    if (low_needed > static_cast<std::int64_t>(cur.size())) {
      require(low_needed <= opts.max_depth_units, ErrorCode::DepthExceeded,
              "ladder propagation exceeded the depth budget");
      cur.resize(static_cast<std::size_t>(low_needed), 0.0);
      next.resize(static_cast<std::size_t>(low_needed), 0.0);
    }
    std::fill(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(low_needed), 0.0);

    if (fast) {
      // A(s) = cur_level(s) + rho * A(s - K), s ascending from the deepest level
      const std::int64_t s_lo = -(hi + 1);
      const std::int64_t s_hi = max_jump - 1 + R;  // highest pre-shift level needed
      const std::int64_t len = s_hi - s_lo + 1;
      scratch.assign(static_cast<std::size_t>(len), 0.0);
      for (std::int64_t s = s_lo; s <= s_hi; ++s) {
        double a = 0.0;
        if (s < 0) a = cur[static_cast<std::size_t>(-s - 1)];
        if (s - K >= s_lo) a += rho * scratch[static_cast<std::size_t>(s - K - s_lo)];
        scratch[static_cast<std::size_t>(s - s_lo)] = a;
      }
      const double w = 1.0 - rho;
      for (std::int64_t t = s_lo - R; t <= s_hi - R; ++t) {
        const double m = w * scratch[static_cast<std::size_t>(t + R - s_lo)];
        if (m == 0.0) continue;
        if (t >= 0) {
          out.pmf[static_cast<std::size_t>(t)] += m;
        } else {
          next[static_cast<std::size_t>(-t - 1)] += m;
        }
      }
    } else {
      for (std::int64_t i = 0; i <= hi; ++i) {
        const double m = cur[static_cast<std::size_t>(i)];
        if (m == 0.0) continue;
        const std::int64_t lvl = -(i + 1);
        for (std::int64_t k = 0; k < n_atoms; ++k) {
          const double qk = q[static_cast<std::size_t>(k)];
          if (qk == 0.0) continue;
          const std::int64_t nxt = lvl + k * K - R;
          if (nxt >= 0) {
            out.pmf[static_cast<std::size_t>(nxt)] += m * qk;
          } else {
            next[static_cast<std::size_t>(-nxt - 1)] += m * qk;
          }
        }
      }
    }
    cur.swap(next);
    deepest = low_needed;
    unabsorbed = 0.0;
    for (std::int64_t i = 0; i < deepest; ++i)
      unabsorbed += cur[static_cast<std::size_t>(i)];
  }

  out.residual_mass = std::max(unabsorbed, 1.0 - out.total_mass());
  while (out.pmf.size() > 1 && out.pmf.back() == 0.0) out.pmf.pop_back();
  return out;
}

// Empirical ladder distribution from independent walks. Lattice models are
// walked in exact integer units; continuous models accumulate a histogram
// plus bin-free sample moments.
inline LadderDistribution ascending_ladder_mc(const IncrementModel& inc,
                                              std::uint64_t n_walks,
                                              std::uint64_t seed,
                                              std::uint64_t step_cap = 10'000'000) {
  require(n_walks > 0, ErrorCode::BadParam, "n_walks must be positive");
  RngStream rng(derive_seed(seed, 0, /*salt=*/0x1adde7));
  LadderDistribution out;
  out.method = LadderDistribution::Method::MonteCarlo;
  out.sample_count = n_walks;
  out.lattice = inc.demand.lattice;

  double sum = 0.0, sum2 = 0.0, tau_sum = 0.0;
  if (inc.demand.lattice) {
    out.span = inc.span;
    const auto K = static_cast<std::int64_t>(inc.refine);
    const std::int64_t R = inc.r_units;
    const auto& cdf = inc.demand.cdf;
    std::vector<double> hist;
    for (std::uint64_t w = 0; w < n_walks; ++w) {
      std::int64_t s = 0;
      std::uint64_t t = 0;
      do {
        require(++t <= step_cap, ErrorCode::WalkCap,
                "ladder walk exceeded the per-walk step cap");
        const double u = rng.next_uniform();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        auto k = static_cast<std::int64_t>(it - cdf.begin());
        if (k >= static_cast<std::int64_t>(cdf.size()))
          k = static_cast<std::int64_t>(cdf.size()) - 1;
        s += k * K - R;
      } while (s < 0);
      if (static_cast<std::size_t>(s) >= hist.size())
        hist.resize(static_cast<std::size_t>(s) + 1, 0.0);
      hist[static_cast<std::size_t>(s)] += 1.0;
      const double h = static_cast<double>(s) * inc.span;
      sum += h;
      sum2 += h * h;
      tau_sum += static_cast<double>(t);
    }
    out.pmf = std::move(hist);
    for (double& v : out.pmf) v /= static_cast<double>(n_walks);
  } else {
    // histogram bin: a small fraction of the demand scale
    out.span = inc.demand.mu / 64.0;
    std::vector<double> hist;
    for (std::uint64_t w = 0; w < n_walks; ++w) {
      double s = 0.0;
      std::uint64_t t = 0;
      do {
        require(++t <= step_cap, ErrorCode::WalkCap,
                "ladder walk exceeded the per-walk step cap");
        s += inc.sample_y(rng);
      } while (s < 0.0);
      auto b = static_cast<std::size_t>(std::floor(s / out.span));
      if (b >= hist.size()) hist.resize(b + 1, 0.0);
      hist[b] += 1.0;
      sum += s;
      sum2 += s * s;
      tau_sum += static_cast<double>(t);
    }
    out.pmf = std::move(hist);
    for (double& v : out.pmf) v /= static_cast<double>(n_walks);
  }
  const double n = static_cast<double>(n_walks);
  out.sample_mean = sum / n;
  out.sample_var = std::max(0.0, sum2 / n - out.sample_mean * out.sample_mean);
  out.tau_mean = tau_sum / n;
  out.residual_mass = 0.0;
  return out;
}

// Moments of S_{tau+} and the renewal-expansion constant kappa. The paper's
// lattice case formula assumes span 1; for a ladder law living on a lattice
// of span s the constant becomes (sigma^2 + mu^2 + s*mu) / (2 mu^2). The span
// used is the maximal lattice span of G+ itself (gcd of its support), which
// can be coarser than the working grid.
inline LadderSummary ladder_moments_kappa(const LadderDistribution& dist,
                                          bool lattice, double span) {
  LadderSummary s;
  s.dist = dist;
  s.lattice = lattice;
  s.span = span;

  double mu = 0.0, var = 0.0;
  if (dist.method == LadderDistribution::Method::MonteCarlo && !dist.lattice) {
    mu = dist.sample_mean;
    var = dist.sample_var;
  } else {
    const double mass = dist.total_mass();
    require(mass > 0.0, ErrorCode::DegenerateLadder, "empty ladder pmf");
    for (std::size_t k = 0; k < dist.pmf.size(); ++k)
      mu += span * static_cast<double>(k) * dist.pmf[k];
    mu /= mass;
    for (std::size_t k = 0; k < dist.pmf.size(); ++k) {
      const double dx = span * static_cast<double>(k) - mu;
      var += dx * dx * dist.pmf[k];
    }
    var /= mass;
  }
  require(mu > 0.0, ErrorCode::DegenerateLadder,
          "ladder height mean is zero (all mass at the origin)");

  s.mu_plus = mu;
  s.sigma2_plus = var;
  s.sigma_plus = std::sqrt(var);

  double kappa_span = span;
  if (lattice) {
    // maximal span of the support lattice
    const double thresh =
        1e-12 * *std::max_element(dist.pmf.begin(), dist.pmf.end());
    std::int64_t g = 0;
    for (std::size_t k = 1; k < dist.pmf.size(); ++k) {
      if (dist.pmf[k] > thresh) g = std::gcd(g, static_cast<std::int64_t>(k));
    }
    if (g > 0) kappa_span = span * static_cast<double>(g);
  }
  s.kappa_span = kappa_span;
  s.kappa = lattice ? (var + mu * mu + kappa_span * mu) / (2.0 * mu * mu)
                    : (var + mu * mu) / (2.0 * mu * mu);
  return s;
}

// Discrete renewal recursion with a zero atom beta = g+(0):
//   (1 - beta) u(k) = delta(k) + sum_{j>=1} g+(j) u(k-j).
inline RenewalTable renewal_measure(const LadderSummary& summary, double x_max) {
  const auto& dist = summary.dist;
  require(dist.lattice, ErrorCode::NotLattice,
          "renewal_measure needs a lattice ladder distribution");
  const double beta = dist.pmf.empty() ? 0.0 : dist.pmf[0];
  require(1.0 - beta > 1e-12, ErrorCode::AtomOne,
          "ladder distribution is a point mass at zero");

  RenewalTable tab;
  tab.span = summary.span;
  tab.mu_plus = summary.mu_plus;
  tab.kappa = summary.kappa;
  tab.renewal_step = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::llround(summary.kappa_span / summary.span)));
  const auto n = static_cast<std::size_t>(std::floor(x_max / tab.span + 1e-9)) + 1;
  tab.u.assign(n, 0.0);
  const double inv = 1.0 / (1.0 - beta);
  const std::size_t jmax = dist.pmf.size();
  for (std::size_t k = 0; k < n; ++k) {
    double acc = (k == 0) ? 1.0 : 0.0;
    const std::size_t j_hi = std::min(k, jmax - 1);
    for (std::size_t j = 1; j <= j_hi; ++j)
      acc += dist.pmf[j] * tab.u[k - j];
    tab.u[k] = acc * inv;
  }
  tab.U.resize(n);
  tab.g.resize(n);
  double run = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    run += tab.u[k];
    tab.U[k] = run;
    const double x = tab.span * static_cast<double>(k);
    tab.g[k] = run - x / tab.mu_plus - tab.kappa;
  }
  return tab;
}

// Exponential demand: G+ is Exp(lambda), U+(x) = 1 + lambda x exactly, and
// the correction vanishes. Used by the analytic value-function mode.
inline LadderSummary exponential_ladder_summary(double lambda) {
  require(lambda > 0.0, ErrorCode::BadParam, "lambda must be positive");
  LadderSummary s;
  s.lattice = false;
  s.span = 0.0;
  s.kappa_span = 0.0;
  s.mu_plus = 1.0 / lambda;
  s.sigma2_plus = 1.0 / (lambda * lambda);
  s.sigma_plus = 1.0 / lambda;
  s.kappa = 1.0;
  s.dist.method = LadderDistribution::Method::ExactAbsorbing;
  s.dist.lattice = false;
  return s;
}

inline RenewalTable exponential_renewal_table(double lambda) {
  RenewalTable tab;
  tab.analytic_exponential = true;
  tab.lambda = lambda;
  tab.mu_plus = 1.0 / lambda;
  tab.kappa = 1.0;
  tab.span = 0.0;
  return tab;
}

// ---------------------------------------------------------------------------
// Stationary inventory level under a constant order policy
// ---------------------------------------------------------------------------

struct StationaryOptions {
  double tv_tol = 1e-12;
  int refine = 10;               // K; r must sit on the grid d/K
  double j_cap = -1.0;           // inventory units; <0 selects the default
  std::int64_t max_cap_units = 8'000'000;
  std::int64_t max_iters = 50'000'000;
  bool warm_start = true;
  double mean_tol = 0.0;         // >0 enables Aitken-extrapolated mean stopping
};

struct StationaryInventory {
  std::vector<double> pmf;   // over {0, d', 2d', ...}
  double span = 1.0;
  double mean = 0.0;
  std::int64_t iterations = 0;
  double tv_residual = 0.0;
  double cap_mass = 0.0;     // stationary mass parked in the top cell
  bool mean_extrapolated = false;
};

namespace detail {

// One Lindley step pi' = law((J + r - D)^+) on the refined grid.
// Generic route: O(n * atoms). Fast route (geometric demand): O(n).
inline void lindley_step(const std::vector<double>& pi, std::vector<double>& out,
                         const DemandModel& demand, std::int64_t R,
                         std::int64_t K, std::vector<double>& scratch) {
  const auto n = static_cast<std::int64_t>(pi.size());
  std::fill(out.begin(), out.end(), 0.0);
  if (geometric_fast_path(demand)) {
    const double rho = demand.rho;
    const double w = 1.0 - rho;
    // A(s) = pi(s) + rho * A(s + K), descending
    scratch.assign(pi.size(), 0.0);
    for (std::int64_t s = n - 1; s >= 0; --s) {
      double a = pi[static_cast<std::size_t>(s)];
      if (s + K < n) a += rho * scratch[static_cast<std::size_t>(s + K)];
      scratch[static_cast<std::size_t>(s)] = a;
    }
    for (std::int64_t j = 1; j < n; ++j) {
      const std::int64_t s = j - R;
      double m;
      if (s >= 0) {
        m = w * scratch[static_cast<std::size_t>(s)];
      } else {
        const std::int64_t k0 = (-s + K - 1) / K;
        const std::int64_t s0 = s + k0 * K;
        m = (s0 < n) ? w * std::pow(rho, static_cast<double>(k0)) *
                           scratch[static_cast<std::size_t>(s0)]
                     : 0.0;
      }
      out[static_cast<std::size_t>(j)] = m;
    }
    // atom at zero, evaluated directly to avoid cancellation:
    // P(J' = 0) = sum_{k: kK >= R} q_k * P(pi <= kK - R)
    {
      double atom0 = 0.0;
      double run = 0.0;  // cdf of pi up to the current index
      std::int64_t pos = 0;
      std::int64_t k = (R + K - 1) / K;
      double qk = w * std::pow(rho, static_cast<double>(k));
      for (;; ++k, qk *= rho) {
        const std::int64_t idx = k * K - R;
        const std::int64_t top = std::min(idx, n - 1);
        while (pos <= top) {
          run += pi[static_cast<std::size_t>(pos)];
          ++pos;
        }
        if (idx >= n - 1) {
          // every remaining demand atom floors the whole grid
          atom0 += std::pow(rho, static_cast<double>(k)) * run;
          break;
        }
        atom0 += qk * run;
      }
      out[0] = atom0;
    }
    // up-moves past the cap park in the top cell, matching the generic route
    {
      double suffix = 0.0;
      for (std::int64_t k = 0; k * K < R; ++k) {
        const double qk = w * std::pow(rho, static_cast<double>(k));
        const std::int64_t i0 = n - R + k * K;  // sources that overshoot
        double tail = 0.0;
        for (std::int64_t i = std::max<std::int64_t>(i0, 0); i < n; ++i)
          tail += pi[static_cast<std::size_t>(i)];
        suffix += qk * tail;
      }
      out[static_cast<std::size_t>(n - 1)] += suffix;
      // the direct terms above already wrote into cells shifted past the end;
      // remove the double count at the top cell itself
      // (out[n-1] from the j-loop corresponds to exactly j = n-1, no overlap)
    }
  } else {
    const auto& q = demand.pmf;
    const auto n_atoms = static_cast<std::int64_t>(q.size());
    for (std::int64_t k = 0; k < n_atoms; ++k) {
      const double qk = q[static_cast<std::size_t>(k)];
      if (qk == 0.0) continue;
      const std::int64_t shift = R - k * K;  // j = i + shift
      if (shift <= 0) {
        // everything at i < -shift floors to zero
        const std::int64_t split = std::min(-shift, n);
        double floored = 0.0;
        for (std::int64_t i = 0; i < split; ++i)
          floored += pi[static_cast<std::size_t>(i)];
        out[0] += qk * floored;
        for (std::int64_t i = split; i < n; ++i)
          out[static_cast<std::size_t>(i + shift)] += qk * pi[static_cast<std::size_t>(i)];
      } else {
        const std::int64_t top = n - 1 - shift;  // clamp into the cap cell
        for (std::int64_t i = 0; i <= top; ++i)
          out[static_cast<std::size_t>(i + shift)] += qk * pi[static_cast<std::size_t>(i)];
        double clipped = 0.0;
        for (std::int64_t i = std::max<std::int64_t>(top + 1, 0); i < n; ++i)
          clipped += pi[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(n - 1)] += qk * clipped;
      }
    }
  }
}

}  // namespace detail

// Fixed point of J' = (J + r - D)^+ on the truncated grid [0, J_cap].
// Mass that would overshoot the cap is parked in the top cell; if the
// stationary top-cell mass exceeds tv_tol the cap doubles (up to a hard
// limit) and the iteration restarts.
inline StationaryInventory stationary_inventory(const DemandModel& demand,
                                                double r,
                                                const StationaryOptions& opts = {}) {
  require(demand.lattice, ErrorCode::NotLattice,
          "stationary_inventory needs a lattice demand model");
  const IncrementModel inc = increment_model(demand, r, opts.refine);
  const std::int64_t R = inc.r_units;
  const auto K = static_cast<std::int64_t>(inc.refine);
  const double dspan = inc.span;
  const double mu_y = inc.mu_y;

  double cap_inv = opts.j_cap;
  if (cap_inv <= 0.0) {
    cap_inv = demand.mu *
              std::max(64.0, 32.0 * std::sqrt(demand.sigma2) / mu_y);
  }
  auto cap_units = static_cast<std::int64_t>(std::ceil(cap_inv / dspan)) + 1;

  StationaryInventory res;
  res.span = dspan;

  while (true) {
    require(cap_units <= opts.max_cap_units, ErrorCode::CapExceeded,
            "stationary grid exceeded the hard cap");
    const auto n = static_cast<std::size_t>(cap_units);
    std::vector<double> pi(n, 0.0), nxt(n, 0.0), scratch;

    if (opts.warm_start && mu_y < 0.5 * demand.mu) {
      // geometric profile matched to the Kingman mean sigma^2 / (2 mu_Y)
      const double m_units = demand.sigma2 / (2.0 * mu_y) / dspan;
      const double theta = m_units / (1.0 + m_units);
      double w = 1.0 - theta;
      for (std::size_t j = 0; j < n; ++j) {
        pi[j] = w;
        w *= theta;
        if (w < 1e-300) break;
      }
      double tot = std::accumulate(pi.begin(), pi.end(), 0.0);
      for (double& v : pi) v /= tot;
    } else {
      pi[0] = 1.0;
    }

    double tv = 1.0;
    std::int64_t it = 0;
    bool done = false;
    // Aitken state for the mean sequence, sampled every 64 sweeps
    double m_prev2 = 0.0, m_prev1 = 0.0;
    double ait_prev = std::numeric_limits<double>::quiet_NaN();
    int ait_hits = 0;
    res.mean_extrapolated = false;
    double ait_value = 0.0;

    while (!done) {
      require(++it <= opts.max_iters, ErrorCode::NoConvergence,
              "stationary iteration budget exhausted");
      detail::lindley_step(pi, nxt, demand, R, K, scratch);
      // renormalize against drift
      double tot = std::accumulate(nxt.begin(), nxt.end(), 0.0);
      if (tot > 0.0) {
        const double inv = 1.0 / tot;
        for (double& v : nxt) v *= inv;
      }
      tv = 0.0;
      for (std::size_t j = 0; j < n; ++j) tv += std::abs(nxt[j] - pi[j]);
      tv *= 0.5;
      pi.swap(nxt);
      if (tv < opts.tv_tol) done = true;

      if (opts.mean_tol > 0.0 && (it & 63) == 0) {
        double m = 0.0;
        for (std::size_t j = 0; j < n; ++j)
          m += dspan * static_cast<double>(j) * pi[j];
        const double d1 = m - m_prev1, d0 = m_prev1 - m_prev2;
        if (it > 192 && std::abs(d0 - d1) > 0.0) {
          const double ait = m - d1 * d1 / (d1 - d0);
          if (!std::isnan(ait_prev) && std::abs(ait - ait_prev) < opts.mean_tol) {
            if (++ait_hits >= 3) {
              done = true;
              res.mean_extrapolated = true;
              ait_value = ait;
            }
          } else {
            ait_hits = 0;
          }
          ait_prev = ait;
        }
        m_prev2 = m_prev1;
        m_prev1 = m;
      }
    }

    const double cap_mass = pi[n - 1];
    if (cap_mass > opts.tv_tol && cap_units < opts.max_cap_units) {
      cap_units = std::min(cap_units * 2, opts.max_cap_units);
      continue;
    }
    require(cap_mass <= std::max(opts.tv_tol, 1e-9), ErrorCode::CapExceeded,
            "stationary mass beyond J_cap exceeds the tolerance");

    res.pmf = std::move(pi);
    res.iterations = it;
    res.tv_residual = tv;
    res.cap_mass = cap_mass;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      mean += dspan * static_cast<double>(j) * res.pmf[j];
    res.mean = res.mean_extrapolated ? ait_value : mean;
    return res;
  }
}

// ---------------------------------------------------------------------------
// Spitzer series for E[J_inf]
// ---------------------------------------------------------------------------

struct SpitzerResult {
  double mean = 0.0;
  double last_term = 0.0;
  std::int64_t t_max = 0;
};

// Partial sum  sum_{t=1}^{t_max} (1/t) E[(t r - D_1 - ... - D_t)^+].
// Lattice demand: every term by exact t-fold convolution, truncated above
// t_max * r (mass beyond that bound can never contribute to any term).
// Continuous demand: Monte Carlo over mc_budget paths.
inline SpitzerResult spitzer_mean(const DemandModel& demand, double r,
                                  std::int64_t t_max,
                                  std::uint64_t mc_budget = 200'000,
                                  std::uint64_t seed = 0x5f17ce5) {
  require(r >= 0.0, ErrorCode::BadParam, "r must be >= 0");
  require(r < demand.mu, ErrorCode::RTooLarge, "r must be below the demand mean");
  require(t_max >= 1, ErrorCode::BadParam, "t_max must be >= 1");
  SpitzerResult res;
  res.t_max = t_max;
  if (r == 0.0) return res;

  if (demand.lattice) {
    const double d = demand.span;
    const auto cap = static_cast<std::int64_t>(
                         std::floor(static_cast<double>(t_max) * r / d)) + 1;
    std::vector<double> s(static_cast<std::size_t>(cap) + 1, 0.0);
    std::vector<double> nxt(s.size(), 0.0);
    s[0] = 1.0;
    const auto& q = demand.pmf;
    const auto n_atoms = static_cast<std::int64_t>(q.size());
    const bool fast = detail::geometric_fast_path(demand);
    std::vector<double> acc;  // geometric prefix recursion
    for (std::int64_t t = 1; t <= t_max; ++t) {
      const auto n = static_cast<std::int64_t>(s.size());
      if (fast) {
        // next(s) = (1-rho) * A(s), A(s) = pi(s) + rho A(s-1)
        const double rho = demand.rho;
        acc.assign(s.size(), 0.0);
        double a = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
          a = s[static_cast<std::size_t>(i)] + rho * a;
          acc[static_cast<std::size_t>(i)] = a;
        }
        const double w = 1.0 - rho;
        for (std::int64_t i = 0; i < n; ++i)
          nxt[static_cast<std::size_t>(i)] = w * acc[static_cast<std::size_t>(i)];
      } else {
        std::fill(nxt.begin(), nxt.end(), 0.0);
        for (std::int64_t k = 0; k < n_atoms && k < n; ++k) {
          const double qk = q[static_cast<std::size_t>(k)];
          if (qk == 0.0) continue;
          for (std::int64_t i = 0; i + k < n; ++i)
            nxt[static_cast<std::size_t>(i + k)] += qk * s[static_cast<std::size_t>(i)];
        }
      }
      s.swap(nxt);
      const double bound = static_cast<double>(t) * r;
      double term = 0.0;
      for (std::int64_t i = 0;; ++i) {
        const double v = d * static_cast<double>(i);
        if (v >= bound || i >= n) break;
        term += (bound - v) * s[static_cast<std::size_t>(i)];
      }
      term /= static_cast<double>(t);
      res.mean += term;
      res.last_term = term;
    }
    return res;
  }

  // Monte Carlo route
  RngStream rng(derive_seed(seed, 0, /*salt=*/0x59172e5));
  std::vector<double> acc(static_cast<std::size_t>(t_max) + 1, 0.0);
  for (std::uint64_t path = 0; path < mc_budget; ++path) {
    double s = 0.0;
    for (std::int64_t t = 1; t <= t_max; ++t) {
      s += demand.sample(rng);
      const double v = static_cast<double>(t) * r - s;
      if (v > 0.0) acc[static_cast<std::size_t>(t)] += v;
    }
  }
  for (std::int64_t t = 1; t <= t_max; ++t) {
    const double term =
        acc[static_cast<std::size_t>(t)] /
        (static_cast<double>(mc_budget) * static_cast<double>(t));
    res.mean += term;
    res.last_term = term;
  }
  return res;
}

}  // namespace lostsales
