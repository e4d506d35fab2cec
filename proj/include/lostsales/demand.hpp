#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "lostsales/errors.hpp"
#include "lostsales/rng.hpp"

namespace lostsales {

enum class DemandFamily { Pmf, Geometric, TwoPoint, Exponential };

inline const char* family_name(DemandFamily f) {
  switch (f) {
    case DemandFamily::Pmf: return "pmf";
    case DemandFamily::Geometric: return "geometric";
    case DemandFamily::TwoPoint: return "two_point";
    case DemandFamily::Exponential: return "exponential";
  }
  return "?";
}

// One-period demand law. Lattice models carry an explicit pmf over
// {0, d, 2d, ...} (index 0 is demand 0); continuous models carry only a
// sampler and closed-form moments, and every exact-mode operation on them
// refuses with NotLattice. Immutable after construction.
struct DemandModel {
  DemandFamily family = DemandFamily::Pmf;
  bool lattice = true;
  double span = 1.0;               // d
  std::vector<double> pmf;         // lattice only, sums to 1
  std::vector<double> cdf;         // prefix sums of pmf
  double tail_eps = 1e-12;
  double truncated_mass = 0.0;     // mass removed before renormalization
  double mu = 0.0;
  double sigma2 = 0.0;
  double rho = 0.0;                // geometric parameter
  double lambda = 0.0;             // exponential rate

  double max_value() const {
    return lattice ? span * static_cast<double>(pmf.size() - 1) : 0.0;
  }

  // F_D(x), right-continuous
  double cdf_at(double x) const {
    if (!lattice) {
      if (family == DemandFamily::Exponential)
        return x < 0.0 ? 0.0 : 1.0 - std::exp(-lambda * x);
      fail(ErrorCode::NotLattice, "cdf_at: no closed form for this sampler");
    }
    if (x < 0.0) return 0.0;
    auto k = static_cast<std::size_t>(std::floor(x / span + 1e-12));
    if (k >= cdf.size()) return 1.0;
    return cdf[k];
  }

  double sample(RngStream& rng) const {
    if (!lattice) {
      // exponential is the only continuous family
      return -std::log(rng.next_uniform_pos()) / lambda;
    }
    // inversion on the truncated, renormalized cdf
    const double u = rng.next_uniform();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t k = static_cast<std::size_t>(it - cdf.begin());
    if (k >= pmf.size()) k = pmf.size() - 1;
    return span * static_cast<double>(k);
  }
};

namespace detail {

inline void finalize_lattice(DemandModel& m) {
  double total = std::accumulate(m.pmf.begin(), m.pmf.end(), 0.0);
  require(total > 0.0, ErrorCode::NegativeMass, "pmf has no mass");
  for (double& q : m.pmf) q /= total;
  // drop a trailing all-zero tail so support length is tight
  while (m.pmf.size() > 1 && m.pmf.back() == 0.0) m.pmf.pop_back();
  m.cdf.resize(m.pmf.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < m.pmf.size(); ++k) {
    acc += m.pmf[k];
    m.cdf[k] = acc;
  }
  m.cdf.back() = 1.0;
  double mean = 0.0;
  for (std::size_t k = 0; k < m.pmf.size(); ++k)
    mean += m.span * static_cast<double>(k) * m.pmf[k];
  double var = 0.0;
  for (std::size_t k = 0; k < m.pmf.size(); ++k) {
    const double dx = m.span * static_cast<double>(k) - mean;
    var += dx * dx * m.pmf[k];
  }
  m.mu = mean;
  m.sigma2 = var;
  require(m.mu > 0.0, ErrorCode::ZeroVariance, "demand mean must be positive");
  require(m.sigma2 > 0.0, ErrorCode::ZeroVariance,
          "demand variance must be positive");
}

}  // namespace detail

inline DemandModel make_lattice_demand(std::vector<double> pmf, double span,
                                       double tail_eps = 1e-12) {
  require(span > 0.0, ErrorCode::BadSpan, "span must be positive");
  require(!pmf.empty(), ErrorCode::NegativeMass, "empty pmf");
  double total = 0.0;
  for (double q : pmf) {
    require(q >= 0.0, ErrorCode::NegativeMass, "pmf entry < 0");
    total += q;
  }
  require(std::abs(total - 1.0) <= 1e-12 * std::max(1.0, total) + 1e-12,
          ErrorCode::NegativeMass, "pmf must sum to 1 within 1e-12");
  std::size_t support = 0;
  for (double q : pmf)
    if (q > 0.0) ++support;
  require(support >= 2, ErrorCode::ZeroVariance,
          "single support point has zero variance");
  DemandModel m;
  m.family = DemandFamily::Pmf;
  m.lattice = true;
  m.span = span;
  m.tail_eps = tail_eps;
  m.pmf = std::move(pmf);
  detail::finalize_lattice(m);
  return m;
}

inline DemandModel make_geometric_demand(double rho, double tail_eps = 1e-12) {
  require(rho > 0.0 && rho < 1.0, ErrorCode::BadParam, "geometric needs rho in (0,1)");
  require(tail_eps > 0.0, ErrorCode::BadParam, "tail_eps must be positive");
  // truncate where residual mass P(D > K) = rho^{K+1} < tail_eps
  const double k_real = std::log(tail_eps) / std::log(rho);
  const auto k_max = static_cast<std::size_t>(std::ceil(k_real)) + 1;
  DemandModel m;
  m.family = DemandFamily::Geometric;
  m.lattice = true;
  m.span = 1.0;
  m.rho = rho;
  m.tail_eps = tail_eps;
  m.pmf.resize(k_max + 1);
  double q = 1.0 - rho;
  for (std::size_t k = 0; k <= k_max; ++k) {
    m.pmf[k] = q;
    q *= rho;
  }
  m.truncated_mass = std::pow(rho, static_cast<double>(k_max) + 1.0);
  detail::finalize_lattice(m);
  return m;
}

inline DemandModel make_two_point_demand(double high, double p_high) {
  require(high > 0.0, ErrorCode::BadParam, "two-point high value must be > 0");
  require(p_high > 0.0 && p_high < 1.0, ErrorCode::BadParam,
          "two-point probability must be in (0,1)");
  DemandModel m;
  m.family = DemandFamily::TwoPoint;
  m.lattice = true;
  m.span = high;  // support {0, high}
  m.pmf = {1.0 - p_high, p_high};
  detail::finalize_lattice(m);
  return m;
}

inline DemandModel make_exponential_demand(double lambda) {
  require(lambda > 0.0, ErrorCode::BadParam, "exponential needs lambda > 0");
  DemandModel m;
  m.family = DemandFamily::Exponential;
  m.lattice = false;
  m.lambda = lambda;
  m.mu = 1.0 / lambda;
  m.sigma2 = 1.0 / (lambda * lambda);
  return m;
}

struct Moments {
  double mu;
  double sigma2;
};

inline Moments moments(const DemandModel& m) { return {m.mu, m.sigma2}; }

// Increment law Y = D - r on the refined grid with span d' = d / refine.
// Y's support starts at -r; demand atom k sits at refined index k*refine,
// so Y at refined index j has value j*d' - r.
struct IncrementModel {
  DemandModel demand;
  double r = 0.0;
  int refine = 1;
  double span = 1.0;        // d'
  std::int64_t r_units = 0; // r / d'
  double mu_y = 0.0;
  double sigma2_y = 0.0;

  // F_Y(x) = F_D(x + r)
  double cdf_y(double x) const { return demand.cdf_at(x + r); }

  double sample_y(RngStream& rng) const { return demand.sample(rng) - r; }
};

inline IncrementModel increment_model(const DemandModel& demand, double r,
                                      int refine = 10) {
  require(r >= 0.0, ErrorCode::BadParam, "constant order r must be >= 0");
  require(r < demand.mu, ErrorCode::RTooLarge,
          "constant order r must be below the demand mean");
  require(refine >= 1, ErrorCode::BadParam, "refinement K must be >= 1");
  IncrementModel inc;
  inc.demand = demand;
  inc.r = r;
  inc.refine = refine;
  inc.mu_y = demand.mu - r;
  inc.sigma2_y = demand.sigma2;
  if (demand.lattice) {
    inc.span = demand.span / static_cast<double>(refine);
    const double units = r / inc.span;
    const double rounded = std::round(units);
    require(std::abs(units - rounded) <= 1e-9 * std::max(1.0, units),
            ErrorCode::GridMismatch,
            "r is not a multiple of the refined span d/K");
    inc.r_units = static_cast<std::int64_t>(rounded);
  } else {
    inc.span = 0.0;
    inc.r_units = 0;
  }
  return inc;
}

}  // namespace lostsales
