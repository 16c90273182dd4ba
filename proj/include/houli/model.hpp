#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "houli/fields.hpp"
#include "houli/grid.hpp"

// Right-hand sides of the advection-strength family
//
//   u_t + 2a psi u_x = 2 u psi_x + nu u_xx
//   w_t + 2a psi w_x = (u^2)_x + nu w_xx,     -psi_xx = w
//
// in physical time and in the dynamically rescaled frame (where c_u(tau)
// enters and the viscous coefficient carries the accumulated scale C_u(tau)),
// plus the time stepper and the approximate steady profiles.

namespace houli {

struct ModelParams {
  double a = 1.0;
  double nu = 0.0;
  double alpha = 1.0;
  double C_u0 = 1.0;

  // Holder-exponent runs (alpha < 1) use the closed-form normalization and
  // exclude viscosity; the smooth branch has no alpha restriction beyond the
  // type invariant.
  void validate() const {
    if (!(nu >= 0.0)) throw std::invalid_argument("nu must be >= 0");
    if (!(C_u0 > 0.0)) throw std::invalid_argument("C_u0 must be > 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0, 1]");
    if (alpha < 1.0 && !(alpha > 7.0 / 8.0))
      throw std::invalid_argument("Holder exponent must satisfy alpha > 7/8");
    if (alpha < 1.0 && nu > 0.0)
      throw std::invalid_argument("viscous Holder runs are not supported: the closed-form "
                                  "normalization has no viscous counterpart here");
  }
  bool holder_mode() const { return alpha < 1.0; }
};

struct ModelState {
  OddField u;
  OddField omega;
};

struct RescalingState {
  ModelState state;
  double c_u = 0.0;
  double C_u = 1.0;
  double t_phys = 0.0;
  double tau = 0.0;
};

class BlowupInRescaledTime : public std::runtime_error {
 public:
  explicit BlowupInRescaledTime(double tau)
      : std::runtime_error("coefficients left the representable range at tau = " +
                           std::to_string(tau)),
        tau_(tau) {}
  double tau() const { return tau_; }

 private:
  double tau_;
};

inline OddField second_derivative(const OddField& f) {
  OddField g = f;
  for (int k = 1; k <= g.modes(); ++k)
    g.c[k - 1] *= -static_cast<double>(k) * k;
  return g;
}

namespace detail {

// The r2r transforms on a grid of n points reduce to a real FFT of length n,
// so n with only small prime factors keeps them off FFTW's generic-prime
// paths (several times slower at the sizes used here).
inline bool fft_friendly(int n) {
  for (int p : {2, 3, 5, 7})
    while (n % p == 0) n /= p;
  return n == 1;
}

}  // namespace detail

// Smallest convenient grid on which quadratic products of two M-band fields
// are exact through their full bandwidth 2M (any half grid N >= 2M + 1
// carries sine modes 1..2M, and in exact arithmetic every such grid computes
// identical product coefficients), which the weighted truncation in
// rhs_rescaled relies on.  Rounded up to the next 7-smooth even size.
inline Grid default_grid_for(int modes) {
  int n = std::max(4 * modes + 2, 8);
  while (!detail::fft_friendly(n)) n += 2;
  return Grid(n);
}

namespace detail {

// The two nonlinear right-hand sides,
//   Au = -2a psi u_x + 2 u psi_x,   Aw = -2a psi w_x + 2 u u_x,
// carried to the full product bandwidth the grid can represent (all of it,
// 2M, on the default grid) so callers can project or truncate as their
// estimates require.  All five forward transforms are shared across the four
// products.
struct NonlinearTerms {
  OddField Au;
  OddField Aw;
};

inline NonlinearTerms assemble_nonlinear(const Grid& g, const ModelState& s, double a) {
  const int M = std::max(s.u.modes(), s.omega.modes());
  const int N = g.half();
  // Mode k <= M of a degree-2M product is alias-free iff 2N - k > 2M for all
  // such k, i.e. n > 3M strictly.
  if (M > N - 1 || g.n <= 3 * M)
    throw std::invalid_argument("grid too small for alias-free products: need n > 3*modes");
  const int K = std::min(2 * M, N - 1);

  const OddField psi = biot_savart(s.omega);
  const auto su = odd_samples(g, s.u);
  const auto spsi = odd_samples(g, psi);
  const auto sux = even_samples(g, differentiate(s.u));
  const auto spsix = even_samples(g, differentiate(psi));
  const auto swx = even_samples(g, differentiate(s.omega));

  // Interior node j corresponds to su[j-1] and even-sample index j.
  std::vector<double> pu(N - 1), pw(N - 1);
  for (int j = 1; j < N; ++j) {
    const double adv_u = spsi[j - 1] * sux[j];
    const double str_u = su[j - 1] * spsix[j];
    const double adv_w = spsi[j - 1] * swx[j];
    const double sq_u = su[j - 1] * sux[j];
    pu[j - 1] = -2.0 * a * adv_u + 2.0 * str_u;
    pw[j - 1] = -2.0 * a * adv_w + 2.0 * sq_u;
  }
  NonlinearTerms out;
  out.Au = truncated(odd_from_samples(g, pu), K);
  out.Aw = truncated(odd_from_samples(g, pw), K);
  return out;
}

// rho-orthogonal projection of the assembled update onto the retained band.
// The basis coordinates are triangular in the Fourier basis (suffix sums on
// the omega side, prefix sums of the derivative on the u side), so the
// projection keeps every coefficient below the cutoff and corrects only the
// top mode: mode M of the omega update absorbs the whole assembled tail, and
// mode M of the u update cancels sum_k k (du)_k, pinning d/dtau u_x(0) to
// zero exactly.  Plain coefficient truncation is not orthogonal for the
// singular-weight pairing (a discarded mode pairs order-one with every
// retained one); with this projection the semidiscrete flow satisfies the
// same weighted energy identities as the continuous system, band-limited
// states are left untouched, and the enstrophy flux through the cutoff is
// carried out instead of reflected.
inline void project_weighted(const NonlinearTerms& nl, const ModelState& s, double cu,
                             int M, OddField& du, OddField& domega) {
  du = OddField(M);
  domega = OddField(M);
  double tail = 0.0;
  for (int j = M; j <= nl.Aw.modes(); ++j) tail += nl.Aw.coeff(j);
  for (int k = 1; k < M; ++k) domega.c[k - 1] = nl.Aw.coeff(k) + cu * s.omega.coeff(k);
  domega.c[M - 1] = tail + cu * s.omega.coeff(M);
  double acc = 0.0;
  for (int k = 1; k < M; ++k) {
    du.c[k - 1] = nl.Au.coeff(k) + cu * s.u.coeff(k);
    acc += k * du.c[k - 1];
  }
  du.c[M - 1] = -acc / M;
}

}  // namespace detail

struct PhysicalRhs {
  OddField du;
  OddField domega;
};

inline PhysicalRhs rhs_physical(const Grid& g, const ModelState& s, const ModelParams& p) {
  const int M = std::max(s.u.modes(), s.omega.modes());
  auto nl = detail::assemble_nonlinear(g, s, p.a);
  if (p.nu > 0.0) {
    nl.Au = nl.Au + p.nu * second_derivative(s.u);
    nl.Aw = nl.Aw + p.nu * second_derivative(s.omega);
  }
  // Weighted projection of the physical update.  Unlike the rescaled frame
  // there is no normalization holding u_x(0) fixed, so the u-side projection
  // applies to the update minus its origin-slope carrier sin(x); the algebra
  // reduces to lumping the k-weighted tail into the top mode.  This makes the
  // physical semidiscrete flow the exact change-of-variables image of the
  // rescaled one, so a converged profile collapses self-similarly without
  // cutoff reflection.
  PhysicalRhs r{OddField(M), OddField(M)};
  for (int k = 1; k < M; ++k) {
    r.du.c[k - 1] = nl.Au.coeff(k);
    r.domega.c[k - 1] = nl.Aw.coeff(k);
  }
  double wtail = 0.0, ktail = 0.0;
  for (int j = M; j <= nl.Aw.modes(); ++j) wtail += nl.Aw.coeff(j);
  for (int j = M; j <= nl.Au.modes(); ++j) ktail += j * nl.Au.coeff(j);
  r.domega.c[M - 1] = wtail;
  r.du.c[M - 1] = ktail / M;
  return r;
}

namespace detail {

// c_u = -A_x(0) / u_x(0) with A the assembled full-bandwidth u-equation
// right-hand side including the viscous term, so that the total update
// A + c_u u has vanishing derivative at the origin.  On the full bandwidth
// this ratio equals the closed form 2(a-1) psi_x(0) - nu C_u u_xxx(0)/u_x(0)
// identically; exact conservation of u_x(0) along the semidiscrete flow is
// then pinned by the top-mode correction of the weighted projection.
inline double cu_from_assembled(const OddField& Au_full, const OddField& u) {
  const double ux0 = deriv_at_zero(u, 1);
  if (std::fabs(ux0) < 1e-8)
    throw std::domain_error("degenerate normalization: u_x(0) = " + std::to_string(ux0));
  return -deriv_at_zero(Au_full, 1) / ux0;
}

}  // namespace detail

inline double normalization_cu(const Grid& g, const ModelState& s, const ModelParams& p,
                               double C_u) {
  if (p.holder_mode()) return (p.alpha - 1.0) * psi_x_at_zero(s.omega);
  OddField Au = detail::assemble_nonlinear(g, s, p.a).Au;
  if (p.nu > 0.0) Au = Au + (p.nu * C_u) * second_derivative(s.u);
  return detail::cu_from_assembled(Au, s.u);
}

struct RescaledRhs {
  OddField du;
  OddField domega;
  double c_u = 0.0;      // d/dtau log C_u
  double dt_phys = 0.0;  // d/dtau t(tau) = C_u
};

inline RescaledRhs rhs_rescaled(const Grid& g, const RescalingState& rs, const ModelParams& p) {
  const int M = std::max(rs.state.u.modes(), rs.state.omega.modes());
  auto nl = detail::assemble_nonlinear(g, rs.state, p.a);
  const double nuC = p.nu * rs.C_u;
  if (nuC > 0.0) {
    nl.Au = nl.Au + nuC * second_derivative(rs.state.u);
    nl.Aw = nl.Aw + nuC * second_derivative(rs.state.omega);
  }
  RescaledRhs r;
  if (p.holder_mode()) {
    // Rough profiles use the closed-form scaling factor instead of the
    // origin-slope ratio, but evolve in the same constrained space: the
    // correction to the approximate profile is finite-energy, so its
    // origin slope is frozen by the same projection as the smooth branch.
    const double cu = (p.alpha - 1.0) * psi_x_at_zero(rs.state.omega);
    detail::project_weighted(nl, rs.state, cu, M, r.du, r.domega);
    r.c_u = cu;
  } else {
    const double cu = detail::cu_from_assembled(nl.Au, rs.state.u);
    detail::project_weighted(nl, rs.state, cu, M, r.du, r.domega);
    r.c_u = cu;
  }
  r.dt_phys = rs.C_u;
  return r;
}

namespace detail {

// One integrating-factor RK4 step for y' = diag(lambda) y + N(tau, y) with
// lambda frozen across the step; reduces to classical RK4 when lambda = 0.
template <class Nonlinear>
inline std::vector<double> lawson_rk4(const std::vector<double>& y, double tau, double dtau,
                                      const std::vector<double>& lambda, Nonlinear&& nonlin) {
  const size_t n = y.size();
  std::vector<double> E(n), E2(n);
  for (size_t i = 0; i < n; ++i) {
    E[i] = std::exp(lambda[i] * dtau * 0.5);
    E2[i] = E[i] * E[i];
  }
  const auto k1 = nonlin(tau, y);
  std::vector<double> z(n);
  for (size_t i = 0; i < n; ++i) z[i] = E[i] * (y[i] + 0.5 * dtau * k1[i]);
  const auto k2 = nonlin(tau + 0.5 * dtau, z);
  for (size_t i = 0; i < n; ++i) z[i] = E[i] * y[i] + 0.5 * dtau * k2[i];
  const auto k3 = nonlin(tau + 0.5 * dtau, z);
  for (size_t i = 0; i < n; ++i) z[i] = E2[i] * y[i] + dtau * E[i] * k3[i];
  const auto k4 = nonlin(tau + dtau, z);
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i)
    out[i] = E2[i] * y[i] +
             (dtau / 6.0) * (E2[i] * k1[i] + 2.0 * E[i] * k2[i] + 2.0 * E[i] * k3[i] + k4[i]);
  return out;
}

inline std::vector<double> pack(const ModelState& s, int M, double logCu, double t_phys) {
  std::vector<double> y(2 * M + 2, 0.0);
  for (int k = 1; k <= M; ++k) {
    y[k - 1] = s.u.coeff(k);
    y[M + k - 1] = s.omega.coeff(k);
  }
  y[2 * M] = logCu;
  y[2 * M + 1] = t_phys;
  return y;
}

inline ModelState unpack(const std::vector<double>& y, int M) {
  ModelState s{OddField(M), OddField(M)};
  for (int k = 1; k <= M; ++k) {
    s.u.c[k - 1] = y[k - 1];
    s.omega.c[k - 1] = y[M + k - 1];
  }
  return s;
}

}  // namespace detail

// Advances (u, omega, log C_u, t_phys) by one step of rescaled time dtau.
// The stiff viscous part is handled by the per-mode integrating factor
// exp(-nu C_u k^2 dtau) with C_u frozen at the step start; its in-step drift
// is folded into the nonstiff remainder.  c_u is recomputed at every stage;
// the returned c_u is the exact value at the incoming state (callers that
// need it at the new state re-evaluate the right-hand side there).
inline RescalingState step(const Grid& g, const RescalingState& rs, const ModelParams& p,
                           double dtau) {
  const int M = std::max(rs.state.u.modes(), rs.state.omega.modes());
  auto y = detail::pack(rs.state, M, std::log(rs.C_u), rs.t_phys);

  std::vector<double> lambda(2 * M + 2, 0.0);
  if (p.nu > 0.0) {
    const double nuC = p.nu * rs.C_u;
    for (int k = 1; k <= M; ++k) {
      lambda[k - 1] = -nuC * static_cast<double>(k) * k;
      lambda[M + k - 1] = lambda[k - 1];
    }
  }

  double cu_at_start = rs.c_u;
  bool first_eval = true;
  auto nonlin = [&](double, const std::vector<double>& yy) {
    RescalingState s;
    s.state = detail::unpack(yy, M);
    s.C_u = std::exp(yy[2 * M]);
    RescaledRhs r = rhs_rescaled(g, s, p);
    if (first_eval) {
      cu_at_start = r.c_u;
      first_eval = false;
    }
    std::vector<double> dy(2 * M + 2);
    for (int k = 1; k <= M; ++k) {
      dy[k - 1] = r.du.coeff(k) - lambda[k - 1] * yy[k - 1];
      dy[M + k - 1] = r.domega.coeff(k) - lambda[M + k - 1] * yy[M + k - 1];
    }
    dy[2 * M] = r.c_u;
    dy[2 * M + 1] = r.dt_phys;
    return dy;
  };

  const auto ynew = detail::lawson_rk4(y, rs.tau, dtau, lambda, nonlin);
  for (double v : ynew)
    if (!std::isfinite(v) || std::fabs(v) > 1e12) throw BlowupInRescaledTime(rs.tau);

  RescalingState out;
  out.state = detail::unpack(ynew, M);
  out.c_u = cu_at_start;
  out.C_u = std::exp(ynew[2 * M]);
  out.t_phys = ynew[2 * M + 1];
  out.tau = rs.tau + dtau;
  return out;
}

// Clamps dtau so the advective bound 2a * sup|psi| * M * dtau <= 3/2 holds;
// sup|psi| is bounded by the coefficient l1 norm of psi.
inline double stable_dtau(const ModelState& s, const ModelParams& p, double dtau) {
  double psi_l1 = 0.0;
  for (int k = 1; k <= s.omega.modes(); ++k)
    psi_l1 += std::fabs(s.omega.c[k - 1]) / (static_cast<double>(k) * k);
  const int M = std::max(s.u.modes(), s.omega.modes());
  const double speed = 2.0 * std::fabs(p.a) * psi_l1 * std::max(M, 1);
  if (!(dtau > 0.0)) throw std::invalid_argument("dtau must be positive");
  // Advective Courant cap: the classical RK4 stability interval on the
  // imaginary axis has radius 2*sqrt(2); 1.5 leaves a margin for the
  // non-normal part of the transport operator.  The top-mode speed bound
  // only constrains stability, not accuracy: resolved scales are O(1).
  const double cap = 1.5;
  if (speed * dtau > cap) dtau = cap / speed;
  return dtau;
}

// Approximate self-similar profile with Holder-exponent cusp:
//   omega = sgn(x) |sin x|^alpha, u = sgn(x) |sin x|^((1+alpha)/2),
// sampled on a fine grid, transformed, and truncated to the requested mode
// count; c_u = (alpha - 1) psi_x(0) of the truncated vorticity.
struct HolderProfile {
  ModelState state;
  OddField psi;
  double c_u = 0.0;
};

inline HolderProfile holder_profile(double alpha, int modes, int fine_factor = 8) {
  if (!(alpha > 7.0 / 8.0 && alpha <= 1.0))
    throw std::invalid_argument("Holder exponent must satisfy 7/8 < alpha <= 1");
  if (modes < 1) throw std::invalid_argument("need at least one mode");
  const Grid fine(std::max(fine_factor, 4) * modes);
  const int Nf = fine.half();
  // Interior half-grid nodes lie in (0, pi) where sgn = +1 and |sin| = sin.
  std::vector<double> su(Nf - 1), sw(Nf - 1);
  const double beta = 0.5 * (1.0 + alpha);
  for (int j = 1; j < Nf; ++j) {
    const double s = std::sin(kPi * j / Nf);
    sw[j - 1] = std::pow(s, alpha);
    su[j - 1] = std::pow(s, beta);
  }
  HolderProfile hp;
  hp.state.u = truncated(odd_from_samples(fine, su), modes);
  hp.state.omega = truncated(odd_from_samples(fine, sw), modes);
  hp.psi = biot_savart(hp.state.omega);
  hp.c_u = (alpha - 1.0) * psi_x_at_zero(hp.state.omega);
  return hp;
}

// Residual of the approximate profile under the inviscid rescaled flow:
//   F1 = (c + 2 psi_x) u - 2a psi u_x,  F2 = c w + (u^2)_x - 2a psi w_x,
// assembled exactly (grid sized for the full quadratic products, no
// truncation of the result).  alpha = 1 uses the smooth profile (sin x at
// the given truncation) with c = 2(a-1) psi_x(0); alpha < 1 uses the
// Holder profile with its own normalization.
struct ErrorTerms {
  OddField F1;
  OddField F2;
  double c_u = 0.0;
};

inline ErrorTerms error_terms(const ModelParams& p, int modes) {
  p.validate();
  if (modes < 1) throw std::invalid_argument("need at least one mode");
  ModelState s;
  double cu;
  if (p.holder_mode()) {
    HolderProfile hp = holder_profile(p.alpha, modes);
    s = std::move(hp.state);
    cu = hp.c_u;
  } else {
    s.u = OddField(modes);
    s.omega = OddField(modes);
    s.u.c[0] = 1.0;
    s.omega.c[0] = 1.0;
    cu = 2.0 * (p.a - 1.0) * psi_x_at_zero(s.omega);
  }
  const Grid g(8 * std::max(modes, 1));
  const OddField psi = biot_savart(s.omega);
  const EvenField ux = differentiate(s.u);
  const EvenField wx = differentiate(s.omega);
  const EvenField psix = differentiate(psi);

  ErrorTerms e;
  e.c_u = cu;
  e.F1 = cu * s.u + 2.0 * multiply_dealiased(g, s.u, psix) +
         (-2.0 * p.a) * multiply_dealiased(g, psi, ux);
  e.F2 = cu * s.omega + 2.0 * multiply_dealiased(g, s.u, ux) +
         (-2.0 * p.a) * multiply_dealiased(g, psi, wx);
  return e;
}

}  // namespace houli
