#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "houli/model.hpp"
#include "houli/weighted.hpp"

// Drives the rescaled flow to its steady profile, reconstructs the closed-form
// blowup solution, validates it against the physical-time equations, and runs
// parameter sweeps.

namespace houli {

enum class Verdict { kConverged, kDiverged, kMaxSteps };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kConverged: return "converged";
    case Verdict::kDiverged: return "diverged";
    default: return "max-steps";
  }
}

struct HistoryRow {
  double tau = 0.0;
  double E = 0.0;
  double K = 0.0;
  double J = 0.0;
  double c_u = 0.0;
};

struct ProfileResult {
  ModelState profile;
  double c_u_inf = 0.0;
  double blowup_time = std::numeric_limits<double>::infinity();
  std::vector<HistoryRow> history;
  Verdict verdict = Verdict::kMaxSteps;
  // Extra diagnostics for viscous runs and reporting.
  double C_u_final = 1.0;
  double C_u_max = 1.0;
  double t_phys_final = 0.0;
  double residual = 0.0;
  std::string detail;  // populated when the run ends abnormally
};

struct SteadyOptions {
  double tol_j = 1e-10;
  double tol_dcu = 1e-12;  // stationarity of c_u per unit tau
  double max_tau = 200.0;
  double dtau = 5e-4;
  int record_stride = 100;
  double safeguard_E = 10.0;  // perturbation energy beyond this => diverged
};

// sup and L2 size of the rescaled right-hand side at a state: the maximum of
// the two component sup-norms plus the combined unweighted L2 norm.
inline double steady_residual(const Grid& g, const ModelState& s, const ModelParams& p,
                              double C_u) {
  RescalingState rs;
  rs.state = s;
  rs.C_u = C_u;
  const RescaledRhs r = rhs_rescaled(g, rs, p);
  const double sup = std::max(sup_abs(g, r.du), sup_abs(g, r.domega));
  const double l2 = std::hypot(l2_norm(r.du), l2_norm(r.domega));
  return sup + l2;
}

inline ProfileResult run_to_steady(const Grid& g, const ModelParams& p,
                                   const ModelState& initial, const SteadyOptions& opt = {}) {
  p.validate();
  ProfileResult res;
  RescalingState rs;
  rs.state = initial;
  rs.C_u = p.C_u0;
  res.C_u_max = rs.C_u;

  const ModelState ref = initial;  // energies measure the drift from the start
  const EnergyOptions light{0, 0.1, false, 0};

  double prev_record_tau = 0.0, prev_record_cu = 0.0;
  bool have_prev = false;

  // Evaluates the right-hand side at the current state, appends a history
  // row, and reports (J, c_u) for the stopping rule.
  auto record = [&]() {
    const RescaledRhs r = rhs_rescaled(g, rs, p);
    const ModelState pert{rs.state.u - ref.u, rs.state.omega - ref.omega};
    const EnergyReport er = energies(g, pert.u, pert.omega, r.du, r.domega, light);
    rs.c_u = r.c_u;
    res.history.push_back({rs.tau, er.E, er.K, er.J, r.c_u});
    return std::pair<double, double>(er.J, er.E);
  };

  try {
    while (true) {
      const auto [J, E] = record();
      const double cu_now = rs.c_u;
      if (E > opt.safeguard_E) {
        res.verdict = Verdict::kDiverged;
        res.detail = "perturbation energy " + std::to_string(E) + " exceeded safeguard";
        break;
      }
      if (J < opt.tol_j) {
        const bool cu_stationary =
            !have_prev ||
            std::fabs(cu_now - prev_record_cu) <= opt.tol_dcu * (rs.tau - prev_record_tau);
        if (cu_stationary) {
          res.verdict = Verdict::kConverged;
          break;
        }
      }
      prev_record_tau = rs.tau;
      prev_record_cu = cu_now;
      have_prev = true;
      if (rs.tau >= opt.max_tau) {
        res.verdict = Verdict::kMaxSteps;
        break;
      }
      for (int i = 0; i < opt.record_stride && rs.tau < opt.max_tau; ++i) {
        const double dt = stable_dtau(rs.state, p, opt.dtau);
        rs = step(g, rs, p, dt);
        res.C_u_max = std::max(res.C_u_max, rs.C_u);
      }
    }
  } catch (const BlowupInRescaledTime& b) {
    res.verdict = Verdict::kDiverged;
    res.detail = b.what();
  }

  res.profile = rs.state;
  res.c_u_inf = res.history.empty() ? rs.c_u : res.history.back().c_u;
  res.blowup_time = res.c_u_inf < 0.0 ? -1.0 / res.c_u_inf
                                      : std::numeric_limits<double>::infinity();
  res.C_u_final = rs.C_u;
  res.t_phys_final = rs.t_phys;
  res.residual = steady_residual(g, rs.state, p, rs.C_u);
  return res;
}

// Closed-form self-similar solution reconstructed from a converged profile:
// all three fields scale by 1/(1 + c_u_inf t) up to the blowup time.
struct BlowupSolution {
  ModelState profile;
  OddField psi_profile;
  double c_u_inf = 0.0;
  double T = 0.0;

  struct Snapshot {
    OddField u, omega, psi;
    double factor = 1.0;
  };

  Snapshot at(double t) const {
    const double denom = 1.0 + c_u_inf * t;
    if (!(t < T) || !(denom > 0.0))
      throw std::domain_error("self-similar solution is defined only for t < T");
    Snapshot s;
    s.factor = 1.0 / denom;
    s.u = s.factor * profile.u;
    s.omega = s.factor * profile.omega;
    s.psi = s.factor * psi_profile;
    return s;
  }
};

inline BlowupSolution reconstruct_blowup(const ProfileResult& r) {
  if (r.verdict != Verdict::kConverged)
    throw std::invalid_argument("blowup reconstruction needs a converged profile");
  if (!(r.c_u_inf < 0.0))
    throw std::invalid_argument("no blowup: scaling constant is not negative");
  BlowupSolution b;
  b.profile = r.profile;
  b.psi_profile = biot_savart(r.profile.omega);
  b.c_u_inf = r.c_u_inf;
  b.T = -1.0 / r.c_u_inf;
  return b;
}

namespace detail {

// One physical-time RK4 step; the constant-coefficient viscous part is an
// exact integrating factor here.
inline ModelState physical_step(const Grid& g, const ModelState& s, const ModelParams& p,
                                double dt) {
  const int M = std::max(s.u.modes(), s.omega.modes());
  auto y = pack(s, M, 0.0, 0.0);
  std::vector<double> lambda(2 * M + 2, 0.0);
  if (p.nu > 0.0)
    for (int k = 1; k <= M; ++k) {
      lambda[k - 1] = -p.nu * static_cast<double>(k) * k;
      lambda[M + k - 1] = lambda[k - 1];
    }
  auto nonlin = [&](double, const std::vector<double>& yy) {
    const ModelState st = unpack(yy, M);
    const PhysicalRhs r = rhs_physical(g, st, p);
    std::vector<double> dy(2 * M + 2, 0.0);
    for (int k = 1; k <= M; ++k) {
      dy[k - 1] = r.du.coeff(k) - lambda[k - 1] * yy[k - 1];
      dy[M + k - 1] = r.domega.coeff(k) - lambda[M + k - 1] * yy[M + k - 1];
    }
    return dy;
  };
  const auto ynew = lawson_rk4(y, 0.0, dt, lambda, nonlin);
  for (double v : ynew)
    if (!std::isfinite(v)) throw BlowupInRescaledTime(0.0);
  return unpack(ynew, M);
}

}  // namespace detail

// Advances the physical-time system from t0 to t_end with the advective
// step-size bound re-evaluated every step; on_sample(t, state) fires at every
// accepted step when provided.
template <class Callback>
inline ModelState evolve_physical(const Grid& g, ModelState s, const ModelParams& p, double t0,
                                  double t_end, double dt_base, Callback&& on_sample,
                                  bool* step_underflow = nullptr) {
  double t = t0;
  if (step_underflow) *step_underflow = false;
  while (t < t_end) {
    double dt = stable_dtau(s, p, dt_base);
    if (t + dt > t_end) dt = t_end - t;
    if (dt < 1e-12) {
      if (step_underflow) *step_underflow = true;
      break;
    }
    s = detail::physical_step(g, s, p, dt);
    t += dt;
    on_sample(t, s);
  }
  return s;
}

struct PhysicalCheckOptions {
  double horizon_frac = 0.9;      // fraction of T for blowup runs
  double fallback_horizon = 5.0;  // absolute horizon when no blowup is expected
  double dt = 5e-4;
  int record_stride = 10;
  double fit_window = 0.3;  // trailing fraction of records used in the fit
};

struct BlowupCheckReport {
  double T_expected = std::numeric_limits<double>::infinity();
  double T_fit = std::numeric_limits<double>::infinity();
  double rel_error = std::numeric_limits<double>::infinity();
  bool blowup_detected = false;
  bool partial = false;  // step-size underflow before the horizon
  double initial_sup_omega = 0.0;
  double max_sup_omega = 0.0;
  double final_sup_omega = 0.0;
  std::vector<std::pair<double, double>> trace;  // (t, sup |omega|)
};

// Evolves the physical equations from the converged profile and fits
// 1/sup|omega| against t (linear for the exact self-similar law); reports the
// fitted blowup time against -1/c_u_inf.
inline BlowupCheckReport physical_blowup_check(const Grid& g, const ProfileResult& res,
                                               const ModelParams& p,
                                               const PhysicalCheckOptions& opt = {}) {
  if (res.verdict != Verdict::kConverged)
    throw std::invalid_argument("physical check needs a converged profile");
  BlowupCheckReport rep;
  const bool expects_blowup = res.c_u_inf < 0.0;
  rep.T_expected = expects_blowup ? -1.0 / res.c_u_inf
                                  : std::numeric_limits<double>::infinity();
  const double t_end =
      expects_blowup ? opt.horizon_frac * rep.T_expected : opt.fallback_horizon;

  rep.initial_sup_omega = sup_abs(g, res.profile.omega);
  rep.trace.emplace_back(0.0, rep.initial_sup_omega);
  int counter = 0;
  evolve_physical(
      g, res.profile, p, 0.0, t_end, opt.dt,
      [&](double t, const ModelState& s) {
        if (++counter % opt.record_stride == 0 || t >= t_end)
          rep.trace.emplace_back(t, sup_abs(g, s.omega));
      },
      &rep.partial);

  for (const auto& [t, w] : rep.trace) rep.max_sup_omega = std::max(rep.max_sup_omega, w);
  rep.final_sup_omega = rep.trace.back().second;

  // Least squares y = p0 + q t on the trailing window, y = 1/sup|omega|.
  const size_t first = rep.trace.size() -
                       std::max<size_t>(2, static_cast<size_t>(opt.fit_window * rep.trace.size()));
  double st = 0, sy = 0, stt = 0, sty = 0;
  size_t cnt = 0;
  for (size_t i = first; i < rep.trace.size(); ++i) {
    const double t = rep.trace[i].first;
    const double y = 1.0 / rep.trace[i].second;
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++cnt;
  }
  const double det = cnt * stt - st * st;
  if (det > 0.0) {
    const double q = (cnt * sty - st * sy) / det;
    const double p0 = (sy - q * st) / cnt;
    if (q < 0.0) {
      rep.T_fit = -p0 / q;
      if (std::isfinite(rep.T_expected))
        rep.rel_error = std::fabs(rep.T_fit - rep.T_expected) / rep.T_expected;
    }
    // Detected: the inverse sup-norm is genuinely heading to zero.
    const double y0 = 1.0 / rep.initial_sup_omega;
    const double y_end = 1.0 / rep.final_sup_omega;
    rep.blowup_detected = (q < 0.0) && (y_end < 0.5 * y0) && rep.T_fit > 0.0;
  }
  return rep;
}

enum class SweepAxis { kA, kNu, kAlpha };

inline const char* sweep_axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::kA: return "a";
    case SweepAxis::kNu: return "nu";
    default: return "alpha";
  }
}

struct SweepRow {
  double value = 0.0;
  double c_u_inf = 0.0;
  double T = std::numeric_limits<double>::infinity();
  double E_final = 0.0;
  std::string verdict;
  std::string note;
};

// Initial data for a run: the approximate steady profile for the given
// parameters at the given truncation.
inline ModelState initial_profile(const ModelParams& p, int modes) {
  if (p.holder_mode()) return holder_profile(p.alpha, modes).state;
  ModelState s{OddField(modes), OddField(modes)};
  s.u.c[0] = 1.0;
  s.omega.c[0] = 1.0;
  return s;
}

// Independent run_to_steady per value; row errors are recorded, never fatal.
// Rows are distributed over jobs threads and merged in input order.
inline std::vector<SweepRow> sweep(SweepAxis axis, const std::vector<double>& values,
                                   const ModelParams& base, int modes,
                                   const SteadyOptions& opt = {}, int jobs = 1) {
  std::vector<SweepRow> rows(values.size());
  auto run_one = [&](size_t i) {
    SweepRow& row = rows[i];
    row.value = values[i];
    ModelParams p = base;
    switch (axis) {
      case SweepAxis::kA: p.a = values[i]; break;
      case SweepAxis::kNu: p.nu = values[i]; break;
      case SweepAxis::kAlpha: p.alpha = values[i]; break;
    }
    try {
      p.validate();
      const Grid g = default_grid_for(modes);
      const ProfileResult r = run_to_steady(g, p, initial_profile(p, modes), opt);
      row.c_u_inf = r.c_u_inf;
      row.T = r.blowup_time;
      row.E_final = r.history.empty() ? 0.0 : r.history.back().E;
      row.verdict = verdict_name(r.verdict);
      if (axis == SweepAxis::kA && values[i] < 0.6)
        row.note = "outside formulation";
      else if (r.verdict == Verdict::kConverged && r.c_u_inf == 0.0)
        row.note = "no blowup (degenerate scaling)";
    } catch (const std::exception& e) {
      row.verdict = std::string("error: ") + e.what();
    }
  };

  if (jobs <= 1 || values.size() <= 1) {
    for (size_t i = 0; i < values.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> ts;
    const int J = std::min<int>(jobs, static_cast<int>(values.size()));
    for (int t = 0; t < J; ++t)
      ts.emplace_back([&, t] {
        for (size_t i = t; i < values.size(); i += J) run_one(i);
      });
    for (auto& th : ts) th.join();
  }
  return rows;
}

}  // namespace houli
