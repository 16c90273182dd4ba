#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "houli/grid.hpp"

namespace houli {

// Odd 2pi-periodic field f(x) = sum_{k=1}^{M} c[k-1] sin(kx).
// f(0) = f(pi) = 0 by construction.
struct OddField {
  std::vector<double> c;

  OddField() = default;
  explicit OddField(int modes) : c(modes, 0.0) {}
  explicit OddField(std::vector<double> coeffs) : c(std::move(coeffs)) {}

  int modes() const { return static_cast<int>(c.size()); }
  double coeff(int k) const { return (k >= 1 && k <= modes()) ? c[k - 1] : 0.0; }
};

// Even 2pi-periodic field g(x) = sum_{k=0}^{M} d[k] cos(kx).
struct EvenField {
  std::vector<double> d;

  EvenField() = default;
  explicit EvenField(int modes) : d(modes + 1, 0.0) {}
  explicit EvenField(std::vector<double> coeffs) : d(std::move(coeffs)) {
    if (d.empty()) d.assign(1, 0.0);
  }

  int modes() const { return static_cast<int>(d.size()) - 1; }
  double coeff(int k) const { return (k >= 0 && k <= modes()) ? d[k] : 0.0; }
};

namespace detail {

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// One FFTW plan plus its in-place work buffer.  The FFTW planner is not
// thread safe, so creation and destruction are serialized; execution is not.
class R2rPlan {
 public:
  R2rPlan(int len, fftw_r2r_kind kind) : len_(len) {
    buf_ = static_cast<double*>(fftw_malloc(sizeof(double) * len));
    if (!buf_) throw std::bad_alloc();
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_ = fftw_plan_r2r_1d(len, buf_, buf_, kind, FFTW_ESTIMATE);
    if (!plan_) {
      fftw_free(buf_);
      throw std::runtime_error("fftw plan creation failed");
    }
  }
  ~R2rPlan() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(buf_);
  }
  R2rPlan(const R2rPlan&) = delete;
  R2rPlan& operator=(const R2rPlan&) = delete;

  double* buf() { return buf_; }
  int len() const { return len_; }
  void execute() { fftw_execute(plan_); }

 private:
  int len_;
  double* buf_;
  fftw_plan plan_;
};

// Plans are cached per thread, keyed by (length, kind); no lock on the hot
// path and no sharing across threads.
inline R2rPlan& cached_plan(int len, fftw_r2r_kind kind) {
  thread_local std::map<std::pair<int, int>, std::unique_ptr<R2rPlan>> cache;
  auto& slot = cache[{len, static_cast<int>(kind)}];
  if (!slot) slot = std::make_unique<R2rPlan>(len, kind);
  return *slot;
}

}  // namespace detail

// Samples of f at the interior half-grid nodes x_j = pi j / N, j = 1..N-1,
// where N = g.half().  Endpoints are omitted: an odd periodic field vanishes
// there identically.
inline std::vector<double> odd_samples(const Grid& g, const OddField& f) {
  const int N = g.half();
  if (f.modes() > N - 1)
    throw std::invalid_argument("grid too small for odd field: need n >= 2*modes + 2");
  auto& p = detail::cached_plan(N - 1, FFTW_RODFT00);
  double* b = p.buf();
  for (int k = 0; k < N - 1; ++k) b[k] = (k < f.modes()) ? f.c[k] : 0.0;
  p.execute();
  std::vector<double> out(N - 1);
  for (int j = 0; j < N - 1; ++j) out[j] = 0.5 * b[j];
  return out;
}

// Inverse of odd_samples: recovers all N-1 sine coefficients exactly for trig
// polynomials of degree <= N-1.
inline OddField odd_from_samples(const Grid& g, const std::vector<double>& samples) {
  const int N = g.half();
  if (static_cast<int>(samples.size()) != N - 1)
    throw std::invalid_argument("odd_from_samples expects N-1 interior samples");
  auto& p = detail::cached_plan(N - 1, FFTW_RODFT00);
  double* b = p.buf();
  std::copy(samples.begin(), samples.end(), b);
  p.execute();
  std::vector<double> c(N - 1);
  const double scale = 1.0 / N;
  for (int k = 0; k < N - 1; ++k) c[k] = scale * b[k];
  return OddField(std::move(c));
}

// Samples of g at x_j = pi j / N, j = 0..N inclusive (N+1 values).
inline std::vector<double> even_samples(const Grid& g, const EvenField& f) {
  const int N = g.half();
  if (f.modes() > N)
    throw std::invalid_argument("grid too small for even field: need n >= 2*modes");
  auto& p = detail::cached_plan(N + 1, FFTW_REDFT00);
  double* b = p.buf();
  b[0] = f.d[0];
  b[N] = (f.modes() >= N) ? f.d[N] : 0.0;
  for (int k = 1; k < N; ++k) b[k] = (k <= f.modes()) ? 0.5 * f.d[k] : 0.0;
  p.execute();
  return std::vector<double>(b, b + N + 1);
}

inline EvenField even_from_samples(const Grid& g, const std::vector<double>& samples) {
  const int N = g.half();
  if (static_cast<int>(samples.size()) != N + 1)
    throw std::invalid_argument("even_from_samples expects N+1 samples");
  auto& p = detail::cached_plan(N + 1, FFTW_REDFT00);
  double* b = p.buf();
  std::copy(samples.begin(), samples.end(), b);
  p.execute();
  std::vector<double> d(N + 1);
  const double scale = 1.0 / N;
  d[0] = 0.5 * scale * b[0];
  for (int k = 1; k < N; ++k) d[k] = scale * b[k];
  d[N] = 0.5 * scale * b[N];
  return EvenField(std::move(d));
}

inline OddField truncated(const OddField& f, int modes) {
  std::vector<double> c(modes, 0.0);
  const int m = std::min(modes, f.modes());
  std::copy(f.c.begin(), f.c.begin() + m, c.begin());
  return OddField(std::move(c));
}

inline EvenField truncated(const EvenField& f, int modes) {
  std::vector<double> d(modes + 1, 0.0);
  const int m = std::min(modes, f.modes());
  std::copy(f.d.begin(), f.d.begin() + m + 1, d.begin());
  return EvenField(std::move(d));
}

// d/dx of a sine series is a cosine series with d_k = k c_k (d_0 = 0).
inline EvenField differentiate(const OddField& f) {
  EvenField g(f.modes());
  for (int k = 1; k <= f.modes(); ++k) g.d[k] = k * f.c[k - 1];
  return g;
}

inline OddField differentiate(const EvenField& f) {
  OddField g(f.modes());
  for (int k = 1; k <= f.modes(); ++k) g.c[k - 1] = -k * f.d[k];
  return g;
}

// Stream function of the vorticity: -psi_xx = omega with psi odd periodic,
// i.e. psi_k = omega_k / k^2 mode by mode.
inline OddField biot_savart(const OddField& omega) {
  OddField psi(omega.modes());
  for (int k = 1; k <= omega.modes(); ++k)
    psi.c[k - 1] = omega.c[k - 1] / (static_cast<double>(k) * k);
  return psi;
}

// psi_x(0) = sum omega_k / k, the velocity scale the normalization conditions
// hinge on; equals the moment integral -(1/2pi) * int y omega(y) dy.
inline double psi_x_at_zero(const OddField& omega) {
  double s = 0.0;
  for (int k = omega.modes(); k >= 1; --k) s += omega.c[k - 1] / k;
  return s;
}

// Odd-order derivative of a sine series at x = 0.  Even orders vanish there
// identically and are rejected; orders beyond 3 are not needed.
inline double deriv_at_zero(const OddField& f, int order) {
  if (order % 2 == 0)
    throw std::invalid_argument("even-order derivative of an odd field vanishes at 0");
  if (order != 1 && order != 3)
    throw std::invalid_argument("deriv_at_zero supports orders 1 and 3");
  double s = 0.0;
  if (order == 1) {
    for (int k = f.modes(); k >= 1; --k) s += static_cast<double>(k) * f.c[k - 1];
  } else {
    for (int k = f.modes(); k >= 1; --k)
      s -= static_cast<double>(k) * k * k * f.c[k - 1];
  }
  return s;
}

// sin(x) * f and cos(x) * f as exact coefficient shifts (no grid, no
// rounding beyond the additions themselves).
inline EvenField mul_sin(const OddField& f) {
  const int M = f.modes();
  EvenField g(M + 1);
  for (int k = 1; k <= M; ++k) {
    g.d[k - 1] += 0.5 * f.c[k - 1];
    g.d[k + 1] -= 0.5 * f.c[k - 1];
  }
  return g;
}

inline OddField mul_cos(const OddField& f) {
  const int M = f.modes();
  OddField g(M + 1);
  for (int k = 1; k <= M; ++k) {
    g.c[k] += 0.5 * f.c[k - 1];
    if (k >= 2) g.c[k - 2] += 0.5 * f.c[k - 1];
  }
  return g;
}

inline OddField mul_sin(const EvenField& f) {
  const int M = f.modes();
  OddField g(M + 1);
  g.c[0] += f.d[0];
  for (int k = 1; k <= M; ++k) {
    g.c[k] += 0.5 * f.d[k];
    if (k >= 2) g.c[k - 2] -= 0.5 * f.d[k];
  }
  return g;
}

inline EvenField mul_cos(const EvenField& f) {
  const int M = f.modes();
  EvenField g(M + 1);
  g.d[1] += f.d[0];
  for (int k = 1; k <= M; ++k) {
    g.d[k + 1] += 0.5 * f.d[k];
    if (k == 1) g.d[0] += 0.5 * f.d[k];
    if (k >= 2) g.d[k - 1] += 0.5 * f.d[k];
  }
  return g;
}

namespace detail {

inline std::vector<double> odd_samples_closed(const Grid& g, const OddField& f) {
  const int N = g.half();
  std::vector<double> v(N + 1, 0.0);
  auto interior = odd_samples(g, f);
  std::copy(interior.begin(), interior.end(), v.begin() + 1);
  return v;
}

}  // namespace detail

// Pointwise products evaluated on the grid, transformed back, and truncated
// to min(g.dealias_cutoff(), sum of operand degrees).  The 2/3 cutoff keeps
// quadratic products alias-free provided the caller sized the grid so that
// cutoff + deg(f) + deg(h) < n; the default model grids (n = 4M) satisfy it.
inline EvenField multiply_dealiased(const Grid& g, const OddField& f, const OddField& h) {
  const int N = g.half();
  if (std::max(f.modes(), h.modes()) > N - 1)
    throw std::invalid_argument("product grid too small: need n >= 2*modes + 2");
  auto a = detail::odd_samples_closed(g, f);
  auto b = detail::odd_samples_closed(g, h);
  for (int j = 0; j <= N; ++j) a[j] *= b[j];
  auto full = even_from_samples(g, a);
  return truncated(full, std::min(g.dealias_cutoff(), f.modes() + h.modes()));
}

inline OddField multiply_dealiased(const Grid& g, const OddField& f, const EvenField& h) {
  const int N = g.half();
  if (f.modes() > N - 1 || h.modes() > N)
    throw std::invalid_argument("product grid too small: need n >= 2*modes + 2");
  auto a = odd_samples(g, f);
  auto b = even_samples(g, h);
  for (int j = 1; j < N; ++j) a[j - 1] *= b[j];
  auto full = odd_from_samples(g, a);
  return truncated(full, std::min(g.dealias_cutoff(), f.modes() + h.modes()));
}

inline OddField multiply_dealiased(const Grid& g, const EvenField& h, const OddField& f) {
  return multiply_dealiased(g, f, h);
}

inline EvenField multiply_dealiased(const Grid& g, const EvenField& f, const EvenField& h) {
  const int N = g.half();
  if (std::max(f.modes(), h.modes()) > N)
    throw std::invalid_argument("product grid too small: need n >= 2*modes");
  auto a = even_samples(g, f);
  auto b = even_samples(g, h);
  for (int j = 0; j <= N; ++j) a[j] *= b[j];
  auto full = even_from_samples(g, a);
  return truncated(full, std::min(g.dealias_cutoff(), f.modes() + h.modes()));
}

// Pointwise evaluation by the three-term recurrence for sin(kx), cos(kx);
// O(modes) per point with error growth ~ modes * eps.
inline double eval(const OddField& f, double x) {
  const double c2 = 2.0 * std::cos(x);
  double skm1 = 0.0, sk = std::sin(x);
  double acc = 0.0;
  for (int k = 1; k <= f.modes(); ++k) {
    acc += f.c[k - 1] * sk;
    const double skp1 = c2 * sk - skm1;
    skm1 = sk;
    sk = skp1;
  }
  return acc;
}

inline double eval(const EvenField& f, double x) {
  const double c2 = 2.0 * std::cos(x);
  double ckm1 = 1.0, ck = std::cos(x);
  double acc = f.d[0];
  for (int k = 1; k <= f.modes(); ++k) {
    acc += f.d[k] * ck;
    const double ckp1 = c2 * ck - ckm1;
    ckm1 = ck;
    ck = ckp1;
  }
  return acc;
}

// Unweighted L2 norm over the period (Parseval).
inline double l2_norm(const OddField& f) {
  double s = 0.0;
  for (double v : f.c) s += v * v;
  return std::sqrt(kPi * s);
}

inline double l2_norm(const EvenField& f) {
  double s = 2.0 * f.d[0] * f.d[0];
  for (int k = 1; k <= f.modes(); ++k) s += f.d[k] * f.d[k];
  return std::sqrt(kPi * s);
}

inline double sup_abs(const Grid& g, const OddField& f) {
  auto v = odd_samples(g, f);
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

// Linear field algebra; mismatched truncations pad with zeros.
inline OddField operator+(const OddField& a, const OddField& b) {
  OddField r(std::max(a.modes(), b.modes()));
  for (int k = 1; k <= r.modes(); ++k) r.c[k - 1] = a.coeff(k) + b.coeff(k);
  return r;
}

inline OddField operator-(const OddField& a, const OddField& b) {
  OddField r(std::max(a.modes(), b.modes()));
  for (int k = 1; k <= r.modes(); ++k) r.c[k - 1] = a.coeff(k) - b.coeff(k);
  return r;
}

inline OddField operator*(double s, const OddField& a) {
  OddField r = a;
  for (double& v : r.c) v *= s;
  return r;
}

inline EvenField operator+(const EvenField& a, const EvenField& b) {
  EvenField r(std::max(a.modes(), b.modes()));
  for (int k = 0; k <= r.modes(); ++k) r.d[k] = a.coeff(k) + b.coeff(k);
  return r;
}

inline EvenField operator-(const EvenField& a, const EvenField& b) {
  EvenField r(std::max(a.modes(), b.modes()));
  for (int k = 0; k <= r.modes(); ++k) r.d[k] = a.coeff(k) - b.coeff(k);
  return r;
}

inline EvenField operator*(double s, const EvenField& a) {
  EvenField r = a;
  for (double& v : r.d) v *= s;
  return r;
}

// Sine coefficients from samples at the full-grid nodes x_j = 2 pi j / n.
// Samples must be odd-symmetric about 0 up to tol (relative to the sample
// scale); the two half-periods are averaged so rounding asymmetry cancels.
inline OddField sine_transform(const Grid& g, const std::vector<double>& samples,
                               double tol = 1e-10) {
  if (static_cast<int>(samples.size()) != g.n)
    throw std::invalid_argument("sine_transform expects one sample per grid node");
  const int N = g.half();
  double scale = 1.0;
  for (double v : samples) scale = std::max(scale, std::fabs(v));
  double worst = std::max(std::fabs(samples[0]), std::fabs(samples[N]));
  for (int j = 1; j < N; ++j)
    worst = std::max(worst, 0.5 * std::fabs(samples[j] + samples[g.n - j]));
  if (worst > tol * scale)
    throw std::invalid_argument("samples are not odd-symmetric about 0: defect " +
                                std::to_string(worst));
  std::vector<double> half(N - 1);
  for (int j = 1; j < N; ++j) half[j - 1] = 0.5 * (samples[j] - samples[g.n - j]);
  return odd_from_samples(g, half);
}

inline std::vector<double> inverse_sine_transform(const OddField& f, const Grid& g) {
  const int N = g.half();
  const std::vector<double> interior = odd_samples(g, f);
  std::vector<double> out(g.n, 0.0);
  for (int j = 1; j < N; ++j) {
    out[j] = interior[j - 1];
    out[g.n - j] = -interior[j - 1];
  }
  return out;
}

}  // namespace houli
