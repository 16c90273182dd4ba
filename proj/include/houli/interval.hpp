#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace houli {

inline double next_down(double x) {
  return std::nextafter(x, -std::numeric_limits<double>::infinity());
}

inline double next_up(double x) {
  return std::nextafter(x, std::numeric_limits<double>::infinity());
}

// Closed interval with binary64 endpoints.  The hardware stays in
// round-to-nearest; soundness comes from stepping every computed endpoint one
// ulp outward, which over-encloses by at most one ulp per operation.
// Degenerate intervals (lo == hi) are legal only for exactly representable
// values, i.e. whatever a literal double argument denotes.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  explicit Interval(double exact) : lo(exact), hi(exact) {
    if (std::isnan(exact)) throw std::invalid_argument("interval from NaN");
  }
  Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(lo <= hi)) throw std::invalid_argument("interval endpoints out of order");
  }

  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
  double mag() const { return std::max(std::fabs(lo), std::fabs(hi)); }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
  bool strictly_positive() const { return lo > 0.0; }
  bool strictly_negative() const { return hi < 0.0; }
};

inline Interval operator+(const Interval& a, const Interval& b) {
  return {next_down(a.lo + b.lo), next_up(a.hi + b.hi)};
}

inline Interval operator-(const Interval& a, const Interval& b) {
  return {next_down(a.lo - b.hi), next_up(a.hi - b.lo)};
}

// Exact: negation never rounds.
inline Interval operator-(const Interval& a) { return {-a.hi, -a.lo}; }

inline Interval operator*(const Interval& a, const Interval& b) {
  const double c1 = a.lo * b.lo, c2 = a.lo * b.hi, c3 = a.hi * b.lo, c4 = a.hi * b.hi;
  if (std::isnan(c1) || std::isnan(c2) || std::isnan(c3) || std::isnan(c4))
    throw std::domain_error("interval product is undefined (0 * inf)");
  const double m = std::min(std::min(c1, c2), std::min(c3, c4));
  const double M = std::max(std::max(c1, c2), std::max(c3, c4));
  return {next_down(m), next_up(M)};
}

// Divisors containing zero are rejected outright rather than widened to the
// affine-extended line; nothing in the certificates needs that generality.
inline Interval operator/(const Interval& a, const Interval& b) {
  if (b.lo <= 0.0 && 0.0 <= b.hi)
    throw std::domain_error("interval division by interval containing zero");
  const double c1 = a.lo / b.lo, c2 = a.lo / b.hi, c3 = a.hi / b.lo, c4 = a.hi / b.hi;
  const double m = std::min(std::min(c1, c2), std::min(c3, c4));
  const double M = std::max(std::max(c1, c2), std::max(c3, c4));
  return {next_down(m), next_up(M)};
}

inline Interval& operator+=(Interval& a, const Interval& b) { return a = a + b; }
inline Interval& operator-=(Interval& a, const Interval& b) { return a = a - b; }
inline Interval& operator*=(Interval& a, const Interval& b) { return a = a * b; }

// Exact: both endpoint candidates are representable.
inline Interval abs(const Interval& a) {
  if (a.lo >= 0.0) return a;
  if (a.hi <= 0.0) return -a;
  return {0.0, std::max(-a.lo, a.hi)};
}

// Rigorous enclosure of the rational num/den; this is how non-representable
// decimal constants (0.84 = 84/100) enter the certificate.
inline Interval from_ratio(long long num, long long den) {
  return Interval(static_cast<double>(num)) / Interval(static_cast<double>(den));
}

// Shortest hex-float form; strtod round-trips it bit-exactly, which the
// certificate serialization depends on.
inline std::string hex_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", x);
  return std::string(buf);
}

}  // namespace houli
