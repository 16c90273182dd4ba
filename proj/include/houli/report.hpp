#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "houli/model.hpp"

// Output plumbing: CSV with round-trippable floats, a minimal SVG line-plot
// writer, the profile dump format, and a stable run hash for file naming.

namespace houli {

// 17 significant digits round-trip binary64 exactly.
inline std::string csv_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf);
}

// Fields containing commas or quotes are quoted with doubled inner quotes.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << csv_field(header[i]);
  out << "\r\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
    out << "\r\n";
  }
}

// FNV-1a, for deterministic output file names keyed off the full config.
inline std::string short_hash(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(h ^ (h >> 32)));
  return std::string(buf);
}

namespace detail {

inline std::string svg_num(double x) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return std::string(buf);
}

}  // namespace detail

// Minimal line plot: axes box, tick labels, one polyline.  Points with
// non-finite coordinates are dropped.
inline void write_svg_line_plot(const std::string& path, const std::string& title,
                                const std::string& xlabel, const std::string& ylabel,
                                const std::vector<std::pair<double, double>>& pts) {
  std::vector<std::pair<double, double>> p;
  for (const auto& q : pts)
    if (std::isfinite(q.first) && std::isfinite(q.second)) p.push_back(q);

  const double W = 840, H = 560, L = 80, R = 30, T = 50, B = 70;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (!p.empty()) {
    xmin = xmax = p[0].first;
    ymin = ymax = p[0].second;
    for (const auto& q : p) {
      xmin = std::min(xmin, q.first);
      xmax = std::max(xmax, q.first);
      ymin = std::min(ymin, q.second);
      ymax = std::max(ymax, q.second);
    }
  }
  if (xmax - xmin < 1e-300) {
    xmin -= 1.0;
    xmax += 1.0;
  }
  if (ymax - ymin < 1e-300) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  const double padx = 0.05 * (xmax - xmin), pady = 0.05 * (ymax - ymin);
  xmin -= padx;
  xmax += padx;
  ymin -= pady;
  ymax += pady;
  auto X = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto Y = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"18\">"
      << title << "</text>\n";
  out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
      << H - T - B << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    out << "<line x1=\"" << X(xv) << "\" y1=\"" << H - B << "\" x2=\"" << X(xv) << "\" y2=\""
        << H - B + 6 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << X(xv) << "\" y=\"" << H - B + 22
        << "\" text-anchor=\"middle\" font-size=\"12\">" << detail::svg_num(xv) << "</text>\n";
    out << "<line x1=\"" << L - 6 << "\" y1=\"" << Y(yv) << "\" x2=\"" << L << "\" y2=\""
        << Y(yv) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << L - 10 << "\" y=\"" << Y(yv) + 4
        << "\" text-anchor=\"end\" font-size=\"12\">" << detail::svg_num(yv) << "</text>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 20
      << "\" text-anchor=\"middle\" font-size=\"14\">" << xlabel << "</text>\n";
  out << "<text x=\"20\" y=\"" << (T + H - B) / 2
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 20 "
      << (T + H - B) / 2 << ")\">" << ylabel << "</text>\n";
  if (!p.empty()) {
    out << "<polyline fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"1.5\" points=\"";
    for (const auto& q : p) out << detail::svg_num(X(q.first)) << "," << detail::svg_num(Y(q.second)) << " ";
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

// Profile dump: header naming the run parameters, then one sine coefficient
// per line per field.
struct ProfileDump {
  double a = 1.0;
  double nu = 0.0;
  double alpha = 1.0;
  int modes = 0;
  double c_u_inf = 0.0;
  std::string verdict;
  ModelState state;
};

inline void write_profile(const std::string& path, const ProfileDump& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "# self-similar profile dump\n";
  out << "a = " << csv_double(d.a) << "\n";
  out << "nu = " << csv_double(d.nu) << "\n";
  out << "alpha = " << csv_double(d.alpha) << "\n";
  out << "modes = " << d.modes << "\n";
  out << "c_u_inf = " << csv_double(d.c_u_inf) << "\n";
  out << "verdict = " << d.verdict << "\n";
  out << "[u]\n";
  for (int k = 1; k <= d.state.u.modes(); ++k) out << csv_double(d.state.u.c[k - 1]) << "\n";
  out << "[omega]\n";
  for (int k = 1; k <= d.state.omega.modes(); ++k)
    out << csv_double(d.state.omega.c[k - 1]) << "\n";
}

inline ProfileDump read_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open profile dump: " + path);
  ProfileDump d;
  std::string line;
  std::vector<double>* target = nullptr;
  std::vector<double> u, omega;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line == "[u]") {
      target = &u;
      continue;
    }
    if (line == "[omega]") {
      target = &omega;
      continue;
    }
    const auto eq = line.find('=');
    if (eq != std::string::npos && target == nullptr) {
      const std::string key = line.substr(0, line.find(' '));
      const std::string val = line.substr(eq + 1);
      if (key == "a") d.a = std::strtod(val.c_str(), nullptr);
      else if (key == "nu") d.nu = std::strtod(val.c_str(), nullptr);
      else if (key == "alpha") d.alpha = std::strtod(val.c_str(), nullptr);
      else if (key == "modes") d.modes = static_cast<int>(std::strtol(val.c_str(), nullptr, 10));
      else if (key == "c_u_inf") d.c_u_inf = std::strtod(val.c_str(), nullptr);
      else if (key == "verdict") {
        std::string v = val;
        while (!v.empty() && v.front() == ' ') v.erase(v.begin());
        d.verdict = v;
      }
      continue;
    }
    if (target) target->push_back(std::strtod(line.c_str(), nullptr));
  }
  d.state.u = OddField(std::move(u));
  d.state.omega = OddField(std::move(omega));
  if (d.modes == 0) d.modes = std::max(d.state.u.modes(), d.state.omega.modes());
  return d;
}

}  // namespace houli
