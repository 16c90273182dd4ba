// Command-line harness: simulate | rescale | certify | identities | sweep.
// Config comes from optional "key = value" files plus --key value overrides;
// unknown keys are hard errors.  Exit codes: 0 honest verdict, 1 internal
// error, 2 configuration error.

#include <clocale>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "houli/certify.hpp"
#include "houli/config.hpp"
#include "houli/model.hpp"
#include "houli/pipeline.hpp"
#include "houli/report.hpp"
#include "houli/weighted.hpp"

namespace {

using namespace houli;

struct Args {
  std::string command;
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
};

const char* kUsage =
    "usage: houli <simulate|rescale|certify|identities|sweep> [--config FILE] [--key value]...\n";

Args parse_args(int argc, char** argv) {
  if (argc < 2) throw ConfigError("missing command");
  Args a;
  a.command = argv[1];
  for (int i = 2; i < argc; ++i) {
    std::string t = argv[i];
    if (t.rfind("--", 0) != 0) throw ConfigError("expected --key, got: " + t);
    if (i + 1 >= argc) throw ConfigError("missing value for " + t);
    const std::string key = t.substr(2);
    const std::string val = argv[++i];
    if (key == "config")
      a.config_path = val;
    else
      a.overrides.emplace_back(key, val);
  }
  return a;
}

void add_model_keys(std::map<std::string, std::string>& s) {
  s["a"] = "1.0";
  s["nu"] = "0.0";
  s["alpha"] = "1.0";
  s["cu0"] = "1.0";
  s["modes"] = "256";
  s["out_dir"] = ".";
  s["svg"] = "0";
}

void add_steady_keys(std::map<std::string, std::string>& s) {
  s["dtau"] = "5e-4";
  s["tol_j"] = "1e-10";
  s["tol_dcu"] = "1e-12";
  s["max_tau"] = "200.0";
  s["record_stride"] = "100";
  s["safeguard"] = "10.0";
}

Config make_config(const std::string& command) {
  std::map<std::string, std::string> s;
  if (command == "simulate") {
    add_model_keys(s);
    s["dt"] = "5e-4";
    s["t_end"] = "5.0";
    s["record_stride"] = "20";
    s["initial"] = "steady";
    s["profile_path"] = "";
  } else if (command == "rescale") {
    add_model_keys(s);
    add_steady_keys(s);
  } else if (command == "certify") {
    s["n"] = "200";
    s["delta"] = "0.84";
    s["sigma"] = "0";
    s["margin"] = "0.001";
    s["jobs"] = "1";
    s["tamper"] = "0";
    s["out_dir"] = ".";
  } else if (command == "identities") {
    s["tol"] = "1e-10";
    s["trials"] = "200";
    s["seed"] = "12345";
    s["modes"] = "64";
    s["inject_sign_error"] = "0";
  } else if (command == "sweep") {
    add_model_keys(s);
    add_steady_keys(s);
    s["axis"] = "a";
    s["values"] = "0.99,0.97,0.95,0.9";
    s["jobs"] = "1";
  } else {
    throw ConfigError("unknown command: " + command);
  }
  return Config(std::move(s));
}

ModelParams params_from(const Config& cfg) {
  ModelParams p;
  p.a = cfg.get_double("a");
  p.nu = cfg.get_double("nu");
  p.alpha = cfg.get_double("alpha");
  p.C_u0 = cfg.get_double("cu0");
  p.validate();
  return p;
}

std::string out_path(const Config& cfg, const std::string& name) {
  const std::string dir = cfg.get_string("out_dir");
  std::filesystem::create_directories(dir);
  return dir + "/" + name;
}

SteadyOptions steady_options(const Config& cfg) {
  SteadyOptions o;
  o.dtau = cfg.get_double("dtau");
  o.tol_j = cfg.get_double("tol_j");
  o.tol_dcu = cfg.get_double("tol_dcu");
  o.max_tau = cfg.get_double("max_tau");
  o.record_stride = cfg.get_int("record_stride");
  o.safeguard_E = cfg.get_double("safeguard");
  return o;
}

int cmd_simulate(const Config& cfg) {
  const ModelParams p = params_from(cfg);
  const int modes = cfg.get_int("modes");
  ModelState s;
  if (cfg.get_string("initial") == "steady") {
    s = initial_profile(p, modes);
  } else if (cfg.get_string("initial") == "profile") {
    if (cfg.get_string("profile_path").empty())
      throw ConfigError("initial = profile requires profile_path");
    s = read_profile(cfg.get_string("profile_path")).state;
  } else {
    throw ConfigError("config key initial: must be steady or profile");
  }
  const Grid g = default_grid_for(std::max(modes, std::max(s.u.modes(), s.omega.modes())));

  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<double, double>> sup_trace;
  auto emit = [&](double t, const ModelState& st) {
    const double so = sup_abs(g, st.omega), su = sup_abs(g, st.u);
    rows.push_back({csv_double(t), csv_double(so), csv_double(su), csv_double(l2_norm(st.omega)),
                    csv_double(l2_norm(st.u))});
    sup_trace.emplace_back(t, so);
  };
  emit(0.0, s);
  const int stride = cfg.get_int("record_stride");
  int counter = 0;
  bool underflow = false;
  const double t_end = cfg.get_double("t_end");
  evolve_physical(
      g, s, p, 0.0, t_end, cfg.get_double("dt"),
      [&](double t, const ModelState& st) {
        if (++counter % stride == 0 || t >= t_end) emit(t, st);
      },
      &underflow);

  const std::string csv = out_path(cfg, "simulate.csv");
  write_csv(csv, {"t", "sup_omega", "sup_u", "l2_omega", "l2_u"}, rows);
  std::cout << "simulate: wrote " << rows.size() << " rows to " << csv << "\n";
  if (underflow) std::cout << "simulate: note: step size underflow before t_end\n";
  if (cfg.get_bool("svg")) {
    const std::string svg = out_path(cfg, "simulate.svg");
    write_svg_line_plot(svg, "sup |omega| vs t", "t", "sup |omega|", sup_trace);
    std::cout << "simulate: wrote " << svg << "\n";
  }
  return 0;
}

int cmd_rescale(const Config& cfg) {
  const ModelParams p = params_from(cfg);
  const int modes = cfg.get_int("modes");
  const Grid g = default_grid_for(modes);
  const ProfileResult r = run_to_steady(g, p, initial_profile(p, modes), steady_options(cfg));

  std::vector<std::vector<std::string>> rows;
  std::vector<std::pair<double, double>> jtrace;
  for (const auto& h : r.history) {
    rows.push_back({csv_double(h.tau), csv_double(h.E), csv_double(h.K), csv_double(h.J),
                    csv_double(h.c_u)});
    jtrace.emplace_back(h.tau, h.J);
  }
  const std::string csv = out_path(cfg, "rescale-history.csv");
  write_csv(csv, {"tau", "E", "K", "J", "c_u"}, rows);

  ProfileDump d;
  d.a = p.a;
  d.nu = p.nu;
  d.alpha = p.alpha;
  d.modes = modes;
  d.c_u_inf = r.c_u_inf;
  d.verdict = verdict_name(r.verdict);
  d.state = r.profile;
  const std::string prof = out_path(cfg, "profile.txt");
  write_profile(prof, d);

  std::cout << "rescale: verdict = " << verdict_name(r.verdict) << "\n";
  std::cout << "rescale: c_u_inf = " << csv_double(r.c_u_inf) << "\n";
  std::cout << "rescale: blowup_time = " << csv_double(r.blowup_time) << "\n";
  std::cout << "rescale: steady_residual = " << csv_double(r.residual) << "\n";
  std::cout << "rescale: C_u_final = " << csv_double(r.C_u_final)
            << " (max " << csv_double(r.C_u_max) << ")\n";
  if (!r.detail.empty()) std::cout << "rescale: detail = " << r.detail << "\n";
  if (r.verdict == Verdict::kConverged && std::fabs(r.c_u_inf) < 1e-8)
    std::cout << "rescale: note: no blowup at a = " << csv_double(p.a)
              << " (degenerate scaling constant c_u_inf = 0 within tolerance)\n";
  std::cout << "rescale: wrote " << csv << " and " << prof << "\n";
  if (cfg.get_bool("svg")) {
    const std::string svg = out_path(cfg, "rescale-history.svg");
    write_svg_line_plot(svg, "time-derivative energy J vs tau", "tau", "J", jtrace);
    std::cout << "rescale: wrote " << svg << "\n";
  }
  return 0;
}

int cmd_certify(const Config& cfg) {
  CertifyOptions opt;
  opt.N = cfg.get_int("n");
  long long num = 0, den = 1;
  parse_decimal_ratio(cfg.get_string("delta"), &num, &den);
  opt.delta = from_ratio(num, den);
  opt.sigma = cfg.get_double("sigma");
  opt.margin = cfg.get_double("margin");
  opt.jobs = cfg.get_int("jobs");
  opt.tamper = cfg.get_bool("tamper");

  const Certificate c = full_certificate(opt);
  const std::string path = out_path(cfg, certificate_filename(c.N));
  write_certificate(c, path);

  std::cout << "certify: N = " << c.N << ", verdict = "
            << (c.certified ? "certified" : "not-certified") << "\n";
  if (c.certified) {
    std::cout << "certify: smallest eigenvalue of the truncation exceeds "
              << csv_double(c.eig.lambda_min_lower) << "\n";
    std::cout << "certify: conclusion: the damping form is nonnegative on all admissible "
                 "coordinate sequences\n";
  } else {
    std::cout << "certify: reason = " << c.failure << "\n";
    if (!c.integrity_ok) std::cout << "certify: coefficient table SHA-256 mismatch\n";
  }
  std::cout << "certify: wrote " << path << "\n";
  return 0;
}

struct IdentityRow {
  std::string name;
  double defect = 0.0;
  bool pass = false;
};

int cmd_identities(const Config& cfg) {
  const double tol = cfg.get_double("tol");
  const int trials = cfg.get_int("trials");
  const int modes = cfg.get_int("modes");
  const int flip = cfg.get_bool("inject_sign_error") ? 7 : 0;
  std::mt19937_64 rng(static_cast<uint64_t>(cfg.get_int("seed")));
  std::uniform_real_distribution<double> uni(-1.0, 1.0);

  const Grid g(4 * modes);
  std::vector<IdentityRow> table;
  auto push = [&](const std::string& name, double defect) {
    table.push_back({name, defect, defect <= tol});
  };

  auto random_omega = [&]() {
    OddField w(modes);
    for (int k = 1; k <= modes; ++k) w.c[k - 1] = uni(rng) / (static_cast<double>(k) * k);
    return w;
  };
  auto random_admissible_u = [&]() {
    // Build from random strain coordinates; the coefficient map lands in the
    // admissible class u_x(0) = 0 by construction.
    std::vector<double> c(modes - 1);
    for (int k = 1; k <= modes - 1; ++k) c[k - 1] = uni(rng) / (static_cast<double>(k) * k);
    std::vector<double> b(modes, 0.0);
    double tail = 0.0;
    for (int i = modes; i >= 1; --i) {
      if (i <= modes - 1) tail += c[i - 1] / (static_cast<double>(i) * (i + 1));
      const double c_im1 = (i >= 2) ? c[i - 2] : 0.0;
      b[i - 1] = tail - c_im1 / i;
    }
    return from_o_coords(b);
  };

  // Singular-weight quadrature: exact on the offset grid for admissible
  // integrands (the numerator's double zero at x = 0 cancels the pole).
  auto rho_quad = [&](auto&& fa, auto&& fb) {
    double s = 0.0;
    for (int j = 0; j < g.n; ++j) {
      const double x = g.offset_node(j);
      s += eval(fa, x) * eval(fb, x) / (1.0 - std::cos(x));
    }
    return s / g.n;
  };

  // Row 1/2: (sin x f_x, f rho) = (1/2)(f, f rho), both parities.
  {
    double worst_o = 0.0, worst_e = 0.0;
    for (int t = 0; t < trials; ++t) {
      const OddField f = random_omega();
      const double lhs = detail::o_inner(mul_sin(differentiate(f)), f);
      const double rhs = 0.5 * weighted_norm_sq(f);
      worst_o = std::max(worst_o, std::fabs(lhs - rhs) / std::max(1.0, std::fabs(rhs)));

      // Admissible even field from random e-coordinates.
      EvenField h(modes);
      double prev = 0.0;
      for (int j = 0; j < modes; ++j) {
        const double gj = uni(rng) / (j + 1.0);
        h.d[j] = gj - prev;
        prev = gj;
      }
      h.d[modes] = -prev;
      const double lhs_e = detail::e_inner_absorbed(mul_sin(differentiate(h)), h);
      const double rhs_e = 0.5 * weighted_norm_sq(h);
      worst_e = std::max(worst_e, std::fabs(lhs_e - rhs_e) / std::max(1.0, std::fabs(rhs_e)));
    }
    push("half-weight pairing identity, odd fields", worst_o);
    push("half-weight pairing identity, even fields", worst_e);
  }

  // Row 3: orthonormality of the weighted bases under quadrature, k <= 32.
  {
    double worst = 0.0;
    const int kmax = std::min(32, modes - 1);
    for (int i = 1; i <= kmax; ++i) {
      for (int j = i; j <= kmax; ++j) {
        OddField oi(i + 1), oj(j + 1);
        oi.c[i - 1] = 1.0;
        if (i >= 2) oi.c[i - 2] = -1.0;
        oj.c[j - 1] = 1.0;
        if (j >= 2) oj.c[j - 2] = -1.0;
        // o^1 = sin x - sin 0 = sin x.
        worst = std::max(worst, std::fabs(rho_quad(oi, oj) - (i == j ? 1.0 : 0.0)));
        EvenField ei(i + 1), ej(j + 1);
        ei.d[i] = 1.0;
        ei.d[i + 1] = -1.0;
        ej.d[j] = 1.0;
        ej.d[j + 1] = -1.0;
        worst = std::max(worst, std::fabs(rho_quad(ei, ej) - (i == j ? 1.0 : 0.0)));
      }
    }
    push("weighted basis orthonormality (quadrature, k <= 32)", worst);
  }

  // Row 4: velocity reconstruction from strain coordinates.
  {
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
      const OddField u = random_admissible_u();
      const auto w = to_weighted_basis(random_omega(), u);
      const OddField back = from_o_coords(w.b);
      double scale = 1e-30, diff = 0.0;
      for (int k = 1; k <= modes; ++k) {
        scale = std::max(scale, std::fabs(u.coeff(k)));
        diff = std::max(diff, std::fabs(u.coeff(k) - back.coeff(k)));
      }
      worst = std::max(worst, diff / std::max(1.0, scale));
    }
    push("velocity reconstruction from strain coordinates", worst);
  }

  // Row 5: stream function, spectral vs integral form
  // psi(x) = int_0^x (y - x) omega(y) dy + x psi_x(0).
  {
    double worst = 0.0;
    const OddField w = random_omega();
    const OddField psi = biot_savart(w);
    const double px0 = psi_x_at_zero(w);
    const int panels = 4096;
    for (int q = 1; q <= 8; ++q) {
      const double x = kTwoPi * q / 9.0;
      // Composite Simpson over [0, x].
      const double h = x / panels;
      double acc = 0.0;
      for (int i = 0; i <= panels; ++i) {
        const double y = i * h;
        const double fy = (y - x) * eval(w, y);
        const double wgt = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += wgt * fy;
      }
      acc *= h / 3.0;
      worst = std::max(worst, std::fabs(eval(psi, x) - (acc + x * px0)));
    }
    push("stream function integral form", worst);
  }

  // Row 6: odd fields integrate to zero over the period.
  {
    double worst = 0.0;
    const OddField w = random_omega();
    double s = 0.0;
    for (int j = 0; j < g.n; ++j) s += eval(w, g.offset_node(j));
    worst = std::fabs(s * kTwoPi / g.n);
    push("odd fields have zero mean (quadrature)", worst);
  }

  // Rows 7/8: the linearized energy derivative against the damping form,
  // dE1 = -F(delta = 1) and dE1 + (1 - delta)(|u_x|^2 + |w|^2) = -F(delta).
  {
    double worst1 = 0.0, worst2 = 0.0;
    const double delta = 0.84;
    for (int t = 0; t < trials; ++t) {
      const OddField u = random_admissible_u();
      const OddField w = random_omega();
      const auto coords = to_weighted_basis(w, u);
      const double de1 = dE1_direct(u, w);
      const double norms =
          detail::sum_sq(coords.a) + detail::sum_sq(coords.c);
      const double scale = std::max(1.0, norms);
      worst1 = std::max(worst1,
                        std::fabs(de1 + F_quadratic(coords.a, coords.c, 1.0, flip)) / scale);
      worst2 = std::max(
          worst2, std::fabs(de1 + (1.0 - delta) * norms +
                            F_quadratic(coords.a, coords.c, delta, flip)) /
                      scale);
    }
    push("energy derivative equals damping form (delta = 1)", worst1);
    push("energy derivative shift identity (delta = 0.84)", worst2);
  }

  int failures = 0;
  std::cout << "identity suite: tol = " << csv_double(tol) << ", trials = " << trials
            << ", modes = " << modes << "\n";
  for (const auto& row : table) {
    if (!row.pass) ++failures;
    std::cout << (row.pass ? "pass" : "FAIL") << "  defect = " << csv_double(row.defect)
              << "  " << row.name << "\n";
  }
  std::cout << "identity suite: " << (table.size() - failures) << "/" << table.size()
            << " rows passed\n";
  return 0;
}

int cmd_sweep(const Config& cfg) {
  const ModelParams base = params_from(cfg);
  const std::string axis_s = cfg.get_string("axis");
  SweepAxis axis;
  if (axis_s == "a") axis = SweepAxis::kA;
  else if (axis_s == "nu") axis = SweepAxis::kNu;
  else if (axis_s == "alpha") axis = SweepAxis::kAlpha;
  else throw ConfigError("config key axis: must be a, nu, or alpha");

  const auto values = cfg.get_double_list("values");
  const auto rows = sweep(axis, values, base, cfg.get_int("modes"), steady_options(cfg),
                          cfg.get_int("jobs"));

  std::vector<std::vector<std::string>> csv_rows;
  std::vector<std::pair<double, double>> cu_trace;
  for (const auto& r : rows) {
    csv_rows.push_back({csv_double(r.value), csv_double(r.c_u_inf), csv_double(r.T),
                        csv_double(r.E_final), r.verdict, r.note});
    cu_trace.emplace_back(r.value, r.c_u_inf);
  }
  const std::string stem = "sweep-" + axis_s + "-" + short_hash(cfg.canonical());
  const std::string csv = out_path(cfg, stem + ".csv");
  write_csv(csv, {"value", "c_u_inf", "T", "E_final", "verdict", "note"}, csv_rows);
  std::cout << "sweep: axis = " << axis_s << ", " << rows.size() << " rows\n";
  for (const auto& r : rows)
    std::cout << "  " << axis_s << " = " << csv_double(r.value) << "  c_u_inf = "
              << csv_double(r.c_u_inf) << "  verdict = " << r.verdict
              << (r.note.empty() ? "" : "  [" + r.note + "]") << "\n";
  std::cout << "sweep: wrote " << csv << "\n";
  if (cfg.get_bool("svg")) {
    const std::string svg = out_path(cfg, stem + ".svg");
    write_svg_line_plot(svg, "scaling constant vs " + axis_s, axis_s, "c_u_inf", cu_trace);
    std::cout << "sweep: wrote " << svg << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::setlocale(LC_ALL, "C");
  try {
    const Args args = parse_args(argc, argv);
    Config cfg = make_config(args.command);
    if (!args.config_path.empty()) cfg.load_file(args.config_path);
    for (const auto& [k, v] : args.overrides) cfg.set(k, v);

    if (args.command == "simulate") return cmd_simulate(cfg);
    if (args.command == "rescale") return cmd_rescale(cfg);
    if (args.command == "certify") return cmd_certify(cfg);
    if (args.command == "identities") return cmd_identities(cfg);
    return cmd_sweep(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n" << kUsage;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
