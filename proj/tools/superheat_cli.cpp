// Command-line front end: exponent tables, steady states, intersection
// counts, simulations, classification and parameter sweeps.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "superheat/blowup_analysis.hpp"
#include "superheat/error.hpp"
#include "superheat/harness.hpp"
#include "superheat/intersections.hpp"
#include "superheat/io.hpp"
#include "superheat/nonlinearity.hpp"
#include "superheat/profile.hpp"
#include "superheat/steady_states.hpp"

namespace fs = std::filesystem;
using namespace superheat;

namespace {

std::string escape(std::string_view s) {
  std::string o;
  for (char c : s) {
    if (c == '"' || c == '\\') o += '\\';
    o += c == '\n' ? ' ' : c;
  }
  return o;
}

int report_error(std::string_view code, std::string_view msg, int status) {
  std::cerr << "error code=" << code << " message=\"" << escape(msg) << "\"\n";
  return status;
}

std::string g6(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") std::cout << text;
  else io::write_atomic(resolve_output(out), text);
}

int cmd_exponents(int N) {
  auto e = critical_exponents(N);
  std::cout << "p_S=" << g6(e.p_S) << " p_JL=" << g6(e.p_JL) << " q_S=" << g6(e.q_S)
            << " q_JL=" << g6(e.q_JL) << "\n";
  return 0;
}

int cmd_steady(const std::string& spec, int N, double alpha, double r_max, double tol,
               const std::string& out) {
  auto nl = Nonlinearity::parse(spec);
  ShootOptions so;
  so.tol = tol;
  auto res = shoot_regular(nl, N, alpha, r_max, so);
  if (res.exit)
    std::cerr << "range exit at r=" << io::format_double(res.exit->r) << " sign=" << res.exit->sign
              << " reason=\"" << res.exit->reason << "\"\n";
  emit(render_profile_csv(res.profile), out);
  return 0;
}

int cmd_singular(const std::string& spec, int N, std::optional<double> q, PicardOptions po,
                 int points, const std::string& out) {
  auto nl = Nonlinearity::parse(spec);
  double qv = q ? *q : nl.q_analytic() ? *nl.q_analytic() : estimate_q(nl).q;
  auto st = picard_singular(nl, qv, N, po);
  double r_lo = std::exp(st.s_min), r_hi = std::exp(st.s_max);
  std::vector<double> rg;
  for (int i = 0; i <= points; ++i) rg.push_back(r_lo * std::pow(r_hi / r_lo, double(i) / points));
  rg.front() = r_lo;
  rg.back() = r_hi;
  auto prof = transform_to_radial(st, nl, rg);
  emit(render_profile_csv(prof), out);
  nlohmann::json j = {{"q", st.q},
                      {"N", st.N},
                      {"iterations", st.iterations},
                      {"residual", st.residual},
                      {"contraction_ratio", st.contraction_ratio},
                      {"s_min", st.s_min},
                      {"s_max", st.s_max},
                      {"window_halvings", st.window_halvings},
                      {"boundary_size", st.boundary_size},
                      {"truncation_bound", st.truncation_bound},
                      {"ode_residual", st.ode_residual}};
  (out.empty() || out == "-" ? std::cerr : std::cout) << j.dump() << "\n";
  return 0;
}

int cmd_intersect(const std::string& a, const std::string& b, std::optional<double> lo,
                  std::optional<double> hi) {
  auto A = read_profile_csv(a);
  auto B = read_profile_csv(b);
  double x0 = lo ? *lo : std::max(A.r_min(), B.r_min());
  double x1 = hi ? *hi : std::min(A.r_max(), B.r_max());
  auto rep = count_intersections(A, B, x0, x1);
  std::cout << render_report_json(rep);
  return 0;
}

int cmd_simulate(const std::string& config, const std::vector<std::string>& sets,
                 const std::string& out) {
  ExperimentConfig c = load_config(config);
  for (const auto& s : sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos) fail(ErrorCode::config_error, "--set expects section.key=value");
    set_config_value(c, s.substr(0, eq), s.substr(eq + 1));
  }
  if (!out.empty()) c.output = out;
  auto res = run_experiment(c);
  std::cout << "run_directory=" << res.directory.string()
            << " termination=" << to_string(res.run.termination)
            << " snapshots=" << res.run.snapshots.size();
  if (res.report) std::cout << " verdict=" << to_string(res.report->verdict);
  std::cout << "\n";
  return 0;
}

int cmd_classify(const std::string& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::io_error, "no run directory at " + dir);
  ExperimentConfig c;
  RunRecord run = read_run_directory(dir, &c);
  auto nl = Nonlinearity::parse(c.nonlinearity);
  auto rep = classify(run, nl, c.classify_options);
  fs::path d(dir);
  io::write_atomic(d / "report.json", render_report_json(rep));
  io::write_atomic(d / "ratio.csv", render_series_csv(rep.ratio, "ratio"));
  io::write_atomic(d / "delta.csv", render_series_csv(rep.delta, "delta"));
  std::cout << render_report_json(rep);
  return 0;
}

int cmd_sweep(const std::string& config, const std::vector<std::string>& vary, int jobs,
              const std::string& out) {
  ExperimentConfig c = load_config(config);
  if (!out.empty()) c.output = out;
  std::vector<SweepAxis> axes;
  for (const auto& v : vary) axes.push_back(parse_sweep_axis(v));
  auto entries = run_sweep(c, axes, jobs);
  int failed = 0;
  for (const auto& e : entries) failed += e.status != "ok";
  std::cout << "runs=" << entries.size() << " failed=" << failed
            << " index=" << (resolve_output(c.output) / "index.csv").string() << "\n";
  return failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blow-up experiments for radial semilinear heat equations"};
  app.require_subcommand(1);

  int exp_N = 3;
  auto* exps = app.add_subcommand("exponents", "Print p_S, p_JL, q_S, q_JL for a dimension");
  exps->add_option("N", exp_N, "Dimension")->required();

  std::string nl_spec = "exp", out;
  int N = 3;
  double alpha = 1.0, r_max = 10.0, tol = 1e-10;
  auto* steady = app.add_subcommand("steady", "Regular steady state by shooting (CSV)");
  steady->add_option("--nl", nl_spec, "Nonlinearity spec, e.g. power:p=3")->required();
  steady->add_option("--N", N, "Dimension")->required();
  steady->add_option("--alpha", alpha, "Value at the origin")->required();
  steady->add_option("--rmax", r_max, "Outer radius");
  steady->add_option("--tol", tol, "Local error tolerance");
  steady->add_option("-o,--out", out, "Output CSV (stdout if omitted)");

  PicardOptions po;
  std::optional<double> q;
  int points = 400;
  auto* sing = app.add_subcommand("singular", "Singular steady state by Picard iteration (CSV)");
  sing->add_option("--nl", nl_spec, "Nonlinearity spec")->required();
  sing->add_option("--N", N, "Dimension")->required();
  sing->add_option("--q", q, "Exponent q (estimated if omitted)");
  sing->add_option("--s-min", po.s_min, "Lower end of the log-radius window");
  sing->add_option("--s-max", po.s_max, "Upper end of the log-radius window");
  sing->add_option("--ds", po.ds, "Log-radius spacing");
  sing->add_option("--tol", po.tol, "Fixed-point tolerance");
  sing->add_option("--max-iter", po.max_iter, "Iteration limit");
  sing->add_option("--points", points, "Output radii (log spaced)");
  sing->add_option("-o,--out", out, "Output CSV (stdout if omitted)");

  std::string pa, pb;
  std::optional<double> ia, ib;
  auto* inter = app.add_subcommand("intersect", "Count sign changes of A - B (JSON)");
  inter->add_option("A", pa, "Profile CSV")->required();
  inter->add_option("B", pb, "Profile CSV")->required();
  inter->add_option("--a", ia, "Interval start (default: common start)");
  inter->add_option("--b", ib, "Interval end (default: common end)");

  std::string config;
  std::vector<std::string> sets;
  auto* sim = app.add_subcommand("simulate", "Run an experiment config into a run directory");
  sim->add_option("config", config, "INI or JSON config")->required();
  sim->add_option("--set", sets, "Override section.key=value");
  sim->add_option("-o,--out", out, "Run directory (overrides output.directory)");

  std::string run_dir;
  auto* cls = app.add_subcommand("classify", "Classify a finished run directory (JSON)");
  cls->add_option("run_dir", run_dir, "Run directory")->required();

  std::vector<std::string> vary;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Cartesian parameter sweep over a config template");
  sweep->add_option("config", config, "Template config")->required();
  sweep->add_option("--vary", vary, "section.key=v1|v2|...")->required();
  sweep->add_option("-j,--jobs", jobs, "Concurrent runs");
  sweep->add_option("-o,--out", out, "Sweep root directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("config_error", e.what(), 2);
  }

  try {
    if (*exps) return cmd_exponents(exp_N);
    if (*steady) return cmd_steady(nl_spec, N, alpha, r_max, tol, out);
    if (*sing) return cmd_singular(nl_spec, N, q, po, points, out);
    if (*inter) return cmd_intersect(pa, pb, ia, ib);
    if (*sim) return cmd_simulate(config, sets, out);
    if (*cls) return cmd_classify(run_dir);
    if (*sweep) return cmd_sweep(config, vary, jobs, out);
  } catch (const Error& e) {
    return report_error(to_string(e.code()), e.what(), exit_status(e.code()));
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 3);
  }
  return 0;
}
