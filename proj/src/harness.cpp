#include "superheat/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "superheat/error.hpp"
#include "superheat/intersections.hpp"
#include "superheat/io.hpp"
#include "superheat/rescaling.hpp"
#include "superheat/steady_states.hpp"

namespace fs = std::filesystem;

namespace superheat {

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

double num(const std::string& key, const std::string& v) {
  try {
    return io::parse_double(v);
  } catch (const Error&) {
    fail(ErrorCode::config_error, "'" + key + "' expects a number, got '" + v + "'");
  }
}

int integer(const std::string& key, const std::string& v) {
  double d = num(key, v);
  if (d != std::floor(d) || std::fabs(d) > 1e9)
    fail(ErrorCode::config_error, "'" + key + "' expects an integer, got '" + v + "'");
  return static_cast<int>(d);
}

bool boolean(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  fail(ErrorCode::config_error, "'" + key + "' expects true or false, got '" + v + "'");
}

std::string b2s(bool b) { return b ? "true" : "false"; }
std::string d2s(double d) { return io::format_double(d); }

void validate(const ExperimentConfig& c) {
  Nonlinearity::parse(c.nonlinearity);
  Grid{c.R, c.M, c.N}.validate();
  if (c.k && *c.k < 0) fail(ErrorCode::config_error, "problem.k must be nonnegative");
  auto kind = c.initial.substr(0, c.initial.find(':'));
  if (kind != "flat" && kind != "bump" && kind != "steady" && kind != "file")
    fail(ErrorCode::config_error, "unknown initial data kind '" + kind + "'");
  if (!(c.solver.t_horizon > 0)) fail(ErrorCode::config_error, "solver.t_horizon must be positive");
  if (!(c.solver.dt_min > 0)) fail(ErrorCode::config_error, "solver.dt_min must be positive");
  if (c.output.empty()) fail(ErrorCode::config_error, "output.directory must not be empty");
}

}  // namespace

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  std::string v = trim(raw);
  auto& s = c.solver;
  if (key == "problem.nonlinearity") c.nonlinearity = v;
  else if (key == "problem.N") c.N = integer(key, v);
  else if (key == "problem.R") c.R = num(key, v);
  else if (key == "problem.k") c.k = v == "auto" ? std::nullopt : std::optional<double>(num(key, v));
  else if (key == "problem.initial") c.initial = v;
  else if (key == "grid.M") c.M = integer(key, v);
  else if (key == "solver.scheme") s.scheme = scheme_from_string(v);
  else if (key == "solver.safety") s.safety = num(key, v);
  else if (key == "solver.dt_min") s.dt_min = num(key, v);
  else if (key == "solver.M_max") s.M_max = v == "default" ? std::nullopt : std::optional<double>(num(key, v));
  else if (key == "solver.t_horizon") s.t_horizon = num(key, v);
  else if (key == "solver.rtol") s.rtol = num(key, v);
  else if (key == "solver.atol") s.atol = num(key, v);
  else if (key == "solver.snapshot_dt") s.snapshot_dt = num(key, v);
  else if (key == "solver.snapshots_per_decade") s.snapshots_per_decade = integer(key, v);
  else if (key == "solver.densify") s.densify = num(key, v);
  else if (key == "analysis.classify") c.classify = boolean(key, v);
  else if (key == "analysis.rescaling") c.rescaling = boolean(key, v);
  else if (key == "analysis.intersection_trace") c.intersection_trace = boolean(key, v);
  else if (key == "analysis.c_min") c.classify_options.c_min = num(key, v);
  else if (key == "analysis.spread") c.classify_options.spread = num(key, v);
  else if (key == "analysis.bounded_rel") c.classify_options.bounded_rel = num(key, v);
  else if (key == "output.directory") c.output = v;
  else fail(ErrorCode::config_error, "unknown configuration key '" + key + "'");
}

ExperimentConfig parse_config_ini(const std::string& text) {
  ExperimentConfig c;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        fail(ErrorCode::config_error, "line " + std::to_string(lineno) + ": unterminated section");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::config_error, "line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      fail(ErrorCode::config_error, "line " + std::to_string(lineno) + ": key outside a section");
    set_config_value(c, section + "." + trim(std::string_view(t).substr(0, eq)), t.substr(eq + 1));
  }
  validate(c);
  return c;
}

std::string render_config_ini(const ExperimentConfig& c) {
  const auto& s = c.solver;
  std::ostringstream o;
  o << "[problem]\n"
    << "nonlinearity = " << c.nonlinearity << "\n"
    << "N = " << c.N << "\n"
    << "R = " << d2s(c.R) << "\n"
    << "k = " << (c.k ? d2s(*c.k) : "auto") << "\n"
    << "initial = " << c.initial << "\n\n"
    << "[grid]\n"
    << "M = " << c.M << "\n\n"
    << "[solver]\n"
    << "scheme = " << to_string(s.scheme) << "\n"
    << "safety = " << d2s(s.safety) << "\n"
    << "dt_min = " << d2s(s.dt_min) << "\n"
    << "M_max = " << (s.M_max ? d2s(*s.M_max) : "default") << "\n"
    << "t_horizon = " << d2s(s.t_horizon) << "\n"
    << "rtol = " << d2s(s.rtol) << "\n"
    << "atol = " << d2s(s.atol) << "\n"
    << "snapshot_dt = " << d2s(s.snapshot_dt) << "\n"
    << "snapshots_per_decade = " << s.snapshots_per_decade << "\n"
    << "densify = " << d2s(s.densify) << "\n\n"
    << "[analysis]\n"
    << "classify = " << b2s(c.classify) << "\n"
    << "rescaling = " << b2s(c.rescaling) << "\n"
    << "intersection_trace = " << b2s(c.intersection_trace) << "\n"
    << "c_min = " << d2s(c.classify_options.c_min) << "\n"
    << "spread = " << d2s(c.classify_options.spread) << "\n"
    << "bounded_rel = " << d2s(c.classify_options.bounded_rel) << "\n\n"
    << "[output]\n"
    << "directory = " << c.output << "\n";
  return o.str();
}

ExperimentConfig parse_config_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::config_error, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::config_error, "JSON config must be an object");
  ExperimentConfig c;
  for (auto& [section, body] : j.items()) {
    if (!body.is_object()) fail(ErrorCode::config_error, "section '" + section + "' must be an object");
    for (auto& [key, val] : body.items()) {
      std::string v;
      if (val.is_string()) v = val.get<std::string>();
      else if (val.is_boolean()) v = b2s(val.get<bool>());
      else if (val.is_number()) v = d2s(val.get<double>());
      else fail(ErrorCode::config_error, "unsupported value for '" + section + "." + key + "'");
      set_config_value(c, section + "." + key, v);
    }
  }
  validate(c);
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  auto pos = text.find_first_not_of(" \t\r\n");
  if (pos != std::string::npos && text[pos] == '{') return parse_config_json(text);
  return parse_config_ini(text);
}

ExperimentConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error&) {
    fail(ErrorCode::config_error, "cannot read config file " + path.string());
  }
  return parse_config(text);
}

fs::path resolve_output(const fs::path& p) {
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("SUPERHEAT_OUTPUT_ROOT"); root && *root) return fs::path(root) / p;
  return p;
}

// ---------------------------------------------------------------------------
// Run directory

std::string render_summary_json(const RunRecord& run, const std::optional<BlowupTimeFit>& fit) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  nlohmann::json j;
  j["nonlinearity"] = run.nonlinearity;
  j["initial"] = run.initial;
  j["N"] = run.grid.N;
  j["R"] = run.grid.R;
  j["M"] = run.grid.M;
  j["k"] = run.k;
  j["M_max"] = run.M_max;
  j["termination"] = to_string(run.termination);
  j["snapshots"] = run.snapshots.size();
  j["steps"] = run.steps;
  j["rejected"] = run.rejected;
  j["wall_seconds"] = run.wall_seconds;
  j["min_value"] = run.min_value;
  j["final_time"] = run.snapshots.empty() ? 0.0 : run.snapshots.back().t;
  j["settle_time"] = opt(run.settle_time);
  j["resolution_time"] = opt(run.resolution_time);
  j["resolution_exhausted"] = run.resolution_time.has_value();
  if (fit) {
    j["T_est"] = fit->T_est;
    j["T_lower_bound"] = fit->lower_bound;
    j["fit"] = {{"a", fit->a}, {"c", fit->c}, {"rms", fit->rms}, {"window_size", fit->window_size},
                {"consistent", fit->consistent}};
  } else {
    j["T_est"] = nullptr;
  }
  return j.dump(2) + "\n";
}

namespace {

std::string render_snapshots_csv(const RunRecord& run) {
  io::CsvTable t;
  t.comments = {"N=" + std::to_string(run.grid.N), "R=" + d2s(run.grid.R),
                "M=" + std::to_string(run.grid.M), "nonlinearity=" + run.nonlinearity};
  t.header.push_back("t");
  for (int j = 0; j <= run.grid.M; ++j) t.header.push_back("u_" + std::to_string(j));
  for (const auto& s : run.snapshots) {
    std::vector<double> row;
    row.reserve(s.U.size() + 1);
    row.push_back(s.t);
    row.insert(row.end(), s.U.begin(), s.U.end());
    t.rows.push_back(std::move(row));
  }
  return io::render_csv(t);
}

std::string render_series_table(const RunRecord& run) {
  io::CsvTable t;
  t.header = {"t", "M", "argmax_r", "F_of_M"};
  for (const auto& s : run.snapshots) t.rows.push_back({s.t, s.max_value, s.argmax_r, s.F_of_M});
  return io::render_csv(t);
}

// Rescaled profiles at three F(M) levels a factor 4 apart, ending at the
// smallest level whose tau window still lies inside the trusted run window.
nlohmann::json rescaling_block(const fs::path& dir, const RunRecord& run, const Nonlinearity& nl) {
  nlohmann::json out = nlohmann::json::array();
  std::size_t n = run.trusted_count();
  if (n < 2) return out;
  double F_end = run.snapshots[n - 1].F_of_M;
  double q = nl.q_analytic() ? *nl.q_analytic() : estimate_q(nl).q;
  for (int i = 0; i < 3; ++i) {
    double level = 1.4 * F_end * std::pow(4.0, 2 - i);
    nlohmann::json e;
    e["F_level"] = level;
    try {
      double ti = time_at_F_level(run, level);
      e["t_i"] = ti;
      auto rp = build_rescaled(run, nl, ti, 1.0, 0.25);
      auto vb = check_vt_bounds(rp, 1.0, 0.25);
      auto cr = check_ratio_u_center(run, nl, q, ti, q > 1 ? 0.5 : 1.0, 0.25);
      e["lambda"] = rp.lambda;
      e["w_center"] = rp.w[rp.tau_index(0.0)][0];
      e["v_min"] = vb.min_v;
      e["v_max"] = vb.max_v;
      e["v_grad_max"] = vb.max_grad;
      e["center_ratio_min"] = cr.min_ratio;
      e["center_ratio_bound"] = cr.bound;
      e["equation_residual"] = rescaled_equation_residual(rp, 1.0, 0.2);
      io::write_atomic(dir / ("rescaled_" + std::to_string(i) + ".csv"), render_rescaled_csv(rp));
      // Needs a wider time window than the profile itself.
      try {
        auto lr = check_lambda_ratio(run, nl, ti, {-0.5, -0.25, 0.0, 0.25, 0.5});
        e["lambda_ratio_worst_eps"] = lr.worst_eps;
      } catch (const Error& err) {
        e["lambda_ratio_error"] = err.what();
      }
    } catch (const Error& err) {
      e["error"] = to_string(err.code());
      e["message"] = err.what();
    }
    out.push_back(e);
  }
  return out;
}

void trace_block(const fs::path& dir, const RunRecord& run, const Nonlinearity& nl) {
  nlohmann::json j;
  try {
    double q = nl.q_analytic() ? *nl.q_analytic() : estimate_q(nl).q;
    auto st = picard_singular(nl, q, run.grid.N);
    double r_lo = std::exp(st.s_min), r_hi = std::min(std::exp(st.s_max), run.grid.R);
    std::vector<double> rg;
    int n = 2000;
    for (int i = 0; i <= n; ++i) rg.push_back(r_lo * std::pow(r_hi / r_lo, double(i) / n));
    rg.back() = r_hi;
    auto ustar = transform_to_radial(st, nl, rg);
    auto tr = intersection_trace(run, ustar, 0.0, r_hi);
    io::write_atomic(dir / "trace.csv", render_trace_csv(tr));
    io::write_atomic(dir / "trace.json", render_trace_json(tr));
    return;
  } catch (const Error& err) {
    j["error"] = to_string(err.code());
    j["message"] = err.what();
  }
  io::write_atomic(dir / "trace.json", j.dump(2) + "\n");
}

}  // namespace

void write_run_directory(const fs::path& dir, const ExperimentConfig& c, const RunRecord& run,
                         const BlowupReport* report) {
  fs::create_directories(dir);
  io::write_atomic(dir / "config.ini", render_config_ini(c));
  io::write_atomic(dir / "snapshots.csv", render_snapshots_csv(run));
  io::write_atomic(dir / "series.csv", render_series_table(run));
  std::optional<BlowupTimeFit> fit;
  if (report && report->fit) fit = report->fit;
  else if (run.termination == Termination::threshold) {
    try {
      fit = estimate_blowup_time(run);
    } catch (const Error&) {
    }
  }
  io::write_atomic(dir / "summary.json", render_summary_json(run, fit));
  if (report) {
    io::write_atomic(dir / "report.json", render_report_json(*report));
    io::write_atomic(dir / "ratio.csv", render_series_csv(report->ratio, "ratio"));
    io::write_atomic(dir / "delta.csv", render_series_csv(report->delta, "delta"));
  }
}

RunOutcome run_experiment(const ExperimentConfig& c) {
  validate(c);
  Nonlinearity nl = Nonlinearity::parse(c.nonlinearity);
  Grid grid{c.R, c.M, c.N};
  InitialData u0 = parse_initial_data(c.initial, nl, grid);
  double k = c.k ? *c.k : u0.value(c.R);

  RunOutcome out;
  out.directory = resolve_output(c.output);
  fs::create_directories(out.directory);
  fs::path marker = out.directory / kPartialMarker;
  io::write_atomic(marker, "run in progress\n");

  out.run = simulate(nl, grid, c.solver, u0, k);
  if (c.classify) out.report = classify(out.run, nl, c.classify_options);
  write_run_directory(out.directory, c, out.run, out.report ? &*out.report : nullptr);
  if (c.rescaling) {
    auto block = rescaling_block(out.directory, out.run, nl);
    io::write_atomic(out.directory / "rescaling.json", block.dump(2) + "\n");
  }
  if (c.intersection_trace) trace_block(out.directory, out.run, nl);
  fs::remove(marker);
  return out;
}

RunRecord read_run_directory(const fs::path& dir, ExperimentConfig* config) {
  if (fs::exists(dir / kPartialMarker))
    fail(ErrorCode::io_error, "run directory " + dir.string() + " is incomplete (PARTIAL marker)");
  ExperimentConfig c = load_config(dir / "config.ini");
  auto snaps = io::parse_csv(io::read_file(dir / "snapshots.csv"));
  auto series = io::parse_csv(io::read_file(dir / "series.csv"));
  nlohmann::json sum;
  try {
    sum = nlohmann::json::parse(io::read_file(dir / "summary.json"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io_error, std::string("bad summary.json: ") + e.what());
  }
  if (snaps.rows.size() != series.rows.size())
    fail(ErrorCode::io_error, "snapshots.csv and series.csv disagree in length");

  RunRecord run;
  run.grid = Grid{c.R, c.M, c.N};
  run.config = c.solver;
  run.nonlinearity = c.nonlinearity;
  run.initial = c.initial;
  run.k = sum.at("k").get<double>();
  run.M_max = sum.at("M_max").get<double>();
  run.termination = termination_from_string(sum.at("termination").get<std::string>());
  run.steps = sum.at("steps").get<long>();
  run.rejected = sum.at("rejected").get<long>();
  run.wall_seconds = sum.at("wall_seconds").get<double>();
  run.min_value = sum.at("min_value").get<double>();
  if (!sum.at("settle_time").is_null()) run.settle_time = sum["settle_time"].get<double>();
  if (!sum.at("resolution_time").is_null()) run.resolution_time = sum["resolution_time"].get<double>();
  std::size_t iF = series.column("F_of_M"), iA = series.column("argmax_r"), iM = series.column("M");
  for (std::size_t i = 0; i < snaps.rows.size(); ++i) {
    const auto& row = snaps.rows[i];
    if (row.size() != static_cast<std::size_t>(c.M) + 2)
      fail(ErrorCode::io_error, "snapshot row of the wrong width");
    Snapshot s;
    s.t = row[0];
    s.U.assign(row.begin() + 1, row.end());
    s.max_value = series.rows[i][iM];
    s.argmax_r = series.rows[i][iA];
    s.F_of_M = series.rows[i][iF];
    run.snapshots.push_back(std::move(s));
  }
  if (config) *config = c;
  return run;
}

// ---------------------------------------------------------------------------
// Sweeps

SweepAxis parse_sweep_axis(const std::string& text) {
  auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0)
    fail(ErrorCode::config_error, "sweep axis must look like section.key=v1|v2");
  SweepAxis a;
  a.key = trim(std::string_view(text).substr(0, eq));
  std::string rest = text.substr(eq + 1);
  std::size_t pos = 0;
  for (;;) {
    auto bar = rest.find('|', pos);
    a.values.push_back(trim(std::string_view(rest).substr(pos, bar == std::string::npos ? std::string::npos : bar - pos)));
    if (bar == std::string::npos) break;
    pos = bar + 1;
  }
  ExperimentConfig probe;
  for (const auto& v : a.values) {
    if (v.empty()) fail(ErrorCode::config_error, "empty value in sweep axis '" + a.key + "'");
    set_config_value(probe, a.key, v);
  }
  return a;
}

namespace {

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string o = "\"";
  for (char ch : s) {
    if (ch == '"') o += '"';
    o += ch;
  }
  return o + "\"";
}

}  // namespace

std::vector<SweepEntry> run_sweep(const ExperimentConfig& base, const std::vector<SweepAxis>& axes,
                                  int jobs) {
  fs::path root = resolve_output(base.output);
  std::vector<SweepEntry> entries;
  std::vector<ExperimentConfig> configs;
  std::vector<std::size_t> idx(axes.size(), 0);
  for (;;) {
    ExperimentConfig c = base;
    SweepEntry e;
    e.index = entries.size();
    for (std::size_t a = 0; a < axes.size(); ++a) {
      set_config_value(c, axes[a].key, axes[a].values[idx[a]]);
      e.params[axes[a].key] = axes[a].values[idx[a]];
    }
    e.directory = root / ("run_" + std::to_string(e.index));
    // absolute, so the output root is not applied a second time
    c.output = fs::absolute(e.directory).string();
    validate(c);
    configs.push_back(c);
    entries.push_back(e);
    std::size_t a = 0;
    while (a < axes.size() && ++idx[a] == axes[a].values.size()) idx[a++] = 0;
    if (a == axes.size()) break;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i; (i = next.fetch_add(1)) < configs.size();) {
      SweepEntry& e = entries[i];
      try {
        auto res = run_experiment(configs[i]);
        e.status = "ok";
        e.termination = to_string(res.run.termination);
        e.steps = res.run.steps;
        if (res.report) {
          e.verdict = to_string(res.report->verdict);
          e.T_est = res.report->T_est;
        }
      } catch (const Error& err) {
        e.status = to_string(err.code());
      } catch (const std::exception&) {
        e.status = "internal";
      }
    }
  };
  int nt = std::max(1, std::min<int>(jobs, static_cast<int>(configs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::string index = "index,directory,status";
  for (const auto& a : axes) index += "," + csv_cell(a.key);
  index += "\n";
  std::string agg = "index,status,termination,verdict,T_est,steps\n";
  for (const auto& e : entries) {
    index += std::to_string(e.index) + "," + csv_cell(e.directory.string()) + "," + e.status;
    for (const auto& a : axes) index += "," + csv_cell(e.params.at(a.key));
    index += "\n";
    agg += std::to_string(e.index) + "," + e.status + "," + e.termination + "," + e.verdict + "," +
           (e.T_est ? d2s(*e.T_est) : "") + "," + std::to_string(e.steps) + "\n";
  }
  fs::create_directories(root);
  io::write_atomic(root / "index.csv", index);
  io::write_atomic(root / "aggregate.csv", agg);
  return entries;
}

}  // namespace superheat
