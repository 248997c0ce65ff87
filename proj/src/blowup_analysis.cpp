#include "superheat/blowup_analysis.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "superheat/error.hpp"
#include "superheat/io.hpp"

namespace superheat {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::global_bounded: return "global_bounded";
    case Verdict::type_I: return "type_I";
    case Verdict::type_II_suspect: return "type_II_suspect";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

Series ratio_series(const RunRecord& run, double T_est) {
  Series out;
  for (const auto& s : run.snapshots)
    if (s.t < T_est && std::isfinite(s.F_of_M)) out.emplace_back(s.t, s.F_of_M / (T_est - s.t));
  return out;
}

Series delta_sup_series(const RunRecord& run) {
  Series out;
  const auto& S = run.snapshots;
  if (S.size() < 3) return out;
  for (std::size_t j = 0; j + 1 < S.size(); ++j) {
    if (!std::isfinite(S[j].F_of_M)) continue;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t s = j + 1; s < S.size(); ++s) {
      if (!std::isfinite(S[s].F_of_M)) continue;
      best = std::max(best, (S[j].F_of_M - S[s].F_of_M) / (S[s].t - S[j].t));
    }
    if (std::isfinite(best)) out.emplace_back(S[j].t, best);
  }
  return out;
}

namespace {

double slope(const Series& s) {
  double tm = 0, vm = 0;
  for (auto [t, v] : s) {
    tm += t;
    vm += v;
  }
  tm /= s.size();
  vm /= s.size();
  double stt = 0, stv = 0;
  for (auto [t, v] : s) {
    stt += (t - tm) * (t - tm);
    stv += (t - tm) * (v - vm);
  }
  return stt > 0 ? stv / stt : 0.0;
}

void classify_blowup(const RunRecord& run, const Nonlinearity& nl, const ClassifyOptions& opt,
                     BlowupReport& rep) {
  const auto& S = run.snapshots;
  try {
    rep.fit = run.termination == Termination::threshold ? estimate_blowup_time(run)
                                                        : fit_final_decade(run);
    rep.T_est = rep.fit->T_est;
    if (!rep.fit->consistent) rep.notes.push_back("T_est below the comparison lower bound");
  } catch (const Error& e) {
    if (run.termination == Termination::threshold) {
      rep.reason = std::string("blow-up time fit failed: ") + e.what();
      return;
    }
    double lb = -1;
    for (const auto& s : S)
      if (std::isfinite(s.F_of_M)) lb = std::max(lb, s.t + s.F_of_M);
    if (lb < 0) {
      rep.reason = "no finite F(M) in the run";
      return;
    }
    rep.T_est = lb;
    rep.notes.push_back("T_est taken from the comparison lower bound");
  }
  double T = *rep.T_est;
  rep.ratio = ratio_series(run, T);
  rep.delta = delta_sup_series(run);
  for (std::size_t i = 1; i + 1 < S.size(); ++i) {
    double dM = (S[i + 1].max_value - S[i - 1].max_value) / (S[i + 1].t - S[i - 1].t);
    double fm = nl.f(S[i].max_value);
    if (fm > 0 && std::isfinite(fm)) rep.derivative_quotient.emplace_back(S[i].t, dM / fm);
  }

  std::size_t n = run.trusted_count();
  if (n == 0 || !std::isfinite(S[n - 1].F_of_M)) {
    rep.reason = "no trusted snapshot with finite F(M)";
    return;
  }
  rep.trusted_t_end = S[n - 1].t;
  double F_end = S[n - 1].F_of_M;
  std::size_t settled = run.settled_index();
  Series win_ratio, win_delta;
  for (std::size_t i = std::min(settled, n); i < n; ++i) {
    if (!(S[i].F_of_M <= 10 * F_end) || !(S[i].t < T)) continue;
    win_ratio.emplace_back(S[i].t, S[i].F_of_M / (T - S[i].t));
  }
  for (auto [t, d] : rep.delta)
    if (!win_ratio.empty() && t >= win_ratio.front().first && t <= win_ratio.back().first)
      win_delta.emplace_back(t, d);
  rep.window_size = win_ratio.size();
  if (win_ratio.size() < 2) {
    rep.reason = "fewer than two settled snapshots in the last resolved F(M) decade";
    return;
  }
  rep.window_t_begin = win_ratio.front().first;
  rep.window_t_end = win_ratio.back().first;
  double lo = win_ratio.front().second, hi = lo;
  for (auto [t, v] : win_ratio) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  rep.ratio_liminf = lo;
  rep.ratio_limsup = hi;
  if (!win_delta.empty()) {
    double dm = win_delta.front().second;
    for (auto [t, d] : win_delta) dm = std::min(dm, d);
    rep.delta_min = dm;
  }

  if (!rep.argmax_settled) {
    rep.reason = "maximum never settled at the origin";
    return;
  }
  bool decreasing = slope(win_ratio) < 0;
  if (lo >= opt.c_min && hi <= opt.c_min * opt.spread) {
    if (rep.delta_min && *rep.delta_min <= 0) {
      rep.reason = "ratio in range but delta not bounded away from 0";
      return;
    }
    rep.verdict = Verdict::type_I;
    rep.reason = "ratio series within [c_min, c_min * spread] over the last resolved decade";
  } else if (lo < opt.c_min && decreasing) {
    rep.verdict = Verdict::type_II_suspect;
    rep.reason = "ratio below c_min and decreasing over the last resolved decade";
  } else {
    rep.reason = "ratio series outside the type I band without a decreasing trend";
  }
}

}  // namespace

BlowupReport classify(const RunRecord& run, const Nonlinearity& nl, const ClassifyOptions& opt) {
  BlowupReport rep;
  try {
    const auto& S = run.snapshots;
    if (S.empty()) {
      rep.reason = "run has no snapshots";
      return rep;
    }
    rep.argmax_settled = run.settle_time.has_value();
    if (!rep.argmax_settled) rep.notes.push_back("maximum not settled at the origin");
    if (run.termination == Termination::horizon) {
      double t_end = S.back().t;
      double half = -1, quarter = -1;
      for (const auto& s : S) {
        if (s.t >= 0.5 * t_end) half = std::max(half, s.max_value);
        if (s.t >= 0.75 * t_end) quarter = std::max(quarter, s.max_value);
      }
      rep.M_limsup_half = half;
      rep.M_limsup_quarter = quarter;
      rep.delta = delta_sup_series(run);
      if (std::fabs(half - quarter) <= opt.bounded_rel * std::fabs(half)) {
        rep.verdict = Verdict::global_bounded;
        rep.reason = "sup norm stationary over the second half of the run";
      } else {
        rep.reason = "sup norm still changing at the horizon";
      }
      return rep;
    }
    classify_blowup(run, nl, opt, rep);
  } catch (const std::exception& e) {
    rep.verdict = Verdict::inconclusive;
    rep.reason = std::string("internal failure: ") + e.what();
  }
  return rep;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json();
}

}  // namespace

std::string render_report_json(const BlowupReport& r) {
  nlohmann::json j;
  j["verdict"] = to_string(r.verdict);
  j["reason"] = r.reason;
  j["notes"] = r.notes;
  j["T_est"] = opt_json(r.T_est);
  if (r.fit) {
    j["fit"] = {{"a", r.fit->a},
                {"c", r.fit->c},
                {"rms", r.fit->rms},
                {"window_size", r.fit->window_size},
                {"lower_bound", r.fit->lower_bound},
                {"consistent", r.fit->consistent}};
  }
  j["trusted_t_end"] = r.trusted_t_end;
  j["window"] = {{"t_begin", r.window_t_begin}, {"t_end", r.window_t_end}, {"size", r.window_size}};
  j["ratio_liminf"] = opt_json(r.ratio_liminf);
  j["ratio_limsup"] = opt_json(r.ratio_limsup);
  j["delta_min"] = opt_json(r.delta_min);
  j["M_limsup_half"] = opt_json(r.M_limsup_half);
  j["M_limsup_quarter"] = opt_json(r.M_limsup_quarter);
  j["argmax_settled"] = r.argmax_settled;
  return j.dump(2) + "\n";
}

std::string render_series_csv(const Series& s, const std::string& value_name) {
  io::CsvTable t;
  t.header = {"t", value_name};
  for (auto [a, b] : s) t.rows.push_back({a, b});
  return io::render_csv(t);
}

}  // namespace superheat
