#include "superheat/intersections.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "superheat/error.hpp"
#include "superheat/io.hpp"
#include "superheat/radial_pde.hpp"

namespace superheat {

namespace {

// Lower end of the usable range of p on an interval starting at a.
double usable_start(const RadialProfile& p, double a, const char* which) {
  double slack = 1e-12 * std::max(1.0, std::fabs(a));
  if (p.r_min() <= a + slack) return a;
  if (a == 0.0 && !p.origin_value) return p.r_min();
  fail(ErrorCode::insufficient_overlap,
       std::string("profile ") + which + " starts at r = " + io::format_double(p.r_min()) +
           ", after the interval start " + io::format_double(a));
}

struct Crossing {
  double r;
  double cell;  // local grid spacing
};

}  // namespace

IntersectionReport count_intersections(const RadialProfile& A, const RadialProfile& B,
                                       double a, double b, const IntersectionOptions& opt) {
  if (!(b > a)) fail(ErrorCode::domain, "empty interval");
  A.validate();
  B.validate();
  double lo = std::max(usable_start(A, a, "A"), usable_start(B, a, "B"));
  double hi_slack = 1e-12 * std::max(1.0, std::fabs(b));
  if (A.r_max() < b - hi_slack || B.r_max() < b - hi_slack)
    fail(ErrorCode::insufficient_overlap, "profiles do not reach the interval end " +
                                              io::format_double(b));
  if (!(lo < b)) fail(ErrorCode::insufficient_overlap, "profiles share no part of the interval");

  ProfileInterpolant IA(A), IB(B);
  auto clampA = [&](double r) { return std::clamp(r, IA.r_min(), IA.r_max()); };
  auto clampB = [&](double r) { return std::clamp(r, IB.r_min(), IB.r_max()); };
  auto eval = [&](double r, double& scale) {
    double va = IA.value(clampA(r)), vb = IB.value(clampB(r));
    scale = std::max(std::fabs(va), std::fabs(vb));
    return va - vb;
  };

  std::vector<double> grid;
  grid.reserve(A.size() + B.size() + 2);
  grid.push_back(lo);
  for (const auto* p : {&A, &B})
    for (double r : p->r)
      if (r > lo && r < b) grid.push_back(r);
  grid.push_back(b);
  std::sort(grid.begin(), grid.end());
  {
    std::vector<double> g;
    for (double r : grid)
      if (g.empty() || r - g.back() > 1e-14 * std::max(1.0, std::fabs(r))) g.push_back(r);
    grid.swap(g);
  }

  IntersectionReport rep;
  rep.a = a;
  rep.b = b;
  std::size_t n = grid.size();
  std::vector<int> sign(n, 0);
  std::vector<double> D(n);
  bool any = false;
  for (std::size_t i = 0; i < n; ++i) {
    double scale;
    D[i] = eval(grid[i], scale);
    double tau = std::max(opt.eps_abs, opt.eps_rel * scale);
    rep.tolerance_used = std::max(rep.tolerance_used, tau);
    if (std::fabs(D[i]) > tau) {
      sign[i] = D[i] > 0 ? 1 : -1;
      any = true;
    }
  }
  if (!any)
    fail(ErrorCode::degenerate_profile, "profiles are indistinguishable on the interval");

  const double width = opt.refine_rel * (b - a);
  std::vector<Crossing> raw;
  std::size_t last = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (sign[i] == 0) continue;
    if (last != n && sign[i] != sign[last]) {
      double x0 = grid[last], x1 = grid[i];
      int s0 = sign[last];
      while (x1 - x0 > width) {
        double xm = 0.5 * (x0 + x1);
        if (xm <= x0 || xm >= x1) break;
        double scale;
        double dm = eval(xm, scale);
        if (dm == 0.0) {
          x0 = x1 = xm;
          break;
        }
        if ((dm > 0) == (s0 > 0)) x0 = xm;
        else x1 = xm;
      }
      double cell = grid[i] - grid[i - 1];
      if (i + 1 < n) cell = std::max(cell, grid[i + 1] - grid[i]);
      if (last > 0) cell = std::max(cell, grid[last] - grid[last - 1]);
      raw.push_back({0.5 * (x0 + x1), cell});
    }
    last = i;
  }

  // Crossings closer than min_sep cells form a cluster; an even cluster is a
  // touch (no net sign change), an odd one a single zero.
  for (std::size_t i = 0; i < raw.size();) {
    std::size_t j = i + 1;
    while (j < raw.size() &&
           raw[j].r - raw[j - 1].r < opt.min_sep_cells * std::max(raw[j].cell, raw[j - 1].cell))
      ++j;
    std::size_t m = j - i;
    if (m % 2 == 1) rep.zero_locations.push_back(raw[i + m / 2].r);
    rep.near_touches += static_cast<int>(m / 2);
    i = j;
  }
  rep.count = static_cast<int>(rep.zero_locations.size());
  for (std::size_t i = 1; i < rep.zero_locations.size(); ++i) {
    double gap = rep.zero_locations[i] - rep.zero_locations[i - 1];
    rep.min_gap = rep.min_gap ? std::min(*rep.min_gap, gap) : gap;
    auto it = std::lower_bound(grid.begin(), grid.end(), rep.zero_locations[i]);
    std::size_t k = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - grid.begin(), 1), n - 1);
    if (gap < 2 * (grid[k] - grid[k - 1])) ++rep.close_pairs;
  }
  return rep;
}

IntersectionTrace intersection_trace(const RunRecord& run, const RadialProfile& Ustar, double a,
                                     double b, const IntersectionOptions& opt) {
  IntersectionTrace tr;
  for (std::size_t i = 0; i < run.snapshots.size(); ++i) {
    RadialProfile p = snapshot_profile(run, i);
    tr.t.push_back(run.snapshots[i].t);
    try {
      auto rep = count_intersections(p, Ustar, a, b, opt);
      tr.counts.push_back(rep.count);
      tr.locations.push_back(std::move(rep.zero_locations));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::degenerate_profile) throw;
      tr.counts.push_back(-1);
      tr.locations.emplace_back();
    }
  }
  std::size_t n = tr.counts.size();
  if (n > 0) {
    std::size_t from = n - std::max<std::size_t>(1, n / 3);
    int v = tr.counts[from];
    bool same = v >= 0;
    for (std::size_t i = from; i < n && same; ++i) same = tr.counts[i] == v;
    tr.tail_constant = same;
    if (same) tr.tail_value = v;
  }
  return tr;
}

std::string render_trace_csv(const IntersectionTrace& trace) {
  io::CsvTable t;
  t.header = {"t", "count"};
  for (std::size_t i = 0; i < trace.t.size(); ++i)
    t.rows.push_back({trace.t[i], static_cast<double>(trace.counts[i])});
  return io::render_csv(t);
}

std::string render_trace_json(const IntersectionTrace& trace) {
  nlohmann::json j;
  j["tail_constant"] = trace.tail_constant;
  j["tail_value"] = trace.tail_value ? nlohmann::json(*trace.tail_value) : nlohmann::json();
  auto& snaps = j["snapshots"] = nlohmann::json::array();
  for (std::size_t i = 0; i < trace.t.size(); ++i)
    snaps.push_back({{"t", trace.t[i]}, {"count", trace.counts[i]}, {"zeros", trace.locations[i]}});
  return j.dump(2) + "\n";
}

std::string render_report_json(const IntersectionReport& r) {
  nlohmann::json j;
  j["interval"] = {r.a, r.b};
  j["count"] = r.count;
  j["zero_locations"] = r.zero_locations;
  j["min_gap"] = r.min_gap ? nlohmann::json(*r.min_gap) : nlohmann::json();
  j["tolerance_used"] = r.tolerance_used;
  j["near_touches"] = r.near_touches;
  j["close_pairs"] = r.close_pairs;
  return j.dump(2) + "\n";
}

}  // namespace superheat
