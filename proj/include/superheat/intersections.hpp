#pragma once

#include <optional>
#include <string>
#include <vector>

#include "superheat/profile.hpp"

namespace superheat {

struct IntersectionOptions {
  double eps_abs = 0.0;
  double eps_rel = 1e-9;    // noise floor relative to max(|A|, |B|) at the node
  double min_sep_cells = 3.0;
  double refine_rel = 1e-10;  // bisection stops at this fraction of (b - a)
};

struct IntersectionReport {
  double a = 0.0, b = 0.0;
  int count = 0;
  std::vector<double> zero_locations;
  std::optional<double> min_gap;  // absent with fewer than two zeros
  double tolerance_used = 0.0;    // largest noise floor applied on the grid
  // Sign changes that cancelled in pairs inside min_sep (tangential touches).
  int near_touches = 0;
  // Consecutive zeros closer than two local grid cells.
  int close_pairs = 0;
};

// Sign changes of A - B on (a, b]. Both profiles must cover [a, b], except
// that a = 0 may be left uncovered by a profile that is singular at the origin,
// in which case counting starts at that profile's first radius.
// Throws insufficient_overlap and degenerate_profile ("indistinguishable").
IntersectionReport count_intersections(const RadialProfile& A, const RadialProfile& B,
                                       double a, double b,
                                       const IntersectionOptions& opt = {});

struct RunRecord;

struct IntersectionTrace {
  std::vector<double> t;
  // -1 marks a snapshot where the difference was indistinguishable from zero.
  std::vector<int> counts;
  std::vector<std::vector<double>> locations;
  // Counts are constant over the trailing third of the series.
  bool tail_constant = false;
  std::optional<int> tail_value;
};

// Per-snapshot counts of U(., t) - Ustar on (a, b].
IntersectionTrace intersection_trace(const RunRecord& run, const RadialProfile& Ustar,
                                     double a, double b,
                                     const IntersectionOptions& opt = {});

std::string render_trace_csv(const IntersectionTrace& trace);
std::string render_trace_json(const IntersectionTrace& trace);
std::string render_report_json(const IntersectionReport& report);

}  // namespace superheat
