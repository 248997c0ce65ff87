#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "superheat/nonlinearity.hpp"
#include "superheat/radial_pde.hpp"

namespace superheat {

enum class Verdict { global_bounded, type_I, type_II_suspect, inconclusive };
std::string to_string(Verdict v);

using Series = std::vector<std::pair<double, double>>;

// (t, F(M(t)) / (T_est - t)) for snapshots before T_est with finite F(M).
Series ratio_series(const RunRecord& run, double T_est);

// delta(t_j) = max over later snapshots s of (F(M(t_j)) - F(M(s))) / (s - t_j).
// Empty with fewer than three snapshots.
Series delta_sup_series(const RunRecord& run);

struct ClassifyOptions {
  double c_min = 0.1;
  double spread = 50.0;
  double bounded_rel = 0.01;

  bool operator==(const ClassifyOptions&) const = default;
};

struct BlowupReport {
  Verdict verdict = Verdict::inconclusive;
  std::string reason;
  std::vector<std::string> notes;

  std::optional<double> T_est;
  std::optional<BlowupTimeFit> fit;
  Series ratio, delta;
  Series derivative_quotient;  // M'(t) / f(M(t)), corroboration only

  // Trusted window and the last resolved F(M)-decade inside it.
  double trusted_t_end = 0.0;
  double window_t_begin = 0.0, window_t_end = 0.0;
  std::size_t window_size = 0;
  std::optional<double> ratio_liminf, ratio_limsup;  // over the window
  std::optional<double> delta_min;                   // over the window
  std::optional<double> M_limsup_half, M_limsup_quarter;
  bool argmax_settled = false;
};

// Never throws on numerical trouble; the verdict is inconclusive instead.
BlowupReport classify(const RunRecord& run, const Nonlinearity& nl,
                      const ClassifyOptions& opt = {});

std::string render_report_json(const BlowupReport& r);
std::string render_series_csv(const Series& s, const std::string& value_name);

}  // namespace superheat
