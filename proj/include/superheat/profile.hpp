#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace superheat {

// A radial function sampled on a strictly increasing grid, with its
// derivative. Singular profiles start at some r > 0 and carry no origin value.
struct RadialProfile {
  std::vector<double> r;
  std::vector<double> value;
  std::vector<double> derivative;
  int N = 0;
  std::optional<double> origin_value;
  // False when derivative holds placeholders (e.g. read from a two-column file).
  bool derivative_known = true;

  std::string nonlinearity;
  std::optional<double> q;
  std::optional<double> residual;

  std::size_t size() const { return r.size(); }
  double r_min() const { return r.front(); }
  double r_max() const { return r.back(); }

  // Throws degenerate_profile on empty, non-increasing or non-finite data.
  void validate() const;
};

// Piecewise cubic Hermite interpolation with the stored derivatives, or
// monotone (PCHIP) slopes when derivatives are absent.
class ProfileInterpolant {
 public:
  explicit ProfileInterpolant(const RadialProfile& p);
  ~ProfileInterpolant();
  ProfileInterpolant(ProfileInterpolant&&) noexcept;
  ProfileInterpolant& operator=(ProfileInterpolant&&) noexcept;

  double r_min() const { return r_min_; }
  double r_max() const { return r_max_; }
  bool covers(double r) const;
  // interpolation_range error outside [r_min, r_max]
  double value(double r) const;
  double derivative(double r) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  double r_min_ = 0.0, r_max_ = 0.0;
};

void write_profile_csv(const std::filesystem::path& path, const RadialProfile& p);
RadialProfile read_profile_csv(const std::filesystem::path& path);
std::string render_profile_csv(const RadialProfile& p);
RadialProfile parse_profile_csv(const std::string& text);

}  // namespace superheat
