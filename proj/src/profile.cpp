#include "superheat/profile.hpp"

#include <cmath>
// Boost 1.74's pchip.hpp calls unqualified isnan.
using std::isnan;
#include <boost/math/interpolators/cubic_hermite.hpp>
#include <boost/math/interpolators/pchip.hpp>
#include <functional>

#include "superheat/error.hpp"
#include "superheat/io.hpp"

namespace superheat {

void RadialProfile::validate() const {
  if (r.size() < 2) fail(ErrorCode::degenerate_profile, "profile needs at least two samples");
  if (value.size() != r.size() || derivative.size() != r.size())
    fail(ErrorCode::degenerate_profile, "profile columns differ in length");
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!std::isfinite(r[i]) || !std::isfinite(value[i]) || !std::isfinite(derivative[i]))
      fail(ErrorCode::degenerate_profile, "profile contains non-finite samples");
    if (i && !(r[i] > r[i - 1]))
      fail(ErrorCode::degenerate_profile, "profile radii must be strictly increasing");
  }
}

struct ProfileInterpolant::Impl {
  std::function<double(double)> value;
  std::function<double(double)> prime;
};

ProfileInterpolant::ProfileInterpolant(const RadialProfile& p) : impl_(std::make_unique<Impl>()) {
  p.validate();
  r_min_ = p.r.front();
  r_max_ = p.r.back();
  auto x = p.r;
  auto y = p.value;
  if (p.derivative_known || p.r.size() < 4) {
    auto dy = p.derivative;
    auto spline = std::make_shared<boost::math::interpolators::cubic_hermite<std::vector<double>>>(
        std::move(x), std::move(y), std::move(dy));
    impl_->value = [spline](double t) { return (*spline)(t); };
    impl_->prime = [spline](double t) { return spline->prime(t); };
  } else {
    auto spline = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(
        std::move(x), std::move(y));
    impl_->value = [spline](double t) { return (*spline)(t); };
    impl_->prime = [spline](double t) { return spline->prime(t); };
  }
}

ProfileInterpolant::~ProfileInterpolant() = default;
ProfileInterpolant::ProfileInterpolant(ProfileInterpolant&&) noexcept = default;
ProfileInterpolant& ProfileInterpolant::operator=(ProfileInterpolant&&) noexcept = default;

bool ProfileInterpolant::covers(double r) const {
  double slack = 1e-12 * std::max(1.0, std::fabs(r_max_));
  return r >= r_min_ - slack && r <= r_max_ + slack;
}

static double clamp_to(double r, double lo, double hi) { return std::min(std::max(r, lo), hi); }

double ProfileInterpolant::value(double r) const {
  if (!covers(r)) fail(ErrorCode::interpolation_range, "radius outside the profile");
  return impl_->value(clamp_to(r, r_min_, r_max_));
}

double ProfileInterpolant::derivative(double r) const {
  if (!covers(r)) fail(ErrorCode::interpolation_range, "radius outside the profile");
  return impl_->prime(clamp_to(r, r_min_, r_max_));
}

std::string render_profile_csv(const RadialProfile& p) {
  io::CsvTable t;
  t.comments.push_back("N=" + std::to_string(p.N));
  t.comments.push_back("q=" + (p.q ? io::format_double(*p.q) : std::string("unknown")));
  t.comments.push_back("nonlinearity=" + (p.nonlinearity.empty() ? "unknown" : p.nonlinearity));
  t.comments.push_back("residual=" +
                       (p.residual ? io::format_double(*p.residual) : std::string("unknown")));
  if (p.origin_value) t.comments.push_back("origin_value=" + io::format_double(*p.origin_value));
  t.header = {"r", "value", "derivative"};
  for (std::size_t i = 0; i < p.r.size(); ++i)
    t.rows.push_back({p.r[i], p.value[i], p.derivative[i]});
  return io::render_csv(t);
}

void write_profile_csv(const std::filesystem::path& path, const RadialProfile& p) {
  io::write_atomic(path, render_profile_csv(p));
}

RadialProfile parse_profile_csv(const std::string& text) {
  io::CsvTable t = io::parse_csv(text);
  RadialProfile p;
  for (const auto& c : t.comments) {
    auto eq = c.find('=');
    if (eq == std::string::npos) continue;
    std::string key = c.substr(0, eq), val = c.substr(eq + 1);
    if (key == "N") p.N = std::stoi(val);
    else if (key == "q" && val != "unknown") p.q = io::parse_double(val);
    else if (key == "nonlinearity" && val != "unknown") p.nonlinearity = val;
    else if (key == "residual" && val != "unknown") p.residual = io::parse_double(val);
    else if (key == "origin_value") p.origin_value = io::parse_double(val);
  }
  std::size_t cr = t.column("r"), cv = t.column("value");
  std::size_t cd = 0;
  bool has_d = true;
  try {
    cd = t.column("derivative");
  } catch (const Error&) {
    has_d = false;
  }
  for (const auto& row : t.rows) {
    p.r.push_back(row[cr]);
    p.value.push_back(row[cv]);
    p.derivative.push_back(has_d ? row[cd] : 0.0);
  }
  p.derivative_known = has_d;
  p.validate();
  return p;
}

RadialProfile read_profile_csv(const std::filesystem::path& path) {
  return parse_profile_csv(io::read_file(path));
}

}  // namespace superheat
