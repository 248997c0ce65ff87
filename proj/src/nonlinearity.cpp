#include "superheat/nonlinearity.hpp"

#include <algorithm>
#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cfloat>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include "superheat/error.hpp"
#include "tail_quadrature.hpp"

namespace superheat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLogMax = std::log(DBL_MAX);

// Largest u with log f(u) <= level, assuming log f increasing for large u.
double solve_log_f_level(const NonlinearityModel& m, double level) {
  double lo = 1.0;
  if (!(m.log_f(lo) <= level)) return lo;
  double hi = 2.0;
  while (hi < 1e300 && std::isfinite(m.log_f(hi)) && m.log_f(hi) <= level) {
    lo = hi;
    hi *= hi;
  }
  if (hi >= 1e300) return lo;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    double mid = std::sqrt(lo * hi);
    if (hi / lo < 1.5) mid = 0.5 * (lo + hi);
    double v = m.log_f(mid);
    if (std::isfinite(v) && v <= level) lo = mid; else hi = mid;
  }
  return lo;
}

class PowerModel final : public NonlinearityModel {
 public:
  explicit PowerModel(double p) : p_(p) {
    if (p == std::floor(p) && p >= 1 && p <= 8) ip_ = static_cast<int>(p);
  }
  double f(double u) const override { return u <= 0 ? 0.0 : pw(u, ip_, p_); }
  double f_prime(double u) const override {
    return u <= 0 ? (p_ < 1 ? kInf : 0.0) : p_ * pw(u, ip_ - 1, p_ - 1);
  }
  double log_f(double u) const override { return p_ * std::log(u); }
  double dlog_f(double u) const override { return p_ / u; }
  double log_f_increment(double u, double x) const override {
    return p_ * std::log1p(x / u);
  }
  std::optional<double> log_F(double u) const override {
    return -(p_ - 1) * std::log(u) - std::log(p_ - 1);
  }
  std::optional<double> F_inverse_from_log(double lv) const override {
    return std::exp(-(lv + std::log(p_ - 1)) / (p_ - 1));
  }
  std::optional<double> integral(double a, double b) const override {
    return (std::pow(b, p_ + 1) - std::pow(a, p_ + 1)) / (p_ + 1);
  }
  double u_cap() const override { return 0.5 * DBL_MAX; }
  double f_cap() const override { return std::exp((kLogMax - 1) / p_); }

 private:
  // Small integer exponents by repeated products; the solver calls f per node.
  static double pw(double u, int n, double p) {
    if (n < 0) return std::pow(u, p);
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= u;
    return r;
  }
  double p_;
  int ip_ = -1;
};

class ExpModel final : public NonlinearityModel {
 public:
  double f(double u) const override { return std::exp(u); }
  double f_prime(double u) const override { return std::exp(u); }
  double log_f(double u) const override { return u; }
  double dlog_f(double) const override { return 1.0; }
  double log_f_increment(double, double x) const override { return x; }
  std::optional<double> log_F(double u) const override { return -u; }
  std::optional<double> F_inverse_from_log(double lv) const override { return -lv; }
  std::optional<double> integral(double a, double b) const override {
    return std::exp(b) - std::exp(a);
  }
  double u_cap() const override { return 0.5 * DBL_MAX; }
  double f_cap() const override { return kLogMax - 1; }
};

class PowerLogModel final : public NonlinearityModel {
 public:
  PowerLogModel(double p, double r) : p_(p), r_(r) {}
  double L(double u) const { return std::log(std::numbers::e + u); }
  double f(double u) const override {
    return u <= 0 ? 0.0 : std::pow(u, p_) * std::pow(L(u), r_);
  }
  double f_prime(double u) const override {
    if (u <= 0) return 0.0;
    double l = L(u);
    return std::pow(u, p_ - 1) * std::pow(l, r_ - 1) *
           (p_ * l + r_ * u / (std::numbers::e + u));
  }
  double log_f(double u) const override {
    return p_ * std::log(u) + r_ * std::log(L(u));
  }
  double dlog_f(double u) const override {
    return p_ / u + r_ / ((std::numbers::e + u) * L(u));
  }
  double log_f_increment(double u, double x) const override {
    return p_ * std::log1p(x / u) +
           r_ * std::log1p(std::log1p(x / (std::numbers::e + u)) / L(u));
  }
  std::optional<double> log_F(double u) const override {
    if (r_ != 0.0) return std::nullopt;
    return -(p_ - 1) * std::log(u) - std::log(p_ - 1);
  }
  std::optional<double> F_inverse_from_log(double lv) const override {
    if (r_ != 0.0) return std::nullopt;
    return std::exp(-(lv + std::log(p_ - 1)) / (p_ - 1));
  }
  double u_cap() const override { return 1e300; }
  double f_cap() const override { return solve_log_f_level(*this, kLogMax - 1); }

 private:
  double p_, r_;
};

class ExpPowerModel final : public NonlinearityModel {
 public:
  explicit ExpPowerModel(double r) : r_(r) {}
  double f(double u) const override { return std::exp(std::pow(u, r_)); }
  double f_prime(double u) const override {
    if (u <= 0) return r_ < 1 ? kInf : (r_ == 1 ? 1.0 : 0.0);
    return r_ * std::pow(u, r_ - 1) * f(u);
  }
  double log_f(double u) const override { return std::pow(u, r_); }
  double dlog_f(double u) const override {
    if (u <= 0) return r_ < 1 ? kInf : (r_ == 1 ? 1.0 : 0.0);
    return r_ * std::pow(u, r_ - 1);
  }
  double log_f_increment(double u, double x) const override {
    if (u <= 0) return std::pow(x, r_);
    return std::pow(u, r_) * std::expm1(r_ * std::log1p(x / u));
  }
  std::optional<double> log_F(double u) const override {
    if (r_ != 1.0) return std::nullopt;
    return -u;
  }
  std::optional<double> F_inverse_from_log(double lv) const override {
    if (r_ != 1.0) return std::nullopt;
    return -lv;
  }
  double u_cap() const override { return std::pow(0.25 * DBL_MAX, 1.0 / r_); }
  double f_cap() const override { return std::pow(kLogMax - 1, 1.0 / r_); }

 private:
  double r_;
};

class IterExpModel final : public NonlinearityModel {
 public:
  explicit IterExpModel(int n) : n_(n) {}
  // a_0 = u, a_k = exp(a_{k-1})
  double a(double u, int k) const {
    double v = u;
    for (int i = 0; i < k; ++i) v = std::exp(v);
    return v;
  }
  double f(double u) const override { return a(u, n_); }
  double f_prime(double u) const override {
    double v = u, prod = 1.0;
    for (int i = 0; i < n_; ++i) {
      v = std::exp(v);
      prod *= v;
    }
    return prod;
  }
  double log_f(double u) const override { return a(u, n_ - 1); }
  double dlog_f(double u) const override {
    double v = u, prod = 1.0;
    for (int i = 0; i < n_ - 1; ++i) {
      v = std::exp(v);
      prod *= v;
    }
    return prod;
  }
  double log_f_increment(double u, double x) const override {
    // delta a_k = a_k(u) * expm1(delta a_{k-1}), delta a_0 = x
    double ak = u, d = x;
    for (int k = 1; k < n_; ++k) {
      ak = std::exp(ak);
      d = ak * std::expm1(d);
      if (!std::isfinite(d)) return kInf;
    }
    return d;
  }
  std::optional<double> log_F(double u) const override {
    if (n_ != 1) return std::nullopt;
    return -u;
  }
  std::optional<double> F_inverse_from_log(double lv) const override {
    if (n_ != 1) return std::nullopt;
    return -lv;
  }
  double u_cap() const override {
    if (n_ == 1) return 0.5 * DBL_MAX;
    double c = kLogMax - 10;
    for (int i = 0; i < n_ - 2; ++i) c = std::log(c);
    return c;
  }
  double f_cap() const override {
    double c = kLogMax - 1;
    for (int i = 0; i < n_ - 1; ++i) c = std::log(c);
    return c;
  }

 private:
  int n_;
};

// f = f0 (1 + rho) with rho -> 0; the increment is split so that the large
// f0 part keeps its accurate form.
class PerturbedModel : public NonlinearityModel {
 public:
  explicit PerturbedModel(std::shared_ptr<const NonlinearityModel> base)
      : base_(std::move(base)) {}
  virtual double rho(double u) const = 0;
  virtual double rho_prime(double u) const = 0;

  double f(double u) const override { return base_->f(u) * (1 + rho(u)); }
  double f_prime(double u) const override {
    return base_->f_prime(u) * (1 + rho(u)) + base_->f(u) * rho_prime(u);
  }
  double log_f(double u) const override {
    return base_->log_f(u) + std::log1p(rho(u));
  }
  double dlog_f(double u) const override {
    return base_->dlog_f(u) + rho_prime(u) / (1 + rho(u));
  }
  double log_f_increment(double u, double x) const override {
    return base_->log_f_increment(u, x) + std::log1p(rho(u + x)) -
           std::log1p(rho(u));
  }
  double u_cap() const override { return base_->u_cap(); }
  double f_cap() const override { return base_->f_cap(); }

 protected:
  std::shared_ptr<const NonlinearityModel> base_;
};

// (u^p + u e^{sin u}) log(e+u)^r1
class PowerLogPerturbedModel final : public PerturbedModel {
 public:
  PowerLogPerturbedModel(double p, double r)
      : PerturbedModel(std::make_shared<PowerLogModel>(p, r)), p_(p), r_(r) {}
  double rho(double u) const override {
    return std::pow(u, 1 - p_) * std::exp(std::sin(u));
  }
  double rho_prime(double u) const override {
    return std::exp(std::sin(u)) * std::pow(u, -p_) * ((1 - p_) + u * std::cos(u));
  }
  double f(double u) const override {
    if (u <= 0) return 0.0;
    return (std::pow(u, p_) + u * std::exp(std::sin(u))) *
           std::pow(std::log(std::numbers::e + u), r_);
  }
  double f_prime(double u) const override {
    if (u <= 0) return 1.0;  // slope of u e^{sin u} at 0; L(0) = 1
    double l = std::log(std::numbers::e + u);
    double g = std::pow(u, p_) + u * std::exp(std::sin(u));
    double gp = p_ * std::pow(u, p_ - 1) + std::exp(std::sin(u)) * (1 + u * std::cos(u));
    return std::pow(l, r_) * gp + g * r_ * std::pow(l, r_ - 1) / (std::numbers::e + u);
  }

 private:
  double p_, r_;
};

// exp(u^r2) + u^r3 cos^2 u
class ExpPowerPerturbedModel final : public PerturbedModel {
 public:
  ExpPowerPerturbedModel(double r2, double r3)
      : PerturbedModel(std::make_shared<ExpPowerModel>(r2)), r2_(r2), r3_(r3) {}
  double rho(double u) const override {
    if (u <= 0) return 0.0;
    double c = std::cos(u);
    return std::pow(u, r3_) * c * c * std::exp(-std::pow(u, r2_));
  }
  double rho_prime(double u) const override {
    if (u <= 0) return r3_ < 1 ? kInf : (r3_ == 1 ? 1.0 : 0.0);
    double c = std::cos(u), s = std::sin(u);
    double e = std::exp(-std::pow(u, r2_));
    return e * (r3_ * std::pow(u, r3_ - 1) * c * c - std::pow(u, r3_) * 2 * s * c -
                r2_ * std::pow(u, r2_ - 1) * std::pow(u, r3_) * c * c);
  }
  double f(double u) const override {
    double c = std::cos(u);
    return std::exp(std::pow(u, r2_)) + (u <= 0 ? 0.0 : std::pow(u, r3_) * c * c);
  }
  double f_prime(double u) const override {
    if (u <= 0) return base_->f_prime(0.0) + rho_prime(0.0);
    double c = std::cos(u), s = std::sin(u);
    return r2_ * std::pow(u, r2_ - 1) * std::exp(std::pow(u, r2_)) +
           r3_ * std::pow(u, r3_ - 1) * c * c - std::pow(u, r3_) * 2 * s * c;
  }

 private:
  double r2_, r3_;
};

class CustomModel final : public NonlinearityModel {
 public:
  CustomModel(std::function<double(double)> f, std::function<double(double)> fp)
      : f_(std::move(f)), fp_(std::move(fp)) {}
  double f(double u) const override { return f_(u); }
  double f_prime(double u) const override { return fp_(u); }
  double u_cap() const override { return f_cap(); }
  double f_cap() const override { return solve_log_f_level(*this, kLogMax - 1); }

 private:
  std::function<double(double)> f_, fp_;
};

double parse_number(std::string_view text, std::string_view key) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
    fail(ErrorCode::config_error, "bad value for '" + std::string(key) + "': '" +
                                      std::string(text) + "'");
  return v;
}

std::string fmt_param(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

double NonlinearityModel::u_cap() const { return f_cap(); }
double NonlinearityModel::f_cap() const { return solve_log_f_level(*this, kLogMax - 1); }

std::string_view to_string(Family f) {
  switch (f) {
    case Family::power: return "power";
    case Family::power_log: return "power_log";
    case Family::power_log_perturbed: return "power_log_perturbed";
    case Family::exp: return "exp";
    case Family::exp_power: return "exp_power";
    case Family::exp_power_perturbed: return "exp_power_perturbed";
    case Family::iterated_exp: return "iterexp";
    case Family::custom: return "custom";
  }
  return "custom";
}

Nonlinearity Nonlinearity::power(double p) {
  if (!(p > 1)) fail(ErrorCode::domain, "power family needs p > 1");
  Nonlinearity nl;
  nl.family_ = Family::power;
  nl.params_ = {{"p", p}};
  nl.label_ = "power:p=" + fmt_param(p);
  nl.model_ = std::make_shared<PowerModel>(p);
  nl.q_ = p / (p - 1);
  return nl;
}

Nonlinearity Nonlinearity::power_log(double p, double r1) {
  if (!(p > 1)) fail(ErrorCode::domain, "power_log family needs p > 1");
  Nonlinearity nl;
  nl.family_ = Family::power_log;
  nl.params_ = {{"p", p}, {"r1", r1}};
  nl.label_ = "power_log:p=" + fmt_param(p) + ",r1=" + fmt_param(r1);
  nl.model_ = std::make_shared<PowerLogModel>(p, r1);
  nl.q_ = p / (p - 1);
  return nl;
}

Nonlinearity Nonlinearity::power_log_perturbed(double p, double r1) {
  if (!(p > 1)) fail(ErrorCode::domain, "power_log_perturbed family needs p > 1");
  Nonlinearity nl;
  nl.family_ = Family::power_log_perturbed;
  nl.params_ = {{"p", p}, {"r1", r1}};
  nl.label_ = "power_log_perturbed:p=" + fmt_param(p) + ",r1=" + fmt_param(r1);
  nl.model_ = std::make_shared<PowerLogPerturbedModel>(p, r1);
  nl.companion_ = std::make_shared<Nonlinearity>(power_log(p, r1));
  nl.q_ = p / (p - 1);
  return nl;
}

Nonlinearity Nonlinearity::exponential() {
  Nonlinearity nl;
  nl.family_ = Family::exp;
  nl.label_ = "exp";
  nl.model_ = std::make_shared<ExpModel>();
  nl.q_ = 1.0;
  return nl;
}

Nonlinearity Nonlinearity::exp_power(double r2) {
  if (!(r2 > 0)) fail(ErrorCode::domain, "exp_power family needs r2 > 0");
  Nonlinearity nl;
  nl.family_ = Family::exp_power;
  nl.params_ = {{"r2", r2}};
  nl.label_ = "exp_power:r2=" + fmt_param(r2);
  nl.model_ = std::make_shared<ExpPowerModel>(r2);
  nl.q_ = 1.0;
  return nl;
}

Nonlinearity Nonlinearity::exp_power_perturbed(double r2, double r3) {
  if (!(r2 > 0) || !(r3 > 0))
    fail(ErrorCode::domain, "exp_power_perturbed family needs r2 > 0 and r3 > 0");
  Nonlinearity nl;
  nl.family_ = Family::exp_power_perturbed;
  nl.params_ = {{"r2", r2}, {"r3", r3}};
  nl.label_ = "exp_power_perturbed:r2=" + fmt_param(r2) + ",r3=" + fmt_param(r3);
  nl.model_ = std::make_shared<ExpPowerPerturbedModel>(r2, r3);
  nl.companion_ = std::make_shared<Nonlinearity>(exp_power(r2));
  nl.q_ = 1.0;
  return nl;
}

Nonlinearity Nonlinearity::iterated_exp(int n) {
  if (n < 1) fail(ErrorCode::domain, "iterexp needs n >= 1");
  Nonlinearity nl;
  nl.family_ = Family::iterated_exp;
  nl.params_ = {{"n", double(n)}};
  nl.label_ = "iterexp:n=" + std::to_string(n);
  nl.model_ = std::make_shared<IterExpModel>(n);
  nl.q_ = 1.0;
  return nl;
}

Nonlinearity Nonlinearity::custom(std::string label, std::function<double(double)> f,
                                  std::function<double(double)> f_prime,
                                  std::optional<Nonlinearity> companion,
                                  std::optional<double> q) {
  Nonlinearity nl;
  nl.family_ = Family::custom;
  nl.label_ = std::move(label);
  nl.model_ = std::make_shared<CustomModel>(std::move(f), std::move(f_prime));
  if (companion) nl.companion_ = std::make_shared<Nonlinearity>(*companion);
  nl.q_ = q;
  return nl;
}

Nonlinearity Nonlinearity::parse(std::string_view spec) {
  auto colon = spec.find(':');
  std::string family(spec.substr(0, colon));
  std::map<std::string, double> kv;
  if (colon != std::string_view::npos) {
    std::string_view rest = spec.substr(colon + 1);
    while (!rest.empty()) {
      auto comma = rest.find(',');
      std::string_view item = rest.substr(0, comma);
      auto eq = item.find('=');
      if (eq == std::string_view::npos)
        fail(ErrorCode::config_error, "expected key=value in nonlinearity spec '" +
                                          std::string(spec) + "'");
      std::string key(item.substr(0, eq));
      kv[key] = parse_number(item.substr(eq + 1), key);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  auto take = [&](const char* key, std::optional<double> dflt = std::nullopt) {
    auto it = kv.find(key);
    if (it == kv.end()) {
      if (dflt) return *dflt;
      fail(ErrorCode::config_error,
           "nonlinearity '" + family + "' needs parameter " + key);
    }
    double v = it->second;
    kv.erase(it);
    return v;
  };
  Nonlinearity out;
  if (family == "power") {
    out = power(take("p"));
  } else if (family == "power_log") {
    double p = take("p");
    out = power_log(p, take("r1", 1.0));
  } else if (family == "power_log_perturbed") {
    double p = take("p");
    out = power_log_perturbed(p, take("r1", 1.0));
  } else if (family == "exp") {
    out = exponential();
  } else if (family == "exp_power") {
    out = exp_power(take("r2"));
  } else if (family == "exp_power_perturbed") {
    double r2 = take("r2");
    out = exp_power_perturbed(r2, take("r3", 1.0));
  } else if (family == "iterexp" || family == "iterated_exp") {
    double n = take("n");
    if (n != std::floor(n)) fail(ErrorCode::config_error, "iterexp needs integer n");
    out = iterated_exp(int(n));
  } else {
    fail(ErrorCode::config_error, "unknown nonlinearity family '" + family + "'");
  }
  if (!kv.empty())
    fail(ErrorCode::config_error, "unknown parameter '" + kv.begin()->first +
                                      "' for nonlinearity '" + family + "'");
  return out;
}

Nonlinearity Nonlinearity::companion() const {
  return companion_ ? *companion_ : *this;
}

double Nonlinearity::default_blowup_threshold() const {
  switch (family_) {
    case Family::exp: return 30.0;
    case Family::power:
    case Family::power_log:
    case Family::power_log_perturbed: return 1e6;
    case Family::exp_power:
    case Family::exp_power_perturbed: return std::pow(30.0, 1.0 / params_.at("r2"));
    case Family::iterated_exp: {
      double c = 30.0;
      for (int i = 0; i < int(params_.at("n")) - 1; ++i) c = std::log(c);
      return c;
    }
    case Family::custom: return std::min(1e6, solve_log_f_level(*model_, 30.0));
  }
  return 1e6;
}

// ---------------------------------------------------------------------------
// Transform F

namespace {

void check_argument(const NonlinearityModel& m, double u) {
  if (!(u >= 0) || !std::isfinite(u)) fail(ErrorCode::domain, "F needs u >= 0");
  if (u == 0 && !(m.f(0.0) > 0))
    fail(ErrorCode::domain, "F is infinite at u = 0 because f(0) = 0");
  if (u > m.u_cap()) fail(ErrorCode::overflow, "u beyond the representable range of f");
}

double panel_scale(const NonlinearityModel& m, double u) {
  double d = m.dlog_f(u);
  if (std::isfinite(d) && d > 0) return 1.0 / d;
  return std::max(1.0, u);
}

// f(u) F(u) = int_0^inf exp(-(log f(u+x) - log f(u))) dx
double fF_direct(const NonlinearityModel& m, double u, double tol) {
  auto g = [&](double x) {
    double inc = m.log_f_increment(u, x);
    return std::exp(-inc);
  };
  return detail::integrate_tail(g, panel_scale(m, u), tol).value;
}

}  // namespace

// log(f F). With a companion, F = F0 - int_u^inf (1/f0 - 1/f): the
// correction is small and only needs accuracy relative to F0.
static double log_fF_impl(const Nonlinearity& nl, double u, double tol) {
  const NonlinearityModel& m = nl.model();
  check_argument(m, u);
  if (auto lF = m.log_F(u)) return *lF + m.log_f(u);
  if (nl.has_companion()) {
    const NonlinearityModel& m0 = nl.f0_model();
    double lf0 = m0.log_f(u);
    double s0;  // f0(u) F0(u)
    if (auto lF0 = m0.log_F(u)) s0 = std::exp(*lF0 + lf0);
    else s0 = fF_direct(m0, u, tol);
    // scaled by f0(u): int_0^inf (1 - f0/f)(u+x) exp(-inc0(u, x)) dx
    auto g = [&](double x) {
      double ratio = -std::expm1(m0.log_f(u + x) - m.log_f(u + x));
      return ratio * std::exp(-m0.log_f_increment(u, x));
    };
    double corr = detail::integrate_tail(g, panel_scale(m0, u), tol, s0).value;
    return std::log(s0 - corr) - lf0 + m.log_f(u);
  }
  return std::log(fF_direct(m, u, tol));
}

double eval_fF(const Nonlinearity& nl, double u, double tol) {
  return std::exp(log_fF_impl(nl, u, tol));
}

double eval_log_F(const Nonlinearity& nl, double u, double tol) {
  const NonlinearityModel& m = nl.model();
  check_argument(m, u);
  if (auto lF = m.log_F(u)) return *lF;
  double lf = m.log_f(u);
  if (!std::isfinite(lf)) fail(ErrorCode::overflow, "log f not representable");
  return log_fF_impl(nl, u, tol) - lf;
}

double eval_F(const Nonlinearity& nl, double u, double tol) {
  double lF = eval_log_F(nl, u, tol);
  if (lF > kLogMax || lF < std::log(DBL_MIN))
    fail(ErrorCode::overflow, "F(u) not representable as a double; use eval_log_F");
  return std::exp(lF);
}

double eval_fprime_F(const Nonlinearity& nl, double u, double tol) {
  double d = nl.model().dlog_f(u);
  if (!std::isfinite(d)) fail(ErrorCode::overflow, "f'/f not representable");
  return d * eval_fF(nl, u, tol);
}

double eval_F_inverse(const Nonlinearity& nl, double v, double tol,
                      std::optional<double> guess) {
  if (!(v > 0) || !std::isfinite(v)) fail(ErrorCode::domain, "F inverse needs v > 0");
  return eval_F_inverse_log(nl, std::log(v), tol, guess);
}

double eval_F_inverse_log(const Nonlinearity& nl, double lv, double tol,
                          std::optional<double> guess) {
  const NonlinearityModel& m = nl.model();
  if (!std::isfinite(lv)) fail(ErrorCode::domain, "F inverse needs finite log v");
  if (auto u = m.F_inverse_from_log(lv)) {
    if (!(*u >= 0) || !std::isfinite(*u))
      fail(ErrorCode::bracket_failure, "value outside the range of F");
    return *u;
  }
  const double cap = m.u_cap();
  // g(u) = log F(u) - lv is decreasing; g'(u) = -1/(f F).
  struct Eval {
    double g, fF;
  };
  auto eval = [&](double u) {
    double lfF = log_fF_impl(nl, u, 0.1 * tol);
    double lF = lfF - m.log_f(u);
    return Eval{lF - lv, std::exp(lfF)};
  };

  double u0 = guess && *guess > 0 && *guess < cap ? *guess : std::min(1.0, cap);
  double lo = u0, hi = u0;
  Eval elo = eval(lo), ehi = elo;
  if (elo.g < 0) {
    // u too large: move down towards 0
    while (elo.g < 0) {
      hi = lo;
      ehi = elo;
      lo = lo > 1e-3 ? lo * 0.25 : 0.0;
      if (lo == 0.0) {
        if (!(m.f(0.0) > 0))
          fail(ErrorCode::bracket_failure, "no sign change below the starting point");
        elo = eval(0.0);
        if (elo.g < 0) fail(ErrorCode::bracket_failure, "v exceeds F(0)");
        break;
      }
      elo = eval(lo);
    }
  } else {
    while (ehi.g > 0) {
      lo = hi;
      elo = ehi;
      hi = std::min(4.0 * hi + 1.0, cap);
      if (hi <= lo) fail(ErrorCode::bracket_failure, "no sign change below the overflow cap");
      ehi = eval(hi);
      if (ehi.g > 0 && hi >= cap)
        fail(ErrorCode::bracket_failure, "no sign change below the overflow cap");
    }
  }
  // Safeguarded Newton inside [lo, hi].
  double u = std::fabs(elo.g) < std::fabs(ehi.g) ? lo : hi;
  Eval e = std::fabs(elo.g) < std::fabs(ehi.g) ? elo : ehi;
  for (int it = 0; it < 200; ++it) {
    if (std::fabs(e.g) <= tol) return u;
    double next = u + e.g * e.fF;
    if (!(next > lo && next < hi)) {
      next = (lo > 0 && hi / lo > 4) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    }
    if (next == u || hi - lo <= 4 * DBL_EPSILON * hi) return u;
    u = next;
    e = eval(u);
    if (e.g > 0) lo = u; else hi = u;
  }
  fail(ErrorCode::non_convergence, "F inverse iteration did not converge");
}

double integrate_f(const Nonlinearity& nl, double a, double b) {
  if (a == b) return 0.0;
  if (auto v = nl.model().integral(a, b)) return *v;
  if (b < a) return -integrate_f(nl, b, a);
  // Pieces short against the scale of log f, each with a fixed 20-point rule.
  using boost::math::quadrature::gauss;
  auto g = [&](double x) { return nl.f(x); };
  const NonlinearityModel& m = nl.model();
  double sum = 0.0, x = a;
  for (int piece = 0; x < b; ++piece) {
    if (piece == 100000) {
      using boost::math::quadrature::gauss_kronrod;
      return sum + gauss_kronrod<double, 31>::integrate(g, x, b, 15, 1e-12);
    }
    double d = std::fabs(m.dlog_f(x));
    double w = d > 0 && std::isfinite(d) ? 2.0 / d : b - x;
    w = std::min(std::max(w, 1e-6 * (b - a)), b - x);
    double xe = w >= b - x ? b : x + w;
    sum += gauss<double, 20>::integrate(g, x, xe);
    x = xe;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Exponent q

QEstimate estimate_q(const Nonlinearity& nl, double u_max) {
  Nonlinearity f0 = nl.companion();
  double cap = std::min(u_max, 0.5 * f0.u_cap());
  std::vector<double> grid;
  if (cap < 1e4) {
    for (int i = 0; i < 9; ++i) grid.push_back(cap / 2 + cap / 2 * i / 8.0);
  } else {
    for (double u = 10.0; u <= cap * (1 + 1e-12); u *= 10.0) grid.push_back(u);
  }
  return estimate_q(nl, grid);
}

QEstimate estimate_q(const Nonlinearity& nl, const std::vector<double>& u_grid) {
  Nonlinearity f0 = nl.companion();
  QEstimate out;
  for (double u : u_grid) {
    if (u > f0.u_cap()) break;
    out.u_grid.push_back(u);
    out.values.push_back(eval_fprime_F(f0, u, 1e-12));
  }
  const std::size_t n = out.values.size();
  if (n < 2) {
    out.converged = false;
    out.note = "fewer than two admissible grid points";
    out.q = n ? out.values.back() : NAN;
    return out;
  }
  out.drift = std::fabs(out.values[n - 1] - out.values[n - 2]);
  if (out.drift <= 1e-9) {
    out.q = out.values.back();
    out.note = "settled";
  } else {
    // least squares y = a + b x + c x^2, x = 1/log(e + u), on the last five points
    std::size_t m = std::min<std::size_t>(5, n);
    if (m < 4) {
      out.q = out.values.back();
      out.note = "too few points to extrapolate";
    } else {
      Eigen::MatrixXd A(m, 3);
      Eigen::VectorXd y(m);
      for (std::size_t i = 0; i < m; ++i) {
        double x = 1.0 / std::log(std::numbers::e + out.u_grid[n - m + i]);
        A(i, 0) = 1.0;
        A(i, 1) = x;
        A(i, 2) = x * x;
        y(i) = out.values[n - m + i];
      }
      Eigen::Vector3d coef = A.colPivHouseholderQr().solve(y);
      out.q = coef(0);
      out.note = "extrapolated in 1/log u";
    }
    // oscillation: successive differences changing sign beyond the drift scale
    int flips = 0;
    for (std::size_t i = n - m + 2; i < n; ++i) {
      double d1 = out.values[i - 1] - out.values[i - 2];
      double d2 = out.values[i] - out.values[i - 1];
      if (d1 * d2 < 0 && std::min(std::fabs(d1), std::fabs(d2)) > 1e-6) ++flips;
    }
    if (flips > 0) {
      out.converged = false;
      out.note = "sequence oscillates; limit not established";
    }
  }
  if (out.q < 1 - kQTolerance) {
    out.converged = false;
    out.note += "; estimate below 1";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Critical exponents

CriticalExponents critical_exponents(int N) {
  if (N < 1) fail(ErrorCode::domain, "dimension must be at least 1");
  CriticalExponents c;
  c.N = N;
  c.p_S = N >= 3 ? double(N + 2) / double(N - 2) : kInf;
  c.q_S = N >= 3 ? double(N + 2) / 4.0 : 1.0;
  if (N >= 11) {
    double s = std::sqrt(double(N - 1));
    c.p_JL = 1.0 + 4.0 / (N - 4 - 2 * s);
    c.q_JL = (N - 2 * s) / 4.0;
  } else {
    c.p_JL = kInf;
    c.q_JL = 1.0;
  }
  return c;
}

std::string_view to_string(A3Verdict v) {
  switch (v) {
    case A3Verdict::satisfied: return "satisfied";
    case A3Verdict::violated: return "violated";
    case A3Verdict::boundary: return "boundary";
  }
  return "violated";
}

A3Verdict check_A3(double q, int N, double eps_q) {
  if (N < 3) return A3Verdict::violated;
  if (std::fabs(q - 1.0) <= eps_q && N <= 9) return A3Verdict::satisfied;
  CriticalExponents c = critical_exponents(N);
  if (std::fabs(q - c.q_S) <= eps_q || std::fabs(q - c.q_JL) <= eps_q)
    return A3Verdict::boundary;
  if (c.q_JL < q && q < c.q_S) return A3Verdict::satisfied;
  return A3Verdict::violated;
}

}  // namespace superheat
