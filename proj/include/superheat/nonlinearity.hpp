#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace superheat {

// Evaluation back end of a single source term f. Everything the transform
// machinery needs is expressed through log f so that fast-growing families
// stay representable after f itself has overflowed.
class NonlinearityModel {
 public:
  virtual ~NonlinearityModel() = default;

  virtual double f(double u) const = 0;
  virtual double f_prime(double u) const = 0;
  virtual double log_f(double u) const { return std::log(f(u)); }
  // f'(u)/f(u)
  virtual double dlog_f(double u) const { return f_prime(u) / f(u); }
  // log f(u + x) - log f(u), accurate for x small relative to u.
  virtual double log_f_increment(double u, double x) const {
    return log_f(u + x) - log_f(u);
  }

  // Closed forms when the family has them.
  virtual std::optional<double> log_F(double) const { return std::nullopt; }
  virtual std::optional<double> F_inverse_from_log(double) const {
    return std::nullopt;
  }
  // int_a^b f
  virtual std::optional<double> integral(double, double) const {
    return std::nullopt;
  }

  // Largest u at which log f and (log f)' are finite doubles.
  virtual double u_cap() const;
  // Largest u at which f itself is a finite double.
  virtual double f_cap() const;
};

enum class Family {
  power,
  power_log,
  power_log_perturbed,
  exp,
  exp_power,
  exp_power_perturbed,
  iterated_exp,
  custom,
};

std::string_view to_string(Family f);

class Nonlinearity {
 public:
  // "power:p=3", "power_log:p=3,r1=1", "power_log_perturbed:p=3,r1=1",
  // "exp", "exp_power:r2=2", "exp_power_perturbed:r2=2,r3=1", "iterexp:n=3".
  static Nonlinearity parse(std::string_view spec);

  static Nonlinearity power(double p);
  static Nonlinearity power_log(double p, double r1);
  static Nonlinearity power_log_perturbed(double p, double r1);
  static Nonlinearity exponential();
  static Nonlinearity exp_power(double r2);
  static Nonlinearity exp_power_perturbed(double r2, double r3);
  static Nonlinearity iterated_exp(int n);

  // f and f' supplied by the caller. Without a companion f itself is used as f0.
  static Nonlinearity custom(std::string label, std::function<double(double)> f,
                             std::function<double(double)> f_prime,
                             std::optional<Nonlinearity> companion = std::nullopt,
                             std::optional<double> q = std::nullopt);

  const std::string& label() const { return label_; }
  Family family() const { return family_; }
  const std::map<std::string, double>& params() const { return params_; }

  double f(double u) const { return model_->f(u); }
  double f_prime(double u) const { return model_->f_prime(u); }
  double log_f(double u) const { return model_->log_f(u); }

  const NonlinearityModel& model() const { return *model_; }
  const NonlinearityModel& f0_model() const {
    return companion_ ? companion_->model() : *model_;
  }

  // True when f0 differs from f.
  bool has_companion() const { return static_cast<bool>(companion_); }
  // f0 as a nonlinearity in its own right (f itself when there is none).
  Nonlinearity companion() const;

  std::optional<double> q_analytic() const { return q_; }

  double u_cap() const { return model_->u_cap(); }
  // Default blow-up threshold M_max for the PDE solver.
  double default_blowup_threshold() const;

 private:
  std::string label_;
  Family family_ = Family::custom;
  std::map<std::string, double> params_;
  std::shared_ptr<const NonlinearityModel> model_;
  std::shared_ptr<const Nonlinearity> companion_;
  std::optional<double> q_;
};

// F(u) = int_u^inf 1/f. Relative tolerance tol.
double eval_log_F(const Nonlinearity& nl, double u, double tol = 1e-11);
double eval_F(const Nonlinearity& nl, double u, double tol = 1e-11);
// f(u) F(u), evaluated without forming either factor.
double eval_fF(const Nonlinearity& nl, double u, double tol = 1e-11);
// f'(u) F(u).
double eval_fprime_F(const Nonlinearity& nl, double u, double tol = 1e-11);

// u with F(u) = v, |F(u) - v| <= tol v. guess seeds the bracket search.
double eval_F_inverse(const Nonlinearity& nl, double v, double tol = 1e-11,
                      std::optional<double> guess = std::nullopt);
double eval_F_inverse_log(const Nonlinearity& nl, double log_v,
                          double tol = 1e-11,
                          std::optional<double> guess = std::nullopt);

// int_a^b f(eta) d eta.
double integrate_f(const Nonlinearity& nl, double a, double b);

struct QEstimate {
  double q = 0.0;
  std::vector<double> u_grid;
  std::vector<double> values;  // f0'(u) F0(u) along u_grid
  double drift = 0.0;          // |last - previous|
  bool converged = true;
  std::string note;
};

QEstimate estimate_q(const Nonlinearity& nl, double u_max = 1e8);
QEstimate estimate_q(const Nonlinearity& nl, const std::vector<double>& u_grid);

struct CriticalExponents {
  int N = 0;
  double p_S = 0.0;
  double p_JL = 0.0;
  double q_S = 0.0;
  double q_JL = 0.0;
};

CriticalExponents critical_exponents(int N);

enum class A3Verdict { satisfied, violated, boundary };
std::string_view to_string(A3Verdict v);

inline constexpr double kQTolerance = 1e-3;
A3Verdict check_A3(double q, int N, double eps_q = kQTolerance);

}  // namespace superheat
