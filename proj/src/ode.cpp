#include "superheat/ode.hpp"

#include <algorithm>
#include <cmath>

#include "superheat/error.hpp"
#include "superheat/kernels.hpp"

namespace superheat {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a2[] = {1.0 / 5};
constexpr double a3[] = {3.0 / 40, 9.0 / 40};
constexpr double a4[] = {44.0 / 45, -56.0 / 15, 32.0 / 9};
constexpr double a5[] = {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729};
constexpr double a6[] = {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
                         -5103.0 / 18656};
constexpr double b[] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84};
// 5th minus embedded 4th order weights
constexpr double e[] = {71.0 / 57600,      0.0,          -71.0 / 16695, 71.0 / 1920,
                        -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

}  // namespace

Dopri5::Dopri5(std::size_t n, Rhs rhs, OdeOptions opt)
    : n_(n), rhs_(std::move(rhs)), opt_(opt) {
  y_.assign(n, 0.0);
  y_new_.assign(n, 0.0);
  stage_.assign(n, 0.0);
  err_.assign(n, 0.0);
  for (auto& k : k_) k.assign(n, 0.0);
}

void Dopri5::reset(double t, const std::vector<double>& y) {
  if (y.size() != n_) fail(ErrorCode::domain, "state size mismatch");
  t_ = t;
  y_ = y;
  rhs_(t_, y_.data(), k_[0].data());
  ++evals_;
}

Dopri5::StepResult Dopri5::try_step(double h) {
  const auto& kt = kernels::active();
  const double* ks[7];
  for (int i = 0; i < 7; ++i) ks[i] = k_[i].data();

  kt.combine(y_.data(), h, a2, ks, 1, stage_.data(), n_);
  rhs_(t_ + c2 * h, stage_.data(), k_[1].data());
  kt.combine(y_.data(), h, a3, ks, 2, stage_.data(), n_);
  rhs_(t_ + c3 * h, stage_.data(), k_[2].data());
  kt.combine(y_.data(), h, a4, ks, 3, stage_.data(), n_);
  rhs_(t_ + c4 * h, stage_.data(), k_[3].data());
  kt.combine(y_.data(), h, a5, ks, 4, stage_.data(), n_);
  rhs_(t_ + c5 * h, stage_.data(), k_[4].data());
  kt.combine(y_.data(), h, a6, ks, 5, stage_.data(), n_);
  rhs_(t_ + h, stage_.data(), k_[5].data());
  kt.combine(y_.data(), h, b, ks, 6, y_new_.data(), n_);
  rhs_(t_ + h, y_new_.data(), k_[6].data());
  evals_ += 6;
  kt.combine(nullptr, h, e, ks, 7, err_.data(), n_);

  double err = kt.scaled_max_error(err_.data(), y_.data(), y_new_.data(), opt_.atol, opt_.rtol, n_);
  StepResult r;
  r.error = err;
  double factor;
  if (!std::isfinite(err)) {
    factor = 0.2;
  } else if (err == 0.0) {
    factor = 5.0;
  } else {
    factor = std::clamp(opt_.safety * std::pow(err, -0.2), 0.2, 5.0);
  }
  if (std::isfinite(err) && err <= 1.0) {
    r.accepted = true;
    t_ += h;
    std::swap(y_, y_new_);
    std::swap(k_[0], k_[6]);
    ++accepted_;
  } else {
    r.accepted = false;
    factor = std::min(factor, 1.0);
    ++rejected_;
  }
  r.h_next = std::copysign(std::min(std::fabs(h) * factor, opt_.h_max), h);
  return r;
}

Dopri5::Status Dopri5::integrate(double t_end, double h0, const Observer& observer) {
  double dir = t_end >= t_ ? 1.0 : -1.0;
  double h = std::copysign(std::min(std::fabs(h0), opt_.h_max), dir);
  while ((t_end - t_) * dir > 0) {
    double remaining = t_end - t_;
    bool last = std::fabs(h) >= std::fabs(remaining);
    double step = last ? remaining : h;
    if (std::fabs(step) < opt_.h_min && !last) return Status::step_underflow;
    StepResult r = try_step(step);
    if (r.accepted) {
      if (last) t_ = t_end;
      if (observer && !observer(t_, y_, k_[0])) return Status::stopped;
      if (!last || std::fabs(r.h_next) > std::fabs(h)) h = r.h_next;
    } else {
      h = r.h_next;
      if (std::fabs(h) < opt_.h_min) return Status::step_underflow;
    }
  }
  return Status::reached;
}

}  // namespace superheat
