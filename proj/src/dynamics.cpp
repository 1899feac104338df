#include "planeval/dynamics.hpp"

#include <cmath>

#include "planeval/errors.hpp"

namespace planeval {

namespace {

void check_inputs(const EgoState& s, const Control& u, const StepConfig& c) {
  if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.heading) ||
      !std::isfinite(u.speed) || !std::isfinite(u.turn_rate)) {
    throw InvalidInputError("dynamics: non-finite state or control");
  }
  if (!std::isfinite(c.dt) || c.dt <= 0.0) {
    throw InvalidInputError("dynamics: dt must be positive and finite");
  }
  if (!std::isfinite(c.omega_eps) || c.omega_eps <= 0.0) {
    throw InvalidInputError("dynamics: omega_eps must be positive and finite");
  }
}

}  // namespace

EgoState step_kinematic(const EgoState& s, const Control& u, const StepConfig& c) {
  check_inputs(s, u, c);
  const double a = s.heading + u.turn_rate;
  return {s.x + u.speed * std::cos(a) * c.dt,
          s.y + u.speed * std::sin(a) * c.dt,
          a};
}

Jacobians jacobians_kinematic(const EgoState& s, const Control& u, const StepConfig& c) {
  check_inputs(s, u, c);
  const double a = s.heading + u.turn_rate;
  const double cs = std::cos(a) * c.dt;
  const double sn = std::sin(a) * c.dt;

  Jacobians j;
  j.a_matrix << 1.0, 0.0, -u.speed * sn,
                0.0, 1.0,  u.speed * cs,
                0.0, 0.0,  1.0;
  j.b_matrix << cs, -u.speed * sn,
                sn,  u.speed * cs,
                0.0, 1.0;
  return j;
}

EgoState step_dynamic(const EgoState& s, const Control& u, const StepConfig& c) {
  check_inputs(s, u, c);
  const double v = u.speed;
  const double w = u.turn_rate;
  if (std::abs(w) < c.omega_eps) {
    return {s.x + v * std::cos(s.heading) * c.dt,
            s.y + v * std::sin(s.heading) * c.dt,
            s.heading};
  }
  // Exact arc integration; d_s and d_c are the integrated sine/cosine terms.
  const double h1 = s.heading + w * c.dt;
  const double d_s = (std::sin(h1) - std::sin(s.heading)) / w;
  const double d_c = (std::cos(h1) - std::cos(s.heading)) / w;
  return {s.x + v * d_s, s.y - v * d_c, h1};
}

Jacobians jacobians_dynamic(const EgoState& s, const Control& u, const StepConfig& c) {
  check_inputs(s, u, c);
  const double v = u.speed;
  const double w = u.turn_rate;

  Jacobians j;
  if (std::abs(w) < c.omega_eps) {
    // Straight-line branch: the step does not depend on the turn rate.
    const double cs = std::cos(s.heading) * c.dt;
    const double sn = std::sin(s.heading) * c.dt;
    j.a_matrix << 1.0, 0.0, -v * sn,
                  0.0, 1.0,  v * cs,
                  0.0, 0.0,  1.0;
    j.b_matrix << cs, 0.0,
                  sn, 0.0,
                  0.0, 0.0;
    return j;
  }

  const double h1 = s.heading + w * c.dt;
  const double d_s = (std::sin(h1) - std::sin(s.heading)) / w;
  const double d_c = (std::cos(h1) - std::cos(s.heading)) / w;
  const double b12 = (v / w) * (std::cos(h1) * c.dt - d_s);
  const double b22 = (v / w) * (std::sin(h1) * c.dt + d_c);

  j.a_matrix << 1.0, 0.0, v * d_c,
                0.0, 1.0, v * d_s,
                0.0, 0.0, 1.0;
  j.b_matrix << d_s,  b12,
               -d_c,  b22,
                0.0,  c.dt;
  return j;
}

}  // namespace planeval
