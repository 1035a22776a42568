#pragma once

namespace polyflow::detail {

/// One IMEX step for any state type with +, scalar * and a time field.
/// explicit_part(s) = rhs(s) - A s, apply(s) = A s, solve(r, h) = (I - h A)^{-1} r.
/// Order 1: IMEX Euler. Order 2: trapezoid on A, midpoint on the explicit part with
/// an IMEX Euler half step as predictor.
template <class S, class Explicit, class Apply, class Solve>
S imex_step(const S& s, double dt, int order, Explicit&& explicit_part, Apply&& apply,
            Solve&& solve) {
  const S f0 = explicit_part(s);
  S next;
  if (order == 1) {
    next = solve(s + dt * f0, dt);
  } else {
    const S half = solve(s + (0.5 * dt) * f0, 0.5 * dt);
    next = solve(s + (0.5 * dt) * apply(s) + dt * explicit_part(half), 0.5 * dt);
  }
  next.t = s.t + dt;
  return next;
}

}  // namespace polyflow::detail
