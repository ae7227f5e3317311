#pragma once

// Shared helpers for the test programs: seeded random scales and systems, and
// an independent reference integrator built on Boost.Odeint.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "chronoctl/expr.hpp"
#include "chronoctl/linsys.hpp"
#include "chronoctl/timescale.hpp"

namespace testing_support {

using chronoctl::Interval;
using chronoctl::Rational;
using chronoctl::TimeScale;

inline std::int64_t pick(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Mixed scale: 1..6 components, each an isolated point or an interval,
/// endpoints on the lattice (1/den)Z with a random denominator.
inline TimeScale random_mixed_scale(std::mt19937_64& rng, bool allow_dense = true,
                                    std::int64_t max_den = 12) {
  const std::int64_t den = pick(rng, 1, max_den);
  const int count = static_cast<int>(pick(rng, 1, 6));
  std::vector<Interval> comps;
  Rational at(pick(rng, -4 * den, 2 * den), den);
  for (int c = 0; c < count; ++c) {
    const bool point = !allow_dense || pick(rng, 0, 9) < 4;
    const Rational len = point ? Rational(0) : Rational(pick(rng, 1, 3 * den), den);
    comps.push_back({at, at + len});
    at = at + len + Rational(pick(rng, 1, 2 * den), den);
  }
  return TimeScale(comps);
}

/// Purely discrete window with `points` points and gaps in [0.1, 0.5].
inline TimeScale random_discrete_scale(std::mt19937_64& rng, int points) {
  std::vector<Interval> comps;
  Rational at(pick(rng, -20, 0), 10);
  for (int i = 0; i < points; ++i) {
    comps.push_back({at, at});
    at += Rational(pick(rng, 1, 5), 10);
  }
  return TimeScale(comps);
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                                     double lo = -2.0, double hi = 2.0) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = uniform(rng, lo, hi);
  return m;
}

/// Random expression entry: constant, linear in s, or a bounded trig term.
inline std::string random_entry(std::mt19937_64& rng) {
  const double a = std::round(uniform(rng, -2, 2) * 100) / 100;
  const double b = std::round(uniform(rng, -1, 1) * 100) / 100;
  switch (pick(rng, 0, 2)) {
    case 0: return std::to_string(a);
    case 1: return std::to_string(a) + " + " + std::to_string(b) + "*s";
    default: return std::to_string(a) + " * cos(" + std::to_string(b) + "*s)";
  }
}

inline chronoctl::MatrixExpr random_matrix_expr(std::mt19937_64& rng, Eigen::Index r,
                                                Eigen::Index c) {
  std::vector<std::vector<std::string>> rows(static_cast<std::size_t>(r));
  for (auto& row : rows)
    for (Eigen::Index j = 0; j < c; ++j) row.push_back(random_entry(rng));
  return chronoctl::MatrixExpr::parse(rows);
}

inline chronoctl::LinearSystem constant_system(chronoctl::Direction d, const TimeScale& ts,
                                              const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                              const Eigen::MatrixXd& C, Rational anchor,
                                              std::optional<Rational> step = std::nullopt) {
  using chronoctl::MatrixExpr;
  return chronoctl::LinearSystem(d, ts, MatrixExpr::constant(A), MatrixExpr::constant(B),
                                 MatrixExpr::constant(C), std::nullopt, anchor, step);
}

/// Scale shared by the reference systems: the dual of the union of [2k, 2k+1]
/// generated on the window [-4, 5].
inline TimeScale example_scale() {
  chronoctl::Generator g;
  g.kind = chronoctl::GeneratorKind::periodic_union;
  return chronoctl::from_generator(g, Rational(-4), Rational(5)).dual();
}

/// Reference solution of y' = A(s) y + B(s) v(s) between two times (either
/// direction) with a tight adaptive Dormand-Prince integrator.
inline Eigen::VectorXd reference_flow(const chronoctl::MatrixExpr& A, const chronoctl::MatrixExpr& B,
                                      const chronoctl::Control& v, Eigen::VectorXd y, double from,
                                      double to) {
  namespace odeint = boost::numeric::odeint;
  using State = std::vector<double>;
  const auto n = y.size();
  State x(y.data(), y.data() + n);
  auto rhs = [&](const State& s, State& ds, double t) {
    Eigen::Map<const Eigen::VectorXd> sv(s.data(), n);
    Eigen::VectorXd d = A.eval(t) * sv + B.eval(t) * v(t);
    ds.assign(d.data(), d.data() + n);
  };
  if (from != to) {
    const double dt = (to - from) / 64.0;
    odeint::integrate_adaptive(
        odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(1e-13, 1e-13), rhs, x, from, to,
        dt);
  }
  return Eigen::Map<Eigen::VectorXd>(x.data(), n);
}

}  // namespace testing_support
