#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "chronoctl/timescale.hpp"

namespace chronoctl {

/// Matrix-valued function sampled on every point of a Grid.
class GridFunction {
 public:
  GridFunction(Grid grid, std::vector<Eigen::MatrixXd> values);

  /// Samples `f` at every grid time.
  template <typename F>
  static GridFunction sample(const Grid& grid, F&& f) {
    std::vector<Eigen::MatrixXd> values;
    values.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) values.emplace_back(f(grid.time(i)));
    return GridFunction(grid, std::move(values));
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  Eigen::Index rows() const { return values_.front().rows(); }
  Eigen::Index cols() const { return values_.front().cols(); }

  const Eigen::MatrixXd& value(std::size_t i) const { return values_[i]; }
  std::span<const Eigen::MatrixXd> values() const { return values_; }
  /// Value at grid point t; throws DomainError when t is not on the grid.
  const Eigen::MatrixXd& at(const Rational& t) const { return values_[grid_.index_of(t)]; }

 private:
  Grid grid_;
  std::vector<Eigen::MatrixXd> values_;
};

/// f*(s) = f(-s) on the dual grid.
GridFunction dualize_function(const GridFunction& f);

/// Delta (Hilger) derivative. Exact difference quotient at right-scattered
/// points; second-order central differences inside dense components and
/// second-order one-sided stencils at their ends. The result lives on the
/// grid of the scale with an isolated maximum removed.
GridFunction delta_derivative(const GridFunction& f);

/// Nabla derivative, the mirror image of delta_derivative (rho, nu). The
/// result lives on the grid of the scale with an isolated minimum removed.
GridFunction nabla_derivative(const GridFunction& f);

/// Cauchy delta integral over [a, b]: mu(t) f(t) at right-scattered points
/// plus trapezoidal quadrature on dense steps, summed left to right.
Eigen::MatrixXd delta_integral(const GridFunction& f, const Rational& a, const Rational& b);

/// Cauchy nabla integral over [a, b]: nu(t) f(t) at left-scattered points
/// plus trapezoidal quadrature on dense steps, summed left to right.
Eigen::MatrixXd nabla_integral(const GridFunction& f, const Rational& a, const Rational& b);

}  // namespace chronoctl
