#include "chronoctl/calculus.hpp"

#include <algorithm>

#include "chronoctl/errors.hpp"

namespace chronoctl {

namespace {

bool same_component(const Grid& g, std::size_t i, std::size_t j) {
  return g.component(i) == g.component(j);
}

// Uniform step of the dense component holding point i (i must not be isolated).
double dense_step_at(const Grid& g, std::size_t i) {
  if (i + 1 < g.size() && same_component(g, i, i + 1)) return to_double(g.step_after(i));
  return to_double(g.step_after(i - 1));
}

void check_pair(const GridFunction& f, const Rational& a, const Rational& b,
                std::size_t& ia, std::size_t& ib) {
  if (a > b) throw DomainError("integral requires a <= b");
  const auto& ts = f.grid().scale();
  if (!ts.contains(a) || !ts.contains(b)) throw DomainError("integral endpoint not in scale");
  ia = f.grid().index_of(a);
  ib = f.grid().index_of(b);
}

}  // namespace

GridFunction::GridFunction(Grid grid, std::vector<Eigen::MatrixXd> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw DomainError("grid function needs one value per grid point");
  }
  for (const auto& v : values_) {
    if (v.rows() != values_.front().rows() || v.cols() != values_.front().cols()) {
      throw DomainError("grid function values must share one shape");
    }
  }
}

GridFunction dualize_function(const GridFunction& f) {
  std::vector<Eigen::MatrixXd> values(f.values().rbegin(), f.values().rend());
  return GridFunction(f.grid().dual(), std::move(values));
}

GridFunction delta_derivative(const GridFunction& f) {
  const Grid& g = f.grid();
  const std::size_t n = g.size();
  if (n < 2) throw DomainError("derivative needs at least two grid points");

  // T^kappa: an isolated (left-scattered) maximum has no delta derivative.
  const bool drop_max = g.gap_before(n - 1);
  const std::size_t count = drop_max ? n - 1 : n;

  std::vector<Eigen::MatrixXd> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& fi = f.value(i);
    if (g.gap_after(i)) {
      out.emplace_back((f.value(i + 1) - fi) / to_double(g.step_after(i)));
      continue;
    }
    const double h = dense_step_at(g, i);
    const bool has_right = i + 1 < n && same_component(g, i, i + 1);
    const bool has_left = i > 0 && same_component(g, i, i - 1);
    if (has_left && has_right) {
      out.emplace_back((f.value(i + 1) - f.value(i - 1)) / (2.0 * h));
    } else if (has_right) {
      if (i + 2 < n && same_component(g, i, i + 2)) {
        out.emplace_back((-3.0 * fi + 4.0 * f.value(i + 1) - f.value(i + 2)) / (2.0 * h));
      } else {
        out.emplace_back((f.value(i + 1) - fi) / h);
      }
    } else {
      // left-dense window maximum
      if (i >= 2 && same_component(g, i, i - 2)) {
        out.emplace_back((3.0 * fi - 4.0 * f.value(i - 1) + f.value(i - 2)) / (2.0 * h));
      } else {
        out.emplace_back((fi - f.value(i - 1)) / h);
      }
    }
  }
  if (!drop_max) return GridFunction(g, std::move(out));
  Grid sub = build_grid(g.scale().restrict(g.scale().min(), g.point(n - 2)), g.dense_step());
  return GridFunction(std::move(sub), std::move(out));
}

GridFunction nabla_derivative(const GridFunction& f) {
  const Grid& g = f.grid();
  const std::size_t n = g.size();
  if (n < 2) throw DomainError("derivative needs at least two grid points");

  // T_kappa: an isolated (right-scattered) minimum has no nabla derivative.
  const std::size_t first = g.gap_after(0) ? 1 : 0;

  std::vector<Eigen::MatrixXd> out;
  out.reserve(n - first);
  for (std::size_t i = first; i < n; ++i) {
    const auto& fi = f.value(i);
    if (g.gap_before(i)) {
      out.emplace_back((fi - f.value(i - 1)) / to_double(g.step_after(i - 1)));
      continue;
    }
    const double h = dense_step_at(g, i);
    const bool has_right = i + 1 < n && same_component(g, i, i + 1);
    const bool has_left = i > 0 && same_component(g, i, i - 1);
    if (has_left && has_right) {
      out.emplace_back((f.value(i + 1) - f.value(i - 1)) / (2.0 * h));
    } else if (has_left) {
      if (i >= 2 && same_component(g, i, i - 2)) {
        out.emplace_back((3.0 * fi - 4.0 * f.value(i - 1) + f.value(i - 2)) / (2.0 * h));
      } else {
        out.emplace_back((fi - f.value(i - 1)) / h);
      }
    } else {
      // right-dense window minimum
      if (i + 2 < n && same_component(g, i, i + 2)) {
        out.emplace_back((-3.0 * fi + 4.0 * f.value(i + 1) - f.value(i + 2)) / (2.0 * h));
      } else {
        out.emplace_back((f.value(i + 1) - fi) / h);
      }
    }
  }
  if (first == 0) return GridFunction(g, std::move(out));
  Grid sub = build_grid(g.scale().restrict(g.point(1), g.scale().max()), g.dense_step());
  return GridFunction(std::move(sub), std::move(out));
}

Eigen::MatrixXd delta_integral(const GridFunction& f, const Rational& a, const Rational& b) {
  std::size_t ia = 0, ib = 0;
  check_pair(f, a, b, ia, ib);
  const Grid& g = f.grid();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(f.rows(), f.cols());
  for (std::size_t i = ia; i < ib; ++i) {
    const double step = to_double(g.step_after(i));
    if (g.gap_after(i)) {
      sum += step * f.value(i);
    } else {
      sum += (0.5 * step) * (f.value(i) + f.value(i + 1));
    }
  }
  return sum;
}

Eigen::MatrixXd nabla_integral(const GridFunction& f, const Rational& a, const Rational& b) {
  std::size_t ia = 0, ib = 0;
  check_pair(f, a, b, ia, ib);
  const Grid& g = f.grid();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(f.rows(), f.cols());
  for (std::size_t i = ia + 1; i <= ib; ++i) {
    const double step = to_double(g.step_after(i - 1));
    if (g.gap_before(i)) {
      sum += step * f.value(i);
    } else {
      sum += (0.5 * step) * (f.value(i - 1) + f.value(i));
    }
  }
  return sum;
}

}  // namespace chronoctl
