#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

namespace chronoctl {

/// Exact time value. Endpoints and grid points of a time scale are kept in
/// this representation so jump-operator identities hold with zero tolerance.
using Rational = boost::rational<std::int64_t>;

double to_double(const Rational& r);
Rational floor(const Rational& r);
Rational ceil(const Rational& r);

/// Parses "3", "-0.25", "1e-3", "2.5E2" or "7/4" exactly.
Rational parse_rational(std::string_view text);

/// Exact rational value of the shortest decimal that round-trips `value`.
/// 0.1 becomes 1/10, not the binary approximation.
Rational rational_from_double(double value);

std::string to_string(const Rational& r);

/// Closed interval [lo, hi]; lo == hi is an isolated point.
struct Interval {
  Rational lo;
  Rational hi;

  bool degenerate() const { return lo == hi; }
  bool operator==(const Interval&) const = default;
};

enum class Density { dense, scattered };

/// Classification of a point by its jump operators. The window maximum is
/// right-dense (sigma clamps there) and the window minimum left-dense.
struct PointClass {
  Density right = Density::dense;
  Density left = Density::dense;
  bool at_min = false;
  bool at_max = false;

  bool isolated() const {
    return right == Density::scattered && left == Density::scattered;
  }
  bool boundary() const { return at_min || at_max; }
  std::string name() const;
};

/// A bounded window of a time scale: finitely many disjoint closed intervals
/// separated by positive gaps. Immutable after construction.
class TimeScale {
 public:
  /// Validates the invariants: non-empty, lo <= hi per component, strictly
  /// positive gaps between consecutive components.
  explicit TimeScale(std::vector<Interval> components);

  const std::vector<Interval>& components() const { return components_; }
  const Rational& min() const { return components_.front().lo; }
  const Rational& max() const { return components_.back().hi; }

  bool contains(const Rational& t) const;
  bool purely_discrete() const;

  Rational sigma(const Rational& t) const;
  Rational rho(const Rational& t) const;
  Rational mu(const Rational& t) const { return sigma(t) - t; }
  Rational nu(const Rational& t) const { return t - rho(t); }
  PointClass classify(const Rational& t) const;

  /// {s : -s in this scale}. dual().dual() == *this exactly.
  TimeScale dual() const;

  /// Intersection with [lo, hi]; throws when empty.
  TimeScale restrict(const Rational& lo, const Rational& hi) const;

  /// Number of scale points in [lo, hi], or nullopt when a dense piece of
  /// positive length lies inside (infinitely many points).
  std::optional<std::size_t> count_points(const Rational& lo,
                                          const Rational& hi) const;

  bool operator==(const TimeScale&) const = default;

 private:
  std::size_t component_of(const Rational& t) const;

  std::vector<Interval> components_;
};

enum class GeneratorKind { reals, integers, h_integers, periodic_union, explicit_list };

/// Description of an unbounded time scale to be cut to a window.
/// periodic_union(a, b) is the union over all integers k of
/// [k(a+b), k(a+b)+a]. explicit_list takes `items` (points are degenerate
/// intervals); overlapping or touching items are merged.
struct Generator {
  GeneratorKind kind = GeneratorKind::reals;
  Rational h{1};
  Rational a{1};
  Rational b{1};
  std::vector<Interval> items;
};

TimeScale from_generator(const Generator& gen, const Rational& lo,
                         const Rational& hi);

/// Canonical sampling of a time scale. Every component endpoint appears
/// exactly; a component of length L is split into ceil(L / h) equal steps,
/// so all grid points are exact rationals and the grid of the dual scale is
/// the exact mirror image of this one.
class Grid {
 public:
  const TimeScale& scale() const { return scale_; }
  const Rational& dense_step() const { return dense_step_; }

  std::size_t size() const { return points_.size(); }
  std::span<const Rational> points() const { return points_; }
  const Rational& point(std::size_t i) const { return points_[i]; }
  double time(std::size_t i) const { return times_[i]; }
  std::span<const double> times() const { return times_; }
  std::size_t component(std::size_t i) const { return component_[i]; }

  /// True when point i is the right end of a component followed by a gap.
  bool gap_after(std::size_t i) const {
    return i + 1 < size() && component_[i + 1] != component_[i];
  }
  bool gap_before(std::size_t i) const {
    return i > 0 && component_[i - 1] != component_[i];
  }
  /// points[i+1] - points[i] (a dense step or a gap length).
  Rational step_after(std::size_t i) const { return points_[i + 1] - points_[i]; }

  /// Graininess at grid point i (exact; zero inside dense components).
  Rational mu(std::size_t i) const;
  Rational nu(std::size_t i) const;

  std::optional<std::size_t> find(const Rational& t) const;
  /// Index of grid point t; throws DomainError "point not on grid".
  std::size_t index_of(const Rational& t) const;

  Grid dual() const;

  /// Grid points in [lo, hi] (both must be grid points), kept as they are;
  /// the owner becomes scale().restrict(lo, hi).
  Grid window(const Rational& lo, const Rational& hi) const;

  bool operator==(const Grid& other) const {
    return scale_ == other.scale_ && dense_step_ == other.dense_step_ &&
           points_ == other.points_;
  }

 private:
  friend Grid build_grid(const TimeScale& ts, const Rational& dense_step);
  Grid(TimeScale scale, Rational dense_step) : scale_(std::move(scale)), dense_step_(dense_step) {}

  TimeScale scale_;
  Rational dense_step_;
  std::vector<Rational> points_;
  std::vector<double> times_;
  std::vector<std::size_t> component_;
};

Grid build_grid(const TimeScale& ts, const Rational& dense_step);

/// Window length / 1000, or 1 for a single point.
Rational default_dense_step(const TimeScale& ts);

}  // namespace chronoctl
