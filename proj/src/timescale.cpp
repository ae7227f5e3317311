#include "chronoctl/timescale.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "chronoctl/errors.hpp"

namespace chronoctl {

namespace {

constexpr std::size_t kMaxComponents = 10'000'000;

std::int64_t checked_pow10(int e) {
  std::int64_t p = 1;
  for (int i = 0; i < e; ++i) {
    if (p > std::numeric_limits<std::int64_t>::max() / 10) {
      throw DomainError("number too large for exact representation");
    }
    p *= 10;
  }
  return p;
}

}  // namespace

double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

Rational floor(const Rational& r) {
  std::int64_t q = r.numerator() / r.denominator();
  if (r.numerator() % r.denominator() != 0 && r.numerator() < 0) --q;
  return Rational(q);
}

Rational ceil(const Rational& r) { return -floor(-r); }

Rational parse_rational(std::string_view text) {
  auto fail = [&]() -> Rational {
    throw DomainError("not an exact number: '" + std::string(text) + "'");
  };
  if (text.empty()) return fail();

  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    Rational num = parse_rational(text.substr(0, slash));
    Rational den = parse_rational(text.substr(slash + 1));
    if (den == Rational(0)) throw DomainError("zero denominator in '" + std::string(text) + "'");
    return num / den;
  }

  std::size_t i = 0;
  bool negative = false;
  if (text[i] == '+' || text[i] == '-') {
    negative = text[i] == '-';
    ++i;
  }
  std::int64_t mantissa = 0;
  int frac_digits = 0;
  bool any_digit = false;
  bool in_fraction = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c == '.') {
      if (in_fraction) return fail();
      in_fraction = true;
      continue;
    }
    if (c < '0' || c > '9') break;
    any_digit = true;
    if (mantissa > (std::numeric_limits<std::int64_t>::max() - 9) / 10) {
      throw DomainError("too many digits for exact representation: '" +
                        std::string(text) + "'");
    }
    mantissa = mantissa * 10 + (c - '0');
    if (in_fraction) ++frac_digits;
  }
  if (!any_digit) return fail();

  int exponent = 0;
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') return fail();
    ++i;
    std::string_view rest = text.substr(i);
    if (!rest.empty() && rest.front() == '+') rest.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), exponent);
    if (ec != std::errc() || ptr != rest.data() + rest.size()) return fail();
  }

  int scale = exponent - frac_digits;
  Rational value(mantissa);
  if (mantissa != 0) {
    if (scale > 0) {
      std::int64_t p = checked_pow10(scale);
      if (mantissa > std::numeric_limits<std::int64_t>::max() / p) {
        throw DomainError("number too large for exact representation");
      }
      value = Rational(mantissa * p);
    } else if (scale < 0) {
      value = Rational(mantissa, checked_pow10(-scale));
    }
  }
  return negative ? -value : value;
}

Rational rational_from_double(double value) {
  if (!std::isfinite(value)) throw DomainError("non-finite time value");
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc()) throw DomainError("cannot format time value");
  return parse_rational(std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
}

std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

std::string PointClass::name() const {
  if (isolated()) return boundary() ? "isolated, boundary" : "isolated";
  if (right == Density::dense && left == Density::dense && !boundary()) {
    return "interior-dense";
  }
  std::string out = right == Density::dense ? "right-dense" : "right-scattered";
  out += left == Density::dense ? ", left-dense" : ", left-scattered";
  if (boundary()) out += ", boundary";
  return out;
}

TimeScale::TimeScale(std::vector<Interval> components) : components_(std::move(components)) {
  if (components_.empty()) throw DomainError("empty time scale");
  if (components_.size() > kMaxComponents) {
    throw DomainError("too many components in time scale window");
  }
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (components_[i].lo > components_[i].hi) {
      throw DomainError("time scale component with lo > hi");
    }
    if (i > 0 && !(components_[i - 1].hi < components_[i].lo)) {
      throw DomainError("time scale components must be sorted with positive gaps");
    }
  }
}

std::size_t TimeScale::component_of(const Rational& t) const {
  auto it = std::upper_bound(components_.begin(), components_.end(), t,
                             [](const Rational& v, const Interval& c) { return v < c.lo; });
  if (it != components_.begin()) {
    --it;
    if (t <= it->hi) return static_cast<std::size_t>(it - components_.begin());
  }
  throw DomainError("point not in scale: " + to_string(t));
}

bool TimeScale::contains(const Rational& t) const {
  auto it = std::upper_bound(components_.begin(), components_.end(), t,
                             [](const Rational& v, const Interval& c) { return v < c.lo; });
  return it != components_.begin() && t <= std::prev(it)->hi;
}

bool TimeScale::purely_discrete() const {
  return std::all_of(components_.begin(), components_.end(),
                     [](const Interval& c) { return c.degenerate(); });
}

Rational TimeScale::sigma(const Rational& t) const {
  std::size_t i = component_of(t);
  if (t < components_[i].hi || i + 1 == components_.size()) return t;
  return components_[i + 1].lo;
}

Rational TimeScale::rho(const Rational& t) const {
  std::size_t i = component_of(t);
  if (t > components_[i].lo || i == 0) return t;
  return components_[i - 1].hi;
}

PointClass TimeScale::classify(const Rational& t) const {
  PointClass pc;
  pc.right = sigma(t) > t ? Density::scattered : Density::dense;
  pc.left = rho(t) < t ? Density::scattered : Density::dense;
  pc.at_min = t == min();
  pc.at_max = t == max();
  return pc;
}

TimeScale TimeScale::dual() const {
  std::vector<Interval> out;
  out.reserve(components_.size());
  for (auto it = components_.rbegin(); it != components_.rend(); ++it) {
    out.push_back({-it->hi, -it->lo});
  }
  return TimeScale(std::move(out));
}

TimeScale TimeScale::restrict(const Rational& lo, const Rational& hi) const {
  std::vector<Interval> out;
  for (const auto& c : components_) {
    Rational a = std::max(c.lo, lo);
    Rational b = std::min(c.hi, hi);
    if (a <= b) out.push_back({a, b});
  }
  return TimeScale(std::move(out));
}

std::optional<std::size_t> TimeScale::count_points(const Rational& lo,
                                                   const Rational& hi) const {
  std::size_t count = 0;
  for (const auto& c : components_) {
    Rational a = std::max(c.lo, lo);
    Rational b = std::min(c.hi, hi);
    if (a < b) return std::nullopt;
    if (a == b) ++count;
  }
  return count;
}

TimeScale from_generator(const Generator& gen, const Rational& lo, const Rational& hi) {
  if (!(lo < hi)) throw DomainError("time scale window requires lo < hi");
  std::vector<Interval> out;
  auto push_range = [&](const Rational& kmin, const Rational& kmax, const Rational& step) {
    if (kmax >= kmin && kmax - kmin + 1 > Rational(static_cast<std::int64_t>(kMaxComponents))) {
      throw DomainError("too many components in time scale window");
    }
    for (Rational k = kmin; k <= kmax; k += 1) out.push_back({k * step, k * step});
  };

  switch (gen.kind) {
    case GeneratorKind::reals:
      out.push_back({lo, hi});
      break;
    case GeneratorKind::integers:
      push_range(ceil(lo), floor(hi), Rational(1));
      break;
    case GeneratorKind::h_integers:
      if (gen.h <= Rational(0)) throw DomainError("h_integers requires h > 0");
      push_range(ceil(lo / gen.h), floor(hi / gen.h), gen.h);
      break;
    case GeneratorKind::periodic_union: {
      if (gen.a <= Rational(0) || gen.b <= Rational(0)) throw DomainError("periodic_union requires a > 0 and b > 0");
      Rational period = gen.a + gen.b;
      Rational kmin = ceil((lo - gen.a) / period);
      Rational kmax = floor(hi / period);
      if (kmax >= kmin && kmax - kmin + 1 > Rational(static_cast<std::int64_t>(kMaxComponents))) {
        throw DomainError("too many components in time scale window");
      }
      for (Rational k = kmin; k <= kmax; k += 1) {
        Rational a = std::max(k * period, lo);
        Rational b = std::min(k * period + gen.a, hi);
        if (a <= b) out.push_back({a, b});
      }
      break;
    }
    case GeneratorKind::explicit_list: {
      std::vector<Interval> items;
      for (const auto& it : gen.items) {
        if (it.lo > it.hi) throw DomainError("explicit item with lo > hi");
        Rational a = std::max(it.lo, lo);
        Rational b = std::min(it.hi, hi);
        if (a <= b) items.push_back({a, b});
      }
      std::sort(items.begin(), items.end(),
                [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
      for (const auto& it : items) {
        if (!out.empty() && it.lo <= out.back().hi) {
          out.back().hi = std::max(out.back().hi, it.hi);
        } else {
          out.push_back(it);
        }
      }
      break;
    }
  }
  if (out.empty()) throw DomainError("empty time scale");
  return TimeScale(std::move(out));
}

Rational Grid::mu(std::size_t i) const {
  return gap_after(i) ? step_after(i) : Rational(0);
}

Rational Grid::nu(std::size_t i) const {
  return gap_before(i) ? step_after(i - 1) : Rational(0);
}

std::optional<std::size_t> Grid::find(const Rational& t) const {
  auto it = std::lower_bound(points_.begin(), points_.end(), t);
  if (it == points_.end() || *it != t) return std::nullopt;
  return static_cast<std::size_t>(it - points_.begin());
}

std::size_t Grid::index_of(const Rational& t) const {
  if (auto i = find(t)) return *i;
  throw DomainError("point not on grid: " + to_string(t));
}

Grid Grid::dual() const {
  Grid g(scale_.dual(), dense_step_);
  const std::size_t n = size();
  const std::size_t last_component = scale_.components().size() - 1;
  g.points_.resize(n);
  g.times_.resize(n);
  g.component_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.points_[i] = -points_[n - 1 - i];
    g.times_[i] = -times_[n - 1 - i];
    g.component_[i] = last_component - component_[n - 1 - i];
  }
  return g;
}

Grid Grid::window(const Rational& lo, const Rational& hi) const {
  if (lo > hi) throw DomainError("grid window requires lo <= hi");
  const std::size_t i0 = index_of(lo);
  const std::size_t i1 = index_of(hi);
  Grid g(scale_.restrict(lo, hi), dense_step_);
  const std::size_t c0 = component_[i0];
  for (std::size_t i = i0; i <= i1; ++i) {
    g.points_.push_back(points_[i]);
    g.times_.push_back(times_[i]);
    g.component_.push_back(component_[i] - c0);
  }
  return g;
}

Grid build_grid(const TimeScale& ts, const Rational& dense_step) {
  if (dense_step <= Rational(0)) throw DomainError("dense_step must be positive");
  Grid g(ts, dense_step);
  const auto& comps = ts.components();
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const auto& iv = comps[c];
    if (iv.degenerate()) {
      g.points_.push_back(iv.lo);
      g.component_.push_back(c);
      continue;
    }
    Rational length = iv.hi - iv.lo;
    Rational steps = ceil(length / dense_step);
    if (steps > Rational(static_cast<std::int64_t>(kMaxComponents))) {
      throw DomainError("dense_step too small for the window");
    }
    const std::int64_t n = steps.numerator();
    Rational h = length / steps;
    for (std::int64_t k = 0; k < n; ++k) {
      g.points_.push_back(iv.lo + h * Rational(k));
      g.component_.push_back(c);
    }
    g.points_.push_back(iv.hi);
    g.component_.push_back(c);
  }
  g.times_.reserve(g.points_.size());
  for (const auto& p : g.points_) g.times_.push_back(to_double(p));
  return g;
}

Rational default_dense_step(const TimeScale& ts) {
  Rational length = ts.max() - ts.min();
  return length == Rational(0) ? Rational(1) : length / 1000;
}

}  // namespace chronoctl
