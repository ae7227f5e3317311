#include "chronoctl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

#include "chronoctl/errors.hpp"

namespace chronoctl {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void require_constant(const MatrixExpr& m, const char* name, const char* test) {
  if (!m.is_constant()) {
    throw DomainError(std::string(name) + " is time-varying; " + test +
                      " needs constant matrices (use the time-varying test)");
  }
}

void require_points(const LinearSystem& sys, const std::optional<Interval>& interval) {
  const Interval iv = interval ? *interval : working_interval(sys);
  if (iv.lo > iv.hi) throw DomainError("working interval requires lo <= hi");
  auto count = sys.scale().count_points(iv.lo, iv.hi);
  if (count && *count < static_cast<std::size_t>(sys.n()) + 1) {
    throw DomainError("working interval holds " + std::to_string(*count) +
                      " points; the constant-matrix test needs at least n + 1");
  }
}

RankReport make_report(std::string test, const auto& matrix, Eigen::Index full) {
  RankReport rep;
  rep.test = std::move(test);
  rep.rows = matrix.rows();
  rep.cols = matrix.cols();
  rep.singular_values = singular_values(matrix);
  rep.rank = numerical_rank(rep.singular_values);
  rep.verdict = rep.rank == full ? Verdict::holds : Verdict::fails;
  return rep;
}

std::vector<std::complex<double>> ordered_eigenvalues(const MatrixXd& A, bool reverse) {
  Eigen::EigenSolver<MatrixXd> es(A, false);
  if (es.info() != Eigen::Success) throw NumericError("eigenvalue computation failed");
  std::vector<std::complex<double>> ev(es.eigenvalues().begin(), es.eigenvalues().end());
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  if (reverse) std::reverse(ev.begin(), ev.end());
  return ev;
}

// P_0 = I, P_{k+1} = (A - lambda_{k+1} I) P_k, k = 0 .. n-2.
std::vector<MatrixXcd> pk_sequence(const MatrixXd& A, bool reverse) {
  const auto n = A.rows();
  const auto ev = ordered_eigenvalues(A, reverse);
  const MatrixXcd Ac = A.cast<std::complex<double>>();
  const MatrixXcd I = MatrixXcd::Identity(n, n);
  std::vector<MatrixXcd> P{I};
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    P.push_back((Ac - ev[static_cast<std::size_t>(k)] * I) * P.back());
  }
  return P;
}

// Grid index of sigma(point i) on the canonical grid.
std::size_t sigma_index(const Grid& g, std::size_t i) { return g.gap_after(i) ? i + 1 : i; }

// Phi(to, from) of a forward system between grid indices from <= to.
MatrixXd forward_product(const LinearSystem& sys, std::size_t from, std::size_t to) {
  MatrixXd M = MatrixXd::Identity(sys.n(), sys.n());
  for (std::size_t i = from; i < to; ++i) M = step_forward(sys, i) * M;
  return M;
}

struct Stencil {
  LinearSystem dual;
  std::size_t center;  // grid index of t_c = -s_c on the dual grid
};

Stencil make_stencil(const LinearSystem& sys, const Rational& s_c, int r) {
  if (!sys.backward()) throw DomainError("time-varying tests take a backward system");
  if (r < 0 || r > 3) throw DomainError("derivative order r must be in 0..3");
  const Grid& g = sys.grid();
  const std::size_t ic = g.index_of(s_c);
  if (s_c == sys.scale().min() || s_c == sys.scale().max()) {
    throw DomainError("test point s_c at window edge");
  }
  if (ic < static_cast<std::size_t>(r)) {
    throw DomainError("test point s_c too close to the window edge for order r");
  }
  LinearSystem dual = dualize_system(sys);
  const std::size_t center = dual.grid().index_of(-s_c);
  // The stencil and its sigma images must stay inside the dual grid.
  if (sigma_index(dual.grid(), center + static_cast<std::size_t>(r)) >= dual.grid().size()) {
    throw DomainError("test point s_c too close to the window edge for order r");
  }
  return {std::move(dual), center};
}

// Iterated forward divided differences at tau_0 of samples on tau_0..tau_r.
std::vector<MatrixXd> forward_differences(const Grid& g, std::size_t first,
                                          std::vector<MatrixXd> level) {
  std::vector<MatrixXd> out{level.front()};
  while (level.size() > 1) {
    std::vector<MatrixXd> next;
    for (std::size_t k = 0; k + 1 < level.size(); ++k) {
      const double step = to_double(g.step_after(first + k));
      next.push_back((level[k + 1] - level[k]) / step);
    }
    level = std::move(next);
    out.push_back(level.front());
  }
  return out;
}

MatrixXd solve_left(const MatrixXd& M, const MatrixXd& X) {
  Eigen::FullPivLU<MatrixXd> lu(M);
  if (!lu.isInvertible()) {
    throw NumericError("transition across the derivative stencil is singular");
  }
  return lu.solve(X);
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::fails: return "fails";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

Interval working_interval(const LinearSystem& sys) {
  if (sys.backward()) return {sys.scale().min(), sys.anchor()};
  return {sys.anchor(), sys.scale().max()};
}

RankReport kalman_controllability(const LinearSystem& sys, std::optional<Interval> interval) {
  require_constant(sys.A(), "A", "kalman_controllability");
  require_constant(sys.B(), "B", "kalman_controllability");
  require_points(sys, interval);
  const MatrixXd A = sys.A().eval(0.0);
  const MatrixXd B = sys.B().eval(0.0);
  return make_report("kalman_controllability", controllability_matrix(A, B), sys.n());
}

RankReport pk_controllability(const LinearSystem& sys, std::optional<Interval> interval,
                              bool reverse_order) {
  require_constant(sys.A(), "A", "pk_controllability");
  require_constant(sys.B(), "B", "pk_controllability");
  require_points(sys, interval);
  const MatrixXd A = sys.A().eval(0.0);
  const MatrixXcd B = sys.B().eval(0.0).cast<std::complex<double>>();
  const auto P = pk_sequence(A, reverse_order);
  const auto m = B.cols();
  MatrixXcd K(sys.n(), sys.n() * m);
  for (std::size_t k = 0; k < P.size(); ++k) {
    K.middleCols(static_cast<Eigen::Index>(k) * m, m) = P[k] * B;
  }
  return make_report("pk_controllability", K, sys.n());
}

RankReport pk_observability(const LinearSystem& sys, std::optional<Interval> interval,
                            bool reverse_order) {
  require_constant(sys.A(), "A", "pk_observability");
  require_constant(sys.C(), "C", "pk_observability");
  require_points(sys, interval);
  const MatrixXd A = sys.A().eval(0.0);
  const MatrixXcd C = sys.C().eval(0.0).cast<std::complex<double>>();
  const auto P = pk_sequence(A, reverse_order);
  const auto p = C.rows();
  MatrixXcd L(sys.n() * p, sys.n());
  for (std::size_t k = 0; k < P.size(); ++k) {
    L.middleRows(static_cast<Eigen::Index>(k) * p, p) = C * P[k];
  }
  return make_report("pk_observability", L, sys.n());
}

RankReport kalman_observability(const LinearSystem& sys, std::optional<Interval> interval) {
  require_constant(sys.A(), "A", "kalman_observability");
  require_constant(sys.C(), "C", "kalman_observability");
  require_points(sys, interval);
  const MatrixXd A = sys.A().eval(0.0);
  const MatrixXd C = sys.C().eval(0.0);
  RankReport rep = make_report("kalman_observability", observability_matrix(A, C), sys.n());
  if (pk_observability(sys, interval).verdict != rep.verdict) {
    throw NumericError("Kalman and P_k observability tests disagree");
  }
  return rep;
}

std::vector<MatrixXd> tv_controllability_blocks(const LinearSystem& sys, const Rational& s_c,
                                                int r) {
  const Stencil st = make_stencil(sys, s_c, r);
  const LinearSystem& fwd = st.dual;
  const Grid& g = fwd.grid();
  const std::size_t last = st.center + static_cast<std::size_t>(r);
  const std::size_t anchor = sigma_index(g, last);

  // G(tau) = Phi(sigma(t_c), sigma(tau)) B(tau) = M^{-1} Phi(a, sigma(tau)) B(tau)
  // with a = sigma(tau_r) and M = Phi(a, sigma(t_c)).
  const MatrixXd M = forward_product(fwd, sigma_index(g, st.center), anchor);
  std::vector<MatrixXd> samples;
  for (std::size_t k = st.center; k <= last; ++k) {
    samples.push_back(forward_product(fwd, sigma_index(g, k), anchor) * fwd.B().eval(g.time(k)));
  }
  for (auto& s : samples) s = solve_left(M, s);

  // Delta-side differences map back to nabla-side blocks with a (-1)^j sign.
  auto blocks = forward_differences(g, st.center, std::move(samples));
  for (std::size_t j = 1; j < blocks.size(); j += 2) blocks[j] = -blocks[j];
  return blocks;
}

std::vector<MatrixXd> tv_observability_blocks(const LinearSystem& sys, const Rational& s_c,
                                              int r) {
  const Stencil st = make_stencil(sys, s_c, r);
  const LinearSystem& fwd = st.dual;
  const Grid& g = fwd.grid();
  const std::size_t last = st.center + static_cast<std::size_t>(r);

  // H(tau) = C(t_c) Phi(t_c, tau) = C(t_c) M^{-1} Phi(a, tau), a = tau_r, M = Phi(a, t_c).
  const MatrixXd M = forward_product(fwd, st.center, last);
  const MatrixXd X = solve_left(M.transpose(), fwd.C().eval(g.time(st.center)).transpose()).transpose();
  std::vector<MatrixXd> samples;
  for (std::size_t k = st.center; k <= last; ++k) {
    samples.push_back(X * forward_product(fwd, k, last));
  }
  auto blocks = forward_differences(g, st.center, std::move(samples));
  for (std::size_t j = 0; j < blocks.size(); j += 2) blocks[j] = -blocks[j];
  return blocks;
}

RankReport tv_controllability(const LinearSystem& sys, const Rational& s_c, int r) {
  const auto blocks = tv_controllability_blocks(sys, s_c, r);
  const auto m = sys.m();
  MatrixXd K(sys.n(), static_cast<Eigen::Index>(blocks.size()) * m);
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    K.middleCols(static_cast<Eigen::Index>(j) * m, m) = blocks[j];
  }
  RankReport rep = make_report("tv_controllability", K, sys.n());
  rep.test_point = s_c;
  rep.order = r;
  if (rep.verdict == Verdict::fails) rep.verdict = Verdict::inconclusive;
  return rep;
}

RankReport tv_observability(const LinearSystem& sys, const Rational& s_c, int r) {
  const auto blocks = tv_observability_blocks(sys, s_c, r);
  const auto p = sys.p();
  MatrixXd L(static_cast<Eigen::Index>(blocks.size()) * p, sys.n());
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    L.middleRows(static_cast<Eigen::Index>(j) * p, p) = blocks[j];
  }
  RankReport rep = make_report("tv_observability", L, sys.n());
  rep.test_point = s_c;
  rep.order = r;
  if (rep.verdict == Verdict::fails) rep.verdict = Verdict::inconclusive;
  return rep;
}

std::optional<RankReport> tv_scan(const LinearSystem& sys, const Rational& s1, const Rational& s0,
                                  bool controllability, int r) {
  const Grid& g = sys.grid();
  const std::size_t i1 = g.index_of(s1);
  const std::size_t i0 = g.index_of(s0);
  if (i0 <= i1 + 1) return std::nullopt;
  const std::size_t span = i0 - i1 - 2;
  const std::size_t stride = std::max<std::size_t>(1, span / 63);
  std::optional<RankReport> first;
  for (std::size_t i = i1 + 1; i < i0; i += stride) {
    try {
      RankReport rep = controllability ? tv_controllability(sys, g.point(i), r)
                                       : tv_observability(sys, g.point(i), r);
      if (rep.verdict == Verdict::holds) return rep;
      if (!first) first = std::move(rep);
    } catch (const DomainError&) {
    } catch (const NumericError&) {
    }
  }
  return first;
}

namespace {

// The Gramian is accumulated as a sum of weighted outer products F_k F_k^T.
// Keeping the square-root factor F = [sqrt(w_k) F_k ...] lets the rank be read
// from the singular values of F, which are not squared the way the
// eigenvalues of W are.
class GramFactor {
 public:
  explicit GramFactor(Eigen::Index n) : n_(n) {}
  void add(double weight, const MatrixXd& block) {
    if (weight <= 0.0 || block.cols() == 0) return;
    blocks_.push_back(std::sqrt(weight) * block);
    cols_ += block.cols();
  }
  MatrixXd matrix() const {
    MatrixXd F(n_, cols_);
    Eigen::Index at = 0;
    for (const auto& b : blocks_) {
      F.middleCols(at, b.cols()) = b;
      at += b.cols();
    }
    return F;
  }

 private:
  Eigen::Index n_;
  Eigen::Index cols_ = 0;
  std::vector<MatrixXd> blocks_;
};

GramianReport finish_gramian(const LinearSystem& sys, const GramFactor& factor, const Rational& s1,
                             const Rational& s0) {
  GramianReport rep;
  const MatrixXd F = factor.matrix();
  MatrixXd W = F * F.transpose();
  W = 0.5 * (W + W.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(W, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericError("Gramian eigenvalue computation failed");
  rep.eigenvalues = es.eigenvalues();
  rep.rank = F.cols() == 0 ? 0 : numerical_rank(F);
  rep.gramian = std::move(W);
  rep.s1 = s1;
  rep.s0 = s0;
  rep.progressive = is_progressive(sys).holds;
  rep.verdict = rep.rank == sys.n() ? Verdict::holds : Verdict::fails;
  return rep;
}

void check_gramian_args(const LinearSystem& sys, const Rational& s1, const Rational& s0) {
  if (!sys.backward()) throw DomainError("Gramians take a backward system");
  if (!(s1 < s0)) throw DomainError("Gramian interval is degenerate");
}

}  // namespace

GramianReport controllability_gramian(const LinearSystem& sys, const Rational& s1,
                                      const Rational& s0) {
  check_gramian_args(sys, s1, s0);
  const Grid& g = sys.grid();
  const std::size_t i1 = g.index_of(s1);
  const std::size_t i0 = g.index_of(s0);

  // kernel[j - i1] = Psi(s1, x_j)
  std::vector<MatrixXd> kernel{MatrixXd::Identity(sys.n(), sys.n())};
  for (std::size_t j = i1; j < i0; ++j) kernel.push_back(kernel.back() * step_backward(sys, j));

  // Psi(s1, rho(z)) jumps at the left end of a dense component: a gap step
  // uses the kernel before the jump, the trapezoid weights of the dense steps
  // collect on the grid points themselves.
  GramFactor factor(sys.n());
  std::vector<double> dense_weight(i0 - i1 + 1, 0.0);
  for (std::size_t j = i1 + 1; j <= i0; ++j) {
    const double h = to_double(g.step_after(j - 1));
    if (g.gap_before(j)) {
      factor.add(h, kernel[j - 1 - i1] * sys.B().eval(g.time(j)));
    } else {
      dense_weight[j - 1 - i1] += 0.5 * h;
      dense_weight[j - i1] += 0.5 * h;
    }
  }
  for (std::size_t j = i1; j <= i0; ++j) {
    factor.add(dense_weight[j - i1], kernel[j - i1] * sys.B().eval(g.time(j)));
  }
  return finish_gramian(sys, factor, s1, s0);
}

GramianReport observability_gramian(const LinearSystem& sys, const Rational& s1,
                                    const Rational& s0) {
  check_gramian_args(sys, s1, s0);
  const Grid& g = sys.grid();
  const std::size_t i1 = g.index_of(s1);
  const std::size_t i0 = g.index_of(s0);

  // Q_j = Psi(x_j, s0), built from s0 downwards.
  std::vector<MatrixXd> Q(i0 - i1 + 1);
  Q.back() = MatrixXd::Identity(sys.n(), sys.n());
  for (std::size_t j = i0; j > i1; --j) Q[j - 1 - i1] = step_backward(sys, j - 1) * Q[j - i1];

  // Nabla quadrature weights: the whole gap at a left-scattered point, half
  // steps on either side of a dense one.
  std::vector<double> weight(i0 - i1 + 1, 0.0);
  for (std::size_t j = i1 + 1; j <= i0; ++j) {
    const double h = to_double(g.step_after(j - 1));
    if (g.gap_before(j)) {
      weight[j - i1] += h;
    } else {
      weight[j - 1 - i1] += 0.5 * h;
      weight[j - i1] += 0.5 * h;
    }
  }
  GramFactor factor(sys.n());
  for (std::size_t j = i1; j <= i0; ++j) {
    const MatrixXd L = sys.C().eval(g.time(j)) * Q[j - i1];
    factor.add(weight[j - i1], L.transpose());
  }
  return finish_gramian(sys, factor, s1, s0);
}

TranslateCheck reachable_translate_check(const LinearSystem& sys, const VectorXd& y0,
                                         const Rational& s1, const std::vector<Control>& controls) {
  const VectorXd shift = transition_backward(sys, s1, sys.anchor()) * y0;
  const VectorXd zero = VectorXd::Zero(sys.n());
  TranslateCheck out;
  for (const auto& v : controls) {
    const VectorXd from_y0 = solve_backward_ivp(sys, y0, v, s1).state.value(0);
    const VectorXd from_zero = solve_backward_ivp(sys, zero, v, s1).state.value(0);
    const double dev = ((from_y0 - from_zero) - shift).norm();
    out.max_deviation = std::max(out.max_deviation, dev);
    if (dev > 1e-9 * (1.0 + shift.norm())) out.holds = false;
  }
  return out;
}

}  // namespace chronoctl
