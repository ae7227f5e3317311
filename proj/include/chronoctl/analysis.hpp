#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chronoctl/linsys.hpp"

namespace chronoctl {

/// Relative rank threshold: singular values above kRankTolerance * sigma_max
/// count towards the numerical rank.
inline constexpr double kRankTolerance = 1e-9;

template <typename Derived>
Eigen::VectorXd singular_values(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return Eigen::VectorXd();
  using Plain = typename Derived::PlainObject;
  return Eigen::JacobiSVD<Plain>(m.eval()).singularValues();
}

/// Count of singular values strictly above rel_tol * largest. Zero matrix -> 0.
inline Eigen::Index numerical_rank(const Eigen::VectorXd& sv, double rel_tol = kRankTolerance) {
  if (sv.size() == 0 || sv.maxCoeff() == 0.0) return 0;
  const double threshold = rel_tol * sv.maxCoeff();
  return static_cast<Eigen::Index>((sv.array() > threshold).count());
}

template <typename Derived>
Eigen::Index numerical_rank(const Eigen::MatrixBase<Derived>& m, double rel_tol = kRankTolerance) {
  return numerical_rank(singular_values(m), rel_tol);
}

/// [B, AB, ..., A^{n-1}B]
template <typename DerivedA, typename DerivedB>
auto controllability_matrix(const Eigen::MatrixBase<DerivedA>& A,
                            const Eigen::MatrixBase<DerivedB>& B) {
  using Scalar = typename DerivedA::Scalar;
  const auto n = A.rows();
  const auto m = B.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> K(n, n * m);
  K.leftCols(m) = B;
  for (Eigen::Index i = 1; i < n; ++i) {
    K.middleCols(i * m, m) = A * K.middleCols((i - 1) * m, m);
  }
  return K;
}

/// [C; CA; ...; CA^{n-1}]
template <typename DerivedA, typename DerivedC>
auto observability_matrix(const Eigen::MatrixBase<DerivedA>& A,
                          const Eigen::MatrixBase<DerivedC>& C) {
  return controllability_matrix(A.transpose(), C.transpose()).transpose().eval();
}

enum class Verdict { holds, fails, inconclusive };
std::string to_string(Verdict v);

struct RankReport {
  std::string test;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::VectorXd singular_values;
  Eigen::Index rank = 0;
  double relative_threshold = kRankTolerance;
  std::optional<Rational> test_point;  // time-varying tests only
  int order = -1;                      // derivative order r, time-varying tests only
  Verdict verdict = Verdict::fails;
};

struct GramianReport {
  Eigen::MatrixXd gramian;
  Eigen::VectorXd eigenvalues;
  Eigen::Index rank = 0;
  Rational s1;
  Rational s0;
  bool progressive = true;  // false means the result is reported with a warning
  Verdict verdict = Verdict::fails;
};

/// Default working interval: [window min, s0] for backward systems,
/// [t0, window max] for forward ones.
Interval working_interval(const LinearSystem& sys);

/// Kalman rank of [B, AB, ..., A^{n-1}B] for constant A, B. The interval must
/// hold at least n + 1 scale points.
RankReport kalman_controllability(const LinearSystem& sys,
                                  std::optional<Interval> interval = std::nullopt);

/// Rank of (P_0 B, ..., P_{n-1} B) over the complex field with P_0 = I and
/// P_{k+1} = (A - lambda_{k+1} I) P_k. Eigenvalues are ordered ascending by
/// real part, then imaginary part (descending when reverse_order).
RankReport pk_controllability(const LinearSystem& sys,
                              std::optional<Interval> interval = std::nullopt,
                              bool reverse_order = false);

/// Kalman rank of [C; CA; ...]. Also runs pk_observability and throws
/// NumericError when the two verdicts differ.
RankReport kalman_observability(const LinearSystem& sys,
                                std::optional<Interval> interval = std::nullopt);

RankReport pk_observability(const LinearSystem& sys,
                            std::optional<Interval> interval = std::nullopt,
                            bool reverse_order = false);

/// Time-varying sufficient test on a backward system: rank of
/// (K_0(s_c) ... K_r(s_c)). Verdict is holds or inconclusive, never fails.
RankReport tv_controllability(const LinearSystem& sys, const Rational& s_c, int r);

/// Time-varying sufficient test on a backward system: rank of the stacked
/// (L_0(s_c); ...; L_r(s_c)).
RankReport tv_observability(const LinearSystem& sys, const Rational& s_c, int r);

/// Runs the time-varying test at up to 64 evenly spread grid points strictly
/// inside (s1, s0). Returns the first report that holds, else the first one
/// computed; nullopt when no point admits the stencil.
std::optional<RankReport> tv_scan(const LinearSystem& sys, const Rational& s1, const Rational& s0,
                                  bool controllability, int r);

/// The (K_0 ... K_r) blocks, n x m each.
std::vector<Eigen::MatrixXd> tv_controllability_blocks(const LinearSystem& sys,
                                                       const Rational& s_c, int r);
/// The L_0 ... L_r blocks, p x n each.
std::vector<Eigen::MatrixXd> tv_observability_blocks(const LinearSystem& sys,
                                                     const Rational& s_c, int r);

/// W = int_{s1}^{s0} Psi(s1, rho(z)) B B^T Psi^T(s1, rho(z)) nabla z.
GramianReport controllability_gramian(const LinearSystem& sys, const Rational& s1,
                                      const Rational& s0);

/// W = int_{s1}^{s0} Psi^T(z, s0) C^T C Psi(z, s0) nabla z.
GramianReport observability_gramian(const LinearSystem& sys, const Rational& s1,
                                    const Rational& s0);

struct TranslateCheck {
  bool holds = true;
  double max_deviation = 0.0;
};

/// For every control: endpoint from y0 minus endpoint from 0 equals
/// Psi(s1, s0) y0 (to 1e-9 relative). s0 is the anchor.
TranslateCheck reachable_translate_check(const LinearSystem& sys, const Eigen::VectorXd& y0,
                                         const Rational& s1, const std::vector<Control>& controls);

}  // namespace chronoctl
