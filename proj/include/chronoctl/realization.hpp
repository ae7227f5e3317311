#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chronoctl/analysis.hpp"
#include "chronoctl/linsys.hpp"

namespace chronoctl {

/// True when z contributes to the output at s, i.e. rho(z) >= s. The
/// integral over [s, s0] collects exactly these points.
bool causal_pair(const Grid& grid, const Rational& s, const Rational& z);

/// G(s, z) = C(s) Psi(s, rho(z)) B(z) of a backward system. Both times must be
/// grid points with rho(z) >= s and z <= anchor.
Eigen::MatrixXd weighting_pattern(const LinearSystem& sys, const Rational& s, const Rational& z);

/// Kernel blocks on an s-grid times a z-grid. Block (i, j) occupies rows
/// i*p.. and columns j*m..; non-causal blocks are left zero and masked out.
struct KernelSample {
  std::vector<Rational> s_grid;
  std::vector<Rational> z_grid;
  Eigen::Index p = 0;
  Eigen::Index m = 0;
  Eigen::MatrixXd blocks;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> causal;

  Eigen::MatrixXd block(std::size_t i, std::size_t j) const {
    return blocks.block(static_cast<Eigen::Index>(i) * p, static_cast<Eigen::Index>(j) * m, p, m);
  }
  bool fully_causal() const { return causal.all(); }
};

/// Fills every causal block. Grids are sorted and deduplicated first.
KernelSample sample_kernel(const LinearSystem& sys, std::vector<Rational> s_grid,
                           std::vector<Rational> z_grid);

/// Default sampling of [s1, s0]: a split point m inside the interval (dense
/// when possible), up to `count` s-points in [s1, m] ending at m and up to
/// `count` z-points with rho(z) >= m starting right after m. Every pair is
/// causal, so the whole block matrix takes part in the rank.
std::pair<std::vector<Rational>, std::vector<Rational>> default_kernel_grids(
    const LinearSystem& sys, const Rational& s1, const Rational& s0, std::size_t count = 8);

struct Factorization {
  std::vector<Rational> s_times;
  std::vector<Rational> z_times;
  std::vector<Eigen::MatrixXd> H;  // p x rank, one per s_times entry
  std::vector<Eigen::MatrixXd> F;  // rank x m, one per z_times entry
  Eigen::Index rank = 0;
  Eigen::VectorXd singular_values;
  double kernel_norm = 0.0;  // Frobenius norm of the factored block
  double residual = 0.0;     // max over blocks of ||G - H F||_F, relative to kernel_norm
  double tolerance = 0.0;
};

/// Smallest n' whose truncated decomposition leaves a Frobenius tail of at
/// most tol * ||G||_F. When the sample has non-causal blocks, the largest
/// fully causal rectangle (s <= s_k <= rho(z)) with the highest rank is used.
Factorization separable_rank(const KernelSample& ks, double tol = 1e-8);

/// One CSV row per sample time: time, then the factor entries row-major.
void write_factor_csv(std::ostream& out, const std::vector<Rational>& times,
                      const std::vector<Eigen::MatrixXd>& factors);

struct MinimalityReport {
  bool minimal = false;
  bool controllable = false;
  bool observable = false;
  bool time_invariant = true;
  std::string method;  // "constant", "time-varying" or "gramian"
  InvertibilityReport progressive;
  std::vector<RankReport> rank_reports;
  std::vector<GramianReport> gramians;
  Factorization factorization;
  bool cross_check_agrees = false;  // (separable rank == n) == minimal
  Rational s1;
  Rational s0;
};

/// Minimality on [s1, s0] as joint controllability and observability.
/// Constant systems use the Kalman tests and need no progressivity; a
/// time-varying system that is not progressive throws HypothesisError.
MinimalityReport is_minimal(const LinearSystem& sys, const Rational& s1, const Rational& s0,
                            double tol = 1e-8);

}  // namespace chronoctl
