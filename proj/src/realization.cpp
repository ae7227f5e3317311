#include "chronoctl/realization.hpp"

#include <algorithm>
#include <ostream>

#include "chronoctl/errors.hpp"
#include "chronoctl/format.hpp"

namespace chronoctl {

namespace {

using Eigen::MatrixXd;

std::size_t rho_index(const Grid& g, std::size_t i) { return g.gap_before(i) ? i - 1 : i; }

void sort_unique(std::vector<Rational>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Up to `count` indices from `from` towards `to` (either direction) with an
// even stride.
std::vector<std::size_t> spread(std::size_t from, std::size_t to, std::size_t count) {
  std::vector<std::size_t> out;
  const std::size_t span = from > to ? from - to : to - from;
  const std::size_t stride = std::max<std::size_t>(1, count > 1 ? span / (count - 1) : span + 1);
  for (std::size_t k = 0; k < count && k * stride <= span; ++k) {
    out.push_back(from > to ? from - k * stride : from + k * stride);
  }
  return out;
}

}  // namespace

bool causal_pair(const Grid& grid, const Rational& s, const Rational& z) {
  return grid.point(rho_index(grid, grid.index_of(z))) >= s;
}

MatrixXd weighting_pattern(const LinearSystem& sys, const Rational& s, const Rational& z) {
  if (!sys.backward()) throw DomainError("weighting_pattern takes a backward system");
  const Grid& g = sys.grid();
  if (z > sys.anchor()) throw DomainError("kernel argument z lies beyond the anchor");
  if (!causal_pair(g, s, z)) throw DomainError("non-causal kernel pair: rho(z) < s");
  const Rational r = g.point(rho_index(g, g.index_of(z)));
  const double ts = g.time(g.index_of(s));
  const double tz = g.time(g.index_of(z));
  return sys.C().eval(ts) * transition_backward(sys, s, r) * sys.B().eval(tz);
}

KernelSample sample_kernel(const LinearSystem& sys, std::vector<Rational> s_grid,
                           std::vector<Rational> z_grid) {
  if (!sys.backward()) throw DomainError("sample_kernel takes a backward system");
  if (s_grid.empty() || z_grid.empty()) throw DomainError("kernel sample grids are empty");
  sort_unique(s_grid);
  sort_unique(z_grid);
  const Grid& g = sys.grid();
  if (z_grid.back() > sys.anchor()) throw DomainError("kernel argument z lies beyond the anchor");

  KernelSample ks;
  ks.p = sys.p();
  ks.m = sys.m();
  const auto ns = static_cast<Eigen::Index>(s_grid.size());
  const auto nz = static_cast<Eigen::Index>(z_grid.size());
  ks.blocks = MatrixXd::Zero(ns * ks.p, nz * ks.m);
  ks.causal.setConstant(ns, nz, false);

  std::vector<std::size_t> zi, zr;
  for (const auto& z : z_grid) {
    zi.push_back(g.index_of(z));
    zr.push_back(rho_index(g, zi.back()));
  }
  std::vector<MatrixXd> Bz;
  for (std::size_t j = 0; j < zi.size(); ++j) Bz.push_back(sys.B().eval(g.time(zi[j])));

  for (Eigen::Index i = 0; i < ns; ++i) {
    const std::size_t is = g.index_of(s_grid[static_cast<std::size_t>(i)]);
    const MatrixXd Cs = sys.C().eval(g.time(is));
    // Sweep Psi(s, x_k) upwards; z-grid is sorted, so rho indices are too.
    MatrixXd Psi = MatrixXd::Identity(sys.n(), sys.n());
    std::size_t k = is;
    for (Eigen::Index j = 0; j < nz; ++j) {
      const std::size_t r = zr[static_cast<std::size_t>(j)];
      if (r < is) continue;
      for (; k < r; ++k) Psi = Psi * step_backward(sys, k);
      ks.causal(i, j) = true;
      ks.blocks.block(i * ks.p, j * ks.m, ks.p, ks.m) = Cs * Psi * Bz[static_cast<std::size_t>(j)];
    }
  }
  ks.s_grid = std::move(s_grid);
  ks.z_grid = std::move(z_grid);
  return ks;
}

std::pair<std::vector<Rational>, std::vector<Rational>> default_kernel_grids(
    const LinearSystem& sys, const Rational& s1, const Rational& s0, std::size_t count) {
  const Grid& g = sys.grid();
  const std::size_t i1 = g.index_of(s1);
  const std::size_t i0 = g.index_of(s0);
  if (i0 <= i1) throw DomainError("kernel interval needs s1 < s0");
  if (s0 > sys.anchor()) throw DomainError("kernel interval extends beyond the anchor");

  // Split point: the left-dense point nearest the middle, else the middle.
  const std::size_t mid = i1 + (i0 - i1) / 2;
  std::size_t im = mid;
  std::size_t best = i0 - i1 + 1;
  for (std::size_t i = i1 + 1; i < i0; ++i) {
    if (g.gap_before(i)) continue;
    const std::size_t dist = i > mid ? i - mid : mid - i;
    if (dist < best) {
      best = dist;
      im = i;
    }
  }
  const std::size_t z_start = g.gap_before(im) ? im + 1 : im;

  std::vector<Rational> s_pts, z_pts;
  for (std::size_t i : spread(im, i1, count)) s_pts.push_back(g.point(i));
  for (std::size_t i : spread(z_start, i0, count)) z_pts.push_back(g.point(i));
  sort_unique(s_pts);
  sort_unique(z_pts);
  return {s_pts, z_pts};
}

Factorization separable_rank(const KernelSample& ks, double tol) {
  if (!(tol > 0.0)) throw DomainError("separable_rank tolerance must be positive");
  const auto ns = static_cast<Eigen::Index>(ks.s_grid.size());
  const auto nz = static_cast<Eigen::Index>(ks.z_grid.size());

  // Candidate rectangles: rows 0..k, columns causal at row k.
  struct Candidate {
    std::vector<Eigen::Index> rows, cols;
  };
  std::vector<Candidate> candidates;
  if (ks.fully_causal()) {
    Candidate c;
    for (Eigen::Index i = 0; i < ns; ++i) c.rows.push_back(i);
    for (Eigen::Index j = 0; j < nz; ++j) c.cols.push_back(j);
    candidates.push_back(std::move(c));
  } else {
    for (Eigen::Index k = 0; k < ns; ++k) {
      Candidate c;
      for (Eigen::Index i = 0; i <= k; ++i) c.rows.push_back(i);
      for (Eigen::Index j = 0; j < nz; ++j) {
        if (ks.causal(k, j)) c.cols.push_back(j);
      }
      if (!c.cols.empty()) candidates.push_back(std::move(c));
    }
  }
  if (candidates.empty()) throw DomainError("kernel sample has no causal block");

  Factorization best;
  bool have = false;
  std::size_t best_area = 0;
  for (const auto& c : candidates) {
    const auto rows = static_cast<Eigen::Index>(c.rows.size());
    const auto cols = static_cast<Eigen::Index>(c.cols.size());
    MatrixXd G(rows * ks.p, cols * ks.m);
    for (Eigen::Index a = 0; a < rows; ++a) {
      for (Eigen::Index b = 0; b < cols; ++b) {
        G.block(a * ks.p, b * ks.m, ks.p, ks.m) =
            ks.blocks.block(c.rows[a] * ks.p, c.cols[b] * ks.m, ks.p, ks.m);
      }
    }
    Eigen::JacobiSVD<MatrixXd> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double norm = sv.norm();
    Eigen::Index r = 0;
    if (norm > 0.0) {
      double tail = norm;
      while (r < sv.size() && tail > tol * norm) {
        ++r;
        tail = sv.tail(sv.size() - r).norm();
      }
    }
    const std::size_t area = c.rows.size() * c.cols.size();
    if (have && (r < best.rank || (r == best.rank && area <= best_area))) continue;

    Factorization f;
    f.rank = r;
    f.singular_values = sv;
    f.kernel_norm = norm;
    f.tolerance = tol;
    const MatrixXd US = svd.matrixU().leftCols(r) * sv.head(r).asDiagonal();
    const MatrixXd Vt = svd.matrixV().leftCols(r).transpose();
    for (Eigen::Index a = 0; a < rows; ++a) {
      f.s_times.push_back(ks.s_grid[static_cast<std::size_t>(c.rows[a])]);
      f.H.push_back(US.middleRows(a * ks.p, ks.p));
    }
    for (Eigen::Index b = 0; b < cols; ++b) {
      f.z_times.push_back(ks.z_grid[static_cast<std::size_t>(c.cols[b])]);
      f.F.push_back(Vt.middleCols(b * ks.m, ks.m));
    }
    double worst = 0.0;
    for (Eigen::Index a = 0; a < rows; ++a) {
      for (Eigen::Index b = 0; b < cols; ++b) {
        const MatrixXd diff = G.block(a * ks.p, b * ks.m, ks.p, ks.m) -
                              f.H[static_cast<std::size_t>(a)] * f.F[static_cast<std::size_t>(b)];
        worst = std::max(worst, diff.norm());
      }
    }
    f.residual = norm > 0.0 ? worst / norm : 0.0;
    best = std::move(f);
    best_area = area;
    have = true;
  }
  return best;
}

void write_factor_csv(std::ostream& out, const std::vector<Rational>& times,
                      const std::vector<MatrixXd>& factors) {
  if (times.size() != factors.size()) throw DomainError("factor CSV: size mismatch");
  out << "time";
  if (!factors.empty()) {
    for (Eigen::Index i = 0; i < factors.front().rows(); ++i) {
      for (Eigen::Index j = 0; j < factors.front().cols(); ++j) {
        out << ",f_" << i + 1 << '_' << j + 1;
      }
    }
  }
  out << '\n';
  for (std::size_t k = 0; k < times.size(); ++k) {
    out << format_double(to_double(times[k]));
    for (Eigen::Index i = 0; i < factors[k].rows(); ++i) {
      for (Eigen::Index j = 0; j < factors[k].cols(); ++j) out << ',' << format_double(factors[k](i, j));
    }
    out << '\n';
  }
}

MinimalityReport is_minimal(const LinearSystem& sys, const Rational& s1, const Rational& s0,
                            double tol) {
  if (!sys.backward()) throw DomainError("is_minimal takes a backward system");
  if (!(s1 < s0)) throw DomainError("minimality interval needs s1 < s0");
  MinimalityReport rep;
  rep.s1 = s1;
  rep.s0 = s0;
  rep.time_invariant = sys.A().is_constant() && sys.B().is_constant() && sys.C().is_constant();
  rep.progressive = is_progressive(sys);
  if (!rep.time_invariant && !rep.progressive.holds) {
    throw HypothesisError(
        "time-varying minimality test requires a progressive system (I - nu A singular at s = " +
        to_string(*rep.progressive.witness) + ")");
  }

  const Interval iv{s1, s0};
  if (rep.time_invariant) {
    rep.method = "constant";
    rep.rank_reports.push_back(kalman_controllability(sys, iv));
    rep.rank_reports.push_back(kalman_observability(sys, iv));
    rep.controllable = rep.rank_reports[0].verdict == Verdict::holds;
    rep.observable = rep.rank_reports[1].verdict == Verdict::holds;
  } else {
    rep.method = "time-varying";
    const int r = static_cast<int>(std::min<Eigen::Index>(sys.n() - 1, 3));
    auto ctrl = tv_scan(sys, s1, s0, true, r);
    auto obs = tv_scan(sys, s1, s0, false, r);
    if (ctrl) rep.rank_reports.push_back(*ctrl);
    if (obs) rep.rank_reports.push_back(*obs);
    rep.controllable = ctrl && ctrl->verdict == Verdict::holds;
    rep.observable = obs && obs->verdict == Verdict::holds;
    if (!rep.controllable) {
      rep.gramians.push_back(controllability_gramian(sys, s1, s0));
      rep.controllable = rep.gramians.back().verdict == Verdict::holds;
      rep.method = "gramian";
    }
    if (!rep.observable) {
      rep.gramians.push_back(observability_gramian(sys, s1, s0));
      rep.observable = rep.gramians.back().verdict == Verdict::holds;
      rep.method = "gramian";
    }
  }
  rep.minimal = rep.controllable && rep.observable;

  auto [s_pts, z_pts] = default_kernel_grids(sys, s1, s0);
  rep.factorization = separable_rank(sample_kernel(sys, s_pts, z_pts), tol);
  rep.cross_check_agrees = (rep.factorization.rank == sys.n()) == rep.minimal;
  return rep;
}

}  // namespace chronoctl
