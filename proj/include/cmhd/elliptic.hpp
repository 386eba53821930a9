#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "discrete_calc.hpp"
#include "error.hpp"
#include "field.hpp"

namespace cmhd {

enum class BcType { Dirichlet, Neumann };

//! Symmetric 5-point operator A = -vol * Laplacian in conductance form.
//! Dirichlet ghosts are -K (face contributes 2c K), Neumann ghosts are K.
class FivePoint {
 public:
  FivePoint(const Grid& g, BcType bc) : g_(g), bc_(bc), n1_(g.n1()), n2_(g.n2()) {
    cx_.assign(static_cast<std::size_t>(n1_ + 1) * n2_, 0.0);
    cy_.assign(static_cast<std::size_t>(n1_) * (n2_ + 1), 0.0);
    vol_.resize(g.cells());
    const double h1 = g.h1(), h2 = g.h2();
    for (int f = 0; f <= n1_; ++f)
      for (int j = 0; j < n2_; ++j)
        cx_[f * n2_ + j] = g.is_square() ? h2 / h1 : (f * h1) * h2 / h1;
    for (int i = 0; i < n1_; ++i)
      for (int f = 0; f <= n2_; ++f)
        cy_[i * (n2_ + 1) + f] = g.is_square() ? h1 / h2 : h1 / (g.c1(i) * h2);
    for (int i = 0; i < n1_; ++i)
      for (int j = 0; j < n2_; ++j) vol_[idx(i, j)] = g.cell_volume(i, j);
    diag_.assign(g.cells(), 0.0);
    for (int i = 0; i < n1_; ++i)
      for (int j = 0; j < n2_; ++j) {
        double d = 0;
        d += face_diag(cxf(i, j), i == 0 && g.is_square());
        d += face_diag(cxf(i + 1, j), i == n1_ - 1);
        d += face_diag(cyf(i, j), j == 0);
        d += face_diag(cyf(i, j + 1), j == n2_ - 1);
        diag_[idx(i, j)] = d;
      }
  }

  const Grid& grid() const { return g_; }
  BcType bc() const { return bc_; }
  std::size_t size() const { return g_.cells(); }
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n2_ + j; }
  double cxf(int f, int j) const { return cx_[f * n2_ + j]; }
  double cyf(int i, int f) const { return cy_[i * (n2_ + 1) + f]; }
  const std::vector<double>& vol() const { return vol_; }
  const std::vector<double>& diag() const { return diag_; }

  void apply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(x.size(), 0.0);
    for (int i = 0; i < n1_; ++i)
      for (int j = 0; j < n2_; ++j) {
        const std::size_t k = idx(i, j);
        double s = diag_[k] * x[k];
        if (i > 0) s -= cxf(i, j) * x[idx(i - 1, j)];
        if (i < n1_ - 1) s -= cxf(i + 1, j) * x[idx(i + 1, j)];
        if (j > 0) s -= cyf(i, j) * x[idx(i, j - 1)];
        if (j < n2_ - 1) s -= cyf(i, j + 1) * x[idx(i, j + 1)];
        y[k] = s;
      }
  }

  //! Discrete Laplacian with the operator's ghost treatment: L K = -(A K) / vol.
  ScalarField laplacian(const ScalarField& K) const {
    std::vector<double> x = flatten(K), y;
    apply(x, y);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = -y[k] / vol_[k];
    return unflatten(y);
  }

  std::vector<double> flatten(const ScalarField& f) const {
    std::vector<double> v(size());
    for (int i = 0; i < n1_; ++i)
      for (int j = 0; j < n2_; ++j) v[idx(i, j)] = f(i, j);
    return v;
  }
  ScalarField unflatten(const std::vector<double>& v) const {
    ScalarField f(g_);
    for (int i = 0; i < n1_; ++i)
      for (int j = 0; j < n2_; ++j) f(i, j) = v[idx(i, j)];
    return f;
  }

 private:
  // interior faces contribute c; boundary faces 2c (Dirichlet) or 0 (Neumann)
  double face_diag(double c, bool boundary) const {
    if (!boundary) return c;
    return bc_ == BcType::Dirichlet ? 2 * c : 0.0;
  }

  Grid g_;
  BcType bc_;
  int n1_, n2_;
  std::vector<double> cx_, cy_, vol_, diag_;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> t(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) t[k] = a[k] * b[k];
  return pairwise_sum(t);
}

struct PoissonSolution {
  ScalarField potential;
  double residual_norm = 0;  //!< relative residual ||b - A x|| / ||b||
  int iterations = 0;
  double removed_mean = 0;  //!< Neumann: mean subtracted from the data
  std::string warning;
  std::vector<double> history;
};

struct CgOptions {
  double rel_tol = 1e-10;
  int max_iter = -1;  //!< default 50 * max(n1, n2)
};

//! Jacobi-preconditioned CG on A x = b. Neumann iterates are projected to
//! zero volume-weighted mean every iteration.
inline PoissonSolution cg_solve(const FivePoint& A, const std::vector<double>& b, const CgOptions& opt = {}) {
  const Grid& g = A.grid();
  const int cap = opt.max_iter > 0 ? opt.max_iter : 50 * std::max(g.n1(), g.n2());
  const bool neumann = A.bc() == BcType::Neumann;
  const auto& vol = A.vol();
  const double vtot = pairwise_sum(vol);
  auto project = [&](std::vector<double>& x) {
    if (!neumann) return;
    const double m = dot(x, vol) / vtot;
    for (double& v : x) v -= m;
  };

  const std::size_t n = A.size();
  std::vector<double> x(n, 0.0), r = b, z(n), p(n), Ap(n);
  const double bn = std::sqrt(dot(b, b));
  PoissonSolution sol;
  if (bn == 0) {
    sol.potential = ScalarField(g);
    return sol;
  }
  for (std::size_t k = 0; k < n; ++k) z[k] = A.diag()[k] > 0 ? r[k] / A.diag()[k] : r[k];
  p = z;
  double rz = dot(r, z);
  int it = 0;
  double rel = 1.0;
  while (it < cap) {
    A.apply(p, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0)) break;
    const double alpha = rz / pAp;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * Ap[k];
    }
    project(x);
    ++it;
    rel = std::sqrt(dot(r, r)) / bn;
    sol.history.push_back(rel);
    if (rel <= opt.rel_tol) break;
    for (std::size_t k = 0; k < n; ++k) z[k] = A.diag()[k] > 0 ? r[k] / A.diag()[k] : r[k];
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  // true residual
  A.apply(x, Ap);
  for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - Ap[k];
  rel = std::sqrt(dot(r, r)) / bn;
  if (rel > opt.rel_tol * 10)
    throw SolverFailure("conjugate gradients stalled at relative residual " + std::to_string(rel) + " after " +
                            std::to_string(it) + " iterations",
                        sol.history);
  sol.potential = A.unflatten(x);
  sol.residual_norm = rel;
  sol.iterations = it;
  return sol;
}

//! Delta K = f, K = 0 on the boundary.
inline PoissonSolution poisson_dirichlet(const ScalarField& f, const CgOptions& opt = {}) {
  const FivePoint A(f.grid(), BcType::Dirichlet);
  std::vector<double> b = A.flatten(f);
  for (std::size_t k = 0; k < b.size(); ++k) b[k] *= -A.vol()[k];
  return cg_solve(A, b, opt);
}

//! Delta K = f, dK/dnu = 0, mean(K) = 0. Incompatible data has its mean removed.
inline PoissonSolution poisson_neumann(const ScalarField& f, const CgOptions& opt = {}) {
  const Grid& g = f.grid();
  const FivePoint A(g, BcType::Neumann);
  const double m = mean(f);
  const double rms = l2_norm(f) / std::sqrt(g.area());
  ScalarField fc = f;
  std::string warn;
  if (std::abs(m) > 1e-10 * rms) {
    for (int i = 0; i < g.n1(); ++i)
      for (int j = 0; j < g.n2(); ++j) fc(i, j) -= m;
    warn = "Neumann data has mean " + std::to_string(m) + "; solving with the mean removed";
  } else {
    // exact compatibility of the discrete right-hand side
    for (int i = 0; i < g.n1(); ++i)
      for (int j = 0; j < g.n2(); ++j) fc(i, j) -= m;
  }
  std::vector<double> b = A.flatten(fc);
  for (std::size_t k = 0; k < b.size(); ++k) b[k] *= -A.vol()[k];
  PoissonSolution s = cg_solve(A, b, opt);
  s.removed_mean = m;
  s.warning = warn;
  return s;
}

// ---------------------------------------------------------------------------
// Helmholtz decomposition on the square (face-based projection)

struct HelmholtzParts {
  ScalarField f;  //!< zero-mean potential
  VectorField g;  //!< solenoidal part, cell averages of face values
  std::vector<double> gx, gy;  //!< face normal components: gx[(n1+1) x n2], gy[n1 x (n2+1)]
  PoissonSolution solve;
};

//! Face-flux divergence of a face field (the discrete divergence the split annihilates).
inline ScalarField face_divergence(const Grid& g, const std::vector<double>& gx, const std::vector<double>& gy) {
  ScalarField d(g);
  const int n1 = g.n1(), n2 = g.n2();
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j)
      d(i, j) = (gx[(i + 1) * n2 + j] - gx[i * n2 + j]) / g.h1() + (gy[i * (n2 + 1) + j + 1] - gy[i * (n2 + 1) + j]) / g.h2();
  return d;
}

inline HelmholtzParts helmholtz_decompose(const VectorField& v, const CgOptions& opt = {}) {
  const Grid& g = v.grid();
  if (!g.is_square()) throw DomainError("Helmholtz decomposition is provided on the square");
  const int n1 = g.n1(), n2 = g.n2();
  const double h1 = g.h1(), h2 = g.h2();
  // interior face averages; boundary faces carry v.nu, which enters the
  // divergence and the Neumann data with opposite signs and cancels
  std::vector<double> vx(static_cast<std::size_t>(n1 + 1) * n2, 0.0), vy(static_cast<std::size_t>(n1) * (n2 + 1), 0.0);
  for (int f = 1; f < n1; ++f)
    for (int j = 0; j < n2; ++j) vx[f * n2 + j] = 0.5 * (v.c1(f - 1, j) + v.c1(f, j));
  for (int i = 0; i < n1; ++i)
    for (int f = 1; f < n2; ++f) vy[i * (n2 + 1) + f] = 0.5 * (v.c2(i, f - 1) + v.c2(i, f));
  const FivePoint A(g, BcType::Neumann);
  std::vector<double> b(A.size());
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j)
      b[A.idx(i, j)] = -(h2 * (vx[(i + 1) * n2 + j] - vx[i * n2 + j]) + h1 * (vy[i * (n2 + 1) + j + 1] - vy[i * (n2 + 1) + j]));
  HelmholtzParts out;
  out.solve = cg_solve(A, b, opt);
  out.f = out.solve.potential;
  out.gx.assign(vx.size(), 0.0);
  out.gy.assign(vy.size(), 0.0);
  for (int f = 1; f < n1; ++f)
    for (int j = 0; j < n2; ++j) out.gx[f * n2 + j] = vx[f * n2 + j] - (out.f(f, j) - out.f(f - 1, j)) / h1;
  for (int i = 0; i < n1; ++i)
    for (int f = 1; f < n2; ++f) out.gy[i * (n2 + 1) + f] = vy[i * (n2 + 1) + f] - (out.f(i, f) - out.f(i, f - 1)) / h2;
  out.g = VectorField(g);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      out.g.c1(i, j) = 0.5 * (out.gx[i * n2 + j] + out.gx[(i + 1) * n2 + j]);
      out.g.c2(i, j) = 0.5 * (out.gy[i * (n2 + 1) + j] + out.gy[i * (n2 + 1) + j + 1]);
    }
  return out;
}

//! div u = v1 - mean(v1), curl u = v2, u.nu = 0 via u = perp grad K1 + grad K2.
inline VectorField div_curl_solve(const ScalarField& v1, const ScalarField& v2, const CgOptions& opt = {}) {
  const PoissonSolution K1 = poisson_dirichlet(v2, opt);
  ScalarField w = v1;
  const double m = mean(v1);
  for (int i = 0; i < w.n1(); ++i)
    for (int j = 0; j < w.n2(); ++j) w(i, j) -= m;
  const PoissonSolution K2 = poisson_neumann(w, opt);
  return perp_gradient(K1.potential) + gradient(K2.potential);
}

//! ||X||_s / (||div X||_{s-1} + ||curl X||_{s-1}).
inline double hodge_ratio(const VectorField& X, int s, double tol = -1) {
  if (s < 1 || s > 2) throw PreconditionError("hodge_ratio supports s in {1, 2}");
  const Grid& g = X.grid();
  const double scale = std::max(1.0, std::max(X.c1.max_abs(), X.c2.max_abs()));
  if (tol < 0) tol = 10 * g.hmax() * g.hmax() * scale;
  const double tr = max_normal_trace(X);
  if (tr > tol) throw PreconditionError("field is not tangential: max |X.nu| = " + std::to_string(tr));
  const double num = sobolev_norm(X, s);
  const double den = sobolev_norm(divergence(X), s - 1) + sobolev_norm(curl2d(X), s - 1);
  return num / std::max(den, 1e-14);
}

//! Seeded smooth tangential field perp grad(psi), psi = w(x) m(x) with w vanishing on the
//! boundary: sin sin on the square, x2 (x1 sin om - x2 cos om)(r0^2 - |x|^2) on a sector.
inline VectorField random_tangential_field(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1, 1);
  double a[6];
  for (double& x : a) x = U(rng);
  const DomainSpec& d = g.domain();
  VectorField X(g);
  for (int i = -kGhost; i < g.n1() + kGhost; ++i)
    for (int j = -kGhost; j < g.n2() + kGhost; ++j) {
      const Vec2 p = g.cartesian(i, j);
      const double x = p(0), y = p(1);
      double w, wx, wy;
      if (g.is_square()) {
        const double k = pi / d.delta;
        w = std::sin(k * x) * std::sin(k * y);
        wx = k * std::cos(k * x) * std::sin(k * y);
        wy = k * std::sin(k * x) * std::cos(k * y);
      } else {
        const double sn = std::sin(d.omega), cs = std::cos(d.omega);
        const double l = x * sn - y * cs, c = d.r0 * d.r0 - x * x - y * y;
        w = y * l * c;
        wx = y * sn * c - 2 * x * y * l;
        wy = l * c - y * cs * c - 2 * y * y * l;
      }
      const double m = 1 + 0.5 * a[0] * std::sin(2 * a[1] * x + a[2]) + 0.5 * a[3] * std::cos(2 * a[4] * y + a[5]);
      const double mx = a[0] * a[1] * std::cos(2 * a[1] * x + a[2]);
      const double my = -a[3] * a[4] * std::sin(2 * a[4] * y + a[5]);
      X.c1(i, j) = -(wy * m + w * my);
      X.c2(i, j) = wx * m + w * mx;
    }
  return X;
}

//! Tangential gradient field grad(chi r^nu cos(nu theta)), nu = pi / omega, with the
//! cutoff chi = (1 - (r/r0)^2)^2 removing the normal component on the arc.
inline VectorField hodge_singular_probe(const Grid& g) {
  if (!g.is_sector()) throw DomainError("the singular Hodge probe needs a sector grid");
  const double nu = pi / g.domain().omega, r0 = g.domain().r0;
  VectorField X(g, Basis::Polar);
  for (int i = -kGhost; i < g.n1() + kGhost; ++i)
    for (int j = -kGhost; j < g.n2() + kGhost; ++j) {
      const double r = std::abs(g.c1(i)), th = g.c2(j), q = r / r0;
      const double chi = (1 - q * q) * (1 - q * q), dchi = -4 * q * (1 - q * q) / r0;
      const double f = std::pow(r, nu), fr = nu * std::pow(r, nu - 1);
      X.c1(i, j) = (dchi * f + chi * fr) * std::cos(nu * th);
      X.c2(i, j) = -chi * fr * std::sin(nu * th);
    }
  return to_cartesian(X);
}

}  // namespace cmhd
