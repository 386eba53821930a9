#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "geometry.hpp"

namespace cmhd {

inline constexpr int kGhost = 2;

//! Deterministic pairwise summation.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t m = v.size() / 2;
  return pairwise_sum(v.subspan(0, m)) + pairwise_sum(v.subspan(m));
}

//! Cell samples plus kGhost ghost layers on every side.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const Grid& g, double value = 0.0)
      : grid_(g), s_(g.n2() + 2 * kGhost), data_(static_cast<std::size_t>(g.n1() + 2 * kGhost) * s_, value) {}

  template <class F>
  static ScalarField sample(const Grid& g, F&& f) {
    ScalarField out(g);
    for (int i = -kGhost; i < g.n1() + kGhost; ++i)
      for (int j = -kGhost; j < g.n2() + kGhost; ++j) out(i, j) = f(g.c1(i), g.c2(j));
    return out;
  }
  //! Sample f(x, y) in Cartesian coordinates on either domain kind.
  template <class F>
  static ScalarField sample_xy(const Grid& g, F&& f) {
    ScalarField out(g);
    for (int i = -kGhost; i < g.n1() + kGhost; ++i)
      for (int j = -kGhost; j < g.n2() + kGhost; ++j) {
        const Vec2 x = g.cartesian(i, j);
        out(i, j) = f(x(0), x(1));
      }
    return out;
  }

  const Grid& grid() const { return grid_; }
  int n1() const { return grid_.n1(); }
  int n2() const { return grid_.n2(); }

  double& operator()(int i, int j) { return data_[idx(i, j)]; }
  double operator()(int i, int j) const { return data_[idx(i, j)]; }

  const double* ptr(int i, int j) const { return data_.data() + idx(i, j); }
  std::ptrdiff_t stride1() const { return static_cast<std::ptrdiff_t>(s_); }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  template <class F>
  void for_each_cell(F&& f) {
    for (int i = 0; i < n1(); ++i)
      for (int j = 0; j < n2(); ++j) f(i, j, (*this)(i, j));
  }

  ScalarField& operator+=(const ScalarField& o) { return axpy(1.0, o); }
  ScalarField& operator-=(const ScalarField& o) { return axpy(-1.0, o); }
  ScalarField& operator*=(double a) {
    for (double& x : data_) x *= a;
    return *this;
  }
  ScalarField& axpy(double a, const ScalarField& o) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += a * o.data_[k];
    return *this;
  }
  ScalarField& hadamard(const ScalarField& o) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] *= o.data_[k];
    return *this;
  }
  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (int i = 0; i < n1(); ++i)
      for (int j = 0; j < n2(); ++j)
        if (!std::isfinite((*this)(i, j))) return false;
    return true;
  }
  double max_abs() const {
    double m = 0;
    for (int i = 0; i < n1(); ++i)
      for (int j = 0; j < n2(); ++j) m = std::max(m, std::abs((*this)(i, j)));
    return m;
  }

 private:
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i + kGhost) * s_ + static_cast<std::size_t>(j + kGhost);
  }
  Grid grid_{};
  std::size_t s_ = 0;
  std::vector<double> data_;
};

inline ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
inline ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
inline ScalarField operator*(double s, ScalarField a) { return a *= s; }
inline ScalarField operator*(ScalarField a, const ScalarField& b) { return a.hadamard(b); }

enum class Basis { Cartesian, Polar };

struct VectorField {
  ScalarField c1, c2;
  Basis basis = Basis::Cartesian;

  VectorField() = default;
  explicit VectorField(const Grid& g, Basis b = Basis::Cartesian) : c1(g), c2(g), basis(b) {}
  VectorField(ScalarField a, ScalarField b, Basis bs = Basis::Cartesian) : c1(std::move(a)), c2(std::move(b)), basis(bs) {
    if (!(c1.grid() == c2.grid())) throw DomainError("vector components live on different grids");
  }
  const Grid& grid() const { return c1.grid(); }
  ScalarField& operator[](int k) { return k == 0 ? c1 : c2; }
  const ScalarField& operator[](int k) const { return k == 0 ? c1 : c2; }

  VectorField& operator+=(const VectorField& o) { c1 += o.c1; c2 += o.c2; return *this; }
  VectorField& operator-=(const VectorField& o) { c1 -= o.c1; c2 -= o.c2; return *this; }
  VectorField& operator*=(double a) { c1 *= a; c2 *= a; return *this; }
  VectorField& axpy(double a, const VectorField& o) { c1.axpy(a, o.c1); c2.axpy(a, o.c2); return *this; }
  Vec2 at(int i, int j) const { return {c1(i, j), c2(i, j)}; }
};

inline VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
inline VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
inline VectorField operator*(double s, VectorField a) { return a *= s; }

//! Rotate polar components (v_r, v_theta) to Cartesian and back.
inline VectorField to_cartesian(const VectorField& v) {
  if (v.basis == Basis::Cartesian) return v;
  const Grid& g = v.grid();
  VectorField out(g);
  for (int i = -kGhost; i < g.n1() + kGhost; ++i)
    for (int j = -kGhost; j < g.n2() + kGhost; ++j) {
      const double c = std::cos(g.c2(j)), s = std::sin(g.c2(j));
      out.c1(i, j) = c * v.c1(i, j) - s * v.c2(i, j);
      out.c2(i, j) = s * v.c1(i, j) + c * v.c2(i, j);
    }
  return out;
}

inline VectorField to_polar(const VectorField& v) {
  if (v.basis == Basis::Polar) return v;
  const Grid& g = v.grid();
  if (!g.is_sector()) throw DomainError("polar basis requires a sector grid");
  VectorField out(g, Basis::Polar);
  for (int i = -kGhost; i < g.n1() + kGhost; ++i)
    for (int j = -kGhost; j < g.n2() + kGhost; ++j) {
      const double c = std::cos(g.c2(j)), s = std::sin(g.c2(j));
      out.c1(i, j) = c * v.c1(i, j) + s * v.c2(i, j);
      out.c2(i, j) = -s * v.c1(i, j) + c * v.c2(i, j);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Reductions (midpoint quadrature, pairwise summation)

template <class F>
double cell_integral(const Grid& g, F&& f) {
  std::vector<double> t;
  t.reserve(g.cells());
  for (int i = 0; i < g.n1(); ++i)
    for (int j = 0; j < g.n2(); ++j) t.push_back(f(i, j) * g.cell_volume(i, j));
  return pairwise_sum(t);
}

inline double inner(const ScalarField& a, const ScalarField& b) {
  return cell_integral(a.grid(), [&](int i, int j) { return a(i, j) * b(i, j); });
}
inline double inner(const VectorField& a, const VectorField& b) {
  const VectorField ac = to_cartesian(a), bc = to_cartesian(b);
  return cell_integral(a.grid(), [&](int i, int j) { return ac.c1(i, j) * bc.c1(i, j) + ac.c2(i, j) * bc.c2(i, j); });
}
inline double l2_norm(const ScalarField& a) { return std::sqrt(std::max(0.0, inner(a, a))); }
inline double l2_norm(const VectorField& a) {
  return std::sqrt(std::max(0.0, cell_integral(a.grid(), [&](int i, int j) {
    return a.c1(i, j) * a.c1(i, j) + a.c2(i, j) * a.c2(i, j);
  })));
}
inline double mean(const ScalarField& a) { return cell_integral(a.grid(), [&](int i, int j) { return a(i, j); }) / a.grid().area(); }

//! Boundary trace extrapolated from the cells nearest the face: 1.5 q0 - 0.5 q1
//! (points = 2) or the cubic (35 q0 - 35 q1 + 21 q2 - 5 q3) / 16 (points = 4).
inline double extrapolate_trace(const ScalarField& q, Face f, int k, int points = 2) {
  static constexpr double w2[] = {1.5, -0.5}, w4[] = {35.0 / 16, -35.0 / 16, 21.0 / 16, -5.0 / 16};
  const double* w = points == 4 ? w4 : w2;
  const int np = points == 4 ? 4 : 2;
  const int n1 = q.n1(), n2 = q.n2();
  double s = 0;
  for (int m = 0; m < np; ++m) {
    switch (f) {
      case Face::X1Lo: s += w[m] * q(m, k); break;
      case Face::X1Hi: case Face::Arc: s += w[m] * q(n1 - 1 - m, k); break;
      case Face::X2Lo: case Face::LegLo: s += w[m] * q(k, m); break;
      case Face::X2Hi: case Face::LegHi: s += w[m] * q(k, n2 - 1 - m); break;
    }
  }
  return s;
}

//! Trace as the average of the boundary cell and its ghost (edge midpoint value).
inline double ghost_trace(const ScalarField& q, Face f, int k) {
  const int n1 = q.n1(), n2 = q.n2();
  switch (f) {
    case Face::X1Lo: return 0.5 * (q(0, k) + q(-1, k));
    case Face::X1Hi: case Face::Arc: return 0.5 * (q(n1 - 1, k) + q(n1, k));
    case Face::X2Lo: case Face::LegLo: return 0.5 * (q(k, 0) + q(k, -1));
    case Face::X2Hi: case Face::LegHi: return 0.5 * (q(k, n2 - 1) + q(k, n2));
  }
  return 0;
}

//! max over all boundary faces of |v . nu| using extrapolated traces.
inline double max_normal_trace(const VectorField& v, int points = 2) {
  const Grid& g = v.grid();
  const VectorField vc = to_cartesian(v);
  double m = 0;
  for (Face f : faces(g))
    for (int k = 0; k < face_size(g, f); ++k) {
      const Vec2 nu = boundary_normal(g, f, k);
      const double t = nu(0) * extrapolate_trace(vc.c1, f, k, points) + nu(1) * extrapolate_trace(vc.c2, f, k, points);
      m = std::max(m, std::abs(t));
    }
  return m;
}

}  // namespace cmhd
