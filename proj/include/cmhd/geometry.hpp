#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "error.hpp"

namespace cmhd {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double pi = std::numbers::pi;

enum class DomainKind { Square, Sector };

inline const char* to_string(DomainKind k) { return k == DomainKind::Square ? "square" : "sector"; }

struct DomainSpec {
  DomainKind kind = DomainKind::Square;
  double delta = 1.0;   //!< side length (square)
  double omega = pi / 2;  //!< opening angle (sector)
  double r0 = 1.0;      //!< radius (sector)

  static DomainSpec square(double delta = 1.0) { return {DomainKind::Square, delta, pi / 2, 1.0}; }
  static DomainSpec sector(double omega, double r0 = 1.0) { return {DomainKind::Sector, 1.0, omega, r0}; }
};

inline void validate(const DomainSpec& d) {
  if (d.kind == DomainKind::Square) {
    if (!(d.delta > 0) || !std::isfinite(d.delta)) throw DomainError("square side length must be positive");
  } else {
    if (!(d.omega > 0 && d.omega < pi))
      throw DomainError("sector opening angle must lie in (0, pi) (convex corner), got " + std::to_string(d.omega));
    if (!(d.r0 > 0) || !std::isfinite(d.r0)) throw DomainError("sector radius must be positive");
  }
}

inline bool operator==(const DomainSpec& a, const DomainSpec& b) {
  return a.kind == b.kind && a.delta == b.delta && a.omega == b.omega && a.r0 == b.r0;
}

//! Cell-centred structured grid. Direction 1 is x1 (square) or r (sector),
//! direction 2 is x2 or theta.
class Grid {
 public:
  Grid() = default;
  Grid(const DomainSpec& spec, int n1, int n2) : spec_(spec), n1_(n1), n2_(n2) {
    validate(spec);
    if (n1 < 4 || n2 < 4) throw DomainError("grid needs at least 4 cells per direction");
    if (spec.kind == DomainKind::Square) {
      h1_ = spec.delta / n1;
      h2_ = spec.delta / n2;
    } else {
      h1_ = spec.r0 / n1;
      h2_ = spec.omega / n2;
    }
  }

  const DomainSpec& domain() const { return spec_; }
  DomainKind kind() const { return spec_.kind; }
  bool is_square() const { return spec_.kind == DomainKind::Square; }
  bool is_sector() const { return spec_.kind == DomainKind::Sector; }
  int n1() const { return n1_; }
  int n2() const { return n2_; }
  double h1() const { return h1_; }
  double h2() const { return h2_; }
  std::size_t cells() const { return static_cast<std::size_t>(n1_) * n2_; }

  //! Native coordinates of cell (i,j); valid for ghost indices too.
  double c1(int i) const { return (i + 0.5) * h1_; }
  double c2(int j) const { return (j + 0.5) * h2_; }

  Vec2 cartesian(int i, int j) const {
    if (is_square()) return {c1(i), c2(j)};
    const double r = c1(i), th = c2(j);
    return {r * std::cos(th), r * std::sin(th)};
  }

  //! Quadrature weight of a cell (r dr dtheta on sectors).
  double cell_volume(int i, int /*j*/) const { return is_square() ? h1_ * h2_ : c1(i) * h1_ * h2_; }

  double area() const {
    return is_square() ? spec_.delta * spec_.delta : 0.5 * spec_.omega * spec_.r0 * spec_.r0;
  }

  //! Largest physical cell size (used for h^2 tolerances).
  double hmax() const { return is_square() ? std::max(h1_, h2_) : std::max(h1_, spec_.r0 * h2_); }

  std::string describe() const {
    std::ostringstream os;
    os << n1_ << "x" << n2_ << " " << to_string(spec_.kind);
    if (is_square())
      os << " delta=" << spec_.delta;
    else
      os << " omega=" << spec_.omega << " r0=" << spec_.r0;
    return os.str();
  }

  bool operator==(const Grid& o) const { return spec_ == o.spec_ && n1_ == o.n1_ && n2_ == o.n2_; }

 private:
  DomainSpec spec_{};
  int n1_ = 0, n2_ = 0;
  double h1_ = 0, h2_ = 0;
};

inline Grid make_grid(const DomainSpec& spec, int n1, int n2) { return Grid(spec, n1, n2); }

enum class Face { X1Lo, X1Hi, X2Lo, X2Hi, LegLo, LegHi, Arc };

inline bool face_valid(const Grid& g, Face f) {
  const bool sq = f == Face::X1Lo || f == Face::X1Hi || f == Face::X2Lo || f == Face::X2Hi;
  return g.is_square() ? sq : !sq;
}

//! Number of boundary points along a face (one per adjacent cell).
inline int face_size(const Grid& g, Face f) {
  switch (f) {
    case Face::X1Lo: case Face::X1Hi: case Face::Arc: return g.n2();
    default: return g.n1();
  }
}

//! Outward unit normal at the face point adjacent to cell `index`.
inline Vec2 boundary_normal(const Grid& g, Face f, int index) {
  if (!face_valid(g, f)) throw DomainError("face does not belong to this domain");
  if (index < 0 || index >= face_size(g, f)) throw DomainError("face index out of range");
  const double om = g.domain().omega;
  switch (f) {
    case Face::X1Lo: return {-1.0, 0.0};
    case Face::X1Hi: return {1.0, 0.0};
    case Face::X2Lo: return {0.0, -1.0};
    case Face::X2Hi: return {0.0, 1.0};
    case Face::LegLo: return {0.0, -1.0};
    case Face::LegHi: return {-std::sin(om), std::cos(om)};
    case Face::Arc: {
      const double th = g.c2(index);
      return {std::cos(th), std::sin(th)};
    }
  }
  return {0.0, 0.0};
}

inline std::vector<Face> faces(const Grid& g) {
  if (g.is_square()) return {Face::X1Lo, Face::X1Hi, Face::X2Lo, Face::X2Hi};
  return {Face::LegLo, Face::LegHi, Face::Arc};
}

//! Physical location of the boundary point adjacent to cell `index`.
inline Vec2 face_point(const Grid& g, Face f, int index) {
  const double d = g.domain().delta, om = g.domain().omega, r0 = g.domain().r0;
  switch (f) {
    case Face::X1Lo: return {0.0, g.c2(index)};
    case Face::X1Hi: return {d, g.c2(index)};
    case Face::X2Lo: return {g.c1(index), 0.0};
    case Face::X2Hi: return {g.c1(index), d};
    case Face::LegLo: return {g.c1(index), 0.0};
    case Face::LegHi: return {g.c1(index) * std::cos(om), g.c1(index) * std::sin(om)};
    case Face::Arc: return {r0 * std::cos(g.c2(index)), r0 * std::sin(g.c2(index))};
  }
  return {0.0, 0.0};
}

// ---------------------------------------------------------------------------
// Boundary-distance functions and the corner matrices

struct PhiEval {
  double value = 0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
};

struct PhiPair {
  std::function<PhiEval(const Vec2&)> phi1;
  std::function<PhiEval(const Vec2&)> phi2;
};

inline PhiEval affine_phi(double a0, double a1, double a2) {
  PhiEval e;
  e.value = a0;
  e.grad = {a1, a2};
  return e;
}

//! Flat legs meeting at corner (0,0) of the square: Phi1 = x1, Phi2 = x2.
inline PhiPair square_corner_phi() {
  return {[](const Vec2& x) { return affine_phi(x(0), 1, 0); },
          [](const Vec2& x) { return affine_phi(x(1), 0, 1); }};
}

//! Signed distances to the two legs of a sector of angle omega.
inline PhiPair sector_phi(double omega) {
  const double s = std::sin(omega), c = std::cos(omega);
  return {[](const Vec2& x) { return affine_phi(x(1), 0, 1); },
          [s, c](const Vec2& x) { return affine_phi(s * x(0) - c * x(1), s, -c); }};
}

struct HMatrices {
  Mat2 h1 = Mat2::Zero();
  Mat2 h2 = Mat2::Zero();
  //! h(x,a) = a1 h1 + a2 h2
  Mat2 of(const Vec2& a) const { return a(0) * h1 + a(1) * h2; }
};

//! Solves (h^i)^T grad(Phi_l) = d_i grad(Phi_l) for both i.
inline HMatrices h_matrices(const PhiPair& phi, const Vec2& x) {
  const PhiEval a = phi.phi1(x), b = phi.phi2(x);
  Mat2 G;
  G.col(0) = a.grad;
  G.col(1) = b.grad;
  const double det = G.determinant();
  const double scale = a.grad.norm() * b.grad.norm();
  if (!(std::abs(det) > 1e-12 * scale)) throw DomainError("singular geometry: boundary-distance gradients are parallel");
  const Mat2 Ginv_t = G.inverse().transpose();
  HMatrices h;
  for (int i = 0; i < 2; ++i) {
    Mat2 H;
    H.col(0) = a.hess.col(i);
    H.col(1) = b.hess.col(i);
    (i == 0 ? h.h1 : h.h2) = Ginv_t * H.transpose();
  }
  return h;
}

// ---------------------------------------------------------------------------
// Tangential frame on the square

struct TangentialFrame {
  double delta = 1.0;
  //! scalar factor a(x) = x(delta - x); w1 = (a(x1), 0), w2 = (0, a(x2))
  double a(double x) const { return x * (delta - x); }
  double da(double x) const { return delta - 2 * x; }
  Vec2 w1(const Vec2& x) const { return {a(x(0)), 0.0}; }
  Vec2 w2(const Vec2& x) const { return {0.0, a(x(1))}; }
};

inline TangentialFrame tangential_frame(const Grid& g) {
  if (!g.is_square()) throw DomainError("tangential frame is only provided on the square");
  return TangentialFrame{g.domain().delta};
}

}  // namespace cmhd
