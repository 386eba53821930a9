#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "eos.hpp"
#include "field.hpp"

namespace cmhd {

enum class PressureKind { Physical, Total };

//! Unknowns z = (u, b, pvar, s); pvar is p or the total pressure p + |b|^2/2.
struct State {
  VectorField u, b;
  ScalarField pvar;
  ScalarField s;
  PressureKind kind = PressureKind::Total;

  State() = default;
  explicit State(const Grid& g, PressureKind k = PressureKind::Total) : u(g), b(g), pvar(g), s(g), kind(k) {}

  const Grid& grid() const { return pvar.grid(); }

  ScalarField& comp(int k) {
    switch (k) {
      case 0: return u.c1;
      case 1: return u.c2;
      case 2: return b.c1;
      case 3: return b.c2;
      case 4: return pvar;
      default: return s;
    }
  }
  const ScalarField& comp(int k) const { return const_cast<State*>(this)->comp(k); }
  static constexpr int ncomp = 6;

  State& axpy(double a, const State& o) {
    for (int k = 0; k < ncomp; ++k) comp(k).axpy(a, o.comp(k));
    return *this;
  }
  State& operator*=(double a) {
    for (int k = 0; k < ncomp; ++k) comp(k) *= a;
    return *this;
  }
  bool all_finite() const {
    for (int k = 0; k < ncomp; ++k)
      if (!comp(k).all_finite()) return false;
    return true;
  }
};

inline State operator-(State a, const State& b) { return a.axpy(-1.0, b); }
inline State operator+(State a, const State& b) { return a.axpy(1.0, b); }

//! sqrt(sum of squared L2 norms of all six components).
inline double l2_norm(const State& z) {
  double s = 0;
  for (int k = 0; k < State::ncomp; ++k) {
    const double n = l2_norm(z.comp(k));
    s += n * n;
  }
  return std::sqrt(s);
}

//! Coefficients Z = (U, B, P, S) at one instant, plus the EOS fields.
struct BackgroundSlice {
  VectorField U, B;
  ScalarField P, S;
};

//! Static or time-dependent background.
struct Background {
  std::function<BackgroundSlice(double)> at;

  static Background constant(BackgroundSlice s) {
    auto sp = std::make_shared<BackgroundSlice>(std::move(s));
    return {[sp](double) { return *sp; }};
  }
  //! Piecewise linear interpolation of snapshots at times ts.
  static Background table(std::vector<double> ts, std::vector<BackgroundSlice> snaps) {
    auto T = std::make_shared<std::vector<double>>(std::move(ts));
    auto Sn = std::make_shared<std::vector<BackgroundSlice>>(std::move(snaps));
    return {[T, Sn](double t) {
      const auto& ts = *T;
      const auto& ss = *Sn;
      if (ss.size() == 1 || t <= ts.front()) return ss.front();
      if (t >= ts.back()) return ss.back();
      std::size_t k = std::upper_bound(ts.begin(), ts.end(), t) - ts.begin() - 1;
      const double th = (t - ts[k]) / (ts[k + 1] - ts[k]);
      BackgroundSlice r = ss[k];
      const double a = 1 - th;
      r.U *= a; r.U.axpy(th, ss[k + 1].U);
      r.B *= a; r.B.axpy(th, ss[k + 1].B);
      r.P *= a; r.P.axpy(th, ss[k + 1].P);
      r.S *= a; r.S.axpy(th, ss[k + 1].S);
      return r;
    }};
  }
};

//! F = (F1, F2, F3, F4) at one instant.
struct SourceSlice {
  VectorField F1, F2;
  ScalarField F3, F4;
};

struct SourceTerm {
  std::function<SourceSlice(double)> at;  //!< empty means F = 0
  bool zero() const { return !at; }
};

inline BackgroundSlice uniform_background(const Grid& g, Vec2 U, Vec2 B, double P, double S) {
  BackgroundSlice z{VectorField(g), VectorField(g), ScalarField(g, P), ScalarField(g, S)};
  z.U.c1.fill(U(0)); z.U.c2.fill(U(1));
  z.B.c1.fill(B(0)); z.B.c2.fill(B(1));
  return z;
}

}  // namespace cmhd
