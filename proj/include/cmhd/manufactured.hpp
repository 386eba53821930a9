#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "eos.hpp"
#include "field.hpp"
#include "state.hpp"

namespace cmhd {

//! Value and first derivatives in (t, x1, x2).
struct Jet {
  double v = 0, t = 0, x = 0, y = 0;
};

//! amp * T(t) * X(kx pi x) * Y(ky pi y), X and Y each sin or cos,
//! T(t) = c0 + c1 cos(om t + ph).
struct TrigTerm {
  double amp = 1;
  int kx = 1, ky = 1;
  bool sinx = false, siny = false;
  double c0 = 1, c1 = 0, om = 0, ph = 0;

  Jet eval(double t, double x, double y) const {
    const double ax = kx * pi * x, ay = ky * pi * y;
    const double X = sinx ? std::sin(ax) : std::cos(ax);
    const double Xp = kx * pi * (sinx ? std::cos(ax) : -std::sin(ax));
    const double Y = siny ? std::sin(ay) : std::cos(ay);
    const double Yp = ky * pi * (siny ? std::cos(ay) : -std::sin(ay));
    const double T = c0 + c1 * std::cos(om * t + ph);
    const double Tp = -c1 * om * std::sin(om * t + ph);
    return {amp * T * X * Y, amp * Tp * X * Y, amp * T * Xp * Y, amp * T * X * Yp};
  }
};

struct TrigField {
  double offset = 0;
  std::vector<TrigTerm> terms;

  Jet eval(double t, double x, double y) const {
    Jet j{offset, 0, 0, 0};
    for (const auto& k : terms) {
      const Jet a = k.eval(t, x, y);
      j.v += a.v; j.t += a.t; j.x += a.x; j.y += a.y;
    }
    return j;
  }
  ScalarField sample(const Grid& g, double t) const {
    return ScalarField::sample(g, [&](double x, double y) { return eval(t, x, y).v; });
  }
};

struct TrigVector {
  TrigField c1, c2;
  VectorField sample(const Grid& g, double t) const { return VectorField(c1.sample(g, t), c2.sample(g, t)); }
};

//! Term with the reflection parity of a normal (odd) component along `dir`
//! and even parity in the other direction; dir = -1 gives an even scalar term.
inline TrigTerm parity_term(int dir, double amp, int kx, int ky, double c0 = 1, double c1 = 0, double om = 0, double ph = 0) {
  TrigTerm t;
  t.amp = amp; t.kx = kx; t.ky = ky;
  t.sinx = dir == 0;
  t.siny = dir == 1;
  t.c0 = c0; t.c1 = c1; t.om = om; t.ph = ph;
  return t;
}

//! Exact solution z*, background Z and the source F = L(Z) z* on the unit square.
struct ManufacturedProblem {
  TrigVector u, b;
  TrigField p, s;
  TrigVector U, B;
  TrigField P, S;
  EosModel eos = EosModel::ideal_gas(1.4);

  State exact(const Grid& g, double t) const {
    State z(g, PressureKind::Total);
    z.u = u.sample(g, t);
    z.b = b.sample(g, t);
    z.pvar = p.sample(g, t);
    z.s = s.sample(g, t);
    return z;
  }
  BackgroundSlice background_at(const Grid& g, double t) const {
    return {U.sample(g, t), B.sample(g, t), P.sample(g, t), S.sample(g, t)};
  }
  Background background(const Grid& g) const {
    auto self = std::make_shared<ManufacturedProblem>(*this);
    return {[self, g](double t) { return self->background_at(g, t); }};
  }

  //! F1, F2, F3, F4 at one point.
  std::array<double, 6> source_point(double t, double x, double y) const {
    const Jet u1 = u.c1.eval(t, x, y), u2 = u.c2.eval(t, x, y);
    const Jet b1 = b.c1.eval(t, x, y), b2 = b.c2.eval(t, x, y);
    const Jet pp = p.eval(t, x, y), ss = s.eval(t, x, y);
    const double U1 = U.c1.eval(t, x, y).v, U2 = U.c2.eval(t, x, y).v;
    const double B1 = B.c1.eval(t, x, y).v, B2 = B.c2.eval(t, x, y).v;
    const EosValues e = eos(P.eval(t, x, y).v, S.eval(t, x, y).v);
    auto Dt = [&](const Jet& q) { return q.t + U1 * q.x + U2 * q.y; };
    auto Bd = [&](const Jet& q) { return B1 * q.x + B2 * q.y; };
    const double divu = u1.x + u2.y;
    std::array<double, 6> F{};
    F[0] = e.R * Dt(u1) + pp.x - Bd(b1);
    F[1] = e.R * Dt(u2) + pp.y - Bd(b2);
    F[2] = Dt(b1) - Bd(u1) + B1 * divu;
    F[3] = Dt(b2) - Bd(u2) + B2 * divu;
    F[4] = (Dt(pp) - B1 * Dt(b1) - B2 * Dt(b2)) / e.Q + divu;
    F[5] = Dt(ss);
    return F;
  }
  SourceSlice source_at(const Grid& g, double t) const {
    SourceSlice F{VectorField(g), VectorField(g), ScalarField(g), ScalarField(g)};
    for (int i = -kGhost; i < g.n1() + kGhost; ++i)
      for (int j = -kGhost; j < g.n2() + kGhost; ++j) {
        const auto f = source_point(t, g.c1(i), g.c2(j));
        F.F1.c1(i, j) = f[0]; F.F1.c2(i, j) = f[1];
        F.F2.c1(i, j) = f[2]; F.F2.c2(i, j) = f[3];
        F.F3(i, j) = f[4]; F.F4(i, j) = f[5];
      }
    return F;
  }
  SourceTerm source(const Grid& g) const {
    auto self = std::make_shared<ManufacturedProblem>(*this);
    return {[self, g](double t) { return self->source_at(g, t); }};
  }
};

//! Smooth time-dependent solution on a variable background with tangential U, B.
inline ManufacturedProblem default_manufactured(double eps = 0.2) {
  ManufacturedProblem m;
  m.u.c1.terms = {parity_term(0, 0.5, 1, 1, 0, 1, 2.0, 0.0)};
  m.u.c2.terms = {parity_term(1, 0.3, 2, 1, 0.5, 0.5, 1.0, 0.4)};
  m.b.c1.terms = {parity_term(0, 0.4, 1, 2, 0.2, 1, 1.5, 0.3)};
  m.b.c2.terms = {parity_term(1, 0.2, 1, 1, 1, 0.3, 1.0, 0.0)};
  m.p.terms = {parity_term(-1, 0.4, 1, 2, 0, 1, 1.0, 0.2), parity_term(-1, 0.1, 2, 1)};
  m.s.terms = {parity_term(-1, 0.2, 2, 1, 0, 1, 1.0, 0.0)};
  m.U.c1.terms = {parity_term(0, eps, 1, 1, 1, 0.3, 1.0, 0.0)};
  m.U.c2.terms = {parity_term(1, -eps, 1, 1, 1, 0.3, 1.0, 0.0)};
  m.B.c1.terms = {parity_term(0, 0.6 * eps, 2, 1)};
  m.B.c2.terms = {parity_term(1, 0.8 * eps, 1, 1, 1, 0.2, 2.0, 0.0)};
  m.P.offset = 1.0;
  m.P.terms = {parity_term(-1, 0.2, 1, 1, 1, 0.1, 1.0, 0.0)};
  m.S.terms = {parity_term(-1, 0.1, 1, 2)};
  return m;
}

//! Acoustic standing wave on a uniform rest state with R, Q fixed by (P0, S0):
//! pvar = cos(w t) cos(pi x) cos(pi y), w = pi sqrt(2 Q / R).
inline ManufacturedProblem standing_wave(const EosModel& eos, double P0 = 1.0, double S0 = 0.0) {
  const EosValues e = eos(P0, S0);
  const double w = pi * std::sqrt(2 * e.Q / e.R);
  const double a = pi / (e.R * w);
  ManufacturedProblem m;
  m.eos = eos;
  m.p.terms = {parity_term(-1, 1.0, 1, 1, 0, 1, w, 0)};
  m.u.c1.terms = {parity_term(0, a, 1, 1, 0, 1, w, -0.5 * pi)};
  m.u.c2.terms = {parity_term(1, a, 1, 1, 0, 1, w, -0.5 * pi)};
  m.P.offset = P0;
  m.S.offset = S0;
  return m;
}

//! Random smooth parity-consistent data on a uniform background.
inline ManufacturedProblem random_smooth(std::uint64_t seed, double amp = 0.3, int modes = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> A(-amp, amp);
  std::uniform_int_distribution<int> K(1, 2);
  ManufacturedProblem m;
  auto fill = [&](TrigField& f, int dir) {
    for (int k = 0; k < modes; ++k) f.terms.push_back(parity_term(dir, A(rng), K(rng), K(rng)));
  };
  fill(m.u.c1, 0); fill(m.u.c2, 1); fill(m.b.c1, 0); fill(m.b.c2, 1); fill(m.p, -1); fill(m.s, -1);
  m.P.offset = 1.0;
  return m;
}

//! Small smooth compatible perturbation of the rest state (u, b, p, s) = (0, 0, 1, 0),
//! physical pressure; b = amp * perp grad psi with psi = (sin(pi x) + sin(2 pi x) / 2) sin(pi y) / pi.
inline State small_smooth_data(const Grid& g, double amp) {
  State z(g, PressureKind::Physical);
  z.u.c1 = TrigField{0, {parity_term(0, amp, 1, 1)}}.sample(g, 0);
  z.u.c2 = TrigField{0, {parity_term(1, 0.5 * amp, 2, 1)}}.sample(g, 0);
  // b1 = -d_2 psi, b2 = d_1 psi
  z.b.c1 = TrigField{0, {parity_term(0, -amp, 1, 1), parity_term(0, -0.5 * amp, 2, 1)}}.sample(g, 0);
  z.b.c2 = TrigField{0, {parity_term(1, amp, 1, 1), parity_term(1, amp, 2, 1)}}.sample(g, 0);
  z.pvar = TrigField{1.0, {parity_term(-1, amp, 1, 2)}}.sample(g, 0);
  z.s = TrigField{0, {parity_term(-1, amp, 2, 1)}}.sample(g, 0);
  return z;
}

}  // namespace cmhd
