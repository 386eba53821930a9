#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "discrete_calc.hpp"
#include "eos.hpp"
#include "error.hpp"
#include "field.hpp"
#include "state.hpp"

namespace cmhd {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

// ---------------------------------------------------------------------------
// Coefficients of L(Z) = A0 d_t + A1 d_1 + A2 d_2 and the symmetrizer.
// Ordering of z: (u1, u2, b1, b2, pvar, s).

struct CoeffBundle {
  Mat6 S0, S0A0, S0A1, S0A2, A0, A1, A2;
  //! zero-order term z -> (0, 0, h(x,U) b - h(x,B) u, 0, 0)
  Mat6 Bterm = Mat6::Zero();
};

inline CoeffBundle assemble_coeffs(const Vec2& U, const Vec2& B, double R, double Q, const HMatrices* h = nullptr) {
  if (!(R > 0) || !(Q > 0)) throw EosDomainError("assemble_coeffs needs R > 0 and Q > 0");
  CoeffBundle c;
  const double B1 = B(0), B2 = B(1), U1 = U(0), U2 = U(1), iQ = 1.0 / Q;

  c.S0.setIdentity();
  c.S0(2, 4) = -B1;
  c.S0(3, 4) = -B2;

  Mat6& M = c.S0A0;
  M.setZero();
  M(0, 0) = M(1, 1) = R;
  M(2, 2) = 1 + iQ * B1 * B1;
  M(2, 3) = M(3, 2) = iQ * B1 * B2;
  M(3, 3) = 1 + iQ * B2 * B2;
  M(2, 4) = M(4, 2) = -iQ * B1;
  M(3, 4) = M(4, 3) = -iQ * B2;
  M(4, 4) = iQ;
  M(5, 5) = 1;

  auto flux = [&](double Uk, double Bk, int k) {
    Mat6 A = Mat6::Zero();
    A(0, 0) = A(1, 1) = R * Uk;
    A(0, 2) = A(2, 0) = -Bk;
    A(1, 3) = A(3, 1) = -Bk;
    A.block<3, 3>(2, 2) = Uk * M.block<3, 3>(2, 2);
    A(k, 4) = A(4, k) = 1;
    A(5, 5) = Uk;
    return A;
  };
  c.S0A1 = flux(U1, B1, 0);
  c.S0A2 = flux(U2, B2, 1);

  const Mat6 S0inv = c.S0.inverse();
  c.A0 = S0inv * c.S0A0;
  c.A1 = S0inv * c.S0A1;
  c.A2 = S0inv * c.S0A2;

  if (h) {
    // h(x,U) b - h(x,B) u
    c.Bterm.block<2, 2>(2, 2) = h->of(U);
    c.Bterm.block<2, 2>(2, 0) = -h->of(B);
  }
  return c;
}

inline CoeffBundle assemble_coeffs(const BackgroundSlice& Z, const EosModel& eos, int i, int j) {
  const EosValues e = eos(Z.P(i, j), Z.S(i, j));
  return assemble_coeffs(Z.U.at(i, j), Z.B.at(i, j), e.R, e.Q);
}

//! <z, A_nu z> with A_nu = S0A1 nu1 + S0A2 nu2 from the assembled matrices.
inline double boundary_quadratic(const Vec6& z, const CoeffBundle& c, const Vec2& nu) {
  const Mat6 An = c.S0A1 * nu(0) + c.S0A2 * nu(1);
  return z.dot(An * z);
}

// ---------------------------------------------------------------------------
// Ghost cells: normal components of u and b odd, everything else even.

inline void reflect(ScalarField& q, int dir, bool odd) {
  const int n1 = q.n1(), n2 = q.n2();
  const double s = odd ? -1.0 : 1.0;
  if (dir == 0) {
    for (int j = 0; j < n2; ++j)
      for (int g = 1; g <= kGhost; ++g) {
        q(-g, j) = s * q(g - 1, j);
        q(n1 - 1 + g, j) = s * q(n1 - g, j);
      }
  } else {
    for (int i = -kGhost; i < n1 + kGhost; ++i)
      for (int g = 1; g <= kGhost; ++g) {
        q(i, -g) = s * q(i, g - 1);
        q(i, n2 - 1 + g) = s * q(i, n2 - g);
      }
  }
}

inline void reflect_vector(VectorField& v) {
  reflect(v.c1, 0, true);
  reflect(v.c1, 1, false);
  reflect(v.c2, 0, false);
  reflect(v.c2, 1, true);
}

inline void reflect_scalar(ScalarField& q) {
  reflect(q, 0, false);
  reflect(q, 1, false);
}

inline void enforce_bc(State& z) {
  if (!z.grid().is_square()) throw DomainError("linearized MHD runs on the square");
  reflect_vector(z.u);
  reflect_vector(z.b);
  reflect_scalar(z.pvar);
  reflect_scalar(z.s);
}

// ---------------------------------------------------------------------------
// Semi-discrete operator

//! -eps * sum_dir delta^4 q / h_dir (uses both ghost layers).
inline void add_dissipation(const ScalarField& q, ScalarField& out, double eps) {
  if (eps == 0) return;
  const Grid& g = q.grid();
  const double a1 = eps / g.h1(), a2 = eps / g.h2();
  for (int i = 0; i < g.n1(); ++i)
    for (int j = 0; j < g.n2(); ++j) {
      const double d1 = q(i - 2, j) - 4 * q(i - 1, j) + 6 * q(i, j) - 4 * q(i + 1, j) + q(i + 2, j);
      const double d2 = q(i, j - 2) - 4 * q(i, j - 1) + 6 * q(i, j) - 4 * q(i, j + 1) + q(i, j + 2);
      out(i, j) -= a1 * d1 + a2 * d2;
    }
}

struct LinearCoefficients {
  BackgroundSlice Z;
  EosFields eos;
};

inline LinearCoefficients make_coefficients(const BackgroundSlice& Z, const EosModel& eos) {
  return {Z, eos_eval(eos, Z.P, Z.S)};
}

//! d_t z from the linearized system by sequential elimination
//! (momentum, induction, total pressure through d_t b, entropy).
inline State rhs_linear(const State& z, const LinearCoefficients& C, const SourceSlice* F, double eps_d) {
  if (z.kind != PressureKind::Total) throw PreconditionError("rhs_linear expects the total-pressure state");
  const Grid& g = z.grid();
  State d(g, PressureKind::Total);
  const double r1 = 0.5 / g.h1(), r2 = 0.5 / g.h2();
  const auto& Z = C.Z;
  for (int i = 0; i < g.n1(); ++i)
    for (int j = 0; j < g.n2(); ++j) {
      auto D1 = [&](const ScalarField& q) { return r1 * (q(i + 1, j) - q(i - 1, j)); };
      auto D2 = [&](const ScalarField& q) { return r2 * (q(i, j + 1) - q(i, j - 1)); };
      const double U1 = Z.U.c1(i, j), U2 = Z.U.c2(i, j), B1 = Z.B.c1(i, j), B2 = Z.B.c2(i, j);
      const double R = C.eos.R(i, j), Q = C.eos.Q(i, j);
      auto adv = [&](const ScalarField& q) { return U1 * D1(q) + U2 * D2(q); };
      auto mag = [&](const ScalarField& q) { return B1 * D1(q) + B2 * D2(q); };
      const double divu = D1(z.u.c1) + D2(z.u.c2);
      double f1 = 0, f2 = 0, g1 = 0, g2 = 0, f3 = 0, f4 = 0;
      if (F) {
        f1 = F->F1.c1(i, j); f2 = F->F1.c2(i, j);
        g1 = F->F2.c1(i, j); g2 = F->F2.c2(i, j);
        f3 = F->F3(i, j); f4 = F->F4(i, j);
      }
      d.u.c1(i, j) = (f1 - D1(z.pvar) + mag(z.b.c1)) / R - adv(z.u.c1);
      d.u.c2(i, j) = (f2 - D2(z.pvar) + mag(z.b.c2)) / R - adv(z.u.c2);
      // h-correction vanishes on the square (flat legs)
      const double ab1 = adv(z.b.c1), ab2 = adv(z.b.c2);
      const double db1 = g1 - ab1 + mag(z.u.c1) - B1 * divu;
      const double db2 = g2 - ab2 + mag(z.u.c2) - B2 * divu;
      d.b.c1(i, j) = db1;
      d.b.c2(i, j) = db2;
      d.pvar(i, j) = Q * (f3 - divu) - adv(z.pvar) + B1 * (db1 + ab1) + B2 * (db2 + ab2);
      d.s(i, j) = f4 - adv(z.s);
    }
  if (eps_d > 0)
    for (int k = 0; k < State::ncomp; ++k) add_dissipation(z.comp(k), d.comp(k), eps_d);
  return d;
}

//! Characteristic speed bound: |U| + max(2 sqrt(R(|B|^2+Q)), sqrt((Q+|B|^2)/R)).
inline double characteristic_speed(const LinearCoefficients& C) {
  const Grid& g = C.Z.P.grid();
  double um = 0, bound = 0, fast = 0;
  for (int i = 0; i < g.n1(); ++i)
    for (int j = 0; j < g.n2(); ++j) {
      const Vec2 U = C.Z.U.at(i, j), B = C.Z.B.at(i, j);
      const double R = C.eos.R(i, j), Q = C.eos.Q(i, j), b2 = B.squaredNorm();
      um = std::max(um, U.norm());
      bound = std::max(bound, 2 * std::sqrt(R * (b2 + Q)));
      fast = std::max(fast, std::sqrt((Q + b2) / R));
    }
  return um + std::max(bound, fast);
}

struct StepConfig {
  double cfl_limit = 0.5;
  double dissipation = 0.02;
  bool abort_on_cfl = true;
};

inline std::string locate_nonfinite(const State& z) {
  for (int k = 0; k < State::ncomp; ++k)
    for (int i = 0; i < z.grid().n1(); ++i)
      for (int j = 0; j < z.grid().n2(); ++j)
        if (!std::isfinite(z.comp(k)(i, j)))
          return "component " + std::to_string(k) + " cell (" + std::to_string(i) + "," + std::to_string(j) + ")";
  return "";
}

using BackgroundFn = std::function<LinearCoefficients(double)>;

inline BackgroundFn coefficients_of(const Background& Z, const EosModel& eos) {
  return [Z, eos](double t) { return make_coefficients(Z.at(t), eos); };
}

//! One SSP-RK3 step with ghost refresh after every stage. Returns true if the
//! step satisfied the CFL bound.
inline bool step(State& z, double dt, const BackgroundFn& Zf, const SourceTerm& F, double t, const StepConfig& cfg,
                 std::string* warning = nullptr) {
  const Grid& g = z.grid();
  const LinearCoefficients C0 = Zf(t);
  const double limit = cfg.cfl_limit * std::min(g.h1(), g.h2()) / characteristic_speed(C0);
  bool ok = dt <= limit * (1 + 1e-12);
  if (!ok) {
    const std::string msg = "CFL violation: dt=" + std::to_string(dt) + " exceeds " + std::to_string(limit);
    if (cfg.abort_on_cfl) throw NumericalFailure(msg);
    if (warning) *warning = msg;
  }
  auto L = [&](const State& y, double tt, const LinearCoefficients& C) {
    std::optional<SourceSlice> Fs;
    if (!F.zero()) Fs = F.at(tt);
    return rhs_linear(y, C, Fs ? &*Fs : nullptr, cfg.dissipation);
  };
  enforce_bc(z);
  State k = L(z, t, C0);
  State y1 = z;
  y1.axpy(dt, k);
  enforce_bc(y1);
  const LinearCoefficients C1 = Zf(t + dt);
  k = L(y1, t + dt, C1);
  State y2 = z;
  y2 *= 0.75;
  y2.axpy(0.25, y1).axpy(0.25 * dt, k);
  enforce_bc(y2);
  const LinearCoefficients Ch = Zf(t + 0.5 * dt);
  k = L(y2, t + 0.5 * dt, Ch);
  State y3 = z;
  y3 *= 1.0 / 3.0;
  y3.axpy(2.0 / 3.0, y2).axpy(2.0 / 3.0 * dt, k);
  enforce_bc(y3);
  if (!y3.all_finite()) throw NumericalFailure("non-finite value at " + locate_nonfinite(y3) + " at t=" + std::to_string(t + dt));
  z = std::move(y3);
  return ok;
}

// ---------------------------------------------------------------------------
// Structural residuals, evaluated from three consecutive snapshots.

struct Snapshot {
  double t;
  State z;
};

//! Time-derivative weights at position `at` of a uniform 3-point window.
struct TimeWeights {
  std::array<double, 3> d1, d2;
};
inline TimeWeights time_weights(int at, double dt) {
  TimeWeights w;
  if (at == 1)
    w.d1 = {-0.5 / dt, 0.0, 0.5 / dt};
  else if (at == 0)
    w.d1 = {-1.5 / dt, 2.0 / dt, -0.5 / dt};
  else
    w.d1 = {0.5 / dt, -2.0 / dt, 1.5 / dt};
  w.d2 = {1 / (dt * dt), -2 / (dt * dt), 1 / (dt * dt)};
  return w;
}

inline ScalarField combine3(const ScalarField& a, const ScalarField& b, const ScalarField& c, const std::array<double, 3>& w) {
  ScalarField out(a.grid());
  out.axpy(w[0], a).axpy(w[1], b).axpy(w[2], c);
  return out;
}

inline ScalarField dx(const ScalarField& q, int a1, int a2) { return cartesian_derivative(q, a1, a2); }

//! v . grad q with direct stencils
inline ScalarField advect(const VectorField& v, const ScalarField& q) { return v.c1 * dx(q, 1, 0) + v.c2 * dx(q, 0, 1); }

//! L2 residual of D_t(div b) = sum(d_i B_j d_j u_i - d_i U_j d_j b_i) - (div B)(div u) + div F2
//! at window position `at`.
inline double divb_residual_at(const std::array<const Snapshot*, 3>& w, int at, const BackgroundFn& Zf,
                               const SourceTerm& F) {
  const double dt = w[1]->t - w[0]->t;
  const TimeWeights tw = time_weights(at, dt);
  const State& z = w[at]->z;
  const double t = w[at]->t;
  const LinearCoefficients C = Zf(t);
  const auto& U = C.Z.U;
  const auto& B = C.Z.B;
  auto divb = [](const State& s) { return dx(s.b.c1, 1, 0) + dx(s.b.c2, 0, 1); };
  ScalarField dtdiv = combine3(divb(w[0]->z), divb(w[1]->z), divb(w[2]->z), tw.d1);
  // U . grad(div b) with direct second derivatives
  ScalarField lhs = dtdiv + U.c1 * (dx(z.b.c1, 2, 0) + dx(z.b.c2, 1, 1)) + U.c2 * (dx(z.b.c1, 1, 1) + dx(z.b.c2, 0, 2));
  const VectorField& u = z.u;
  const VectorField& b = z.b;
  std::array<std::array<ScalarField, 2>, 2> dB, dU, du, db;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      dB[i][j] = dx(B[j], i == 0, i == 1);
      dU[i][j] = dx(U[j], i == 0, i == 1);
      du[i][j] = dx(u[i], j == 0, j == 1);  // d_j u_i
      db[i][j] = dx(b[i], j == 0, j == 1);
    }
  ScalarField rhs(z.grid());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      rhs += dB[i][j] * du[i][j];
      rhs -= dU[i][j] * db[i][j];
    }
  rhs -= (dB[0][0] + dB[1][1]) * (du[0][0] + du[1][1]);
  if (!F.zero()) {
    const SourceSlice Fs = F.at(t);
    rhs += dx(Fs.F2.c1, 1, 0) + dx(Fs.F2.c2, 0, 1);
  }
  return l2_norm(lhs - rhs);
}

inline ScalarField cross(const ScalarField& a1, const ScalarField& a2, const ScalarField& b1, const ScalarField& b2) {
  return a1 * b2 - a2 * b1;
}

//! L2 residuals of the two rows of the curl system at window position `at`.
inline std::pair<double, double> curl_residual_at(const std::array<const Snapshot*, 3>& w, int at, const BackgroundFn& Zf,
                                                  const SourceTerm& F) {
  const double dt = w[1]->t - w[0]->t;
  const TimeWeights tw = time_weights(at, dt);
  const double t = w[at]->t;
  const State& z = w[at]->z;
  const Grid& g = z.grid();
  const LinearCoefficients C = Zf(t);
  const LinearCoefficients Cp = Zf(t + dt), Cm = Zf(t - dt);
  const VectorField& U = C.Z.U;
  const VectorField& B = C.Z.B;
  const ScalarField& R = C.eos.R;
  const ScalarField& Q = C.eos.Q;
  const VectorField& u = z.u;
  const VectorField& b = z.b;

  auto tder = [&](auto get) { return combine3(get(w[0]->z), get(w[1]->z), get(w[2]->z), tw.d1); };
  auto tder2 = [&](auto get) { return combine3(get(w[0]->z), get(w[1]->z), get(w[2]->z), tw.d2); };
  auto ctime = [&](const ScalarField& p, const ScalarField& m) {
    ScalarField r = p - m;
    r *= 0.5 / dt;
    return r;
  };

  const ScalarField cu = curl2d(u), cb = curl2d(b);
  // grad of curls via direct second derivatives
  const ScalarField cu_1 = dx(u.c2, 2, 0) - dx(u.c1, 1, 1), cu_2 = dx(u.c2, 1, 1) - dx(u.c1, 0, 2);
  const ScalarField cb_1 = dx(b.c2, 2, 0) - dx(b.c1, 1, 1), cb_2 = dx(b.c2, 1, 1) - dx(b.c1, 0, 2);

  const ScalarField Dt_cu = tder([](const State& s) { return curl2d(s.u); }) + U.c1 * cu_1 + U.c2 * cu_2;
  const ScalarField Dt_cb = tder([](const State& s) { return curl2d(s.b); }) + U.c1 * cb_1 + U.c2 * cb_2;
  const ScalarField Bgrad_cu = B.c1 * cu_1 + B.c2 * cu_2;
  const ScalarField Bgrad_cb = B.c1 * cb_1 + B.c2 * cb_2;

  // first derivatives: dq[k] = d_k q
  auto grad = [](const ScalarField& q) { return std::array<ScalarField, 2>{dx(q, 1, 0), dx(q, 0, 1)}; };
  const auto gu1 = grad(u.c1), gu2 = grad(u.c2), gb1 = grad(b.c1), gb2 = grad(b.c2), gp = grad(z.pvar);
  const auto gU1 = grad(U.c1), gU2 = grad(U.c2), gB1 = grad(B.c1), gB2 = grad(B.c2), gR = grad(R);
  const std::array<const std::array<ScalarField, 2>*, 2> gu{&gu1, &gu2}, gb{&gb1, &gb2}, gU{&gU1, &gU2}, gB{&gB1, &gB2};

  // D_t of u, b, pvar
  auto Dt = [&](auto get, const std::array<ScalarField, 2>& gq) {
    return tder(get) + U.c1 * gq[0] + U.c2 * gq[1];
  };
  const ScalarField Dtu1 = Dt([](const State& s) { return s.u.c1; }, gu1);
  const ScalarField Dtu2 = Dt([](const State& s) { return s.u.c2; }, gu2);
  const ScalarField Dtb1 = Dt([](const State& s) { return s.b.c1; }, gb1);
  const ScalarField Dtb2 = Dt([](const State& s) { return s.b.c2; }, gb2);
  const ScalarField Dtp = Dt([](const State& s) { return s.pvar; }, gp);

  // D_t^2 u = u_tt + (U_t . grad) u + 2 U . grad u_t + U_k (d_k U_j) d_j u + U_k U_j d_k d_j u
  const VectorField Ut(ctime(Cp.Z.U.c1, Cm.Z.U.c1), ctime(Cp.Z.U.c2, Cm.Z.U.c2));
  auto Dt2 = [&](int c) {
    auto comp = [c](const State& s) { return c == 0 ? s.u.c1 : s.u.c2; };
    const ScalarField& q = c == 0 ? u.c1 : u.c2;
    const auto& gq = *gu[c];
    ScalarField r = tder2(comp);
    r += Ut.c1 * gq[0] + Ut.c2 * gq[1];
    const ScalarField qt1 = tder([&](const State& s) { return dx(comp(s), 1, 0); });
    const ScalarField qt2 = tder([&](const State& s) { return dx(comp(s), 0, 1); });
    r += 2.0 * (U.c1 * qt1 + U.c2 * qt2);
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j) r += U[k] * (*gU[j])[k] * gq[j];
    r += U.c1 * U.c1 * dx(q, 2, 0) + 2.0 * (U.c1 * U.c2 * dx(q, 1, 1)) + U.c2 * U.c2 * dx(q, 0, 2);
    return r;
  };
  const ScalarField Dt2u1 = Dt2(0), Dt2u2 = Dt2(1);

  // [D_t, curl] q = -(d_1 U_j d_j q_2 - d_2 U_j d_j q_1), [B.grad, curl] likewise with B
  auto comm = [&](const std::array<const std::array<ScalarField, 2>*, 2>& gV,
                  const std::array<const std::array<ScalarField, 2>*, 2>& gq) {
    ScalarField r(g);
    for (int j = 0; j < 2; ++j) {
      r -= (*gV[j])[0] * (*gq[1])[j];
      r += (*gV[j])[1] * (*gq[0])[j];
    }
    return r;
  };

  std::optional<SourceSlice> Fs, Fp, Fm;
  if (!F.zero()) {
    Fs = F.at(t);
    Fp = F.at(t + dt);
    Fm = F.at(t - dt);
  }

  // Row 1
  ScalarField Ft1 = R * comm(gU, gu) + (-1.0) * comm(gB, gb) - cross(gR[0], gR[1], Dtu1, Dtu2);
  if (Fs) Ft1 += curl2d(Fs->F1);
  const ScalarField res1 = R * Dt_cu - Bgrad_cb - Ft1;

  // Row 2
  ScalarField iQ = Q;
  for (double& v : iQ.raw()) v = 1.0 / v;
  const auto giQ = grad(iQ);
  const ScalarField B2Q = iQ * (B.c1 * B.c1 + B.c2 * B.c2);
  ScalarField Ft2 = comm(gU, gb);
  // + (d_1 B_j d_j u_2 - d_2 B_j d_j u_1)
  Ft2 -= comm(gB, gu);
  const ScalarField curlB = curl2d(B);
  Ft2 += iQ * curlB * (Dtp - B.c1 * Dtb1 - B.c2 * Dtb2);
  {
    // - B x (grad(1/Q) D_t pvar + (1/Q)(d_i U_j d_j pvar)_i)
    std::array<ScalarField, 2> V;
    for (int i = 0; i < 2; ++i) {
      V[i] = giQ[i] * Dtp;
      V[i] += iQ * ((*gU[0])[i] * gp[0] + (*gU[1])[i] * gp[1]);
    }
    Ft2 -= cross(B.c1, B.c2, V[0], V[1]);
  }
  {
    // + B x (grad(B_j/Q) (D_t b)_j)
    const ScalarField BQ1 = B.c1 * iQ, BQ2 = B.c2 * iQ;
    const auto g1 = grad(BQ1), g2 = grad(BQ2);
    std::array<ScalarField, 2> V;
    for (int i = 0; i < 2; ++i) V[i] = g1[i] * Dtb1 + g2[i] * Dtb2;
    Ft2 += cross(B.c1, B.c2, V[0], V[1]);
  }
  {
    // + (1/Q) B x ([B_j d_i, D_t] b_j)_i,  [B_j d_i, D_t] b_j = B_j d_i U_k d_k b_j - (D_t B_j) d_i b_j
    const ScalarField Bt1 = ctime(Cp.Z.B.c1, Cm.Z.B.c1), Bt2 = ctime(Cp.Z.B.c2, Cm.Z.B.c2);
    const ScalarField DtB1 = Bt1 + U.c1 * gB1[0] + U.c2 * gB1[1];
    const ScalarField DtB2 = Bt2 + U.c1 * gB2[0] + U.c2 * gB2[1];
    const std::array<const ScalarField*, 2> DtB{&DtB1, &DtB2};
    std::array<ScalarField, 2> V;
    for (int i = 0; i < 2; ++i) {
      V[i] = ScalarField(g);
      for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) V[i] += B[j] * (*gU[k])[i] * (*gb[j])[k];
        V[i] -= *DtB[j] * (*gb[j])[i];
      }
      V[i] = iQ * V[i];
    }
    Ft2 += cross(B.c1, B.c2, V[0], V[1]);
    // - (1/Q)(B . D_t B) curl b
    Ft2 -= iQ * (B.c1 * DtB1 + B.c2 * DtB2) * cb;
  }
  {
    // + (1/Q) B x ((D_t R) D_t u) + (1/Q) B x (R D_t^2 u)
    const ScalarField Rt = ctime(Cp.eos.R, Cm.eos.R);
    const ScalarField DtR = Rt + U.c1 * gR[0] + U.c2 * gR[1];
    Ft2 += iQ * cross(B.c1, B.c2, DtR * Dtu1, DtR * Dtu2);
    Ft2 += iQ * cross(B.c1, B.c2, R * Dt2u1, R * Dt2u2);
  }
  if (Fs) {
    Ft2 += curl2d(Fs->F2);
    Ft2 -= curl2d(VectorField(B.c1 * Fs->F3, B.c2 * Fs->F3));
    // -(1/Q) B x D_t F1
    const ScalarField F1t1 = ctime(Fp->F1.c1, Fm->F1.c1), F1t2 = ctime(Fp->F1.c2, Fm->F1.c2);
    const ScalarField DtF1 = F1t1 + advect(U, Fs->F1.c1), DtF2 = F1t2 + advect(U, Fs->F1.c2);
    Ft2 -= iQ * cross(B.c1, B.c2, DtF1, DtF2);
  }
  ScalarField one(g, 1.0);
  const ScalarField res2 = (one + B2Q) * Dt_cb - Bgrad_cu - Ft2;
  return {l2_norm(res1), l2_norm(res2)};
}

// ---------------------------------------------------------------------------
// Compatibility at t = 0

struct CompatibilityReport {
  double tau = 0;
  double order0_unu = 0, order0_bnu = 0;
  double order1_unu = 0;
  bool order0_ok() const { return order0_unu <= tau && order0_bnu <= tau; }
  bool order1_ok() const { return order1_unu <= tau; }
  bool ok() const { return order0_ok() && order1_ok(); }
  std::string message() const {
    if (!order0_ok())
      return "compatibility order 0 fails: max|u.nu|=" + std::to_string(order0_unu) + " max|b.nu|=" + std::to_string(order0_bnu) +
             " tolerance " + std::to_string(tau);
    if (!order1_ok())
      return "compatibility order 1 fails: max|d_t u.nu|=" + std::to_string(order1_unu) + " tolerance " + std::to_string(tau);
    return "compatible";
  }
};

//! Orders 0 and 1; the time derivative of u comes from the momentum row.
inline CompatibilityReport compatibility_check(const State& z0, const SourceTerm& F, const Background& Z, const EosModel& eos,
                                               double tau = -1) {
  const Grid& g = z0.grid();
  CompatibilityReport r;
  r.tau = tau >= 0 ? tau : 10 * g.hmax() * g.hmax();
  r.order0_unu = max_normal_trace(z0.u, 4);
  r.order0_bnu = max_normal_trace(z0.b, 4);
  const LinearCoefficients C = make_coefficients(Z.at(0.0), eos);
  // fourth-order derivatives and cubic traces keep the check well below tau
  auto d4 = [](const ScalarField& q, int dir) { return deriv(q, dir, 1, 2); };
  auto adv4 = [&](const VectorField& V, const ScalarField& q) { return V.c1 * d4(q, 0) + V.c2 * d4(q, 1); };
  const VectorField gp(d4(z0.pvar, 0), d4(z0.pvar, 1));
  VectorField ut(g);
  std::optional<SourceSlice> Fs;
  if (!F.zero()) Fs = F.at(0.0);
  for (int c = 0; c < 2; ++c) {
    ScalarField m = adv4(C.Z.B, z0.b[c]) - gp[c];
    if (Fs) m += Fs->F1[c];
    for (int i = 0; i < g.n1(); ++i)
      for (int j = 0; j < g.n2(); ++j) m(i, j) /= C.eos.R(i, j);
    ut[c] = m - adv4(C.Z.U, z0.u[c]);
  }
  r.order1_unu = max_normal_trace(ut, 4);
  return r;
}

// ---------------------------------------------------------------------------
// Driver

struct DiagnosticsRow {
  double t, energy, max_bnu, max_unu, l2_divb, res_divb, res_curl1, res_curl2;
};

struct DiagnosticsReport {
  std::vector<DiagnosticsRow> rows;
  bool dissipation_on = false;
  std::vector<std::string> warnings;
  int steps = 0;
  double dt = 0;
};

struct RunConfig {
  double cfl = 0.45;
  double cfl_limit = 0.5;
  double dissipation = 0.02;
  bool abort_on_cfl = true;
  int output_every = 1;
  //! fixed step count; 0 picks the smallest count meeting the CFL number
  int nsteps = 0;
  bool store_trajectory = false;
  bool residuals = true;
  bool skip_compatibility = false;
  double compat_tau = -1;
  //! called after every output snapshot (t, state)
  std::function<void(double, const State&)> on_output;
};

struct LinearRun {
  std::vector<Snapshot> trajectory;
  State final_state;
  DiagnosticsReport diagnostics;
};

inline LinearRun run_linear(State z0, const Background& Z, const SourceTerm& F, const EosModel& eos, double T,
                            const RunConfig& cfg) {
  if (!z0.grid().is_square()) throw DomainError("linearized MHD runs on the square");
  if (!cfg.skip_compatibility) {
    const CompatibilityReport cr = compatibility_check(z0, F, Z, eos, cfg.compat_tau);
    if (!cr.ok()) throw PreconditionError(cr.message());
  }
  const Grid& g = z0.grid();
  const BackgroundFn Zf = coefficients_of(Z, eos);
  const double S = std::max(characteristic_speed(Zf(0.0)), characteristic_speed(Zf(T)));
  const double dt_max = cfg.cfl * std::min(g.h1(), g.h2()) / S;
  const int nsteps = cfg.nsteps > 0 ? cfg.nsteps : std::max(1, static_cast<int>(std::ceil(T / dt_max - 1e-12)));
  const double dt = T / nsteps;
  StepConfig sc{cfg.cfl_limit, cfg.dissipation, cfg.abort_on_cfl};

  LinearRun run;
  run.diagnostics.dissipation_on = cfg.dissipation > 0;
  run.diagnostics.steps = nsteps;
  run.diagnostics.dt = dt;

  std::deque<Snapshot> window;
  std::vector<DiagnosticsRow> rows;
  auto base_row = [&](const Snapshot& s) {
    const BackgroundSlice Zs = Z.at(s.t);
    DiagnosticsRow r{};
    r.t = s.t;
    r.energy = energy_functional(s.z, Zs, eos);
    r.max_bnu = max_normal_trace(s.z.b, 4);
    r.max_unu = max_normal_trace(s.z.u, 4);
    r.l2_divb = l2_norm(divergence(s.z.b));
    return r;
  };
  auto fill_residuals = [&](DiagnosticsRow& r, int at) {
    if (!cfg.residuals || window.size() < 3) return;
    const std::array<const Snapshot*, 3> w{&window[0], &window[1], &window[2]};
    r.res_divb = divb_residual_at(w, at, Zf, F);
    const auto [c1, c2] = curl_residual_at(w, at, Zf, F);
    r.res_curl1 = c1;
    r.res_curl2 = c2;
  };

  State z = std::move(z0);
  z.kind = PressureKind::Total;
  enforce_bc(z);
  double t = 0;
  auto emit = [&](const Snapshot& s) {
    if (cfg.store_trajectory) run.trajectory.push_back(s);
    if (cfg.on_output) cfg.on_output(s.t, s.z);
    rows.push_back(base_row(s));
    window.push_back(s);
    if (window.size() > 3) window.pop_front();
    if (window.size() == 3) {
      if (rows.size() == 3) fill_residuals(rows[0], 0);
      fill_residuals(rows[rows.size() - 2], 1);
    }
  };
  emit({0.0, z});
  for (int n = 1; n <= nsteps; ++n) {
    std::string warn;
    if (!step(z, dt, Zf, F, t, sc, &warn)) run.diagnostics.warnings.push_back(warn);
    t = n * dt;
    if (n % cfg.output_every == 0 || n == nsteps) {
      if (n == nsteps && n % cfg.output_every != 0) {
        // keep snapshot spacing uniform for the residual windows
        if (cfg.on_output) cfg.on_output(t, z);
        if (cfg.store_trajectory) run.trajectory.push_back({t, z});
        DiagnosticsRow r = base_row({t, z});
        rows.push_back(r);
      } else {
        emit({t, z});
      }
    }
  }
  if (window.size() == 3 && rows.size() >= 3 && rows.back().t == window[2].t) fill_residuals(rows.back(), 2);
  run.final_state = std::move(z);
  run.diagnostics.rows = std::move(rows);
  return run;
}

//! Residual series over a stored trajectory (uniform spacing).
inline std::vector<double> divb_transport_residual(const std::vector<Snapshot>& traj, const Background& Z, const EosModel& eos,
                                                   const SourceTerm& F) {
  if (traj.size() < 3) throw PreconditionError("divergence transport residual needs at least 3 snapshots");
  const BackgroundFn Zf = coefficients_of(Z, eos);
  std::vector<double> out;
  for (std::size_t n = 0; n < traj.size(); ++n) {
    const std::size_t c = std::clamp<std::size_t>(n, 1, traj.size() - 2);
    const std::array<const Snapshot*, 3> w{&traj[c - 1], &traj[c], &traj[c + 1]};
    out.push_back(divb_residual_at(w, static_cast<int>(n + 1 - c), Zf, F));
  }
  return out;
}

inline std::vector<std::pair<double, double>> curl_system_residual(const std::vector<Snapshot>& traj, const Background& Z,
                                                                   const EosModel& eos, const SourceTerm& F) {
  if (traj.size() < 3) throw PreconditionError("curl system residual needs at least 3 snapshots");
  const BackgroundFn Zf = coefficients_of(Z, eos);
  std::vector<std::pair<double, double>> out;
  for (std::size_t n = 0; n < traj.size(); ++n) {
    const std::size_t c = std::clamp<std::size_t>(n, 1, traj.size() - 2);
    const std::array<const Snapshot*, 3> w{&traj[c - 1], &traj[c], &traj[c + 1]};
    out.push_back(curl_residual_at(w, static_cast<int>(n + 1 - c), Zf, F));
  }
  return out;
}

}  // namespace cmhd
