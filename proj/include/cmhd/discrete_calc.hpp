#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "eos.hpp"
#include "field.hpp"
#include "state.hpp"
#include "stencil.hpp"

namespace cmhd {

// ---------------------------------------------------------------------------
// Differential operators (Cartesian components on output)

inline VectorField gradient(const ScalarField& q) {
  return VectorField(cartesian_derivative(q, 1, 0), cartesian_derivative(q, 0, 1));
}

inline ScalarField divergence(const VectorField& v) {
  const VectorField c = to_cartesian(v);
  return cartesian_derivative(c.c1, 1, 0) + cartesian_derivative(c.c2, 0, 1);
}

//! curl u = d1 u2 - d2 u1
inline ScalarField curl2d(const VectorField& v) {
  const VectorField c = to_cartesian(v);
  return cartesian_derivative(c.c2, 1, 0) - cartesian_derivative(c.c1, 0, 1);
}

inline ScalarField laplacian(const ScalarField& q) {
  const Grid& g = q.grid();
  if (g.is_square()) return deriv(q, 0, 2) + deriv(q, 1, 2);
  // d_rr + d_r / r + d_thth / r^2
  ScalarField out = deriv(q, 0, 2);
  const ScalarField dr = deriv(q, 0, 1), dtt = deriv(q, 1, 2);
  for (int i = 0; i < g.n1(); ++i) {
    const double r = g.c1(i);
    for (int j = 0; j < g.n2(); ++j) out(i, j) += dr(i, j) / r + dtt(i, j) / (r * r);
  }
  return out;
}

//! grad-perp psi = (-d2 psi, d1 psi)
inline VectorField perp_gradient(const ScalarField& q) {
  ScalarField a = cartesian_derivative(q, 0, 1);
  a *= -1.0;
  return VectorField(std::move(a), cartesian_derivative(q, 1, 0));
}

enum class DiffKind { Gradient, Divergence, Curl2d, Laplacian };

// ---------------------------------------------------------------------------
// Norms

inline double sobolev_norm(const ScalarField& f, int s) {
  if (s < 0 || s > 4) throw PreconditionError("sobolev order must lie in [0, 4]");
  double acc = 0;
  for (int k = 0; k <= s; ++k)
    for (int a1 = k; a1 >= 0; --a1) {
      const double n = l2_norm(cartesian_derivative(f, a1, k - a1));
      acc += n * n;
    }
  return std::sqrt(acc);
}

inline double sobolev_norm(const VectorField& v, int s) {
  const VectorField c = to_cartesian(v);
  const double a = sobolev_norm(c.c1, s), b = sobolev_norm(c.c2, s);
  return std::sqrt(a * a + b * b);
}

//! Order in which full and tangential derivatives are composed in each term.
enum class AnisoOrder { FullThenTangential, TangentialThenFull };

struct AnisoTerm {
  int a1, a2, a3, a4;
  Poly1dOp op1, op2;  //!< direction-1 and direction-2 factors
};

inline std::vector<AnisoTerm> aniso_terms(int m, double delta, AnisoOrder order) {
  std::vector<AnisoTerm> t;
  auto make = [&](int a, int b) {
    if (order == AnisoOrder::FullThenTangential) return Poly1dOp::mixed(a, b, delta);
    Poly1dOp op = Poly1dOp::identity();
    const Poly w{{0.0, delta, -1.0}}, one{{1.0}};
    for (int k = 0; k < a; ++k) op = op.lcompose(one);
    for (int k = 0; k < b; ++k) op = op.lcompose(w);
    return op;
  };
  for (int a1 = 0; 2 * a1 <= m; ++a1)
    for (int a2 = 0; 2 * (a1 + a2) <= m; ++a2)
      for (int a3 = 0; 2 * (a1 + a2) + a3 <= m; ++a3)
        for (int a4 = 0; 2 * (a1 + a2) + a3 + a4 <= m; ++a4)
          t.push_back({a1, a2, a3, a4, make(a1, a3), make(a2, a4)});
  return t;
}

//! Applies op1(x1, d1) op2(x2, d2) to f.
inline ScalarField apply_tensor(const ScalarField& f, const Poly1dOp& op1, const Poly1dOp& op2) {
  const Grid& g = f.grid();
  ScalarField out(g);
  for (int l = 0; l <= op2.max_order(); ++l) {
    if (op2.terms[l].zero()) continue;
    const ScalarField d2 = deriv(f, 1, l);
    for (int j1 = 0; j1 <= op1.max_order(); ++j1) {
      if (op1.terms[j1].zero()) continue;
      const ScalarField d = deriv(d2, 0, j1);
      for (int i = 0; i < g.n1(); ++i) {
        const double p = op1.terms[j1](g.c1(i));
        for (int j = 0; j < g.n2(); ++j) out(i, j) += p * op2.terms[l](g.c2(j)) * d(i, j);
      }
    }
  }
  return out;
}

inline double aniso_norm(const ScalarField& f, int m, const TangentialFrame& frame,
                         AnisoOrder order = AnisoOrder::FullThenTangential) {
  if (!f.grid().is_square()) throw DomainError("anisotropic norm is only available on the square");
  if (m < 0) throw PreconditionError("anisotropic order must be non-negative");
  if (m > 6) throw PreconditionError("anisotropic order above 6 exceeds the stencil budget");
  double acc = 0;
  for (const AnisoTerm& t : aniso_terms(m, frame.delta, order)) {
    const double n = l2_norm(apply_tensor(f, t.op1, t.op2));
    acc += n * n;
  }
  return std::sqrt(acc);
}

//! C with aniso_norm(f, m) <= C sobolev_norm(f, m) on any grid of the square.
inline double aniso_embedding_constant(int m, double delta) {
  double c2 = 0;
  for (const AnisoTerm& t : aniso_terms(m, delta, AnisoOrder::FullThenTangential))
    for (const Poly& p : t.op1.terms)
      for (const Poly& q : t.op2.terms) {
        const double a = p.sup_abs(0, delta) * q.sup_abs(0, delta);
        c2 += a * a;
      }
  return std::sqrt(c2);
}

struct NormReport {
  std::map<std::string, double> values;
  struct Series {
    std::vector<int> grid_n;
    std::vector<double> value;
    std::vector<double> rate;  //!< log2 growth per refinement pair
  };
  std::map<std::string, Series> series;

  void add(const std::string& label, int n, double v) {
    Series& s = series[label];
    s.grid_n.push_back(n);
    s.value.push_back(v);
    values[label] = v;
    s.rate.clear();
    if (s.value.size() >= 3)
      for (std::size_t k = 1; k < s.value.size(); ++k)
        s.rate.push_back(std::log(s.value[k] / s.value[k - 1]) / std::log(double(s.grid_n[k]) / s.grid_n[k - 1]));
  }
};

// ---------------------------------------------------------------------------
// Energy and tangential decomposition

//! Integral of R|u|^2 + |b|^2 + |pvar - b.B|^2 / Q + |s|^2.
inline double energy_functional(const State& z, const BackgroundSlice& Z, const EosModel& eos) {
  const EosFields e = eos_eval(eos, Z.P, Z.S);
  const Grid& g = z.grid();
  for (int i = 0; i < g.n1(); ++i)
    for (int j = 0; j < g.n2(); ++j)
      if (!(e.Q(i, j) > 0)) throw EosDomainError("non-positive Q", i, j);
  return cell_integral(g, [&](int i, int j) {
    const double u1 = z.u.c1(i, j), u2 = z.u.c2(i, j), b1 = z.b.c1(i, j), b2 = z.b.c2(i, j);
    const double q = z.pvar(i, j) - b1 * Z.B.c1(i, j) - b2 * Z.B.c2(i, j);
    return e.R(i, j) * (u1 * u1 + u2 * u2) + b1 * b1 + b2 * b2 + q * q / e.Q(i, j) + z.s(i, j) * z.s(i, j);
  });
}

inline std::pair<ScalarField, ScalarField> tangential_decompose(const VectorField& U, const TangentialFrame& frame,
                                                                double tol = -1) {
  const Grid& g = U.grid();
  if (!g.is_square()) throw DomainError("tangential decomposition is only available on the square");
  if (tol < 0) tol = 10 * g.hmax() * g.hmax() * std::max(1.0, std::max(U.c1.max_abs(), U.c2.max_abs()));
  const double tr = max_normal_trace(U);
  if (tr > tol)
    throw PreconditionError("U.nu = " + std::to_string(tr) + " on the boundary exceeds " + std::to_string(tol));
  ScalarField V1(g), V2(g);
  for (int i = 0; i < g.n1(); ++i)
    for (int j = 0; j < g.n2(); ++j) {
      V1(i, j) = U.c1(i, j) / frame.a(g.c1(i));
      V2(i, j) = U.c2(i, j) / frame.a(g.c2(j));
    }
  return {V1, V2};
}

//! d_w f = w . grad f
inline ScalarField w_derivative(const ScalarField& f, const TangentialFrame& frame, int which) {
  const Grid& g = f.grid();
  ScalarField d = deriv(f, which, 1);
  for (int i = 0; i < g.n1(); ++i)
    for (int j = 0; j < g.n2(); ++j) d(i, j) *= frame.a(which == 0 ? g.c1(i) : g.c2(j));
  return d;
}

}  // namespace cmhd
