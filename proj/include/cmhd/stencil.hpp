#pragma once

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <vector>

#include "field.hpp"

namespace cmhd {

//! Fornberg weights for the `order`-th derivative at x0 from nodes xs.
inline std::vector<double> fornberg(int order, double x0, const std::vector<double>& xs) {
  const int n = static_cast<int>(xs.size());
  std::vector<std::vector<double>> c(n, std::vector<double>(order + 1, 0.0));
  double c1 = 1.0, c4 = xs[0] - x0;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, order);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = xs[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][order];
  return w;
}

//! k-th derivative on n uniform cell centres, second-order accurate (plus
//! `extra` orders when extra > 0): centred in the interior, shifted one-sided
//! windows near the ends.
class Deriv1D {
 public:
  struct Row {
    int start;
    std::vector<double> w;
  };

  Deriv1D(int n, double h, int k, int extra = 0) : n_(n), k_(k) {
    if (k == 0) return;
    const int pc = ((k % 2) ? k + 2 : k + 1) + extra;
    const int half = pc / 2;
    const int po = k + 2 + extra;
    if (n < po) throw DomainError("grid too small for derivative stencil");
    rows_.resize(n);
    for (int i = 0; i < n; ++i) {
      int start, p;
      if (i - half >= 0 && i + half <= n - 1) {
        start = i - half;
        p = pc;
      } else {
        p = po;
        start = std::clamp(i - p / 2, 0, n - p);
      }
      std::vector<double> xs(p);
      for (int q = 0; q < p; ++q) xs[q] = (start + q - i);
      auto w = fornberg(k, 0.0, xs);
      for (double& x : w) x /= std::pow(h, k);
      rows_[i] = {start, std::move(w)};
    }
  }

  int order() const { return k_; }

  double apply(const double* q, std::ptrdiff_t stride, int i) const {
    if (k_ == 0) return q[i * stride];
    const Row& r = rows_[i];
    double s = 0;
    for (std::size_t m = 0; m < r.w.size(); ++m) s += r.w[m] * q[(r.start + static_cast<int>(m)) * stride];
    return s;
  }

 private:
  int n_, k_;
  std::vector<Row> rows_;
};

//! Cached Deriv1D instances keyed by (n, h, k, extra).
inline const Deriv1D& deriv1d(int n, double h, int k, int extra = 0) {
  static std::mutex mu;
  static std::map<std::tuple<int, double, int, int>, std::unique_ptr<Deriv1D>> cache;
  std::lock_guard lock(mu);
  auto& p = cache[{n, h, k, extra}];
  if (!p) p = std::make_unique<Deriv1D>(n, h, k, extra);
  return *p;
}

//! k-th derivative of q along direction `dir` (0 or 1), interior cells only.
inline ScalarField deriv(const ScalarField& q, int dir, int k, int extra = 0) {
  const Grid& g = q.grid();
  ScalarField out(g);
  if (k == 0) {
    out = q;
    return out;
  }
  if (dir == 0) {
    const Deriv1D& D = deriv1d(g.n1(), g.h1(), k, extra);
    const std::ptrdiff_t stride = q.stride1();
    for (int j = 0; j < g.n2(); ++j) {
      const double* base = q.ptr(0, j);
      for (int i = 0; i < g.n1(); ++i) out(i, j) = D.apply(base, stride, i);
    }
  } else {
    const Deriv1D& D = deriv1d(g.n2(), g.h2(), k, extra);
    for (int i = 0; i < g.n1(); ++i) {
      const double* base = q.ptr(i, 0);
      for (int j = 0; j < g.n2(); ++j) out(i, j) = D.apply(base, 1, j);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Polynomial-coefficient 1-D operators  sum_j p_j(x) d^j

struct Poly {
  std::vector<double> c;  //!< c[k] x^k
  double operator()(double x) const {
    double s = 0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) s = s * x + *it;
    return s;
  }
  Poly deriv() const {
    Poly d;
    for (std::size_t k = 1; k < c.size(); ++k) d.c.push_back(k * c[k]);
    return d;
  }
  bool zero() const {
    for (double x : c)
      if (x != 0) return false;
    return true;
  }
  double sup_abs(double a, double b, int samples = 400) const {
    double m = 0;
    for (int s = 0; s <= samples; ++s) m = std::max(m, std::abs((*this)(a + (b - a) * s / samples)));
    return m;
  }
};

inline Poly operator+(const Poly& a, const Poly& b) {
  Poly r;
  r.c.assign(std::max(a.c.size(), b.c.size()), 0.0);
  for (std::size_t k = 0; k < a.c.size(); ++k) r.c[k] += a.c[k];
  for (std::size_t k = 0; k < b.c.size(); ++k) r.c[k] += b.c[k];
  return r;
}
inline Poly operator*(const Poly& a, const Poly& b) {
  if (a.c.empty() || b.c.empty()) return {};
  Poly r;
  r.c.assign(a.c.size() + b.c.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.c.size(); ++i)
    for (std::size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

struct Poly1dOp {
  std::vector<Poly> terms;  //!< terms[j] multiplies d^j

  static Poly1dOp identity() { return {{Poly{{1.0}}}}; }

  //! Left-compose with coef(x) * d/dx.
  Poly1dOp lcompose(const Poly& coef) const {
    Poly1dOp r;
    r.terms.assign(terms.size() + 1, Poly{});
    for (std::size_t j = 0; j < terms.size(); ++j) {
      r.terms[j] = r.terms[j] + coef * terms[j].deriv();
      r.terms[j + 1] = r.terms[j + 1] + coef * terms[j];
    }
    return r;
  }
  //! d^a composed with (w d)^b, w(x) = x(delta - x).
  static Poly1dOp mixed(int a, int b, double delta) {
    Poly1dOp op = identity();
    const Poly w{{0.0, delta, -1.0}};
    const Poly one{{1.0}};
    for (int k = 0; k < b; ++k) op = op.lcompose(w);
    for (int k = 0; k < a; ++k) op = op.lcompose(one);
    return op;
  }
  int max_order() const { return static_cast<int>(terms.size()) - 1; }
};

// ---------------------------------------------------------------------------
// Cartesian derivatives in polar coordinates:
//   d1 = cos d_r - (sin/r) d_th,  d2 = sin d_r + (cos/r) d_th
// expanded symbolically into sum c_{ab}(r,th) d_r^a d_th^b with c a sum of
// monomials cos^p sin^q r^-e.

struct PolarOp {
  using Mono = std::array<int, 3>;  //!< (p, q, e)
  using Coef = std::map<Mono, double>;
  std::map<std::pair<int, int>, Coef> terms;

  static PolarOp identity() {
    PolarOp o;
    o.terms[{0, 0}][{0, 0, 0}] = 1.0;
    return o;
  }

  static void add(Coef& c, Mono m, double v) {
    if (v == 0) return;
    c[m] += v;
  }

  //! Left-compose with d1 (dir = 0) or d2 (dir = 1).
  PolarOp lcompose(int dir) const {
    PolarOp r;
    for (const auto& [ab, coef] : terms) {
      const auto [a, b] = ab;
      for (const auto& [m, v] : coef) {
        const auto [p, q, e] = m;
        // radial factor: cos (d1) or sin (d2)
        const int cp = dir == 0 ? 1 : 0, cq = dir == 0 ? 0 : 1;
        // angular factor: -sin/r (d1) or cos/r (d2)
        const double as = dir == 0 ? -1.0 : 1.0;
        const int ap = dir == 0 ? 0 : 1, aq = dir == 0 ? 1 : 0;
        // trig factor * d_r(coef)
        add(r.terms[{a, b}], {p + cp, q + cq, e + 1}, -e * v);
        add(r.terms[{a + 1, b}], {p + cp, q + cq, e}, v);
        // angular factor * d_th(coef)
        if (p > 0) add(r.terms[{a, b}], {p - 1 + ap, q + 1 + aq, e + 1}, as * (-p) * v);
        if (q > 0) add(r.terms[{a, b}], {p + 1 + ap, q - 1 + aq, e + 1}, as * q * v);
        add(r.terms[{a, b + 1}], {p + ap, q + aq, e + 1}, as * v);
      }
    }
    return r;
  }

  //! d1^a1 d2^a2 (commuting).
  static PolarOp cartesian(int a1, int a2) {
    PolarOp o = identity();
    for (int k = 0; k < a2; ++k) o = o.lcompose(1);
    for (int k = 0; k < a1; ++k) o = o.lcompose(0);
    return o;
  }

  static double eval(const Coef& c, double r, double th) {
    const double cs = std::cos(th), sn = std::sin(th);
    double s = 0;
    for (const auto& [m, v] : c) s += v * std::pow(cs, m[0]) * std::pow(sn, m[1]) * std::pow(r, -m[2]);
    return s;
  }
};

//! Applies d1^a1 d2^a2 to q on either domain kind.
inline ScalarField cartesian_derivative(const ScalarField& q, int a1, int a2) {
  const Grid& g = q.grid();
  if (g.is_square()) return deriv(deriv(q, 1, a2), 0, a1);
  const PolarOp op = PolarOp::cartesian(a1, a2);
  ScalarField out(g);
  for (const auto& [ab, coef] : op.terms) {
    if (coef.empty()) continue;
    const ScalarField d = deriv(deriv(q, 1, ab.second), 0, ab.first);
    for (int i = 0; i < g.n1(); ++i)
      for (int j = 0; j < g.n2(); ++j) out(i, j) += PolarOp::eval(coef, g.c1(i), g.c2(j)) * d(i, j);
  }
  return out;
}

}  // namespace cmhd
