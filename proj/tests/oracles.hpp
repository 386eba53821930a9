#pragma once
// Independent reference implementations used by the unit and acceptance tests.

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <cmhd/geometry.hpp>

namespace oracle {

using cmhd::Mat2;
using cmhd::Vec2;
using Mat6 = Eigen::Matrix<double, 6, 6>;

//! Observed order from errors on successive 2x refinements (last pair).
inline double order(const std::vector<double>& e) {
  return std::log2(e[e.size() - 2] / e.back());
}
//! Error sequence that either converges at order >= p or sits at round-off.
inline bool converges(const std::vector<double>& e, double p, double floor = 1e-9) {
  bool tiny = true;
  for (double x : e) tiny = tiny && x <= floor;
  return tiny || order(e) >= p;
}
inline double min_order(const std::vector<double>& e) {
  double m = 1e300;
  for (std::size_t k = 1; k < e.size(); ++k) m = std::min(m, std::log2(e[k - 1] / e[k]));
  return m;
}

// Boundary-distance pairs with closed-form gradient and Hessian:
//   Phi1 = x1 + a x2^2 + b sin(c x1 x2)
//   Phi2 = x2 + d x1^2 + e x1^3 x2
struct PhiParams {
  double a, b, c, d, e;
};

inline cmhd::PhiPair make_phi(const PhiParams& p) {
  auto phi1 = [p](const Vec2& x) {
    cmhd::PhiEval r;
    const double xy = x(0) * x(1), s = std::sin(p.c * xy), co = std::cos(p.c * xy);
    r.value = x(0) + p.a * x(1) * x(1) + p.b * s;
    r.grad = {1 + p.b * p.c * x(1) * co, 2 * p.a * x(1) + p.b * p.c * x(0) * co};
    const double h12 = p.b * p.c * co - p.b * p.c * p.c * xy * s;
    r.hess << -p.b * p.c * p.c * x(1) * x(1) * s, h12, h12, 2 * p.a - p.b * p.c * p.c * x(0) * x(0) * s;
    return r;
  };
  auto phi2 = [p](const Vec2& x) {
    cmhd::PhiEval r;
    r.value = x(1) + p.d * x(0) * x(0) + p.e * x(0) * x(0) * x(0) * x(1);
    r.grad = {2 * p.d * x(0) + 3 * p.e * x(0) * x(0) * x(1), 1 + p.e * x(0) * x(0) * x(0)};
    const double h12 = 3 * p.e * x(0) * x(0);
    r.hess << 2 * p.d + 6 * p.e * x(0) * x(1), h12, h12, 0.0;
    return r;
  };
  return {phi1, phi2};
}

inline std::vector<PhiParams> phi_families() {
  return {{0.3, 0.2, 1.5, -0.4, 0.1},
          {-0.5, 0.1, 2.0, 0.25, -0.2},
          {0.8, -0.3, 0.7, 0.5, 0.3},
          {0.0, 0.4, 3.0, -0.1, 0.05},
          {1.2, 0.05, 5.0, 0.7, -0.15}};
}

//! d_i of grad(Phi) by fourth-order Richardson central differences of the gradient.
inline Vec2 fd_grad_derivative(const std::function<cmhd::PhiEval(const Vec2&)>& phi, const Vec2& x, int i) {
  auto g = [&](double h) {
    Vec2 e = Vec2::Zero();
    e(i) = h;
    return Vec2((phi(x + e).grad - phi(x - e).grad) / (2 * h));
  };
  const double h = 1e-3;
  return (4.0 * g(h / 2) - g(h)) / 3.0;
}

//! Random smooth function: sum of a few low-frequency trig modes.
struct RandomTrig {
  struct Mode {
    double amp, k1, k2, ph1, ph2;
  };
  std::vector<Mode> modes;
  explicit RandomTrig(std::mt19937_64& rng, int nmodes = 4, double kmax = 3.0) {
    std::uniform_real_distribution<double> U(-1, 1), K(0.5, kmax), P(0, 2 * M_PI);
    for (int m = 0; m < nmodes; ++m) modes.push_back({U(rng), K(rng), K(rng), P(rng), P(rng)});
  }
  double operator()(double x, double y) const {
    double s = 0;
    for (const auto& m : modes) s += m.amp * std::cos(m.k1 * x + m.ph1) * std::cos(m.k2 * y + m.ph2);
    return s;
  }
};

//! Hyper-dual number a + b e1 + c e2 + d e1 e2 (e1^2 = e2^2 = 0): exact first and
//! second derivatives of compositions of elementary functions.
struct HD {
  double a = 0, b = 0, c = 0, d = 0;
  HD() = default;
  HD(double v) : a(v) {}
  HD(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {}
};
inline HD chain(const HD& x, double f, double f1, double f2) { return {f, f1 * x.b, f1 * x.c, f1 * x.d + f2 * x.b * x.c}; }
inline HD operator+(const HD& x, const HD& y) { return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d}; }
inline HD operator-(const HD& x, const HD& y) { return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d}; }
inline HD operator*(const HD& x, const HD& y) {
  return {x.a * y.a, x.a * y.b + x.b * y.a, x.a * y.c + x.c * y.a, x.a * y.d + x.b * y.c + x.c * y.b + x.d * y.a};
}
inline HD inv(const HD& x) { return chain(x, 1 / x.a, -1 / (x.a * x.a), 2 / (x.a * x.a * x.a)); }
inline HD operator/(const HD& x, const HD& y) { return x * inv(y); }
inline HD sqrt(const HD& x) {
  const double s = std::sqrt(x.a);
  return chain(x, s, 0.5 / s, -0.25 / (s * x.a));
}
inline HD log(const HD& x) { return chain(x, std::log(x.a), 1 / x.a, -1 / (x.a * x.a)); }
inline HD sin(const HD& x) { return chain(x, std::sin(x.a), std::cos(x.a), -std::sin(x.a)); }
inline HD cos(const HD& x) { return chain(x, std::cos(x.a), -std::sin(x.a), -std::cos(x.a)); }
inline HD atan(const HD& x) { return chain(x, std::atan(x.a), 1 / (1 + x.a * x.a), -2 * x.a / ((1 + x.a * x.a) * (1 + x.a * x.a))); }
inline HD pow(const HD& x, double p) {
  return chain(x, std::pow(x.a, p), p * std::pow(x.a, p - 1), p * (p - 1) * std::pow(x.a, p - 2));
}

//! Value, gradient and Laplacian of f(x, y) (x > 0) by hyper-dual evaluation.
struct Jet2 {
  double f;
  Vec2 grad;
  double lap;
};
template <class F>
Jet2 hyper_jet(F&& f, double x, double y) {
  const HD fx = f(HD(x, 1, 1, 0), HD(y));
  const HD fy = f(HD(x), HD(y, 1, 1, 0));
  return {fx.a, Vec2(fx.b, fy.b), fx.d + fy.d};
}

//! Corner counterexample f written in Cartesian form; kind is 'A', 'B' or 'C'.
inline Jet2 counterexample_jet(char kind, double omega, double x, double y) {
  const double pi = std::acos(-1.0);
  return hyper_jet(
      [&](HD X, HD Y) {
        const HD r = sqrt(X * X + Y * Y);
        const HD th = atan(Y / X);
        if (kind == 'C') {
          const double nu = pi / omega;
          return pow(r, nu) * cos(HD(nu) * th);
        }
        const int n = static_cast<int>(std::lround(pi / omega));
        const int k = kind == 'A' ? n : 4;
        HD g = pow(r, k) * (log(r) * cos(HD(double(k)) * th) - th * sin(HD(double(k)) * th));
        if (kind == 'A') {
          const double lam = pi / (n * std::pow(std::sin(pi / n), n - 1) * std::cos(pi / n));
          return g - HD(lam) * pow(Y, n);
        }
        return g - HD(2 * pi) * X * Y * Y * Y;
      },
      x, y);
}

//! Raw (unsymmetrized) coefficient matrices of the linearized system, row by row.
inline std::array<Mat6, 3> raw_system(const Vec2& U, const Vec2& B, double R, double Q) {
  Mat6 A0 = Mat6::Zero(), A1 = Mat6::Zero(), A2 = Mat6::Zero();
  A0(0, 0) = A0(1, 1) = R;
  A0(2, 2) = A0(3, 3) = 1;
  A0(4, 2) = -B(0) / Q;
  A0(4, 3) = -B(1) / Q;
  A0(4, 4) = 1 / Q;
  A0(5, 5) = 1;
  std::array<Mat6*, 2> A{&A1, &A2};
  for (int k = 0; k < 2; ++k) {
    Mat6& M = *A[k];
    const double Uk = U(k), Bk = B(k);
    // momentum: R U_k d_k u + d_k pvar e_k - B_k d_k b
    M(0, 0) = M(1, 1) = R * Uk;
    M(k, 4) = 1;
    M(0, 2) = M(1, 3) = -Bk;
    // induction: U_k d_k b - B_k d_k u + B (d_k u_k)
    M(2, 2) = M(3, 3) = Uk;
    M(2, 0) = M(3, 1) = -Bk;
    M(2, k) += B(0);
    M(3, k) += B(1);
    // pressure: (1/Q)(U_k d_k pvar - B . U_k d_k b) + d_k u_k
    M(4, 4) = Uk / Q;
    M(4, 2) = -B(0) * Uk / Q;
    M(4, 3) = -B(1) * Uk / Q;
    M(4, k) = 1;
    M(5, 5) = Uk;
  }
  return {A0, A1, A2};
}

}  // namespace oracle
