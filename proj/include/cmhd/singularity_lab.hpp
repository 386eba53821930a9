#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "discrete_calc.hpp"
#include "error.hpp"
#include "field.hpp"
#include "geometry.hpp"

namespace cmhd {

// ---------------------------------------------------------------------------
// Counterexample fields on the corner sector 0 < theta < omega

enum class CounterexampleCase { A, B, C };

inline std::string case_name(CounterexampleCase c) { return c == CounterexampleCase::A ? "A" : c == CounterexampleCase::B ? "B" : "C"; }

struct CounterexampleSpec {
  CounterexampleCase kind = CounterexampleCase::C;
  double omega = 2 * pi / 5;
  int n = 0;           //!< pi / omega for cases A and B
  double lambda = 0;   //!< case A coefficient

  //! Case A: omega = pi / n with n >= 3.
  static CounterexampleSpec case_a(int n) {
    if (n < 3) throw DomainError("case A needs pi/omega = n >= 3");
    CounterexampleSpec s;
    s.kind = CounterexampleCase::A;
    s.n = n;
    s.omega = pi / n;
    s.lambda = pi / (n * std::pow(std::sin(s.omega), n - 1) * std::cos(s.omega));
    return s;
  }
  //! Case B: omega = pi / 2.
  static CounterexampleSpec case_b() {
    CounterexampleSpec s;
    s.kind = CounterexampleCase::B;
    s.n = 2;
    s.omega = pi / 2;
    return s;
  }
  //! Case C: pi / omega not an integer.
  static CounterexampleSpec case_c(double omega) {
    if (!(omega > 0 && omega < pi)) throw DomainError("case C needs 0 < omega < pi");
    const double nu = pi / omega;
    if (std::abs(nu - std::round(nu)) < 1e-12) throw DomainError("case C needs pi/omega outside the integers");
    CounterexampleSpec s;
    s.kind = CounterexampleCase::C;
    s.omega = omega;
    return s;
  }
  double nu() const { return pi / omega; }
};

//! f, its Cartesian gradient and Laplacian at a point with polar coordinates (r, th).
struct PointValue {
  double f;
  Vec2 grad;
  double lap;
};

inline PointValue counterexample_point(const CounterexampleSpec& s, double r, double th) {
  const double c = std::cos(th), sn = std::sin(th);
  const double x1 = r * c, x2 = r * sn;
  double f, fr, ft;  // value, d_r, d_theta
  Vec2 extra_grad(0, 0);
  double lap = 0;
  if (s.kind == CounterexampleCase::C) {
    const double nu = s.nu();
    f = std::pow(r, nu) * std::cos(nu * th);
    fr = nu * std::pow(r, nu - 1) * std::cos(nu * th);
    ft = -nu * std::pow(r, nu) * std::sin(nu * th);
  } else {
    // Re(z^k log z) = r^k (ln r cos k th - th sin k th)
    const int k = s.kind == CounterexampleCase::A ? s.n : 4;
    const double L = std::log(r), ck = std::cos(k * th), sk = std::sin(k * th), rk = std::pow(r, k);
    f = rk * (L * ck - th * sk);
    fr = k * std::pow(r, k - 1) * (L * ck - th * sk) + std::pow(r, k - 1) * ck;
    ft = rk * (-k * L * sk - sk - k * th * ck);
    if (s.kind == CounterexampleCase::A) {
      const int n = s.n;
      f -= s.lambda * std::pow(x2, n);
      extra_grad = Vec2(0, -s.lambda * n * std::pow(x2, n - 1));
      lap = -s.lambda * n * (n - 1) * std::pow(x2, n - 2);
    } else {
      f -= 2 * pi * x1 * x2 * x2 * x2;
      extra_grad = Vec2(-2 * pi * x2 * x2 * x2, -6 * pi * x1 * x2 * x2);
      lap = -12 * pi * x1 * x2;
    }
  }
  const Vec2 g(c * fr - sn / r * ft, sn * fr + c / r * ft);
  return {f, g + extra_grad, lap};
}

struct CounterexampleFields {
  ScalarField f, source, p_exact;
  VectorField grad_f, u_exact;  //!< polar basis (r, theta components)
  ScalarField lap_f;
};

inline void check_sector(const CounterexampleSpec& s, const Grid& g) {
  if (g.is_square() || std::abs(g.domain().omega - s.omega) > 1e-12)
    throw DomainError("counterexample grid must be the sector with omega = " + std::to_string(s.omega));
}

//! pvar = t f, u = -t^2 grad f / 2, source f - t^2 lap f / 2, sampled at cells and ghosts.
inline CounterexampleFields counterexample_field(const CounterexampleSpec& s, double t, const Grid& g) {
  check_sector(s, g);
  CounterexampleFields out{ScalarField(g), ScalarField(g), ScalarField(g), VectorField(g, Basis::Polar),
                           VectorField(g, Basis::Polar), ScalarField(g)};
  for (int i = -kGhost; i < g.n1() + kGhost; ++i)
    for (int j = -kGhost; j < g.n2() + kGhost; ++j) {
      const double r = g.c1(i), th = g.c2(j);
      if (r <= 0) continue;
      const PointValue v = counterexample_point(s, r, th);
      const double gr = std::cos(th) * v.grad(0) + std::sin(th) * v.grad(1);
      const double gt = -std::sin(th) * v.grad(0) + std::cos(th) * v.grad(1);
      out.f(i, j) = v.f;
      out.lap_f(i, j) = v.lap;
      out.source(i, j) = v.f - 0.5 * t * t * v.lap;
      out.p_exact(i, j) = t * v.f;
      out.grad_f.c1(i, j) = gr;
      out.grad_f.c2(i, j) = gt;
      out.u_exact.c1(i, j) = -0.5 * t * t * gr;
      out.u_exact.c2(i, j) = -0.5 * t * t * gt;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Acoustic system d_t u + grad p = 0, d_t p + div u = S on a polar cell grid.

struct AcousticState {
  ScalarField ur, ut, p;
};

struct AcousticConfig {
  double cfl = 0.45;
  double dissipation = 0.02;
  double dt = 0;  //!< 0 chooses dt from the CFL number
  std::optional<AcousticState> initial;
  int record_every = 0;  //!< > 0 stores snapshots every that many steps
};

struct AcousticRun {
  AcousticState final_state;
  std::vector<std::pair<double, AcousticState>> snapshots;
  std::vector<double> energy_t, energy;
  double dt = 0;
  int steps = 0;
};

//! u_r: r u_r odd about r = 0 and r = r0; u_theta odd at the legs; p even.
inline void acoustic_ghosts(AcousticState& z) {
  const Grid& g = z.p.grid();
  const int n1 = g.n1(), n2 = g.n2();
  for (int j = 0; j < n2; ++j)
    for (int k = 1; k <= kGhost; ++k) {
      z.ur(-k, j) = z.ur(k - 1, j);
      z.ur(n1 - 1 + k, j) = -g.c1(n1 - k) / g.c1(n1 - 1 + k) * z.ur(n1 - k, j);
      z.ut(-k, j) = z.ut(k - 1, j);
      z.ut(n1 - 1 + k, j) = z.ut(n1 - k, j);
      z.p(-k, j) = z.p(k - 1, j);
      z.p(n1 - 1 + k, j) = z.p(n1 - k, j);
    }
  for (int i = -kGhost; i < n1 + kGhost; ++i)
    for (int k = 1; k <= kGhost; ++k) {
      z.ur(i, -k) = z.ur(i, k - 1);
      z.ur(i, n2 - 1 + k) = z.ur(i, n2 - k);
      z.ut(i, -k) = -z.ut(i, k - 1);
      z.ut(i, n2 - 1 + k) = -z.ut(i, n2 - k);
      z.p(i, -k) = z.p(i, k - 1);
      z.p(i, n2 - 1 + k) = z.p(i, n2 - k);
    }
}

//! Second difference along dir with reflected neighbours (odd_lo / odd_hi flip sign).
inline ScalarField reflected_second_difference(const ScalarField& q, int dir, bool odd_lo, bool odd_hi) {
  const Grid& g = q.grid();
  ScalarField out(g);
  const int n = dir == 0 ? g.n1() : g.n2();
  auto at = [&](int i, int j, int k) {
    // value at index k along dir, reflecting across the ends
    double s = 1;
    if (k < 0) { k = -k - 1; s = odd_lo ? -1 : 1; }
    if (k >= n) { k = 2 * n - 1 - k; s = odd_hi ? -1 : 1; }
    return dir == 0 ? s * q(k, j) : s * q(i, k);
  };
  for (int i = 0; i < g.n1(); ++i)
    for (int j = 0; j < g.n2(); ++j) {
      const int k = dir == 0 ? i : j;
      out(i, j) = at(i, j, k + 1) - 2 * at(i, j, k) + at(i, j, k - 1);
    }
  return out;
}

inline void acoustic_dissipation(const ScalarField& q, ScalarField& d, double eps, bool odd_rhi, bool odd_legs) {
  if (eps == 0) return;
  const Grid& g = q.grid();
  ScalarField w = reflected_second_difference(q, 0, false, odd_rhi);
  for (int i = 0; i < g.n1(); ++i)
    for (int j = 0; j < g.n2(); ++j) w(i, j) *= g.c1(i);
  const ScalarField rr = reflected_second_difference(w, 0, false, odd_rhi);
  const ScalarField tt = reflected_second_difference(reflected_second_difference(q, 1, odd_legs, odd_legs), 1, odd_legs, odd_legs);
  for (int i = 0; i < g.n1(); ++i) {
    const double r = g.c1(i);
    for (int j = 0; j < g.n2(); ++j) d(i, j) -= eps * (rr(i, j) / (g.h1() * r) + tt(i, j) / (g.h2() * r));
  }
}

inline AcousticState acoustic_rhs(const AcousticState& z, const ScalarField* S, double eps) {
  const Grid& g = z.p.grid();
  AcousticState d{ScalarField(g), ScalarField(g), ScalarField(g)};
  const double hr = g.h1(), ht = g.h2();
  for (int i = 0; i < g.n1(); ++i) {
    const double r = g.c1(i), rp = g.c1(i + 1), rm = g.c1(i - 1);
    for (int j = 0; j < g.n2(); ++j) {
      d.ur(i, j) = -(z.p(i + 1, j) - z.p(i - 1, j)) / (2 * hr);
      d.ut(i, j) = -(z.p(i, j + 1) - z.p(i, j - 1)) / (2 * r * ht);
      const double div = (rp * z.ur(i + 1, j) - rm * z.ur(i - 1, j)) / (2 * hr * r) + (z.ut(i, j + 1) - z.ut(i, j - 1)) / (2 * r * ht);
      d.p(i, j) = -div + (S ? (*S)(i, j) : 0.0);
    }
  }
  acoustic_dissipation(z.ur, d.ur, eps, true, false);
  acoustic_dissipation(z.ut, d.ut, eps, false, true);
  acoustic_dissipation(z.p, d.p, eps, false, false);
  return d;
}

//! r-weighted energy sum (|u|^2 + p^2) r h_r h_theta.
inline double acoustic_energy(const AcousticState& z) {
  const Grid& g = z.p.grid();
  return cell_integral(g, [&](int i, int j) { return z.ur(i, j) * z.ur(i, j) + z.ut(i, j) * z.ut(i, j) + z.p(i, j) * z.p(i, j); });
}

inline AcousticRun acoustic_sector_run(const CounterexampleSpec& spec, const std::function<ScalarField(double)>* source_override,
                                       bool zero_source, double T, const Grid& g, const AcousticConfig& cfg) {
  check_sector(spec, g);
  const double dt_cfl = cfg.cfl * std::min(g.h1(), g.c1(0) * g.h2());
  double dt = cfg.dt > 0 ? cfg.dt : dt_cfl;
  if (cfg.dt > 0 && cfg.dt > 0.5 * std::min(g.h1(), g.c1(0) * g.h2()) * (1 + 1e-12))
    throw NumericalFailure("CFL violation: dt=" + std::to_string(cfg.dt) + " exceeds " +
                           std::to_string(0.5 * std::min(g.h1(), g.c1(0) * g.h2())) + " for wave speed 1");
  const int steps = std::max(1, static_cast<int>(std::ceil(T / dt - 1e-12)));
  dt = T / steps;

  std::optional<CounterexampleFields> base;
  if (!zero_source && !source_override) base = counterexample_field(spec, 0.0, g);
  auto source = [&](double t) -> std::optional<ScalarField> {
    if (zero_source) return std::nullopt;
    if (source_override) return (*source_override)(t);
    ScalarField S = base->f;
    S.axpy(-0.5 * t * t, base->lap_f);
    return S;
  };
  AcousticState z = cfg.initial ? *cfg.initial : AcousticState{ScalarField(g), ScalarField(g), ScalarField(g)};
  acoustic_ghosts(z);
  AcousticRun run;
  run.dt = dt;
  run.steps = steps;
  run.energy_t.push_back(0);
  run.energy.push_back(acoustic_energy(z));
  auto L = [&](const AcousticState& y, double t) {
    const auto S = source(t);
    return acoustic_rhs(y, S ? &*S : nullptr, cfg.dissipation);
  };
  auto comb = [](AcousticState a, double ca, const AcousticState& b, double cb, const AcousticState& k, double ck) {
    for (auto [x, y, kk] : {std::tuple{&a.ur, &b.ur, &k.ur}, std::tuple{&a.ut, &b.ut, &k.ut}, std::tuple{&a.p, &b.p, &k.p}}) {
      *x *= ca;
      x->axpy(cb, *y).axpy(ck, *kk);
    }
    return a;
  };
  for (int n = 0; n < steps; ++n) {
    const double t = n * dt;
    const AcousticState k1 = L(z, t);
    AcousticState y1 = comb(z, 1.0, z, 0.0, k1, dt);
    acoustic_ghosts(y1);
    const AcousticState k2 = L(y1, t + dt);
    AcousticState y2 = comb(z, 0.75, y1, 0.25, k2, 0.25 * dt);
    acoustic_ghosts(y2);
    const AcousticState k3 = L(y2, t + 0.5 * dt);
    z = comb(z, 1.0 / 3.0, y2, 2.0 / 3.0, k3, 2.0 / 3.0 * dt);
    acoustic_ghosts(z);
    if (!z.p.all_finite() || !z.ur.all_finite() || !z.ut.all_finite())
      throw NumericalFailure("non-finite acoustic state at t=" + std::to_string(t + dt));
    run.energy_t.push_back(t + dt);
    run.energy.push_back(acoustic_energy(z));
    if (cfg.record_every > 0 && (n + 1) % cfg.record_every == 0) run.snapshots.emplace_back(t + dt, z);
  }
  run.final_state = std::move(z);
  return run;
}

inline AcousticRun acoustic_sector_run(const CounterexampleSpec& spec, double T, const Grid& g, const AcousticConfig& cfg = {}) {
  return acoustic_sector_run(spec, nullptr, false, T, g, cfg);
}

//! Relative L2 error of (u, p) against the exact solution at time t over r in [r_lo, r_hi].
inline double annulus_relative_error(const AcousticState& z, const CounterexampleSpec& spec, double t, double r_lo, double r_hi) {
  const Grid& g = z.p.grid();
  const CounterexampleFields ex = counterexample_field(spec, t, g);
  double num = 0, den = 0;
  for (int i = 0; i < g.n1(); ++i) {
    const double r = g.c1(i);
    if (r < r_lo || r > r_hi) continue;
    for (int j = 0; j < g.n2(); ++j) {
      const double w = g.cell_volume(i, j);
      const double a = z.ur(i, j) - ex.u_exact.c1(i, j), b = z.ut(i, j) - ex.u_exact.c2(i, j), c = z.p(i, j) - ex.p_exact(i, j);
      num += w * (a * a + b * b + c * c);
      den += w * (ex.u_exact.c1(i, j) * ex.u_exact.c1(i, j) + ex.u_exact.c2(i, j) * ex.u_exact.c2(i, j) +
                  ex.p_exact(i, j) * ex.p_exact(i, j));
    }
  }
  return std::sqrt(num / den);
}

// ---------------------------------------------------------------------------
// Exponent fit and norm scans

struct ExponentFit {
  double exponent = 0, stderr_ = 0;
  double theta = 0, r_lo = 0, r_hi = 0;
  int samples = 0;
};

//! Least-squares slope of log|q| against log r along the grid ray nearest theta0.
inline ExponentFit fit_singular_exponent(const ScalarField& q, double theta0, double r_lo, double r_hi) {
  const Grid& g = q.grid();
  if (g.is_square()) throw DomainError("exponent fits need a sector grid");
  const int j = std::clamp(static_cast<int>(std::lround(theta0 / g.h2() - 0.5)), 0, g.n2() - 1);
  std::vector<double> X, Y;
  for (int i = 0; i < g.n1(); ++i) {
    const double r = g.c1(i);
    if (r < r_lo || r > r_hi) continue;
    if (!(q(i, j) > 0)) throw PreconditionError("nonpositive sample " + std::to_string(q(i, j)) + " at r=" + std::to_string(r));
    X.push_back(std::log(r));
    Y.push_back(std::log(q(i, j)));
  }
  const int m = static_cast<int>(X.size());
  if (m < 8) throw PreconditionError("exponent fit needs at least 8 samples in the window, found " + std::to_string(m));
  double mx = 0, my = 0;
  for (int k = 0; k < m; ++k) { mx += X[k]; my += Y[k]; }
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0;
  for (int k = 0; k < m; ++k) {
    sxx += (X[k] - mx) * (X[k] - mx);
    sxy += (X[k] - mx) * (Y[k] - my);
  }
  const double slope = sxy / sxx, icpt = my - slope * mx;
  double sse = 0;
  for (int k = 0; k < m; ++k) {
    const double e = Y[k] - icpt - slope * X[k];
    sse += e * e;
  }
  ExponentFit f;
  f.exponent = slope;
  f.stderr_ = m > 2 ? std::sqrt(sse / (m - 2) / sxx) : 0.0;
  f.theta = g.c2(j);
  f.r_lo = r_lo;
  f.r_hi = r_hi;
  f.samples = m;
  return f;
}

inline ScalarField magnitude(const VectorField& v) {
  ScalarField m(v.grid());
  for (int i = -kGhost; i < v.grid().n1() + kGhost; ++i)
    for (int j = -kGhost; j < v.grid().n2() + kGhost; ++j) m(i, j) = std::hypot(v.c1(i, j), v.c2(i, j));
  return m;
}

struct ScanResult {
  NormReport report;
  double rate = 0;     //!< last fitted growth rate per 2x refinement
  double growth = 0;   //!< 2^rate
  bool divergent = false;
  std::string verdict() const { return divergent ? "divergent" : "finite"; }
};

//! Discrete H^s norms of u = -grad f / 2 on Sector(omega, r0) grids n x n.
inline ScanResult norm_divergence_scan(const CounterexampleSpec& spec, int s, const std::vector<int>& refinements, double r0 = 1.0,
                                       double threshold = 0.1) {
  if (refinements.size() < 3) throw PreconditionError("norm scan needs at least 3 refinements");
  for (std::size_t k = 1; k < refinements.size(); ++k)
    if (refinements[k] <= refinements[k - 1]) throw PreconditionError("refinements must be strictly increasing");
  ScanResult out;
  for (int n : refinements) {
    const Grid g = make_grid(DomainSpec::sector(spec.omega, r0), n, n);
    const CounterexampleFields ex = counterexample_field(spec, 1.0, g);
    out.report.add("u", n, sobolev_norm(ex.u_exact, s));
  }
  out.rate = out.report.series["u"].rate.back();
  out.growth = std::pow(2.0, out.rate);
  out.divergent = out.rate > threshold;
  return out;
}

//! Same scan for an arbitrary smooth sampled field (f sampled in Cartesian coordinates).
inline ScanResult norm_scan_field(const DomainSpec& dom, const std::function<double(double, double)>& f, int s,
                                  const std::vector<int>& refinements, double threshold = 0.1) {
  if (refinements.size() < 3) throw PreconditionError("norm scan needs at least 3 refinements");
  ScanResult out;
  for (int n : refinements) {
    const Grid g = make_grid(dom, n, n);
    out.report.add("f", n, sobolev_norm(ScalarField::sample_xy(g, f), s));
  }
  out.rate = out.report.series["f"].rate.back();
  out.growth = std::pow(2.0, out.rate);
  out.divergent = out.rate > threshold;
  return out;
}

}  // namespace cmhd
