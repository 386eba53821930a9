#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "discrete_calc.hpp"
#include "eos.hpp"
#include "error.hpp"
#include "mhd_linear.hpp"
#include "state.hpp"

namespace cmhd {

enum class PMapDirection { ToTotal, ToPhysical };

//! (u, b, p, s) <-> (u, b, p + |b|^2/2, s), including ghosts.
inline State p_map(State z, PMapDirection dir) {
  const bool to_total = dir == PMapDirection::ToTotal;
  if (to_total != (z.kind == PressureKind::Physical))
    throw PreconditionError(to_total ? "p_map to total expects a physical-pressure state"
                                     : "p_map to physical expects a total-pressure state");
  auto& p = z.pvar.raw();
  const auto& b1 = z.b.c1.raw();
  const auto& b2 = z.b.c2.raw();
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double m = 0.5 * (b1[k] * b1[k] + b2[k] * b2[k]);
    p[k] = to_total ? p[k] + m : p[k] - m;
  }
  z.kind = to_total ? PressureKind::Total : PressureKind::Physical;
  return z;
}

//! Tendency of the nonlinear system in physical-pressure form, centred
//! differences on filled ghosts; b x (curl b) = (b2 c, -b1 c) with c = curl b.
inline State nonlinear_rhs(const State& z, const EosModel& eos) {
  if (z.kind != PressureKind::Physical) throw PreconditionError("nonlinear_rhs expects the physical-pressure state");
  const Grid& g = z.grid();
  const EosFields E = eos_eval(eos, z.pvar, z.s);
  State d(g, PressureKind::Physical);
  const double r1 = 0.5 / g.h1(), r2 = 0.5 / g.h2();
  for (int i = 0; i < g.n1(); ++i)
    for (int j = 0; j < g.n2(); ++j) {
      auto D1 = [&](const ScalarField& q) { return r1 * (q(i + 1, j) - q(i - 1, j)); };
      auto D2 = [&](const ScalarField& q) { return r2 * (q(i, j + 1) - q(i, j - 1)); };
      const double u1 = z.u.c1(i, j), u2 = z.u.c2(i, j), b1 = z.b.c1(i, j), b2 = z.b.c2(i, j);
      auto adv = [&](const ScalarField& q) { return u1 * D1(q) + u2 * D2(q); };
      auto mag = [&](const ScalarField& q) { return b1 * D1(q) + b2 * D2(q); };
      const double divu = D1(z.u.c1) + D2(z.u.c2);
      const double c = D1(z.b.c2) - D2(z.b.c1);
      const double R = E.R(i, j), Q = E.Q(i, j);
      d.pvar(i, j) = -adv(z.pvar) - Q * divu;
      d.u.c1(i, j) = -adv(z.u.c1) - (D1(z.pvar) + b2 * c) / R;
      d.u.c2(i, j) = -adv(z.u.c2) - (D2(z.pvar) - b1 * c) / R;
      d.b.c1(i, j) = -adv(z.b.c1) + mag(z.u.c1) - b1 * divu;
      d.b.c2(i, j) = -adv(z.b.c2) + mag(z.u.c2) - b2 * divu;
      d.s(i, j) = -adv(z.s);
    }
  if (!d.all_finite()) throw NumericalFailure("non-finite nonlinear tendency at " + locate_nonfinite(d));
  return d;
}

//! Componentwise box K = prod [lo_k, hi_k] in the order (u1, u2, b1, b2, p, s).
struct StateBox {
  std::array<double, 6> lo{-1, -1, -1, -1, 0.5, -1};
  std::array<double, 6> hi{1, 1, 1, 1, 2, 1};

  //! first component/cell outside the box enlarged by margin, or empty
  std::string violation(const State& z, double margin) const {
    for (int k = 0; k < State::ncomp; ++k)
      for (int i = 0; i < z.grid().n1(); ++i)
        for (int j = 0; j < z.grid().n2(); ++j) {
          const double v = z.comp(k)(i, j);
          if (!(v >= lo[k] - margin && v <= hi[k] + margin))
            return "component " + std::to_string(k) + " = " + std::to_string(v) + " at cell (" + std::to_string(i) + "," +
                   std::to_string(j) + ")";
        }
    return "";
  }
};

struct PicardConfig {
  double tol = 1e-10;
  int kmax = 8;
  double delta = 0.5;
  StateBox box;
  RunConfig run;
};

struct PicardIterate {
  int k = 0;
  double d_l2 = 0, d_h1 = 0;
  double ratio = std::nan("");
  double m_flat = 0;
};

struct PicardReport {
  std::vector<PicardIterate> iterates;
  double res_final = std::nan("");
  bool converged = false;
  int nsteps = 0;
};

struct PicardDivergence : DivergenceError {
  PicardDivergence(const std::string& what, PicardReport r) : DivergenceError(what), report(std::move(r)) {}
  PicardReport report;
};

struct PicardResult {
  std::vector<Snapshot> trajectory;  //!< physical-pressure states
  PicardReport report;
};

inline double h1_norm(const State& z) {
  double s = 0;
  for (int k = 0; k < State::ncomp; ++k) {
    const double n = sobolev_norm(z.comp(k), 1);
    s += n * n;
  }
  return std::sqrt(s);
}

inline Background background_of(const std::vector<Snapshot>& traj) {
  std::vector<double> ts;
  std::vector<BackgroundSlice> sl;
  for (const auto& s : traj) {
    ts.push_back(s.t);
    sl.push_back({s.z.u, s.z.b, s.z.pvar, s.z.s});
  }
  return Background::table(std::move(ts), std::move(sl));
}

//! sup over interior snapshots of || d_t z - N(z) ||, d_t by centred differences.
inline double nonlinear_residual(const std::vector<Snapshot>& traj, const EosModel& eos) {
  double r = 0;
  for (std::size_t n = 1; n + 1 < traj.size(); ++n) {
    State dt = traj[n + 1].z - traj[n - 1].z;
    dt *= 1.0 / (traj[n + 1].t - traj[n - 1].t);
    State z = traj[n].z;
    enforce_bc(z);
    r = std::max(r, l2_norm(dt - nonlinear_rhs(z, eos)));
  }
  return r;
}

//! Iterate (L + B)(z^k) y = 0, y(0) = p(z0), z^{k+1} = p^{-1}(y) from the
//! constant-in-time extension z^0 = z0.
inline PicardResult picard_solve(const State& z0, const EosModel& eos, double T, const PicardConfig& cfg) {
  if (z0.kind != PressureKind::Physical) throw PreconditionError("picard_solve expects physical pressure");
  const Grid& g = z0.grid();
  if (const std::string v = cfg.box.violation(z0, 0.0); !v.empty())
    throw PreconditionError("initial state outside the compact set: " + v);
  const State y0 = p_map(z0, PMapDirection::ToTotal);
  {
    const CompatibilityReport cr =
        compatibility_check(y0, SourceTerm{}, Background::constant({z0.u, z0.b, z0.pvar, z0.s}), eos, cfg.run.compat_tau);
    if (!cr.ok()) throw PreconditionError(cr.message());
  }

  // fixed time grid for all iterates, sized on the enlarged compact set
  RunConfig rc = cfg.run;
  rc.store_trajectory = true;
  rc.residuals = false;
  rc.skip_compatibility = true;
  rc.output_every = 1;
  if (rc.nsteps <= 0) {
    const double umax = std::hypot(std::max(std::abs(cfg.box.lo[0]), std::abs(cfg.box.hi[0])) + cfg.delta,
                                   std::max(std::abs(cfg.box.lo[1]), std::abs(cfg.box.hi[1])) + cfg.delta);
    const LinearCoefficients C0 = make_coefficients({z0.u, z0.b, z0.pvar, z0.s}, eos);
    const double S = characteristic_speed(C0) + umax;
    rc.nsteps = std::max(1, static_cast<int>(std::ceil(T * S / (rc.cfl * std::min(g.h1(), g.h2())))));
  }

  PicardResult out;
  out.report.nsteps = rc.nsteps;
  std::vector<Snapshot> zk;
  for (int n = 0; n <= rc.nsteps; ++n) zk.push_back({T * n / rc.nsteps, z0});

  int rises = 0;
  for (int k = 1; k <= cfg.kmax; ++k) {
    LinearRun run = run_linear(y0, background_of(zk), SourceTerm{}, eos, T, rc);
    std::vector<Snapshot> next;
    next.reserve(run.trajectory.size());
    PicardIterate it;
    it.k = k;
    for (std::size_t n = 0; n < run.trajectory.size(); ++n) {
      State z = p_map(std::move(run.trajectory[n].z), PMapDirection::ToPhysical);
      if (const std::string v = cfg.box.violation(z, cfg.delta); !v.empty()) {
        out.report.iterates.push_back(it);
        throw NumericalFailure("iterate " + std::to_string(k) + " left the compact set at t=" +
                               std::to_string(run.trajectory[n].t) + ": " + v);
      }
      const State diff = z - zk[n].z;
      it.d_l2 = std::max(it.d_l2, l2_norm(diff));
      it.d_h1 = std::max(it.d_h1, h1_norm(diff));
      it.m_flat = std::max(it.m_flat, h1_norm(z));
      next.push_back({run.trajectory[n].t, std::move(z)});
    }
    run.trajectory.clear();
    if (!out.report.iterates.empty()) {
      const double prev = out.report.iterates.back().d_l2;
      it.ratio = prev > 0 ? it.d_l2 / prev : 0.0;
      rises = it.d_l2 > prev ? rises + 1 : 0;
    }
    out.report.iterates.push_back(it);
    zk = std::move(next);
    if (it.d_l2 <= cfg.tol) {
      out.report.converged = true;
      break;
    }
    if (rises >= 2) throw PicardDivergence("Picard iteration stopped contracting at k=" + std::to_string(k), out.report);
  }
  out.report.res_final = nonlinear_residual(zk, eos);
  out.trajectory = std::move(zk);
  return out;
}

struct ConstraintSample {
  double t, l2_divb, max_bnu;
};

inline std::vector<ConstraintSample> constraint_monitor(const std::vector<Snapshot>& traj) {
  std::vector<ConstraintSample> out;
  for (const auto& s : traj) out.push_back({s.t, l2_norm(divergence(s.z.b)), max_normal_trace(s.z.b, 4)});
  return out;
}

}  // namespace cmhd
