#pragma once
// Command implementations for the cornermhd driver.

#include <atomic>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "config.hpp"
#include "discrete_calc.hpp"
#include "elliptic.hpp"
#include "io.hpp"
#include "manufactured.hpp"
#include "mhd_linear.hpp"
#include "mhd_nonlinear.hpp"
#include "singularity_lab.hpp"

namespace cmhd::cli {

enum ExitCode { kPass = 0, kAssertion = 1, kConfig = 2, kNumerical = 3 };

struct Check {
  std::string name;
  bool ok;
  std::string detail;
};

struct Outcome {
  std::vector<Check> checks;
  std::vector<std::string> files;
  std::vector<std::string> notes;

  void check(const std::string& name, bool ok, const std::string& detail) { checks.push_back({name, ok, detail}); }
  bool ok() const {
    for (const auto& c : checks)
      if (!c.ok) return false;
    return true;
  }
};

//! Runs f(0..n-1) on up to `jobs` threads; results keep index order. The first
//! failing index (lowest) determines the rethrown exception.
template <class T, class F>
std::vector<T> parallel_map(int jobs, std::size_t n, F&& f) {
  std::vector<std::optional<T>> out(n);
  std::vector<std::exception_ptr> err(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < n;) {
      try {
        out[k] = f(k);
      } catch (...) {
        err[k] = std::current_exception();
      }
    }
  };
  const int w = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int t = 1; t < w; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : err)
    if (e) std::rethrow_exception(e);
  std::vector<T> r;
  r.reserve(n);
  for (auto& o : out) r.push_back(std::move(*o));
  return r;
}

inline EosModel eos_of(const RunConfig& c, const std::string& model) {
  return model == "affine" ? EosModel::affine(c.num("eos.epsilon")) : EosModel::ideal_gas(c.num("eos.gamma"));
}

inline std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ";" : "") + std::to_string(v[k]);
  return s;
}

inline std::string fmt(double v) { return format_number(v); }

//! Grid list with at least three levels, halving from domain.n when none are given.
inline std::vector<int> study_grids(const RunConfig& c) {
  std::vector<int> g = c.grids();
  if (g.size() >= 3) return g;
  const int n = c.integer("domain.n");
  if (n < 32) throw ConfigError(0, "refinement study needs domain.n >= 32 or an explicit domain.refinements list");
  return {n / 4, n / 2, n};
}

inline double pair_order(const std::vector<double>& e) {
  if (e.size() < 2 || !(e.back() > 0)) return std::nan("");
  return std::log2(e[e.size() - 2] / e.back());
}

inline std::vector<Cell> order_cell(const std::vector<double>& e, std::size_t k) {
  if (k == 0 || !(e[k] > 0)) return {std::string()};
  return {std::log2(e[k - 1] / e[k])};
}

// ---------------------------------------------------------------------------
// check-symmetrizer

inline Outcome cmd_check_symmetrizer(const RunConfig& c, const ReportSink& out) {
  std::vector<std::string> models = {c.str("eos.model")};
  if (models[0] == "both") models = {"ideal_gas", "affine"};
  const int count = c.integer("data.count");
  struct Draw {
    std::string model;
    Vec2 U, B;
    double P, S;
    Vec6 z;
    int edge;
  };
  std::mt19937_64 rng(c.seed());
  std::uniform_real_distribution<double> box(-1, 1), press(0.5, 2.0);
  std::vector<Draw> draws;
  for (const auto& m : models)
    for (int k = 0; k < count; ++k) {
      Draw d;
      d.model = m;
      d.U = {box(rng), box(rng)};
      d.B = {box(rng), box(rng)};
      d.P = press(rng);
      d.S = box(rng);
      for (int q = 0; q < 6; ++q) d.z(q) = box(rng);
      d.edge = k % 4;
      draws.push_back(d);
    }
  struct Row {
    double R, Q, d1, d2, lmin, bd;
  };
  const std::array<Vec2, 4> normals = {Vec2(-1, 0), Vec2(1, 0), Vec2(0, -1), Vec2(0, 1)};
  const auto rows = parallel_map<Row>(c.integer("run.jobs"), draws.size(), [&](std::size_t k) {
    const Draw& d = draws[k];
    const EosValues e = eos_of(c, d.model)(d.P, d.S);
    const CoeffBundle cb = assemble_coeffs(d.U, d.B, e.R, e.Q);
    const Mat6 M1 = cb.S0 * cb.A1, M2 = cb.S0 * cb.A2;
    Row r{e.R, e.Q, (M1 - M1.transpose()).cwiseAbs().maxCoeff(), (M2 - M2.transpose()).cwiseAbs().maxCoeff(), 0, 0};
    r.lmin = Eigen::SelfAdjointEigenSolver<Mat6>(cb.S0A0).eigenvalues().minCoeff();
    const Vec2 nu = normals[d.edge];
    const Vec2 Ut = d.U - d.U.dot(nu) * nu, Bt = d.B - d.B.dot(nu) * nu;
    const CoeffBundle ct = assemble_coeffs(Ut, Bt, e.R, e.Q);
    r.bd = std::abs(boundary_quadratic(d.z, ct, nu) - 2 * d.z(4) * (d.z(0) * nu(0) + d.z(1) * nu(1)));
    return r;
  });
  CsvTable t({"index", "eos", "U1", "U2", "B1", "B2", "P", "S", "R", "Q", "defect_A1", "defect_A2", "lambda_min", "boundary_defect"});
  double d1 = 0, d2 = 0, lmin = 1e300, bd = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Draw& d = draws[k];
    const Row& r = rows[k];
    t.add({static_cast<long long>(k), d.model, d.U(0), d.U(1), d.B(0), d.B(1), d.P, d.S, r.R, r.Q, r.d1, r.d2, r.lmin, r.bd});
    d1 = std::max(d1, r.d1);
    d2 = std::max(d2, r.d2);
    lmin = std::min(lmin, r.lmin);
    bd = std::max(bd, r.bd);
  }
  out.write("symmetrizer.csv", t);
  Outcome o;
  o.files.push_back("symmetrizer.csv");
  const double tol = c.num("assert.symmetry_tol");
  o.check("symmetry defect of S0 A1, S0 A2", std::max(d1, d2) <= tol, "max " + fmt(std::max(d1, d2)) + " <= " + fmt(tol));
  o.check("positivity of S0 A0", lmin > 0, "min eigenvalue " + fmt(lmin));
  o.check("boundary identity", bd <= c.num("assert.boundary_tol"), "max defect " + fmt(bd));
  return o;
}

// ---------------------------------------------------------------------------
// run-linear

inline Outcome cmd_run_linear(const RunConfig& c, const ReportSink& out) {
  const std::string gen = c.str("data.generator");
  const EosModel eos = eos_of(c, c.str("eos.model"));
  ManufacturedProblem m;
  if (gen == "manufactured") m = default_manufactured(c.num("data.amplitude"));
  else if (gen == "standing-wave") m = standing_wave(eos);
  else m = random_smooth(c.seed(), c.num("data.amplitude"), c.integer("data.modes"));
  m.eos = eos;
  const bool exact = gen != "random-smooth";
  const bool forced = gen == "manufactured";
  const double T = c.num("time.T");
  const std::vector<int> grids = c.grids();

  struct Result {
    LinearRun run;
    double error;
  };
  const auto res = parallel_map<Result>(c.integer("run.jobs"), grids.size(), [&](std::size_t k) {
    const Grid g = make_grid(DomainSpec::square(), grids[k], grids[k]);
    cmhd::RunConfig rc;
    rc.cfl = c.num("time.cfl");
    rc.dissipation = c.num("time.dissipation");
    rc.output_every = c.integer("time.output_every");
    const LinearRun run = run_linear(m.exact(g, 0.0), m.background(g), forced ? m.source(g) : SourceTerm{}, eos, T, rc);
    const double err = exact ? l2_norm(run.final_state - m.exact(g, T)) : std::nan("");
    return Result{run, err};
  });

  Outcome o;
  std::vector<double> errs;
  CsvTable conv({"grid_n", "steps", "dt", "error", "order"});
  for (std::size_t k = 0; k < grids.size(); ++k) {
    const auto& d = res[k].run.diagnostics;
    CsvTable t({"t", "energy", "max_bnu", "max_unu", "l2_divb", "res_divb", "res_curl1", "res_curl2"});
    for (const auto& r : d.rows) t.add({r.t, r.energy, r.max_bnu, r.max_unu, r.l2_divb, r.res_divb, r.res_curl1, r.res_curl2});
    const std::string name = "diagnostics_n" + std::to_string(grids[k]) + ".csv";
    out.write(name, t);
    o.files.push_back(name);
    const std::string field = "pvar_n" + std::to_string(grids[k]) + ".txt";
    out.write_field(field, res[k].run.final_state.pvar, T);
    o.files.push_back(field);
    for (const auto& w : d.warnings) o.notes.push_back("n=" + std::to_string(grids[k]) + ": " + w);
    errs.push_back(res[k].error);
    std::vector<Cell> row = {static_cast<long long>(grids[k]), static_cast<long long>(d.steps), d.dt, res[k].error};
    const auto oc = order_cell(errs, k);
    row.insert(row.end(), oc.begin(), oc.end());
    conv.add(row);
    if (!forced && c.num("time.dissipation") > 0) {
      bool mono = true;
      for (std::size_t q = 1; q < d.rows.size(); ++q) mono = mono && d.rows[q].energy <= d.rows[q - 1].energy * (1 + 1e-12);
      o.check("energy non-increasing (n=" + std::to_string(grids[k]) + ")", mono,
              "E(0)=" + fmt(d.rows.front().energy) + " E(T)=" + fmt(d.rows.back().energy));
    }
  }
  out.write("convergence.csv", conv);
  o.files.push_back("convergence.csv");
  if (exact && grids.size() >= 2) {
    const double p = pair_order(errs);
    o.check("L2 convergence order", p >= c.num("assert.min_order"), "order " + fmt(p) + " on grids " + join(grids));
  }
  return o;
}

// ---------------------------------------------------------------------------
// run-picard

inline State picard_data(const RunConfig& c, const Grid& g) {
  const std::string gen = c.str("data.generator");
  const double a = c.num("data.amplitude");
  if (gen == "constant") {
    State z(g, PressureKind::Physical);
    z.pvar.fill(1.0 + a);
    z.s.fill(a);
    return z;
  }
  State z = small_smooth_data(g, a);
  if (gen == "incompatible")
    for (int i = -kGhost; i < g.n1() + kGhost; ++i)
      for (int j = -kGhost; j < g.n2() + kGhost; ++j) z.u.c1(i, j) += a;
  return z;
}

inline Outcome cmd_run_picard(const RunConfig& c, const ReportSink& out) {
  const EosModel eos = eos_of(c, c.str("eos.model"));
  const double T = c.num("time.T");
  PicardConfig pc;
  pc.tol = c.num("picard.tol");
  pc.kmax = c.integer("picard.kmax");
  pc.delta = c.num("picard.delta_margin");
  pc.run.cfl = c.num("time.cfl");
  pc.run.dissipation = c.num("time.dissipation");
  const std::vector<int> grids = c.grids();

  struct Result {
    PicardReport report;
    std::vector<ConstraintSample> constraints;
    std::string failure;
  };
  Outcome o;
  auto write_report = [&](int n, const PicardReport& r) {
    CsvTable t({"k", "d_L2", "d_H1", "ratio", "res_final"});
    for (std::size_t q = 0; q < r.iterates.size(); ++q) {
      const auto& it = r.iterates[q];
      t.add({static_cast<long long>(it.k), it.d_l2, it.d_h1, std::isnan(it.ratio) ? Cell(std::string()) : Cell(it.ratio),
             q + 1 == r.iterates.size() && !std::isnan(r.res_final) ? Cell(r.res_final) : Cell(std::string())});
    }
    const std::string name = "picard_n" + std::to_string(n) + ".csv";
    out.write(name, t);
    o.files.push_back(name);
  };
  const auto res = parallel_map<Result>(c.integer("run.jobs"), grids.size(), [&](std::size_t k) {
    const Grid g = make_grid(DomainSpec::square(), grids[k], grids[k]);
    try {
      PicardResult r = picard_solve(picard_data(c, g), eos, T, pc);
      return Result{r.report, constraint_monitor(r.trajectory), ""};
    } catch (const PicardDivergence& e) {
      return Result{e.report, {}, e.what()};
    }
  });

  std::vector<double> divb, bnu;
  for (std::size_t k = 0; k < grids.size(); ++k) {
    const Result& r = res[k];
    write_report(grids[k], r.report);
    if (!r.failure.empty()) throw DivergenceError(r.failure + " (n=" + std::to_string(grids[k]) + ")");
    CsvTable t({"t", "l2_divb", "max_bnu"});
    double md = 0, mb = 0;
    for (const auto& s : r.constraints) {
      t.add({s.t, s.l2_divb, s.max_bnu});
      md = std::max(md, s.l2_divb);
      mb = std::max(mb, s.max_bnu);
    }
    divb.push_back(md);
    bnu.push_back(mb);
    const std::string name = "constraints_n" + std::to_string(grids[k]) + ".csv";
    out.write(name, t);
    o.files.push_back(name);

    const std::string tag = " (n=" + std::to_string(grids[k]) + ")";
    const auto& its = r.report.iterates;
    if (c.str("data.generator") == "constant") {
      o.check("constant state is a fixed point" + tag, !its.empty() && its.front().d_l2 == 0.0, "d_1 = " + fmt(its.front().d_l2));
      continue;
    }
    o.check("converged" + tag, r.report.converged,
            "d_L2 = " + fmt(its.back().d_l2) + " after " + std::to_string(its.size()) + " iterates, res_final " + fmt(r.report.res_final));
    double worst = 0;
    for (std::size_t q = 1; q < its.size(); ++q)
      if (its[q - 1].d_l2 > 0 && its[q].d_l2 > pc.tol) worst = std::max(worst, its[q].ratio);
    o.check("contraction ratio" + tag, worst < c.num("assert.max_ratio"), "max ratio " + fmt(worst));
  }
  if (grids.size() >= 2 && c.str("data.generator") != "constant") {
    const double p = pair_order(divb);
    o.check("constraint monitor order", p >= c.num("assert.min_order") || divb.back() <= 1e-10,
            "sup_t ||div b|| order " + fmt(p) + ", sup_t max|b.nu| " + fmt(bnu.back()));
  }
  return o;
}

// ---------------------------------------------------------------------------
// elliptic-suite

inline Outcome cmd_elliptic_suite(const RunConfig& c, const ReportSink& out) {
  const bool sector = c.str("domain.kind") == "sector";
  const double om = c.num("domain.omega"), r0 = c.num("domain.r0");
  const DomainSpec dom = sector ? DomainSpec::sector(om, r0) : DomainSpec::square();
  const std::vector<int> grids = study_grids(c);
  const int s = c.integer("hodge.s");
  const int nfields = c.integer("hodge.fields");
  const double min_order = c.num("assert.min_order");

  auto max_diff = [](const ScalarField& a, const ScalarField& b) {
    double m = 0;
    for (int i = 0; i < a.n1(); ++i)
      for (int j = 0; j < a.n2(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
    return m;
  };
  auto stream = [](const Grid& g) {
    return VectorField(ScalarField::sample(g, [](double x, double y) { return pi * std::sin(pi * x) * std::cos(pi * y); }),
                       ScalarField::sample(g, [](double x, double y) { return -pi * std::cos(pi * x) * std::sin(pi * y); }));
  };

  struct Level {
    std::map<std::string, double> v;
  };
  const auto levels = parallel_map<Level>(c.integer("run.jobs"), grids.size(), [&](std::size_t k) {
    const int n = grids[k];
    const Grid g = make_grid(dom, n, n);
    Level L;
    if (!sector) {
      const PoissonSolution d = poisson_dirichlet(
          ScalarField::sample(g, [](double x, double y) { return -2 * pi * pi * std::sin(pi * x) * std::sin(pi * y); }));
      L.v["poisson_dirichlet.error"] =
          max_diff(d.potential, ScalarField::sample(g, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); }));
      const PoissonSolution nm = poisson_neumann(ScalarField::sample(g, [](double x, double) { return -std::cos(pi * x); }));
      L.v["poisson_neumann.error"] = max_diff(nm.potential, ScalarField::sample(g, [](double x, double) { return std::cos(pi * x) / (pi * pi); }));
      const VectorField gxy(ScalarField::sample(g, [](double, double y) { return y; }), ScalarField::sample(g, [](double x, double) { return x; }));
      const HelmholtzParts h = helmholtz_decompose(gxy + stream(g));
      L.v["helmholtz.div_g"] = l2_norm(face_divergence(g, h.gx, h.gy));
      L.v["helmholtz.error"] = l2_norm(h.g - stream(g));
      const VectorField gf = gradient(h.f);
      L.v["helmholtz.roundtrip"] = l2_norm(gxy + stream(g) - gf - h.g);
      const ScalarField dv = ScalarField::sample(g, [](double x, double y) { return -5 * pi * pi * std::cos(pi * x) * std::cos(2 * pi * y); });
      const ScalarField cv = ScalarField::sample(g, [](double x, double y) { return 2 * pi * pi * std::sin(pi * x) * std::sin(pi * y); });
      const VectorField u0 = stream(g) +
          VectorField(ScalarField::sample(g, [](double x, double y) { return -pi * std::sin(pi * x) * std::cos(2 * pi * y); }),
                      ScalarField::sample(g, [](double x, double y) { return -2 * pi * std::cos(pi * x) * std::sin(2 * pi * y); }));
      const VectorField u = div_curl_solve(dv, cv);
      L.v["div_curl.error"] = std::max(max_diff(u.c1, u0.c1), max_diff(u.c2, u0.c2));
    } else {
      const double nu = pi / om;
      const ScalarField f = ScalarField::sample(g, [&](double r, double th) { return -(4 * nu + 4) * std::pow(r, nu) * std::sin(nu * th); });
      const ScalarField ex =
          ScalarField::sample(g, [&](double r, double th) { return (r0 * r0 - r * r) * std::pow(r, nu) * std::sin(nu * th); });
      L.v["poisson_dirichlet.error"] = max_diff(poisson_dirichlet(f).potential, ex);
      if (om > pi / s) L.v["hodge.singular"] = hodge_ratio(hodge_singular_probe(g), s);
    }
    std::mt19937_64 rng(c.seed());
    double hmax = 0;
    for (int q = 0; q < nfields; ++q) hmax = std::max(hmax, hodge_ratio(random_tangential_field(g, rng), s));
    L.v["hodge.random_max"] = hmax;
    return L;
  });

  CsvTable t({"test", "grid_n", "value", "order"});
  std::map<std::string, std::vector<double>> series;
  for (const auto& [name, _] : levels.front().v)
    for (std::size_t k = 0; k < grids.size(); ++k) {
      series[name].push_back(levels[k].v.at(name));
      std::vector<Cell> row = {name, static_cast<long long>(grids[k]), levels[k].v.at(name)};
      const auto oc = order_cell(series[name], k);
      row.insert(row.end(), oc.begin(), oc.end());
      t.add(row);
    }
  out.write("elliptic.csv", t);
  Outcome o;
  o.files.push_back("elliptic.csv");
  auto order_check = [&](const std::string& name) {
    if (!series.count(name)) return;
    const auto& e = series[name];
    const double p = pair_order(e);
    o.check(name + " order", p >= min_order || e.back() <= 1e-10, "order " + fmt(p) + ", finest " + fmt(e.back()));
  };
  for (const char* n : {"poisson_dirichlet.error", "poisson_neumann.error", "helmholtz.error", "helmholtz.roundtrip", "div_curl.error"})
    order_check(n);
  if (series.count("helmholtz.div_g")) {
    double m = 0;
    for (double x : series["helmholtz.div_g"]) m = std::max(m, x);
    o.check("helmholtz discrete div g", m <= 1e-8, "max " + fmt(m));
  }
  const auto& hr = series["hodge.random_max"];
  double hm = 0;
  for (double x : hr) hm = std::max(hm, x);
  o.check("hodge ratio bounded under refinement", hm <= 1.1 * hr.front(),
          std::to_string(nfields) + " fields, max ratio per grid " + fmt(hr.front()) + " .. " + fmt(hr.back()));
  if (series.count("hodge.singular")) {
    const auto& e = series["hodge.singular"];
    bool inc = true;
    for (std::size_t k = 1; k < e.size(); ++k) inc = inc && e[k] > e[k - 1];
    o.check("hodge singular probe grows", inc, "ratios " + fmt(e.front()) + " .. " + fmt(e.back()));
  }
  return o;
}

// ---------------------------------------------------------------------------
// singularity-scan

inline CounterexampleSpec counterexample_of(const RunConfig& c) {
  const std::string k = c.str("singularity.case");
  if (k == "A") return CounterexampleSpec::case_a(c.integer("singularity.n"));
  if (k == "B") return CounterexampleSpec::case_b();
  return CounterexampleSpec::case_c(c.num("domain.omega"));
}

inline Outcome cmd_singularity_scan(const RunConfig& c, const ReportSink& out) {
  const CounterexampleSpec sp = counterexample_of(c);
  const std::string mode = c.str("singularity.mode");
  const double r0 = c.num("domain.r0"), T = c.num("time.T");
  const double predicted = pi / sp.omega - 1;
  AcousticConfig ac;
  ac.cfl = c.num("time.cfl");
  ac.dissipation = c.num("time.dissipation");
  auto n_theta = [&](int n, double fallback) {
    const double r = c.num("domain.theta_ratio") > 0 ? c.num("domain.theta_ratio") : fallback;
    return std::max(4, static_cast<int>(std::lround(n * r)));
  };
  Outcome o;
  if (mode == "scan") {
    const std::vector<int> grids = study_grids(c);
    const int s = c.integer("singularity.s");
    const ScanResult r = norm_divergence_scan(sp, s, grids, r0, c.num("singularity.threshold"));
    const auto& ser = r.report.series.at("u");
    CsvTable t({"omega", "case", "s", "grid_n", "norm", "rate", "verdict"});
    for (std::size_t k = 0; k < ser.value.size(); ++k)
      t.add({sp.omega, case_name(sp.kind), static_cast<long long>(s), static_cast<long long>(ser.grid_n[k]), ser.value[k],
             k == 0 || ser.rate.empty() ? Cell(std::string()) : Cell(ser.rate[k - 1]), r.verdict()});
    out.write("scan.csv", t);
    o.files.push_back("scan.csv");
    o.notes.push_back("verdict " + r.verdict() + ", rate " + fmt(r.rate) + ", growth " + fmt(r.growth));
    const std::string expect = c.str("singularity.expect");
    if (expect != "none") o.check("scan verdict", r.verdict() == expect, "expected " + expect + ", got " + r.verdict());
  } else if (mode == "exponent") {
    const int n = c.grids().back();
    const Grid g = make_grid(DomainSpec::sector(sp.omega, r0), n, n_theta(n, 0.125));
    const AcousticRun run = acoustic_sector_run(sp, T, g, ac);
    const ScalarField um = magnitude(VectorField(run.final_state.ur, run.final_state.ut, Basis::Polar));
    const double rl = c.num("singularity.r_lo") * r0, rh = c.num("singularity.r_hi") * r0;
    const ExponentFit f = fit_singular_exponent(um, 0.5 * sp.omega, rl, rh);
    CsvTable t({"omega", "t", "r_lo", "r_hi", "exponent", "stderr", "predicted"});
    t.add({sp.omega, T, f.r_lo, f.r_hi, f.exponent, f.stderr_, predicted});
    out.write("exponent.csv", t);
    out.write_field("speed.txt", um, T);
    o.files.push_back("exponent.csv");
    o.files.push_back("speed.txt");
    const double rel = std::abs(f.exponent - predicted) / predicted;
    if (sp.kind == CounterexampleCase::C)
      o.check("fitted exponent", rel <= c.num("assert.exponent_tol"),
              "exponent " + fmt(f.exponent) + " vs " + fmt(predicted) + " (relative " + fmt(rel) + ")");
    else
      o.notes.push_back("case " + case_name(sp.kind) + " carries a logarithm; fitted " + fmt(f.exponent) + ", power " + fmt(predicted));
  } else {
    const std::vector<int> grids = c.grids().size() >= 2 ? c.grids() : study_grids(c);
    const double rl = c.num("singularity.r_lo") * r0, rh = c.num("singularity.r_hi") * r0;
    const auto errs = parallel_map<double>(c.integer("run.jobs"), grids.size(), [&](std::size_t k) {
      const Grid g = make_grid(DomainSpec::sector(sp.omega, r0), grids[k], n_theta(grids[k], 0.5));
      return annulus_relative_error(acoustic_sector_run(sp, T, g, ac).final_state, sp, T, rl, rh);
    });
    CsvTable t({"omega", "case", "grid_n", "error", "order"});
    for (std::size_t k = 0; k < grids.size(); ++k) {
      std::vector<Cell> row = {sp.omega, case_name(sp.kind), static_cast<long long>(grids[k]), errs[k]};
      const auto oc = order_cell(errs, k);
      row.insert(row.end(), oc.begin(), oc.end());
      t.add(row);
    }
    out.write("acoustic.csv", t);
    o.files.push_back("acoustic.csv");
    const double p = pair_order(errs);
    o.check("annulus convergence order", p >= c.num("assert.min_order"), "order " + fmt(p));
  }
  return o;
}

// ---------------------------------------------------------------------------
// norm-study

inline Outcome cmd_norm_study(const RunConfig& c, const ReportSink& out) {
  const std::vector<int> grids = study_grids(c);
  const int m = c.integer("norm.m");
  const std::string field = c.str("norm.field");
  const TangentialFrame w{1.0};
  using Fn = std::function<double(double, double)>;
  std::vector<std::pair<std::string, Fn>> fields;
  if (field == "x1") fields.push_back({"x1", [](double x, double) { return x; }});
  else if (field == "sin") fields.push_back({"sin", [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); }});
  else {
    std::mt19937_64 rng(c.seed());
    std::uniform_real_distribution<double> A(-1, 1), K(0.5, 3.0), P(0, 2 * pi);
    for (int q = 0; q < c.integer("norm.fields"); ++q) {
      std::vector<std::array<double, 5>> modes(4);
      for (auto& md : modes) md = {A(rng), K(rng), K(rng), P(rng), P(rng)};
      fields.push_back({"field" + std::to_string(q), [modes](double x, double y) {
                          double s = 0;
                          for (const auto& md : modes) s += md[0] * std::cos(md[1] * x + md[3]) * std::cos(md[2] * y + md[4]);
                          return s;
                        }});
    }
  }
  struct Vals {
    double aniso, alt, full, half;
  };
  const std::size_t nf = fields.size();
  const auto vals = parallel_map<Vals>(c.integer("run.jobs"), nf * grids.size(), [&](std::size_t idx) {
    const std::size_t q = idx / grids.size(), k = idx % grids.size();
    const Grid g = make_grid(DomainSpec::square(), grids[k], grids[k]);
    const ScalarField f = ScalarField::sample(g, fields[q].second);
    return Vals{aniso_norm(f, m, w), aniso_norm(f, m, w, AnisoOrder::TangentialThenFull), sobolev_norm(f, m), sobolev_norm(f, m / 2)};
  });

  NormReport rep;
  for (std::size_t q = 0; q < nf; ++q)
    for (std::size_t k = 0; k < grids.size(); ++k) {
      const Vals& v = vals[q * grids.size() + k];
      const std::string& l = fields[q].first;
      rep.add(l + ".aniso", grids[k], v.aniso);
      rep.add(l + ".aniso_alt", grids[k], v.alt);
      rep.add(l + ".H" + std::to_string(m), grids[k], v.full);
      rep.add(l + ".H" + std::to_string(m / 2), grids[k], v.half);
    }
  CsvTable t({"label", "grid_n", "value"});
  for (const auto& [label, s] : rep.series) {
    for (std::size_t k = 0; k < s.value.size(); ++k) t.add({label, static_cast<long long>(s.grid_n[k]), s.value[k]});
    for (std::size_t k = 0; k < s.rate.size(); ++k) t.add({label + ".rate", static_cast<long long>(s.grid_n[k + 1]), s.rate[k]});
  }
  out.write("norm.csv", t);
  Outcome o;
  o.files.push_back("norm.csv");

  const double C = aniso_embedding_constant(m, 1.0);
  bool chain = true;
  double worst_drift = 0;
  for (std::size_t q = 0; q < nf; ++q) {
    for (std::size_t k = 0; k < grids.size(); ++k) {
      const Vals& v = vals[q * grids.size() + k];
      chain = chain && v.half <= v.aniso * (1 + 1e-12) && v.aniso <= C * v.full * (1 + 1e-12);
    }
    const Vals& a = vals[q * grids.size() + grids.size() - 2];
    const Vals& b = vals[q * grids.size() + grids.size() - 1];
    if (a.alt > 0 && b.alt > 0) worst_drift = std::max(worst_drift, std::abs(b.aniso / b.alt - a.aniso / a.alt) / (a.aniso / a.alt));
  }
  o.check("embedding chain H^m/2 <= H^m_* <= C H^m", chain, "C = " + fmt(C));
  o.check("ordering-equivalence ratio grid-stable", worst_drift <= 0.02, "max relative drift " + fmt(worst_drift));
  if (field == "x1" && m == 2) {
    std::vector<double> e;
    for (std::size_t k = 0; k < grids.size(); ++k) e.push_back(std::abs(vals[k].aniso - std::sqrt(48.0 / 35.0)));
    const double p = pair_order(e);
    o.check("aniso norm of x1 at m=2", p >= c.num("assert.min_order") || e.back() <= 1e-12,
            "error " + fmt(e.back()) + ", order " + fmt(p));
  }
  return o;
}

// ---------------------------------------------------------------------------
// Driver

inline std::string grid_description(const RunConfig& c) {
  std::ostringstream g;
  const bool sector = c.command == "singularity-scan" || (c.has("domain.kind") && c.str("domain.kind") == "sector");
  if (c.command == "check-symmetrizer") return "none (pointwise states)";
  g << (sector ? "sector" : "square");
  if (sector) g << " omega=" << fmt(c.num("domain.omega")) << " r0=" << fmt(c.num("domain.r0"));
  const auto grids = c.grids();
  g << " n=" << join(grids);
  return g.str();
}

inline Outcome execute(const RunConfig& c, const ReportSink& sink) {
  sink.write_echo(c);
  Outcome o;
  if (c.command == "check-symmetrizer") o = cmd_check_symmetrizer(c, sink);
  else if (c.command == "run-linear") o = cmd_run_linear(c, sink);
  else if (c.command == "run-picard") o = cmd_run_picard(c, sink);
  else if (c.command == "elliptic-suite") o = cmd_elliptic_suite(c, sink);
  else if (c.command == "singularity-scan") o = cmd_singularity_scan(c, sink);
  else o = cmd_norm_study(c, sink);
  o.files.insert(o.files.begin(), "run.echo.cfg");
  return o;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError(0, "cannot read config file '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

//! Exit code and message category for an exception escaping a command.
inline std::pair<int, std::string> classify(std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const ConfigError& e) {
    return {kConfig, std::string("config error: ") + e.what()};
  } catch (const PreconditionError& e) {
    return {kAssertion, std::string("precondition failed: ") + e.what()};
  } catch (const DomainError& e) {
    return {kConfig, std::string("config error: ") + e.what()};
  } catch (const SolverFailure& e) {
    return {kNumerical, std::string("numerical failure: ") + e.what() + " after " + std::to_string(e.residual_history.size()) + " iterations"};
  } catch (const std::exception& e) {
    return {kNumerical, std::string("numerical failure: ") + e.what()};
  } catch (...) {
    return {kNumerical, "numerical failure: unknown error"};
  }
}

//! Parse, execute and report; returns the process exit code.
inline int run(const std::string& command, const std::string& config_path, const Overrides& ov, std::ostream& log, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_config(read_file(config_path), command, ov);
  } catch (const ConfigError& e) {
    err << "config error: " << config_path << ": " << e.what() << "\n";
    return kConfig;
  }
  try {
    const ReportSink sink(cfg, grid_description(cfg));
    const Outcome o = execute(cfg, sink);
    log << command << " config_hash=" << sink.config_hash() << "\n";
    for (const auto& n : o.notes) log << "note: " << n << "\n";
    for (const auto& c : o.checks) log << (c.ok ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    for (const auto& f : o.files) log << "wrote " << sink.path(f).string() << "\n";
    return o.ok() ? kPass : kAssertion;
  } catch (...) {
    const auto [code, msg] = classify(std::current_exception());
    err << msg << "\n";
    return code;
  }
}

}  // namespace cmhd::cli
