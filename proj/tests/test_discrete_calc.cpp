#include <gtest/gtest.h>

#include <random>

#include <cmhd/discrete_calc.hpp>

#include "oracles.hpp"

using namespace cmhd;

namespace {
Grid square(int n) { return make_grid(DomainSpec::square(), n, n); }

double max_err(const ScalarField& a, const std::function<double(double, double)>& f, double rmin = -1) {
  const Grid& g = a.grid();
  double m = 0;
  for (int i = 0; i < g.n1(); ++i)
    for (int j = 0; j < g.n2(); ++j) {
      if (g.c1(i) < rmin) continue;
      const Vec2 x = g.cartesian(i, j);
      m = std::max(m, std::abs(a(i, j) - f(x(0), x(1))));
    }
  return m;
}
}  // namespace

TEST(Fornberg, CentredFirstAndSecond) {
  const auto w1 = fornberg(1, 0.0, {-1, 0, 1});
  EXPECT_NEAR(w1[0], -0.5, 1e-15);
  EXPECT_NEAR(w1[1], 0.0, 1e-15);
  EXPECT_NEAR(w1[2], 0.5, 1e-15);
  const auto w2 = fornberg(2, 0.0, {-1, 0, 1});
  EXPECT_NEAR(w2[0], 1.0, 1e-14);
  EXPECT_NEAR(w2[1], -2.0, 1e-14);
  const auto os = fornberg(1, 0.0, {0, 1, 2});
  EXPECT_NEAR(os[0], -1.5, 1e-14);
  EXPECT_NEAR(os[1], 2.0, 1e-14);
  EXPECT_NEAR(os[2], -0.5, 1e-14);
}

TEST(Deriv1D, SecondOrderForAllOrdersUpToSix) {
  for (int k = 1; k <= 6; ++k) {
    std::vector<double> err;
    for (int n : {32, 64, 128}) {
      const Grid g = square(n);
      const ScalarField f = ScalarField::sample(g, [](double x, double) { return std::sin(2 * x + 0.3); });
      const ScalarField d = deriv(f, 0, k);
      double m = 0;
      for (int i = 0; i < n; ++i) {
        const double ex = std::pow(2.0, k) * std::sin(2 * g.c1(i) + 0.3 + k * pi / 2);
        m = std::max(m, std::abs(d(i, 0) - ex));
      }
      err.push_back(m);
    }
    EXPECT_GE(oracle::order(err), 1.8) << "k=" << k;
  }
}

TEST(DiffOp, DivergenceOfConstantVanishes) {
  const Grid g = square(16);
  VectorField v(g);
  v.c1.fill(2.0);
  v.c2.fill(-1.0);
  EXPECT_LE(divergence(v).max_abs(), 1e-12);
}

TEST(DiffOp, CurlOfStreamField) {
  std::vector<double> err;
  for (int n : {32, 64, 128}) {
    const Grid g = square(n);
    VectorField u(ScalarField::sample(g, [](double x, double y) { return pi * std::sin(pi * x) * std::cos(pi * y); }),
                  ScalarField::sample(g, [](double x, double y) { return -pi * std::cos(pi * x) * std::sin(pi * y); }));
    err.push_back(max_err(curl2d(u), [](double x, double y) { return 2 * pi * pi * std::sin(pi * x) * std::sin(pi * y); }));
  }
  EXPECT_GE(oracle::order(err), 1.8);
}

TEST(DiffOp, SectorLaplacianOfHarmonic) {
  const double om = 2 * pi / 5, nu = pi / om;
  std::vector<double> err;
  for (int n : {32, 64, 128}) {
    const Grid g = make_grid(DomainSpec::sector(om), n, n);
    const ScalarField f = ScalarField::sample(g, [&](double r, double th) { return std::pow(r, nu) * std::cos(nu * th); });
    err.push_back(max_err(laplacian(f), [](double, double) { return 0.0; }, 0.25));
  }
  EXPECT_GE(oracle::order(err), 1.8);
}

TEST(DiffOp, SectorGradientMatchesCartesian) {
  const Grid g = make_grid(DomainSpec::sector(1.2), 64, 64);
  const ScalarField f = ScalarField::sample_xy(g, [](double x, double y) { return x * x * y + std::sin(y); });
  const VectorField gr = gradient(f);
  EXPECT_LE(max_err(gr.c1, [](double x, double y) { return 2 * x * y; }), 2e-3);
  EXPECT_LE(max_err(gr.c2, [](double x, double y) { return x * x + std::cos(y); }), 2e-3);
}

TEST(DiffOp, DivCurlAnnihilation) {
  std::vector<double> e1, e2;
  for (int n : {32, 64, 128}) {
    const Grid g = square(n);
    const ScalarField psi = ScalarField::sample(g, [](double x, double y) { return std::sin(2 * x) * std::exp(y) + x * y * y; });
    e1.push_back(divergence(perp_gradient(psi)).max_abs());
    e2.push_back(curl2d(gradient(psi)).max_abs());
  }
  // the tensor-product stencils commute, so both vanish to round-off
  for (double e : e1) EXPECT_LE(e, 1e-8);
  for (double e : e2) EXPECT_LE(e, 1e-8);
}

TEST(AnisoNorm, ConstantAndLinear) {
  const TangentialFrame w{1.0};
  EXPECT_NEAR(aniso_norm(ScalarField(square(16), 1.0), 2, w), 1.0, 1e-12);
  const double exact = std::sqrt(48.0 / 35.0);
  std::vector<double> err;
  for (int n : {32, 64, 128}) {
    const Grid g = square(n);
    const ScalarField f = ScalarField::sample(g, [](double x, double) { return x; });
    err.push_back(std::abs(aniso_norm(f, 2, w) - exact));
  }
  EXPECT_LE(err.back(), 1e-4);
  EXPECT_GE(oracle::order(err), 1.8);
  EXPECT_THROW(aniso_norm(ScalarField(square(8)), 7, w), PreconditionError);
  EXPECT_THROW(aniso_norm(ScalarField(make_grid(DomainSpec::sector(1.0), 8, 8)), 2, w), DomainError);
}

TEST(AnisoNorm, PolynomialExpansionMatchesRepeatedApplication) {
  // (w d)^2 f computed by composing discrete operators vs the expanded form.
  const Grid g = square(64);
  const TangentialFrame w{1.0};
  const ScalarField f = ScalarField::sample(g, [](double x, double y) { return std::cos(3 * x) * y; });
  const ScalarField direct = apply_tensor(f, Poly1dOp::mixed(0, 2, 1.0), Poly1dOp::identity());
  for (int i = 5; i < 60; i += 7) {
    const double x = g.c1(i), a = x * (1 - x), da = 1 - 2 * x;
    const double ex = a * (da * (-3 * std::sin(3 * x)) + a * (-9 * std::cos(3 * x))) * g.c2(3);
    EXPECT_NEAR(direct(i, 3), ex, 5e-3);
  }
  (void)w;
}

TEST(SobolevNorm, ClosedForms) {
  const Grid g16 = square(16);
  EXPECT_NEAR(sobolev_norm(ScalarField(g16, -3.0), 2), 3.0, 1e-12);
  const double exact = std::sqrt(0.25 + pi * pi / 2);
  std::vector<double> err;
  for (int n : {32, 64, 128}) {
    const ScalarField f = ScalarField::sample(square(n), [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
    err.push_back(std::abs(sobolev_norm(f, 1) - exact));
  }
  EXPECT_NEAR(exact, 2.27701, 1e-5);
  EXPECT_GE(oracle::order(err), 1.8);
  EXPECT_THROW(sobolev_norm(ScalarField(g16), 5), PreconditionError);
}

TEST(SobolevNorm, SingularGrowthOnSector) {
  // r^2.5: third derivatives ~ r^-0.5 are square integrable, fourth ~ r^-1.5 are not
  std::vector<double> v3, v4;
  for (int n : {32, 64, 128}) {
    const Grid g = make_grid(DomainSpec::sector(2 * pi / 5), n, n);
    const ScalarField f = ScalarField::sample(g, [](double r, double th) { return std::pow(r, 2.5) * std::cos(2.5 * th); });
    v3.push_back(sobolev_norm(f, 3));
    v4.push_back(sobolev_norm(f, 4));
  }
  EXPECT_LT(std::abs(std::log2(v3[2] / v3[1])), 0.1);
  EXPECT_NEAR(v4[2] / v4[1], std::sqrt(2.0), 0.15 * std::sqrt(2.0));
}

TEST(Energy, Examples) {
  const Grid g = square(16);
  const EosModel affine = EosModel::affine(1.0);  // R = 1 + p, Q = 1 + p
  BackgroundSlice Z = uniform_background(g, {0, 0}, {0, 0}, 0.0, 0.0);
  State z(g);
  EXPECT_EQ(energy_functional(z, Z, affine), 0.0);
  z.u.c1.fill(1.0);
  EXPECT_NEAR(energy_functional(z, Z, affine), 1.0, 1e-13);

  BackgroundSlice Zb = uniform_background(g, {0, 0}, {1, 0}, 1.0, 0.0);  // Q = 2
  State y(g);
  y.b.c1.fill(1.0);
  y.pvar.fill(1.0);
  EXPECT_NEAR(energy_functional(y, Zb, affine), 1.0, 1e-13);
}

TEST(Energy, Quadratic) {
  const Grid g = square(16);
  std::mt19937_64 rng(3);
  const EosModel eos = EosModel::ideal_gas(1.4);
  BackgroundSlice Z = uniform_background(g, {0, 0}, {0.3, -0.2}, 1.2, 0.1);
  State z(g);
  for (int k = 0; k < State::ncomp; ++k) z.comp(k) = ScalarField::sample(g, oracle::RandomTrig(rng));
  const double e1 = energy_functional(z, Z, eos);
  for (double lam : {0.0, 1.0, 2.0}) {
    State y = z;
    y *= lam;
    EXPECT_NEAR(energy_functional(y, Z, eos), lam * lam * e1, 1e-12 * e1);
  }
}

TEST(TangentialDecompose, Examples) {
  const Grid g = square(32);
  const TangentialFrame w = tangential_frame(g);
  VectorField U(ScalarField::sample(g, [](double x, double) { return x * (1 - x); }), ScalarField(g));
  auto [V1, V2] = tangential_decompose(U, w);
  EXPECT_NEAR(V1(3, 7), 1.0, 1e-14);
  EXPECT_EQ(V2.max_abs(), 0.0);
  auto [Z1, Z2] = tangential_decompose(VectorField(g), w);
  EXPECT_EQ(Z1.max_abs(), 0.0);
  VectorField bad(ScalarField::sample(g, [](double, double y) { return y; }), ScalarField(g));
  EXPECT_THROW(tangential_decompose(bad, w), PreconditionError);
}

TEST(TangentialDecompose, Reconstruction) {
  std::vector<double> err;
  for (int n : {32, 64, 128}) {
    const Grid g = square(n);
    const TangentialFrame w = tangential_frame(g);
    VectorField U(ScalarField::sample(g, [](double x, double y) { return std::sin(pi * x) * std::cos(y); }), ScalarField(g));
    auto [V1, V2] = tangential_decompose(U, w);
    const ScalarField f = ScalarField::sample(g, [](double x, double y) { return x * y; });
    ScalarField rec = V1 * w_derivative(f, w, 0) + V2 * w_derivative(f, w, 1);
    err.push_back(max_err(rec, [](double x, double y) { return std::sin(pi * x) * std::cos(y) * y; }));
  }
  // f is bilinear so the stencils are exact and only round-off remains
  for (double e : err) EXPECT_LE(e, 1e-12);
}

TEST(AnisoNorm, OrderingEquivalenceGridStable) {
  const TangentialFrame w{1.0};
  std::vector<double> ratio;
  for (int n : {32, 64, 128}) {
    const ScalarField f = ScalarField::sample(square(n), [](double x, double y) { return std::cos(2 * x + y) + x * x * y; });
    ratio.push_back(aniso_norm(f, 4, w, AnisoOrder::FullThenTangential) / aniso_norm(f, 4, w, AnisoOrder::TangentialThenFull));
  }
  for (double r : ratio) {
    EXPECT_GT(r, 0.2);
    EXPECT_LT(r, 5.0);
  }
  EXPECT_NEAR(ratio[2], ratio[1], 0.01 * ratio[1]);
}

TEST(AnisoNorm, EmbeddingChain) {
  std::mt19937_64 rng(2024);
  const TangentialFrame w{1.0};
  for (int m : {2, 4}) {
    const double C = aniso_embedding_constant(m, 1.0);
    for (int s = 0; s < 5; ++s) {
      oracle::RandomTrig f(rng);
      for (int n : {32, 64}) {
        const ScalarField F = ScalarField::sample(square(n), f);
        const double a = aniso_norm(F, m, w);
        EXPECT_LE(a, C * sobolev_norm(F, m) * (1 + 1e-12));
        EXPECT_GE(a * (1 + 1e-12), sobolev_norm(F, m / 2));
      }
    }
  }
}

TEST(NormReport, RatesOnlyWithThreeRefinements) {
  NormReport r;
  r.add("H2", 32, 1.0);
  r.add("H2", 64, 2.0);
  EXPECT_TRUE(r.series["H2"].rate.empty());
  r.add("H2", 128, 4.0);
  ASSERT_EQ(r.series["H2"].rate.size(), 2u);
  EXPECT_NEAR(r.series["H2"].rate[1], 1.0, 1e-14);
}
