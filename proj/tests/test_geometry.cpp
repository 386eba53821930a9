#include <gtest/gtest.h>

#include <random>

#include <cmhd/geometry.hpp>

#include "oracles.hpp"

using namespace cmhd;

TEST(Grid, SquareCellCentres) {
  const Grid g = make_grid(DomainSpec::square(), 4, 4);
  for (int i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(g.c1(i), 0.125 + 0.25 * i);
    EXPECT_DOUBLE_EQ(g.c2(i), 0.125 + 0.25 * i);
  }
  EXPECT_DOUBLE_EQ(g.area(), 1.0);
}

TEST(Grid, SectorAngles) {
  const Grid g = make_grid(DomainSpec::sector(pi / 2, 1.0), 4, 4);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(g.c2(j), pi / 16 * (1 + 2 * j), 1e-15);
  EXPECT_DOUBLE_EQ(g.c1(0), 0.125);
}

TEST(Grid, Rejections) {
  EXPECT_THROW(make_grid(DomainSpec::sector(3.5), 8, 8), DomainError);
  EXPECT_THROW(make_grid(DomainSpec::sector(0.0), 8, 8), DomainError);
  EXPECT_THROW(make_grid(DomainSpec::square(-1.0), 8, 8), DomainError);
  EXPECT_THROW(make_grid(DomainSpec::square(), 3, 8), DomainError);
  EXPECT_THROW(make_grid(DomainSpec::square(), 8, 0), DomainError);
}

TEST(BoundaryNormal, SquareAndSector) {
  const Grid sq = make_grid(DomainSpec::square(), 8, 8);
  EXPECT_EQ(boundary_normal(sq, Face::X1Lo, 3), Vec2(-1, 0));
  EXPECT_EQ(boundary_normal(sq, Face::X2Hi, 0), Vec2(0, 1));
  EXPECT_THROW(boundary_normal(sq, Face::Arc, 0), DomainError);

  const Grid se = make_grid(DomainSpec::sector(2 * pi / 5), 8, 8);
  EXPECT_EQ(boundary_normal(se, Face::LegLo, 2), Vec2(0, -1));
  const double th = se.c2(5);
  const Vec2 nu = boundary_normal(se, Face::Arc, 5);
  EXPECT_NEAR(nu(0), std::cos(th), 1e-15);
  EXPECT_NEAR(nu(1), std::sin(th), 1e-15);
  for (Face f : faces(se))
    for (int k = 0; k < face_size(se, f); ++k) EXPECT_NEAR(boundary_normal(se, f, k).norm(), 1.0, 1e-15);
  // The upper leg normal is orthogonal to the leg direction and points away from the interior.
  const Vec2 up = boundary_normal(se, Face::LegHi, 0);
  EXPECT_NEAR(up.dot(Vec2(std::cos(2 * pi / 5), std::sin(2 * pi / 5))), 0.0, 1e-15);
  EXPECT_LT(up.dot(Vec2(1, 0)), 0.0);
  EXPECT_THROW(boundary_normal(se, Face::X1Lo, 0), DomainError);
}

TEST(TangentialFrame, Values) {
  const Grid g = make_grid(DomainSpec::square(), 8, 8);
  const TangentialFrame w = tangential_frame(g);
  EXPECT_EQ(w.w1({0.5, 0.5}), Vec2(0.25, 0));
  EXPECT_EQ(w.w2({0.5, 0.5}), Vec2(0, 0.25));
  // tangent on every edge
  for (Face f : faces(g))
    for (int k = 0; k < face_size(g, f); ++k) {
      const Vec2 x = face_point(g, f, k), nu = boundary_normal(g, f, k);
      EXPECT_EQ(w.w1(x).dot(nu), 0.0);
      EXPECT_EQ(w.w2(x).dot(nu), 0.0);
    }
  // near the corner w1 ~ (x1, 0)
  EXPECT_NEAR(w.w1({1e-4, 0.3})(0) / 1e-4, 1.0, 1e-3);
  EXPECT_THROW(tangential_frame(make_grid(DomainSpec::sector(1.0), 8, 8)), DomainError);
}

TEST(TangentialFrame, NormalTraceShrinksLinearly) {
  double prev = 0;
  for (int n : {16, 32, 64}) {
    const Grid g = make_grid(DomainSpec::square(), n, n);
    const double v = std::abs(tangential_frame(g).w1({g.c1(0), 0.5}).dot(Vec2(-1, 0)));
    if (prev > 0) {
      EXPECT_NEAR(std::log2(prev / v), 1.0, 0.05);
    }
    prev = v;
  }
}

TEST(HMatrices, FlatLegsVanish) {
  const HMatrices h = h_matrices(square_corner_phi(), {0.3, 0.2});
  EXPECT_EQ(h.h1, Mat2::Zero());
  EXPECT_EQ(h.h2, Mat2::Zero());
  const HMatrices hs = h_matrices(sector_phi(1.0), {0.3, 0.2});
  EXPECT_EQ(hs.h1, Mat2::Zero());
  EXPECT_EQ(hs.h2, Mat2::Zero());
}

TEST(HMatrices, ParabolicLeg) {
  // Phi1 = x1 + x2^2, Phi2 = x2
  const oracle::PhiParams p{1.0, 0.0, 0.0, 0.0, 0.0};
  const PhiPair phi = oracle::make_phi(p);
  const HMatrices h = h_matrices(phi, {0.0, 0.0});
  const Vec2 lhs = h.h2.transpose() * phi.phi1({0, 0}).grad;
  EXPECT_NEAR(lhs(0), 0.0, 1e-14);
  EXPECT_NEAR(lhs(1), 2.0, 1e-14);
  const Vec2 fd = oracle::fd_grad_derivative(phi.phi1, {0, 0}, 1);
  EXPECT_NEAR(fd(1), 2.0, 1e-10);
}

TEST(HMatrices, DefiningRelationAgainstFiniteDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> X(0.0, 0.5);
  for (const auto& params : oracle::phi_families()) {
    const PhiPair phi = oracle::make_phi(params);
    for (int s = 0; s < 100; ++s) {
      const Vec2 x(X(rng), X(rng));
      const HMatrices h = h_matrices(phi, x);
      for (int i = 0; i < 2; ++i)
        for (int l = 0; l < 2; ++l) {
          const auto& f = l == 0 ? phi.phi1 : phi.phi2;
          const Vec2 nu = -f(x).grad;
          const Vec2 lhs = (i == 0 ? h.h1 : h.h2).transpose() * nu;
          const Vec2 rhs = -oracle::fd_grad_derivative(f, x, i);
          EXPECT_LE((lhs - rhs).norm(), 1e-10);
        }
    }
  }
}

TEST(HMatrices, BilinearSymmetry) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> X(0.0, 0.5), V(-1, 1);
  const PhiPair phi = oracle::make_phi(oracle::phi_families()[2]);
  for (int s = 0; s < 50; ++s) {
    const HMatrices h = h_matrices(phi, {X(rng), X(rng)});
    const Vec2 u(V(rng), V(rng)), b(V(rng), V(rng));
    EXPECT_LE((h.of(u) * b - h.of(b) * u).norm(), 1e-13);
  }
}

TEST(HMatrices, DegenerateRejected) {
  PhiPair phi{[](const Vec2& x) { return affine_phi(x(0), 1, 0); }, [](const Vec2& x) { return affine_phi(2 * x(0), 2, 0); }};
  EXPECT_THROW(h_matrices(phi, {0.1, 0.1}), DomainError);
}
