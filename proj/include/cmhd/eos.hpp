#pragma once

#include <cmath>
#include <string>

#include "error.hpp"
#include "field.hpp"

namespace cmhd {

enum class EosKind { IdealGas, Affine };

struct EosValues {
  double R, Rp, Q;
};

//! Density law R(p,s) with R > 0, dR/dp > 0 and Q = R / (dR/dp).
struct EosModel {
  EosKind kind = EosKind::IdealGas;
  double gamma = 5.0 / 3.0;
  double epsilon = 0.1;

  static EosModel ideal_gas(double gamma) {
    if (!(gamma > 1.0)) throw EosDomainError("ideal gas requires gamma > 1");
    return {EosKind::IdealGas, gamma, 0.0};
  }
  static EosModel affine(double eps) {
    if (!(eps > 0.0)) throw EosDomainError("affine law requires epsilon > 0 (dR/dp must be positive)");
    return {EosKind::Affine, 0.0, eps};
  }

  std::string name() const { return kind == EosKind::IdealGas ? "ideal_gas" : "affine"; }

  //! R = p^(1/gamma) exp(-s/gamma)  or  R = 1 + eps p.
  EosValues operator()(double p, double s) const {
    if (kind == EosKind::IdealGas) {
      if (!(p > 0) || !std::isfinite(s)) throw EosDomainError("ideal gas needs p > 0, got p=" + std::to_string(p));
      const double R = std::pow(p, 1.0 / gamma) * std::exp(-s / gamma);
      return {R, R / (gamma * p), gamma * p};
    }
    if (!(epsilon > 0)) throw EosDomainError("affine law requires epsilon > 0 (dR/dp must be positive)");
    const double R = 1.0 + epsilon * p;
    if (!(R > 0)) throw EosDomainError("affine law gives non-positive density at p=" + std::to_string(p));
    return {R, epsilon, R / epsilon};
  }
};

struct EosFields {
  ScalarField R, Rp, Q;
};

//! Pointwise evaluation on all cells including ghosts.
inline EosFields eos_eval(const EosModel& eos, const ScalarField& p, const ScalarField& s) {
  const Grid& g = p.grid();
  EosFields f{ScalarField(g), ScalarField(g), ScalarField(g)};
  for (int i = -kGhost; i < g.n1() + kGhost; ++i)
    for (int j = -kGhost; j < g.n2() + kGhost; ++j) {
      EosValues v;
      try {
        v = eos(p(i, j), s(i, j));
      } catch (const EosDomainError& e) {
        throw EosDomainError(std::string(e.what()) + " at cell (" + std::to_string(i) + "," + std::to_string(j) + ")", i, j);
      }
      f.R(i, j) = v.R;
      f.Rp(i, j) = v.Rp;
      f.Q(i, j) = v.Q;
    }
  return f;
}

}  // namespace cmhd
