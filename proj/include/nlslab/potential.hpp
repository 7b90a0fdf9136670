#ifndef NLSLAB_POTENTIAL_HPP_
#define NLSLAB_POTENTIAL_HPP_

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlslab/grid.hpp"
#include "nlslab/types.hpp"

namespace nlslab {

enum class PotentialKind { kZero, kSech2, kGaussianWell, kTable };

inline PotentialKind potential_kind_from_string(const std::string& s) {
  if (s == "zero") return PotentialKind::kZero;
  if (s == "sech2") return PotentialKind::kSech2;
  if (s == "gaussian-well") return PotentialKind::kGaussianWell;
  if (s == "table") return PotentialKind::kTable;
  throw std::invalid_argument("unknown potential kind: " + s);
}

// Real short-range potential sampled on the grid.  The named families:
//   sech2:          V(x) = -depth / cosh^2(x / width)
//   gaussian-well:  V(x) = -depth * exp(-(x/width)^2)
template <typename Scalar = double>
struct PotentialSpec {
  PotentialKind kind = PotentialKind::kZero;
  Scalar depth = 0;
  Scalar width = 1;
  RealVec<Scalar> table;  // used when kind == kTable

  static PotentialSpec zero() { return {}; }
  static PotentialSpec sech2(Scalar depth, Scalar width = 1) {
    PotentialSpec p;
    p.kind = PotentialKind::kSech2;
    p.depth = depth;
    p.width = width;
    return p;
  }
  static PotentialSpec gaussian_well(Scalar depth, Scalar width = 1) {
    PotentialSpec p;
    p.kind = PotentialKind::kGaussianWell;
    p.depth = depth;
    p.width = width;
    return p;
  }

  RealVec<Scalar> sample(const Grid1D<Scalar>& grid) const {
    RealVec<Scalar> v(grid.n_points);
    switch (kind) {
      case PotentialKind::kZero:
        v.setZero();
        break;
      case PotentialKind::kSech2:
        for (Eigen::Index j = 0; j < grid.n_points; ++j) {
          const Scalar c = std::cosh(grid.x(j) / width);
          v[j] = -depth / (c * c);
        }
        break;
      case PotentialKind::kGaussianWell:
        for (Eigen::Index j = 0; j < grid.n_points; ++j) {
          const Scalar u = grid.x(j) / width;
          v[j] = -depth * std::exp(-u * u);
        }
        break;
      case PotentialKind::kTable:
        if (table.size() != grid.n_points) {
          throw std::invalid_argument("PotentialSpec: table length does not match grid");
        }
        v = table;
        break;
    }
    if (!v.allFinite()) throw std::invalid_argument("PotentialSpec: potential has NaN/Inf samples");
    return v;
  }
};

struct PotentialDiagnostics {
  double decay_ratio = 0;       // |V| at the edge vs the <x>^{-2-eps} envelope
  bool short_range_ok = false;  // |V(x)| <= C <x>^{-2-eps} holds numerically at the edge
  double max_derivative = 0;    // discrete smoothness proxy
};

// Short-range audit: fits the envelope constant in the bulk and checks the
// outer 10% of the box stays below it (with the spec's eps = 0.5 default).
template <typename Scalar>
PotentialDiagnostics potential_diagnostics(const Grid1D<Scalar>& grid, const RealVec<Scalar>& v,
                                           Scalar eps = Scalar(0.5)) {
  PotentialDiagnostics d;
  const Eigen::Index n = grid.n_points;
  Scalar c_bulk = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar xx = grid.x(j);
    const Scalar env = std::pow(Scalar(1) + xx * xx, -(Scalar(2) + eps) / 2);
    c_bulk = std::max(c_bulk, std::abs(v[j]) / env);
  }
  Scalar worst = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Scalar xx = grid.x(j);
    if (std::abs(xx) < Scalar(0.9) * grid.half_length) continue;
    const Scalar env = std::pow(Scalar(1) + xx * xx, -(Scalar(2) + eps) / 2);
    worst = std::max(worst, std::abs(v[j]) / std::max(env * c_bulk, Scalar(1e-300)));
  }
  d.decay_ratio = double(worst);
  d.short_range_ok = (c_bulk == Scalar(0)) || worst <= Scalar(1.0) + Scalar(1e-9);
  Scalar md = 0;
  for (Eigen::Index j = 0; j + 1 < n; ++j) md = std::max(md, std::abs(v[j + 1] - v[j]) / grid.h);
  d.max_derivative = double(md);
  return d;
}

}  // namespace nlslab

#endif  // NLSLAB_POTENTIAL_HPP_
