#ifndef NLSLAB_CUTOFFS_HPP_
#define NLSLAB_CUTOFFS_HPP_

#include <algorithm>
#include <cmath>

namespace nlslab {

// One cutoff family for the whole repo, published bit-exactly:
//
//   smoothstep5(t) = 6 t^5 - 15 t^4 + 10 t^3          clamped to [0, 1]
//
//   lp_psi(a)    = 1                 for |a| <= 1
//                = 1 - S(|a| - 1)    for 1 <= |a| <= 2
//                = 0                 for |a| >= 2
//   lp_phi(a)    = lp_psi(a) - lp_psi(2 a)            supported on 1/2 <= |a| <= 2
//   wiener_bump(a) = S(a + 1) - S(a)                  supported on [-1, 1]
//
// lp_phi telescopes: sum over dyadic N of lp_phi(a / N) == 1 for a != 0, and
// wiener_bump tiles: sum over integer n of wiener_bump(a - n) == 1.

template <typename Scalar>
Scalar smoothstep5(Scalar t) {
  t = std::clamp(t, Scalar(0), Scalar(1));
  return t * t * t * (t * (Scalar(6) * t - Scalar(15)) + Scalar(10));
}

template <typename Scalar>
Scalar lp_psi(Scalar a) {
  a = std::abs(a);
  if (a <= Scalar(1)) return Scalar(1);
  if (a >= Scalar(2)) return Scalar(0);
  return Scalar(1) - smoothstep5(a - Scalar(1));
}

template <typename Scalar>
Scalar lp_phi(Scalar a) {
  return lp_psi(a) - lp_psi(Scalar(2) * a);
}

// Energy-normalized variant used by the Littlewood-Paley square function: the
// squares of {sqrt_lp_psi(a), sqrt_lp_phi(a/N)} tile exactly, which makes the
// l^2 recombination an isometry on L^2.
template <typename Scalar>
Scalar sqrt_lp_phi(Scalar a) {
  return std::sqrt(std::max(lp_phi(a), Scalar(0)));
}

template <typename Scalar>
Scalar sqrt_lp_psi(Scalar a) {
  return std::sqrt(std::max(lp_psi(a), Scalar(0)));
}

template <typename Scalar>
Scalar wiener_bump(Scalar a) {
  return smoothstep5(a + Scalar(1)) - smoothstep5(a);
}

}  // namespace nlslab

#endif  // NLSLAB_CUTOFFS_HPP_
