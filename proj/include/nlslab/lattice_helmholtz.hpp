#ifndef NLSLAB_LATTICE_HELMHOLTZ_HPP_
#define NLSLAB_LATTICE_HELMHOLTZ_HPP_

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "nlslab/types.hpp"

namespace nlslab {

// Outgoing Green's function of the 6th-order (7-point) lattice Helmholtz
// operator (-D6 - xi^2) on h Z:  (-D6 - xi^2) g = delta_0 / h.
//
// D6 u_j = (1/h^2) sum_{|p|<=3} c_|p| u_{j+p},
// c = (-49/18, 3/2, -3/20, 1/90).
//
// g(m) = sum_r A_r lam_r^{|m|} over the three recurrence roots inside the
// closed unit disk, with the propagating root e^{i theta}, theta > 0, chosen
// outgoing.  The 6th-order stencil keeps the lattice dispersion error
// (xi h)^6 / 560, far below the spectral routes it is compared against.
template <typename Scalar = double>
class LatticeHelmholtzKernel {
 public:
  using C = std::complex<Scalar>;
  static constexpr std::array<double, 4> kC = {-49.0 / 18.0, 1.5, -3.0 / 20.0, 1.0 / 90.0};

  LatticeHelmholtzKernel(Scalar xi, Scalar h, Eigen::Index m_max) : h_(h) {
    if (!(xi > Scalar(0))) throw std::invalid_argument("LatticeHelmholtzKernel: xi must be > 0");
    // characteristic cubic in x = lam + 1/lam:
    // c3 (x^3 - 3x) + c2 (x^2 - 2) + c1 x + c0 + xi^2 h^2 = 0
    const Scalar c0 = Scalar(kC[0]), c1 = Scalar(kC[1]), c2 = Scalar(kC[2]), c3 = Scalar(kC[3]);
    Eigen::Matrix<Scalar, 3, 3> comp = Eigen::Matrix<Scalar, 3, 3>::Zero();
    // monic cubic x^3 + a2 x^2 + a1 x + a0
    const Scalar a2 = c2 / c3;
    const Scalar a1 = (c1 - 3 * c3) / c3;
    const Scalar a0 = (c0 + xi * xi * h * h - 2 * c2) / c3;
    comp(0, 2) = -a0;
    comp(1, 2) = -a1;
    comp(2, 2) = -a2;
    comp(1, 0) = comp(2, 1) = Scalar(1);
    Eigen::EigenSolver<Eigen::Matrix<Scalar, 3, 3>> es(comp);
    std::array<C, 3> lams;
    for (int r = 0; r < 3; ++r) {
      const C x = es.eigenvalues()[r];
      C lam = (x + std::sqrt(x * x - C(4))) / C(2);
      if (std::abs(lam) > Scalar(1)) lam = C(1) / lam;
      if (std::abs(std::abs(lam) - Scalar(1)) < Scalar(1e-9)) {
        if (std::imag(lam) < Scalar(0)) lam = std::conj(lam);  // outgoing propagating mode
        theta_ = std::arg(lam);
      }
      lams[r] = lam;
    }
    // match the delta at rows m = 0, 1, 2; rows |m| >= 3 hold by recurrence
    Eigen::Matrix<C, 3, 3> M;
    Eigen::Vector<C, 3> rhs = Eigen::Vector<C, 3>::Zero();
    rhs[0] = C(1 / h, 0);
    for (int m = 0; m < 3; ++m) {
      for (int r = 0; r < 3; ++r) {
        C acc(0, 0);
        for (int p = -3; p <= 3; ++p) {
          acc += Scalar(kC[std::abs(p)]) * std::pow(lams[r], Scalar(std::abs(m + p)));
        }
        M(m, r) = -acc / (h * h) - xi * xi * std::pow(lams[r], Scalar(m));
      }
    }
    const Eigen::Vector<C, 3> A = M.fullPivLu().solve(rhs);
    g_.resize(m_max + 1);
    for (Eigen::Index m = 0; m <= m_max; ++m) {
      C acc(0, 0);
      for (int r = 0; r < 3; ++r) acc += A[r] * std::pow(lams[r], Scalar(m));
      g_[m] = acc;
    }
  }

  // wavenumber of the exact propagating lattice mode e^{i theta j}; the
  // discrete counterpart of the incident exponential at energy xi^2
  Scalar lattice_momentum() const { return theta_ / h_; }

  // g evaluated at lattice offset m (symmetric in m)
  C operator()(Eigen::Index m) const {
    const Eigen::Index a = std::abs(m);
    if (a >= Eigen::Index(g_.size())) {
      throw std::out_of_range("LatticeHelmholtzKernel: offset beyond tabulated range");
    }
    return g_[a];
  }

  // interior residual stencil: (-D6 + (V - xi^2)) u at node j
  template <typename FieldT, typename PotT>
  C residual_row(const FieldT& u, const PotT& v, Scalar xi, Eigen::Index j) const {
    C acc(0, 0);
    for (int p = -3; p <= 3; ++p) acc += Scalar(kC[std::abs(p)]) * u[j + p];
    return -acc / (h_ * h_) + (v[j] - xi * xi) * u[j];
  }

 private:
  Scalar h_;
  Scalar theta_ = 0;
  std::vector<C> g_;
};

}  // namespace nlslab

#endif  // NLSLAB_LATTICE_HELMHOLTZ_HPP_
