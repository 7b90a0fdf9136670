#ifndef NLSLAB_TYPES_HPP_
#define NLSLAB_TYPES_HPP_

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace nlslab {

template <typename Scalar>
using RealVec = Eigen::Vector<Scalar, Eigen::Dynamic>;

template <typename Scalar>
using CplxVec = Eigen::Vector<std::complex<Scalar>, Eigen::Dynamic>;

template <typename Scalar>
using RealMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using CplxMat = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

// A field sampled on the grid nodes.  All norms and inner products carry the
// grid weight h, so discrete quantities track their continuum counterparts.
template <typename Scalar>
using SpectralField = CplxVec<Scalar>;

// Thrown when a computation fails for a numerical reason (non-convergence,
// singular system, resolvent collision) as opposed to bad arguments.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr int kDefaultDimension = 1;

}  // namespace nlslab

#endif  // NLSLAB_TYPES_HPP_
