#ifndef NLSLAB_GROUNDSTATE_HPP_
#define NLSLAB_GROUNDSTATE_HPP_

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "nlslab/fit.hpp"
#include "nlslab/operator_context.hpp"

namespace nlslab {

// Nonlinear ground states bifurcating from the bound state phi_0:
//
//   (-Delta + V + |Q|^2) Q = E Q,      Q(z) = z phi_0 + q(z),  E = e0 + e(z),
//
// the stationary form of i dpsi/dt = H psi + |psi|^2 psi under
// psi = e^{-iEt} Q.  On the reduced branch (real z = r > 0) everything is
// real and the appendix system reads
//
//   (H - e0 - e) q = -P_c N(Q),        e r = <phi_0, N(Q)>,   N(u) = |u|^2 u.
//
// Complex parameters follow by gauge covariance Q(z) = e^{i arg z} Q(|z|).

template <typename Scalar = double>
struct GroundStateSolution {
  SpectralField<Scalar> Q;
  Scalar E = 0;
  int iterations = 0;
  Scalar residual = 0;  // ||(H + |Q|^2 - E) Q|| / ||Q||
};

namespace detail {

// Real-arithmetic workspace: the dense transforms dominate the solve, and on
// the reduced branch all fields are real.
template <typename Scalar>
struct RadialWorkspace {
  RealMat<Scalar> basis;       // h-orthonormal eigenvector columns (real part)
  RealVec<Scalar> lambda;
  RealVec<Scalar> phi0;
  Scalar e0 = 0;
  Scalar h = 0;

  explicit RadialWorkspace(const OperatorContext<Scalar>& ctx)
      : basis(ctx.eigenvectors.real()),
        lambda(ctx.eigenvalues),
        e0(ctx.ground_energy()),
        h(ctx.grid.h) {
    if (ctx.free_exact) {
      throw std::invalid_argument("ground state requires a potential with a bound state");
    }
    if (ctx.negative_indices.size() != 1) {
      throw NumericalError("ground state branch needs a simple negative eigenvalue (found " +
                           std::to_string(ctx.negative_indices.size()) + ")");
    }
    RealVec<Scalar> p = basis.col(0);
    Eigen::Index jmax = 0;
    p.cwiseAbs().maxCoeff(&jmax);
    if (p[jmax] < 0) p = -p;
    phi0 = p;
  }

  Scalar inner(const RealVec<Scalar>& a, const RealVec<Scalar>& b) const {
    return h * a.dot(b);
  }
  RealVec<Scalar> to_coeffs(const RealVec<Scalar>& u) const { return h * (basis.transpose() * u); }
  RealVec<Scalar> from_coeffs(const RealVec<Scalar>& c) const { return basis * c; }

  // (H - e0 - e)^{-1} on Ran P_c: eigenbasis with the phi_0 row removed
  RealVec<Scalar> pc_resolvent(const RealVec<Scalar>& rhs, Scalar e) const {
    RealVec<Scalar> c = to_coeffs(rhs);
    c[0] = 0;
    for (Eigen::Index k = 1; k < c.size(); ++k) c[k] /= (lambda[k] - e0 - e);
    return from_coeffs(c);
  }

  RealVec<Scalar> project_continuous(const RealVec<Scalar>& u) const {
    return u - phi0 * inner(phi0, u);
  }
};

template <typename Scalar>
struct RadialSample {
  Scalar r = 0;
  RealVec<Scalar> q;
  Scalar e = 0;
  RealVec<Scalar> dq;  // d/dr of q along the real branch
  Scalar de = 0;       // d/dr of e
  int iterations = 0;
  Scalar residual = 0;
  Scalar fd_check = -1;  // relative FD agreement of de (when computed)
};

template <typename Scalar>
RadialSample<Scalar> solve_radial(const RadialWorkspace<Scalar>& w, Scalar r,
                                  const RealVec<Scalar>* init, Scalar tol, int max_iters) {
  RadialSample<Scalar> s;
  s.r = r;
  s.q = init ? *init : RealVec<Scalar>::Zero(w.phi0.size());
  s.e = 0;
  if (r == Scalar(0)) {
    s.q.setZero();
    return s;
  }
  Scalar last_update = 0;
  for (int it = 1; it <= max_iters; ++it) {
    const RealVec<Scalar> Q = r * w.phi0 + s.q;
    const RealVec<Scalar> NQ = Q.array().cube().matrix();
    const Scalar e_new = w.inner(w.phi0, NQ) / r;
    const RealVec<Scalar> q_new = w.pc_resolvent(-w.project_continuous(NQ), e_new);
    last_update = std::sqrt(w.h) * (q_new - s.q).norm() + std::abs(e_new - s.e);
    s.q = q_new;
    s.e = e_new;
    s.iterations = it;
    if (last_update < tol) break;
  }
  // residual = || (H - E) Q + N(Q) || / ||Q||
  const RealVec<Scalar> Q = r * w.phi0 + s.q;
  const RealVec<Scalar> res =
      w.from_coeffs((w.to_coeffs(Q).array() * (w.lambda.array() - (w.e0 + s.e))).matrix()) +
      Q.array().cube().matrix();
  s.residual = res.norm() / Q.norm();
  if (last_update >= tol) {
    throw NumericalError("solve_ground_state: fixed point did not converge at |z| = " +
                         std::to_string(double(r)) + " (last residual " +
                         std::to_string(double(s.residual)) + ")");
  }
  return s;
}

// Linearized solves for the branch derivatives.  Direction 1 (radial):
//   (H - e0 - e + 3 P_c Q^2 P_c) Y = de * q - 3 P_c(Q^2 phi_0),
//   r de + e = 3 <phi_0, Q^2 (phi_0 + Y)>,
// unfolded into two resolvent solves plus a scalar bordered equation.
template <typename Scalar>
void differentiate_radial(const RadialWorkspace<Scalar>& w, RadialSample<Scalar>& s,
                          Scalar tol = Scalar(1e-13), int max_iters = 400) {
  const Scalar r = s.r;
  const RealVec<Scalar> Q = r * w.phi0 + s.q;
  const RealVec<Scalar> Q2 = Q.array().square().matrix();

  auto solve_pc = [&](const RealVec<Scalar>& rhs, Scalar coupling) {
    // (H - e0 - e + coupling * P_c Q^2 P_c) Y = rhs on Ran P_c, by fixed point
    RealVec<Scalar> y = RealVec<Scalar>::Zero(Q.size());
    for (int it = 0; it < max_iters; ++it) {
      const RealVec<Scalar> ky =
          w.project_continuous((Q2.array() * y.array()).matrix()) * coupling;
      const RealVec<Scalar> y_new = w.pc_resolvent(w.project_continuous(rhs) - ky, s.e);
      const Scalar du = std::sqrt(w.h) * (y_new - y).norm();
      y = y_new;
      if (du < tol) return y;
    }
    throw NumericalError("differentiate_branch: linearized solve did not converge");
  };

  // superposition in the unknown scalar de
  const RealVec<Scalar> ya = solve_pc((-3.0 * Q2.array() * w.phi0.array()).matrix(), Scalar(3));
  const RealVec<Scalar> yb = solve_pc(s.q, Scalar(3));
  const Scalar denom = r - 3 * w.inner(w.phi0, (Q2.array() * yb.array()).matrix());
  if (std::abs(denom) < Scalar(1e-12) * std::max(r, Scalar(1))) {
    throw NumericalError("differentiate_branch: singular bordered system");
  }
  const Scalar num = 3 * w.inner(w.phi0, (Q2.array() * (w.phi0 + ya).array()).matrix()) - s.e;
  s.de = num / denom;
  s.dq = ya + s.de * yb;
}

}  // namespace detail

// Branch of samples along real |z|; derivative fields solved exactly at each
// sample, higher derivatives recovered by stencil differentiation of the
// sampled curves.  Queries outside [r_min, r_max] throw.
template <typename Scalar = double>
class GroundStateBranch {
 public:
  struct Query {
    RealVec<Scalar> q;    // q(r)
    RealVec<Scalar> dq;   // dq/dr
    RealVec<Scalar> ddq;  // d^2 q / dr^2 (stencil derivative of dq)
    Scalar e = 0;
    Scalar de = 0;
    Scalar dde = 0;
  };

  GroundStateBranch(const OperatorContext<Scalar>& ctx, std::vector<detail::RadialSample<Scalar>> samples)
      : work_(ctx), samples_(std::move(samples)) {
    if (samples_.size() < 6) throw std::invalid_argument("GroundStateBranch: need >= 6 samples");
  }

  const detail::RadialWorkspace<Scalar>& workspace() const { return work_; }
  const std::vector<detail::RadialSample<Scalar>>& samples() const { return samples_; }
  Scalar r_min() const { return samples_.front().r; }
  Scalar r_max() const { return samples_.back().r; }
  Scalar e0() const { return work_.e0; }
  const RealVec<Scalar>& phi0() const { return work_.phi0; }

  // 6-point local polynomial interpolation (divided differences) of the
  // sampled curves and their first derivatives.
  Query query(Scalar r) const {
    if (r < r_min() - Scalar(1e-12) || r > r_max() + Scalar(1e-12)) {
      throw NumericalError("GroundStateBranch: |z| = " + std::to_string(double(r)) +
                           " outside branch range [" + std::to_string(double(r_min())) + ", " +
                           std::to_string(double(r_max())) + "]");
    }
    const int stencil = 6;
    const int n = int(samples_.size());
    int lo = 0;
    while (lo + 1 < n && samples_[lo + 1].r <= r) ++lo;
    int start = std::max(0, std::min(lo - stencil / 2 + 1, n - stencil));
    std::vector<Scalar> ts(stencil);
    for (int i = 0; i < stencil; ++i) ts[i] = samples_[start + i].r;

    // Lagrange differentiation weights at r for value, d/dr on the stencil
    std::vector<Scalar> w0(stencil), w1(stencil);
    for (int i = 0; i < stencil; ++i) {
      Scalar denom = 1;
      for (int j = 0; j < stencil; ++j) {
        if (j != i) denom *= (ts[i] - ts[j]);
      }
      // value weight: prod_{j != i} (r - t_j) / denom
      Scalar prod = 1;
      for (int j = 0; j < stencil; ++j) {
        if (j != i) prod *= (r - ts[j]);
      }
      w0[i] = prod / denom;
      // derivative weight: sum over k != i of prod_{j != i,k} (r - t_j)
      Scalar dsum = 0;
      for (int k = 0; k < stencil; ++k) {
        if (k == i) continue;
        Scalar p = 1;
        for (int j = 0; j < stencil; ++j) {
          if (j != i && j != k) p *= (r - ts[j]);
        }
        dsum += p;
      }
      w1[i] = dsum / denom;
    }

    Query out;
    const Eigen::Index m = samples_.front().q.size();
    out.q = RealVec<Scalar>::Zero(m);
    out.dq = RealVec<Scalar>::Zero(m);
    out.ddq = RealVec<Scalar>::Zero(m);
    for (int i = 0; i < stencil; ++i) {
      const auto& smp = samples_[start + i];
      out.q += w0[i] * smp.q;
      out.dq += w0[i] * smp.dq;   // exact solved derivative, interpolated
      out.ddq += w1[i] * smp.dq;  // stencil derivative of the sampled dq
      out.e += w0[i] * smp.e;
      out.de += w0[i] * smp.de;
      out.dde += w1[i] * smp.de;
    }
    return out;
  }

 private:
  detail::RadialWorkspace<Scalar> work_;
  std::vector<detail::RadialSample<Scalar>> samples_;
};

// Solve at one complex parameter.  Gauge reduction: the solve runs at
// r = |z| > 0 and the phase is restored afterwards.
template <typename Scalar>
GroundStateSolution<Scalar> solve_ground_state(const OperatorContext<Scalar>& ctx,
                                               std::complex<Scalar> z,
                                               const SpectralField<Scalar>* init = nullptr,
                                               Scalar tol = Scalar(1e-12), int max_iters = 200) {
  using C = std::complex<Scalar>;
  detail::RadialWorkspace<Scalar> w(ctx);
  GroundStateSolution<Scalar> out;
  if (std::abs(z) == Scalar(0)) {
    out.Q = SpectralField<Scalar>::Zero(ctx.n());
    out.E = w.e0;
    return out;
  }
  RealVec<Scalar> init_r;
  const RealVec<Scalar>* initp = nullptr;
  if (init) {
    const C ph = z / std::abs(z);
    init_r = (init->array() / ph).real().matrix();
    init_r -= std::abs(z) * w.phi0;
    initp = &init_r;
  }
  const auto s = detail::solve_radial(w, std::abs(z), initp, tol, max_iters);
  const C ph = z / std::abs(z);
  out.Q = ((std::abs(z) * w.phi0 + s.q).template cast<C>()) * ph;
  out.E = w.e0 + s.e;
  out.iterations = s.iterations;
  out.residual = s.residual;
  return out;
}

struct BranchBuildOptions {
  double tol = 1e-12;
  int max_iters = 200;
  bool with_derivatives = true;
  bool fd_audit = false;  // centered finite-difference check of de
};

// Branch over prescribed |z| samples (increasing), warm-starting each solve
// from the previous sample.
template <typename Scalar>
GroundStateBranch<Scalar> build_branch(const OperatorContext<Scalar>& ctx,
                                       const std::vector<Scalar>& radii,
                                       const BranchBuildOptions& opt = {}) {
  detail::RadialWorkspace<Scalar> w(ctx);
  std::vector<detail::RadialSample<Scalar>> samples;
  const RealVec<Scalar>* init = nullptr;
  RealVec<Scalar> last;
  for (Scalar r : radii) {
    auto s = detail::solve_radial<Scalar>(w, r, init, Scalar(opt.tol), opt.max_iters);
    if (opt.with_derivatives) {
      detail::differentiate_radial(w, s);
      if (opt.fd_audit) {
        const Scalar step = Scalar(1e-4) * r;
        const auto sp = detail::solve_radial<Scalar>(w, r + step, &s.q, Scalar(opt.tol), opt.max_iters);
        const auto sm = detail::solve_radial<Scalar>(w, r - step, &s.q, Scalar(opt.tol), opt.max_iters);
        const Scalar fd = (sp.e - sm.e) / (2 * step);
        s.fd_check = std::abs(fd - s.de) / std::max(std::abs(s.de), Scalar(1e-300));
      }
    }
    last = s.q;
    init = &last;
    samples.push_back(std::move(s));
  }
  return GroundStateBranch<Scalar>(ctx, std::move(samples));
}

inline std::vector<double> log_spaced(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    out[i] = lo * std::pow(hi / lo, double(i) / double(n - 1));
  }
  return out;
}

// Fitted small-|z| exponents of the branch quantities (flat H^2 norms).
struct ScalingReport {
  LinearFit q_h2;        // expect slope 3
  LinearFit dq_h2;       // expect slope 2  (derivative of q, not of Q)
  LinearFit e_abs;       // expect slope 2
  LinearFit de_abs;      // expect slope 1
  std::vector<double> dzq_minus_jphi0;  // ||D_z Q - J phi_0||_{H^2} per sample
};

template <typename Scalar>
ScalingReport scaling_report(const OperatorContext<Scalar>& ctx,
                             const GroundStateBranch<Scalar>& branch) {
  if (branch.samples().size() < 6) throw std::invalid_argument("scaling_report: need >= 6 samples");
  std::vector<double> r, qn, dqn, ea, dea;
  ScalingReport rep;
  for (const auto& s : branch.samples()) {
    r.push_back(double(s.r));
    const SpectralField<Scalar> qc = s.q.template cast<std::complex<Scalar>>();
    qn.push_back(double(flat_sobolev_norm(ctx.grid, qc, Scalar(2))));
    // D_z q = (dq, i q / r) at real z; combined in l^2 over the two directions
    const SpectralField<Scalar> d1 = s.dq.template cast<std::complex<Scalar>>();
    const double n1 = double(flat_sobolev_norm(ctx.grid, d1, Scalar(2)));
    const double n2 = double(flat_sobolev_norm(ctx.grid, qc, Scalar(2))) / double(s.r);
    dqn.push_back(std::sqrt(n1 * n1 + n2 * n2));
    rep.dzq_minus_jphi0.push_back(dqn.back());
    ea.push_back(std::abs(double(s.e)));
    dea.push_back(std::abs(double(s.de)));
  }
  rep.q_h2 = loglog_fit(r, qn);
  rep.dq_h2 = loglog_fit(r, dqn);
  rep.e_abs = loglog_fit(r, ea);
  rep.de_abs = loglog_fit(r, dea);
  return rep;
}

struct WeightedReport {
  int k = 1;
  LinearFit q_weighted;   // expect slope 3
  LinearFit dq_weighted;  // expect slope 2
};

template <typename Scalar>
WeightedReport weighted_report(const OperatorContext<Scalar>& ctx,
                               const GroundStateBranch<Scalar>& branch, int k) {
  if (k < 1 || k > 2) throw std::invalid_argument("weighted_report: k must be 1 or 2");
  std::vector<double> r, qn, dqn;
  for (const auto& s : branch.samples()) {
    r.push_back(double(s.r));
    const SpectralField<Scalar> qc = s.q.template cast<std::complex<Scalar>>();
    const SpectralField<Scalar> d1 = s.dq.template cast<std::complex<Scalar>>();
    qn.push_back(double(flat_sobolev_norm(ctx.grid, qc, Scalar(2), Scalar(k))));
    const double n1 = double(flat_sobolev_norm(ctx.grid, d1, Scalar(2), Scalar(k)));
    const double n2 = double(flat_sobolev_norm(ctx.grid, qc, Scalar(2), Scalar(k))) / double(s.r);
    dqn.push_back(std::sqrt(n1 * n1 + n2 * n2));
  }
  WeightedReport rep;
  rep.k = k;
  rep.q_weighted = loglog_fit(r, qn);
  rep.dq_weighted = loglog_fit(r, dqn);
  return rep;
}

}  // namespace nlslab

#endif  // NLSLAB_GROUNDSTATE_HPP_
