#include "waggle/opc.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "waggle/error.hpp"

namespace waggle {

AffineModel discretize_zoh(const Matrix4& A_c, const InputMatrix& B_c, const State4& c_c, double dt) {
  if (!(dt > 0.0)) throw ConfigError("discretize: dt must be positive");
  using Aug = Eigen::Matrix<double, 7, 7>;
  Aug m = Aug::Zero();
  m.topLeftCorner<4, 4>() = A_c * dt;
  m.block<4, 2>(0, 4) = B_c * dt;
  m.block<4, 1>(0, 6) = c_c * dt;
  const Aug e = m.exp();
  return {e.topLeftCorner<4, 4>(), e.block<4, 2>(0, 4), e.block<4, 1>(0, 6)};
}

AffineModel discretize_linearization(const State4& x_lin, const HkbParams& xi, double dt) {
  const Matrix4 J = jacobian(x_lin, xi);
  const State4 c = drift(x_lin, xi) - J * x_lin;
  return discretize_zoh(J, input_matrix(), c, dt);
}

namespace {

void require_psd(const Eigen::Matrix2d& m, const char* name) {
  if (!m.allFinite() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ConfigError(std::string(name) + " must be finite and symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
  if (es.eigenvalues().minCoeff() < 0.0) throw ConfigError(std::string(name) + " must be positive semidefinite");
}

}  // namespace

ControlInput optimal_tracking_baseline(const State4& x, const HkbParams& xi, std::span<const Vec2> reference,
                                       const OpcWeights& weights, double dt, OutputVariant output) {
  if (reference.empty()) throw ConfigError("OPC horizon must be at least one step");
  require_psd(weights.Q, "Q");
  if (!weights.R.allFinite()) throw ConfigError("R must be finite");

  const AffineModel m = discretize_linearization(x, xi, dt);
  const OutputMatrix C = output_matrix(output);
  const Matrix4 CtQC = C.transpose() * weights.Q * C;
  const std::size_t N = reference.size();

  // Value function x'P x + 2 q'x at step i.
  Matrix4 P = CtQC;
  State4 q = -C.transpose() * weights.Q * reference[N - 1];
  ControlInput u0 = ControlInput::Zero();

  for (std::size_t i = N; i-- > 0;) {
    const Eigen::Matrix2d S = weights.R + m.B.transpose() * P * m.B;
    Eigen::LLT<Eigen::Matrix2d> llt(S);
    if (llt.info() != Eigen::Success || !S.allFinite())
      throw ConfigError("OPC Riccati recursion: input Hessian not positive definite");
    const Eigen::Matrix<double, 2, 4> K = llt.solve(m.B.transpose() * P * m.A);
    const ControlInput kff = -llt.solve(m.B.transpose() * (P * m.c + q));
    if (i == 0) {
      u0 = -K * x + kff;
      break;
    }
    const Matrix4 Acl = m.A - m.B * K;
    const State4 q_next = -C.transpose() * weights.Q * reference[i - 1] + Acl.transpose() * (P * m.c + q);
    Matrix4 P_next = CtQC + m.A.transpose() * P * Acl;
    P = 0.5 * (P_next + P_next.transpose());
    q = q_next;
  }
  return u0;
}

}  // namespace waggle
