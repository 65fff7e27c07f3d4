#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace satrack {

template <typename S>
using Vec2T = Eigen::Matrix<S, 2, 1>;
template <typename S>
using Vec3T = Eigen::Matrix<S, 3, 1>;
template <typename S>
using Vec6T = Eigen::Matrix<S, 6, 1>;
template <typename S>
using Mat2T = Eigen::Matrix<S, 2, 2>;
template <typename S>
using Mat3T = Eigen::Matrix<S, 3, 3>;
template <typename S>
using Mat6T = Eigen::Matrix<S, 6, 6>;

using Vec2 = Vec2T<double>;
using Vec3 = Vec3T<double>;
using Vec6 = Vec6T<double>;
using Mat2 = Mat2T<double>;
using Mat3 = Mat3T<double>;
using Mat6 = Mat6T<double>;
using Mat63 = Eigen::Matrix<double, 6, 3>;
using Mat32 = Eigen::Matrix<double, 3, 2>;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// Stacked position/velocity state shared by UAV and target.
struct State6 {
  Vec3 position{Vec3::Zero()};
  Vec3 velocity{Vec3::Zero()};

  Vec6 to_vec() const {
    Vec6 x;
    x << position, velocity;
    return x;
  }
  static State6 from_vec(const Vec6& x) { return {x.head<3>(), x.tail<3>()}; }
};

/// Rotation matrix validated to be a proper rotation (R^T R = I, det = +1).
class Rotation3 {
 public:
  static constexpr double kTol = 1e-9;

  Rotation3() : m_(Mat3::Identity()) {}

  static Rotation3 from_matrix(const Mat3& m) {
    if (!all_finite(m)) throw std::invalid_argument("Rotation3: non-finite entries");
    if ((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() > kTol)
      throw std::invalid_argument("Rotation3: not orthonormal");
    if (std::abs(m.determinant() - 1.0) > kTol)
      throw std::invalid_argument("Rotation3: determinant is not +1");
    return Rotation3(m);
  }

  /// Rotation about +z by angle psi (radians).
  static Rotation3 about_z(double psi) {
    const double c = std::cos(psi), s = std::sin(psi);
    Mat3 m;
    m << c, -s, 0, s, c, 0, 0, 0, 1;
    return Rotation3(m);
  }

  const Mat3& matrix() const { return m_; }
  Rotation3 transposed() const { return Rotation3(m_.transpose()); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

 private:
  explicit Rotation3(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Symmetric positive-semidefinite matrix of fixed dimension (2, 3 or 6).
/// Construction validates symmetry (1e-12 relative) and min eigenvalue >= -1e-10.
template <int N>
class SymMatrix {
 public:
  static_assert(N == 2 || N == 3 || N == 6, "SymMatrix supports dims 2, 3, 6");
  using Dense = Eigen::Matrix<double, N, N>;

  static constexpr double kSymTol = 1e-12;
  static constexpr double kEigTol = 1e-10;

  SymMatrix() : m_(Dense::Zero()) {}

  static SymMatrix from(const Dense& m) {
    if (!all_finite(m)) throw std::invalid_argument("SymMatrix: non-finite entries");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymTol * scale)
      throw std::invalid_argument("SymMatrix: not symmetric");
    Dense sym = 0.5 * (m + m.transpose());
    // LLT of a slightly shifted copy certifies min eigenvalue >= -kEigTol in
    // the common PD case; fall back to an exact eigen-solve near the boundary.
    Eigen::LLT<Dense> llt(sym + kEigTol * scale * Dense::Identity());
    if (llt.info() != Eigen::Success) {
      Eigen::SelfAdjointEigenSolver<Dense> eig(sym);
      if (eig.eigenvalues().minCoeff() < -kEigTol * scale)
        throw std::invalid_argument("SymMatrix: not positive semidefinite");
    }
    return SymMatrix(sym);
  }

  static SymMatrix identity() { return SymMatrix(Dense::Identity()); }
  static SymMatrix diagonal(const Eigen::Matrix<double, N, 1>& d) {
    if (d.minCoeff() < 0) throw std::invalid_argument("SymMatrix: negative diagonal");
    return SymMatrix(d.asDiagonal());
  }

  const Dense& dense() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  explicit SymMatrix(const Dense& m) : m_(m) {}
  Dense m_;
};

using SymMatrix2 = SymMatrix<2>;
using SymMatrix3 = SymMatrix<3>;
using SymMatrix6 = SymMatrix<6>;

}  // namespace satrack
