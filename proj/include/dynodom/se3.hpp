#pragma once

// Rigid-body transforms and the SO(3)/SE(3) exponential and logarithm maps.
//
// Tangent vectors of SE(3) are ordered (rho, phi): translation part first,
// rotation part second. Jacobians follow the left-Jacobian convention, and
// the right Jacobian is obtained as J_r(xi) = J_l(-xi).

#include <cmath>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace dynodom {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Vector6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar>
using Matrix6 = Eigen::Matrix<Scalar, 6, 6>;

template <typename Scalar>
Matrix3<Scalar> hat(const Vector3<Scalar>& v) {
  Matrix3<Scalar> m;
  m << Scalar(0), -v.z(), v.y(),
       v.z(), Scalar(0), -v.x(),
       -v.y(), v.x(), Scalar(0);
  return m;
}

template <typename Scalar>
Matrix3<Scalar> so3_exp(const Vector3<Scalar>& phi) {
  const Scalar theta2 = phi.squaredNorm();
  const Matrix3<Scalar> K = hat(phi);
  Scalar a, b;
  if (theta2 < Scalar(1e-12)) {
    a = Scalar(1) - theta2 / Scalar(6);
    b = Scalar(0.5) - theta2 / Scalar(24);
  } else {
    const Scalar theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (Scalar(1) - std::cos(theta)) / theta2;
  }
  return Matrix3<Scalar>::Identity() + a * K + b * K * K;
}

template <typename Scalar>
Vector3<Scalar> so3_log(const Matrix3<Scalar>& R) {
  // The quaternion route stays accurate near both 0 and pi.
  Eigen::Quaternion<Scalar> q(R);
  q.normalize();
  if (q.w() < Scalar(0)) q.coeffs() = -q.coeffs();
  const Vector3<Scalar> v = q.vec();
  const Scalar s = v.norm();
  if (s < Scalar(1e-12)) {
    // theta ~ 2 s, and v/s * theta ~ 2 v (1 + s^2/6 ...)
    return Scalar(2) * v / q.w();
  }
  const Scalar theta = Scalar(2) * std::atan2(s, q.w());
  return v * (theta / s);
}

template <typename Scalar>
Matrix3<Scalar> so3_left_jacobian(const Vector3<Scalar>& phi) {
  const Scalar theta2 = phi.squaredNorm();
  const Matrix3<Scalar> K = hat(phi);
  Scalar a, b;
  if (theta2 < Scalar(1e-10)) {
    a = Scalar(0.5) - theta2 / Scalar(24);
    b = Scalar(1) / Scalar(6) - theta2 / Scalar(120);
  } else {
    const Scalar theta = std::sqrt(theta2);
    a = (Scalar(1) - std::cos(theta)) / theta2;
    b = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Matrix3<Scalar>::Identity() + a * K + b * K * K;
}

template <typename Scalar>
Matrix3<Scalar> so3_left_jacobian_inverse(const Vector3<Scalar>& phi) {
  const Scalar theta2 = phi.squaredNorm();
  const Matrix3<Scalar> K = hat(phi);
  Scalar c;
  if (theta2 < Scalar(1e-10)) {
    c = Scalar(1) / Scalar(12) + theta2 / Scalar(720);
  } else {
    const Scalar theta = std::sqrt(theta2);
    c = Scalar(1) / theta2 -
        (Scalar(1) + std::cos(theta)) / (Scalar(2) * theta * std::sin(theta));
  }
  return Matrix3<Scalar>::Identity() - Scalar(0.5) * K + c * K * K;
}

/// Rigid transform x -> R x + t.
template <typename Scalar>
class Se3 {
 public:
  using Rotation = Matrix3<Scalar>;
  using Translation = Vector3<Scalar>;
  using Tangent = Vector6<Scalar>;

  Se3() : rotation_(Rotation::Identity()), translation_(Translation::Zero()) {}
  Se3(const Rotation& rotation, const Translation& translation)
      : rotation_(rotation), translation_(translation) {}
  Se3(const Eigen::Quaternion<Scalar>& q, const Translation& translation)
      : rotation_(q.normalized().toRotationMatrix()), translation_(translation) {}

  static Se3 identity() { return Se3(); }

  static Se3 exp(const Tangent& xi) {
    const Vector3<Scalar> rho = xi.template head<3>();
    const Vector3<Scalar> phi = xi.template tail<3>();
    return Se3(so3_exp(phi), so3_left_jacobian(phi) * rho);
  }

  Tangent log() const {
    const Vector3<Scalar> phi = so3_log(rotation_);
    Tangent xi;
    xi.template head<3>() = so3_left_jacobian_inverse(phi) * translation_;
    xi.template tail<3>() = phi;
    return xi;
  }

  const Rotation& rotation() const { return rotation_; }
  const Translation& translation() const { return translation_; }
  Rotation& rotation() { return rotation_; }
  Translation& translation() { return translation_; }

  Eigen::Quaternion<Scalar> quaternion() const {
    return Eigen::Quaternion<Scalar>(rotation_).normalized();
  }

  Eigen::Matrix<Scalar, 4, 4> matrix() const {
    Eigen::Matrix<Scalar, 4, 4> m = Eigen::Matrix<Scalar, 4, 4>::Identity();
    m.template topLeftCorner<3, 3>() = rotation_;
    m.template topRightCorner<3, 1>() = translation_;
    return m;
  }

  Se3 inverse() const {
    const Rotation rt = rotation_.transpose();
    return Se3(rt, -(rt * translation_));
  }

  Se3 operator*(const Se3& other) const {
    return Se3(rotation_ * other.rotation_,
               rotation_ * other.translation_ + translation_);
  }

  Translation operator*(const Translation& p) const {
    return rotation_ * p + translation_;
  }

  /// Re-projects the rotation onto SO(3); composition chains drift slowly.
  Se3 normalized() const { return Se3(quaternion(), translation_); }

  /// Rotation angle in radians, in [0, pi].
  Scalar angle() const { return so3_log(rotation_).norm(); }

  template <typename Other>
  Se3<Other> cast() const {
    return Se3<Other>(rotation_.template cast<Other>(),
                      translation_.template cast<Other>());
  }

 private:
  Rotation rotation_;
  Translation translation_;
};

using Se3d = Se3<double>;
using Vector6d = Vector6<double>;
using Matrix6d = Matrix6<double>;

/// Adjoint of T acting on (rho, phi) tangents: T exp(xi) T^-1 = exp(Ad_T xi).
template <typename Scalar>
Matrix6<Scalar> adjoint(const Se3<Scalar>& T) {
  Matrix6<Scalar> ad = Matrix6<Scalar>::Zero();
  ad.template topLeftCorner<3, 3>() = T.rotation();
  ad.template bottomRightCorner<3, 3>() = T.rotation();
  ad.template topRightCorner<3, 3>() = hat(T.translation()) * T.rotation();
  return ad;
}

namespace detail {

// Off-diagonal block of the SE(3) left Jacobian.
template <typename Scalar>
Matrix3<Scalar> se3_q_block(const Vector3<Scalar>& rho, const Vector3<Scalar>& phi) {
  const Matrix3<Scalar> P = hat(phi);
  const Matrix3<Scalar> R = hat(rho);
  const Scalar theta2 = phi.squaredNorm();
  Scalar c1, c2, c3;
  if (theta2 < Scalar(1e-8)) {
    c1 = Scalar(1) / Scalar(6) - theta2 / Scalar(120);
    c2 = Scalar(1) / Scalar(24) - theta2 / Scalar(720);
    c3 = Scalar(1) / Scalar(120) - theta2 / Scalar(2520);
  } else {
    const Scalar theta = std::sqrt(theta2);
    const Scalar s = std::sin(theta);
    const Scalar c = std::cos(theta);
    c1 = (theta - s) / (theta2 * theta);
    c2 = (theta2 + Scalar(2) * c - Scalar(2)) / (Scalar(2) * theta2 * theta2);
    c3 = (Scalar(2) * theta - Scalar(3) * s + theta * c) /
         (Scalar(2) * theta2 * theta2 * theta);
  }
  const Matrix3<Scalar> PR = P * R;
  const Matrix3<Scalar> RP = R * P;
  const Matrix3<Scalar> PRP = PR * P;
  return Scalar(0.5) * R + c1 * (PR + RP + PRP) +
         c2 * (P * PR + RP * P - Scalar(3) * PRP) +
         c3 * (PRP * P + P * PRP);
}

}  // namespace detail

template <typename Scalar>
Matrix6<Scalar> se3_left_jacobian_inverse(const Vector6<Scalar>& xi) {
  const Vector3<Scalar> rho = xi.template head<3>();
  const Vector3<Scalar> phi = xi.template tail<3>();
  const Matrix3<Scalar> Jinv = so3_left_jacobian_inverse(phi);
  const Matrix3<Scalar> Q = detail::se3_q_block(rho, phi);
  Matrix6<Scalar> out = Matrix6<Scalar>::Zero();
  out.template topLeftCorner<3, 3>() = Jinv;
  out.template bottomRightCorner<3, 3>() = Jinv;
  out.template topRightCorner<3, 3>() = -Jinv * Q * Jinv;
  return out;
}

/// log(exp(xi) exp(delta)) ~ xi + J_r^-1(xi) delta.
template <typename Scalar>
Matrix6<Scalar> se3_right_jacobian_inverse(const Vector6<Scalar>& xi) {
  return se3_left_jacobian_inverse<Scalar>(-xi);
}

}  // namespace dynodom
