#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "dynodom/error.hpp"
#include "dynodom/se3.hpp"

namespace dynodom {

/// Least-squares rigid transform T (no scale) minimizing sum |T src_i - dst_i|^2.
///
/// Closed form via the SVD of the cross-covariance; reflections are corrected
/// so the returned rotation always has determinant +1. Needs at least three
/// correspondences.
template <typename Scalar>
Se3<Scalar> align_rigid(std::span<const Vector3<Scalar>> src,
                        std::span<const Vector3<Scalar>> dst) {
  if (src.size() != dst.size()) {
    throw PreconditionError("align_rigid: point sets differ in size");
  }
  if (src.size() < 3) {
    throw PreconditionError("align_rigid: at least 3 correspondences required");
  }
  const Scalar n = static_cast<Scalar>(src.size());
  Vector3<Scalar> mu_src = Vector3<Scalar>::Zero();
  Vector3<Scalar> mu_dst = Vector3<Scalar>::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    mu_src += src[i];
    mu_dst += dst[i];
  }
  mu_src /= n;
  mu_dst /= n;

  Matrix3<Scalar> cov = Matrix3<Scalar>::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cov += (dst[i] - mu_dst) * (src[i] - mu_src).transpose();
  }

  Eigen::JacobiSVD<Matrix3<Scalar>> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix3<Scalar>& U = svd.matrixU();
  const Matrix3<Scalar>& V = svd.matrixV();
  Vector3<Scalar> d = Vector3<Scalar>::Ones();
  if ((U * V.transpose()).determinant() < Scalar(0)) d.z() = Scalar(-1);
  const Matrix3<Scalar> R = U * d.asDiagonal() * V.transpose();
  return Se3<Scalar>(R, mu_dst - R * mu_src);
}

template <typename Scalar>
Se3<Scalar> align_rigid(const std::vector<Vector3<Scalar>>& src,
                        const std::vector<Vector3<Scalar>>& dst) {
  return align_rigid<Scalar>(std::span<const Vector3<Scalar>>(src),
                             std::span<const Vector3<Scalar>>(dst));
}

}  // namespace dynodom
