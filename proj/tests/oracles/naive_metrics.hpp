#pragma once

// ATE and RPE written out directly: Horn's quaternion alignment, 4x4 matrices
// for relative motions. Trajectories are (t, 4x4 pose) lists that are already
// associated one-to-one.

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct Stamped {
  double t;
  Eigen::Matrix4d T;
};

struct Stats {
  double rmse = 0.0;
  double sd = 0.0;
};

inline Stats stats(const std::vector<double>& e) {
  double sum = 0.0, sum2 = 0.0;
  for (double x : e) {
    sum += x;
    sum2 += x * x;
  }
  const double n = static_cast<double>(e.size());
  const double mean = sum / n;
  double var = 0.0;
  for (double x : e) var += (x - mean) * (x - mean);
  return {std::sqrt(sum2 / n), std::sqrt(var / n)};
}

/// Rotation R and translation t minimizing sum |R a_i + t - b_i|^2 (Horn 1987).
inline Eigen::Matrix4d horn(const std::vector<Eigen::Vector3d>& a,
                            const std::vector<Eigen::Vector3d>& b) {
  Eigen::Vector3d ma = Eigen::Vector3d::Zero(), mb = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= double(a.size());
  mb /= double(b.size());
  Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) S += (a[i] - ma) * (b[i] - mb).transpose();
  const double sxx = S(0, 0), sxy = S(0, 1), sxz = S(0, 2);
  const double syx = S(1, 0), syy = S(1, 1), syz = S(1, 2);
  const double szx = S(2, 0), szy = S(2, 1), szz = S(2, 2);
  Eigen::Matrix4d N;
  N << sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
       syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
       szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
       sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(N);
  const Eigen::Vector4d q = es.eigenvectors().col(3);
  const Eigen::Matrix3d R = Eigen::Quaterniond(q(0), q(1), q(2), q(3)).normalized().toRotationMatrix();
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  T.topLeftCorner<3, 3>() = R;
  T.topRightCorner<3, 1>() = mb - R * ma;
  return T;
}

inline Stats ate(const std::vector<Stamped>& est, const std::vector<Stamped>& gt) {
  std::vector<Eigen::Vector3d> a, b;
  for (std::size_t i = 0; i < est.size(); ++i) {
    a.push_back(est[i].T.topRightCorner<3, 1>());
    b.push_back(gt[i].T.topRightCorner<3, 1>());
  }
  const Eigen::Matrix4d A = horn(a, b);
  std::vector<double> e;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Eigen::Vector3d p = A.topLeftCorner<3, 3>() * a[i] + A.topRightCorner<3, 1>();
    e.push_back((p - b[i]).norm());
  }
  return stats(e);
}

inline double rotation_angle_deg(const Eigen::Matrix3d& R) {
  const Eigen::Vector3d axis(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  const double angle = std::atan2(0.5 * axis.norm(), 0.5 * (R.trace() - 1.0));
  return angle * 180.0 / std::numbers::pi;
}

struct Rpe {
  Stats trans;
  Stats rot;
};

inline Rpe rpe(const std::vector<Stamped>& est, const std::vector<Stamped>& gt, std::size_t delta) {
  std::vector<double> et, er;
  for (std::size_t i = 0; i + delta < est.size(); ++i) {
    const Eigen::Matrix4d g = gt[i].T.inverse() * gt[i + delta].T;
    const Eigen::Matrix4d e = est[i].T.inverse() * est[i + delta].T;
    const Eigen::Matrix4d d = g.inverse() * e;
    et.push_back(d.topRightCorner<3, 1>().norm());
    er.push_back(rotation_angle_deg(d.topLeftCorner<3, 3>()));
  }
  return {stats(et), stats(er)};
}

}  // namespace oracle
