#include "dynodom/evaluation.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>

#include "dynodom/rigid_alignment.hpp"

namespace dynodom {
namespace {

std::vector<MatchedPose> match(const Trajectory& est, const Trajectory& gt, double max_diff) {
  const auto ta = est.timestamps();
  const auto tb = gt.timestamps();
  std::vector<MatchedPose> pairs;
  for (const auto& [i, j] : associate_timestamps(ta, tb, max_diff)) {
    pairs.push_back({est.poses[i].timestamp, est.poses[i].pose, gt.poses[j].pose});
  }
  return pairs;
}

double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

void relative_errors(const MatchedPose& a, const MatchedPose& b, RpeResult& out) {
  const Se3d gt_rel = a.ground_truth.inverse() * b.ground_truth;
  const Se3d est_rel = a.estimate.inverse() * b.estimate;
  const Se3d err = gt_rel.inverse() * est_rel;
  out.translation_errors.push_back(err.translation().norm());
  out.rotation_errors.push_back(rad2deg(err.angle()));
}

}  // namespace

ErrorStats error_stats(const std::vector<double>& errors) {
  ErrorStats s;
  s.count = errors.size();
  if (errors.empty()) return s;
  double sum = 0.0, sum2 = 0.0;
  for (double e : errors) {
    sum += e;
    sum2 += e * e;
  }
  const double n = static_cast<double>(errors.size());
  s.mean = sum / n;
  s.rmse = std::sqrt(sum2 / n);
  double var = 0.0;
  for (double e : errors) var += (e - s.mean) * (e - s.mean);
  s.sd = std::sqrt(var / n);
  return s;
}

Alignment align_trajectories(const Trajectory& est, const Trajectory& gt, double max_diff) {
  Alignment a;
  a.pairs = match(est, gt, max_diff);
  if (a.pairs.size() < 3) {
    throw PreconditionError("timestamp association produced " + std::to_string(a.pairs.size()) +
                            " matched pairs; at least 3 are required");
  }
  std::vector<Point3> src, dst;
  for (const auto& p : a.pairs) {
    src.push_back(p.estimate.translation());
    dst.push_back(p.ground_truth.translation());
  }
  a.transform = align_rigid(src, dst);
  return a;
}

AteResult ate(const Trajectory& est, const Trajectory& gt, double max_diff) {
  AteResult r;
  r.alignment = align_trajectories(est, gt, max_diff);
  for (const auto& p : r.alignment.pairs) {
    r.errors.push_back(
        (r.alignment.transform * p.estimate.translation() - p.ground_truth.translation()).norm());
  }
  r.stats = error_stats(r.errors);
  return r;
}

RpeResult rpe(const Trajectory& est, const Trajectory& gt, std::size_t delta, double max_diff) {
  if (delta < 1) throw PreconditionError("rpe: delta must be >= 1");
  const auto pairs = match(est, gt, max_diff);
  if (pairs.size() < delta + 1) {
    throw PreconditionError("rpe: " + std::to_string(pairs.size()) +
                            " matched pairs is too few for delta " + std::to_string(delta));
  }
  RpeResult r;
  for (std::size_t i = 0; i + delta < pairs.size(); ++i) relative_errors(pairs[i], pairs[i + delta], r);
  r.translation = error_stats(r.translation_errors);
  r.rotation = error_stats(r.rotation_errors);
  return r;
}

RpeResult rpe_per_second(const Trajectory& est, const Trajectory& gt, double delta_seconds,
                         double max_diff) {
  if (!(delta_seconds > 0)) throw PreconditionError("rpe: delta_seconds must be > 0");
  const auto pairs = match(est, gt, max_diff);
  RpeResult r;
  std::size_t j = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double target = pairs[i].timestamp + delta_seconds;
    if (target > pairs.back().timestamp + max_diff) break;
    j = std::max(j, i + 1);
    while (j + 1 < pairs.size() &&
           std::abs(pairs[j + 1].timestamp - target) <= std::abs(pairs[j].timestamp - target)) {
      ++j;
    }
    if (j >= pairs.size()) break;
    relative_errors(pairs[i], pairs[j], r);
  }
  if (r.translation_errors.empty()) {
    throw PreconditionError("rpe: trajectory shorter than the time delta");
  }
  r.translation = error_stats(r.translation_errors);
  r.rotation = error_stats(r.rotation_errors);
  return r;
}

MetricReport evaluate(const Trajectory& est, const Trajectory& gt,
                      const EvaluationOptions& options) {
  const AteResult a = ate(est, gt, options.max_diff);
  const RpeResult r = options.per_second
                          ? rpe_per_second(est, gt, static_cast<double>(options.delta), options.max_diff)
                          : rpe(est, gt, options.delta, options.max_diff);
  MetricReport m;
  m.ate_rmse = a.stats.rmse;
  m.ate_sd = a.stats.sd;
  m.rpe_trans_rmse = r.translation.rmse;
  m.rpe_trans_sd = r.translation.sd;
  m.rpe_rot_rmse = r.rotation.rmse;
  m.rpe_rot_sd = r.rotation.sd;
  m.matched_pairs = a.alignment.pairs.size();
  return m;
}

void write_report_csv(const MetricReport& m, std::ostream& out) {
  out << "metric,value\n" << std::setprecision(17);
  out << "ate_rmse," << m.ate_rmse << '\n'
      << "ate_sd," << m.ate_sd << '\n'
      << "rpe_trans_rmse," << m.rpe_trans_rmse << '\n'
      << "rpe_trans_sd," << m.rpe_trans_sd << '\n'
      << "rpe_rot_rmse," << m.rpe_rot_rmse << '\n'
      << "rpe_rot_sd," << m.rpe_rot_sd << '\n'
      << "matched_pairs," << m.matched_pairs << '\n';
}

void write_report_text(const MetricReport& m, std::ostream& out) {
  out << std::fixed << std::setprecision(6);
  out << "matched pairs        " << m.matched_pairs << '\n'
      << "ATE  rmse / sd       " << m.ate_rmse << " / " << m.ate_sd << " m\n"
      << "RPE  trans rmse / sd " << m.rpe_trans_rmse << " / " << m.rpe_trans_sd << " m\n"
      << "RPE  rot rmse / sd   " << m.rpe_rot_rmse << " / " << m.rpe_rot_sd << " deg\n";
  out << std::defaultfloat;
}

void write_pose_errors_csv(const AteResult& result, std::ostream& out) {
  out << "t,gt_x,gt_y,gt_z,est_x,est_y,est_z,err\n" << std::setprecision(17);
  for (std::size_t i = 0; i < result.alignment.pairs.size(); ++i) {
    const auto& p = result.alignment.pairs[i];
    const Point3 g = p.ground_truth.translation();
    const Point3 e = result.alignment.transform * p.estimate.translation();
    out << p.timestamp << ',' << g.x() << ',' << g.y() << ',' << g.z() << ',' << e.x() << ','
        << e.y() << ',' << e.z() << ',' << result.errors[i] << '\n';
  }
}

}  // namespace dynodom
