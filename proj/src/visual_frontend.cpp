#include "dynodom/visual_frontend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dynodom/rigid_alignment.hpp"

namespace dynodom {
namespace {

constexpr int kCircle[16][2] = {{0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},
                                {2, 2},  {1, 3},  {0, 3},  {-1, 3}, {-2, 2}, {-3, 1},
                                {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3}};

constexpr int kPatchRadius = 15;
constexpr int kSmoothRadius = 2;

struct TestPair {
  int du1, dv1, du2, dv2;
};

// Fixed comparison pattern, isotropic Gaussian around the patch centre.
const std::array<TestPair, 256>& comparison_pattern() {
  static const std::array<TestPair, 256> pattern = [] {
    std::array<TestPair, 256> p{};
    std::mt19937 rng(0x5eed);
    std::normal_distribution<double> g(0.0, (2 * kPatchRadius + 1) / 5.0);
    auto draw = [&] {
      return static_cast<int>(std::clamp(std::lround(g(rng)), -long(kPatchRadius),
                                         long(kPatchRadius)));
    };
    for (auto& t : p) {
      do {
        t = {draw(), draw(), draw(), draw()};
      } while (t.du1 == t.du2 && t.dv1 == t.dv2);
    }
    return p;
  }();
  return pattern;
}

// Box-filtered copy of the image, radius kSmoothRadius, via an integral image.
ImageOf<std::int32_t> box_smooth(const GrayImage& img) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  ImageOf<std::int64_t> integral = ImageOf<std::int64_t>::Zero(h + 1, w + 1);
  for (int v = 0; v < h; ++v) {
    std::int64_t row = 0;
    for (int u = 0; u < w; ++u) {
      row += img(v, u);
      integral(v + 1, u + 1) = integral(v, u + 1) + row;
    }
  }
  ImageOf<std::int32_t> out(h, w);
  for (int v = 0; v < h; ++v) {
    const int v0 = std::max(0, v - kSmoothRadius), v1 = std::min(h - 1, v + kSmoothRadius);
    for (int u = 0; u < w; ++u) {
      const int u0 = std::max(0, u - kSmoothRadius), u1 = std::min(w - 1, u + kSmoothRadius);
      const std::int64_t s = integral(v1 + 1, u1 + 1) - integral(v0, u1 + 1) -
                             integral(v1 + 1, u0) + integral(v0, u0);
      // Scaled mean keeps comparisons exact without division by area.
      out(v, u) = static_cast<std::int32_t>(s * 1024 / ((v1 - v0 + 1) * (u1 - u0 + 1)));
    }
  }
  return out;
}

// Segment-test score, or 0 when the pixel is not a corner.
int corner_score(const GrayImage& img, int u, int v, int t, int arc) {
  const int p = img(v, u);
  int state[16];
  int diff[16];
  for (int k = 0; k < 16; ++k) {
    const int q = img(v + kCircle[k][1], u + kCircle[k][0]);
    diff[k] = q - p;
    state[k] = q > p + t ? 1 : (q < p - t ? -1 : 0);
  }
  int best = 0;
  for (int sign : {1, -1}) {
    int run = 0, longest = 0;
    for (int k = 0; k < 32; ++k) {
      run = state[k & 15] == sign ? run + 1 : 0;
      longest = std::max(longest, std::min(run, 16));
    }
    if (longest < arc) continue;
    int score = 0;
    for (int k = 0; k < 16; ++k) {
      if (state[k] == sign) score += std::abs(diff[k]) - t;
    }
    best = std::max(best, score);
  }
  return best;
}

}  // namespace

FastBriefDetector::FastBriefDetector(FastBriefParams params) : params_(params) {}

std::vector<Keypoint> FastBriefDetector::detect(const GrayImage& image,
                                                const MaskImage& exclusion) const {
  const int h = static_cast<int>(image.rows()), w = static_cast<int>(image.cols());
  if (exclusion.size() != 0 && (exclusion.rows() != h || exclusion.cols() != w)) {
    throw PreconditionError("detect: image and exclusion mask sizes differ");
  }
  if (h <= 2 * kBorder || w <= 2 * kBorder) return {};
  const int t = params_.fast_threshold;

  ImageOf<std::int32_t> score = ImageOf<std::int32_t>::Zero(h, w);
  for (int v = kBorder - 1; v < h - kBorder + 1; ++v) {
    for (int u = kBorder - 1; u < w - kBorder + 1; ++u) {
      // Any arc of 9 or more covers two adjacent compass points.
      const int p = image(v, u);
      int bright = 0, dark = 0;
      for (int k = 0; k < 16; k += 4) {
        const int q = image(v + kCircle[k][1], u + kCircle[k][0]);
        bright += q > p + t;
        dark += q < p - t;
      }
      if (params_.arc_length >= 9 && bright < 2 && dark < 2) continue;
      score(v, u) = corner_score(image, u, v, t, params_.arc_length);
    }
  }

  struct Candidate {
    int u, v, s;
  };
  std::vector<Candidate> candidates;
  for (int v = kBorder; v < h - kBorder; ++v) {
    for (int u = kBorder; u < w - kBorder; ++u) {
      const int s = score(v, u);
      if (s <= 0) continue;
      if (exclusion.size() != 0 && exclusion(v, u)) continue;
      bool is_max = true;
      for (int dv = -1; dv <= 1 && is_max; ++dv) {
        for (int du = -1; du <= 1; ++du) {
          if (du == 0 && dv == 0) continue;
          const int o = score(v + dv, u + du);
          // Ties go to the earlier pixel in raster order.
          if (o > s || (o == s && (dv < 0 || (dv == 0 && du < 0)))) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back({u, v, s});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.s > b.s; });

  const int cell = std::max(1, params_.grid_cell);
  const int gw = (w + cell - 1) / cell, gh = (h + cell - 1) / cell;
  const int per_cell =
      std::max(1, (2 * params_.max_keypoints + gw * gh - 1) / std::max(1, gw * gh));
  std::vector<int> occupancy(std::size_t(gw) * gh, 0);
  std::vector<Candidate> kept;
  for (const auto& c : candidates) {
    if (static_cast<int>(kept.size()) >= params_.max_keypoints) break;
    int& occ = occupancy[std::size_t(c.v / cell) * gw + c.u / cell];
    if (occ >= per_cell) continue;
    ++occ;
    kept.push_back(c);
  }

  const ImageOf<std::int32_t> smooth = box_smooth(image);
  const auto& pattern = comparison_pattern();
  std::vector<Keypoint> out;
  out.reserve(kept.size());
  for (const auto& c : kept) {
    Keypoint kp;
    kp.u = c.u;
    kp.v = c.v;
    kp.response = static_cast<float>(c.s);
    for (std::size_t b = 0; b < pattern.size(); ++b) {
      const TestPair& tp = pattern[b];
      if (smooth(c.v + tp.dv1, c.u + tp.du1) < smooth(c.v + tp.dv2, c.u + tp.du2)) {
        kp.descriptor[b / 64] |= std::uint64_t{1} << (b % 64);
      }
    }
    out.push_back(kp);
  }
  return out;
}

MaskImage dilate_mask(const MaskImage& mask, int radius) {
  if (radius <= 0 || mask.size() == 0) return mask;
  const int h = static_cast<int>(mask.rows()), w = static_cast<int>(mask.cols());
  // Separable: horizontal then vertical running window.
  MaskImage tmp = MaskImage::Zero(h, w);
  for (int v = 0; v < h; ++v) {
    int last = -1'000'000;
    for (int u = 0; u < w + radius; ++u) {
      if (u < w && mask(v, u)) last = u;
      const int target = u - radius;
      if (target >= 0 && target < w) {
        // Nearest set pixel to the left within 2*radius of u covers target.
        if (u - last <= 2 * radius) tmp(v, target) = 1;
      }
    }
  }
  MaskImage out = MaskImage::Zero(h, w);
  for (int u = 0; u < w; ++u) {
    int last = -1'000'000;
    for (int v = 0; v < h + radius; ++v) {
      if (v < h && tmp(v, u)) last = v;
      const int target = v - radius;
      if (target >= 0 && target < h && v - last <= 2 * radius) out(target, u) = 1;
    }
  }
  return out;
}

std::vector<Keypoint> detect_keypoints(const GrayImage& image, const MaskImage& exclusion_mask,
                                       const FeatureDetector* detector) {
  static const FastBriefDetector default_detector;
  const FeatureDetector& d = detector ? *detector : default_detector;
  std::vector<Keypoint> kps = d.detect(image, exclusion_mask);
  if (exclusion_mask.size() != 0) {
    std::erase_if(kps, [&](const Keypoint& k) {
      const int u = static_cast<int>(std::lround(k.u));
      const int v = static_cast<int>(std::lround(k.v));
      return u < 0 || v < 0 || u >= exclusion_mask.cols() || v >= exclusion_mask.rows() ||
             exclusion_mask(v, u) != 0;
    });
  }
  return kps;
}

IndexPairs match_descriptors(const std::vector<Keypoint>& a, const std::vector<Keypoint>& b,
                             double ratio, double max_pixel_distance) {
  if (!(ratio > 0 && ratio <= 1)) throw PreconditionError("match_descriptors: ratio must be in (0, 1]");
  const double r2 = max_pixel_distance * max_pixel_distance;
  const bool gated = std::isfinite(max_pixel_distance);
  auto near = [&](const Keypoint& x, const Keypoint& y) {
    if (!gated) return true;
    const double du = x.u - y.u, dv = x.v - y.v;
    return du * du + dv * dv <= r2;
  };

  constexpr int kNone = std::numeric_limits<int>::max();
  std::vector<int> best_ab(a.size(), -1), best_ba(b.size(), -1);
  std::vector<int> d1_ab(a.size(), kNone), d2_ab(a.size(), kNone);
  std::vector<int> d_ba(b.size(), kNone);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (!near(a[i], b[j])) continue;
      const int d = hamming_distance(a[i].descriptor, b[j].descriptor);
      if (d < d1_ab[i]) {
        d2_ab[i] = d1_ab[i];
        d1_ab[i] = d;
        best_ab[i] = static_cast<int>(j);
      } else if (d < d2_ab[i]) {
        d2_ab[i] = d;
      }
      if (d < d_ba[j]) {
        d_ba[j] = d;
        best_ba[j] = static_cast<int>(i);
      }
    }
  }
  IndexPairs out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int j = best_ab[i];
    if (j < 0 || best_ba[j] != static_cast<int>(i)) continue;
    if (d2_ab[i] != kNone && !(d1_ab[i] < ratio * d2_ab[i])) continue;
    out.emplace_back(i, static_cast<std::size_t>(j));
  }
  return out;
}

Eigen::Matrix3d estimate_fundamental(std::span<const PixelMatch> matches,
                                     const CameraIntrinsics& intr) {
  if (matches.size() < 8) throw PreconditionError("estimate_fundamental: insufficient matches");
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  K(0, 0) = intr.fx;
  K(1, 1) = intr.fy;
  K(0, 2) = intr.cx;
  K(1, 2) = intr.cy;
  const Eigen::Matrix3d Kinv = K.inverse();

  Eigen::Matrix<double, 9, 9> AtA = Eigen::Matrix<double, 9, 9>::Zero();
  for (const auto& m : matches) {
    const Eigen::Vector3d x1 = Kinv * m.prev.homogeneous();
    const Eigen::Vector3d x2 = Kinv * m.curr.homogeneous();
    Eigen::Matrix<double, 9, 1> row;
    row << x2.x() * x1.x(), x2.x() * x1.y(), x2.x(), x2.y() * x1.x(), x2.y() * x1.y(),
        x2.y(), x1.x(), x1.y(), 1.0;
    AtA.noalias() += row * row.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> eig(AtA);
  const Eigen::Matrix<double, 9, 1> f = eig.eigenvectors().col(0);
  Eigen::Matrix3d E;
  E << f(0), f(1), f(2), f(3), f(4), f(5), f(6), f(7), f(8);

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = svd.singularValues();
  s(2) = 0.0;
  E = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  return Kinv.transpose() * E * Kinv;
}

double sampson_distance(const Eigen::Matrix3d& F, const PixelMatch& m) {
  const Eigen::Vector3d x1 = m.prev.homogeneous();
  const Eigen::Vector3d x2 = m.curr.homogeneous();
  const Eigen::Vector3d Fx1 = F * x1;
  const Eigen::Vector3d Ftx2 = F.transpose() * x2;
  const double num = x2.dot(Fx1);
  const double den = Fx1.x() * Fx1.x() + Fx1.y() * Fx1.y() + Ftx2.x() * Ftx2.x() +
                     Ftx2.y() * Ftx2.y();
  if (den <= 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(num) / std::sqrt(den);
}

std::vector<std::size_t> epipolar_filter(const std::vector<PixelMatch>& matches,
                                         const CameraIntrinsics& intr,
                                         const RansacParams& params) {
  params.validate();
  if (matches.size() < 8) throw PreconditionError("epipolar_filter: insufficient matches");
  const std::size_t n = matches.size();
  std::mt19937_64 rng(params.seed);

  auto inliers_of = [&](const Eigen::Matrix3d& F) {
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < n; ++i) {
      if (sampson_distance(F, matches[i]) <= params.inlier_threshold) in.push_back(i);
    }
    return in;
  };

  std::vector<std::size_t> best;
  std::array<PixelMatch, 8> sample;
  std::vector<std::size_t> idx(n);
  for (int it = 0; it < params.iterations; ++it) {
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t k = 0; k < 8; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, n - 1);
      std::swap(idx[k], idx[pick(rng)]);
      sample[k] = matches[idx[k]];
    }
    auto in = inliers_of(estimate_fundamental(sample, intr));
    if (in.size() > best.size()) best = std::move(in);
    if (best.size() == n) break;
  }
  if (best.size() >= 8) {
    std::vector<PixelMatch> support;
    for (std::size_t i : best) support.push_back(matches[i]);
    auto refined = inliers_of(estimate_fundamental(support, intr));
    if (refined.size() >= best.size()) best = std::move(refined);
  }
  return best;
}

std::vector<Correspondence3d> lift_matches_to_3d(const std::vector<PixelMatch>& matches,
                                                 const DepthFrame& depth_prev,
                                                 const DepthFrame& depth_curr,
                                                 const CameraIntrinsics& intr,
                                                 const GaussianKernelParams& denoise,
                                                 std::vector<std::size_t>* kept) {
  const GaussianKernel kernel(denoise);
  std::vector<Correspondence3d> out;
  if (kept) kept->clear();
  auto lift = [&](const DepthFrame& depth, const Eigen::Vector2d& px) -> std::optional<Point3> {
    const int u = static_cast<int>(std::lround(px.x()));
    const int v = static_cast<int>(std::lround(px.y()));
    if (!depth.contains(u, v)) return std::nullopt;
    const auto z = denoise_depth_at(depth, u, v, kernel);
    if (!z) return std::nullopt;
    return backproject<double>(px.x(), px.y(), *z, intr);
  };
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const auto a = lift(depth_prev, matches[i].prev);
    if (!a) continue;
    const auto b = lift(depth_curr, matches[i].curr);
    if (!b) continue;
    out.push_back({*a, *b});
    if (kept) kept->push_back(i);
  }
  return out;
}

PoseEstimate estimate_pose_ransac(const std::vector<Correspondence3d>& corrs,
                                  const RansacParams& params) {
  params.validate();
  const std::size_t n = corrs.size();
  if (n < 3) throw PreconditionError("estimate_pose_ransac: at least 3 correspondences required");
  const double thr2 = params.inlier_threshold * params.inlier_threshold;

  auto inliers_of = [&](const Se3d& T) {
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < n; ++i) {
      if ((T * corrs[i].p_prev - corrs[i].p_curr).squaredNorm() <= thr2) in.push_back(i);
    }
    return in;
  };
  auto fit = [&](const std::vector<std::size_t>& ids) {
    std::vector<Point3> src, dst;
    src.reserve(ids.size());
    dst.reserve(ids.size());
    for (std::size_t i : ids) {
      src.push_back(corrs[i].p_prev);
      dst.push_back(corrs[i].p_curr);
    }
    return align_rigid(src, dst);
  };

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> best;
  for (int it = 0; it < params.iterations; ++it) {
    std::size_t s[3];
    s[0] = pick(rng);
    do s[1] = pick(rng); while (s[1] == s[0]);
    do s[2] = pick(rng); while (s[2] == s[0] || s[2] == s[1]);
    const Point3 e1 = corrs[s[1]].p_prev - corrs[s[0]].p_prev;
    const Point3 e2 = corrs[s[2]].p_prev - corrs[s[0]].p_prev;
    if (e1.cross(e2).squaredNorm() < 1e-12) continue;  // collinear sample
    auto in = inliers_of(fit({s[0], s[1], s[2]}));
    if (in.size() > best.size()) best = std::move(in);
    if (best.size() == n) break;
  }
  if (best.size() < 3 || best.size() < static_cast<std::size_t>(params.min_inliers)) {
    throw NumericalError("estimate_pose_ransac: degenerate registration (" +
                         std::to_string(best.size()) + " inliers)");
  }

  PoseEstimate est;
  est.pose = fit(best);
  for (int round = 0; round < 3; ++round) {
    auto in = inliers_of(est.pose);
    if (in.size() < 3 || in == best) break;
    best = std::move(in);
    est.pose = fit(best);
  }
  est.inliers = inliers_of(est.pose);
  if (est.inliers.size() < static_cast<std::size_t>(params.min_inliers)) {
    throw NumericalError("estimate_pose_ransac: degenerate registration (" +
                         std::to_string(est.inliers.size()) + " inliers after refit)");
  }
  return est;
}

}  // namespace dynodom
