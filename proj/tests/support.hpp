#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "dynodom/dataset_io.hpp"
#include "dynodom/se3.hpp"
#include "dynodom/synth.hpp"

namespace testing_support {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("dynodom_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline Eigen::Vector3d uniform3(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(rng), u(rng), u(rng)};
}

inline dynodom::Se3d random_pose(std::mt19937_64& rng, double t_scale = 1.0, double r_scale = 1.0) {
  dynodom::Vector6d xi;
  xi.head<3>() = uniform3(rng, -t_scale, t_scale);
  xi.tail<3>() = uniform3(rng, -r_scale, r_scale);
  return dynodom::Se3d::exp(xi);
}

inline std::vector<Eigen::Vector3d> random_cloud(std::mt19937_64& rng, std::size_t n,
                                                 double lo = 0.0, double hi = 1.0) {
  std::vector<Eigen::Vector3d> out(n);
  for (auto& p : out) p = uniform3(rng, lo, hi);
  return out;
}

/// Smooth random-walk trajectory with `n` poses at 30 Hz from t0.
inline dynodom::Trajectory random_trajectory(std::mt19937_64& rng, std::size_t n, double t0 = 0.0) {
  dynodom::Trajectory traj;
  dynodom::Se3d pose = random_pose(rng, 1.0, 0.5);
  for (std::size_t i = 0; i < n; ++i) {
    traj.poses.push_back({t0 + static_cast<double>(i) / 30.0, pose});
    pose = pose * random_pose(rng, 0.05, 0.03);
  }
  return traj;
}

/// Small, quick scene: 80x60 camera in a textured box with two objects.
inline dynodom::synth::SceneSpec tiny_scene(int frames) {
  dynodom::synth::SceneSpec spec;
  spec.duration = frames;
  spec.intrinsics = {65.625, 65.625, 39.5, 29.5, 5000.0, 80, 60};
  spec.camera_path.position_amplitude = {0.05, 0.02, 0.02};
  spec.camera_path.position_frequency = {0.5, 0.5, 0.5};
  spec.background = {{{0, 0, 4}, {0, 0, -1}, 0.2, 1}, {{0, 1.2, 0}, {0, -1, 0}, 0.2, 2}};
  dynodom::synth::ObjectSpec walker;
  walker.class_name = "person";
  walker.shape = dynodom::synth::Shape::kBox;
  walker.center = {-0.4, 0.0, 2.5};
  walker.size = {0.2, 0.4, 0.1};
  walker.velocity = {0.3, 0, 0};
  dynodom::synth::ObjectSpec ball;
  ball.class_name = "ball";
  ball.center = {0.5, 0.2, 3.0};
  ball.size = Eigen::Vector3d::Constant(0.3);
  spec.objects = {walker, ball};
  return spec;
}

}  // namespace testing_support
