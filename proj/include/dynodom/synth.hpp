#pragma once

// Synthetic dynamic RGB-D sequences with exact ground truth, written in the
// same on-disk layout the loader reads.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dynodom/dataset_io.hpp"
#include "dynodom/types.hpp"

namespace dynodom::synth {

/// Sinusoidal camera trajectory around a base pose. Rotation components are
/// a rotation vector in degrees; frequencies in Hz; phases in radians.
struct CameraPath {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d rotation_deg = Eigen::Vector3d::Zero();
  Eigen::Vector3d position_amplitude = Eigen::Vector3d::Zero();
  Eigen::Vector3d position_frequency = Eigen::Vector3d::Zero();
  Eigen::Vector3d position_phase = Eigen::Vector3d::Zero();
  Eigen::Vector3d rotation_amplitude_deg = Eigen::Vector3d::Zero();
  Eigen::Vector3d rotation_frequency = Eigen::Vector3d::Zero();
  Eigen::Vector3d rotation_phase = Eigen::Vector3d::Zero();

  /// World-from-camera pose at time t seconds (camera axes: x right, y down, z forward).
  Se3d pose_at(double t) const;
};

/// Infinite textured plane; the background is built from these.
struct TexturedPlane {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double texture_cell = 0.1;
  std::uint64_t texture_seed = 0;
};

enum class Shape { kSphere, kBox };

struct ObjectSpec {
  std::string class_name = "object";
  Shape shape = Shape::kSphere;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  /// Sphere: size.x() is the radius. Box: half extents (axis aligned).
  Eigen::Vector3d size = Eigen::Vector3d::Constant(0.2);
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  ///< m/s
  /// When > 0 the object walks back and forth: out for half a period, back for the other half.
  double bounce_period = 0.0;
  /// Spheres only: radial bulge of a spherical cap, amplitude * sin(2 pi f t).
  double deformation_amplitude = 0.0;
  double deformation_frequency = 1.0;
  Eigen::Vector3d deformation_direction = -Eigen::Vector3d::UnitZ();
  double deformation_cap_deg = 60.0;
  double texture_cell = 0.05;

  bool dynamic() const { return velocity.squaredNorm() > 0.0; }
  bool deformable() const { return deformation_amplitude != 0.0; }
  /// Primitive centre at time t.
  Eigen::Vector3d center_at(double t) const;
};

struct SceneSpec {
  int duration = 30;  ///< frames
  double frame_rate = 30.0;
  double start_time = 1000.0;
  CameraIntrinsics intrinsics;
  CameraPath camera_path;
  std::vector<TexturedPlane> background;
  std::vector<ObjectSpec> objects;
  double depth_noise = 0.0;  ///< meters, Gaussian sigma
  std::uint64_t seed = 1;

  void validate() const;
  double time_of(int frame) const { return frame / frame_rate; }
};

SceneSpec scene_from_json_text(const std::string& text);
SceneSpec read_scene_spec(const std::filesystem::path& path);

struct RenderedFrame {
  DepthFrame depth;
  InstanceMaskSet masks;  ///< label = object index + 1
  ColorImage color;
};

/// Z-buffered pinhole render (per-pixel ray casting) at frame index t.
RenderedFrame render_frame(const SceneSpec& spec, const Se3d& pose, int t);

struct ManifestEntry {
  int frame = 0;
  int object_id = 0;  ///< object index + 1, equal to the mask label
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();  ///< world frame
  bool dynamic = false;
  bool deformable = false;
};

struct Manifest {
  std::filesystem::path path;
  std::vector<ManifestEntry> entries;
};

/// Writes rgb/, depth/, masks/, rgb.txt, depth.txt, groundtruth.txt and
/// manifest.txt under `out`. Deterministic for a given spec.
Manifest generate(const SceneSpec& spec, const std::filesystem::path& out);

/// Timestamp token used for frame `frame` (six decimals).
std::string frame_stamp(const SceneSpec& spec, int frame);

}  // namespace dynodom::synth
