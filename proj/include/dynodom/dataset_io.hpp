#pragma once

// TUM RGB-D sequence ingestion, instance-mask sidecars and trajectory files.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dynodom/types.hpp"

namespace dynodom {

struct InstanceEntry {
  std::uint16_t id = 0;
  std::string class_name;
  double score = 1.0;
};

/// Segmentation output for one frame: a label image plus one entry per label.
struct InstanceMaskSet {
  LabelImage label_map;
  std::vector<InstanceEntry> entries;

  const InstanceEntry* find(std::uint16_t id) const;
  /// Throws ParseError if a nonzero label lacks an entry or ids repeat.
  void validate() const;
};

struct TimedPose {
  double timestamp = 0.0;
  Se3d pose;
};

struct Trajectory {
  std::vector<TimedPose> poses;

  std::size_t size() const { return poses.size(); }
  bool empty() const { return poses.empty(); }
  std::vector<double> timestamps() const;
  /// Strictly increasing timestamps and orthonormal rotations.
  void validate() const;
};

struct FrameBundle {
  double timestamp = 0.0;
  /// Timestamp token as written in rgb.txt; mask sidecars are keyed by it.
  std::string stamp;
  ColorImage color;
  DepthFrame depth;
  std::optional<InstanceMaskSet> masks;
  std::optional<Se3d> gt_pose;
};

using IndexPairs = std::vector<std::pair<std::size_t, std::size_t>>;

/// Greedy nearest-timestamp matching; each index used at most once and every
/// pair satisfies |a_i - b_j| <= max_diff. Pairs are returned ordered by i.
IndexPairs associate_timestamps(std::span<const double> a, std::span<const double> b,
                                double max_diff);

/// Index-file entry ("timestamp filename").
struct IndexEntry {
  double timestamp = 0.0;
  std::string stamp;
  std::string file;
};

std::vector<IndexEntry> read_index_file(const std::filesystem::path& path);

/// Lazily loads frames of a TUM-layout directory. Opening parses the index
/// files and associates them; frames are decoded on demand.
class SequenceReader {
 public:
  SequenceReader(const std::filesystem::path& dir, const CameraIntrinsics& intr,
                 double max_diff = 0.02);

  std::size_t size() const { return frames_.size(); }
  FrameBundle load(std::size_t index) const;
  const std::optional<Trajectory>& ground_truth() const { return ground_truth_; }
  double timestamp(std::size_t index) const { return frames_.at(index).rgb.timestamp; }
  const std::filesystem::path& directory() const { return dir_; }

 private:
  struct Record {
    IndexEntry rgb;
    IndexEntry depth;
    std::optional<Se3d> gt_pose;
  };

  std::filesystem::path dir_;
  CameraIntrinsics intr_;
  std::vector<Record> frames_;
  std::optional<Trajectory> ground_truth_;
};

/// Eagerly loads every associated frame. Prefer SequenceReader for long runs.
std::vector<FrameBundle> load_sequence(const std::filesystem::path& dir,
                                       const CameraIntrinsics& intr, double max_diff = 0.02);

/// Raw 16-bit depth to meters; zero becomes missing.
DepthFrame depth_from_raw(const ImageOf<std::uint16_t>& raw, double depth_scale);
/// Meters to raw 16-bit depth; missing and out-of-range samples become zero.
ImageOf<std::uint16_t> depth_to_raw(const DepthFrame& depth, double depth_scale);

InstanceMaskSet read_mask_set(const std::filesystem::path& label_png,
                              const std::filesystem::path& sidecar_txt);
void write_mask_set(const InstanceMaskSet& masks, const std::filesystem::path& label_png,
                    const std::filesystem::path& sidecar_txt);

Trajectory read_trajectory(const std::filesystem::path& path);
void write_trajectory(const Trajectory& traj, const std::filesystem::path& path);

/// Shortest text form of a double that parses back to the same value.
std::string format_double(double value);

}  // namespace dynodom
