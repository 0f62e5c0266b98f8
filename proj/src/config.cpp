#include "dynodom/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "dynodom/dataset_io.hpp"

namespace dynodom {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("config: bad value '" + text + "' for key '" + key + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw ParseError("config: bad boolean '" + text + "' for key '" + key + "'");
}

struct Field {
  std::string key;
  std::string doc;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T, typename Access>
Field number(std::string key, std::string doc, Access access) {
  return {key, std::move(doc),
          [key, access](RunConfig& c, const std::string& v) {
            access(c) = parse_number<T>(key, v);
          },
          [access](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(access(const_cast<RunConfig&>(c)));
            } else {
              return std::to_string(access(const_cast<RunConfig&>(c)));
            }
          }};
}

template <typename Access>
Field flag(std::string key, std::string doc, Access access) {
  return {key, std::move(doc),
          [key, access](RunConfig& c, const std::string& v) { access(c) = parse_bool(key, v); },
          [access](const RunConfig& c) {
            return std::string(access(const_cast<RunConfig&>(c)) ? "true" : "false");
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      number<double>("fx", "focal length x, pixels", [](RunConfig& c) -> auto& { return c.intrinsics.fx; }),
      number<double>("fy", "focal length y, pixels", [](RunConfig& c) -> auto& { return c.intrinsics.fy; }),
      number<double>("cx", "principal point x, pixels", [](RunConfig& c) -> auto& { return c.intrinsics.cx; }),
      number<double>("cy", "principal point y, pixels", [](RunConfig& c) -> auto& { return c.intrinsics.cy; }),
      number<int>("width", "image width, pixels", [](RunConfig& c) -> auto& { return c.intrinsics.width; }),
      number<int>("height", "image height, pixels", [](RunConfig& c) -> auto& { return c.intrinsics.height; }),
      number<double>("depth_scale", "raw depth units per meter", [](RunConfig& c) -> auto& { return c.intrinsics.depth_scale; }),
      number<double>("max_time_diff", "rgb/depth/ground-truth association tolerance, seconds", [](RunConfig& c) -> auto& { return c.max_time_diff; }),
      number<int>("kernel_k", "depth denoising half window; the window is (2k+1)^2", [](RunConfig& c) -> auto& { return c.kernel.k; }),
      number<double>("kernel_sigma", "depth denoising Gaussian sigma, pixels", [](RunConfig& c) -> auto& { return c.kernel.sigma; }),
      number<double>("voxel_size", "instance cloud voxel size, meters", [](RunConfig& c) -> auto& { return c.voxel.voxel_size; }),
      number<double>("dbscan_eps", "DBSCAN neighbourhood radius, meters", [](RunConfig& c) -> auto& { return c.dbscan.eps; }),
      number<int>("dbscan_min_pts", "DBSCAN core threshold (self included)", [](RunConfig& c) -> auto& { return c.dbscan.min_pts; }),
      number<int>("min_instance_pixels", "instances with fewer masked pixels are ignored", [](RunConfig& c) -> auto& { return c.min_instance_pixels; }),
      number<double>("track_gate", "same-class centroid association gate, meters", [](RunConfig& c) -> auto& { return c.track_gate; }),
      number<int>("max_missed_frames", "frames a track survives unobserved", [](RunConfig& c) -> auto& { return c.max_missed_frames; }),
      number<double>("dist_threshold", "T_d: pairwise distance change that casts a vote, meters per frame", [](RunConfig& c) -> auto& { return c.voting.dist_threshold; }),
      number<int>("vote_threshold", "T_v: votes needed to call an object dynamic", [](RunConfig& c) -> auto& { return c.voting.vote_threshold; }),
      number<double>("frame_rate", "sequence rate in Hz; 0 measures it from the timestamps", [](RunConfig& c) -> auto& { return c.voting.frame_rate; }),
      number<double>("min_fps", "a warning is printed below this rate", [](RunConfig& c) -> auto& { return c.voting.min_fps; }),
      number<double>("deform_threshold", "T_c: centred Chamfer distance of a deforming object, square meters", [](RunConfig& c) -> auto& { return c.chamfer.deform_threshold; }),
      number<std::size_t>("chamfer_max_points", "per-cloud subsampling bound for the Chamfer check", [](RunConfig& c) -> auto& { return c.chamfer.max_points; }),
      number<std::uint64_t>("chamfer_seed", "subsampling seed", [](RunConfig& c) -> auto& { return c.chamfer.seed; }),
      {"dynamic_classes", "comma separated a-priori dynamic classes (empty for none)",
       [](RunConfig& c, const std::string& v) {
         c.dynamic_classes.clear();
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) {
           item = trim(item);
           if (!item.empty()) c.dynamic_classes.insert(item);
         }
       },
       [](const RunConfig& c) {
         std::string out;
         for (const auto& s : c.dynamic_classes) out += (out.empty() ? "" : ",") + s;
         return out;
       }},
      number<int>("fast_threshold", "corner segment-test intensity step", [](RunConfig& c) -> auto& { return c.features.fast_threshold; }),
      number<int>("fast_arc", "contiguous circle pixels for a corner", [](RunConfig& c) -> auto& { return c.features.arc_length; }),
      number<int>("max_keypoints", "keypoints kept per frame", [](RunConfig& c) -> auto& { return c.features.max_keypoints; }),
      number<int>("grid_cell", "keypoint bucketing cell, pixels", [](RunConfig& c) -> auto& { return c.features.grid_cell; }),
      number<double>("match_ratio", "descriptor ratio test", [](RunConfig& c) -> auto& { return c.match_ratio; }),
      number<double>("match_max_pixels", "frame-to-frame match search radius, pixels", [](RunConfig& c) -> auto& { return c.match_max_pixels; }),
      number<int>("mask_dilation", "exclusion mask dilation, pixels", [](RunConfig& c) -> auto& { return c.mask_dilation; }),
      number<int>("ransac_iterations", "3D-3D RANSAC iterations", [](RunConfig& c) -> auto& { return c.ransac.iterations; }),
      number<double>("ransac_threshold", "3D-3D inlier distance, meters", [](RunConfig& c) -> auto& { return c.ransac.inlier_threshold; }),
      number<int>("ransac_min_inliers", "fewer inliers means no pose for the frame", [](RunConfig& c) -> auto& { return c.ransac.min_inliers; }),
      number<std::uint64_t>("seed", "RANSAC seed", [](RunConfig& c) -> auto& { return c.ransac.seed; }),
      number<int>("epipolar_iterations", "epipolar RANSAC iterations", [](RunConfig& c) -> auto& { return c.epipolar_iterations; }),
      number<double>("epipolar_threshold", "Sampson distance inlier bound, pixels", [](RunConfig& c) -> auto& { return c.epipolar_threshold; }),
      number<double>("odometry_weight", "information weight of odometry edges", [](RunConfig& c) -> auto& { return c.odometry_weight; }),
      number<double>("closure_weight", "information weight of loop-closure edges", [](RunConfig& c) -> auto& { return c.closure_weight; }),
      number<double>("loop_radius", "loop candidate search radius, meters", [](RunConfig& c) -> auto& { return c.loop_radius; }),
      number<int>("loop_min_gap", "minimum frame gap of a loop candidate", [](RunConfig& c) -> auto& { return c.loop_min_gap; }),
      number<int>("loop_min_inliers", "registration inliers needed to accept a closure", [](RunConfig& c) -> auto& { return c.loop_min_inliers; }),
      number<int>("pgo_max_iterations", "Levenberg-Marquardt iteration cap", [](RunConfig& c) -> auto& { return c.pgo_max_iterations; }),
      number<double>("pgo_damping", "initial Levenberg-Marquardt damping", [](RunConfig& c) -> auto& { return c.pgo_damping; }),
      number<std::size_t>("eval_delta", "RPE frame offset used in the run summary", [](RunConfig& c) -> auto& { return c.eval_delta; }),
      flag("enable_voting", "Hough voting on centroid distances", [](RunConfig& c) -> auto& { return c.enable_voting; }),
      flag("enable_intra_motion", "Chamfer deformation check", [](RunConfig& c) -> auto& { return c.enable_intra_motion; }),
      flag("enable_outlier_rejection", "voxel + DBSCAN cleaning of instance clouds", [](RunConfig& c) -> auto& { return c.enable_outlier_rejection; }),
      flag("enable_pgo", "loop closures and pose graph optimization", [](RunConfig& c) -> auto& { return c.enable_pgo; }),
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  intrinsics.validate();
  if (!(max_time_diff > 0)) throw PreconditionError("config: max_time_diff must be > 0");
  kernel.validate();
  voxel.validate();
  dbscan.validate();
  if (!(track_gate > 0)) throw PreconditionError("config: track_gate must be > 0");
  if (max_missed_frames < 0) throw PreconditionError("config: max_missed_frames must be >= 0");
  if (!(voting.dist_threshold > 0)) throw PreconditionError("config: dist_threshold must be > 0");
  if (voting.vote_threshold < 1) throw PreconditionError("config: vote_threshold must be >= 1");
  if (voting.frame_rate < 0) throw PreconditionError("config: frame_rate must be >= 0");
  chamfer.validate();
  if (min_instance_pixels < 1) throw PreconditionError("config: min_instance_pixels must be >= 1");
  if (features.fast_threshold < 1) throw PreconditionError("config: fast_threshold must be >= 1");
  if (features.arc_length < 1 || features.arc_length > 16) {
    throw PreconditionError("config: fast_arc must be in [1, 16]");
  }
  if (features.max_keypoints < 1) throw PreconditionError("config: max_keypoints must be >= 1");
  if (features.grid_cell < 1) throw PreconditionError("config: grid_cell must be >= 1");
  if (!(match_ratio > 0 && match_ratio <= 1)) {
    throw PreconditionError("config: match_ratio must be in (0, 1]");
  }
  if (!(match_max_pixels > 0)) throw PreconditionError("config: match_max_pixels must be > 0");
  if (mask_dilation < 0) throw PreconditionError("config: mask_dilation must be >= 0");
  ransac.validate();
  if (epipolar_iterations < 1) throw PreconditionError("config: epipolar_iterations must be >= 1");
  if (!(epipolar_threshold > 0)) throw PreconditionError("config: epipolar_threshold must be > 0");
  if (!(odometry_weight >= 0) || !(closure_weight >= 0)) {
    throw PreconditionError("config: edge weights must be >= 0");
  }
  if (!(loop_radius > 0)) throw PreconditionError("config: loop_radius must be > 0");
  if (loop_min_gap < 1) throw PreconditionError("config: loop_min_gap must be >= 1");
  if (loop_min_inliers < 3) throw PreconditionError("config: loop_min_inliers must be >= 3");
  if (pgo_max_iterations < 1) throw PreconditionError("config: pgo_max_iterations must be >= 1");
  if (!(pgo_damping > 0)) throw PreconditionError("config: pgo_damping must be > 0");
  if (eval_delta < 1) throw PreconditionError("config: eval_delta must be >= 1");
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(config, value);
      return;
    }
  }
  throw ParseError("config: unknown key '" + key + "'");
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config: expected 'key = value'", lineno);
    const std::string key = trim(line.substr(0, eq));
    if (!seen.insert(key).second) throw ParseError("config: duplicate key '" + key + "'", lineno);
    try {
      set_config_value(config, key, trim(line.substr(eq + 1)));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  config.validate();
  return config;
}

RunConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void write_config(const RunConfig& config, std::ostream& out) {
  for (const auto& f : fields()) out << f.key << " = " << f.get(config) << '\n';
}

void write_config_reference(std::ostream& out) {
  const RunConfig defaults;
  out << "# Run configuration\n\n"
      << "Plain text, one `key = value` per line; `#` starts a comment. Unknown or\n"
      << "repeated keys are errors. Keys left out keep the defaults below.\n\n"
      << "| key | default | meaning |\n|---|---|---|\n";
  for (const auto& f : fields()) {
    out << "| `" << f.key << "` | `" << f.get(defaults) << "` | " << f.doc << " |\n";
  }
}

}  // namespace dynodom
