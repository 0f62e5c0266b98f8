#include "dynodom/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dynodom/png_io.hpp"

namespace fs = std::filesystem;

namespace dynodom {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

bool parse_double(const std::string& token, double& out) {
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

bool skip_line(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

}  // namespace

const InstanceEntry* InstanceMaskSet::find(std::uint16_t id) const {
  for (const auto& e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

void InstanceMaskSet::validate() const {
  std::set<std::uint16_t> ids;
  for (const auto& e : entries) {
    if (e.id == 0) throw ParseError("mask entry uses reserved id 0");
    if (!ids.insert(e.id).second) {
      throw ParseError("duplicate mask entry id " + std::to_string(e.id));
    }
    if (!(e.score >= 0.0 && e.score <= 1.0)) {
      throw ParseError("mask entry " + std::to_string(e.id) + " has score outside [0,1]");
    }
  }
  for (Eigen::Index i = 0; i < label_map.size(); ++i) {
    const std::uint16_t l = label_map.data()[i];
    if (l != 0 && !ids.count(l)) {
      throw ParseError("label " + std::to_string(l) + " has no sidecar entry");
    }
  }
}

std::vector<double> Trajectory::timestamps() const {
  std::vector<double> ts;
  ts.reserve(poses.size());
  for (const auto& p : poses) ts.push_back(p.timestamp);
  return ts;
}

void Trajectory::validate() const {
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (i > 0 && !(poses[i].timestamp > poses[i - 1].timestamp)) {
      throw PreconditionError("trajectory timestamps not strictly increasing at index " +
                              std::to_string(i));
    }
    const Matrix3<double>& R = poses[i].pose.rotation();
    if (!(R.transpose() * R).isApprox(Matrix3<double>::Identity(), 1e-9) ||
        std::abs(R.determinant() - 1.0) > 1e-9) {
      throw PreconditionError("trajectory rotation not orthonormal at index " +
                              std::to_string(i));
    }
  }
}

IndexPairs associate_timestamps(std::span<const double> a, std::span<const double> b,
                                double max_diff) {
  struct Candidate {
    double diff;
    std::size_t i, j;
  };
  std::vector<Candidate> candidates;
  std::size_t lo = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    while (lo < b.size() && b[lo] < a[i] - max_diff) ++lo;
    for (std::size_t j = lo; j < b.size() && b[j] <= a[i] + max_diff; ++j) {
      const double d = std::abs(a[i] - b[j]);
      if (d <= max_diff) candidates.push_back({d, i, j});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    if (x.diff != y.diff) return x.diff < y.diff;
    if (x.i != y.i) return x.i < y.i;
    return x.j < y.j;
  });
  std::vector<char> used_a(a.size(), 0), used_b(b.size(), 0);
  IndexPairs pairs;
  for (const auto& c : candidates) {
    if (used_a[c.i] || used_b[c.j]) continue;
    used_a[c.i] = used_b[c.j] = 1;
    pairs.emplace_back(c.i, c.j);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

std::vector<IndexEntry> read_index_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open index file " + path.string());
  std::vector<IndexEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    const auto tok = split_ws(line);
    IndexEntry e;
    if (tok.size() < 2 || !parse_double(tok[0], e.timestamp)) {
      throw ParseError("malformed index entry in " + path.string(), lineno);
    }
    e.stamp = tok[0];
    e.file = tok[1];
    entries.push_back(std::move(e));
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const IndexEntry& x, const IndexEntry& y) { return x.timestamp < y.timestamp; });
  return entries;
}

DepthFrame depth_from_raw(const ImageOf<std::uint16_t>& raw, double depth_scale) {
  if (!(depth_scale > 0)) throw PreconditionError("depth_scale must be > 0");
  ImageOf<float> values(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    const std::uint16_t r = raw.data()[i];
    values.data()[i] = r == 0 ? std::numeric_limits<float>::quiet_NaN()
                              : static_cast<float>(r / depth_scale);
  }
  return DepthFrame(std::move(values));
}

ImageOf<std::uint16_t> depth_to_raw(const DepthFrame& depth, double depth_scale) {
  const ImageOf<float>& v = depth.values();
  ImageOf<std::uint16_t> raw(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double d = v.data()[i];
    const double r = std::isnan(d) ? 0.0 : std::round(d * depth_scale);
    raw.data()[i] = (r >= 1.0 && r <= 65535.0) ? static_cast<std::uint16_t>(r) : 0;
  }
  return raw;
}

InstanceMaskSet read_mask_set(const fs::path& label_png, const fs::path& sidecar_txt) {
  InstanceMaskSet set;
  set.label_map = read_png_u16(label_png);
  std::ifstream in(sidecar_txt);
  if (!in) throw IoError("cannot open mask sidecar " + sidecar_txt.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    const auto tok = split_ws(line);
    double id = 0, score = 0;
    if (tok.size() != 3 || !parse_double(tok[0], id) || !parse_double(tok[2], score) ||
        id < 1 || id > 65535 || id != std::floor(id)) {
      throw ParseError("malformed mask sidecar entry in " + sidecar_txt.string(), lineno);
    }
    set.entries.push_back({static_cast<std::uint16_t>(id), tok[1], score});
  }
  set.validate();
  return set;
}

void write_mask_set(const InstanceMaskSet& masks, const fs::path& label_png,
                    const fs::path& sidecar_txt) {
  write_png_u16(label_png, masks.label_map);
  std::ofstream out(sidecar_txt);
  if (!out) throw IoError("cannot write " + sidecar_txt.string());
  for (const auto& e : masks.entries) {
    out << e.id << ' ' << e.class_name << ' ' << format_double(e.score) << '\n';
  }
}

Trajectory read_trajectory(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory " + path.string());
  Trajectory traj;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    const auto tok = split_ws(line);
    if (tok.size() != 8) {
      throw ParseError("trajectory line needs 8 fields, got " + std::to_string(tok.size()),
                       lineno);
    }
    double v[8];
    for (int k = 0; k < 8; ++k) {
      if (!parse_double(tok[k], v[k])) throw ParseError("bad number '" + tok[k] + "'", lineno);
    }
    Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (std::abs(q.norm() - 1.0) > 1e-3) {
      throw ParseError("quaternion is not unit length", lineno);
    }
    traj.poses.push_back({v[0], Se3d(q.normalized(), Vector3<double>(v[1], v[2], v[3]))});
  }
  return traj;
}

void write_trajectory(const Trajectory& traj, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trajectory " + path.string());
  out << "# timestamp tx ty tz qx qy qz qw\n";
  for (const auto& p : traj.poses) {
    const Eigen::Quaterniond q = p.pose.quaternion();
    const auto& t = p.pose.translation();
    out << format_double(p.timestamp) << ' ' << format_double(t.x()) << ' '
        << format_double(t.y()) << ' ' << format_double(t.z()) << ' ' << format_double(q.x())
        << ' ' << format_double(q.y()) << ' ' << format_double(q.z()) << ' '
        << format_double(q.w()) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

SequenceReader::SequenceReader(const fs::path& dir, const CameraIntrinsics& intr,
                               double max_diff)
    : dir_(dir), intr_(intr) {
  intr_.validate();
  if (!(max_diff > 0)) throw PreconditionError("max_diff must be > 0");
  const fs::path rgb_index = dir / "rgb.txt";
  const fs::path depth_index = dir / "depth.txt";
  if (!fs::exists(rgb_index)) throw IoError("missing index file " + rgb_index.string());
  if (!fs::exists(depth_index)) throw IoError("missing index file " + depth_index.string());
  const auto rgb = read_index_file(rgb_index);
  const auto depth = read_index_file(depth_index);

  std::vector<double> ta, tb;
  for (const auto& e : rgb) ta.push_back(e.timestamp);
  for (const auto& e : depth) tb.push_back(e.timestamp);
  for (const auto& [i, j] : associate_timestamps(ta, tb, max_diff)) {
    frames_.push_back({rgb[i], depth[j], std::nullopt});
  }

  const fs::path gt_path = dir / "groundtruth.txt";
  if (fs::exists(gt_path)) {
    ground_truth_ = read_trajectory(gt_path);
    std::vector<double> tf;
    for (const auto& f : frames_) tf.push_back(f.rgb.timestamp);
    const auto tg = ground_truth_->timestamps();
    for (const auto& [i, j] : associate_timestamps(tf, tg, max_diff)) {
      frames_[i].gt_pose = ground_truth_->poses[j].pose;
    }
  }
}

FrameBundle SequenceReader::load(std::size_t index) const {
  const Record& r = frames_.at(index);
  FrameBundle b;
  b.timestamp = r.rgb.timestamp;
  b.stamp = r.rgb.stamp;
  b.gt_pose = r.gt_pose;
  try {
    b.color = read_png_rgb(dir_ / r.rgb.file);
    b.depth = depth_from_raw(read_png_u16(dir_ / r.depth.file), intr_.depth_scale);
  } catch (const Error& e) {
    throw IoError("frame at t=" + r.rgb.stamp + ": " + e.what());
  }
  if (b.color.width != b.depth.width() || b.color.height != b.depth.height()) {
    throw IoError("frame at t=" + r.rgb.stamp + ": color and depth sizes differ");
  }
  const fs::path label_png = dir_ / "masks" / (r.rgb.stamp + ".png");
  const fs::path sidecar = dir_ / "masks" / (r.rgb.stamp + ".txt");
  if (fs::exists(label_png) && fs::exists(sidecar)) {
    b.masks = read_mask_set(label_png, sidecar);
    if (b.masks->label_map.cols() != b.depth.width() ||
        b.masks->label_map.rows() != b.depth.height()) {
      throw IoError("frame at t=" + r.rgb.stamp + ": mask size differs from depth");
    }
  }
  return b;
}

std::vector<FrameBundle> load_sequence(const fs::path& dir, const CameraIntrinsics& intr,
                                       double max_diff) {
  SequenceReader reader(dir, intr, max_diff);
  std::vector<FrameBundle> frames;
  frames.reserve(reader.size());
  for (std::size_t i = 0; i < reader.size(); ++i) frames.push_back(reader.load(i));
  return frames;
}

}  // namespace dynodom
