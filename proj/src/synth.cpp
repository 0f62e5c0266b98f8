#include "dynodom/synth.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dynodom/png_io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace dynodom::synth {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDeg = std::numbers::pi / 180.0;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Cell texture: one random gray level per cell of side `cell`. Flat faces
// pass 2D coordinates (third component zero) so no coordinate sits on a cell
// boundary.
std::uint8_t cell_texture(const Eigen::Vector3d& p, double cell, std::uint64_t seed) {
  std::uint64_t h = mix(seed);
  for (int k = 0; k < 3; ++k) {
    h = mix(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(p[k] / cell))));
  }
  return static_cast<std::uint8_t>(30 + h % 196);
}

void plane_basis(const Eigen::Vector3d& n, Eigen::Vector3d& e1, Eigen::Vector3d& e2) {
  const Eigen::Vector3d a = std::abs(n.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  e1 = n.cross(a).normalized();
  e2 = n.cross(e1);
}

struct Ray {
  Eigen::Vector3d origin;
  Eigen::Vector3d dir;  // camera z component of the ray is 1 per unit parameter
};

bool intersect_sphere(const Ray& ray, const Eigen::Vector3d& c, double r, double& s) {
  const Eigen::Vector3d oc = ray.origin - c;
  const double a = ray.dir.squaredNorm();
  const double b = oc.dot(ray.dir);
  const double cc = oc.squaredNorm() - r * r;
  const double disc = b * b - a * cc;
  if (disc < 0) return false;
  const double sq = std::sqrt(disc);
  double t = (-b - sq) / a;
  if (t <= 1e-6) t = (-b + sq) / a;
  if (t <= 1e-6) return false;
  s = t;
  return true;
}

bool intersect_sphere_interval(const Ray& ray, const Eigen::Vector3d& c, double r, double& s0,
                               double& s1) {
  const Eigen::Vector3d oc = ray.origin - c;
  const double a = ray.dir.squaredNorm();
  const double b = oc.dot(ray.dir);
  const double cc = oc.squaredNorm() - r * r;
  const double disc = b * b - a * cc;
  if (disc < 0) return false;
  const double sq = std::sqrt(disc);
  s0 = std::max((-b - sq) / a, 1e-6);
  s1 = (-b + sq) / a;
  return s1 > s0;
}

bool intersect_box(const Ray& ray, const Eigen::Vector3d& c, const Eigen::Vector3d& half,
                   double& s) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    const double lo = c[k] - half[k], hi = c[k] + half[k];
    if (std::abs(ray.dir[k]) < 1e-15) {
      if (ray.origin[k] < lo || ray.origin[k] > hi) return false;
      continue;
    }
    double a = (lo - ray.origin[k]) / ray.dir[k];
    double b = (hi - ray.origin[k]) / ray.dir[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (t0 > t1) return false;
  if (t0 > 1e-6) {
    s = t0;
    return true;
  }
  if (t1 > 1e-6) {
    s = t1;
    return true;
  }
  return false;
}

// Cap weight in [0, 1]: 1 on the cap axis, falling quadratically in the
// cosine to 0 at the cap half-angle.
double cap_weight(const Eigen::Vector3d& n, const Eigen::Vector3d& axis, double cap_cos) {
  const double c = n.dot(axis);
  if (c <= cap_cos) return 0.0;
  const double x = (c - cap_cos) / (1.0 - cap_cos);
  return x * x;
}

struct DeformedSphere {
  Eigen::Vector3d center;
  double radius;
  double bulge;  // current amplitude * sin(...)
  Eigen::Vector3d axis;
  double cap_cos;

  double surface_radius(const Eigen::Vector3d& n) const {
    return radius + bulge * cap_weight(n, axis, cap_cos);
  }
  double field(const Eigen::Vector3d& p) const {
    const Eigen::Vector3d d = p - center;
    const double len = d.norm();
    if (len < 1e-12) return -radius;
    return len - surface_radius(d / len);
  }
};

bool intersect_deformed(const Ray& ray, const DeformedSphere& ds, double& s) {
  double s0, s1;
  if (!intersect_sphere_interval(ray, ds.center, ds.radius + std::abs(ds.bulge), s0, s1)) {
    return false;
  }
  const double dir_len = ray.dir.norm();
  const double inner = std::max(ds.radius - std::abs(ds.bulge), 1e-3);
  // Angular slope of the weight is at most 2 / (1 - cap_cos).
  const double lipschitz = 1.0 + std::abs(ds.bulge) * 2.0 / ((1.0 - ds.cap_cos) * inner);
  double t = s0;
  double f = ds.field(ray.origin + t * ray.dir);
  if (f <= 0) {
    s = t;
    return true;
  }
  for (int it = 0; it < 400 && t <= s1; ++it) {
    const double step = std::max(f / lipschitz, 2e-4) / dir_len;
    const double tn = t + step;
    const double fn = ds.field(ray.origin + tn * ray.dir);
    if (fn <= 0) {
      double lo = t, hi = tn;
      for (int b = 0; b < 40; ++b) {
        const double mid = 0.5 * (lo + hi);
        if (ds.field(ray.origin + mid * ray.dir) > 0) lo = mid; else hi = mid;
      }
      s = hi;
      return true;
    }
    if (f < 1e-9) break;
    t = tn;
    f = fn;
  }
  return false;
}

Eigen::Vector3d vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw ParseError(std::string("scene spec: '") + what + "' must be a 3-element array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const char* where) {
  std::set<std::string> allowed(known.begin(), known.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw ParseError(std::string("scene spec: unknown key '") + it.key() + "' in " + where);
    }
  }
}

}  // namespace

Se3d CameraPath::pose_at(double t) const {
  Eigen::Vector3d p = position;
  Eigen::Vector3d r = rotation_deg;
  for (int k = 0; k < 3; ++k) {
    p[k] += position_amplitude[k] * std::sin(kTwoPi * position_frequency[k] * t + position_phase[k]);
    r[k] += rotation_amplitude_deg[k] *
            std::sin(kTwoPi * rotation_frequency[k] * t + rotation_phase[k]);
  }
  return Se3d(so3_exp<double>(r * kDeg), p);
}

Eigen::Vector3d ObjectSpec::center_at(double t) const {
  if (bounce_period <= 0) return center + velocity * t;
  const double tau = std::fmod(t, bounce_period);
  const double leg = tau < 0.5 * bounce_period ? tau : bounce_period - tau;
  return center + velocity * leg;
}

void SceneSpec::validate() const {
  if (duration < 2) throw PreconditionError("scene spec: duration must be >= 2 frames");
  if (!(frame_rate > 0)) throw PreconditionError("scene spec: frame_rate must be > 0");
  if (!(depth_noise >= 0)) throw PreconditionError("scene spec: depth_noise must be >= 0");
  intrinsics.validate();
  for (const auto& p : background) {
    if (p.normal.norm() < 1e-9) throw PreconditionError("scene spec: plane normal is zero");
    if (!(p.texture_cell > 0)) throw PreconditionError("scene spec: texture_cell must be > 0");
  }
  for (const auto& o : objects) {
    if (o.shape == Shape::kSphere && !(o.size.x() > 0)) {
      throw PreconditionError("scene spec: sphere radius must be > 0");
    }
    if (o.shape == Shape::kBox && !(o.size.minCoeff() > 0)) {
      throw PreconditionError("scene spec: box half extents must be > 0");
    }
    if (!(o.texture_cell > 0)) throw PreconditionError("scene spec: texture_cell must be > 0");
    if (o.deformable()) {
      if (o.shape != Shape::kSphere) {
        throw PreconditionError("scene spec: deformation is supported on spheres only");
      }
      if (std::abs(o.deformation_amplitude) >= o.size.x()) {
        throw PreconditionError("scene spec: deformation amplitude must be below the radius");
      }
      if (!(o.deformation_cap_deg > 0 && o.deformation_cap_deg <= 180)) {
        throw PreconditionError("scene spec: deformation_cap_deg must be in (0, 180]");
      }
      if (o.deformation_direction.norm() < 1e-9) {
        throw PreconditionError("scene spec: deformation_direction is zero");
      }
    }
  }
  if (objects.size() >= 65535) throw PreconditionError("scene spec: too many objects");
}

SceneSpec scene_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene spec: ") + e.what());
  }
  SceneSpec s;
  try {
    reject_unknown(j,
                   {"duration", "frame_rate", "start_time", "intrinsics", "camera_path",
                    "background", "objects", "depth_noise", "seed"},
                   "scene");
    s.duration = j.value("duration", s.duration);
    s.frame_rate = j.value("frame_rate", s.frame_rate);
    s.start_time = j.value("start_time", s.start_time);
    s.depth_noise = j.value("depth_noise", s.depth_noise);
    s.seed = j.value("seed", s.seed);
    if (j.contains("intrinsics")) {
      const json& in = j["intrinsics"];
      reject_unknown(in, {"fx", "fy", "cx", "cy", "width", "height", "depth_scale"}, "intrinsics");
      auto& c = s.intrinsics;
      c.fx = in.value("fx", c.fx);
      c.fy = in.value("fy", c.fy);
      c.cx = in.value("cx", c.cx);
      c.cy = in.value("cy", c.cy);
      c.width = in.value("width", c.width);
      c.height = in.value("height", c.height);
      c.depth_scale = in.value("depth_scale", c.depth_scale);
    }
    if (j.contains("camera_path")) {
      const json& cp = j["camera_path"];
      reject_unknown(cp,
                     {"position", "rotation_deg", "position_amplitude", "position_frequency",
                      "position_phase", "rotation_amplitude_deg", "rotation_frequency",
                      "rotation_phase"},
                     "camera_path");
      auto& c = s.camera_path;
      auto opt = [&](const char* key, Eigen::Vector3d& dst) {
        if (cp.contains(key)) dst = vec3(cp[key], key);
      };
      opt("position", c.position);
      opt("rotation_deg", c.rotation_deg);
      opt("position_amplitude", c.position_amplitude);
      opt("position_frequency", c.position_frequency);
      opt("position_phase", c.position_phase);
      opt("rotation_amplitude_deg", c.rotation_amplitude_deg);
      opt("rotation_frequency", c.rotation_frequency);
      opt("rotation_phase", c.rotation_phase);
    }
    for (const json& pj : j.value("background", json::array())) {
      reject_unknown(pj, {"point", "normal", "texture_cell", "texture_seed"}, "background plane");
      TexturedPlane p;
      p.point = vec3(pj.at("point"), "point");
      p.normal = vec3(pj.at("normal"), "normal");
      p.texture_cell = pj.value("texture_cell", p.texture_cell);
      p.texture_seed = pj.value("texture_seed", p.texture_seed);
      s.background.push_back(p);
    }
    for (const json& oj : j.value("objects", json::array())) {
      reject_unknown(oj,
                     {"class", "shape", "center", "size", "velocity", "bounce_period",
                      "deformation_amplitude", "deformation_frequency", "deformation_direction",
                      "deformation_cap_deg", "texture_cell"},
                     "object");
      ObjectSpec o;
      o.class_name = oj.value("class", o.class_name);
      const std::string shape = oj.value("shape", std::string("sphere"));
      if (shape == "sphere") {
        o.shape = Shape::kSphere;
      } else if (shape == "box") {
        o.shape = Shape::kBox;
      } else {
        throw ParseError("scene spec: unknown shape '" + shape + "'");
      }
      o.center = vec3(oj.at("center"), "center");
      if (oj.contains("size")) {
        if (oj["size"].is_number()) {
          o.size = Eigen::Vector3d::Constant(oj["size"].get<double>());
        } else {
          o.size = vec3(oj["size"], "size");
        }
      }
      if (oj.contains("velocity")) o.velocity = vec3(oj["velocity"], "velocity");
      o.bounce_period = oj.value("bounce_period", o.bounce_period);
      o.deformation_amplitude = oj.value("deformation_amplitude", o.deformation_amplitude);
      o.deformation_frequency = oj.value("deformation_frequency", o.deformation_frequency);
      if (oj.contains("deformation_direction")) {
        o.deformation_direction = vec3(oj["deformation_direction"], "deformation_direction");
      }
      o.deformation_cap_deg = oj.value("deformation_cap_deg", o.deformation_cap_deg);
      o.texture_cell = oj.value("texture_cell", o.texture_cell);
      if (o.class_name.empty() || o.class_name.find_first_of(" \t\n") != std::string::npos) {
        throw ParseError("scene spec: class names must be non-empty single words");
      }
      s.objects.push_back(o);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("scene spec: ") + e.what());
  }
  s.validate();
  return s;
}

SceneSpec read_scene_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return scene_from_json_text(ss.str());
}

RenderedFrame render_frame(const SceneSpec& spec, const Se3d& pose, int t) {
  if (t < 0 || t >= spec.duration) throw PreconditionError("render_frame: frame index out of range");
  const CameraIntrinsics& intr = spec.intrinsics;
  const int w = intr.width, h = intr.height;
  const double time = spec.time_of(t);

  RenderedFrame out;
  out.depth = DepthFrame(w, h);
  out.masks.label_map = LabelImage::Zero(h, w);
  out.color = ColorImage(w, h);

  std::vector<Eigen::Vector3d> centers;
  std::vector<DeformedSphere> deformed(spec.objects.size());
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const ObjectSpec& o = spec.objects[i];
    centers.push_back(o.center_at(time));
    if (o.deformable()) {
      deformed[i] = {centers.back(), o.size.x(),
                     o.deformation_amplitude * std::sin(kTwoPi * o.deformation_frequency * time),
                     o.deformation_direction.normalized(), std::cos(o.deformation_cap_deg * kDeg)};
    }
  }
  std::vector<Eigen::Vector3d> normals, e1s, e2s;
  for (const auto& p : spec.background) {
    normals.push_back(p.normal.normalized());
    Eigen::Vector3d e1, e2;
    plane_basis(normals.back(), e1, e2);
    e1s.push_back(e1);
    e2s.push_back(e2);
  }

  std::mt19937_64 rng(mix(spec.seed ^ mix(static_cast<std::uint64_t>(t) + 1)));
  std::normal_distribution<double> noise(0.0, spec.depth_noise);
  std::vector<std::size_t> pixel_counts(spec.objects.size(), 0);

  // Conservative pixel bounding box of each object's bounding sphere.
  struct Box2 {
    double u0, u1, v0, v1;
  };
  std::vector<Box2> bounds;
  const Se3d cam_from_world = pose.inverse();
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const ObjectSpec& o = spec.objects[i];
    const double r = o.shape == Shape::kBox ? o.size.norm()
                                            : o.size.x() + std::abs(o.deformation_amplitude);
    const Eigen::Vector3d c = cam_from_world * centers[i];
    const double inf = std::numeric_limits<double>::infinity();
    if (c.z() - r <= 1e-3) {
      bounds.push_back({-inf, inf, -inf, inf});
      continue;
    }
    const double zn = c.z() - r, zf = c.z() + r;
    bounds.push_back({intr.cx + intr.fx * std::min((c.x() - r) / zn, (c.x() - r) / zf) - 1,
                      intr.cx + intr.fx * std::max((c.x() + r) / zn, (c.x() + r) / zf) + 1,
                      intr.cy + intr.fy * std::min((c.y() - r) / zn, (c.y() - r) / zf) - 1,
                      intr.cy + intr.fy * std::max((c.y() + r) / zn, (c.y() + r) / zf) + 1});
  }

  const Eigen::Matrix3d& R = pose.rotation();
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const Eigen::Vector3d dc((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
      const Ray ray{pose.translation(), R * dc};
      double best = std::numeric_limits<double>::infinity();
      int hit_object = -1;
      int hit_plane = -1;
      for (std::size_t k = 0; k < spec.background.size(); ++k) {
        const double denom = normals[k].dot(ray.dir);
        if (std::abs(denom) < 1e-12) continue;
        const double s = normals[k].dot(spec.background[k].point - ray.origin) / denom;
        if (s > 1e-6 && s < best) {
          best = s;
          hit_plane = static_cast<int>(k);
        }
      }
      for (std::size_t i = 0; i < spec.objects.size(); ++i) {
        const ObjectSpec& o = spec.objects[i];
        if (u < bounds[i].u0 || u > bounds[i].u1 || v < bounds[i].v0 || v > bounds[i].v1) continue;
        double s;
        bool hit;
        if (o.deformable()) {
          hit = intersect_deformed(ray, deformed[i], s);
        } else if (o.shape == Shape::kSphere) {
          hit = intersect_sphere(ray, centers[i], o.size.x(), s);
        } else {
          hit = intersect_box(ray, centers[i], o.size, s);
        }
        if (hit && s < best) {
          best = s;
          hit_object = static_cast<int>(i);
        }
      }
      if (!std::isfinite(best)) continue;

      const Eigen::Vector3d p = ray.origin + best * ray.dir;
      std::uint8_t gray;
      std::uint8_t* px = out.color.at(u, v);
      if (hit_object >= 0) {
        const ObjectSpec& o = spec.objects[hit_object];
        Eigen::Vector3d local = p - centers[hit_object];
        std::uint64_t face = 0;
        if (o.deformable()) {
          local = local.normalized() * o.size.x();
        } else if (o.shape == Shape::kBox) {
          Eigen::Index k;
          local.cwiseQuotient(o.size).cwiseAbs().maxCoeff(&k);
          face = 2 * k + (local[k] > 0 ? 2 : 1);
          local[k] = 0.0;
        }
        gray = cell_texture(local, o.texture_cell,
                            mix(spec.seed + 7919 * (hit_object + 1) + face));
        out.masks.label_map(v, u) = static_cast<std::uint16_t>(hit_object + 1);
        ++pixel_counts[hit_object];
        // Mild per-object tint; luma stays close to the texture value.
        px[0] = static_cast<std::uint8_t>(std::min(255, gray + 8));
        px[1] = gray;
        px[2] = static_cast<std::uint8_t>(std::max(0, gray - 8));
      } else {
        const TexturedPlane& pl = spec.background[hit_plane];
        const Eigen::Vector3d q = p - pl.point;
        gray = cell_texture({q.dot(e1s[hit_plane]), q.dot(e2s[hit_plane]), 0.0}, pl.texture_cell,
                            mix(spec.seed ^ (pl.texture_seed + 0xABCDEF)));
        px[0] = px[1] = px[2] = gray;
      }
      double z = best;  // camera z equals the ray parameter since dc.z() == 1
      if (spec.depth_noise > 0) z += noise(rng);
      out.depth.set(u, v, z);
    }
  }
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    if (pixel_counts[i] > 0) {
      out.masks.entries.push_back(
          {static_cast<std::uint16_t>(i + 1), spec.objects[i].class_name, 1.0});
    }
  }
  return out;
}

std::string frame_stamp(const SceneSpec& spec, int frame) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", spec.start_time + spec.time_of(frame));
  return buf;
}

Manifest generate(const SceneSpec& spec, const fs::path& out) {
  spec.validate();
  std::error_code ec;
  for (const char* sub : {"rgb", "depth", "masks"}) {
    fs::create_directories(out / sub, ec);
    if (ec) throw IoError("cannot create " + (out / sub).string() + ": " + ec.message());
  }
  std::ofstream rgb_index(out / "rgb.txt"), depth_index(out / "depth.txt"),
      gt_file(out / "groundtruth.txt"), manifest_file(out / "manifest.txt");
  if (!rgb_index || !depth_index || !gt_file || !manifest_file) {
    throw IoError("cannot write index files under " + out.string());
  }
  rgb_index << "# color images\n# timestamp filename\n";
  depth_index << "# depth images\n# timestamp filename\n";
  gt_file << "# ground truth trajectory\n# timestamp tx ty tz qx qy qz qw\n";
  manifest_file << "# frame_index object_id cx cy cz dynamic_flag deformable_flag\n";

  Manifest manifest;
  manifest.path = out / "manifest.txt";
  Trajectory gt;
  for (int f = 0; f < spec.duration; ++f) {
    const std::string stamp = frame_stamp(spec, f);
    const double ts = std::stod(stamp);
    const Se3d pose = spec.camera_path.pose_at(spec.time_of(f));
    const RenderedFrame frame = render_frame(spec, pose, f);

    write_png_rgb(out / "rgb" / (stamp + ".png"), frame.color);
    write_png_u16(out / "depth" / (stamp + ".png"),
                  depth_to_raw(frame.depth, spec.intrinsics.depth_scale));
    write_mask_set(frame.masks, out / "masks" / (stamp + ".png"), out / "masks" / (stamp + ".txt"));
    rgb_index << stamp << " rgb/" << stamp << ".png\n";
    depth_index << stamp << " depth/" << stamp << ".png\n";
    gt.poses.push_back({ts, pose});

    for (std::size_t i = 0; i < spec.objects.size(); ++i) {
      const ObjectSpec& o = spec.objects[i];
      ManifestEntry e{f, static_cast<int>(i + 1), o.center_at(spec.time_of(f)), o.dynamic(),
                      o.deformable()};
      manifest_file << e.frame << ' ' << e.object_id << ' ' << format_double(e.centroid.x())
                    << ' ' << format_double(e.centroid.y()) << ' '
                    << format_double(e.centroid.z()) << ' ' << int(e.dynamic) << ' '
                    << int(e.deformable) << '\n';
      manifest.entries.push_back(e);
    }
  }
  gt_file.close();
  write_trajectory(gt, out / "groundtruth.txt");
  if (!rgb_index || !depth_index || !manifest_file) {
    throw IoError("failed writing sequence under " + out.string());
  }
  return manifest;
}

}  // namespace dynodom::synth
