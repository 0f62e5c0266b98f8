#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dynodom/error.hpp"
#include "dynodom/se3.hpp"

namespace dynodom {

using Point3 = Eigen::Vector3d;

template <typename Scalar>
using Cloud = std::vector<Vector3<Scalar>>;
using PointCloud = Cloud<double>;

template <typename T>
using ImageOf = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 8-bit single channel image, indexed (row = v, col = u).
using GrayImage = ImageOf<std::uint8_t>;
/// 16-bit instance label image; 0 is background.
using LabelImage = ImageOf<std::uint16_t>;
/// Binary mask; nonzero means set.
using MaskImage = ImageOf<std::uint8_t>;

/// Interleaved 8-bit RGB image.
struct ColorImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  ColorImage() = default;
  ColorImage(int w, int h) : width(w), height(h), rgb(std::size_t(w) * h * 3, 0) {}

  std::uint8_t* at(int u, int v) { return &rgb[(std::size_t(v) * width + u) * 3]; }
  const std::uint8_t* at(int u, int v) const {
    return &rgb[(std::size_t(v) * width + u) * 3];
  }
  bool empty() const { return rgb.empty(); }
};

/// Luma conversion (ITU-R BT.601 weights, rounded).
GrayImage to_gray(const ColorImage& color);

/// Metric depth image. Missing samples are stored as NaN.
class DepthFrame {
 public:
  DepthFrame() = default;
  DepthFrame(int width, int height)
      : values_(ImageOf<float>::Constant(height, width,
                                         std::numeric_limits<float>::quiet_NaN())) {}
  explicit DepthFrame(ImageOf<float> values) : values_(std::move(values)) {}

  int width() const { return static_cast<int>(values_.cols()); }
  int height() const { return static_cast<int>(values_.rows()); }
  bool contains(int u, int v) const {
    return u >= 0 && v >= 0 && u < width() && v < height();
  }

  bool present(int u, int v) const { return !std::isnan(values_(v, u)); }
  std::optional<double> at(int u, int v) const {
    const float d = values_(v, u);
    if (std::isnan(d)) return std::nullopt;
    return d;
  }
  /// Sets a sample; non-positive or non-finite values are stored as missing.
  void set(int u, int v, double meters) {
    values_(v, u) = (std::isfinite(meters) && meters > 0.0)
                        ? static_cast<float>(meters)
                        : std::numeric_limits<float>::quiet_NaN();
  }
  void set_missing(int u, int v) {
    values_(v, u) = std::numeric_limits<float>::quiet_NaN();
  }

  const ImageOf<float>& values() const { return values_; }

 private:
  ImageOf<float> values_;
};

/// Pinhole intrinsics plus the raw-depth scale (units per meter).
struct CameraIntrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  double depth_scale = 5000.0;
  int width = 640;
  int height = 480;

  void validate() const {
    if (!(fx > 0) || !(fy > 0)) throw PreconditionError("intrinsics: focal lengths must be > 0");
    if (!(depth_scale > 0)) throw PreconditionError("intrinsics: depth_scale must be > 0");
    if (width <= 0 || height <= 0) throw PreconditionError("intrinsics: image size must be > 0");
    if (cx < 0 || cy < 0 || cx > width || cy > height) {
      throw PreconditionError("intrinsics: principal point outside image");
    }
  }
};

/// Pixel (u, v) with depth z to camera coordinates.
template <typename Scalar>
Vector3<Scalar> backproject(Scalar u, Scalar v, Scalar z, const CameraIntrinsics& intr) {
  if (!std::isfinite(z) || !(z > Scalar(0))) {
    throw PreconditionError("backproject: depth must be finite and > 0");
  }
  return Vector3<Scalar>((u - Scalar(intr.cx)) / Scalar(intr.fx) * z,
                         (v - Scalar(intr.cy)) / Scalar(intr.fy) * z, z);
}

/// Camera coordinates to pixel coordinates; z must be positive.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> project(const Vector3<Scalar>& p, const CameraIntrinsics& intr) {
  return {Scalar(intr.fx) * p.x() / p.z() + Scalar(intr.cx),
          Scalar(intr.fy) * p.y() / p.z() + Scalar(intr.cy)};
}

}  // namespace dynodom
