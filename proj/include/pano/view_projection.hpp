#pragma once

// Mappings between equirectangular (ERP) pixels, sphere directions and
// perspective-view pixels, plus perspective view rendering.
//
// Pixel coordinates are 0-based and continuous; the principal point sits at
// ((w - 1) / 2, (h - 1) / 2). Image rows grow downwards while the camera y axis
// points up, so a pixel below the principal point maps to a ray with y < 0.

#include "pano/image.hpp"
#include "pano/sphere_geometry.hpp"

#include <array>
#include <optional>
#include <string>

namespace pano {

template <typename Scalar>
using Vector2 = Eigen::Matrix<Scalar, 2, 1>;
using Vector2d = Vector2<double>;

template <typename Scalar>
struct CameraIntrinsics {
  Scalar fov_x_deg{0};
  Scalar fov_y_deg{0};
  int width{0};
  int height{0};
  Scalar fx{0};
  Scalar fy{0};
  Scalar cx{0};  ///< principal point column i0
  Scalar cy{0};  ///< principal point row j0
};

/// Yaw/pitch camera orientation in degrees. Roll is always zero.
template <typename Scalar>
struct CameraPose {
  Scalar theta_deg{0};
  Scalar phi_deg{0};
};

using CameraIntrinsicsd = CameraIntrinsics<double>;
using CameraPosed = CameraPose<double>;

inline constexpr double kDefaultFovY = 60.0;
inline constexpr int kDefaultViewWidth = 1024;
inline constexpr int kDefaultViewHeight = 768;

/// Square-pixel intrinsics for a vertical FOV: fx = fy = h / (2 tan(fov_y / 2))
/// and fov_x follows from the aspect ratio.
template <typename Scalar>
[[nodiscard]] CameraIntrinsics<Scalar> intrinsics_from_fov(Scalar fov_y_deg, int width,
                                                           int height) {
  if (!(fov_y_deg > Scalar(0) && fov_y_deg < Scalar(180))) {
    throw std::invalid_argument("fov_y must lie in (0, 180) degrees");
  }
  if (width < 2 || height < 2) throw std::invalid_argument("view size must be at least 2x2");
  CameraIntrinsics<Scalar> k;
  k.width = width;
  k.height = height;
  k.fov_y_deg = fov_y_deg;
  const Scalar half_tan = std::tan(deg_to_rad(fov_y_deg) / 2);
  k.fy = Scalar(height) / (2 * half_tan);
  k.fx = k.fy;
  k.fov_x_deg = rad_to_deg(2 * std::atan(Scalar(width) / Scalar(height) * half_tan));
  k.cx = Scalar(width - 1) / 2;
  k.cy = Scalar(height - 1) / 2;
  return k;
}

template <typename Scalar>
[[nodiscard]] CameraIntrinsics<Scalar> default_intrinsics() {
  return intrinsics_from_fov<Scalar>(Scalar(kDefaultFovY), kDefaultViewWidth, kDefaultViewHeight);
}

/// Camera-frame ray (not normalized, z = 1) through view pixel (i, j).
template <typename Scalar>
[[nodiscard]] Vector3<Scalar> view_pixel_ray(Scalar i, Scalar j, const CameraIntrinsics<Scalar>& k) {
  return {(i - k.cx) / k.fx, -(j - k.cy) / k.fy, Scalar(1)};
}

template <typename Scalar>
[[nodiscard]] SphericalDirection<Scalar> view_pixel_to_sphere(Scalar i, Scalar j,
                                                              const CameraIntrinsics<Scalar>& k,
                                                              const CameraPose<Scalar>& pose) {
  const Vector3<Scalar> world =
      camera_to_world(pose.theta_deg, pose.phi_deg) * view_pixel_ray(i, j, k);
  return vec_to_dir(Vector3<Scalar>(world.normalized()));
}

/// Forward pinhole model; empty for directions behind the camera.
template <typename Scalar>
[[nodiscard]] std::optional<Vector2<Scalar>> sphere_to_view_pixel(
    const SphericalDirection<Scalar>& d, const CameraIntrinsics<Scalar>& k,
    const CameraPose<Scalar>& pose) {
  const Vector3<Scalar> c =
      camera_to_world(pose.theta_deg, pose.phi_deg).transpose() * dir_to_vec(d);
  if (c.z() <= Scalar(0)) return std::nullopt;
  return Vector2<Scalar>(k.cx + k.fx * c.x() / c.z(), k.cy - k.fy * c.y() / c.z());
}

template <typename Scalar>
[[nodiscard]] Vector2<Scalar> sphere_to_erp_pixel(const SphericalDirection<Scalar>& d, int width,
                                                  int height) {
  const Scalar theta = deg_to_rad(d.theta_deg);
  const Scalar phi = deg_to_rad(d.phi_deg);
  return {(theta / (2 * kPi<Scalar>) + Scalar(0.5)) * Scalar(width),
          (-phi / kPi<Scalar> + Scalar(0.5)) * Scalar(height)};
}

template <typename Scalar>
[[nodiscard]] SphericalDirection<Scalar> erp_pixel_to_sphere(Scalar u, Scalar v, int width,
                                                             int height) {
  const Scalar theta = 2 * kPi<Scalar> * u / Scalar(width) - kPi<Scalar>;
  const Scalar phi = -kPi<Scalar> * v / Scalar(height) + kPi<Scalar> / 2;
  return {rad_to_deg(theta), rad_to_deg(phi)};
}

template <typename Scalar>
[[nodiscard]] SphericalRect<Scalar> view_rect_of(const CameraPose<Scalar>& pose,
                                                 const CameraIntrinsics<Scalar>& k) {
  return {{pose.theta_deg, pose.phi_deg}, k.fov_x_deg, k.fov_y_deg};
}

struct ViewProvenance {
  std::string scene_id;
  CameraPosed pose;
  CameraIntrinsicsd intrinsics;
};

struct ViewImage {
  RgbImage image;
  ViewProvenance provenance;
};

/// True for the usual 2:1 panorama layout. Other aspect ratios still render.
[[nodiscard]] bool is_standard_erp(const RgbImage& erp) noexcept;

/// Bilinear ERP lookup at continuous ERP coordinates (u, v); pixel (x, y) has
/// its center at (x + 0.5, y + 0.5). Longitude wraps, latitude clamps.
[[nodiscard]] std::array<double, 3> sample_erp(const RgbImage& erp, double u, double v);

/// Perspective view of `erp` seen from `pose`. Every output pixel samples the
/// ERP bilinearly at the projection of its ray. Yaw is applied as an exact
/// longitude offset, so yaws that are whole multiples of 360 / W reproduce a
/// horizontally rolled panorama bit for bit.
[[nodiscard]] ViewImage render_view(const RgbImage& erp, const CameraPosed& pose,
                                    const CameraIntrinsicsd& k, std::string scene_id = {});

}  // namespace pano
