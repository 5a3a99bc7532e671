#include "pano/view_projection.hpp"

#include <cmath>

namespace pano {

bool is_standard_erp(const RgbImage& erp) noexcept { return erp.width == 2 * erp.height; }

namespace {

struct ColumnShift {
  long whole{0};
  double frac{0.0};
};

// Splits a horizontal pixel offset into an integer part applied to indices and
// a fractional remainder applied to coordinates. Offsets within 1e-9 of an
// integer are snapped so grid-aligned yaws never perturb interpolation weights.
ColumnShift split_shift(double shift) {
  ColumnShift s;
  const double whole = std::nearbyint(shift);
  s.whole = static_cast<long>(whole);
  s.frac = shift - whole;
  if (std::abs(s.frac) < 1e-9) s.frac = 0.0;
  return s;
}

int wrap_index(long x, int width) {
  long r = x % width;
  if (r < 0) r += width;
  return static_cast<int>(r);
}

std::array<double, 3> bilinear(const RgbImage& erp, double u, double v, long column_offset) {
  const double uc = u - 0.5;
  const double vc = std::clamp(v - 0.5, 0.0, static_cast<double>(erp.height - 1));
  const double x_floor = std::floor(uc);
  const double y_floor = std::floor(vc);
  const double fx = uc - x_floor;
  const double fy = vc - y_floor;
  const long x0 = static_cast<long>(x_floor) + column_offset;
  const int y0 = static_cast<int>(y_floor);
  const int y1 = std::min(y0 + 1, erp.height - 1);
  const int c0 = wrap_index(x0, erp.width);
  const int c1 = wrap_index(x0 + 1, erp.width);

  const std::uint8_t* p00 = erp.at(c0, y0);
  const std::uint8_t* p10 = erp.at(c1, y0);
  const std::uint8_t* p01 = erp.at(c0, y1);
  const std::uint8_t* p11 = erp.at(c1, y1);
  std::array<double, 3> out{};
  for (int ch = 0; ch < 3; ++ch) {
    const double top = p00[ch] + (double(p10[ch]) - p00[ch]) * fx;
    const double bottom = p01[ch] + (double(p11[ch]) - p01[ch]) * fx;
    out[ch] = top + (bottom - top) * fy;
  }
  return out;
}

std::uint8_t to_byte(double value) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(value + 0.5), 0.0, 255.0));
}

}  // namespace

std::array<double, 3> sample_erp(const RgbImage& erp, double u, double v) {
  return bilinear(erp, u, v, 0);
}

ViewImage render_view(const RgbImage& erp, const CameraPosed& pose, const CameraIntrinsicsd& k,
                      std::string scene_id) {
  if (erp.width < 2 || erp.height < 2) throw std::invalid_argument("ERP must be at least 2x2");
  if (std::abs(pose.phi_deg) > 90.0) throw std::invalid_argument("pose pitch outside [-90, 90]");

  ViewImage view;
  view.image = RgbImage(k.width, k.height);
  view.provenance = {std::move(scene_id), pose, k};

  // Pitch is applied as a rotation; yaw only moves longitude, so it becomes a
  // column offset in ERP space.
  const Matrix3d pitch = pitch_rotation(pose.phi_deg);
  const ColumnShift shift = split_shift(wrap_degrees(pose.theta_deg) * erp.width / 360.0);
  const double two_pi = 2.0 * kPi<double>;

  for (int j = 0; j < k.height; ++j) {
    for (int i = 0; i < k.width; ++i) {
      const Vector3d w = (pitch * view_pixel_ray<double>(i, j, k)).normalized();
      const double lon = std::atan2(w.x(), w.z());
      const double lat = std::asin(std::clamp(w.y(), -1.0, 1.0));
      const double u = (lon / two_pi + 0.5) * erp.width + shift.frac;
      const double v = (-lat / kPi<double> + 0.5) * erp.height;
      const auto rgb = bilinear(erp, u, v, shift.whole);
      std::uint8_t* dst = view.image.at(i, j);
      for (int ch = 0; ch < 3; ++ch) dst[ch] = to_byte(rgb[ch]);
    }
  }
  return view;
}

}  // namespace pano
