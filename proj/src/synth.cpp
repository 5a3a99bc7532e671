#include "pano/synth.hpp"

#include "pano/view_projection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pano {

namespace {

std::uint8_t quantize(double unit) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(unit * 255.0 + 0.5), 0.0, 255.0));
}

double ramp(double value, double lo, double hi) { return (value - lo) / (hi - lo); }

void phase_pixel(std::uint8_t* dst, double angle, double lo, double hi) {
  const double phase = 2.0 * kPi<double> * angle / kPhasePeriodDeg;
  dst[0] = quantize(ramp(angle, lo, hi));
  dst[1] = quantize(0.5 + 0.5 * std::cos(phase));
  dst[2] = quantize(0.5 + 0.5 * std::sin(phase));
}

struct Disc {
  Vector3d center;
  double cos_radius;
  std::array<std::uint8_t, 3> color;
};

std::array<double, 3> mix(const std::array<double, 3>& a, const std::array<double, 3>& b, double t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

RgbImage horizon_pattern(int width, int height, std::uint64_t seed) {
  SplitRandom rng(seed);
  const double a1 = rng.uniform(2.0, 8.0), p1 = rng.uniform(0.0, 2.0 * kPi<double>);
  const double a2 = rng.uniform(0.5, 3.0), p2 = rng.uniform(0.0, 2.0 * kPi<double>);
  std::vector<Disc> discs(6);
  for (auto& d : discs) {
    const double theta = rng.uniform(-180.0, 180.0);
    const double phi = rng.uniform(-30.0, 40.0);
    d.center = dir_to_vec(SphericalDirectiond{theta, phi});
    d.cos_radius = std::cos(deg_to_rad(rng.uniform(4.0, 18.0)));
    for (auto& c : d.color) c = static_cast<std::uint8_t>(rng.uniform(20.0, 250.0));
  }

  const std::array<double, 3> zenith{60, 110, 200}, sky{200, 220, 240};
  const std::array<double, 3> ground_near{110, 130, 70}, ground_far{50, 45, 35};
  RgbImage img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto d = erp_pixel_to_sphere<double>(x + 0.5, y + 0.5, width, height);
      const double t = deg_to_rad(d.theta_deg);
      const double horizon = a1 * std::sin(t + p1) + a2 * std::sin(2.0 * t + p2);
      std::array<double, 3> rgb = d.phi_deg >= horizon
                                      ? mix(sky, zenith, ramp(d.phi_deg, horizon, 90.0))
                                      : mix(ground_near, ground_far, ramp(d.phi_deg, horizon, -90.0));
      const Vector3d v = dir_to_vec(d);
      for (const auto& disc : discs) {
        if (v.dot(disc.center) > disc.cos_radius) {
          rgb = {double(disc.color[0]), double(disc.color[1]), double(disc.color[2])};
        }
      }
      std::uint8_t* dst = img.at(x, y);
      for (int c = 0; c < 3; ++c) dst[c] = quantize(rgb[c] / 255.0);
    }
  }
  return img;
}

}  // namespace

std::uint64_t SplitRandom::next_u64() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double SplitRandom::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

const std::vector<std::string>& synth_patterns() {
  static const std::vector<std::string> names = {"direction", "direction-theta", "direction-phi",
                                                 "checker", "horizon"};
  return names;
}

RgbImage synth_erp(int width, int height, const std::string& pattern, std::uint64_t seed) {
  if (width < 2 || height < 1) throw std::invalid_argument("panorama must be at least 2x1");
  const auto& names = synth_patterns();
  if (std::find(names.begin(), names.end(), pattern) == names.end()) {
    throw std::invalid_argument("unknown pattern '" + pattern + "'");
  }
  if (pattern == "horizon") return horizon_pattern(width, height, seed);

  RgbImage img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto d = erp_pixel_to_sphere<double>(x + 0.5, y + 0.5, width, height);
      std::uint8_t* dst = img.at(x, y);
      if (pattern == "direction") {
        dst[0] = quantize(ramp(d.theta_deg, -180.0, 180.0));
        dst[1] = quantize(ramp(d.phi_deg, -90.0, 90.0));
        dst[2] = 0;
      } else if (pattern == "direction-theta") {
        phase_pixel(dst, d.theta_deg, -180.0, 180.0);
      } else if (pattern == "direction-phi") {
        phase_pixel(dst, d.phi_deg, -90.0, 90.0);
      } else {
        const auto cell = [](double a) { return static_cast<long>(std::floor(a / 15.0)); };
        const bool white = ((cell(d.theta_deg + 180.0) + cell(d.phi_deg + 90.0)) & 1) == 0;
        std::fill(dst, dst + 3, white ? 235 : 20);
      }
    }
  }
  return img;
}

std::pair<double, double> decode_direction(const std::uint8_t* rgb) {
  return {rgb[0] / 255.0 * 360.0 - 180.0, rgb[1] / 255.0 * 180.0 - 90.0};
}

double decode_phase_angle(const std::uint8_t* rgb, double lo, double hi) {
  const double coarse = lo + rgb[0] / 255.0 * (hi - lo);
  double fine = std::atan2(rgb[2] - 127.5, rgb[1] - 127.5) / (2.0 * kPi<double>) * kPhasePeriodDeg;
  if (fine < 0.0) fine += kPhasePeriodDeg;
  const double periods = std::round((coarse - fine) / kPhasePeriodDeg);
  return fine + periods * kPhasePeriodDeg;
}

}  // namespace pano
