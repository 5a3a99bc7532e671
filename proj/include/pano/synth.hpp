#pragma once

// Procedural equirectangular test panoramas.
//
// Patterns:
//   direction        R = (theta + 180) / 360, G = (phi + 90) / 180, B = 0, scaled to 0..255
//   direction-theta  R = coarse theta as above; G, B = cos / sin of theta with a
//                    6 degree period, for sub-degree decoding
//   direction-phi    same for phi
//   checker          15 degree checkerboard in (theta, phi)
//   horizon          sky / ground gradient with a wavy horizon and seeded
//                    coloured discs; the only pattern that uses the seed

#include "pano/image.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pano {

inline constexpr double kPhasePeriodDeg = 6.0;

[[nodiscard]] const std::vector<std::string>& synth_patterns();

/// Throws std::invalid_argument on an unknown pattern or a size below 2x1.
[[nodiscard]] RgbImage synth_erp(int width, int height, const std::string& pattern,
                                 std::uint64_t seed);

/// Decodes one pixel of the plain `direction` pattern, in degrees.
[[nodiscard]] std::pair<double, double> decode_direction(const std::uint8_t* rgb);

/// Decodes one angle from a phase-encoded pattern pixel. `lo`/`hi` is the
/// range mapped onto R: [-180, 180) for theta, [-90, 90] for phi.
[[nodiscard]] double decode_phase_angle(const std::uint8_t* rgb, double lo, double hi);

/// Deterministic uniform [0, 1) draws; independent of the standard library's
/// distribution implementations.
class SplitRandom {
 public:
  explicit SplitRandom(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64();
  double uniform();  ///< [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

}  // namespace pano
