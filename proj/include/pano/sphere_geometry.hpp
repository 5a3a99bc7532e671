#pragma once

// Spherical rectangles (pinhole frustum footprints on the unit sphere) and the
// area / overlap / IoU machinery built on them.
//
// Angles cross the API in degrees and are converted to radians once, inside
// each function. World frame: x right, y up, z forward; longitude theta is
// measured from +z towards +x, latitude phi from the xz-plane towards +y.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace pano {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

template <typename Scalar>
inline constexpr Scalar kPi = std::numbers::pi_v<Scalar>;

/// Membership slack used by intersection construction.
inline constexpr double kMembershipEps = 1e-9;
/// Chordal distance under which two intersection vertices are merged.
inline constexpr double kVertexMergeTol = 1e-9;

template <typename Scalar>
[[nodiscard]] constexpr Scalar deg_to_rad(Scalar deg) noexcept {
  return deg * (kPi<Scalar> / Scalar(180));
}

template <typename Scalar>
[[nodiscard]] constexpr Scalar rad_to_deg(Scalar rad) noexcept {
  return rad * (Scalar(180) / kPi<Scalar>);
}

/// Reduces an angle in degrees into [-180, 180). Values already in range are
/// returned untouched so that round trips stay bit-exact.
template <typename Scalar>
[[nodiscard]] Scalar wrap_degrees(Scalar deg) noexcept {
  if (deg >= Scalar(-180) && deg < Scalar(180)) return deg;
  Scalar r = std::fmod(deg + Scalar(180), Scalar(360));
  if (r < 0) r += Scalar(360);
  Scalar out = r - Scalar(180);
  if (out >= Scalar(180)) out -= Scalar(360);
  return out;
}

template <typename Scalar>
struct SphericalDirection {
  Scalar theta_deg{0};  ///< longitude, [-180, 180)
  Scalar phi_deg{0};    ///< latitude, [-90, 90]
};

template <typename Scalar>
struct SphericalRect {
  SphericalDirection<Scalar> center;
  Scalar alpha_deg{0};  ///< horizontal field of view
  Scalar beta_deg{0};   ///< vertical field of view
};

/// Convex spherical polygon, vertices counterclockwise seen from outside.
template <typename Scalar>
struct SphericalPolygon {
  std::vector<Vector3<Scalar>> vertices;

  [[nodiscard]] bool empty() const noexcept { return vertices.empty(); }
  [[nodiscard]] std::size_t size() const noexcept { return vertices.size(); }
};

template <typename Scalar>
struct RectIntersection {
  SphericalPolygon<Scalar> polygon;
  /// Set when the rects touch along an edge or at a point: the contact is
  /// nonempty but has zero area, and the polygon is left empty.
  bool degenerate{false};
};

using SphericalDirectiond = SphericalDirection<double>;
using SphericalRectd = SphericalRect<double>;
using SphericalPolygond = SphericalPolygon<double>;
using RectIntersectiond = RectIntersection<double>;
using Vector3d = Vector3<double>;
using Matrix3d = Matrix3<double>;

template <typename Scalar>
void validate(const SphericalRect<Scalar>& r) {
  const auto ok = [](Scalar fov) { return fov > Scalar(0) && fov < Scalar(180); };
  if (!ok(r.alpha_deg) || !ok(r.beta_deg)) {
    throw std::invalid_argument("spherical rect fov must lie in (0, 180) degrees, got alpha=" +
                                std::to_string(double(r.alpha_deg)) +
                                " beta=" + std::to_string(double(r.beta_deg)));
  }
  if (std::abs(r.center.phi_deg) > Scalar(90)) {
    throw std::invalid_argument("spherical rect center latitude outside [-90, 90]");
  }
}

// ---------------------------------------------------------------------------
// Direction <-> vector

template <typename Scalar>
[[nodiscard]] Vector3<Scalar> dir_to_vec(const SphericalDirection<Scalar>& d) {
  const Scalar theta = deg_to_rad(d.theta_deg);
  const Scalar phi = deg_to_rad(d.phi_deg);
  const Scalar c = std::cos(phi);
  return {c * std::sin(theta), std::sin(phi), c * std::cos(theta)};
}

/// Inverse of dir_to_vec. At the poles longitude is undefined and reported as 0.
template <typename Scalar>
[[nodiscard]] SphericalDirection<Scalar> vec_to_dir(const Vector3<Scalar>& v) {
  const Scalar y = std::clamp(v.y(), Scalar(-1), Scalar(1));
  SphericalDirection<Scalar> d;
  d.phi_deg = rad_to_deg(std::asin(y));
  if (v.x() == Scalar(0) && v.z() == Scalar(0)) {
    d.theta_deg = Scalar(0);
  } else {
    d.theta_deg = wrap_degrees(rad_to_deg(std::atan2(v.x(), v.z())));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Camera rotations. yaw_rotation turns +z towards +x; pitch_rotation turns +z
// towards +y (positive pitch looks up). camera_to_world = Ry(theta) * Rx(phi).

template <typename Scalar>
[[nodiscard]] Matrix3<Scalar> yaw_rotation(Scalar theta_deg) {
  const Scalar t = deg_to_rad(theta_deg);
  const Scalar c = std::cos(t), s = std::sin(t);
  Matrix3<Scalar> r;
  r << c, 0, s,
       0, 1, 0,
      -s, 0, c;
  return r;
}

template <typename Scalar>
[[nodiscard]] Matrix3<Scalar> pitch_rotation(Scalar phi_deg) {
  const Scalar p = deg_to_rad(phi_deg);
  const Scalar c = std::cos(p), s = std::sin(p);
  Matrix3<Scalar> r;
  r << 1, 0, 0,
       0, c, s,
       0, -s, c;
  return r;
}

template <typename Scalar>
[[nodiscard]] Matrix3<Scalar> camera_to_world(Scalar theta_deg, Scalar phi_deg) {
  return yaw_rotation(theta_deg) * pitch_rotation(phi_deg);
}

// ---------------------------------------------------------------------------
// Membership and area

/// Membership test for one rect with the camera rotation and half-FOV
/// tangents computed once; cheap enough to call per Monte-Carlo sample.
template <typename Scalar>
class RectMembership {
 public:
  explicit RectMembership(const SphericalRect<Scalar>& r, Scalar eps = Scalar(0))
      : world_to_camera_(camera_to_world(r.center.theta_deg, r.center.phi_deg).transpose()),
        tan_x_(std::tan(deg_to_rad(r.alpha_deg) / 2)),
        tan_y_(std::tan(deg_to_rad(r.beta_deg) / 2)),
        eps_(eps) {}

  [[nodiscard]] bool operator()(const Vector3<Scalar>& v) const {
    const Vector3<Scalar> c = world_to_camera_ * v;
    return std::abs(c.x()) <= c.z() * tan_x_ + eps_ && std::abs(c.y()) <= c.z() * tan_y_ + eps_;
  }

 private:
  Matrix3<Scalar> world_to_camera_;
  Scalar tan_x_;
  Scalar tan_y_;
  Scalar eps_;
};

template <typename Scalar>
[[nodiscard]] bool rect_contains(const SphericalRect<Scalar>& r, const Vector3<Scalar>& v,
                                 Scalar eps = Scalar(0)) {
  return RectMembership<Scalar>(r, eps)(v);
}

template <typename Scalar>
[[nodiscard]] Scalar rect_area(const SphericalRect<Scalar>& r) {
  const Scalar sa = std::sin(deg_to_rad(r.alpha_deg) / 2);
  const Scalar sb = std::sin(deg_to_rad(r.beta_deg) / 2);
  return 4 * std::acos(-sa * sb) - 2 * kPi<Scalar>;
}

namespace detail {

// Inward unit normals of the four bounding great-circle planes and the four
// corner directions, all in world coordinates.
template <typename Scalar>
struct RectFrame {
  std::array<Vector3<Scalar>, 4> normals;
  std::array<Vector3<Scalar>, 4> corners;
};

template <typename Scalar>
RectFrame<Scalar> rect_frame(const SphericalRect<Scalar>& r) {
  const Matrix3<Scalar> rot = camera_to_world(r.center.theta_deg, r.center.phi_deg);
  const Scalar a = deg_to_rad(r.alpha_deg) / 2;
  const Scalar b = deg_to_rad(r.beta_deg) / 2;
  const Scalar ca = std::cos(a), sa = std::sin(a), cb = std::cos(b), sb = std::sin(b);
  RectFrame<Scalar> f;
  f.normals = {rot * Vector3<Scalar>(-ca, 0, sa), rot * Vector3<Scalar>(0, -cb, sb),
               rot * Vector3<Scalar>(ca, 0, sa), rot * Vector3<Scalar>(0, cb, sb)};
  const Scalar tx = std::tan(a), ty = std::tan(b);
  f.corners = {(rot * Vector3<Scalar>(tx, ty, 1)).normalized(),
               (rot * Vector3<Scalar>(-tx, ty, 1)).normalized(),
               (rot * Vector3<Scalar>(-tx, -ty, 1)).normalized(),
               (rot * Vector3<Scalar>(tx, -ty, 1)).normalized()};
  return f;
}

template <typename Scalar>
void push_unique(std::vector<Vector3<Scalar>>& out, const Vector3<Scalar>& v) {
  for (const auto& w : out) {
    if ((w - v).norm() < Scalar(kVertexMergeTol)) return;
  }
  out.push_back(v);
}

// Orthonormal tangent basis (e1, e2) at unit vector c with e1 x e2 = c.
template <typename Scalar>
std::pair<Vector3<Scalar>, Vector3<Scalar>> tangent_basis(const Vector3<Scalar>& c) {
  const Vector3<Scalar> helper =
      std::abs(c.y()) < Scalar(0.9) ? Vector3<Scalar>::UnitY() : Vector3<Scalar>::UnitX();
  const Vector3<Scalar> e1 = helper.cross(c).normalized();
  const Vector3<Scalar> e2 = c.cross(e1);
  return {e1, e2};
}

template <typename Scalar>
Vector3<Scalar> vertex_centroid(const std::vector<Vector3<Scalar>>& vs) {
  Vector3<Scalar> c = Vector3<Scalar>::Zero();
  for (const auto& v : vs) c += v;
  return c.normalized();
}

}  // namespace detail

/// Convex polygon covering a ∩ b. Built from the corners of each rect lying in
/// the other plus the pairwise crossings of their bounding great circles, then
/// sorted counterclockwise about the vertex centroid.
template <typename Scalar>
[[nodiscard]] RectIntersection<Scalar> rect_intersection(const SphericalRect<Scalar>& a,
                                                         const SphericalRect<Scalar>& b) {
  validate(a);
  validate(b);
  const Scalar eps = Scalar(kMembershipEps);
  const auto fa = detail::rect_frame(a);
  const auto fb = detail::rect_frame(b);
  const RectMembership<Scalar> in_a(a, eps);
  const RectMembership<Scalar> in_b(b, eps);

  std::vector<Vector3<Scalar>> verts;
  for (const auto& c : fa.corners) {
    if (in_b(c)) detail::push_unique(verts, c);
  }
  for (const auto& c : fb.corners) {
    if (in_a(c)) detail::push_unique(verts, c);
  }
  for (const auto& na : fa.normals) {
    for (const auto& nb : fb.normals) {
      const Vector3<Scalar> line = na.cross(nb);
      const Scalar len = line.norm();
      if (len < Scalar(1e-12)) continue;  // coincident planes
      for (const Scalar sign : {Scalar(1), Scalar(-1)}) {
        const Vector3<Scalar> p = sign * line / len;
        if (in_a(p) && in_b(p)) detail::push_unique(verts, p);
      }
    }
  }

  RectIntersection<Scalar> out;
  if (verts.size() < 3) {
    const bool touching = !verts.empty() || in_b(dir_to_vec(a.center)) || in_a(dir_to_vec(b.center));
    out.degenerate = touching;
    return out;
  }

  const Vector3<Scalar> centroid = detail::vertex_centroid(verts);
  const auto [e1, e2] = detail::tangent_basis(centroid);
  std::vector<std::pair<Scalar, Vector3<Scalar>>> keyed;
  keyed.reserve(verts.size());
  for (const auto& v : verts) keyed.emplace_back(std::atan2(v.dot(e2), v.dot(e1)), v);
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& l, const auto& r) { return l.first < r.first; });
  out.polygon.vertices.reserve(keyed.size());
  for (const auto& [angle, v] : keyed) out.polygon.vertices.push_back(v);
  return out;
}

/// Area of a convex spherical polygon from its interior angles:
/// sum(omega_i) - (n - 2) * pi. Throws on non-convex or self-intersecting input.
template <typename Scalar>
[[nodiscard]] Scalar polygon_area_girard(const SphericalPolygon<Scalar>& p) {
  const auto& vs = p.vertices;
  const std::size_t n = vs.size();
  if (n == 0) return Scalar(0);
  if (n < 3) throw std::invalid_argument("spherical polygon needs at least 3 vertices");

  // Every turn must be counterclockwise (seen from outside) ...
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v0 = vs[i];
    const auto& v1 = vs[(i + 1) % n];
    const auto& v2 = vs[(i + 2) % n];
    if (v0.dot(v1.cross(v2)) < Scalar(-1e-12)) {
      throw std::invalid_argument("spherical polygon is not convex counterclockwise");
    }
  }
  // ... and the boundary must wind exactly once around the centroid.
  const Vector3<Scalar> centroid = detail::vertex_centroid(vs);
  const auto [e1, e2] = detail::tangent_basis(centroid);
  Scalar winding = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v0 = vs[i];
    const auto& v1 = vs[(i + 1) % n];
    Scalar step = std::atan2(v1.dot(e2), v1.dot(e1)) - std::atan2(v0.dot(e2), v0.dot(e1));
    if (step < 0) step += 2 * kPi<Scalar>;
    if (!(step > Scalar(0) && step < kPi<Scalar>)) {
      throw std::invalid_argument("spherical polygon is self-intersecting");
    }
    winding += step;
  }
  if (std::abs(winding - 2 * kPi<Scalar>) > Scalar(1e-6)) {
    throw std::invalid_argument("spherical polygon winds more than once");
  }

  Scalar angle_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& prev = vs[(i + n - 1) % n];
    const auto& cur = vs[i];
    const auto& next = vs[(i + 1) % n];
    const Vector3<Scalar> t_prev = prev - prev.dot(cur) * cur;
    const Vector3<Scalar> t_next = next - next.dot(cur) * cur;
    angle_sum += std::atan2(t_prev.cross(t_next).norm(), t_prev.dot(t_next));
  }
  return angle_sum - Scalar(n - 2) * kPi<Scalar>;
}

template <typename Scalar>
[[nodiscard]] Scalar intersection_area(const SphericalRect<Scalar>& a,
                                       const SphericalRect<Scalar>& b) {
  // Fixed argument order keeps the result bitwise symmetric.
  const auto key = [](const SphericalRect<Scalar>& r) {
    return std::tuple(r.center.theta_deg, r.center.phi_deg, r.alpha_deg, r.beta_deg);
  };
  const auto inter = key(b) < key(a) ? rect_intersection(b, a) : rect_intersection(a, b);
  if (inter.polygon.empty()) return Scalar(0);
  return polygon_area_girard(inter.polygon);
}

/// Fraction of `init` covered by `adj`.
template <typename Scalar>
[[nodiscard]] Scalar sph_overlap(const SphericalRect<Scalar>& adj,
                                 const SphericalRect<Scalar>& init) {
  return std::min(Scalar(1), intersection_area(adj, init) / rect_area(init));
}

template <typename Scalar>
[[nodiscard]] Scalar sph_iou(const SphericalRect<Scalar>& adj, const SphericalRect<Scalar>& init) {
  const Scalar inter = intersection_area(adj, init);
  // The polygon and closed-form areas can disagree in the last bits.
  return std::min(Scalar(1), inter / (rect_area(adj) + rect_area(init) - inter));
}

/// Monte-Carlo solid angle of {v : region(v)}: uniform directions drawn as
/// normalized Gaussian triples from a seeded generator.
template <typename Predicate>
[[nodiscard]] double mc_area_estimate(Predicate&& region, std::uint64_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("mc_area_estimate needs at least one sample");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uint64_t hits = 0;
  for (std::uint64_t k = 0; k < n; ++k) {
    Vector3d v;
    double len = 0.0;
    do {
      v = Vector3d(gauss(rng), gauss(rng), gauss(rng));
      len = v.norm();
    } while (len == 0.0);
    if (region(Vector3d(v / len))) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n) * 4.0 * kPi<double>;
}

}  // namespace pano
