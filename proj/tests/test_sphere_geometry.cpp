#include "pano/sphere_geometry.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pano;

namespace {

SphericalRectd random_rect(std::mt19937_64& rng, double fov_lo = 10.0, double fov_hi = 170.0) {
  std::uniform_real_distribution<double> theta(-180.0, 180.0), phi(-90.0, 90.0), fov(fov_lo, fov_hi);
  return {{theta(rng), phi(rng)}, fov(rng), fov(rng)};
}

Vector3d v3(double x, double y, double z) { return Vector3d(x, y, z); }

}  // namespace

TEST(Directions, Examples) {
  EXPECT_TRUE(dir_to_vec(SphericalDirectiond{0, 0}).isApprox(v3(0, 0, 1), 1e-15));
  EXPECT_NEAR((dir_to_vec(SphericalDirectiond{90, 0}) - v3(1, 0, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((dir_to_vec(SphericalDirectiond{0, 90}) - v3(0, 1, 0)).norm(), 0.0, 1e-15);

  const auto fwd = vec_to_dir(v3(0, 0, 1));
  EXPECT_EQ(fwd.theta_deg, 0.0);
  EXPECT_EQ(fwd.phi_deg, 0.0);
  const auto rear = vec_to_dir(v3(0, 0, -1));
  EXPECT_EQ(rear.theta_deg, -180.0);
  EXPECT_EQ(rear.phi_deg, 0.0);
  EXPECT_EQ(vec_to_dir(v3(0, 1, 0)).theta_deg, 0.0);
  EXPECT_EQ(vec_to_dir(v3(0, -1, 0)).phi_deg, -90.0);
}

TEST(Directions, RoundTripRandom) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> theta(-180.0, 180.0), phi(-89.9, 89.9);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const SphericalDirectiond d{theta(rng), phi(rng)};
    const Vector3d v = dir_to_vec(d);
    EXPECT_NEAR(v.norm(), 1.0, 1e-12);
    const auto back = vec_to_dir(v);
    worst = std::max({worst, std::abs(std::remainder(d.theta_deg - back.theta_deg, 360.0)),
                      std::abs(d.phi_deg - back.phi_deg)});
    EXPECT_GE(back.theta_deg, -180.0);
    EXPECT_LT(back.theta_deg, 180.0);
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(Directions, MatchesIndependentRotation) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> theta(-180.0, 180.0), phi(-90.0, 90.0);
  for (int k = 0; k < 200; ++k) {
    const double t = theta(rng), p = phi(rng);
    EXPECT_LT((dir_to_vec(SphericalDirectiond{t, p}) - oracle::direction(t, p)).norm(), 1e-14);
    EXPECT_LT((camera_to_world(t, p) - oracle::rotation(t, p)).norm(), 1e-14);
  }
}

TEST(WrapDegrees, RangeAndIdentity) {
  EXPECT_EQ(wrap_degrees(180.0), -180.0);
  EXPECT_EQ(wrap_degrees(-180.0), -180.0);
  EXPECT_EQ(wrap_degrees(540.0), -180.0);
  EXPECT_EQ(wrap_degrees(-190.0), 170.0);
  EXPECT_EQ(wrap_degrees(359.0), -1.0);
  EXPECT_EQ(wrap_degrees(12.345), 12.345);
}

TEST(RectContains, Examples) {
  const SphericalRectd r{{0, 0}, 60, 60};
  EXPECT_TRUE(rect_contains(r, dir_to_vec(r.center)));
  EXPECT_FALSE(rect_contains(r, Vector3d(-dir_to_vec(r.center))));
  EXPECT_TRUE(rect_contains(r, dir_to_vec(SphericalDirectiond{29.99, 0})));
  EXPECT_FALSE(rect_contains(r, dir_to_vec(SphericalDirectiond{30.01, 0})));
  EXPECT_TRUE(rect_contains(r, dir_to_vec(SphericalDirectiond{0, 29.99})));
  EXPECT_FALSE(rect_contains(r, dir_to_vec(SphericalDirectiond{0, -30.01})));
}

TEST(RectContains, AgreesWithAngleOracle) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int k = 0; k < 50; ++k) {
    const auto r = random_rect(rng);
    const RectMembership<double> lib(r);
    const oracle::RectTest ref(r);
    for (int s = 0; s < 2000; ++s) {
      const Vector3d v = Vector3d(g(rng), g(rng), g(rng)).normalized();
      EXPECT_EQ(lib(v), ref(v));
    }
  }
}

TEST(RectArea, ClosedFormExamples) {
  EXPECT_NEAR(rect_area(SphericalRectd{{0, 0}, 90, 90}), 2.0 * kPi<double> / 3.0, 1e-12);
  EXPECT_NEAR(rect_area(SphericalRectd{{0, 0}, 60, 60}), 4 * std::acos(-0.25) - 2 * kPi<double>, 1e-12);
  EXPECT_NEAR(rect_area(SphericalRectd{{0, 0}, 60, 60}), 1.0107210205683, 1e-12);
  EXPECT_NEAR(oracle::rect_area_mc(SphericalRectd{{0, 0}, 60, 60}, 1000000, 3) / 1.0107210205683, 1.0, 0.02);
  // Small-angle limit alpha * beta.
  const double a = deg_to_rad(0.1), b = deg_to_rad(0.2);
  EXPECT_NEAR(rect_area(SphericalRectd{{0, 0}, 0.1, 0.2}) / (a * b), 1.0, 1e-4);
}

TEST(RectArea, InvalidRectsRejected) {
  EXPECT_THROW(validate(SphericalRectd{{0, 0}, 0, 30}), std::invalid_argument);
  EXPECT_THROW(validate(SphericalRectd{{0, 0}, 30, 180}), std::invalid_argument);
  EXPECT_THROW(validate(SphericalRectd{{0, 91}, 30, 30}), std::invalid_argument);
  EXPECT_THROW((void)rect_intersection(SphericalRectd{{0, 0}, 200, 30}, SphericalRectd{{0, 0}, 30, 30}),
               std::invalid_argument);
}

TEST(RectArea, MonotoneInAlpha) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> fov(1.0, 179.0);
  for (int ladder = 0; ladder < 100; ++ladder) {
    const double beta = fov(rng);
    std::vector<double> alphas(20);
    for (auto& a : alphas) a = fov(rng);
    std::sort(alphas.begin(), alphas.end());
    alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
    for (std::size_t i = 1; i < alphas.size(); ++i) {
      EXPECT_LT(rect_area(SphericalRectd{{0, 0}, alphas[i - 1], beta}),
                rect_area(SphericalRectd{{0, 0}, alphas[i], beta}));
    }
  }
}

TEST(RectArea, MatchesMonteCarlo) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 8; ++k) {
    const auto r = random_rect(rng);
    const double mc = oracle::rect_area_mc(r, 200000, 100 + k);
    EXPECT_NEAR(mc / rect_area(r), 1.0, 0.02) << "alpha " << r.alpha_deg << " beta " << r.beta_deg;
  }
}

TEST(McAreaEstimate, Examples) {
  EXPECT_EQ(mc_area_estimate([](const Vector3d&) { return true; }, 1000, 9), 4.0 * kPi<double>);
  const double hemi = mc_area_estimate([](const Vector3d& v) { return v.z() > 0; }, 1000000, 1);
  EXPECT_NEAR(hemi / (2.0 * kPi<double>), 1.0, 0.01);
  const RectMembership<double> quad(SphericalRectd{{0, 0}, 90, 90});
  const double rect = mc_area_estimate(quad, 1000000, 2);
  EXPECT_NEAR(rect / (2.0 * kPi<double> / 3.0), 1.0, 0.02);
  EXPECT_EQ(mc_area_estimate(quad, 5000, 77), mc_area_estimate(quad, 5000, 77));
  EXPECT_THROW((void)mc_area_estimate(quad, 0, 1), std::invalid_argument);
}

TEST(Girard, Examples) {
  EXPECT_EQ(polygon_area_girard(SphericalPolygond{}), 0.0);
  const SphericalPolygond octant{{v3(1, 0, 0), v3(0, 1, 0), v3(0, 0, 1)}};
  EXPECT_NEAR(polygon_area_girard(octant), kPi<double> / 2.0, 1e-14);
}

TEST(Girard, RejectsInvalidPolygons) {
  // Clockwise octant.
  const SphericalPolygond cw{{v3(1, 0, 0), v3(0, 0, 1), v3(0, 1, 0)}};
  EXPECT_THROW((void)polygon_area_girard(cw), std::invalid_argument);
  // Non-convex quadrilateral (a dart).
  const SphericalPolygond dart{{Vector3d(v3(1, 0, 0.01).normalized()), Vector3d(v3(0, 1, 0.01).normalized()),
                                Vector3d(v3(0.3, 0.3, 1).normalized()), Vector3d(v3(1, 1, 0.5).normalized())}};
  EXPECT_THROW((void)polygon_area_girard(dart), std::invalid_argument);
  const SphericalPolygond two{{v3(1, 0, 0), v3(0, 1, 0)}};
  EXPECT_THROW((void)polygon_area_girard(two), std::invalid_argument);
}

TEST(Intersection, SelfMatchesClosedForm) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 100; ++k) {
    const auto r = random_rect(rng, 1.0, 179.0);
    const auto inter = rect_intersection(r, r);
    EXPECT_FALSE(inter.degenerate);
    EXPECT_EQ(inter.polygon.size(), 4u);
    EXPECT_NEAR(polygon_area_girard(inter.polygon), rect_area(r), 1e-9);
  }
}

TEST(Intersection, DisjointIsEmpty) {
  const SphericalRectd a{{0, 0}, 40, 40}, b{{-180, 0}, 40, 40};
  const auto inter = rect_intersection(a, b);
  EXPECT_TRUE(inter.polygon.empty());
  EXPECT_FALSE(inter.degenerate);
  EXPECT_EQ(intersection_area(a, b), 0.0);
  EXPECT_EQ(sph_overlap(a, b), 0.0);
  EXPECT_EQ(sph_iou(a, b), 0.0);
}

TEST(Intersection, ShiftedDefaultViewsMatchMonteCarlo) {
  const SphericalRectd a{{0, 0}, 75.14, 60}, b{{5, 0}, 75.14, 60};
  const auto inter = rect_intersection(a, b);
  ASSERT_FALSE(inter.polygon.empty());
  const double exact = polygon_area_girard(inter.polygon);
  EXPECT_NEAR(exact / oracle::intersection_area_mc(a, b, 1000000, 11), 1.0, 0.02);

  const SphericalRectd c{{25, 0}, 75.14, 60};
  const double ov = sph_overlap(c, a);
  EXPECT_GT(ov, 0.0);
  EXPECT_LT(ov, 1.0);
  const double mc_ratio = oracle::intersection_area_mc(c, a, 1000000, 12) / oracle::rect_area_mc(a, 1000000, 13);
  EXPECT_NEAR(ov / mc_ratio, 1.0, 0.02);
}

TEST(Intersection, RandomPairsMatchMonteCarlo) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  for (int k = 0; k < 10; ++k) {
    const auto a = random_rect(rng);
    SphericalRectd b = random_rect(rng);
    b.center = {wrap_degrees(a.center.theta_deg + unit(rng) * a.alpha_deg),
                std::clamp(a.center.phi_deg + unit(rng) * a.beta_deg, -90.0, 90.0)};
    const double exact = intersection_area(a, b);
    const double mc = oracle::intersection_area_mc(a, b, 300000, 200 + k);
    EXPECT_NEAR(exact, mc, std::max(0.03 * mc, 4e-3));
  }
}

TEST(Intersection, EdgeContactIsDegenerate) {
  // Two 40x40 views side by side on the equator share the great-circle edge x = 20.
  const SphericalRectd a{{0, 0}, 40, 40}, b{{40, 0}, 40, 40};
  const auto inter = rect_intersection(a, b);
  EXPECT_TRUE(inter.polygon.empty());
  EXPECT_TRUE(inter.degenerate);
  EXPECT_EQ(intersection_area(a, b), 0.0);
}

TEST(Intersection, NestedRects) {
  const SphericalRectd outer{{10, 5}, 100, 80}, inner{{12, 4}, 20, 10};
  EXPECT_NEAR(intersection_area(outer, inner), rect_area(inner), 1e-9);
  EXPECT_NEAR(sph_overlap(outer, inner), 1.0, 1e-9);
  EXPECT_NEAR(sph_iou(outer, inner), rect_area(inner) / rect_area(outer), 1e-9);
}

TEST(Overlap, RandomPairInvariants) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(-0.6, 0.6);
  for (int k = 0; k < 100; ++k) {
    const auto a = random_rect(rng);
    SphericalRectd b = random_rect(rng);
    b.center = {wrap_degrees(a.center.theta_deg + unit(rng) * a.alpha_deg),
                std::clamp(a.center.phi_deg + unit(rng) * a.beta_deg, -90.0, 90.0)};
    const double inter = intersection_area(a, b);
    EXPECT_LE(inter, std::min(rect_area(a), rect_area(b)) + 1e-12);
    EXPECT_NEAR(sph_overlap(a, b) * rect_area(b), sph_overlap(b, a) * rect_area(a), 1e-9);
    EXPECT_EQ(sph_iou(a, b), sph_iou(b, a));
    EXPECT_LE(sph_iou(a, b), std::min(sph_overlap(a, b), sph_overlap(b, a)) + 1e-15);
    EXPECT_NEAR(sph_iou(a, a), 1.0, 1e-9);
    EXPECT_NEAR(sph_overlap(a, a), 1.0, 1e-9);
    const auto& poly = rect_intersection(a, b).polygon;
    for (std::size_t i = 0; i < poly.size(); ++i) EXPECT_NEAR(poly.vertices[i].norm(), 1.0, 1e-12);
  }
}
