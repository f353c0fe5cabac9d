#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "corrpose/geometry.hpp"

using namespace corrpose;

namespace {

const CameraIntrinsics kFixtureK{100.0, 100.0, 160.0, 120.0, 320, 240};

RigidPose random_pose(Rng& rng) {
    const Vec3 axis = normalized(Vec3{rng.normal(), rng.normal(), rng.normal()});
    RigidPose p;
    p.rotation = Quaternion::from_axis_angle(axis, rng.uniform(0.0, M_PI));
    p.translation = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(1.0, 4.0)};
    return p;
}

}  // namespace

TEST_CASE("project maps the optical axis point to the principal point", "[geometry]") {
    const Vec2 px = project({0, 0, 1}, RigidPose::identity(), kFixtureK);
    CHECK(px.x == Catch::Approx(160.0));
    CHECK(px.y == Catch::Approx(120.0));
}

TEST_CASE("project is linear in x/z", "[geometry]") {
    const Vec2 px = project({0.1, 0, 1}, RigidPose::identity(), kFixtureK);
    CHECK(px.x == Catch::Approx(170.0));
    CHECK(px.y == Catch::Approx(120.0));
}

TEST_CASE("project rejects points behind the camera", "[geometry]") {
    CHECK_THROWS_AS(project({0, 0, -1}, RigidPose::identity(), kFixtureK), NonPositiveDepth);
}

TEST_CASE("projecting through a composed pose equals projecting in two steps", "[geometry]") {
    Rng rng(101);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        const RigidPose a = random_pose(rng);
        const RigidPose b = random_pose(rng);
        const Vec3 x{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
        const Vec3 staged = a.transform(b.transform(x));
        if (staged.z <= 1e-3) continue;  // keep clear of the depth guard
        const Vec2 p1 = project(x, compose(a, b), kFixtureK);
        const Vec2 p2 = project_camera_point(staged, kFixtureK);
        REQUIRE(std::fabs(p1.x - p2.x) < 1e-9);
        REQUIRE(std::fabs(p1.y - p2.y) < 1e-9);
        ++checked;
    }
    CHECK(checked > 500);
}

TEST_CASE("rotation_angle_deg basics", "[geometry]") {
    Rng rng(7);
    const RigidPose p = random_pose(rng);
    CHECK(rotation_angle_deg(p, p) == Catch::Approx(0.0).margin(1e-12));

    RigidPose z90;
    z90.rotation = Quaternion::from_axis_angle({0, 0, 1}, M_PI / 2);
    CHECK(rotation_angle_deg(RigidPose::identity(), z90) == Catch::Approx(90.0).margin(1e-9));

    RigidPose neg = p;
    neg.rotation = {-p.rotation.w, -p.rotation.x, -p.rotation.y, -p.rotation.z};
    CHECK(rotation_angle_deg(p, neg) == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("rotation_angle_deg is symmetric and satisfies the triangle inequality", "[geometry]") {
    Rng rng(42);
    for (int i = 0; i < 300; ++i) {
        const RigidPose a = random_pose(rng);
        const RigidPose b = random_pose(rng);
        const RigidPose c = random_pose(rng);
        const double ab = rotation_angle_deg(a, b);
        const double ba = rotation_angle_deg(b, a);
        const double bc = rotation_angle_deg(b, c);
        const double ac = rotation_angle_deg(a, c);
        REQUIRE(std::fabs(ab - ba) < 1e-6);
        REQUIRE(ac <= ab + bc + 1e-6);
    }
}

TEST_CASE("quaternion stays unit through composition", "[geometry]") {
    Rng rng(3);
    RigidPose acc = RigidPose::identity();
    for (int i = 0; i < 2000; ++i) {
        acc = compose(acc, random_pose(rng));
        const Quaternion& q = acc.rotation;
        const double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
        REQUIRE(std::fabs(n - 1.0) < 1e-9);
    }
    const Mat3 m = acc.rotation.to_matrix();
    const Mat3 mtm = m.transposed() * m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            REQUIRE(std::fabs(mtm.m[i][j] - (i == j ? 1.0 : 0.0)) < 1e-9);
    REQUIRE(std::fabs(m.det() - 1.0) < 1e-9);
}

TEST_CASE("sample_distorted_pose with zero sigmas returns the pose unchanged", "[geometry]") {
    Rng rng(11);
    const RigidPose p = random_pose(rng);
    const RigidPose q = sample_distorted_pose(p, {}, 123);
    CHECK(rotation_angle_deg(p, q) == Catch::Approx(0.0).margin(1e-12));
    CHECK(norm(p.translation - q.translation) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("sample_distorted_pose is deterministic given the seed", "[geometry]") {
    const PoseDistortionParams params{5.0, 0.01, 0.05};
    const RigidPose a = sample_distorted_pose(RigidPose::identity(), params, 77);
    const RigidPose b = sample_distorted_pose(RigidPose::identity(), params, 77);
    CHECK(a.rotation.w == b.rotation.w);
    CHECK(a.rotation.x == b.rotation.x);
    CHECK(a.translation.x == b.translation.x);
    CHECK(a.translation.z == b.translation.z);
}

TEST_CASE("sample_distorted_pose rotation noise stays within 6 sigma almost surely", "[geometry]") {
    // rot_sigma 5 deg: |N(0,5)| < 30 deg in well over 99.7% of draws
    const PoseDistortionParams params{5.0, 0.0, 0.0};
    int within = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const RigidPose q = sample_distorted_pose(RigidPose::identity(), params, 1000 + i);
        if (rotation_angle_deg(RigidPose::identity(), q) < 30.0) ++within;
    }
    CHECK(within >= static_cast<int>(0.997 * n));
}

TEST_CASE("pose JSON-roundtrip fields survive inverse/compose identities", "[geometry]") {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const RigidPose p = random_pose(rng);
        const RigidPose id = compose(p, p.inverse());
        CHECK(rotation_angle_deg(id, RigidPose::identity()) < 1e-9);
        CHECK(norm(id.translation) < 1e-12);
    }
}
