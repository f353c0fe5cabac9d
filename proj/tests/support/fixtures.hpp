#pragma once

// Procedural fixture meshes and small scanning oracles shared by the test
// suites. Everything here is deterministic.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "corrpose/correspond.hpp"
#include "corrpose/geometry.hpp"
#include "corrpose/mesh.hpp"
#include "corrpose/rng.hpp"

namespace fixtures {

using corrpose::Mesh;
using corrpose::Vec2;
using corrpose::Vec3;

inline Mesh unit_cube() {
    Mesh m;
    for (int i = 0; i < 8; ++i)
        m.vertices.push_back({(i & 1) ? 0.5 : -0.5, (i & 2) ? 0.5 : -0.5, (i & 4) ? 0.5 : -0.5});
    m.triangles = {{0, 1, 3}, {0, 3, 2}, {4, 6, 7}, {4, 7, 5}, {0, 4, 5}, {0, 5, 1},
                   {2, 3, 7}, {2, 7, 6}, {0, 2, 6}, {0, 6, 4}, {1, 5, 7}, {1, 7, 3}};
    return m;
}

// One midpoint-subdivision round; new vertices are optionally pushed onto the
// unit sphere (for icosphere refinement).
inline Mesh subdivide(const Mesh& in, bool spherify) {
    Mesh out;
    out.vertices = in.vertices;
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        if (const auto it = midpoint.find(key); it != midpoint.end()) return it->second;
        Vec3 p = 0.5 * (out.vertices[a] + out.vertices[b]);
        if (spherify) p = corrpose::normalized(p);
        out.vertices.push_back(p);
        const int idx = static_cast<int>(out.vertices.size()) - 1;
        midpoint.emplace(key, idx);
        return idx;
    };
    for (const auto& t : in.triangles) {
        const int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
        out.triangles.push_back({t[0], ab, ca});
        out.triangles.push_back({t[1], bc, ab});
        out.triangles.push_back({t[2], ca, bc});
        out.triangles.push_back({ab, bc, ca});
    }
    return out;
}

inline Mesh icosahedron() {
    const double p = (1.0 + std::sqrt(5.0)) / 2.0;
    Mesh m;
    m.vertices = {{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
                  {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
    for (Vec3& v : m.vertices) v = corrpose::normalized(v);
    m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                   {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                   {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                   {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    return m;
}

// Star-shaped bumpy sphere. `rounds` controls vertex density:
// 3 rounds = 642 vertices, 6 rounds = 40962 vertices.
inline Mesh blob(int rounds, double base_radius = 0.1) {
    Mesh m = icosahedron();
    for (int r = 0; r < rounds; ++r) m = subdivide(m, true);
    for (Vec3& v : m.vertices) {
        const double bump = 1.0 + 0.10 * std::sin(2.9 * v.x + 1.3) * std::cos(2.1 * v.y) +
                            0.08 * std::sin(1.7 * v.z + 0.4);
        v = (base_radius * bump) * v;
    }
    return m;
}

// Non-convex L-shaped bracket, legs in the xy plane, extruded along z.
inline Mesh l_bracket(int rounds = 3) {
    const double s = 0.1;                       // overall scale, meters
    const double W = 2.0 * s, T = 0.8 * s, H = 2.0 * s;
    const double z0 = 0.0, z1 = 0.8 * s;
    const std::array<Vec2, 6> outline{{{0, 0}, {W, 0}, {W, T}, {T, T}, {T, H}, {0, H}}};

    Mesh m;
    for (double z : {z0, z1})
        for (const Vec2& o : outline) m.vertices.push_back({o.x, o.y, z});
    auto cap = [&](int base, bool flip) {
        // two rectangles: the foot (0,1,2,3-ish) and the upright (3,4,5,0)
        const std::array<std::array<int, 3>, 4> tris{
            {{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 5}}};
        for (auto t : tris) {
            if (flip) std::swap(t[1], t[2]);
            m.triangles.push_back({base + t[0], base + t[1], base + t[2]});
        }
    };
    cap(0, true);
    cap(6, false);
    for (int e = 0; e < 6; ++e) {
        const int a = e, b = (e + 1) % 6;
        m.triangles.push_back({a, b, b + 6});
        m.triangles.push_back({a, b + 6, a + 6});
    }
    for (int r = 0; r < rounds; ++r) m = subdivide(m, false);
    return m;
}

inline void write_obj(const Mesh& m, const std::string& path) {
    std::ofstream out(path);
    out.precision(17);
    for (const Vec3& v : m.vertices) out << "v " << v.x << " " << v.y << " " << v.z << "\n";
    for (const auto& t : m.triangles)
        out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
}

// --- synthetic correspondence helpers ---------------------------------------

inline std::vector<corrpose::Correspondence2D3D> project_all(
    const std::vector<Vec3>& points, const corrpose::RigidPose& pose,
    const corrpose::CameraIntrinsics& k) {
    std::vector<corrpose::Correspondence2D3D> out;
    out.reserve(points.size());
    for (const Vec3& p : points) out.push_back({corrpose::project(p, pose, k), p});
    return out;
}

inline std::vector<Vec3> random_box_points(corrpose::Rng& rng, int n, double half) {
    std::vector<Vec3> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i)
        out.push_back({rng.uniform(-half, half), rng.uniform(-half, half),
                       rng.uniform(-half, half)});
    return out;
}

inline corrpose::RigidPose random_pose(corrpose::Rng& rng, double dist_lo = 0.4,
                                       double dist_hi = 0.8) {
    const corrpose::Vec3 axis{rng.normal(), rng.normal(), rng.normal()};
    const corrpose::Quaternion q =
        corrpose::Quaternion::from_axis_angle(axis, rng.uniform(0.0, 3.0));
    return {q, {rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05),
                rng.uniform(dist_lo, dist_hi)}};
}

// --- scanning oracles -------------------------------------------------------

// Ray through a pixel center against one triangle (Moller-Trumbore), camera
// frame. Returns depth (ray parameter along +z-normalized direction z value)
// or a negative value when missed.
inline double ray_triangle_depth(const Vec3& dir, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 e1 = b - a, e2 = c - a;
    const Vec3 pvec = corrpose::cross(dir, e2);
    const double det = corrpose::dot(e1, pvec);
    if (std::fabs(det) < 1e-14) return -1.0;
    const Vec3 tvec{-a.x, -a.y, -a.z};  // ray origin is the camera center
    const double uu = corrpose::dot(tvec, pvec) / det;
    if (uu < -1e-9 || uu > 1.0 + 1e-9) return -1.0;
    const Vec3 qvec = corrpose::cross(tvec, e1);
    const double vv = corrpose::dot(dir, qvec) / det;
    if (vv < -1e-9 || uu + vv > 1.0 + 1e-9) return -1.0;
    const double ray_t = corrpose::dot(e2, qvec) / det;
    if (ray_t <= 0.0) return -1.0;
    return ray_t * dir.z;
}

}  // namespace fixtures
