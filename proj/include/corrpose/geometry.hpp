#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "corrpose/errors.hpp"
#include "corrpose/rng.hpp"

namespace corrpose {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double squared_norm(Vec3 a) { return dot(a, a); }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline double norm_l1(Vec3 a) { return std::fabs(a.x) + std::fabs(a.y) + std::fabs(a.z); }
inline Vec3 normalized(Vec3 a) {
    const double n = norm(a);
    return {a.x / n, a.y / n, a.z / n};
}

// Row-major 3x3 matrix, just enough for rotations and small solves.
struct Mat3 {
    std::array<std::array<double, 3>, 3> m{};

    static Mat3 identity() {
        Mat3 r;
        r.m[0][0] = r.m[1][1] = r.m[2][2] = 1.0;
        return r;
    }
    static Mat3 from_columns(Vec3 c0, Vec3 c1, Vec3 c2) {
        Mat3 r;
        r.m[0] = {c0.x, c1.x, c2.x};
        r.m[1] = {c0.y, c1.y, c2.y};
        r.m[2] = {c0.z, c1.z, c2.z};
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
        return r;
    }
    double det() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }
};

inline Vec3 operator*(const Mat3& a, Vec3 v) {
    return {a.m[0][0] * v.x + a.m[0][1] * v.y + a.m[0][2] * v.z,
            a.m[1][0] * v.x + a.m[1][1] * v.y + a.m[1][2] * v.z,
            a.m[2][0] * v.x + a.m[2][1] * v.y + a.m[2][2] * v.z};
}
inline Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a.m[i][k] * b.m[k][j];
            r.m[i][j] = s;
        }
    return r;
}

// Unit quaternion, scalar-first. Normalized after every construction and product.
struct Quaternion {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    static Quaternion identity() { return {}; }

    static Quaternion from_axis_angle(Vec3 axis, double angle_rad) {
        const double n = std::sqrt(dot(axis, axis));
        if (n == 0.0) return identity();
        const double h = 0.5 * angle_rad;
        const double s = std::sin(h) / n;
        return Quaternion{std::cos(h), s * axis.x, s * axis.y, s * axis.z}.normalized();
    }

    // Columns of `rot` must form a right-handed orthonormal basis.
    static Quaternion from_matrix(const Mat3& rot) {
        const auto& m = rot.m;
        const double tr = m[0][0] + m[1][1] + m[2][2];
        double w, x, y, z;
        if (tr > 0.0) {
            double s = std::sqrt(tr + 1.0) * 2.0;
            w = 0.25 * s;
            x = (m[2][1] - m[1][2]) / s;
            y = (m[0][2] - m[2][0]) / s;
            z = (m[1][0] - m[0][1]) / s;
        } else if (m[0][0] > m[1][1] && m[0][0] > m[2][2]) {
            double s = std::sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]) * 2.0;
            w = (m[2][1] - m[1][2]) / s;
            x = 0.25 * s;
            y = (m[0][1] + m[1][0]) / s;
            z = (m[0][2] + m[2][0]) / s;
        } else if (m[1][1] > m[2][2]) {
            double s = std::sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]) * 2.0;
            w = (m[0][2] - m[2][0]) / s;
            x = (m[0][1] + m[1][0]) / s;
            y = 0.25 * s;
            z = (m[1][2] + m[2][1]) / s;
        } else {
            double s = std::sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]) * 2.0;
            w = (m[1][0] - m[0][1]) / s;
            x = (m[0][2] + m[2][0]) / s;
            y = (m[1][2] + m[2][1]) / s;
            z = 0.25 * s;
        }
        return Quaternion{w, x, y, z}.normalized();
    }

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

    Quaternion normalized() const {
        const double n = norm();
        return {w / n, x / n, y / n, z / n};
    }

    Quaternion conjugate() const { return {w, -x, -y, -z}; }

    Mat3 to_matrix() const {
        Mat3 r;
        const double xx = x * x, yy = y * y, zz = z * z;
        const double wx = w * x, wy = w * y, wz = w * z;
        const double xy = x * y, xz = x * z, yz = y * z;
        r.m[0] = {1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)};
        r.m[1] = {2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)};
        r.m[2] = {2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)};
        return r;
    }

    Vec3 rotate(Vec3 v) const {
        // q v q* expanded via the double-cross form
        const Vec3 u{x, y, z};
        const Vec3 t = 2.0 * cross(u, v);
        return v + w * t + cross(u, t);
    }
};

inline Quaternion operator*(const Quaternion& a, const Quaternion& b) {
    return Quaternion{a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
                      a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
                      a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
                      a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w}
        .normalized();
}

// Rigid transform taking model-frame points into the camera frame.
struct RigidPose {
    Quaternion rotation;
    Vec3 translation;

    static RigidPose identity() { return {}; }

    Vec3 transform(Vec3 p) const { return rotation.rotate(p) + translation; }

    RigidPose inverse() const {
        const Quaternion qi = rotation.conjugate();
        return {qi, -qi.rotate(translation)};
    }
};

// a.after(b): apply b first, then a.
inline RigidPose compose(const RigidPose& a, const RigidPose& b) {
    return {a.rotation * b.rotation, a.rotation.rotate(b.translation) + a.translation};
}

struct CameraIntrinsics {
    double fx = 0.0, fy = 0.0;
    double cx = 0.0, cy = 0.0;
    int width = 0, height = 0;

    bool valid() const {
        return fx > 0.0 && fy > 0.0 && cx >= 0.0 && cx < width && cy >= 0.0 && cy < height;
    }
};

inline constexpr double kMinDepth = 1e-9;

inline Vec2 project_camera_point(Vec3 cam, const CameraIntrinsics& k) {
    if (cam.z <= kMinDepth) throw NonPositiveDepth(cam.z);
    return {k.fx * cam.x / cam.z + k.cx, k.fy * cam.y / cam.z + k.cy};
}

inline Vec2 project(Vec3 point, const RigidPose& pose, const CameraIntrinsics& k) {
    return project_camera_point(pose.transform(point), k);
}

// Geodesic angle between two rotations, in [0, 180] degrees. Quaternion sign
// (double cover) is handled by the absolute value of the dot product.
inline double rotation_angle_deg(const RigidPose& a, const RigidPose& b) {
    const Quaternion& p = a.rotation;
    const Quaternion& q = b.rotation;
    double d = std::fabs(p.w * q.w + p.x * q.x + p.y * q.y + p.z * q.z);
    if (d > 1.0) d = 1.0;
    return 2.0 * std::acos(d) * 180.0 / M_PI;
}

struct PoseDistortionParams {
    double rot_sigma_deg = 0.0;
    double trans_sigma_xy = 0.0;  // meters, camera x/y
    double trans_sigma_z = 0.0;   // meters, camera z
};

// Random pose near `pose`: object-frame axis-angle spin with angle |N(0, rot_sigma)|
// about a uniformly random axis, plus Gaussian translation noise with separate
// image-plane and depth scales.
inline RigidPose sample_distorted_pose(const RigidPose& pose, const PoseDistortionParams& params,
                                       std::uint64_t seed) {
    Rng rng(seed);
    // uniform direction from two uniforms (z and azimuth)
    const double zc = rng.uniform(-1.0, 1.0);
    const double az = rng.uniform(0.0, 2.0 * M_PI);
    const double rr = std::sqrt(std::max(0.0, 1.0 - zc * zc));
    const Vec3 axis{rr * std::cos(az), rr * std::sin(az), zc};
    const double angle = std::fabs(rng.normal(params.rot_sigma_deg * M_PI / 180.0));
    const Quaternion spin = Quaternion::from_axis_angle(axis, angle);

    RigidPose out;
    out.rotation = pose.rotation * spin;
    out.translation = pose.translation + Vec3{rng.normal(params.trans_sigma_xy),
                                              rng.normal(params.trans_sigma_xy),
                                              rng.normal(params.trans_sigma_z)};
    return out;
}

}  // namespace corrpose
