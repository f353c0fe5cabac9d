#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <vector>

#include "corrpose/errors.hpp"
#include "corrpose/geometry.hpp"
#include "corrpose/mesh.hpp"

namespace corrpose {

// Per-pixel object-id / U-class / V-class / depth images. id 0 means
// background; u_class, v_class and depth are meaningful only on foreground.
struct CorrespondenceMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> id;
    std::vector<std::uint8_t> u_class;
    std::vector<std::uint8_t> v_class;
    std::vector<float> depth;  // meters, 0 on background

    CorrespondenceMap() = default;
    CorrespondenceMap(int w, int h)
        : width(w), height(h), id(size_t(w) * h, 0), u_class(size_t(w) * h, 0),
          v_class(size_t(w) * h, 0), depth(size_t(w) * h, 0.0f) {}

    size_t index(int x, int y) const { return size_t(y) * width + x; }
    bool foreground(int x, int y) const { return id[index(x, y)] != 0; }
    size_t pixel_count() const { return size_t(width) * height; }
};

struct ViewSample {
    RigidPose pose;
    double azimuth = 0.0;    // degrees
    double elevation = 0.0;  // degrees
    double inplane = 0.0;    // degrees
};

// Regular viewpoint grid on the upper half-sphere around `centroid`:
// azimuth over [0, 360), elevation over [0, 90], in-plane roll over
// [-30, 30]. Every pose places the centroid at camera coords (0, 0, radius).
inline std::vector<ViewSample> sample_viewpoints(int n_azimuth, int n_elevation, int n_inplane,
                                                 double radius, const Vec3& centroid = {0, 0, 0}) {
    assert(n_azimuth >= 1 && n_elevation >= 1 && n_inplane >= 1 && radius > 0.0);
    constexpr double deg = 3.14159265358979323846 / 180.0;
    std::vector<ViewSample> out;
    out.reserve(size_t(n_azimuth) * n_elevation * n_inplane);
    for (int ia = 0; ia < n_azimuth; ++ia) {
        const double az = 360.0 * ia / n_azimuth;
        for (int ie = 0; ie < n_elevation; ++ie) {
            const double el = n_elevation == 1 ? 0.0 : 90.0 * ie / (n_elevation - 1);
            const Vec3 d{std::cos(el * deg) * std::cos(az * deg),
                         std::cos(el * deg) * std::sin(az * deg), std::sin(el * deg)};
            const Vec3 eye = centroid + radius * d;
            const Vec3 zc = normalized(centroid - eye);
            const Vec3 up = std::fabs(dot(zc, Vec3{0, 0, 1})) > 0.9999 ? Vec3{1, 0, 0}
                                                                       : Vec3{0, 0, 1};
            const Vec3 xc = normalized(cross(zc, up));
            const Vec3 yc = cross(zc, xc);
            const Mat3 base = Mat3::from_columns(xc, yc, zc).transposed();
            const Vec3 tbase = -1.0 * (base * eye);
            for (int ii = 0; ii < n_inplane; ++ii) {
                const double ip = n_inplane == 1 ? 0.0 : -30.0 + 60.0 * ii / (n_inplane - 1);
                const double c = std::cos(ip * deg), s = std::sin(ip * deg);
                Mat3 roll = Mat3::identity();
                roll.m[0][0] = c;
                roll.m[0][1] = -s;
                roll.m[1][0] = s;
                roll.m[1][1] = c;
                const Mat3 rot = roll * base;
                out.push_back({RigidPose{Quaternion::from_matrix(rot).normalized(), roll * tbase},
                               az, el, ip});
            }
        }
    }
    return out;
}

struct RenderItem {
    const CorrespondenceModel* model = nullptr;
    int object_id = 0;
    RigidPose pose;
};

namespace detail {

inline double edge(const Vec2& a, const Vec2& b, const Vec2& p) {
    return (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
}

// Top-left fill rule, screen y growing downward: a pixel exactly on an edge
// belongs to the triangle only if that edge is a top or a left edge.
inline bool top_left(const Vec2& a, const Vec2& b) {
    return (a.y == b.y && b.x > a.x) || b.y < a.y;
}

inline void rasterize(CorrespondenceMap& map, std::vector<double>& zbuf,
                      const CorrespondenceModel& model, int object_id, const RigidPose& pose,
                      const CameraIntrinsics& k) {
    const size_t nv = model.mesh.vertices.size();
    std::vector<Vec3> cam(nv);
    std::vector<Vec2> scr(nv);
    for (size_t i = 0; i < nv; ++i) {
        cam[i] = pose.transform(model.mesh.vertices[i]);
        if (cam[i].z > kMinDepth)
            scr[i] = {k.fx * cam[i].x / cam[i].z + k.cx, k.fy * cam[i].y / cam[i].z + k.cy};
    }

    for (const auto& tri : model.mesh.triangles) {
        int i0 = tri[0], i1 = tri[1], i2 = tri[2];
        if (cam[i0].z <= kMinDepth || cam[i1].z <= kMinDepth || cam[i2].z <= kMinDepth)
            continue;  // no near-plane clipping; drop the triangle

        Vec2 p0 = scr[i0], p1 = scr[i1], p2 = scr[i2];
        double area2 = edge(p0, p1, p2);
        if (area2 == 0.0) continue;
        if (area2 < 0.0) {  // normalize winding so all edge values are >= 0 inside
            std::swap(i1, i2);
            std::swap(p1, p2);
            area2 = -area2;
        }

        const std::array<double, 3> uu =
            unwrap_u_triangle(model.uv_cont[i0].x, model.uv_cont[i1].x, model.uv_cont[i2].x);
        const std::array<double, 3> vv{model.uv_cont[i0].y, model.uv_cont[i1].y,
                                       model.uv_cont[i2].y};
        const std::array<double, 3> iz{1.0 / cam[i0].z, 1.0 / cam[i1].z, 1.0 / cam[i2].z};

        const double minx = std::min({p0.x, p1.x, p2.x}), maxx = std::max({p0.x, p1.x, p2.x});
        const double miny = std::min({p0.y, p1.y, p2.y}), maxy = std::max({p0.y, p1.y, p2.y});
        const int x0 = std::max(0, int(std::ceil(minx - 0.5)));
        const int x1 = std::min(k.width - 1, int(std::floor(maxx - 0.5)));
        const int y0 = std::max(0, int(std::ceil(miny - 0.5)));
        const int y1 = std::min(k.height - 1, int(std::floor(maxy - 0.5)));

        const bool tl0 = top_left(p1, p2), tl1 = top_left(p2, p0), tl2 = top_left(p0, p1);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const Vec2 s{x + 0.5, y + 0.5};
                const double w0 = edge(p1, p2, s);
                const double w1 = edge(p2, p0, s);
                const double w2 = edge(p0, p1, s);
                if (!((w0 > 0.0 || (w0 == 0.0 && tl0)) && (w1 > 0.0 || (w1 == 0.0 && tl1)) &&
                      (w2 > 0.0 || (w2 == 0.0 && tl2))))
                    continue;
                const double b0 = w0 / area2, b1 = w1 / area2, b2 = w2 / area2;
                const double z = 1.0 / (b0 * iz[0] + b1 * iz[1] + b2 * iz[2]);
                const size_t idx = map.index(x, y);
                if (!(z < zbuf[idx])) continue;
                const double g0 = b0 * iz[0] * z, g1 = b1 * iz[1] * z, g2 = b2 * iz[2] * z;
                zbuf[idx] = z;
                map.id[idx] = std::uint8_t(object_id);
                map.u_class[idx] = quantize_uv(wrap_u(g0 * uu[0] + g1 * uu[1] + g2 * uu[2]));
                map.v_class[idx] = quantize_uv(g0 * vv[0] + g1 * vv[1] + g2 * vv[2]);
                map.depth[idx] = float(z);
            }
        }
    }
}

}  // namespace detail

// Multi-object render into one shared z-buffer. Items are processed in
// ascending object_id order so depth ties resolve to the lower id.
inline CorrespondenceMap render_multi(std::span<const RenderItem> items,
                                      const CameraIntrinsics& k) {
    std::set<int> seen;
    for (const auto& it : items)
        if (!seen.insert(it.object_id).second) throw DuplicateObjectId(it.object_id);

    std::vector<size_t> order(items.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return items[a].object_id < items[b].object_id; });

    CorrespondenceMap map(k.width, k.height);
    std::vector<double> zbuf(map.pixel_count(), std::numeric_limits<double>::infinity());
    for (size_t i : order)
        detail::rasterize(map, zbuf, *items[i].model, items[i].object_id, items[i].pose, k);
    return map;
}

inline CorrespondenceMap render(const CorrespondenceModel& model, int object_id,
                                const RigidPose& pose, const CameraIntrinsics& k) {
    assert(object_id >= 1);
    const RenderItem item{&model, object_id, pose};
    return render_multi(std::span<const RenderItem>(&item, 1), k);
}

}  // namespace corrpose
