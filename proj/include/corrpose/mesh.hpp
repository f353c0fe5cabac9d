#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "corrpose/errors.hpp"
#include "corrpose/geometry.hpp"

namespace corrpose {

struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    Vec3 centroid() const {
        Vec3 c;
        for (const Vec3& v : vertices) c = c + v;
        return (1.0 / static_cast<double>(vertices.size())) * c;
    }
};

inline constexpr int kUvClasses = 256;
// The continuous azimuth coordinate wraps with period 255: u=0 and u=255 are
// the same direction. Triangles whose u spread exceeds half the range are
// interpolated in the unwrapped domain.
inline constexpr double kUvSeamSpan = 127.5;

// round-half-up, clamped to the class range
inline int quantize_uv(double cont) {
    const int q = static_cast<int>(std::floor(cont + 0.5));
    return std::clamp(q, 0, kUvClasses - 1);
}

inline double wrap_u(double u) {
    if (u >= 255.0) u -= 255.0;
    if (u < 0.0) u += 255.0;
    return u;
}

// Unwraps three per-vertex u values so they can be interpolated linearly;
// results must be passed through wrap_u afterwards.
inline std::array<double, 3> unwrap_u_triangle(double u0, double u1, double u2) {
    std::array<double, 3> u{u0, u1, u2};
    const double lo = std::min({u0, u1, u2});
    const double hi = std::max({u0, u1, u2});
    if (hi - lo > kUvSeamSpan) {
        for (double& v : u)
            if (v < kUvSeamSpan) v += 255.0;
    }
    return u;
}

struct ColorLookup {
    // row-major over (u, v): index = u * 256 + v
    std::vector<Vec3> points = std::vector<Vec3>(kUvClasses * kUvClasses);
    std::vector<std::uint8_t> populated = std::vector<std::uint8_t>(kUvClasses * kUvClasses, 0);

    bool valid(int u, int v) const { return populated[u * kUvClasses + v] != 0; }
    Vec3 at(int u, int v) const { return points[u * kUvClasses + v]; }
    void set(int u, int v, Vec3 p) {
        points[u * kUvClasses + v] = p;
        populated[u * kUvClasses + v] = 1;
    }
    std::size_t populated_count() const {
        std::size_t n = 0;
        for (auto f : populated) n += f;
        return n;
    }
};

struct CorrespondenceModel {
    Mesh mesh;
    std::vector<Vec2> uv_cont;                       // pre-quantization, per vertex
    std::vector<std::array<std::uint8_t, 2>> uv_class;  // quantized classes, per vertex
    ColorLookup lookup;
};

// ---------------------------------------------------------------------------
// loading

namespace detail {

inline bool parse_double(const std::string& tok, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(tok, &pos);
        return pos == tok.size();
    } catch (...) {
        return false;
    }
}

inline std::string lower_ext(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return {};
    std::string ext = path.substr(dot + 1);
    for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return ext;
}

inline Mesh load_obj(std::istream& in) {
    Mesh mesh;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            double x, y, z;
            std::string tx, ty, tz;
            if (!(ls >> tx >> ty >> tz) || !parse_double(tx, x) || !parse_double(ty, y) ||
                !parse_double(tz, z))
                throw ParseError("malformed vertex record", lineno);
            mesh.vertices.push_back({x, y, z});
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                const std::string first = tok.substr(0, tok.find('/'));
                int v = 0;
                try {
                    v = std::stoi(first);
                } catch (...) {
                    throw ParseError("malformed face index '" + tok + "'", lineno);
                }
                if (v < 0) v = static_cast<int>(mesh.vertices.size()) + v;  // relative
                else v -= 1;                                                // 1-based
                if (v < 0 || v >= static_cast<int>(mesh.vertices.size()))
                    throw ParseError("face index out of range", lineno);
                idx.push_back(v);
            }
            if (idx.size() < 3) throw ParseError("face with fewer than 3 vertices", lineno);
            for (std::size_t i = 1; i + 1 < idx.size(); ++i)
                mesh.triangles.push_back({idx[0], idx[i], idx[i + 1]});
        }
        // all other records (vn, vt, usemtl, comments, ...) are ignored
    }
    if (mesh.vertices.empty()) throw ParseError("no vertices found", lineno);
    return mesh;
}

inline Mesh load_ply(std::istream& in) {
    std::string line;
    int lineno = 0;

    auto next_line = [&](const char* what) {
        if (!std::getline(in, line)) throw ParseError(std::string("unexpected end of file, expected ") + what, lineno);
        ++lineno;
        return line;
    };

    if (next_line("ply magic") != "ply") throw ParseError("missing 'ply' magic", lineno);

    std::size_t vertex_count = 0, face_count = 0;
    int ix = -1, iy = -1, iz = -1;
    int vertex_props = 0;
    std::string current_element;
    bool saw_format = false;

    while (true) {
        std::istringstream ls(next_line("header record"));
        std::string tag;
        ls >> tag;
        if (tag == "comment") continue;
        if (tag == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "ascii") throw UnsupportedFormat("binary PLY is not supported");
            saw_format = true;
        } else if (tag == "element") {
            std::string name;
            std::size_t count = 0;
            if (!(ls >> name >> count)) throw ParseError("malformed element record", lineno);
            current_element = name;
            if (name == "vertex") vertex_count = count;
            else if (name == "face") face_count = count;
        } else if (tag == "property") {
            if (current_element == "vertex") {
                std::string type, name;
                ls >> type >> name;
                if (type == "list") throw ParseError("list property on vertex element", lineno);
                if (name == "x") ix = vertex_props;
                if (name == "y") iy = vertex_props;
                if (name == "z") iz = vertex_props;
                ++vertex_props;
            }
        } else if (tag == "end_header") {
            break;
        } else if (!tag.empty()) {
            throw ParseError("unrecognized header record '" + tag + "'", lineno);
        }
    }
    if (!saw_format) throw ParseError("missing format record", lineno);
    if (ix < 0 || iy < 0 || iz < 0) throw ParseError("vertex element lacks x/y/z", lineno);

    Mesh mesh;
    mesh.vertices.reserve(vertex_count);
    for (std::size_t i = 0; i < vertex_count; ++i) {
        std::istringstream ls(next_line("vertex record"));
        std::vector<double> vals(vertex_props);
        for (int p = 0; p < vertex_props; ++p)
            if (!(ls >> vals[p])) throw ParseError("short vertex record", lineno);
        mesh.vertices.push_back({vals[ix], vals[iy], vals[iz]});
    }
    for (std::size_t i = 0; i < face_count; ++i) {
        std::istringstream ls(next_line("face record"));
        std::size_t n = 0;
        if (!(ls >> n) || n < 3) throw ParseError("malformed face record", lineno);
        std::vector<int> idx(n);
        for (std::size_t p = 0; p < n; ++p) {
            if (!(ls >> idx[p])) throw ParseError("short face record", lineno);
            if (idx[p] < 0 || idx[p] >= static_cast<int>(mesh.vertices.size()))
                throw ParseError("face index out of range", lineno);
        }
        for (std::size_t p = 1; p + 1 < n; ++p)
            mesh.triangles.push_back({idx[0], idx[p], idx[p + 1]});
    }
    if (mesh.vertices.empty()) throw ParseError("no vertices found", lineno);
    return mesh;
}

}  // namespace detail

inline Mesh load_mesh(const std::string& path) {
    const std::string ext = detail::lower_ext(path);
    if (ext != "obj" && ext != "ply")
        throw UnsupportedFormat("unsupported mesh format: " + path);
    std::ifstream in(path);
    if (!in) throw Error("cannot open mesh file: " + path);
    return ext == "obj" ? detail::load_obj(in) : detail::load_ply(in);
}

// ---------------------------------------------------------------------------
// diameter

inline double diameter(const Mesh& mesh) {
    const std::size_t n = mesh.vertices.size();
    if (n < 2) throw DegenerateMesh("diameter needs at least 2 vertices");
    double best = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            best = std::max(best, squared_norm(mesh.vertices[i] - mesh.vertices[j]));
    return std::sqrt(best);
}

// ---------------------------------------------------------------------------
// correspondence texturing

namespace detail {

inline double azimuth_u(Vec3 dir) {
    return 255.0 * (std::atan2(dir.y, dir.x) + M_PI) / (2.0 * M_PI);
}

}  // namespace detail

inline ColorLookup build_lookup(const Mesh& mesh, const std::vector<Vec2>& uv_cont);

inline CorrespondenceModel texture_spherical(const Mesh& mesh) {
    if (mesh.vertices.size() < 4) throw DegenerateMesh("mesh too small to texture");
    const Vec3 c = mesh.centroid();

    CorrespondenceModel model;
    model.mesh = mesh;
    model.uv_cont.reserve(mesh.vertices.size());
    for (const Vec3& v : mesh.vertices) {
        const Vec3 d = v - c;
        const double n = norm(d);
        if (n < 1e-15) throw DegenerateMesh("vertex coincides with centroid");
        const Vec3 p = (1.0 / n) * d;
        const double u = detail::azimuth_u(p);
        const double vv = 255.0 * std::acos(std::clamp(p.z, -1.0, 1.0)) / M_PI;
        model.uv_cont.push_back({u, vv});
    }
    model.uv_class.reserve(model.uv_cont.size());
    for (const Vec2& uv : model.uv_cont)
        model.uv_class.push_back({static_cast<std::uint8_t>(quantize_uv(uv.x)),
                                  static_cast<std::uint8_t>(quantize_uv(uv.y))});
    model.lookup = build_lookup(model.mesh, model.uv_cont);
    return model;
}

inline CorrespondenceModel texture_cylindrical(const Mesh& mesh) {
    if (mesh.vertices.size() < 4) throw DegenerateMesh("mesh too small to texture");
    const Vec3 c = mesh.centroid();
    double zmin = mesh.vertices.front().z, zmax = zmin;
    for (const Vec3& v : mesh.vertices) {
        zmin = std::min(zmin, v.z);
        zmax = std::max(zmax, v.z);
    }
    if (zmax - zmin < 1e-15) throw DegenerateMesh("mesh has no z extent");

    CorrespondenceModel model;
    model.mesh = mesh;
    model.uv_cont.reserve(mesh.vertices.size());
    for (const Vec3& v : mesh.vertices) {
        const Vec3 d = v - c;
        const double u = detail::azimuth_u({d.x, d.y, 0.0});  // atan2 needs no normalization
        const double vv = 255.0 * (v.z - zmin) / (zmax - zmin);
        model.uv_cont.push_back({u, vv});
    }
    model.uv_class.reserve(model.uv_cont.size());
    for (const Vec2& uv : model.uv_cont)
        model.uv_class.push_back({static_cast<std::uint8_t>(quantize_uv(uv.x)),
                                  static_cast<std::uint8_t>(quantize_uv(uv.y))});
    model.lookup = build_lookup(model.mesh, model.uv_cont);
    return model;
}

// Cell value: centroid of the vertices quantized to that cell. Cells no vertex
// hits are filled from triangle-barycenter samples (UV interpolated, then
// quantized).
inline ColorLookup build_lookup(const Mesh& mesh, const std::vector<Vec2>& uv_cont) {
    ColorLookup lut;
    std::vector<Vec3> sum(kUvClasses * kUvClasses);
    std::vector<std::uint32_t> cnt(kUvClasses * kUvClasses, 0);

    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const int u = quantize_uv(uv_cont[i].x);
        const int v = quantize_uv(uv_cont[i].y);
        sum[u * kUvClasses + v] = sum[u * kUvClasses + v] + mesh.vertices[i];
        ++cnt[u * kUvClasses + v];
    }

    std::vector<Vec3> tsum(kUvClasses * kUvClasses);
    std::vector<std::uint32_t> tcnt(kUvClasses * kUvClasses, 0);
    for (const auto& tri : mesh.triangles) {
        const Vec3 p =
            (1.0 / 3.0) * (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]);
        const auto uu =
            unwrap_u_triangle(uv_cont[tri[0]].x, uv_cont[tri[1]].x, uv_cont[tri[2]].x);
        const double u_bc = wrap_u((uu[0] + uu[1] + uu[2]) / 3.0);
        const double v_bc = (uv_cont[tri[0]].y + uv_cont[tri[1]].y + uv_cont[tri[2]].y) / 3.0;
        const int u = quantize_uv(u_bc);
        const int v = quantize_uv(v_bc);
        tsum[u * kUvClasses + v] = tsum[u * kUvClasses + v] + p;
        ++tcnt[u * kUvClasses + v];
    }

    for (int u = 0; u < kUvClasses; ++u)
        for (int v = 0; v < kUvClasses; ++v) {
            const std::size_t i = static_cast<std::size_t>(u) * kUvClasses + v;
            if (cnt[i] > 0)
                lut.set(u, v, (1.0 / cnt[i]) * sum[i]);
            else if (tcnt[i] > 0)
                lut.set(u, v, (1.0 / tcnt[i]) * tsum[i]);
        }
    return lut;
}

}  // namespace corrpose
