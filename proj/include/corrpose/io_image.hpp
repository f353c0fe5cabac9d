#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "corrpose/errors.hpp"
#include "corrpose/io_json.hpp"
#include "corrpose/mesh.hpp"
#include "corrpose/raster.hpp"

namespace corrpose {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// shared scaffolding for the four libpng entry points below
template <typename Fn>
void with_png_writer(const std::string& path, int width, int height, int bit_depth, Fn&& fill) {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw Error("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng failed while writing " + path);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, png_uint_32(width), png_uint_32(height), bit_depth,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    fill(png);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

template <typename Fn>
void with_png_reader(const std::string& path, int expected_depth, int& width, int& height,
                     Fn&& drain) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw Error("cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("libpng failed while reading " + path);
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY ||
        png_get_bit_depth(png, info) != expected_depth) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError(path + ": expected " + std::to_string(expected_depth) +
                         "-bit grayscale");
    }
    width = int(png_get_image_width(png, info));
    height = int(png_get_image_height(png, info));
    drain(png);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
}

}  // namespace detail

inline void write_gray8_png(const std::string& path, int width, int height,
                            const std::vector<std::uint8_t>& pixels) {
    if (pixels.size() != std::size_t(width) * height) throw ShapeMismatch("pixel buffer size");
    detail::with_png_writer(path, width, height, 8, [&](png_structp png) {
        for (int y = 0; y < height; ++y)
            png_write_row(png, const_cast<png_bytep>(pixels.data() + std::size_t(y) * width));
    });
}

inline std::vector<std::uint8_t> read_gray8_png(const std::string& path, int& width,
                                                int& height) {
    std::vector<std::uint8_t> pixels;
    detail::with_png_reader(path, 8, width, height, [&](png_structp png) {
        pixels.resize(std::size_t(width) * height);
        for (int y = 0; y < height; ++y) png_read_row(png, pixels.data() + std::size_t(y) * width,
                                                      nullptr);
    });
    return pixels;
}

inline void write_gray16_png(const std::string& path, int width, int height,
                             const std::vector<std::uint16_t>& pixels) {
    if (pixels.size() != std::size_t(width) * height) throw ShapeMismatch("pixel buffer size");
    detail::with_png_writer(path, width, height, 16, [&](png_structp png) {
        std::vector<std::uint8_t> row(std::size_t(width) * 2);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {  // PNG stores most-significant byte first
                const std::uint16_t v = pixels[std::size_t(y) * width + x];
                row[2 * x] = std::uint8_t(v >> 8);
                row[2 * x + 1] = std::uint8_t(v & 0xff);
            }
            png_write_row(png, row.data());
        }
    });
}

inline std::vector<std::uint16_t> read_gray16_png(const std::string& path, int& width,
                                                  int& height) {
    std::vector<std::uint16_t> pixels;
    detail::with_png_reader(path, 16, width, height, [&](png_structp png) {
        pixels.resize(std::size_t(width) * height);
        std::vector<std::uint8_t> row(std::size_t(width) * 2);
        for (int y = 0; y < height; ++y) {
            png_read_row(png, row.data(), nullptr);
            for (int x = 0; x < width; ++x)
                pixels[std::size_t(y) * width + x] =
                    std::uint16_t((row[2 * x] << 8) | row[2 * x + 1]);
        }
    });
    return pixels;
}

// --- correspondence-map bundle: id/u/v 8-bit + depth 16-bit (millimeters) ----

struct MapBundle {
    CorrespondenceMap map;
    RigidPose pose;
    CameraIntrinsics intrinsics;
    int object_id = 0;
};

// Writes <stem>_id.png, <stem>_u.png, <stem>_v.png, <stem>_depth.png and
// <stem>.json (the manifest) into `dir`. Returns the manifest path.
inline std::string save_map(const std::string& dir, const std::string& stem,
                            const CorrespondenceMap& map, const RigidPose& pose,
                            const CameraIntrinsics& k, int object_id) {
    const std::string base = dir + "/" + stem;
    write_gray8_png(base + "_id.png", map.width, map.height, map.id);
    write_gray8_png(base + "_u.png", map.width, map.height, map.u_class);
    write_gray8_png(base + "_v.png", map.width, map.height, map.v_class);
    std::vector<std::uint16_t> mm(map.pixel_count());
    for (std::size_t i = 0; i < mm.size(); ++i) {
        const double v = std::llround(double(map.depth[i]) * 1000.0);
        mm[i] = std::uint16_t(std::min(v, 65535.0));
    }
    write_gray16_png(base + "_depth.png", map.width, map.height, mm);

    const json manifest{{"id", stem + "_id.png"},
                        {"u", stem + "_u.png"},
                        {"v", stem + "_v.png"},
                        {"depth", stem + "_depth.png"},
                        {"object_id", object_id},
                        {"pose", pose_to_json(pose)},
                        {"intrinsics", intrinsics_to_json(k)}};
    const std::string manifest_path = base + ".json";
    save_json_file(manifest_path, manifest);
    return manifest_path;
}

inline MapBundle load_map(const std::string& manifest_path) {
    const json manifest = load_json_file(manifest_path);
    const auto slash = manifest_path.find_last_of('/');
    const std::string dir = slash == std::string::npos ? "." : manifest_path.substr(0, slash);

    MapBundle bundle;
    bundle.pose = pose_from_json(manifest.at("pose"));
    bundle.intrinsics = intrinsics_from_json(manifest.at("intrinsics"));
    bundle.object_id = manifest.value("object_id", 0);

    int w = 0, h = 0;
    bundle.map.id = read_gray8_png(dir + "/" + manifest.at("id").get<std::string>(), w, h);
    bundle.map.width = w;
    bundle.map.height = h;
    int w2 = 0, h2 = 0;
    bundle.map.u_class = read_gray8_png(dir + "/" + manifest.at("u").get<std::string>(), w2, h2);
    if (w2 != w || h2 != h) throw ShapeMismatch("u image size differs from id image");
    bundle.map.v_class = read_gray8_png(dir + "/" + manifest.at("v").get<std::string>(), w2, h2);
    if (w2 != w || h2 != h) throw ShapeMismatch("v image size differs from id image");
    const auto mm = read_gray16_png(dir + "/" + manifest.at("depth").get<std::string>(), w2, h2);
    if (w2 != w || h2 != h) throw ShapeMismatch("depth image size differs from id image");
    bundle.map.depth.resize(mm.size());
    for (std::size_t i = 0; i < mm.size(); ++i) bundle.map.depth[i] = float(mm[i]) / 1000.0f;
    return bundle;
}

// --- color lookup table binary ------------------------------------------------
// "CLUT" magic, one version byte, then 256*256 cells in u-major order, three
// little-endian float32 each; invalid cells are NaN.

inline constexpr std::uint8_t kClutVersion = 1;

inline void save_clut(const std::string& path, const ColorLookup& lut) {
    detail::FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) throw Error("cannot write " + path);
    std::fwrite("CLUT", 1, 4, file.get());
    std::fwrite(&kClutVersion, 1, 1, file.get());
    static_assert(std::numeric_limits<float>::is_iec559);
    std::vector<float> cell(3);
    for (int u = 0; u < kUvClasses; ++u) {
        for (int v = 0; v < kUvClasses; ++v) {
            if (lut.valid(u, v)) {
                const Vec3 p = lut.at(u, v);
                cell = {float(p.x), float(p.y), float(p.z)};
            } else {
                cell.assign(3, std::numeric_limits<float>::quiet_NaN());
            }
            std::fwrite(cell.data(), sizeof(float), 3, file.get());
        }
    }
    if (std::ferror(file.get())) throw Error("write failed for " + path);
}

inline ColorLookup load_clut(const std::string& path) {
    detail::FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) throw Error("cannot open " + path);
    char magic[4];
    std::uint8_t version = 0;
    if (std::fread(magic, 1, 4, file.get()) != 4 || std::memcmp(magic, "CLUT", 4) != 0)
        throw ParseError(path + ": bad magic");
    if (std::fread(&version, 1, 1, file.get()) != 1 || version != kClutVersion)
        throw ParseError(path + ": unsupported version");
    ColorLookup lut;
    float cell[3];
    for (int u = 0; u < kUvClasses; ++u) {
        for (int v = 0; v < kUvClasses; ++v) {
            if (std::fread(cell, sizeof(float), 3, file.get()) != 3)
                throw ParseError(path + ": truncated table");
            if (std::isnan(cell[0])) continue;
            lut.set(u, v, Vec3{cell[0], cell[1], cell[2]});
        }
    }
    return lut;
}

}  // namespace corrpose
