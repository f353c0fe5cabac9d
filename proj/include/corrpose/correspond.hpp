#pragma once

#include <map>
#include <vector>

#include "corrpose/errors.hpp"
#include "corrpose/geometry.hpp"
#include "corrpose/mesh.hpp"
#include "corrpose/raster.hpp"

namespace corrpose {

struct Correspondence2D3D {
    Vec2 pixel;  // pixel center, column + 0.5 / row + 0.5
    Vec3 point;  // model coordinates, meters
};

struct CorrespondenceSet {
    int object_id = 0;
    std::vector<Correspondence2D3D> items;
};

// Turn a correspondence map back into per-object 2D-3D matches via each
// object's color lookup. Pixels whose class cell is unpopulated are skipped.
// Output is ordered by ascending object_id, then row-major pixel order.
inline std::vector<CorrespondenceSet> decode(const CorrespondenceMap& map,
                                             const std::map<int, const ColorLookup*>& lookups) {
    std::map<int, CorrespondenceSet> sets;
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const size_t idx = map.index(x, y);
            const int oid = map.id[idx];
            if (oid == 0) continue;
            const auto it = lookups.find(oid);
            if (it == lookups.end() || it->second == nullptr) throw MissingLookup(oid);
            const ColorLookup& lut = *it->second;
            const int u = map.u_class[idx], v = map.v_class[idx];
            if (!lut.valid(u, v)) continue;
            auto& set = sets[oid];
            set.object_id = oid;
            set.items.push_back({{x + 0.5, y + 0.5}, lut.at(u, v)});
        }
    }
    std::vector<CorrespondenceSet> out;
    out.reserve(sets.size());
    for (auto& [oid, set] : sets) out.push_back(std::move(set));
    return out;
}

// Object ids covering at least min_pixels foreground pixels, ascending.
inline std::vector<int> detected_ids(const CorrespondenceMap& map, int min_pixels = 50) {
    std::map<int, int> counts;
    for (size_t i = 0; i < map.pixel_count(); ++i)
        if (map.id[i] != 0) ++counts[map.id[i]];
    std::vector<int> out;
    for (const auto& [oid, n] : counts)
        if (n >= min_pixels) out.push_back(oid);
    return out;
}

}  // namespace corrpose
