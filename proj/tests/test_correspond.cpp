#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "corrpose/correspond.hpp"
#include "corrpose/errors.hpp"
#include "corrpose/raster.hpp"
#include "support/fixtures.hpp"

using namespace corrpose;

namespace {
const CameraIntrinsics kCam{200.0, 200.0, 120.0, 90.0, 240, 180};
}

TEST_CASE("decode basics") {
    SECTION("all-background map decodes to nothing") {
        const CorrespondenceMap map(32, 24);
        ColorLookup lut;
        const std::map<int, const ColorLookup*> lookups{{1, &lut}};
        CHECK(decode(map, lookups).empty());
    }

    SECTION("single pixel reads its lookup cell") {
        CorrespondenceMap map(32, 24);
        const size_t idx = map.index(5, 7);
        map.id[idx] = 3;
        map.u_class[idx] = 10;
        map.v_class[idx] = 20;
        ColorLookup lut;
        lut.set(10, 20, {0.01, 0.02, 0.03});
        const std::map<int, const ColorLookup*> lookups{{3, &lut}};
        const auto sets = decode(map, lookups);
        REQUIRE(sets.size() == 1);
        CHECK(sets[0].object_id == 3);
        REQUIRE(sets[0].items.size() == 1);
        CHECK(sets[0].items[0].pixel.x == 5.5);
        CHECK(sets[0].items[0].pixel.y == 7.5);
        CHECK(norm(sets[0].items[0].point - Vec3{0.01, 0.02, 0.03}) == 0.0);
    }

    SECTION("invalid cells are skipped") {
        CorrespondenceMap map(8, 8);
        map.id[map.index(1, 1)] = 1;
        map.u_class[map.index(1, 1)] = 7;
        map.v_class[map.index(1, 1)] = 7;
        map.id[map.index(2, 2)] = 1;
        map.u_class[map.index(2, 2)] = 9;
        map.v_class[map.index(2, 2)] = 9;
        ColorLookup lut;
        lut.set(7, 7, {1, 2, 3});
        const std::map<int, const ColorLookup*> lookups{{1, &lut}};
        const auto sets = decode(map, lookups);
        REQUIRE(sets.size() == 1);
        CHECK(sets[0].items.size() == 1);
    }

    SECTION("missing lookup is an error") {
        CorrespondenceMap map(8, 8);
        map.id[0] = 2;
        const std::map<int, const ColorLookup*> lookups{};
        CHECK_THROWS_AS(decode(map, lookups), MissingLookup);
    }
}

TEST_CASE("decode over a rendered fixture") {
    const CorrespondenceModel model = texture_spherical(fixtures::blob(3));
    const auto view = sample_viewpoints(5, 3, 1, 0.5, model.mesh.centroid())[4];
    const CorrespondenceMap map = render(model, 1, view.pose, kCam);
    const std::map<int, const ColorLookup*> lookups{{1, &model.lookup}};
    const auto sets = decode(map, lookups);
    REQUIRE(sets.size() == 1);

    SECTION("item count equals foreground minus invalid cells") {
        size_t fg = 0, invalid = 0;
        for (int y = 0; y < map.height; ++y) {
            for (int x = 0; x < map.width; ++x) {
                if (!map.foreground(x, y)) continue;
                ++fg;
                const size_t i = map.index(x, y);
                if (!model.lookup.valid(map.u_class[i], map.v_class[i])) ++invalid;
            }
        }
        REQUIRE(fg > 1000);
        CHECK(sets[0].items.size() == fg - invalid);
    }

    SECTION("decode never fabricates pixels") {
        for (const auto& c : sets[0].items) {
            const int x = static_cast<int>(c.pixel.x);
            const int y = static_cast<int>(c.pixel.y);
            REQUIRE(map.foreground(x, y));
        }
    }

    SECTION("row-major output order") {
        for (size_t i = 1; i < sets[0].items.size(); ++i) {
            const auto &a = sets[0].items[i - 1], &b = sets[0].items[i];
            CHECK((a.pixel.y < b.pixel.y || (a.pixel.y == b.pixel.y && a.pixel.x < b.pixel.x)));
        }
    }
}

TEST_CASE("render-decode reprojection is quantization-limited") {
    // spherical and cylindrical texturing on a dense star-shaped fixture
    const Mesh blob = fixtures::blob(4);
    const std::vector<CorrespondenceModel> models{texture_spherical(blob),
                                                  texture_cylindrical(blob)};
    for (const auto& model : models) {
        std::vector<double> errors;
        for (const auto& view : sample_viewpoints(4, 2, 2, 0.5, model.mesh.centroid())) {
            const CorrespondenceMap map = render(model, 1, view.pose, kCam);
            const std::map<int, const ColorLookup*> lookups{{1, &model.lookup}};
            for (const auto& set : decode(map, lookups)) {
                for (const auto& c : set.items) {
                    const Vec2 p = project(c.point, view.pose, kCam);
                    errors.push_back(std::hypot(p.x - c.pixel.x, p.y - c.pixel.y));
                }
            }
        }
        REQUIRE(errors.size() > 5000);
        std::sort(errors.begin(), errors.end());
        const double median = errors[errors.size() / 2];
        const double p95 = errors[static_cast<size_t>(0.95 * errors.size())];
        CHECK(median <= 1.5);
        CHECK(p95 <= 3.0);
    }
}

TEST_CASE("detected ids") {
    SECTION("empty map") {
        const CorrespondenceMap map(16, 16);
        CHECK(detected_ids(map, 1).empty());
    }

    SECTION("threshold filters small blobs") {
        CorrespondenceMap map(32, 32);
        for (int i = 0; i < 50; ++i) map.id[i] = 1;
        for (int i = 100; i < 130; ++i) map.id[i] = 2;
        CHECK(detected_ids(map, 100).empty());
        CHECK(detected_ids(map, 50) == std::vector<int>{1});
        CHECK(detected_ids(map, 30) == std::vector<int>{1, 2});
        CHECK(detected_ids(map, 1) == std::vector<int>{1, 2});
    }

    SECTION("multi-object render reports exactly the rendered ids") {
        const CorrespondenceModel blob = texture_spherical(fixtures::blob(2));
        const std::vector<RenderItem> items{
            {&blob, 2, {Quaternion::identity(), {-0.25, 0, 0.8}}},
            {&blob, 5, {Quaternion::identity(), {0.25, 0, 0.8}}}};
        const CorrespondenceMap map = render_multi(items, kCam);
        CHECK(detected_ids(map, 1) == std::vector<int>{2, 5});
    }
}
