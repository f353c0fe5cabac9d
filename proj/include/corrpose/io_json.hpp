#pragma once

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "corrpose/correspond.hpp"
#include "corrpose/errors.hpp"
#include "corrpose/geometry.hpp"
#include "corrpose/mesh.hpp"
#include "corrpose/noise.hpp"
#include "corrpose/posesolve.hpp"

namespace corrpose {

using nlohmann::json;

inline json pose_to_json(const RigidPose& pose) {
    return json{{"q", {pose.rotation.w, pose.rotation.x, pose.rotation.y, pose.rotation.z}},
                {"t", {pose.translation.x, pose.translation.y, pose.translation.z}}};
}

inline RigidPose pose_from_json(const json& j) {
    if (!j.contains("q") || !j.contains("t") || j["q"].size() != 4 || j["t"].size() != 3)
        throw ParseError("pose record needs q[4] and t[3]");
    RigidPose pose;
    pose.rotation = {j["q"][0].get<double>(), j["q"][1].get<double>(), j["q"][2].get<double>(),
                     j["q"][3].get<double>()};
    pose.translation = {j["t"][0].get<double>(), j["t"][1].get<double>(), j["t"][2].get<double>()};
    return pose;
}

inline json intrinsics_to_json(const CameraIntrinsics& k) {
    return json{{"fx", k.fx},       {"fy", k.fy},         {"cx", k.cx},
                {"cy", k.cy},       {"width", k.width},   {"height", k.height}};
}

inline CameraIntrinsics intrinsics_from_json(const json& j) {
    for (const char* key : {"fx", "fy", "cx", "cy", "width", "height"})
        if (!j.contains(key)) throw ParseError(std::string("intrinsics record misses ") + key);
    return {j["fx"].get<double>(), j["fy"].get<double>(), j["cx"].get<double>(),
            j["cy"].get<double>(), j["width"].get<int>(),  j["height"].get<int>()};
}

inline json pnp_result_to_json(const PnPResult& r) {
    return json{{"pose", pose_to_json(r.pose)},
                {"confidence", r.confidence},
                {"inliers", r.inlier_indices.size()},
                {"mean_err_px", r.mean_reproj_error}};
}

inline json corruption_to_json(const CorruptionParams& p) {
    return json{{"uv_jitter_sigma", p.uv_jitter_sigma},
                {"outlier_rate", p.outlier_rate},
                {"dropout_rate", p.dropout_rate},
                {"occlusion_boxes", p.occlusion_boxes},
                {"seed", p.seed}};
}

inline CorruptionParams corruption_from_json(const json& j) {
    CorruptionParams p;
    p.uv_jitter_sigma = j.value("uv_jitter_sigma", 0.0);
    p.outlier_rate = j.value("outlier_rate", 0.0);
    p.dropout_rate = j.value("dropout_rate", 0.0);
    p.occlusion_boxes = j.value("occlusion_boxes", 0);
    p.seed = j.value("seed", std::uint64_t{0});
    if (p.outlier_rate < 0.0 || p.outlier_rate > 1.0 || p.dropout_rate < 0.0 ||
        p.dropout_rate > 1.0 || p.uv_jitter_sigma < 0.0 || p.occlusion_boxes < 0)
        throw ParseError("corruption parameters out of range");
    return p;
}

// Per-vertex class pairs, indexed by vertex position in the array.
inline json uv_sidecar_to_json(const CorrespondenceModel& model) {
    json uv = json::array();
    for (const auto& c : model.uv_class) uv.push_back({int(c[0]), int(c[1])});
    return json{{"uv_class", uv}};
}

inline void write_correspondence_lines(std::ostream& out, const CorrespondenceSet& set) {
    for (const Correspondence2D3D& c : set.items) {
        out << json{{"id", set.object_id},
                    {"px", {c.pixel.x, c.pixel.y}},
                    {"p", {c.point.x, c.point.y, c.point.z}}}
                   .dump()
            << '\n';
    }
}

// Groups lines by object id; sets come back in ascending id, items in file
// order (matching the decoder's output convention).
inline std::vector<CorrespondenceSet> read_correspondence_lines(std::istream& in) {
    std::map<int, CorrespondenceSet> by_id;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad correspondence line: ") + e.what(), line_no);
        }
        const int id = j.at("id").get<int>();
        auto [it, fresh] = by_id.try_emplace(id, CorrespondenceSet{id, {}});
        it->second.items.push_back({{j.at("px")[0].get<double>(), j.at("px")[1].get<double>()},
                                    {j.at("p")[0].get<double>(), j.at("p")[1].get<double>(),
                                     j.at("p")[2].get<double>()}});
    }
    std::vector<CorrespondenceSet> sets;
    sets.reserve(by_id.size());
    for (auto& [id, set] : by_id) sets.push_back(std::move(set));
    return sets;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace corrpose
