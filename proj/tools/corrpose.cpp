// Command-line harness: correspondence-model texturing, synthetic dataset
// rendering, corruption sweeps, pose estimation and metric reports.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "corrpose/correspond.hpp"
#include "corrpose/errors.hpp"
#include "corrpose/geometry.hpp"
#include "corrpose/io_image.hpp"
#include "corrpose/io_json.hpp"
#include "corrpose/mesh.hpp"
#include "corrpose/metrics.hpp"
#include "corrpose/noise.hpp"
#include "corrpose/posesolve.hpp"
#include "corrpose/raster.hpp"
#include "corrpose/refine.hpp"
#include "corrpose/rng.hpp"

namespace fs = std::filesystem;
using namespace corrpose;

namespace {

constexpr int kExitUsage = 2;        // bad arguments, unreadable/unwritable files
constexpr int kExitComputation = 3;  // solvable input produced no usable result

const CameraIntrinsics kDefaultIntrinsics{572.4, 572.4, 325.3, 242.0, 640, 480};

// seed streams so one --seed drives independent corruption / solver / init draws
constexpr std::uint64_t kStreamCorrupt = 1;
constexpr std::uint64_t kStreamRansac = 2;
constexpr std::uint64_t kStreamInit = 3;

struct ModelBundle {
    CorrespondenceModel model;
    std::string mode;
    double diam = 0.0;
};

ModelBundle load_model_dir(const std::string& dir) {
    const json meta = load_json_file(dir + "/model.json");
    if (!meta.contains("mesh") || !meta.contains("mode"))
        throw ParseError(dir + "/model.json: needs mesh and mode fields");
    const std::string mode = meta["mode"].get<std::string>();
    const Mesh mesh = load_mesh(dir + "/" + meta["mesh"].get<std::string>());
    ModelBundle out;
    if (mode == "spherical")
        out.model = texture_spherical(mesh);
    else if (mode == "cylindrical")
        out.model = texture_cylindrical(mesh);
    else
        throw ParseError(dir + "/model.json: unknown mode " + mode);
    out.mode = mode;
    out.diam = diameter(out.model.mesh);
    return out;
}

CameraIntrinsics intrinsics_from_file_or_default(const std::string& path) {
    if (path.empty()) return kDefaultIntrinsics;
    return intrinsics_from_json(load_json_file(path));
}

std::vector<std::string> sorted_manifests(const std::string& dataset_dir) {
    const fs::path frames = fs::path(dataset_dir) / "frames";
    if (!fs::is_directory(frames)) throw Error("cannot open " + frames.string());
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(frames))
        if (entry.path().extension() == ".json") out.push_back(entry.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

std::string frame_stem(const std::string& manifest_path) {
    return fs::path(manifest_path).stem().string();
}

RansacConfig ransac_from_flags(const std::string& config_path, int iterations, double threshold,
                               int min_inliers) {
    RansacConfig cfg;
    if (!config_path.empty()) {
        const json j = load_json_file(config_path);
        cfg.iterations = j.value("iterations", cfg.iterations);
        cfg.reproj_threshold = j.value("reproj_threshold", cfg.reproj_threshold);
        cfg.min_inliers = j.value("min_inliers", cfg.min_inliers);
        cfg.seed = j.value("seed", cfg.seed);
    }
    if (iterations > 0) cfg.iterations = iterations;
    if (threshold > 0.0) cfg.reproj_threshold = threshold;
    if (min_inliers > 0) cfg.min_inliers = min_inliers;
    return cfg;
}

// --- texture -----------------------------------------------------------------

int cmd_texture(const std::string& mesh_path, const std::string& mode,
                const std::string& out_dir) {
    const Mesh mesh = load_mesh(mesh_path);
    CorrespondenceModel model;
    if (mode == "spherical")
        model = texture_spherical(mesh);
    else if (mode == "cylindrical")
        model = texture_cylindrical(mesh);
    else
        throw ParseError("mode must be spherical or cylindrical, got " + mode);

    fs::create_directories(out_dir);
    const std::string mesh_name = fs::path(mesh_path).filename().string();
    fs::copy_file(mesh_path, fs::path(out_dir) / mesh_name, fs::copy_options::overwrite_existing);

    json meta = uv_sidecar_to_json(model);
    meta["mesh"] = mesh_name;
    meta["mode"] = mode;
    save_json_file(out_dir + "/model.json", meta);
    save_clut(out_dir + "/model.clut", model.lookup);
    std::printf("textured %zu vertices (%s), %zu lookup cells populated\n",
                model.mesh.vertices.size(), mode.c_str(), model.lookup.populated_count());
    return 0;
}

// --- render --------------------------------------------------------------------

int cmd_render(const std::string& model_dir, int n_az, int n_el, int n_ip, double radius,
               const std::string& intrinsics_path, int object_id, const std::string& out_dir) {
    const ModelBundle bundle = load_model_dir(model_dir);
    const CameraIntrinsics k = intrinsics_from_file_or_default(intrinsics_path);

    Vec3 centroid{0, 0, 0};
    for (const Vec3& v : bundle.model.mesh.vertices) centroid = centroid + v;
    centroid = (1.0 / double(bundle.model.mesh.vertices.size())) * centroid;

    const auto views = sample_viewpoints(n_az, n_el, n_ip, radius, centroid);
    fs::create_directories(fs::path(out_dir) / "frames");

    std::size_t empties = 0;
    for (std::size_t i = 0; i < views.size(); ++i) {
        const CorrespondenceMap map = render(bundle.model, object_id, views[i].pose, k);
        std::size_t fg = 0;
        for (auto id : map.id) fg += id != 0;
        empties += fg == 0;
        char stem[32];
        std::snprintf(stem, sizeof stem, "frame_%05zu", i);
        save_map((fs::path(out_dir) / "frames").string(), stem, map, views[i].pose, k, object_id);
    }
    std::printf("rendered %zu frames into %s (%zu empty)\n", views.size(), out_dir.c_str(),
                empties);
    return 0;
}

// --- corrupt -------------------------------------------------------------------

int cmd_corrupt(const std::string& dataset_dir, const std::string& params_path,
                std::uint64_t seed, const std::string& out_dir) {
    CorruptionParams params =
        params_path.empty() ? CorruptionParams{} : corruption_from_json(load_json_file(params_path));
    if (seed != 0) params.seed = seed;

    fs::create_directories(fs::path(out_dir) / "frames");
    const auto manifests = sorted_manifests(dataset_dir);
    for (std::size_t i = 0; i < manifests.size(); ++i) {
        const MapBundle in = load_map(manifests[i]);
        CorruptionParams frame_params = params;
        frame_params.seed = mix_seed(params.seed, i);
        const CorrespondenceMap noisy = corrupt(in.map, frame_params);
        save_map((fs::path(out_dir) / "frames").string(), frame_stem(manifests[i]), noisy,
                 in.pose, in.intrinsics, in.object_id);
    }
    std::printf("corrupted %zu frames into %s\n", manifests.size(), out_dir.c_str());
    return 0;
}

// --- estimate ------------------------------------------------------------------

struct FrameOutcome {
    std::string frame;
    int object_id = 0;
    RigidPose gt;
    std::optional<RigidPose> estimate;
    double confidence = 0.0;
    std::size_t inliers = 0;
    double mean_err_px = 0.0;
    bool flagged = false;
    double add_value = 0.0;
    bool correct = false;
};

struct EstimateOptions {
    std::optional<CorruptionParams> corruption;
    RansacConfig ransac;
    bool refine = false;
    int refine_iters = 2;
    std::optional<PoseDistortionParams> init_distort;
    std::uint64_t seed = 0;
};

FrameOutcome estimate_frame(const MapBundle& bundle, const ModelBundle& model,
                            const EstimateOptions& opt, std::size_t frame_idx,
                            const std::string& stem) {
    FrameOutcome out;
    out.frame = stem;
    out.object_id = bundle.object_id;
    out.gt = bundle.pose;

    CorrespondenceMap observed = bundle.map;
    if (opt.corruption) {
        CorruptionParams p = *opt.corruption;
        p.seed = mix_seed(mix_seed(opt.seed ^ p.seed, kStreamCorrupt), frame_idx);
        observed = corrupt(observed, p);
    }

    RansacConfig cfg = opt.ransac;
    cfg.seed = mix_seed(mix_seed(opt.seed ^ cfg.seed, kStreamRansac), frame_idx);

    try {
        RigidPose estimate;
        if (opt.init_distort) {
            // A/B experiment path: score a distorted ground-truth init,
            // optionally improved by refinement
            const RigidPose init = sample_distorted_pose(
                bundle.pose, *opt.init_distort, mix_seed(mix_seed(opt.seed, kStreamInit),
                                                         frame_idx));
            estimate = init;
            if (opt.refine) {
                try {
                    estimate = refine_pose(observed, model.model, bundle.object_id, init,
                                           bundle.intrinsics, opt.refine_iters, cfg);
                } catch (const RefinementFailed& e) {
                    estimate = e.last_pose;
                    out.flagged = true;
                }
            }
            out.confidence = 0.0;
        } else {
            const std::map<int, const ColorLookup*> lookups{
                {bundle.object_id, &model.model.lookup}};
            const auto sets = decode(observed, lookups);
            const auto it =
                std::find_if(sets.begin(), sets.end(), [&](const CorrespondenceSet& s) {
                    return s.object_id == bundle.object_id;
                });
            if (it == sets.end()) throw NoValidHypothesis();

            const PnPResult result = ransac_pnp(it->items, bundle.intrinsics, cfg);
            out.confidence = result.confidence;
            out.inliers = result.inlier_indices.size();
            out.mean_err_px = result.mean_reproj_error;
            estimate = result.pose;
            if (opt.refine) {
                try {
                    estimate = refine_pose(observed, model.model, bundle.object_id, result.pose,
                                           bundle.intrinsics, opt.refine_iters, cfg);
                } catch (const RefinementFailed& e) {
                    estimate = e.last_pose;
                    out.flagged = true;
                }
            }
        }
        out.estimate = estimate;
        out.add_value = add(model.model.mesh, bundle.pose, estimate).value;
        out.correct = pose_correct({out.add_value, false}, model.diam);
    } catch (const NoValidHypothesis&) {
        out.flagged = true;
    } catch (const InsufficientCorrespondences&) {
        out.flagged = true;
    } catch (const EmptyRender&) {
        out.flagged = true;
    }
    return out;
}

json outcome_to_json(const FrameOutcome& f) {
    // wall-clock timing is deliberately not serialized: estimate outputs must
    // be byte-identical across re-runs
    json j{{"frame", f.frame},
           {"object_id", f.object_id},
           {"pose_gt", pose_to_json(f.gt)},
           {"confidence", f.confidence},
           {"inliers", f.inliers},
           {"mean_err_px", f.mean_err_px},
           {"flagged", f.flagged},
           {"add", f.add_value},
           {"pose_correct", f.correct}};
    if (f.estimate) j["pose_est"] = pose_to_json(*f.estimate);
    return j;
}

int cmd_estimate(const std::string& dataset_dir, const std::string& model_dir,
                 const EstimateOptions& opt, const std::string& out_path) {
    const ModelBundle model = load_model_dir(model_dir.empty() ? dataset_dir + "/model"
                                                               : model_dir);
    const auto manifests = sorted_manifests(dataset_dir);

    json results = json::array();
    std::size_t usable = 0;
    double add_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < manifests.size(); ++i) {
        const MapBundle bundle = load_map(manifests[i]);
        const FrameOutcome outcome =
            estimate_frame(bundle, model, opt, i, frame_stem(manifests[i]));
        usable += outcome.estimate.has_value();
        correct += outcome.correct;
        if (outcome.estimate) add_sum += outcome.add_value;
        results.push_back(outcome_to_json(outcome));
    }

    const json report{{"diameter", model.diam},
                      {"frames", manifests.size()},
                      {"usable", usable},
                      {"percent_correct",
                       manifests.empty() ? 0.0 : 100.0 * double(correct) / manifests.size()},
                      {"mean_add", usable == 0 ? 0.0 : add_sum / double(usable)},
                      {"results", results}};
    save_json_file(out_path, report);
    std::printf("estimated %zu frames, %zu usable, %.2f%% correct\n", manifests.size(), usable,
                report["percent_correct"].get<double>());
    if (!manifests.empty() && usable == 0) return kExitComputation;
    return 0;
}

// --- sweep-ransac ----------------------------------------------------------------

int cmd_sweep_ransac(const std::string& dataset_dir, const std::string& model_dir,
                     const std::string& corruption_path, std::vector<int> iteration_settings,
                     std::uint64_t seed, const RansacConfig& base_cfg, bool with_refined,
                     const std::string& out_csv) {
    const ModelBundle model = load_model_dir(model_dir.empty() ? dataset_dir + "/model"
                                                               : model_dir);
    const auto manifests = sorted_manifests(dataset_dir);
    if (iteration_settings.empty())
        iteration_settings = {5, 25, 50, 100, 150, 200, 250, 350, 500};

    std::optional<CorruptionParams> corruption;
    if (!corruption_path.empty())
        corruption = corruption_from_json(load_json_file(corruption_path));

    // load + (optionally) corrupt + decode each frame once; reuse across settings
    struct Prepared {
        CorrespondenceMap observed;
        std::vector<Correspondence2D3D> corrs;
        RigidPose gt;
        CameraIntrinsics k;
        int object_id;
    };
    std::vector<Prepared> frames;
    frames.reserve(manifests.size());
    for (std::size_t i = 0; i < manifests.size(); ++i) {
        const MapBundle bundle = load_map(manifests[i]);
        Prepared p{bundle.map, {}, bundle.pose, bundle.intrinsics, bundle.object_id};
        if (corruption) {
            CorruptionParams cp = *corruption;
            cp.seed = mix_seed(mix_seed(seed ^ cp.seed, kStreamCorrupt), i);
            p.observed = corrupt(p.observed, cp);
        }
        const std::map<int, const ColorLookup*> lookups{{bundle.object_id, &model.model.lookup}};
        for (auto& set : decode(p.observed, lookups))
            if (set.object_id == bundle.object_id) p.corrs = std::move(set.items);
        frames.push_back(std::move(p));
    }

    std::ofstream csv(out_csv);
    if (!csv) throw Error("cannot write " + out_csv);
    csv << "iterations,percent_correct,percent_correct_refined,mean_ransac_ms\n";

    for (const int iters : iteration_settings) {
        std::size_t correct = 0, correct_refined = 0;
        double ms_sum = 0.0;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const Prepared& p = frames[i];
            RansacConfig cfg = base_cfg;
            cfg.iterations = iters;
            cfg.seed = mix_seed(mix_seed(seed ^ base_cfg.seed, kStreamRansac), i);

            std::optional<RigidPose> estimate;
            const auto start = std::chrono::steady_clock::now();
            try {
                estimate = ransac_pnp(p.corrs, p.k, cfg).pose;
            } catch (const Error&) {
            }
            ms_sum += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                start)
                          .count();
            if (estimate &&
                pose_correct(add(model.model.mesh, p.gt, *estimate), model.diam))
                ++correct;

            if (!with_refined) continue;
            std::optional<RigidPose> refined = estimate;
            if (estimate) {
                try {
                    refined = refine_pose(p.observed, model.model, p.object_id, *estimate, p.k, 2,
                                          cfg);
                } catch (const RefinementFailed& e) {
                    refined = e.last_pose;
                } catch (const EmptyRender&) {
                }
            }
            if (refined && pose_correct(add(model.model.mesh, p.gt, *refined), model.diam))
                ++correct_refined;
        }
        const double n = double(frames.size());
        char row[128];
        std::snprintf(row, sizeof row, "%d,%.4f,%.4f,%.6f\n", iters,
                      frames.empty() ? 0.0 : 100.0 * double(correct) / n,
                      frames.empty() ? 0.0 : 100.0 * double(correct_refined) / n,
                      frames.empty() ? 0.0 : ms_sum / n);
        csv << row;
    }
    std::printf("swept %zu iteration settings over %zu frames into %s\n",
                iteration_settings.size(), manifests.size(), out_csv.c_str());
    return 0;
}

// --- evaluate -------------------------------------------------------------------

int cmd_evaluate(const std::string& results_path, const std::string& dataset_dir,
                 const std::string& model_dir, const std::string& out_path) {
    const json report = load_json_file(results_path);
    if (!report.contains("results"))
        throw ParseError(results_path + ": missing results array");
    const json& results = report["results"];

    const ModelBundle model = load_model_dir(model_dir.empty() ? dataset_dir + "/model"
                                                               : model_dir);

    // percent correct per object id
    std::map<int, std::pair<std::size_t, std::size_t>> tally;  // id -> (correct, total)
    for (const json& r : results) {
        auto& [good, total] = tally[r.at("object_id").get<int>()];
        ++total;
        good += r.value("pose_correct", false);
    }

    // pooled detection scoring: tile frames side by side so boxes from
    // different frames can never overlap
    std::vector<Detection> detections;
    std::vector<GroundTruthBox> gts;
    double map_score = 0.0;
    if (!dataset_dir.empty() && !results.empty()) {
        const auto manifests = sorted_manifests(dataset_dir);
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < manifests.size(); ++i)
            index[frame_stem(manifests[i])] = i;
        for (const json& r : results) {
            const auto it = index.find(r.at("frame").get<std::string>());
            if (it == index.end())
                throw ParseError("results reference unknown frame " +
                                 r.at("frame").get<std::string>());
            const MapBundle bundle = load_map(manifests[it->second]);
            const double offset = double(it->second) * (bundle.map.width + 8);
            for (auto& [id, box] : tight_boxes(bundle.map))
                gts.push_back({id, {box.x0 + offset, box.y0, box.x1 + offset, box.y1}});
            if (!r.contains("pose_est")) continue;
            const RigidPose est = pose_from_json(r["pose_est"]);
            CorrespondenceMap predicted;
            try {
                predicted = render(model.model, r.at("object_id").get<int>(), est,
                                   bundle.intrinsics);
            } catch (const NonPositiveDepth&) {
                continue;
            }
            for (auto& [id, box] : tight_boxes(predicted))
                detections.push_back({id, r.value("confidence", 0.0),
                                      {box.x0 + offset, box.y0, box.x1 + offset, box.y1}});
        }
        map_score = mean_average_precision(detections, gts);
    }

    json per_object = json::array();
    std::printf("object  frames  percent_correct\n");
    for (const auto& [id, counts] : tally) {
        const double pct = 100.0 * double(counts.first) / double(counts.second);
        per_object.push_back(
            {{"object_id", id}, {"frames", counts.second}, {"percent_correct", pct}});
        std::printf("%6d  %6zu  %15.2f\n", id, counts.second, pct);
    }
    if (tally.empty()) std::printf("(no results)\n");
    std::printf("mAP@0.5: %.4f\n", map_score);

    if (!out_path.empty())
        save_json_file(out_path, json{{"per_object", per_object}, {"map", map_score}});
    return 0;
}

// --- loss -----------------------------------------------------------------------

ProbabilityTensor tensor_from_json(const json& j, int width, int height, int classes,
                                   const char* name) {
    if (int(j.size()) != height) throw ShapeMismatch(std::string(name) + ": row count");
    ProbabilityTensor t(width, height, classes);
    for (int y = 0; y < height; ++y) {
        if (int(j[y].size()) != width) throw ShapeMismatch(std::string(name) + ": column count");
        for (int x = 0; x < width; ++x) {
            if (int(j[y][x].size()) != classes)
                throw ShapeMismatch(std::string(name) + ": class count");
            for (int c = 0; c < classes; ++c) t.at(x, y, c) = j[y][x][c].get<double>();
        }
    }
    return t;
}

int cmd_loss(const std::string& fixture_path, const std::string& out_path) {
    const json j = load_json_file(fixture_path);
    const int width = j.at("width").get<int>();
    const int height = j.at("height").get<int>();
    const int mask_classes = j.at("mask_classes").get<int>();

    CorrespondenceMap gt(width, height);
    const json& g = j.at("gt");
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const std::size_t i = gt.index(x, y);
            gt.id[i] = std::uint8_t(g.at("id")[y][x].get<int>());
            gt.u_class[i] = std::uint8_t(g.at("u")[y][x].get<int>());
            gt.v_class[i] = std::uint8_t(g.at("v")[y][x].get<int>());
        }
    }

    const ProbabilityTensor mask =
        tensor_from_json(j.at("mask_probs"), width, height, mask_classes, "mask_probs");
    const ProbabilityTensor u = tensor_from_json(j.at("u_probs"), width, height, 256, "u_probs");
    const ProbabilityTensor v = tensor_from_json(j.at("v_probs"), width, height, 256, "v_probs");

    LossWeights w;
    if (j.contains("weights")) {
        w.alpha = j["weights"].value("alpha", 1.0);
        w.beta = j["weights"].value("beta", 1.0);
        w.gamma = j["weights"].value("gamma", 1.0);
    }
    std::vector<double> class_w(std::size_t(mask_classes), 1.0);
    if (j.contains("mask_class_weights"))
        class_w = j["mask_class_weights"].get<std::vector<double>>();

    const double loss = composite_loss(mask, u, v, gt, w, class_w);
    std::printf("loss %.17g\n", loss);
    if (!out_path.empty()) save_json_file(out_path, json{{"loss", loss}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dense 2D-3D correspondence pose estimation harness"};
    app.require_subcommand(1);

    // texture
    std::string t_mesh, t_mode = "spherical", t_out;
    auto* texture = app.add_subcommand("texture", "build a correspondence model from a mesh");
    texture->add_option("--mesh", t_mesh, "input OBJ/PLY mesh")->required();
    texture->add_option("--mode", t_mode, "spherical|cylindrical");
    texture->add_option("--out", t_out, "output model directory")->required();
    std::uint64_t t_seed = 0;
    texture->add_option("--seed", t_seed, "unused; accepted for uniformity");

    // render
    std::string r_model, r_intrinsics, r_out;
    int r_az = 8, r_el = 3, r_ip = 3, r_object = 1;
    double r_radius = 0.5;
    std::uint64_t r_seed = 0;
    auto* render_cmd = app.add_subcommand("render", "render a viewpoint grid to a dataset");
    render_cmd->add_option("--model", r_model, "model directory from `texture`")->required();
    render_cmd->add_option("--n-az", r_az, "azimuth steps");
    render_cmd->add_option("--n-el", r_el, "elevation steps");
    render_cmd->add_option("--n-ip", r_ip, "in-plane steps");
    render_cmd->add_option("--radius", r_radius, "camera distance in meters");
    render_cmd->add_option("--intrinsics", r_intrinsics, "intrinsics JSON (default 640x480)");
    render_cmd->add_option("--object-id", r_object, "object id written to the maps");
    render_cmd->add_option("--out", r_out, "output dataset directory")->required();
    render_cmd->add_option("--seed", r_seed, "unused; accepted for uniformity");

    // corrupt
    std::string c_dataset, c_params, c_out;
    std::uint64_t c_seed = 0;
    auto* corrupt_cmd = app.add_subcommand("corrupt", "degrade a dataset's maps");
    corrupt_cmd->add_option("--dataset", c_dataset, "dataset directory")->required();
    corrupt_cmd->add_option("--params", c_params, "corruption params JSON");
    corrupt_cmd->add_option("--seed", c_seed, "overrides the params seed when nonzero");
    corrupt_cmd->add_option("--out", c_out, "output dataset directory")->required();

    // estimate
    std::string e_dataset, e_model, e_corruption, e_ransac, e_out;
    int e_iterations = 0, e_min_inliers = 0, e_refine_iters = 2;
    double e_threshold = 0.0;
    bool e_refine = false;
    std::vector<double> e_distort;
    std::uint64_t e_seed = 0;
    auto* estimate = app.add_subcommand("estimate", "solve poses for every frame");
    estimate->add_option("--dataset", e_dataset, "dataset directory")->required();
    estimate->add_option("--model", e_model, "model directory (default <dataset>/model)");
    estimate->add_option("--corruption", e_corruption, "corruption params JSON, applied on load");
    estimate->add_option("--ransac", e_ransac, "solver config JSON");
    estimate->add_option("--iterations", e_iterations, "solver iterations override");
    estimate->add_option("--threshold", e_threshold, "inlier threshold px override");
    estimate->add_option("--min-inliers", e_min_inliers, "minimum inlier count override");
    estimate->add_flag("--refine", e_refine, "run render-and-rematch refinement");
    estimate->add_option("--refine-iters", e_refine_iters, "refinement iterations");
    estimate
        ->add_option("--init-distort", e_distort,
                     "rot_sigma_deg trans_sigma_xy trans_sigma_z: score distorted ground-truth "
                     "inits instead of solving")
        ->expected(3);
    estimate->add_option("--seed", e_seed, "base seed for corruption/solver/init draws");
    estimate->add_option("--out", e_out, "output results JSON")->required();

    // sweep-ransac
    std::string s_dataset, s_model, s_corruption, s_ransac, s_out;
    std::vector<int> s_iters;
    bool s_no_refined = false;
    std::uint64_t s_seed = 0;
    auto* sweep = app.add_subcommand("sweep-ransac", "success rate vs iteration count");
    sweep->add_option("--dataset", s_dataset, "dataset directory")->required();
    sweep->add_option("--model", s_model, "model directory (default <dataset>/model)");
    sweep->add_option("--corruption", s_corruption, "corruption params JSON");
    sweep->add_option("--ransac", s_ransac, "solver config JSON (iterations ignored)");
    sweep->add_option("--iters", s_iters, "iteration settings (default 5..500 ladder)");
    sweep->add_flag("--no-refined", s_no_refined, "skip the refined column (faster)");
    sweep->add_option("--seed", s_seed, "base seed");
    sweep->add_option("--out", s_out, "output CSV path")->required();

    // evaluate
    std::string v_results, v_dataset, v_model, v_out;
    std::uint64_t v_seed = 0;
    auto* evaluate = app.add_subcommand("evaluate", "aggregate results into a metric report");
    evaluate->add_option("--results", v_results, "results JSON from `estimate`")->required();
    evaluate->add_option("--dataset", v_dataset, "dataset directory (enables mAP)");
    evaluate->add_option("--model", v_model, "model directory (default <dataset>/model)");
    evaluate->add_option("--out", v_out, "metric report JSON");
    evaluate->add_option("--seed", v_seed, "unused; accepted for uniformity");

    // loss
    std::string l_fixture, l_out;
    std::uint64_t l_seed = 0;
    auto* loss = app.add_subcommand("loss", "composite loss of a probability-tensor fixture");
    loss->add_option("--fixture", l_fixture, "fixture JSON")->required();
    loss->add_option("--out", l_out, "output JSON");
    loss->add_option("--seed", l_seed, "unused; accepted for uniformity");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        if (*texture) return cmd_texture(t_mesh, t_mode, t_out);
        if (*render_cmd)
            return cmd_render(r_model, r_az, r_el, r_ip, r_radius, r_intrinsics, r_object, r_out);
        if (*corrupt_cmd) return cmd_corrupt(c_dataset, c_params, c_seed, c_out);
        if (*estimate) {
            EstimateOptions opt;
            if (!e_corruption.empty())
                opt.corruption = corruption_from_json(load_json_file(e_corruption));
            opt.ransac = ransac_from_flags(e_ransac, e_iterations, e_threshold, e_min_inliers);
            opt.refine = e_refine;
            opt.refine_iters = e_refine_iters;
            if (!e_distort.empty())
                opt.init_distort = PoseDistortionParams{e_distort[0], e_distort[1], e_distort[2]};
            opt.seed = e_seed;
            return cmd_estimate(e_dataset, e_model, opt, e_out);
        }
        if (*sweep) {
            const RansacConfig cfg = ransac_from_flags(s_ransac, 0, 0.0, 0);
            return cmd_sweep_ransac(s_dataset, s_model, s_corruption, s_iters, s_seed, cfg,
                                    !s_no_refined, s_out);
        }
        if (*evaluate) return cmd_evaluate(v_results, v_dataset, v_model, v_out);
        if (*loss) return cmd_loss(l_fixture, l_out);
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const UnsupportedFormat& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const Error& e) {
        // exact base Error instances are I/O problems (cannot open/write);
        // everything else is a computation failure
        if (typeid(e) == typeid(Error)) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return kExitUsage;
        }
        std::fprintf(stderr, "computation failed: %s\n", e.what());
        return kExitComputation;
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return 0;
}
