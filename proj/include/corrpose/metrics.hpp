#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "corrpose/errors.hpp"
#include "corrpose/geometry.hpp"
#include "corrpose/mesh.hpp"
#include "corrpose/raster.hpp"
#include "corrpose/rng.hpp"

namespace corrpose {

inline constexpr std::size_t kMaxSampledPoints = 10000;

struct AddScore {
    double value = 0.0;  // meters
    bool symmetric = false;
};

struct LossWeights {
    double alpha = 1.0, beta = 1.0, gamma = 1.0;
};

// Mean distance between the two transformed copies of each vertex.
inline AddScore add(const Mesh& mesh, const RigidPose& gt, const RigidPose& pred) {
    if (mesh.vertices.empty()) throw DegenerateMesh("add needs vertices");
    double sum = 0.0;
    for (const Vec3& v : mesh.vertices) sum += norm(gt.transform(v) - pred.transform(v));
    return {sum / static_cast<double>(mesh.vertices.size()), false};
}

// Symmetric variant: each predicted-pose vertex matches its nearest
// ground-truth-pose vertex.
inline AddScore add_symmetric(const Mesh& mesh, const RigidPose& gt, const RigidPose& pred) {
    if (mesh.vertices.empty()) throw DegenerateMesh("add needs vertices");
    std::vector<Vec3> gt_pts;
    gt_pts.reserve(mesh.vertices.size());
    for (const Vec3& v : mesh.vertices) gt_pts.push_back(gt.transform(v));
    double sum = 0.0;
    for (const Vec3& v : mesh.vertices) {
        const Vec3 p = pred.transform(v);
        double best = 1e300;
        for (const Vec3& g : gt_pts) best = std::min(best, squared_norm(p - g));
        sum += std::sqrt(best);
    }
    return {sum / static_cast<double>(mesh.vertices.size()), true};
}

inline bool pose_correct(const AddScore& score, double diameter, double fraction = 0.10) {
    return score.value < fraction * diameter;
}

// L1 flavor of ADD over an explicit point sample (the refiner training loss).
inline double add_l1_sampled(const std::vector<Vec3>& points, const RigidPose& gt,
                             const RigidPose& pred) {
    if (points.size() > kMaxSampledPoints) throw TooManyPoints(points.size());
    if (points.empty()) throw DegenerateMesh("point sample is empty");
    double sum = 0.0;
    for (const Vec3& v : points) sum += norm_l1(gt.transform(v) - pred.transform(v));
    return sum / static_cast<double>(points.size());
}

// Area-weighted uniform surface samples, deterministic per seed.
inline std::vector<Vec3> sample_surface_points(const Mesh& mesh, std::size_t n,
                                               std::uint64_t seed) {
    if (n > kMaxSampledPoints) throw TooManyPoints(n);
    if (mesh.triangles.empty()) throw DegenerateMesh("mesh has no triangles");
    std::vector<double> cumulative;
    cumulative.reserve(mesh.triangles.size());
    double total = 0.0;
    for (const auto& t : mesh.triangles) {
        const Vec3 a = mesh.vertices[t[0]], b = mesh.vertices[t[1]], c = mesh.vertices[t[2]];
        total += 0.5 * norm(cross(b - a, c - a));
        cumulative.push_back(total);
    }
    if (total <= 0.0) throw DegenerateMesh("mesh has zero surface area");

    Rng rng(seed);
    std::vector<Vec3> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pick = rng.uniform() * total;
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), pick);
        const auto& t = mesh.triangles[std::min<std::size_t>(
            static_cast<std::size_t>(it - cumulative.begin()), mesh.triangles.size() - 1)];
        const double r1 = std::sqrt(rng.uniform());
        const double r2 = rng.uniform();
        const Vec3 a = mesh.vertices[t[0]], b = mesh.vertices[t[1]], c = mesh.vertices[t[2]];
        out.push_back((1.0 - r1) * a + (r1 * (1.0 - r2)) * b + (r1 * r2) * c);
    }
    return out;
}

// Dense per-pixel class probabilities, innermost over classes.
struct ProbabilityTensor {
    int width = 0, height = 0, classes = 0;
    std::vector<double> p;

    ProbabilityTensor() = default;
    ProbabilityTensor(int w, int h, int c)
        : width(w), height(h), classes(c), p(static_cast<std::size_t>(w) * h * c, 0.0) {}

    double& at(int x, int y, int c) {
        return p[(static_cast<std::size_t>(y) * width + x) * classes + c];
    }
    double at(int x, int y, int c) const {
        return p[(static_cast<std::size_t>(y) * width + x) * classes + c];
    }
};

namespace detail {

inline void check_normalized(const ProbabilityTensor& t, const CorrespondenceMap& gt,
                             bool foreground_only) {
    for (int y = 0; y < t.height; ++y) {
        for (int x = 0; x < t.width; ++x) {
            if (foreground_only && !gt.foreground(x, y)) continue;
            double sum = 0.0;
            for (int c = 0; c < t.classes; ++c) sum += t.at(x, y, c);
            if (std::fabs(sum - 1.0) > 1e-6)
                throw UnnormalizedProbabilities("pixel probabilities sum to " +
                                                std::to_string(sum));
        }
    }
}

}  // namespace detail

// alpha * (weighted-mean mask CE over all pixels)
// + beta * (mean U CE over foreground) + gamma * (mean V CE over foreground),
// natural logarithm throughout. Mask weights follow the "weighted
// cross-entropy" convention: sum(w * CE) / sum(w).
inline double composite_loss(const ProbabilityTensor& mask_probs, const ProbabilityTensor& u_probs,
                             const ProbabilityTensor& v_probs, const CorrespondenceMap& gt,
                             const LossWeights& w, const std::vector<double>& mask_class_weights) {
    for (const ProbabilityTensor* t : {&mask_probs, &u_probs, &v_probs})
        if (t->width != gt.width || t->height != gt.height)
            throw ShapeMismatch("probability tensor size does not match the map");
    if (u_probs.classes != kUvClasses || v_probs.classes != kUvClasses)
        throw ShapeMismatch("u/v tensors must have 256 classes");
    if (static_cast<int>(mask_class_weights.size()) != mask_probs.classes)
        throw ShapeMismatch("mask class weight count does not match tensor classes");
    for (std::size_t i = 0; i < gt.pixel_count(); ++i)
        if (gt.id[i] >= mask_probs.classes)
            throw ShapeMismatch("ground-truth id exceeds mask tensor classes");

    detail::check_normalized(mask_probs, gt, false);
    detail::check_normalized(u_probs, gt, true);
    detail::check_normalized(v_probs, gt, true);

    double mask_num = 0.0, mask_den = 0.0;
    double u_sum = 0.0, v_sum = 0.0;
    std::size_t fg = 0;
    for (int y = 0; y < gt.height; ++y) {
        for (int x = 0; x < gt.width; ++x) {
            const std::size_t i = gt.index(x, y);
            const int id = gt.id[i];
            const double wm = mask_class_weights[id];
            mask_num += wm * -std::log(mask_probs.at(x, y, id));
            mask_den += wm;
            if (id == 0) continue;
            ++fg;
            u_sum += -std::log(u_probs.at(x, y, gt.u_class[i]));
            v_sum += -std::log(v_probs.at(x, y, gt.v_class[i]));
        }
    }
    const double lm = mask_den > 0.0 ? mask_num / mask_den : 0.0;
    const double lu = fg > 0 ? u_sum / static_cast<double>(fg) : 0.0;
    const double lv = fg > 0 ? v_sum / static_cast<double>(fg) : 0.0;
    return w.alpha * lm + w.beta * lu + w.gamma * lv;
}

// --- detection scoring -------------------------------------------------------

struct Box {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    double area() const { return std::max(0.0, x1 - x0) * std::max(0.0, y1 - y0); }
};

inline double iou(const Box& a, const Box& b) {
    const Box inter{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1),
                    std::min(a.y1, b.y1)};
    const double i = inter.area();
    const double u = a.area() + b.area() - i;
    return u > 0.0 ? i / u : 0.0;
}

struct Detection {
    int object_id = 0;
    double confidence = 0.0;
    Box box;
};

struct GroundTruthBox {
    int object_id = 0;
    Box box;
};

// Tight boxes around each object's foreground pixels, in pixel units.
inline std::map<int, Box> tight_boxes(const CorrespondenceMap& map) {
    std::map<int, Box> out;
    for (int y = 0; y < map.height; ++y) {
        for (int x = 0; x < map.width; ++x) {
            const int id = map.id[map.index(x, y)];
            if (id == 0) continue;
            auto [it, fresh] = out.try_emplace(id, Box{double(x), double(y), x + 1.0, y + 1.0});
            if (!fresh) {
                it->second.x0 = std::min(it->second.x0, double(x));
                it->second.y0 = std::min(it->second.y0, double(y));
                it->second.x1 = std::max(it->second.x1, x + 1.0);
                it->second.y1 = std::max(it->second.y1, y + 1.0);
            }
        }
    }
    return out;
}

// Mean over the classes appearing in `gts` of all-point-interpolated AP with
// greedy IoU matching (each ground-truth box claimable once).
inline double mean_average_precision(const std::vector<Detection>& detections,
                                     const std::vector<GroundTruthBox>& gts,
                                     double iou_threshold = 0.5) {
    std::map<int, std::vector<std::size_t>> gt_by_class;
    for (std::size_t i = 0; i < gts.size(); ++i) gt_by_class[gts[i].object_id].push_back(i);
    if (gt_by_class.empty()) return 0.0;

    double ap_sum = 0.0;
    for (const auto& [cls, gt_idx] : gt_by_class) {
        std::vector<std::size_t> det_idx;
        for (std::size_t i = 0; i < detections.size(); ++i)
            if (detections[i].object_id == cls) det_idx.push_back(i);
        std::stable_sort(det_idx.begin(), det_idx.end(), [&](std::size_t a, std::size_t b) {
            return detections[a].confidence > detections[b].confidence;
        });

        std::vector<bool> claimed(gt_idx.size(), false);
        std::vector<int> is_tp;
        is_tp.reserve(det_idx.size());
        for (std::size_t d : det_idx) {
            double best_iou = 0.0;
            std::size_t best_g = gt_idx.size();
            for (std::size_t g = 0; g < gt_idx.size(); ++g) {
                if (claimed[g]) continue;
                const double v = iou(detections[d].box, gts[gt_idx[g]].box);
                if (v > best_iou) {
                    best_iou = v;
                    best_g = g;
                }
            }
            if (best_g < gt_idx.size() && best_iou >= iou_threshold) {
                claimed[best_g] = true;
                is_tp.push_back(1);
            } else {
                is_tp.push_back(0);
            }
        }

        // precision envelope, all-point interpolation
        const double n_gt = static_cast<double>(gt_idx.size());
        std::vector<double> precision(is_tp.size()), recall(is_tp.size());
        int tp = 0;
        for (std::size_t i = 0; i < is_tp.size(); ++i) {
            tp += is_tp[i];
            precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
            recall[i] = static_cast<double>(tp) / n_gt;
        }
        for (std::size_t i = precision.size(); i-- > 1;)
            precision[i - 1] = std::max(precision[i - 1], precision[i]);
        double ap = 0.0, prev_recall = 0.0;
        for (std::size_t i = 0; i < is_tp.size(); ++i) {
            if (is_tp[i]) {
                ap += (recall[i] - prev_recall) * precision[i];
                prev_recall = recall[i];
            }
        }
        ap_sum += ap;
    }
    return ap_sum / static_cast<double>(gt_by_class.size());
}

}  // namespace corrpose
