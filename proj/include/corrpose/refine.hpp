#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "corrpose/correspond.hpp"
#include "corrpose/errors.hpp"
#include "corrpose/geometry.hpp"
#include "corrpose/mesh.hpp"
#include "corrpose/posesolve.hpp"
#include "corrpose/raster.hpp"

namespace corrpose {

// Agreement gate between observed and re-rendered class pairs, in Chebyshev
// class units (~3% of the UV range): wide enough for quantization and mild
// noise, tight enough to reject gross outliers.
inline constexpr int kClassAgreementGate = 8;

// Raised when a refinement iteration cannot produce a usable solution;
// carries the last pose that was still backed by a valid solve (or the
// initial pose) so callers can score the frame anyway.
struct RefinementFailed : Error {
    RigidPose last_pose;

    RefinementFailed(const std::string& why, const RigidPose& pose)
        : Error("refinement failed: " + why), last_pose(pose) {}
};

// Render-and-rematch refinement: render the model at the current estimate,
// keep observed foreground pixels whose class pair agrees with the render
// within the Chebyshev gate, re-solve, and accept the new pose only if the
// mean inlier reprojection error does not increase.
inline RigidPose refine_pose(const CorrespondenceMap& observed, const CorrespondenceModel& model,
                             int object_id, const RigidPose& init, const CameraIntrinsics& k,
                             int iters = 2, const RansacConfig& cfg = {}) {
    if (observed.width != k.width || observed.height != k.height)
        throw ShapeMismatch("observed map size does not match the camera");

    RigidPose pose = init;
    double accepted_err = std::numeric_limits<double>::infinity();
    for (int iteration = 0; iteration < iters; ++iteration) {
        CorrespondenceMap rendered;
        try {
            rendered = render(model, object_id, pose, k);
        } catch (const NonPositiveDepth&) {
            rendered = CorrespondenceMap(k.width, k.height);
        }
        bool any = false;
        for (std::uint8_t v : rendered.id) any = any || v != 0;
        if (!any) {
            if (iteration == 0) throw EmptyRender("initial pose renders no pixels");
            throw RefinementFailed("pose left the view frustum", pose);
        }

        std::vector<Correspondence2D3D> corrs;
        for (int y = 0; y < observed.height; ++y) {
            for (int x = 0; x < observed.width; ++x) {
                const std::size_t i = observed.index(x, y);
                if (observed.id[i] != object_id || rendered.id[i] != object_id) continue;
                const int du = std::abs(int(observed.u_class[i]) - int(rendered.u_class[i]));
                const int dv = std::abs(int(observed.v_class[i]) - int(rendered.v_class[i]));
                if (std::max(du, dv) > kClassAgreementGate) continue;
                if (!model.lookup.valid(observed.u_class[i], observed.v_class[i])) continue;
                corrs.push_back({Vec2{x + 0.5, y + 0.5},
                                 model.lookup.at(observed.u_class[i], observed.v_class[i])});
            }
        }

        PnPResult result;
        try {
            result = ransac_pnp(corrs, k, cfg);
        } catch (const NoValidHypothesis& e) {
            throw RefinementFailed(e.what(), pose);
        } catch (const InsufficientCorrespondences& e) {
            throw RefinementFailed(e.what(), pose);
        }

        if (result.mean_reproj_error > accepted_err) break;
        pose = result.pose;
        accepted_err = result.mean_reproj_error;
    }
    return pose;
}

}  // namespace corrpose
