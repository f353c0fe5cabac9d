#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "corrpose/correspond.hpp"
#include "corrpose/errors.hpp"
#include "corrpose/geometry.hpp"
#include "corrpose/rng.hpp"

namespace corrpose {

struct RansacConfig {
    int iterations = 150;
    double reproj_threshold = 1.0;  // pixels, Euclidean distance, strict <
    int min_inliers = 6;
    std::uint64_t seed = 0;
};

struct PnPResult {
    RigidPose pose;
    std::vector<int> inlier_indices;  // sorted, as selected by the best hypothesis
    double confidence = 0.0;          // inlier proportion
    double mean_reproj_error = 0.0;   // pixels over the inliers, after the refit
};

namespace detail {

// real roots of sum c[i] x^i (degree 4 max) via Durand-Kerner iteration plus
// a few Newton polishing steps on each extracted real root
inline std::vector<double> real_roots(std::array<double, 5> c) {
    double scale = 0.0;
    for (double v : c) scale = std::max(scale, std::fabs(v));
    if (scale == 0.0) return {};
    for (double& v : c) v /= scale;

    int deg = 4;
    while (deg > 0 && std::fabs(c[deg]) < 1e-14) --deg;
    if (deg == 0) return {};

    using C = std::complex<double>;
    std::vector<C> coef(deg + 1);
    for (int i = 0; i <= deg; ++i) coef[i] = c[i] / c[deg];
    auto eval = [&](C x) {
        C r = coef[deg];
        for (int i = deg - 1; i >= 0; --i) r = r * x + coef[i];
        return r;
    };

    std::vector<C> z(deg);
    const C g{0.4, 0.9};
    C p{1.0, 0.0};
    for (int i = 0; i < deg; ++i) {
        p *= g;
        z[i] = p;
    }
    for (int it = 0; it < 120; ++it) {
        double moved = 0.0;
        for (int i = 0; i < deg; ++i) {
            C denom{1.0, 0.0};
            for (int j = 0; j < deg; ++j)
                if (j != i) denom *= z[i] - z[j];
            if (std::abs(denom) < 1e-300) continue;
            const C step = eval(z[i]) / denom;
            z[i] -= step;
            moved = std::max(moved, std::abs(step));
        }
        if (moved < 1e-14) break;
    }

    std::vector<double> out;
    for (const C& r : z) {
        if (std::fabs(r.imag()) > 1e-6 * (1.0 + std::fabs(r.real()))) continue;
        double x = r.real();
        for (int it = 0; it < 3; ++it) {  // Newton polish on the real axis
            double f = c[deg], df = 0.0;
            for (int i = deg - 1; i >= 0; --i) {
                df = df * x + f;
                f = f * x + c[i];
            }
            if (std::fabs(df) < 1e-300) break;
            x -= f / df;
        }
        out.push_back(x);
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline double reproj_error(const Vec3& cam, const Vec2& px, const CameraIntrinsics& k) {
    if (cam.z <= kMinDepth) return 1e18;
    const double dx = k.fx * cam.x / cam.z + k.cx - px.x;
    const double dy = k.fy * cam.y / cam.z + k.cy - px.y;
    return std::hypot(dx, dy);
}

inline Vec3 bearing(const Vec2& px, const CameraIntrinsics& k) {
    return normalized({(px.x - k.cx) / k.fx, (px.y - k.cy) / k.fy, 1.0});
}

// R, t aligning model points onto camera points given one exact triangle pair
inline RigidPose align_triads(const std::array<Vec3, 3>& X, const std::array<Vec3, 3>& Y) {
    auto triad = [](const Vec3& a, const Vec3& b, const Vec3& c) {
        const Vec3 e1 = normalized(b - a);
        Vec3 e2 = c - a;
        e2 = normalized(e2 - dot(e2, e1) * e1);
        return Mat3::from_columns(e1, e2, cross(e1, e2));
    };
    const Mat3 mw = triad(X[0], X[1], X[2]);
    const Mat3 mc = triad(Y[0], Y[1], Y[2]);
    const Mat3 rot = mc * mw.transposed();
    const Quaternion q = Quaternion::from_matrix(rot);
    return {q, Y[0] - q.rotate(X[0])};
}

}  // namespace detail

// Minimal P3P (Grunert quartic) on the first three correspondences,
// disambiguated by the fourth; candidates returned best-first by the
// fourth point's reprojection error.
inline std::vector<RigidPose> pnp_minimal(const std::vector<Correspondence2D3D>& corrs,
                                          const CameraIntrinsics& k) {
    if (corrs.size() != 4) throw InsufficientCorrespondences(corrs.size());
    const std::array<Vec3, 3> X{corrs[0].point, corrs[1].point, corrs[2].point};
    const Vec3 x4 = corrs[3].point;

    const double a2 = squared_norm(X[1] - X[2]);
    const double b2 = squared_norm(X[0] - X[2]);
    const double c2 = squared_norm(X[0] - X[1]);
    const double scale2 = std::max({a2, b2, c2});
    if (scale2 <= 0.0 || squared_norm(cross(X[1] - X[0], X[2] - X[0])) < 1e-24 * scale2 * scale2)
        throw DegenerateConfiguration("collinear or coincident 3D points");

    const std::array<Vec3, 3> f{detail::bearing(corrs[0].pixel, k),
                                detail::bearing(corrs[1].pixel, k),
                                detail::bearing(corrs[2].pixel, k)};
    const double ca = dot(f[1], f[2]);
    const double cb = dot(f[0], f[2]);
    const double cg = dot(f[0], f[1]);

    // quartic in v = s3/s1 (resultant of the two law-of-cosines ratios)
    const double A4 = a2 * a2 - 2 * a2 * b2 - 2 * a2 * c2 + b2 * b2 - 4 * b2 * c2 * ca * ca +
                      2 * b2 * c2 + c2 * c2;
    const double A3 = -4 * a2 * a2 * cb + 4 * a2 * b2 * ca * cg + 4 * a2 * b2 * cb +
                      8 * a2 * c2 * cb - 4 * b2 * b2 * ca * cg + 8 * b2 * c2 * ca * ca * cb +
                      4 * b2 * c2 * ca * cg - 4 * b2 * c2 * cb - 4 * c2 * c2 * cb;
    const double A2 = 4 * a2 * a2 * cb * cb + 2 * a2 * a2 - 8 * a2 * b2 * ca * cb * cg -
                      4 * a2 * b2 * cg * cg - 8 * a2 * c2 * cb * cb - 4 * a2 * c2 +
                      4 * b2 * b2 * ca * ca + 4 * b2 * b2 * cg * cg - 2 * b2 * b2 -
                      4 * b2 * c2 * ca * ca - 8 * b2 * c2 * ca * cb * cg + 4 * c2 * c2 * cb * cb +
                      2 * c2 * c2;
    const double A1 = -4 * a2 * a2 * cb + 4 * a2 * b2 * ca * cg + 8 * a2 * b2 * cb * cg * cg -
                      4 * a2 * b2 * cb + 8 * a2 * c2 * cb - 4 * b2 * b2 * ca * cg +
                      4 * b2 * c2 * ca * cg + 4 * b2 * c2 * cb - 4 * c2 * c2 * cb;
    const double A0 = a2 * a2 - 4 * a2 * b2 * cg * cg + 2 * a2 * b2 - 2 * a2 * c2 + b2 * b2 -
                      2 * b2 * c2 + c2 * c2;

    std::vector<std::pair<double, RigidPose>> candidates;
    for (double v : detail::real_roots({A0, A1, A2, A3, A4})) {
        if (!(v > 0.0) || !std::isfinite(v)) continue;
        const double s1sq = b2 / (1.0 + v * v - 2.0 * v * cb);
        if (!(s1sq > 0.0) || !std::isfinite(s1sq)) continue;

        std::vector<double> us;
        const double denom = 2.0 * b2 * (ca * v - cg);
        if (std::fabs(denom) > 1e-9 * scale2) {
            us.push_back(((b2 + c2 - a2) * v * v + 2.0 * cb * (a2 - c2) * v -
                          (a2 + b2 - c2)) /
                         denom);
        } else {
            // degenerate linear relation; fall back to the quadratic in u
            const double q = c2 / s1sq;  // = 1 + u^2 - 2 u cg
            const double disc = cg * cg - 1.0 + q;
            if (disc < 0.0) continue;
            us.push_back(cg + std::sqrt(disc));
            us.push_back(cg - std::sqrt(disc));
        }
        for (double u : us) {
            if (!(u > 0.0) || !std::isfinite(u)) continue;
            double s1 = std::sqrt(s1sq), s2 = u * s1, s3 = v * s1;
            // Gauss-Newton polish of the three side lengths against the
            // law-of-cosines system; quartic roots alone lose precision in
            // near-degenerate geometry
            for (int it = 0; it < 5; ++it) {
                const double r0 = s2 * s2 + s3 * s3 - 2 * s2 * s3 * ca - a2;
                const double r1 = s1 * s1 + s3 * s3 - 2 * s1 * s3 * cb - b2;
                const double r2 = s1 * s1 + s2 * s2 - 2 * s1 * s2 * cg - c2;
                const Mat3 J{{{{0.0, 2 * s2 - 2 * s3 * ca, 2 * s3 - 2 * s2 * ca},
                               {2 * s1 - 2 * s3 * cb, 0.0, 2 * s3 - 2 * s1 * cb},
                               {2 * s1 - 2 * s2 * cg, 2 * s2 - 2 * s1 * cg, 0.0}}}};
                const double det = J.det();
                if (std::fabs(det) < 1e-300) break;
                // Cramer's rule on J * d = -r
                Mat3 jx = J, jy = J, jz = J;
                for (int row = 0; row < 3; ++row) {
                    const double rhs = -(row == 0 ? r0 : row == 1 ? r1 : r2);
                    jx.m[row][0] = rhs;
                    jy.m[row][1] = rhs;
                    jz.m[row][2] = rhs;
                }
                s1 += jx.det() / det;
                s2 += jy.det() / det;
                s3 += jz.det() / det;
            }
            if (!(s1 > 0.0 && s2 > 0.0 && s3 > 0.0)) continue;

            const std::array<Vec3, 3> Y{s1 * f[0], s2 * f[1], s3 * f[2]};
            const RigidPose pose = detail::align_triads(X, Y);
            const double err4 = detail::reproj_error(pose.transform(x4), corrs[3].pixel, k);
            candidates.emplace_back(err4, pose);
        }
    }
    if (candidates.empty()) throw DegenerateConfiguration("no valid P3P solution");
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<RigidPose> out;
    out.reserve(candidates.size());
    for (const auto& [err, pose] : candidates) out.push_back(pose);
    return out;
}

// Levenberg-Marquardt over (axis-angle increment, translation delta),
// minimizing the summed squared reprojection error.
inline RigidPose pnp_refine_lm(const std::vector<Correspondence2D3D>& corrs,
                               const CameraIntrinsics& k, const RigidPose& init,
                               int max_iters = 50, double tol = 1e-10) {
    if (corrs.size() < 4) throw InsufficientCorrespondences(corrs.size());

    auto cost_of = [&](const RigidPose& pose, bool* valid) {
        double c = 0.0;
        *valid = true;
        for (const auto& corr : corrs) {
            const Vec3 cam = pose.transform(corr.point);
            if (cam.z <= kMinDepth) {
                *valid = false;
                return 1e300;
            }
            const double dx = k.fx * cam.x / cam.z + k.cx - corr.pixel.x;
            const double dy = k.fy * cam.y / cam.z + k.cy - corr.pixel.y;
            c += dx * dx + dy * dy;
        }
        return c;
    };

    bool ok = false;
    RigidPose pose = init;
    double cost = cost_of(pose, &ok);
    if (!ok) throw NonPositiveDepth(0.0);

    double lambda = 1e-3;
    for (int iter = 0; iter < max_iters; ++iter) {
        // accumulate normal equations J^T J and J^T r over all points
        std::array<std::array<double, 6>, 6> h{};
        std::array<double, 6> g{};
        for (const auto& corr : corrs) {
            const Vec3 cam = pose.transform(corr.point);
            const double iz = 1.0 / cam.z;
            const double ex = k.fx * cam.x * iz + k.cx - corr.pixel.x;
            const double ey = k.fy * cam.y * iz + k.cy - corr.pixel.y;
            // d(pixel)/d(cam): 2x3
            const std::array<std::array<double, 3>, 2> dp{
                {{k.fx * iz, 0.0, -k.fx * cam.x * iz * iz},
                 {0.0, k.fy * iz, -k.fy * cam.y * iz * iz}}};
            // d(cam)/d(omega) = -[cam - t]x, d(cam)/d(dt) = I
            const Vec3 rx = cam - pose.translation;
            const std::array<std::array<double, 3>, 3> dc{
                {{0.0, rx.z, -rx.y}, {-rx.z, 0.0, rx.x}, {rx.y, -rx.x, 0.0}}};
            std::array<std::array<double, 6>, 2> J{};
            for (int r = 0; r < 2; ++r) {
                for (int c = 0; c < 3; ++c) {
                    double s = 0.0;
                    for (int m = 0; m < 3; ++m) s += dp[r][m] * dc[m][c];
                    J[r][c] = s;
                    J[r][3 + c] = dp[r][c];
                }
            }
            const double e[2] = {ex, ey};
            for (int r = 0; r < 2; ++r)
                for (int a = 0; a < 6; ++a) {
                    g[a] += J[r][a] * e[r];
                    for (int b = a; b < 6; ++b) h[a][b] += J[r][a] * J[r][b];
                }
        }
        for (int a = 0; a < 6; ++a)
            for (int b = 0; b < a; ++b) h[a][b] = h[b][a];

        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::fabs(v));
        if (gmax < 1e-14) break;

        bool stepped = false;
        for (int attempt = 0; attempt < 40 && !stepped; ++attempt) {
            auto a = h;
            for (int i = 0; i < 6; ++i) a[i][i] += lambda;
            // Cholesky solve a * d = -g
            std::array<std::array<double, 6>, 6> l{};
            bool spd = true;
            for (int i = 0; i < 6 && spd; ++i) {
                for (int j = 0; j <= i; ++j) {
                    double s = a[i][j];
                    for (int m = 0; m < j; ++m) s -= l[i][m] * l[j][m];
                    if (i == j) {
                        if (s <= 0.0) {
                            spd = false;
                            break;
                        }
                        l[i][i] = std::sqrt(s);
                    } else {
                        l[i][j] = s / l[j][j];
                    }
                }
            }
            if (!spd) {
                lambda *= 10.0;
                continue;
            }
            std::array<double, 6> y{}, d{};
            for (int i = 0; i < 6; ++i) {
                double s = -g[i];
                for (int m = 0; m < i; ++m) s -= l[i][m] * y[m];
                y[i] = s / l[i][i];
            }
            for (int i = 5; i >= 0; --i) {
                double s = y[i];
                for (int m = i + 1; m < 6; ++m) s -= l[m][i] * d[m];
                d[i] = s / l[i][i];
            }

            const Vec3 omega{d[0], d[1], d[2]};
            const double angle = norm(omega);
            const Quaternion dq = angle > 0.0 ? Quaternion::from_axis_angle(omega, angle)
                                              : Quaternion::identity();
            // rotation increment composed on the left, translation additive;
            // matches the [cam - t] term in the Jacobian
            const RigidPose trial{dq * pose.rotation,
                                  pose.translation + Vec3{d[3], d[4], d[5]}};
            bool valid = false;
            const double trial_cost = cost_of(trial, &valid);
            if (valid && trial_cost < cost) {
                const double drop = cost - trial_cost;
                pose = trial;
                cost = trial_cost;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                if (drop <= tol * std::max(1.0, cost)) return pose;
            } else {
                lambda *= 10.0;
                if (lambda > 1e15) return pose;
            }
        }
        if (!stepped) break;
    }
    return pose;
}

// RANSAC around the minimal solver. All sample quadruples are drawn up front
// from the seeded generator, so results do not depend on evaluation order and
// a run with more iterations extends (never reshuffles) a shorter run.
inline PnPResult ransac_pnp(const std::vector<Correspondence2D3D>& corrs,
                            const CameraIntrinsics& k, const RansacConfig& cfg = {}) {
    const int n = static_cast<int>(corrs.size());
    if (n < 4) throw InsufficientCorrespondences(corrs.size());

    Rng rng(cfg.seed);
    std::vector<std::array<int, 4>> samples(cfg.iterations);
    for (auto& q : samples) {
        for (int i = 0; i < 4; ++i) {
            int pick;
            bool fresh;
            do {
                pick = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
                fresh = true;
                for (int j = 0; j < i; ++j) fresh &= pick != q[j];
            } while (!fresh);
            q[i] = pick;
        }
    }

    int best_count = -1;
    double best_mean = 1e300;
    RigidPose best_pose;
    for (const auto& q : samples) {
        RigidPose hypo;
        try {
            hypo = pnp_minimal({corrs[q[0]], corrs[q[1]], corrs[q[2]], corrs[q[3]]}, k).front();
        } catch (const DegenerateConfiguration&) {
            continue;
        }
        int count = 0;
        double err_sum = 0.0;
        for (const auto& corr : corrs) {
            const double e = detail::reproj_error(hypo.transform(corr.point), corr.pixel, k);
            if (e < cfg.reproj_threshold) {
                ++count;
                err_sum += e;
            }
        }
        if (count == 0) continue;
        const double mean = err_sum / count;
        if (count > best_count || (count == best_count && mean < best_mean)) {
            best_count = count;
            best_mean = mean;
            best_pose = hypo;
        }
    }
    if (best_count < std::max(cfg.min_inliers, 4)) throw NoValidHypothesis();

    PnPResult result;
    for (int i = 0; i < n; ++i) {
        const double e = detail::reproj_error(best_pose.transform(corrs[i].point), corrs[i].pixel, k);
        if (e < cfg.reproj_threshold) result.inlier_indices.push_back(i);
    }
    std::vector<Correspondence2D3D> inliers;
    inliers.reserve(result.inlier_indices.size());
    for (int i : result.inlier_indices) inliers.push_back(corrs[i]);

    result.pose = pnp_refine_lm(inliers, k, best_pose);
    result.confidence = static_cast<double>(result.inlier_indices.size()) / n;
    double err_sum = 0.0;
    for (const auto& corr : inliers)
        err_sum += detail::reproj_error(result.pose.transform(corr.point), corr.pixel, k);
    result.mean_reproj_error = inliers.empty() ? 0.0 : err_sum / static_cast<double>(inliers.size());
    return result;
}

}  // namespace corrpose
