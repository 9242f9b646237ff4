#include "oisac/camera.hpp"

#include <cmath>

namespace oisac {

std::optional<std::array<CameraPoint, 4>> feature_points_camera(
    const RelativeState& s, const ScreenGeometry& geom) {
    if (std::abs(s.gamma) >= M_PI / 2.0) {
        return std::nullopt;  // screen back-facing
    }
    const double cg = std::cos(s.gamma);
    const double sg = std::sin(s.gamma);
    // Screen center in the follower frame (x forward, y left).
    const double ox = s.x_lf - geom.d_l * cg;
    const double oy = s.y_lf - geom.d_l * sg;
    // Screen lateral direction; A sits on the side that makes
    // z_B - z_A = L1 * sin(gamma).
    const double half = geom.L1 / 2.0;
    const double ax = ox - half * sg;
    const double ay = oy + half * cg;
    const double bx = ox + half * sg;
    const double by = oy - half * cg;

    // Camera frame: z forward (follower x minus d_f), x rightward
    // (minus follower y), y downward. Screen center at camera height,
    // so the top row sits at y^c = -L2/2 and the bottom row at +L2/2.
    auto to_camera = [&](double fx, double fy, double yc) -> CameraPoint {
        return {-fy, yc, fx - geom.d_f};
    };
    const double top = -geom.L2 / 2.0;
    const double bottom = geom.L2 / 2.0;
    return std::array<CameraPoint, 4>{
        to_camera(ax, ay, top),     // A
        to_camera(bx, by, top),     // B
        to_camera(ax, ay, bottom),  // C
        to_camera(bx, by, bottom),  // D
    };
}

std::optional<PixelPoint> project(const CameraPoint& p,
                                  const CameraIntrinsics& k) {
    if (p[2] <= 0.0) {
        return std::nullopt;
    }
    return PixelPoint{k.f_m * p[0] / p[2] + k.m_0,
                      k.f_n * p[1] / p[2] + k.n_0};
}

Visibility check_visibility(const RelativeState& s, const FovLimits& fov,
                            const ScreenGeometry& geom) {
    const double near_bound = 2.0 * geom.mu * std::cos(fov.alpha_max - M_PI / 6.0);
    if (s.x_lf <= near_bound) {
        return Visibility::kTooClose;
    }
    if (s.x_lf > fov.d_max - geom.mu) {
        return Visibility::kTooFar;
    }
    const double alpha = std::atan2(s.y_lf, s.x_lf);
    const double alpha_bound = std::atan(
        (s.x_lf * std::sin(fov.alpha_max) - geom.mu) /
        (s.x_lf * std::cos(fov.alpha_max)));
    if (std::abs(alpha) > alpha_bound) {
        return Visibility::kBearing;
    }
    if (std::abs(s.gamma) >= fov.gamma_max) {
        return Visibility::kOrientation;
    }
    return Visibility::kVisible;
}

Observation observe(const RelativeState& s, const CameraIntrinsics& k,
                    const ScreenGeometry& geom, const FovLimits& fov,
                    bool quantize, double noise_sigma, std::mt19937_64& rng) {
    Observation obs;
    obs.status = check_visibility(s, fov, geom);
    if (obs.status != Visibility::kVisible) {
        return obs;
    }
    const auto points = feature_points_camera(s, geom);
    if (!points) {
        obs.status = Visibility::kOrientation;
        return obs;
    }
    std::array<PixelPoint, 4> px;
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (int i = 0; i < 4; ++i) {
        const auto proj = project((*points)[i], k);
        if (!proj) {
            obs.status = Visibility::kOutOfImage;
            return obs;
        }
        px[i] = *proj;
        if (noise_sigma > 0.0) {
            px[i].m += noise(rng);
            px[i].n += noise(rng);
        }
        if (quantize) {
            px[i].m = std::round(px[i].m);
            px[i].n = std::round(px[i].n);
        }
        if (px[i].m < 0.0 || px[i].m >= k.width || px[i].n < 0.0 ||
            px[i].n >= k.height) {
            obs.status = Visibility::kOutOfImage;
            return obs;
        }
    }
    obs.pixels = {px[0], px[1], px[2], px[3]};
    return obs;
}

std::optional<RelativeState> estimate_pose(const FeaturePixels& p,
                                           const CameraIntrinsics& k,
                                           const ScreenGeometry& geom) {
    const double n_ca = p.c.n - p.a.n;
    const double mt_a = p.a.m - k.m_0;
    const double nt_a = p.a.n - k.n_0;
    const double mt_b = p.b.m - k.m_0;
    const double nt_b = p.b.n - k.n_0;
    if (n_ca == 0.0 || nt_b == 0.0) {
        return std::nullopt;
    }

    const double z_a = k.f_n * geom.L2 / n_ca;
    const double z_b = z_a * nt_a / nt_b;
    if (z_a <= 0.0 || z_b <= 0.0) {
        return std::nullopt;
    }
    const double x_a = z_a * mt_a / k.f_m;
    const double x_b = z_b * mt_b / k.f_m;

    const double z_o = 0.5 * (z_a + z_b);
    const double x_o = 0.5 * (x_a + x_b);

    double sin_g = (z_b - z_a) / geom.L1;
    double cos_g = (x_b - x_a) / geom.L1;
    const double norm = std::hypot(sin_g, cos_g);
    if (norm == 0.0 || cos_g <= 0.0) {
        return std::nullopt;  // would imply |gamma| >= pi/2
    }
    sin_g /= norm;
    cos_g /= norm;
    const double gamma = std::atan2(sin_g, cos_g);

    RelativeState s;
    s.x_lf = z_o + geom.d_f + geom.d_l * cos_g;
    s.y_lf = -x_o + geom.d_l * sin_g;
    s.gamma = gamma;
    return s;
}

}  // namespace oisac
