#ifndef OISAC_CAMERA_HPP_
#define OISAC_CAMERA_HPP_

#include <array>
#include <optional>
#include <random>

#include "oisac/geometry.hpp"

namespace oisac {

/// Pinhole camera parameters. m grows rightward, n grows downward.
struct CameraIntrinsics {
    double f_m = 500.0;  // [px] horizontal scale
    double f_n = 500.0;  // [px] vertical scale
    double m_0 = 320.0;  // [px] principal point
    double n_0 = 240.0;  // [px]
    int width = 640;     // [px]
    int height = 480;    // [px]
};

/// Physical layout of the screen and mounting offsets.
/// L1/L2 are the horizontal/vertical feature-point separations. d_l is the
/// distance from the leader origin back to the screen plane, d_f from the
/// follower origin forward to the camera principal point (may be negative).
struct ScreenGeometry {
    double L1 = 0.232;   // [m]
    double L2 = 0.145;   // [m]
    double d_l = 0.275;  // [m]
    double d_f = -0.017; // [m]
    double mu = 0.2;     // [m] collision radius
};

struct PixelPoint {
    double m = 0.0;  // [px] column coordinate
    double n = 0.0;  // [px] row coordinate
};

/// Detected feature-point centers, labeled by position on the screen as
/// seen by the camera: a top-left, b top-right, c bottom-left, d bottom-right.
struct FeaturePixels {
    PixelPoint a, b, c, d;
};

/// Field-of-view limits for visibility maintenance.
struct FovLimits {
    double alpha_max = M_PI / 4.0;  // [rad]
    double d_max = 1.45;            // [m]
    double gamma_max = M_PI / 3.0;  // [rad]
};

enum class Visibility {
    kVisible,
    kTooClose,     // x_lf at or below the near range bound
    kTooFar,       // x_lf beyond d_max - mu
    kBearing,      // |alpha| beyond the bearing cone
    kOrientation,  // |gamma| >= gamma_max
    kOutOfImage,   // a feature point projects outside the image
};

/// 3-D point in the camera frame: x right, y down, z forward.
using CameraPoint = std::array<double, 3>;

/// Positions of the four screen feature points in the camera frame for a
/// given relative state. Empty when the screen is back-facing
/// (|gamma| >= pi/2). Order: A, B, C, D.
std::optional<std::array<CameraPoint, 4>> feature_points_camera(
    const RelativeState& s, const ScreenGeometry& geom);

/// Perspective projection of a camera-frame point. Empty when z <= 0.
std::optional<PixelPoint> project(const CameraPoint& p,
                                  const CameraIntrinsics& k);

/// Evaluates the visibility-maintenance conditions; returns the first
/// violated one. The near bound is strict, the far bound inclusive.
Visibility check_visibility(const RelativeState& s, const FovLimits& fov,
                            const ScreenGeometry& geom);

struct Observation {
    Visibility status = Visibility::kVisible;
    FeaturePixels pixels;

    bool ok() const { return status == Visibility::kVisible; }
};

/// Synthetic observation: projects the four feature points, optionally adds
/// zero-mean Gaussian pixel noise and rounds to integer pixel coordinates.
/// Fails with the violated condition when the state is outside the FoV or a
/// point leaves the image.
Observation observe(const RelativeState& s, const CameraIntrinsics& k,
                    const ScreenGeometry& geom, const FovLimits& fov,
                    bool quantize, double noise_sigma, std::mt19937_64& rng);

/// Closed-form relative-pose estimate from the four feature pixels.
/// Empty on degenerate observations: n_C == n_A, vanishing vertical offset
/// of B, non-positive recovered depth, or a back-facing solution.
std::optional<RelativeState> estimate_pose(const FeaturePixels& p,
                                           const CameraIntrinsics& k,
                                           const ScreenGeometry& geom);

}  // namespace oisac

#endif  // OISAC_CAMERA_HPP_
