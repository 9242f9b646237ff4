#ifndef OISAC_GEOMETRY_HPP_
#define OISAC_GEOMETRY_HPP_

#include <array>

namespace oisac {

/// Planar robot pose in the world frame. theta is kept in (-pi, pi].
struct Pose2D {
    double x = 0.0;      // [m]
    double y = 0.0;      // [m]
    double theta = 0.0;  // [rad]
};

/// Unicycle velocity command: forward speed and turn rate.
struct Twist {
    double v = 0.0;      // [m/s]
    double omega = 0.0;  // [rad/s]
};

/// Leader pose expressed in the follower frame plus heading difference
/// gamma = theta_l - theta_f, wrapped to (-pi, pi].
struct RelativeState {
    double x_lf = 0.0;   // [m]
    double y_lf = 0.0;   // [m]
    double gamma = 0.0;  // [rad]
};

/// Velocity and acceleration limits shared by both robots.
struct Bounds {
    double v_max = 0.6;          // [m/s]
    double omega_max = 0.2;      // [rad/s]
    double vdot_max = 0.5;       // [m/s^2]
    double omegadot_max = 0.2;   // [rad/s^2]
};

/// Wraps an angle to (-pi, pi]. All angle arithmetic in the library goes
/// through this helper so the two boundary representations never mix.
double wrap_angle(double angle);

/// Propagates a pose under a constant twist for dt seconds using the exact
/// circular-arc solution. Falls back to the straight-line limit when
/// |omega| <= 1e-9 rad/s.
Pose2D integrate_unicycle(const Pose2D& pose, const Twist& u, double dt);

/// Relative state of `leader` as seen from `follower`:
/// r_l^f = R(-theta_f) (r_l - r_f), gamma = wrap(theta_l - theta_f).
RelativeState relative_state(const Pose2D& leader, const Pose2D& follower);

/// Time derivative of the relative state, d/dt [x_lf, y_lf, gamma],
/// for leader input u_l and follower input u_f.
std::array<double, 3> relative_derivative(const RelativeState& s,
                                          const Twist& u_l, const Twist& u_f);

}  // namespace oisac

#endif  // OISAC_GEOMETRY_HPP_
