#include "oisac/geometry.hpp"

#include <cmath>

namespace oisac {

namespace {
constexpr double kOmegaEps = 1e-9;  // [rad/s] straight-line switch
}  // namespace

double wrap_angle(double angle) {
    double wrapped = std::remainder(angle, 2.0 * M_PI);
    // std::remainder returns values in [-pi, pi]; fold -pi onto +pi.
    if (wrapped <= -M_PI) {
        wrapped += 2.0 * M_PI;
    }
    return wrapped;
}

Pose2D integrate_unicycle(const Pose2D& pose, const Twist& u, double dt) {
    // Exact constant-twist arc in the cancellation-free midpoint form:
    // delta = v dt sinc(omega dt / 2) * [cos, sin](theta + omega dt / 2).
    const double half = 0.5 * u.omega * dt;
    const double sinc =
        (std::abs(u.omega) > kOmegaEps) ? std::sin(half) / half : 1.0;
    const double theta_mid = pose.theta + half;
    Pose2D next;
    next.x = pose.x + u.v * dt * sinc * std::cos(theta_mid);
    next.y = pose.y + u.v * dt * sinc * std::sin(theta_mid);
    next.theta = wrap_angle(pose.theta + u.omega * dt);
    return next;
}

RelativeState relative_state(const Pose2D& leader, const Pose2D& follower) {
    const double dx = leader.x - follower.x;
    const double dy = leader.y - follower.y;
    const double c = std::cos(follower.theta);
    const double s = std::sin(follower.theta);
    RelativeState rel;
    rel.x_lf = c * dx + s * dy;
    rel.y_lf = -s * dx + c * dy;
    rel.gamma = wrap_angle(leader.theta - follower.theta);
    return rel;
}

std::array<double, 3> relative_derivative(const RelativeState& s,
                                          const Twist& u_l, const Twist& u_f) {
    return {
        u_l.v * std::cos(s.gamma) - u_f.v + s.y_lf * u_f.omega,
        u_l.v * std::sin(s.gamma) - s.x_lf * u_f.omega,
        u_l.omega - u_f.omega,
    };
}

}  // namespace oisac
