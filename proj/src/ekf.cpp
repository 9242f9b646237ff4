#include "oisac/ekf.hpp"

#include <cmath>

namespace oisac {

namespace {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

Vec5 dynamics(const Vec5& x, const Twist& u_f) {
    const double gamma = x(2);
    const double v_l = x(3);
    const double omega_l = x(4);
    Vec5 dx;
    dx(0) = v_l * std::cos(gamma) - u_f.v + x(1) * u_f.omega;
    dx(1) = v_l * std::sin(gamma) - x(0) * u_f.omega;
    dx(2) = omega_l - u_f.omega;
    dx(3) = 0.0;
    dx(4) = 0.0;
    return dx;
}

Mat5 dynamics_jacobian(const Vec5& x, const Twist& u_f) {
    const double gamma = x(2);
    const double v_l = x(3);
    Mat5 a = Mat5::Zero();
    a(0, 1) = u_f.omega;
    a(0, 2) = -v_l * std::sin(gamma);
    a(0, 3) = std::cos(gamma);
    a(1, 0) = -u_f.omega;
    a(1, 2) = v_l * std::cos(gamma);
    a(1, 3) = std::sin(gamma);
    a(2, 4) = 1.0;
    return a;
}

void symmetrize(Mat5& p) { p = 0.5 * (p + p.transpose()).eval(); }

}  // namespace

EkfState ekf_init(const RelativeState& s0, double p0) {
    EkfState state;
    state.mean << s0.x_lf, s0.y_lf, s0.gamma, 0.0, 0.0;
    state.cov = p0 * Mat5::Identity();
    return state;
}

void ekf_predict(EkfState& state, const Twist& u_f, double dt,
                 const EkfNoise& noise) {
    const Vec5 dx = dynamics(state.mean, u_f);
    const Mat5 a = dynamics_jacobian(state.mean, u_f);
    state.mean += dt * dx;
    state.mean(2) = wrap_angle(state.mean(2));
    const Mat5 f = Mat5::Identity() + dt * a;
    state.cov = f * state.cov * f.transpose();
    state.cov += dt * noise.q_diag.asDiagonal().toDenseMatrix();
    symmetrize(state.cov);
}

bool ekf_update(EkfState& state, const RelativeState& z,
                const EkfNoise& noise) {
    Eigen::Matrix<double, 3, 5> h = Eigen::Matrix<double, 3, 5>::Zero();
    h(0, 0) = h(1, 1) = h(2, 2) = 1.0;
    const Eigen::Matrix3d r = noise.r_diag.asDiagonal();
    const Eigen::Matrix3d s_innov = h * state.cov * h.transpose() + r;
    Eigen::LLT<Eigen::Matrix3d> llt(s_innov);
    if (llt.info() != Eigen::Success) {
        return false;
    }
    Eigen::Vector3d innovation(z.x_lf - state.mean(0), z.y_lf - state.mean(1),
                               wrap_angle(z.gamma - state.mean(2)));
    const Eigen::Matrix<double, 5, 3> gain =
        state.cov * h.transpose() * llt.solve(Eigen::Matrix3d::Identity());
    state.mean += gain * innovation;
    state.mean(2) = wrap_angle(state.mean(2));
    const Mat5 ikh = Mat5::Identity() - gain * h;
    state.cov =
        ikh * state.cov * ikh.transpose() + gain * r * gain.transpose();
    symmetrize(state.cov);
    return true;
}

}  // namespace oisac
