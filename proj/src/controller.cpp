#include "oisac/controller.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace oisac {

namespace {

double smooth_component(double target, double current, double accel,
                        double dt) {
    if (target > current) {
        return std::min(target, current + accel * dt);
    }
    return std::max(target, current - accel * dt);
}

}  // namespace

Twist smooth(const Twist& target, SmootherState& state) {
    const double dt = 1.0 / state.f_v;
    state.current.v =
        smooth_component(target.v, state.current.v, state.vdot_des, dt);
    state.current.omega = smooth_component(target.omega, state.current.omega,
                                           state.omegadot_des, dt);
    return state.current;
}

GateDecision gate_velocity(const std::optional<Twist>& received,
                           GateState& state) {
    GateDecision decision;
    decision.applied = state.accepted;
    if (!received) {
        return decision;
    }
    const double v_limit = state.n * state.vdot_des * state.delta_t;
    const double omega_limit = state.n * state.omegadot_des * state.delta_t;
    if (std::abs(received->v - state.accepted.v) > v_limit ||
        std::abs(received->omega - state.accepted.omega) > omega_limit) {
        return decision;
    }
    state.accepted = *received;
    decision.applied = *received;
    decision.accepted = true;
    return decision;
}

ErrorBoundConstants error_bounds(const Bounds& bounds, const GateState& gate,
                                 const QuantizerSpec& q_v,
                                 const QuantizerSpec& q_omega) {
    const double gate_v = gate.n * gate.vdot_des * gate.delta_t;
    const double gate_omega = gate.n * gate.omegadot_des * gate.delta_t;
    ErrorBoundConstants consts;
    consts.delta_v_plus = std::max(q_v.max_error(), gate_v);
    consts.delta_omega_plus = std::max(q_omega.max_error(), gate_omega);
    consts.v_hat_plus = bounds.v_max + gate_v;
    consts.omega_hat_plus = bounds.omega_max + gate_omega;
    return consts;
}

std::array<double, 3> formation_error(const RelativeState& s,
                                      const DesiredPose& desired) {
    return {s.x_lf - desired.x_bar, s.y_lf - desired.y_bar,
            wrap_angle(s.gamma - desired.gamma_bar)};
}

Twist control(const RelativeState& s, const DesiredPose& desired,
              const Twist& u_hat_l, const GainConfig& gains) {
    const auto eps = formation_error(s, desired);
    const double sigma = 1.0 / (s.x_lf * s.x_lf + 1.0);
    // w = K * eps + F * u_hat_l
    const double w0 = gains.k1 * eps[0] + u_hat_l.v * std::cos(s.gamma);
    const double w1 = gains.k2 * eps[1] + u_hat_l.v * std::sin(s.gamma);
    const double w2 = gains.k3 * eps[2] + u_hat_l.omega;
    // u_f = sigma * H * w, H = [[1/sigma, x y, y], [0, x, 1]]
    Twist u_f;
    u_f.v = sigma * (w0 / sigma + s.x_lf * s.y_lf * w1 + s.y_lf * w2);
    u_f.omega = sigma * (s.x_lf * w1 + w2);
    return u_f;
}

double lyapunov(const std::array<double, 3>& eps) {
    return 0.5 * (eps[0] * eps[0] + eps[1] * eps[1] + eps[2] * eps[2]);
}

double lyapunov_rate(const RelativeState& s, const std::array<double, 3>& eps,
                     const Twist& u_l_true, const Twist& u_f) {
    const auto ds = relative_derivative(s, u_l_true, u_f);
    return eps[0] * ds[0] + eps[1] * ds[1] + eps[2] * ds[2];
}

std::optional<GainFloor> gain_floor(const RelativeState& s,
                                    const std::array<double, 3>& eps,
                                    const ErrorBoundConstants& consts,
                                    double k3_choice) {
    constexpr double kEpsMin = 1e-9;
    if (std::abs(eps[0]) < kEpsMin || std::abs(eps[1]) < kEpsMin ||
        std::abs(eps[2]) < kEpsMin) {
        return std::nullopt;
    }
    const double x = s.x_lf;
    const double sigma = 1.0 / (x * x + 1.0);
    const double eta = x * sigma;
    GainFloor floor;
    floor.k1_min = 2.0 * consts.delta_v_plus / std::abs(eps[0]);
    floor.k3_min = 2.0 *
                   (consts.delta_omega_plus + eta * x * consts.omega_hat_plus +
                    eta * consts.v_hat_plus) /
                   (sigma * std::abs(eps[2]));
    floor.k2_min = 2.0 *
                   (consts.delta_v_plus + sigma * consts.v_hat_plus +
                    eta * (k3_choice * std::abs(eps[1]) + consts.omega_hat_plus)) /
                   (eta * (x + 1.0) * std::abs(eps[1]));
    return floor;
}

LyapunovCheckResult lyapunov_check(int samples, std::uint64_t seed,
                                   double gain_margin) {
    const Bounds bounds;
    const GateState gate;
    const QuantizerSpec q_v{0.0, bounds.v_max, 8};
    const QuantizerSpec q_omega{-bounds.omega_max, bounds.omega_max, 8};
    const ErrorBoundConstants consts = error_bounds(bounds, gate, q_v, q_omega);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * u01(rng);
    };

    LyapunovCheckResult result;
    result.samples = samples;
    for (int i = 0; i < samples; ++i) {
        RelativeState s;
        s.x_lf = uniform(0.4, 1.25);
        s.y_lf = uniform(-0.3, 0.3);
        s.gamma = uniform(-M_PI / 3.0, M_PI / 3.0);
        // The error region where the printed floors (stated through
        // component magnitudes) apply; see the module notes.
        const std::array<double, 3> eps = {uniform(0.05, 0.5),
                                           uniform(0.05, 0.5),
                                           uniform(0.05, 0.5)};
        Twist u_hat{uniform(-consts.v_hat_plus, consts.v_hat_plus),
                    uniform(-consts.omega_hat_plus, consts.omega_hat_plus)};
        Twist u_true{u_hat.v + uniform(-consts.delta_v_plus, consts.delta_v_plus),
                     u_hat.omega + uniform(-consts.delta_omega_plus,
                                           consts.delta_omega_plus)};

        const auto floor0 = gain_floor(s, eps, consts, 0.0);
        if (!floor0) {
            continue;
        }
        const double k3 = gain_margin * floor0->k3_min;
        const auto floors = gain_floor(s, eps, consts, k3);
        GainConfig gains{gain_margin * floors->k1_min,
                         gain_margin * floors->k2_min, k3};

        const DesiredPose desired{s.x_lf - eps[0], s.y_lf - eps[1],
                                  wrap_angle(s.gamma - eps[2])};
        const Twist u_f = control(s, desired, u_hat, gains);
        const double sigma = 1.0 / (s.x_lf * s.x_lf + 1.0);
        const double eta = s.x_lf * sigma;
        const double phi =
            std::min({gains.k1, gains.k2 * eta * s.x_lf, gains.k3 * sigma});
        const double v = lyapunov(eps);
        const double v_dot = lyapunov_rate(s, eps, u_true, u_f);
        if (v_dot <= -phi * v + 1e-9) {
            ++result.passes;
        } else {
            char buf[512];
            std::snprintf(buf, sizeof(buf),
                          "violation: s=(%.6f,%.6f,%.6f) eps=(%.6f,%.6f,%.6f) "
                          "u_hat=(%.6f,%.6f) u_true=(%.6f,%.6f) "
                          "gains=(%.6f,%.6f,%.6f) Vdot=%.9f bound=%.9f",
                          s.x_lf, s.y_lf, s.gamma, eps[0], eps[1], eps[2],
                          u_hat.v, u_hat.omega, u_true.v, u_true.omega,
                          gains.k1, gains.k2, gains.k3, v_dot, -phi * v);
            result.failures.emplace_back(buf);
        }
    }
    return result;
}

}  // namespace oisac
