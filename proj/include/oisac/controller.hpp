#ifndef OISAC_CONTROLLER_HPP_
#define OISAC_CONTROLLER_HPP_

#include <array>
#include <optional>

#include "oisac/codec.hpp"
#include "oisac/geometry.hpp"

namespace oisac {

/// Formation-control gains K = diag(k1, k2, k3), all positive.
struct GainConfig {
    double k1 = 0.5;
    double k2 = 0.75;
    double k3 = 0.5;
};

/// Acceleration-limited velocity smoother state (one robot).
struct SmootherState {
    Twist current;
    double vdot_des = 0.5;      // [m/s^2]
    double omegadot_des = 0.2;  // [rad/s^2]
    double f_v = 20.0;          // [Hz] velocity topic rate; delta_t = 1/f_v
};

/// Moves `state.current` one step toward `target`, each component limited to
/// its desired acceleration times 1/f_v. Returns the new current twist.
Twist smooth(const Twist& target, SmootherState& state);

/// Plausibility gate on received leader velocities.
struct GateState {
    Twist accepted;             // last accepted velocity
    int n = 5;                  // bound multiplier N
    double delta_t = 0.1;       // [s] sampling interval
    double vdot_des = 0.5;      // [m/s^2]
    double omegadot_des = 0.2;  // [rad/s^2]
};

struct GateDecision {
    Twist applied;
    bool accepted = false;
};

/// Accepts the new velocity only when both components moved by at most
/// N * a_des * delta_t since the last accepted value; otherwise (or when the
/// packet is missing) the previous value is reapplied.
GateDecision gate_velocity(const std::optional<Twist>& received,
                           GateState& state);

/// Worst-case bounds on the received-velocity error and magnitude implied by
/// the quantizers, the gate, and the leader's limits.
struct ErrorBoundConstants {
    double delta_v_plus = 0.0;
    double delta_omega_plus = 0.0;
    double v_hat_plus = 0.0;
    double omega_hat_plus = 0.0;
};

ErrorBoundConstants error_bounds(const Bounds& bounds, const GateState& gate,
                                 const QuantizerSpec& q_v,
                                 const QuantizerSpec& q_omega);

struct DesiredPose {
    double x_bar = 0.75;
    double y_bar = 0.0;
    double gamma_bar = 0.0;
};

/// Formation error epsilon = s - s_bar with the gamma component wrapped.
std::array<double, 3> formation_error(const RelativeState& s,
                                      const DesiredPose& desired);

/// Formation control law u_f = sigma * H * (K * eps + F * u_hat_l) with
/// sigma = 1 / (x_lf^2 + 1). Output is unclipped; the caller bounds and
/// smooths it.
Twist control(const RelativeState& s, const DesiredPose& desired,
              const Twist& u_hat_l, const GainConfig& gains);

/// V = eps' eps / 2.
double lyapunov(const std::array<double, 3>& eps);

/// dV/dt along the true kinematics: eps' * (F(gamma) u_l + G(s) u_f).
double lyapunov_rate(const RelativeState& s, const std::array<double, 3>& eps,
                     const Twist& u_l_true, const Twist& u_f);

/// State-dependent lower gain bounds that guarantee dV/dt <= -phi V under
/// the error-bound constants. k2's bound depends on the k3 actually used.
/// Empty when any |eps_i| < 1e-9.
struct GainFloor {
    double k1_min = 0.0;
    double k2_min = 0.0;
    double k3_min = 0.0;
};

std::optional<GainFloor> gain_floor(const RelativeState& s,
                                    const std::array<double, 3>& eps,
                                    const ErrorBoundConstants& consts,
                                    double k3_choice);

/// Monte-Carlo check of the guaranteed-decay property: random states and
/// disturbances inside the error bounds, gains at `gain_margin` times the
/// floors, asserting dV/dt <= -phi V + 1e-9 with
/// phi = min(k1, k2 eta x, k3 sigma). Violations are logged verbatim.
struct LyapunovCheckResult {
    int samples = 0;
    int passes = 0;
    std::vector<std::string> failures;

    double pass_rate() const {
        return samples > 0 ? double(passes) / samples : 0.0;
    }
};

LyapunovCheckResult lyapunov_check(int samples, std::uint64_t seed,
                                   double gain_margin = 1.05);

}  // namespace oisac

#endif  // OISAC_CONTROLLER_HPP_
