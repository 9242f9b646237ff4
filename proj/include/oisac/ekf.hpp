#ifndef OISAC_EKF_HPP_
#define OISAC_EKF_HPP_

#include <Eigen/Dense>

#include "oisac/geometry.hpp"

namespace oisac {

/// Benchmark estimator: reconstructs the leader's velocity from relative-pose
/// observations alone, with a constant-velocity leader process model.
/// State: (x_lf, y_lf, gamma, v_l, omega_l).
struct EkfNoise {
    Eigen::Matrix<double, 5, 1> q_diag;
    Eigen::Vector3d r_diag;

    static EkfNoise defaults() {
        EkfNoise noise;
        noise.q_diag << 1e-6, 1e-6, 1e-6, 1e-3, 1e-3;
        noise.r_diag << 1e-4, 1e-4, 4e-4;
        return noise;
    }
};

struct EkfState {
    Eigen::Matrix<double, 5, 1> mean = Eigen::Matrix<double, 5, 1>::Zero();
    Eigen::Matrix<double, 5, 5> cov = Eigen::Matrix<double, 5, 5>::Zero();

    RelativeState pose() const { return {mean(0), mean(1), mean(2)}; }
    Twist leader_velocity() const { return {mean(3), mean(4)}; }
};

EkfState ekf_init(const RelativeState& s0, double p0 = 0.1);

/// Propagates mean and covariance by dt under the follower input u_f.
void ekf_predict(EkfState& state, const Twist& u_f, double dt,
                 const EkfNoise& noise);

/// Joseph-form measurement update with z = estimated relative pose.
/// Returns false (state untouched) when the innovation covariance is not
/// positive definite.
bool ekf_update(EkfState& state, const RelativeState& z, const EkfNoise& noise);

}  // namespace oisac

#endif  // OISAC_EKF_HPP_
