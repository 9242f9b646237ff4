#ifndef OISAC_SIM_HPP_
#define OISAC_SIM_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oisac/camera.hpp"
#include "oisac/channel.hpp"
#include "oisac/codec.hpp"
#include "oisac/controller.hpp"
#include "oisac/ekf.hpp"
#include "oisac/geometry.hpp"

namespace oisac {

struct ProfileSegment {
    double duration = 0.0;  // [s]
    Twist twist;
};

struct DesiredScheduleEntry {
    double start = 0.0;  // [s]
    DesiredPose pose;
};

enum class SensingMode { kIdeal, kRaster };
enum class EstimatorKind { kOisac, kEkf };

struct RateConfig {
    double f_cam = 10.0;  // [Hz] camera / gate / control
    double f_v = 20.0;    // [Hz] velocity smoothing
    double f_pub = 20.0;  // [Hz] leader state publishing
};

struct ScenarioConfig {
    std::vector<ProfileSegment> leader_profile;
    RelativeState s0;
    std::vector<DesiredScheduleEntry> desired_schedule;
    SensingMode sensing = SensingMode::kIdeal;
    EstimatorKind estimator = EstimatorKind::kOisac;
    ChannelConfig channel;
    DisplayQueueConfig queue;
    RateConfig rates;
    double duration = 0.0;  // [s]
    std::uint64_t seed = 1;

    Bounds bounds;
    GainConfig gains;
    CameraIntrinsics camera;
    ScreenGeometry screen;
    FovLimits fov;
    QuantizerSpec q_v{0.0, 0.6, 8};
    QuantizerSpec q_omega{-0.2, 0.2, 8};
    int gate_n = 5;
    double gate_delta_t = 0.1;      // [s]
    double vdot_des = 0.5;          // [m/s^2] smoother accel, both robots
    double omegadot_des = 0.2;      // [rad/s^2]
    double pixel_noise_sigma = 0.0; // [px] ideal-sensing noise
    bool pixel_quantize = true;
    EkfNoise ekf_noise = EkfNoise::defaults();
    double ekf_p0 = 0.1;  // initial covariance scale
    ModulationMode modulation = ModulationMode::kFft;
    FrameLayout layout = FrameLayout::standard(ModulationMode::kFft);
    double settle_band = 0.05;      // [m]/[rad] settling detection band
    double steady_fraction = 1.0 / 3.0;  // tail fraction used for steady stats
};

/// One row per camera tick.
struct SimRecord {
    double t = 0.0;
    Pose2D leader;
    Pose2D follower;
    RelativeState s_true;
    RelativeState s_est;
    Twist u_hat;     // leader velocity used by the controller
    Twist u_l_true;  // leader actual twist
    Twist u_f_cmd;   // control output after bounds clipping
    Twist u_f_act;   // smoothed twist at capture time
    bool fresh = false;  // this tick produced a fresh estimate + payload
    std::array<double, 3> eps{};
    double lyapunov_v = 0.0;
};

struct Metrics {
    std::array<double, 3> steady_band{};     // max |eps_i| over the tail window
    std::array<double, 3> rmse{};
    std::array<double, 3> settling_time{};   // -1 when never settled
    std::optional<double> braking_distance;  // [m]
    long frames_total = 0;
    long frames_fresh = 0;
    long frames_missed = 0;   // not visible / dropped / undecodable
    long frames_gated = 0;    // delivered but rejected by the gate
    double gate_bound_match = 0.0;  // fraction of frames with |u_hat - u_l|
                                    // inside the error-bound constants
    bool visibility_lost = false;
    double visibility_lost_t = -1.0;
};

struct RunResult {
    std::vector<SimRecord> records;
    Metrics metrics;
};

/// Fixed-step (1 ms) closed-loop simulation of one scenario.
/// Throws std::invalid_argument on malformed configs.
RunResult run(const ScenarioConfig& cfg);

/// Constant-twist circular-path scenario (90 s).
ScenarioConfig preset_circular();
/// Cruise at v_level for 30 s, then brake at the maximum deceleration.
ScenarioConfig preset_braking(double v_level);
/// Straight, semicircular, straight segments with a desired-pose switch.
ScenarioConfig preset_ushape();

struct BrakingRow {
    double v_level = 0.0;
    EstimatorKind estimator = EstimatorKind::kOisac;
    double mean_distance = 0.0;
    std::vector<double> distances;
};

/// Seeded braking sweep: |levels| x 2 estimators x reps runs.
std::vector<BrakingRow> braking_experiment(const std::vector<double>& levels,
                                           int reps, std::uint64_t master_seed,
                                           SensingMode sensing = SensingMode::kIdeal);

/// Deterministic seed fan-out for per-subsystem RNG streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

std::string records_to_csv(const std::vector<SimRecord>& records);
std::string metrics_to_text(const Metrics& metrics);
std::string braking_table_to_csv(const std::vector<BrakingRow>& rows);
std::string trajectory_svg(const std::vector<SimRecord>& records);
std::string errors_svg(const std::vector<SimRecord>& records);

/// Writes records.csv, metrics.txt and the two SVG plots into `dir`.
/// Throws std::runtime_error with the path on I/O failure.
void emit(const std::vector<SimRecord>& records, const Metrics& metrics,
          const std::string& dir);

/// JSON (de)serialization of the run config; missing keys keep defaults.
ScenarioConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ScenarioConfig& cfg);

}  // namespace oisac

#endif  // OISAC_SIM_HPP_
