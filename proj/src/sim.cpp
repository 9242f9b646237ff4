#include "oisac/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oisac {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t x = master + 0x9E3779B97F4A7C15ull * (stream + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

namespace {

constexpr int kConsecutiveMissLimit = 10;  // camera ticks before giving up

int period_ms(double rate_hz, const char* name) {
    if (rate_hz <= 0.0) {
        throw std::invalid_argument(std::string(name) + " rate must be positive");
    }
    const double period = 1000.0 / rate_hz;
    const int rounded = int(std::lround(period));
    if (rounded < 1 || std::abs(period - rounded) > 1e-9) {
        throw std::invalid_argument(std::string(name) +
                                    " rate must divide the 1 kHz base clock");
    }
    return rounded;
}

Twist clip_to_bounds(const Twist& u, const Bounds& bounds) {
    return {std::clamp(u.v, -bounds.v_max, bounds.v_max),
            std::clamp(u.omega, -bounds.omega_max, bounds.omega_max)};
}

const DesiredPose& desired_at(const std::vector<DesiredScheduleEntry>& schedule,
                              double t) {
    size_t active = 0;
    for (size_t i = 0; i < schedule.size(); ++i) {
        if (schedule[i].start <= t + 1e-12) {
            active = i;
        }
    }
    return schedule[active].pose;
}

Twist profile_at(const std::vector<ProfileSegment>& profile, double t) {
    double start = 0.0;
    for (const auto& seg : profile) {
        if (t < start + seg.duration) {
            return seg.twist;
        }
        start += seg.duration;
    }
    return {0.0, 0.0};  // hold still past the end of the profile
}

void validate(const ScenarioConfig& cfg) {
    for (const auto& seg : cfg.leader_profile) {
        if (seg.duration <= 0.0) {
            throw std::invalid_argument("profile segment durations must be positive");
        }
    }
    if (cfg.desired_schedule.empty()) {
        throw std::invalid_argument("desired schedule must not be empty");
    }
    for (const auto& entry : cfg.desired_schedule) {
        const RelativeState pose{entry.pose.x_bar, entry.pose.y_bar,
                                 entry.pose.gamma_bar};
        if (check_visibility(pose, cfg.fov, cfg.screen) != Visibility::kVisible) {
            throw std::invalid_argument("desired pose lies outside the field of view");
        }
    }
    if (cfg.duration > 0.0 &&
        check_visibility(cfg.s0, cfg.fov, cfg.screen) != Visibility::kVisible) {
        throw std::invalid_argument("initial relative state is not visible");
    }
    if (cfg.duration < 0.0) {
        throw std::invalid_argument("duration must be non-negative");
    }
}

struct BrakingTracker {
    bool leader_moved = false;
    bool leader_stopped = false;
    bool follower_stopped = false;
    double follower_sign_at_stop = 0.0;
    double distance = 0.0;

    void step(double leader_v, double follower_v, double dt) {
        if (leader_v > 1e-12) {
            leader_moved = true;
        }
        if (!leader_stopped) {
            if (leader_moved && leader_v == 0.0) {
                leader_stopped = true;
                follower_sign_at_stop = follower_v;
                if (follower_v <= 0.0) {
                    follower_stopped = true;
                }
            }
            return;
        }
        if (follower_stopped) {
            return;
        }
        distance += std::abs(follower_v) * dt;
        if (follower_v == 0.0 || follower_v * follower_sign_at_stop < 0.0) {
            follower_stopped = true;
        }
    }

    std::optional<double> result() const {
        if (!leader_moved) {
            return 0.0;
        }
        if (!leader_stopped) {
            return std::nullopt;  // leader never braked to a stop
        }
        // A follower still rolling at the horizon yields the truncated path
        // length, a lower bound on its braking distance.
        return distance;
    }
};

void finalize_metrics(const ScenarioConfig& cfg, RunResult& result) {
    Metrics& m = result.metrics;
    const auto& records = result.records;
    m.frames_total = long(records.size());
    if (records.empty()) {
        return;
    }
    const double t_end = records.back().t;
    const double steady_from = t_end * (1.0 - cfg.steady_fraction);
    std::array<double, 3> sq_sum{};
    std::array<double, 3> last_violation{-1.0, -1.0, -1.0};
    for (const auto& rec : records) {
        for (int i = 0; i < 3; ++i) {
            const double e = std::abs(rec.eps[i]);
            sq_sum[i] += e * e;
            if (rec.t >= steady_from) {
                m.steady_band[i] = std::max(m.steady_band[i], e);
            }
            if (e > cfg.settle_band) {
                last_violation[i] = rec.t;
            }
        }
        if (rec.fresh) {
            ++m.frames_fresh;
        }
    }
    m.frames_missed = m.frames_total - m.frames_fresh;
    for (int i = 0; i < 3; ++i) {
        m.rmse[i] = std::sqrt(sq_sum[i] / double(records.size()));
        if (last_violation[i] >= t_end) {
            m.settling_time[i] = -1.0;
        } else {
            // First time after the last excursion out of the band.
            double settle = 0.0;
            for (const auto& rec : records) {
                if (rec.t > last_violation[i]) {
                    settle = rec.t;
                    break;
                }
            }
            m.settling_time[i] = settle;
        }
    }

    const auto consts =
        error_bounds(cfg.bounds,
                     GateState{{}, cfg.gate_n, cfg.gate_delta_t, cfg.vdot_des,
                               cfg.omegadot_des},
                     cfg.q_v, cfg.q_omega);
    long matched = 0;
    for (const auto& rec : records) {
        if (std::abs(rec.u_hat.v - rec.u_l_true.v) <= consts.delta_v_plus &&
            std::abs(rec.u_hat.omega - rec.u_l_true.omega) <=
                consts.delta_omega_plus) {
            ++matched;
        }
    }
    m.gate_bound_match = double(matched) / double(records.size());
}

}  // namespace

RunResult run(const ScenarioConfig& cfg) {
    validate(cfg);
    RunResult result;
    const long duration_ms = std::lround(cfg.duration * 1000.0);
    if (duration_ms <= 0) {
        return result;
    }
    const int pub_ms = period_ms(cfg.rates.f_pub, "publish");
    const int cam_ms = period_ms(cfg.rates.f_cam, "camera");
    const int vel_ms = period_ms(cfg.rates.f_v, "velocity");

    std::mt19937_64 channel_rng(derive_seed(cfg.seed, 1));
    std::mt19937_64 pixel_rng(derive_seed(cfg.seed, 2));

    // World state: follower starts at the origin, leader placed to realize s0.
    Pose2D follower{};
    Pose2D leader{cfg.s0.x_lf, cfg.s0.y_lf, cfg.s0.gamma};

    SmootherState leader_smoother{{}, cfg.vdot_des, cfg.omegadot_des,
                                  cfg.rates.f_v};
    SmootherState follower_smoother{{}, cfg.vdot_des, cfg.omegadot_des,
                                    cfg.rates.f_v};
    GateState gate{{}, cfg.gate_n, cfg.gate_delta_t, cfg.vdot_des,
                   cfg.omegadot_des};
    EkfState ekf = ekf_init(cfg.s0, cfg.ekf_p0);
    DisplayPipeline pipeline(cfg.queue);
    const FrameLayout& layout = cfg.layout;

    RelativeState s_est_held = cfg.s0;
    Twist follower_target{};
    double follower_accel_mag = 0.0;
    std::uint16_t seq = 0;
    int consecutive_misses = 0;
    BrakingTracker braking;
    bool ekf_started = false;

    for (long tick = 0; tick < duration_ms; ++tick) {
        const double t = double(tick) / 1000.0;

        if (tick % pub_ms == 0) {
            VelocityPayload payload;
            payload.code_v = std::uint8_t(quantize(leader_smoother.current.v, cfg.q_v));
            payload.code_omega =
                std::uint8_t(quantize(leader_smoother.current.omega, cfg.q_omega));
            payload.seq = seq++;
            payload.timestamp_ms = std::uint32_t(tick);
            pipeline.push(t, payload);
        }

        if (tick % cam_ms == 0) {
            const RelativeState s_true = relative_state(leader, follower);
            const auto displayed = pipeline.displayed(t);
            const Visibility vis = check_visibility(s_true, cfg.fov, cfg.screen);

            bool fresh = false;
            std::optional<RelativeState> pose_est;
            std::optional<Twist> received;
            if (vis == Visibility::kVisible && displayed) {
                if (cfg.sensing == SensingMode::kIdeal) {
                    const Observation obs =
                        observe(s_true, cfg.camera, cfg.screen, cfg.fov,
                                cfg.pixel_quantize, cfg.pixel_noise_sigma,
                                pixel_rng);
                    if (obs.ok()) {
                        pose_est = estimate_pose(obs.pixels, cfg.camera, cfg.screen);
                    }
                    if (pose_est &&
                        apply_channel_packet(s_true, cfg.channel, channel_rng)) {
                        received = Twist{dequantize(displayed->code_v, cfg.q_v),
                                         dequantize(displayed->code_omega,
                                                    cfg.q_omega)};
                    }
                } else {
                    const auto frame =
                        render_frame(*displayed, layout, cfg.modulation);
                    const auto points = feature_points_camera(s_true, cfg.screen);
                    if (frame && points) {
                        std::array<PixelPoint, 4> projected;
                        bool in_front = true;
                        for (int i = 0; i < 4 && in_front; ++i) {
                            const auto px = project((*points)[i], cfg.camera);
                            if (!px) {
                                in_front = false;
                            } else {
                                projected[i] = *px;
                            }
                        }
                        if (in_front) {
                            const auto h_cam = estimate_homography(
                                layout.marker_centers(), projected);
                            if (h_cam) {
                                FrameRaster captured =
                                    rectify(*frame, *h_cam, cfg.camera.width,
                                            cfg.camera.height, 180);
                                captured = apply_channel_raster(
                                    captured, follower_accel_mag, cfg.channel,
                                    channel_rng);
                                const DecodeResult dec =
                                    decode_frame(captured, layout, cfg.modulation);
                                if (dec.ok) {
                                    pose_est = estimate_pose(dec.markers,
                                                             cfg.camera,
                                                             cfg.screen);
                                    if (pose_est) {
                                        received = Twist{
                                            dequantize(dec.payload.code_v, cfg.q_v),
                                            dequantize(dec.payload.code_omega,
                                                       cfg.q_omega)};
                                    }
                                }
                            }
                        }
                    }
                }
            }
            // A tick is fresh only when both the pose and the payload made it;
            // otherwise the previous estimate and velocity are held.
            fresh = pose_est.has_value() && received.has_value();
            if (fresh) {
                s_est_held = *pose_est;
                consecutive_misses = 0;
            } else {
                received.reset();
                ++consecutive_misses;
            }

            Twist u_hat;
            if (cfg.estimator == EstimatorKind::kOisac) {
                const GateDecision decision = gate_velocity(received, gate);
                u_hat = decision.applied;
                if (fresh && !decision.accepted) {
                    ++result.metrics.frames_gated;
                }
            } else {
                if (ekf_started) {
                    ekf_predict(ekf, follower_smoother.current,
                                double(cam_ms) / 1000.0, cfg.ekf_noise);
                }
                ekf_started = true;
                if (fresh) {
                    ekf_update(ekf, *pose_est, cfg.ekf_noise);
                }
                u_hat = ekf.leader_velocity();
            }
            const RelativeState& s_ctrl =
                (cfg.estimator == EstimatorKind::kEkf) ? ekf.pose() : s_est_held;

            const DesiredPose& desired = desired_at(cfg.desired_schedule, t);
            follower_target =
                clip_to_bounds(control(s_ctrl, desired, u_hat, cfg.gains),
                               cfg.bounds);

            SimRecord rec;
            rec.t = t;
            rec.leader = leader;
            rec.follower = follower;
            rec.s_true = s_true;
            rec.s_est = s_ctrl;
            rec.u_hat = u_hat;
            rec.u_l_true = leader_smoother.current;
            rec.u_f_cmd = follower_target;
            rec.u_f_act = follower_smoother.current;
            rec.fresh = fresh;
            rec.eps = formation_error(s_true, desired);
            rec.lyapunov_v = lyapunov(rec.eps);
            result.records.push_back(rec);

            if (consecutive_misses >= kConsecutiveMissLimit &&
                vis != Visibility::kVisible) {
                result.metrics.visibility_lost = true;
                result.metrics.visibility_lost_t = t;
                break;
            }
        }

        if (tick % vel_ms == 0) {
            const Twist leader_target =
                clip_to_bounds(profile_at(cfg.leader_profile, t), cfg.bounds);
            smooth(leader_target, leader_smoother);
            const double prev_v = follower_smoother.current.v;
            smooth(follower_target, follower_smoother);
            follower_accel_mag =
                std::abs(follower_smoother.current.v - prev_v) * cfg.rates.f_v;
        }

        leader = integrate_unicycle(leader, leader_smoother.current, 0.001);
        follower = integrate_unicycle(follower, follower_smoother.current, 0.001);
        braking.step(leader_smoother.current.v, follower_smoother.current.v,
                     0.001);
    }

    result.metrics.braking_distance = braking.result();
    finalize_metrics(cfg, result);
    return result;
}

ScenarioConfig preset_circular() {
    ScenarioConfig cfg;
    // Leader turn rate chosen so the commanded formation is an invariant
    // circular orbit: x_bar * omega_l = v_l * sin(gamma_bar).
    cfg.leader_profile = {{90.0, {0.125, 0.125 * 0.5 / 0.75}}};
    cfg.s0 = {1.25, -0.3, 0.0};
    cfg.desired_schedule = {{0.0, {0.75, 0.0, M_PI / 6.0}}};
    cfg.duration = 90.0;
    return cfg;
}

ScenarioConfig preset_braking(double v_level) {
    ScenarioConfig cfg;
    const double brake_tail = v_level / cfg.bounds.vdot_max + 10.0;
    cfg.leader_profile = {{30.0, {v_level, 0.0}}, {brake_tail, {0.0, 0.0}}};
    cfg.s0 = {0.75, 0.0, 0.0};
    cfg.desired_schedule = {{0.0, {0.75, 0.0, 0.0}}};
    cfg.duration = 30.0 + brake_tail;
    return cfg;
}

ScenarioConfig preset_ushape() {
    ScenarioConfig cfg;
    const double semicircle = M_PI / (M_PI / 30.0);  // half turn at pi/30 rad/s
    cfg.leader_profile = {{15.0, {0.3, 0.0}},
                          {semicircle, {0.1, M_PI / 30.0}},
                          {15.0, {0.3, 0.0}}};
    cfg.s0 = {0.9, 0.1, 0.31};
    cfg.desired_schedule = {{0.0, {0.6, 0.0, 0.0}},
                            {15.0, {0.6, 0.15, M_PI / 6.0}},
                            {15.0 + semicircle, {0.6, 0.0, 0.0}}};
    cfg.duration = 30.0 + semicircle;
    return cfg;
}

std::vector<BrakingRow> braking_experiment(const std::vector<double>& levels,
                                           int reps, std::uint64_t master_seed,
                                           SensingMode sensing) {
    std::vector<BrakingRow> rows;
    for (size_t li = 0; li < levels.size(); ++li) {
        for (const auto estimator :
             {EstimatorKind::kOisac, EstimatorKind::kEkf}) {
            BrakingRow row;
            row.v_level = levels[li];
            row.estimator = estimator;
            for (int rep = 0; rep < reps; ++rep) {
                ScenarioConfig cfg = preset_braking(levels[li]);
                cfg.estimator = estimator;
                cfg.sensing = sensing;
                cfg.seed = derive_seed(
                    master_seed,
                    (li * 2 + (estimator == EstimatorKind::kEkf)) * 1000 + rep);
                const RunResult result = run(cfg);
                row.distances.push_back(
                    result.metrics.braking_distance.value_or(0.0));
            }
            double sum = 0.0;
            for (const double d : row.distances) {
                sum += d;
            }
            row.mean_distance = sum / double(row.distances.size());
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace oisac
