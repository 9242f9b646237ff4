#include <json.hpp>

#include "oisac/sim.hpp"

namespace oisac {

using json = nlohmann::json;

namespace {

json twist_to_json(const Twist& u) { return json{{"v", u.v}, {"omega", u.omega}}; }

Twist twist_from_json(const json& j, const Twist& fallback = {}) {
    Twist u = fallback;
    u.v = j.value("v", u.v);
    u.omega = j.value("omega", u.omega);
    return u;
}

json curve_to_json(const std::vector<std::pair<double, double>>& curve) {
    json arr = json::array();
    for (const auto& [x, p] : curve) {
        arr.push_back(json::array({x, p}));
    }
    return arr;
}

std::vector<std::pair<double, double>> curve_from_json(const json& arr) {
    std::vector<std::pair<double, double>> curve;
    for (const auto& item : arr) {
        curve.emplace_back(item.at(0).get<double>(), item.at(1).get<double>());
    }
    return curve;
}

}  // namespace

std::string config_to_json_text(const ScenarioConfig& cfg) {
    json j;
    j["duration_s"] = cfg.duration;
    j["seed"] = cfg.seed;
    j["sensing"] = cfg.sensing == SensingMode::kIdeal ? "ideal" : "raster";
    j["estimator"] = cfg.estimator == EstimatorKind::kOisac ? "oisac" : "ekf";
    j["modulation"] = cfg.modulation == ModulationMode::kFft ? "fft" : "direct";
    j["rates"] = {{"f_cam", cfg.rates.f_cam},
                  {"f_v", cfg.rates.f_v},
                  {"f_pub", cfg.rates.f_pub}};
    j["s0"] = {{"x", cfg.s0.x_lf}, {"y", cfg.s0.y_lf}, {"gamma", cfg.s0.gamma}};
    j["leader_profile"] = json::array();
    for (const auto& seg : cfg.leader_profile) {
        j["leader_profile"].push_back(
            {{"duration", seg.duration}, {"twist", twist_to_json(seg.twist)}});
    }
    j["desired_schedule"] = json::array();
    for (const auto& entry : cfg.desired_schedule) {
        j["desired_schedule"].push_back({{"start", entry.start},
                                         {"x", entry.pose.x_bar},
                                         {"y", entry.pose.y_bar},
                                         {"gamma", entry.pose.gamma_bar}});
    }
    j["bounds"] = {{"v_max", cfg.bounds.v_max},
                   {"omega_max", cfg.bounds.omega_max},
                   {"vdot_max", cfg.bounds.vdot_max},
                   {"omegadot_max", cfg.bounds.omegadot_max}};
    j["gains"] = {{"k1", cfg.gains.k1}, {"k2", cfg.gains.k2}, {"k3", cfg.gains.k3}};
    j["camera"] = {{"f_m", cfg.camera.f_m},   {"f_n", cfg.camera.f_n},
                   {"m_0", cfg.camera.m_0},   {"n_0", cfg.camera.n_0},
                   {"width", cfg.camera.width}, {"height", cfg.camera.height}};
    j["screen"] = {{"L1", cfg.screen.L1},
                   {"L2", cfg.screen.L2},
                   {"d_l", cfg.screen.d_l},
                   {"d_f", cfg.screen.d_f},
                   {"mu", cfg.screen.mu}};
    j["fov"] = {{"alpha_max", cfg.fov.alpha_max},
                {"d_max", cfg.fov.d_max},
                {"gamma_max", cfg.fov.gamma_max}};
    j["quantizer_v"] = {{"lo", cfg.q_v.lo}, {"hi", cfg.q_v.hi}, {"bits", cfg.q_v.n_bits}};
    j["quantizer_omega"] = {{"lo", cfg.q_omega.lo},
                            {"hi", cfg.q_omega.hi},
                            {"bits", cfg.q_omega.n_bits}};
    j["gate"] = {{"n", cfg.gate_n}, {"delta_t", cfg.gate_delta_t}};
    j["smoother"] = {{"vdot_des", cfg.vdot_des}, {"omegadot_des", cfg.omegadot_des}};
    j["channel"] = {{"noise_sigma", cfg.channel.noise_sigma},
                    {"blur_gain", cfg.channel.blur_gain},
                    {"plr_distance_cm", curve_to_json(cfg.channel.plr.distance_cm)},
                    {"plr_angle_deg", curve_to_json(cfg.channel.plr.angle_deg)}};
    j["queue"] = {{"f_pub", cfg.queue.f_pub},
                  {"t_tx", cfg.queue.t_tx},
                  {"queue_size", cfg.queue.queue_size},
                  {"policy",
                   cfg.queue.policy == DisplayQueueConfig::Policy::kRejectNewest
                       ? "reject-newest"
                       : "drop-oldest"}};
    j["layout"] = {{"width", cfg.layout.width},
                   {"height", cfg.layout.height},
                   {"margin", cfg.layout.margin},
                   {"marker_size", cfg.layout.marker_size},
                   {"stripe_period", cfg.layout.stripe_period},
                   {"stripe_thickness", cfg.layout.stripe_thickness},
                   {"grid_rows", cfg.layout.grid_rows},
                   {"grid_cols", cfg.layout.grid_cols},
                   {"cell_size", cfg.layout.cell_size}};
    j["pixel_noise_sigma"] = cfg.pixel_noise_sigma;
    j["pixel_quantize"] = cfg.pixel_quantize;
    j["settle_band"] = cfg.settle_band;
    j["steady_fraction"] = cfg.steady_fraction;
    std::vector<double> q(cfg.ekf_noise.q_diag.data(), cfg.ekf_noise.q_diag.data() + 5);
    std::vector<double> r(cfg.ekf_noise.r_diag.data(), cfg.ekf_noise.r_diag.data() + 3);
    j["ekf"] = {{"q_diag", q}, {"r_diag", r}, {"p0", cfg.ekf_p0}};
    return j.dump(2) + "\n";
}

ScenarioConfig config_from_json_text(const std::string& text) {
    const json j = json::parse(text);
    ScenarioConfig cfg;
    cfg.duration = j.value("duration_s", cfg.duration);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("sensing")) {
        cfg.sensing = j["sensing"] == "raster" ? SensingMode::kRaster
                                               : SensingMode::kIdeal;
    }
    if (j.contains("estimator")) {
        cfg.estimator = j["estimator"] == "ekf" ? EstimatorKind::kEkf
                                                : EstimatorKind::kOisac;
    }
    if (j.contains("modulation")) {
        cfg.modulation = j["modulation"] == "direct" ? ModulationMode::kDirect
                                                     : ModulationMode::kFft;
    }
    cfg.layout = FrameLayout::standard(cfg.modulation);
    if (j.contains("layout")) {
        const auto& jl = j["layout"];
        cfg.layout.width = jl.value("width", cfg.layout.width);
        cfg.layout.height = jl.value("height", cfg.layout.height);
        cfg.layout.margin = jl.value("margin", cfg.layout.margin);
        cfg.layout.marker_size = jl.value("marker_size", cfg.layout.marker_size);
        cfg.layout.stripe_period =
            jl.value("stripe_period", cfg.layout.stripe_period);
        cfg.layout.stripe_thickness =
            jl.value("stripe_thickness", cfg.layout.stripe_thickness);
        cfg.layout.grid_rows = jl.value("grid_rows", cfg.layout.grid_rows);
        cfg.layout.grid_cols = jl.value("grid_cols", cfg.layout.grid_cols);
        cfg.layout.cell_size = jl.value("cell_size", cfg.layout.cell_size);
    }
    if (j.contains("rates")) {
        cfg.rates.f_cam = j["rates"].value("f_cam", cfg.rates.f_cam);
        cfg.rates.f_v = j["rates"].value("f_v", cfg.rates.f_v);
        cfg.rates.f_pub = j["rates"].value("f_pub", cfg.rates.f_pub);
    }
    if (j.contains("s0")) {
        cfg.s0.x_lf = j["s0"].value("x", cfg.s0.x_lf);
        cfg.s0.y_lf = j["s0"].value("y", cfg.s0.y_lf);
        cfg.s0.gamma = j["s0"].value("gamma", cfg.s0.gamma);
    }
    if (j.contains("leader_profile")) {
        cfg.leader_profile.clear();
        for (const auto& seg : j["leader_profile"]) {
            cfg.leader_profile.push_back(
                {seg.at("duration").get<double>(),
                 twist_from_json(seg.value("twist", json::object()))});
        }
    }
    if (j.contains("desired_schedule")) {
        cfg.desired_schedule.clear();
        for (const auto& entry : j["desired_schedule"]) {
            cfg.desired_schedule.push_back(
                {entry.value("start", 0.0),
                 DesiredPose{entry.at("x").get<double>(),
                             entry.at("y").get<double>(),
                             entry.at("gamma").get<double>()}});
        }
    }
    if (j.contains("bounds")) {
        cfg.bounds.v_max = j["bounds"].value("v_max", cfg.bounds.v_max);
        cfg.bounds.omega_max = j["bounds"].value("omega_max", cfg.bounds.omega_max);
        cfg.bounds.vdot_max = j["bounds"].value("vdot_max", cfg.bounds.vdot_max);
        cfg.bounds.omegadot_max =
            j["bounds"].value("omegadot_max", cfg.bounds.omegadot_max);
    }
    if (j.contains("gains")) {
        cfg.gains.k1 = j["gains"].value("k1", cfg.gains.k1);
        cfg.gains.k2 = j["gains"].value("k2", cfg.gains.k2);
        cfg.gains.k3 = j["gains"].value("k3", cfg.gains.k3);
    }
    if (j.contains("camera")) {
        cfg.camera.f_m = j["camera"].value("f_m", cfg.camera.f_m);
        cfg.camera.f_n = j["camera"].value("f_n", cfg.camera.f_n);
        cfg.camera.m_0 = j["camera"].value("m_0", cfg.camera.m_0);
        cfg.camera.n_0 = j["camera"].value("n_0", cfg.camera.n_0);
        cfg.camera.width = j["camera"].value("width", cfg.camera.width);
        cfg.camera.height = j["camera"].value("height", cfg.camera.height);
    }
    if (j.contains("screen")) {
        cfg.screen.L1 = j["screen"].value("L1", cfg.screen.L1);
        cfg.screen.L2 = j["screen"].value("L2", cfg.screen.L2);
        cfg.screen.d_l = j["screen"].value("d_l", cfg.screen.d_l);
        cfg.screen.d_f = j["screen"].value("d_f", cfg.screen.d_f);
        cfg.screen.mu = j["screen"].value("mu", cfg.screen.mu);
    }
    if (j.contains("fov")) {
        cfg.fov.alpha_max = j["fov"].value("alpha_max", cfg.fov.alpha_max);
        cfg.fov.d_max = j["fov"].value("d_max", cfg.fov.d_max);
        cfg.fov.gamma_max = j["fov"].value("gamma_max", cfg.fov.gamma_max);
    }
    if (j.contains("quantizer_v")) {
        cfg.q_v.lo = j["quantizer_v"].value("lo", cfg.q_v.lo);
        cfg.q_v.hi = j["quantizer_v"].value("hi", cfg.q_v.hi);
        cfg.q_v.n_bits = j["quantizer_v"].value("bits", cfg.q_v.n_bits);
    }
    if (j.contains("quantizer_omega")) {
        cfg.q_omega.lo = j["quantizer_omega"].value("lo", cfg.q_omega.lo);
        cfg.q_omega.hi = j["quantizer_omega"].value("hi", cfg.q_omega.hi);
        cfg.q_omega.n_bits = j["quantizer_omega"].value("bits", cfg.q_omega.n_bits);
    }
    if (j.contains("gate")) {
        cfg.gate_n = j["gate"].value("n", cfg.gate_n);
        cfg.gate_delta_t = j["gate"].value("delta_t", cfg.gate_delta_t);
    }
    if (j.contains("smoother")) {
        cfg.vdot_des = j["smoother"].value("vdot_des", cfg.vdot_des);
        cfg.omegadot_des = j["smoother"].value("omegadot_des", cfg.omegadot_des);
    }
    if (j.contains("channel")) {
        cfg.channel.noise_sigma =
            j["channel"].value("noise_sigma", cfg.channel.noise_sigma);
        cfg.channel.blur_gain =
            j["channel"].value("blur_gain", cfg.channel.blur_gain);
        if (j["channel"].contains("plr_distance_cm")) {
            cfg.channel.plr.distance_cm =
                curve_from_json(j["channel"]["plr_distance_cm"]);
        }
        if (j["channel"].contains("plr_angle_deg")) {
            cfg.channel.plr.angle_deg =
                curve_from_json(j["channel"]["plr_angle_deg"]);
        }
    }
    if (j.contains("queue")) {
        cfg.queue.f_pub = j["queue"].value("f_pub", cfg.queue.f_pub);
        cfg.queue.t_tx = j["queue"].value("t_tx", cfg.queue.t_tx);
        cfg.queue.queue_size = j["queue"].value("queue_size", cfg.queue.queue_size);
        if (j["queue"].value("policy", "reject-newest") == std::string("drop-oldest")) {
            cfg.queue.policy = DisplayQueueConfig::Policy::kDropOldest;
        }
    }
    cfg.pixel_noise_sigma = j.value("pixel_noise_sigma", cfg.pixel_noise_sigma);
    cfg.pixel_quantize = j.value("pixel_quantize", cfg.pixel_quantize);
    cfg.settle_band = j.value("settle_band", cfg.settle_band);
    cfg.steady_fraction = j.value("steady_fraction", cfg.steady_fraction);
    if (j.contains("ekf")) {
        if (j["ekf"].contains("q_diag")) {
            const auto q = j["ekf"]["q_diag"].get<std::vector<double>>();
            for (size_t i = 0; i < q.size() && i < 5; ++i) {
                cfg.ekf_noise.q_diag(long(i)) = q[i];
            }
        }
        cfg.ekf_p0 = j["ekf"].value("p0", cfg.ekf_p0);
        if (j["ekf"].contains("r_diag")) {
            const auto r = j["ekf"]["r_diag"].get<std::vector<double>>();
            for (size_t i = 0; i < r.size() && i < 3; ++i) {
                cfg.ekf_noise.r_diag(long(i)) = r[i];
            }
        }
    }
    return cfg;
}

}  // namespace oisac
