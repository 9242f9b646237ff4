// Command-line front end: scenario runs, the braking sweep, codec utilities,
// channel table dumps and the Lyapunov gain-floor check.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "oisac/channel.hpp"
#include "oisac/sim.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

oisac::ModulationMode parse_mode(const std::string& mode) {
    return mode == "direct" ? oisac::ModulationMode::kDirect
                            : oisac::ModulationMode::kFft;
}

int run_command(const std::string& preset, const std::string& config_path,
                const std::string& estimator, const std::string& sensing,
                std::uint64_t seed, double v_level, double duration,
                const std::string& out_dir, const std::string& emit_config) {
    oisac::ScenarioConfig cfg;
    if (!config_path.empty()) {
        cfg = oisac::config_from_json_text(read_file(config_path));
    } else if (preset == "circular") {
        cfg = oisac::preset_circular();
    } else if (preset == "braking") {
        cfg = oisac::preset_braking(v_level);
    } else if (preset == "ushape") {
        cfg = oisac::preset_ushape();
    } else {
        std::cerr << "unknown preset: " << preset << "\n";
        return 1;
    }
    if (!estimator.empty()) {
        cfg.estimator = estimator == "ekf" ? oisac::EstimatorKind::kEkf
                                           : oisac::EstimatorKind::kOisac;
    }
    if (!sensing.empty()) {
        cfg.sensing = sensing == "raster" ? oisac::SensingMode::kRaster
                                          : oisac::SensingMode::kIdeal;
    }
    if (seed != 0) {
        cfg.seed = seed;
    }
    if (duration > 0.0) {
        cfg.duration = duration;
    }
    if (!emit_config.empty()) {
        std::ofstream out(emit_config);
        out << oisac::config_to_json_text(cfg);
    }
    const oisac::RunResult result = oisac::run(cfg);
    oisac::emit(result.records, result.metrics, out_dir);
    std::cout << oisac::metrics_to_text(result.metrics);
    std::cout << "records: " << result.records.size() << " -> " << out_dir
              << "/records.csv\n";
    return result.metrics.visibility_lost ? 2 : 0;
}

int braking_sweep(int reps, std::uint64_t seed, const std::string& out_path,
                  const std::string& sensing) {
    const std::vector<double> levels = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    const auto rows = oisac::braking_experiment(
        levels, reps, seed,
        sensing == "raster" ? oisac::SensingMode::kRaster
                            : oisac::SensingMode::kIdeal);
    const std::string csv = oisac::braking_table_to_csv(rows);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << csv;
    }
    std::cout << csv;
    return 0;
}

int codec_encode(double v, double omega, int seq, long timestamp,
                 const std::string& mode, const std::string& out_path) {
    const oisac::QuantizerSpec q_v{0.0, 0.6, 8};
    const oisac::QuantizerSpec q_omega{-0.2, 0.2, 8};
    oisac::VelocityPayload payload;
    payload.code_v = std::uint8_t(oisac::quantize(v, q_v));
    payload.code_omega = std::uint8_t(oisac::quantize(omega, q_omega));
    payload.seq = std::uint16_t(seq);
    payload.timestamp_ms = std::uint32_t(timestamp);
    const auto layout = oisac::FrameLayout::standard(parse_mode(mode));
    const auto frame = oisac::render_frame(payload, layout, parse_mode(mode));
    if (!frame || !oisac::write_pgm(*frame, out_path)) {
        std::cerr << "encode failed\n";
        return 1;
    }
    std::printf("codes v=%d omega=%d seq=%d t=%ld -> %s\n", payload.code_v,
                payload.code_omega, seq, timestamp, out_path.c_str());
    return 0;
}

int codec_decode(const std::string& in_path, const std::string& mode) {
    const auto raster = oisac::read_pgm(in_path);
    if (!raster) {
        std::cerr << "cannot read " << in_path << "\n";
        return 1;
    }
    const auto layout = oisac::FrameLayout::standard(parse_mode(mode));
    const auto dec = oisac::decode_frame(*raster, layout, parse_mode(mode));
    if (!dec.ok) {
        const char* stage = dec.failed_stage == oisac::DecodeStage::kDetection
                                ? "detection"
                                : dec.failed_stage ==
                                          oisac::DecodeStage::kRectification
                                      ? "rectification"
                                      : "demodulation";
        std::printf("decode failed at %s\n", stage);
        return 2;
    }
    const oisac::QuantizerSpec q_v{0.0, 0.6, 8};
    const oisac::QuantizerSpec q_omega{-0.2, 0.2, 8};
    std::printf("v=%.6f omega=%.6f seq=%u t_ms=%u (codes %u %u)\n",
                oisac::dequantize(dec.payload.code_v, q_v),
                oisac::dequantize(dec.payload.code_omega, q_omega),
                unsigned(dec.payload.seq), unsigned(dec.payload.timestamp_ms),
                unsigned(dec.payload.code_v), unsigned(dec.payload.code_omega));
    return 0;
}

int codec_roundtrip(double v, double omega, double angle_deg, double noise,
                    double blur_px, const std::string& mode) {
    const oisac::QuantizerSpec q_v{0.0, 0.6, 8};
    const oisac::QuantizerSpec q_omega{-0.2, 0.2, 8};
    oisac::VelocityPayload payload;
    payload.code_v = std::uint8_t(oisac::quantize(v, q_v));
    payload.code_omega = std::uint8_t(oisac::quantize(omega, q_omega));
    payload.seq = 7;
    const auto m = parse_mode(mode);
    const auto layout = oisac::FrameLayout::standard(m);
    const auto frame = oisac::render_frame(payload, layout, m);
    if (!frame) {
        std::cerr << "render failed\n";
        return 1;
    }

    // View the frame through the camera model at the requested angle.
    const oisac::CameraIntrinsics cam;
    const oisac::ScreenGeometry screen;
    oisac::RelativeState s{0.9, 0.0, angle_deg * M_PI / 180.0};
    const auto points = oisac::feature_points_camera(s, screen);
    if (!points) {
        std::cerr << "angle out of range\n";
        return 1;
    }
    std::array<oisac::PixelPoint, 4> projected;
    for (int i = 0; i < 4; ++i) {
        projected[i] = *oisac::project((*points)[i], cam);
    }
    const auto h = oisac::estimate_homography(layout.marker_centers(), projected);
    oisac::FrameRaster captured =
        oisac::rectify(*frame, *h, cam.width, cam.height, 180);

    oisac::ChannelConfig channel;
    channel.noise_sigma = noise;
    channel.blur_gain = 1.0;
    std::mt19937_64 rng(12345);
    captured = oisac::apply_channel_raster(captured, blur_px, channel, rng);

    const auto dec = oisac::decode_frame(captured, layout, m);
    if (dec.ok && dec.payload == payload) {
        std::printf("roundtrip ok at %.0f deg (noise %.1f, blur %.0f px)\n",
                    angle_deg, noise, blur_px);
        return 0;
    }
    std::printf("roundtrip FAILED at %.0f deg (noise %.1f, blur %.0f px)\n",
                angle_deg, noise, blur_px);
    return 2;
}

int dump_tables() {
    const auto table = oisac::PlrTable::measured_default();
    std::printf("curve,abscissa,loss\n");
    for (int cm = 0; cm <= 170; cm += 5) {
        std::printf("distance_cm,%d,%.6f\n", cm,
                    oisac::plr(cm / 100.0, 0.0, {table.distance_cm, {{0, 0.0}}}));
    }
    for (int deg = 0; deg <= 60; deg += 5) {
        std::printf("angle_deg,%d,%.6f\n", deg,
                    oisac::plr(0.0, deg * M_PI / 180.0,
                               {{{0, 0.0}}, table.angle_deg}));
    }
    return 0;
}

int lyapunov_cmd(int samples, std::uint64_t seed) {
    const auto result = oisac::lyapunov_check(samples, seed);
    std::printf("samples=%d passes=%d rate=%.4f\n", result.samples,
                result.passes, result.pass_rate());
    for (const auto& failure : result.failures) {
        std::printf("%s\n", failure.c_str());
    }
    return result.pass_rate() >= 0.99 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Screen-camera formation control simulator"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "run a scenario preset or config");
    std::string preset = "circular", config_path, estimator, sensing;
    std::string out_dir = "out", emit_config;
    std::uint64_t seed = 0;
    double v_level = 0.3, duration = 0.0;
    run_cmd->add_option("--preset", preset, "circular|braking|ushape");
    run_cmd->add_option("--config", config_path, "JSON run-config file");
    run_cmd->add_option("--estimator", estimator, "oisac|ekf");
    run_cmd->add_option("--sensing", sensing, "ideal|raster");
    run_cmd->add_option("--seed", seed, "master seed (0 keeps preset default)");
    run_cmd->add_option("--v-level", v_level, "cruise speed for braking preset");
    run_cmd->add_option("--duration", duration, "override duration [s]");
    run_cmd->add_option("--out", out_dir, "output directory");
    run_cmd->add_option("--emit-config", emit_config,
                        "write the effective config JSON to this path");

    auto* sweep_cmd = app.add_subcommand("braking-sweep",
                                         "6 speed levels x 2 estimators");
    int reps = 10;
    std::uint64_t sweep_seed = 1;
    std::string sweep_out, sweep_sensing = "ideal";
    sweep_cmd->add_option("--reps", reps, "repetitions per cell");
    sweep_cmd->add_option("--seed", sweep_seed, "master seed");
    sweep_cmd->add_option("--out", sweep_out, "CSV output path");
    sweep_cmd->add_option("--sensing", sweep_sensing, "ideal|raster");

    auto* codec_cmd = app.add_subcommand("codec", "frame encode/decode tools");
    codec_cmd->require_subcommand(1);
    double enc_v = 0.3, enc_omega = 0.05, rt_angle = 0.0, rt_noise = 0.0,
           rt_blur = 0.0;
    int enc_seq = 0;
    long enc_ts = 0;
    std::string codec_mode = "fft", pgm_out = "frame.pgm", pgm_in;
    auto* enc = codec_cmd->add_subcommand("encode", "render a frame to PGM");
    enc->add_option("--v", enc_v);
    enc->add_option("--omega", enc_omega);
    enc->add_option("--seq", enc_seq);
    enc->add_option("--timestamp", enc_ts);
    enc->add_option("--mode", codec_mode, "fft|direct");
    enc->add_option("--out", pgm_out);
    auto* dec = codec_cmd->add_subcommand("decode", "decode a PGM frame");
    dec->add_option("--in", pgm_in)->required();
    dec->add_option("--mode", codec_mode, "fft|direct");
    auto* rt = codec_cmd->add_subcommand("roundtrip",
                                         "encode, warp/corrupt, decode");
    rt->add_option("--v", enc_v);
    rt->add_option("--omega", enc_omega);
    rt->add_option("--angle", rt_angle, "view angle [deg]");
    rt->add_option("--noise", rt_noise, "intensity noise sigma");
    rt->add_option("--blur", rt_blur, "blur kernel length [px]");
    rt->add_option("--mode", codec_mode, "fft|direct");

    auto* tables_cmd =
        app.add_subcommand("dump-tables", "packet-loss curves as CSV");
    auto* lyap_cmd = app.add_subcommand("lyapunov-check",
                                        "Monte-Carlo gain-floor check");
    int samples = 1000;
    std::uint64_t lyap_seed = 2024;
    lyap_cmd->add_option("--samples", samples);
    lyap_cmd->add_option("--seed", lyap_seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            return run_command(preset, config_path, estimator, sensing, seed,
                               v_level, duration, out_dir, emit_config);
        }
        if (sweep_cmd->parsed()) {
            return braking_sweep(reps, sweep_seed, sweep_out, sweep_sensing);
        }
        if (codec_cmd->parsed()) {
            if (enc->parsed()) {
                return codec_encode(enc_v, enc_omega, enc_seq, enc_ts,
                                    codec_mode, pgm_out);
            }
            if (dec->parsed()) {
                return codec_decode(pgm_in, codec_mode);
            }
            return codec_roundtrip(enc_v, enc_omega, rt_angle, rt_noise,
                                   rt_blur, codec_mode);
        }
        if (tables_cmd->parsed()) {
            return dump_tables();
        }
        if (lyap_cmd->parsed()) {
            return lyapunov_cmd(samples, lyap_seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
