#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "oisac/channel.hpp"

using namespace oisac;

TEST_CASE("plr reproduces the measured tables exactly at their abscissae") {
    const PlrTable table = PlrTable::measured_default();
    // Combined loss with a zero co-factor reduces to each raw curve.
    PlrTable dist_only{table.distance_cm, {{0.0, 0.0}}};
    for (const auto& [cm, p] : table.distance_cm) {
        CHECK(plr(cm / 100.0, 0.0, dist_only) == doctest::Approx(p).epsilon(1e-12));
    }
    PlrTable angle_only{{{0.0, 0.0}}, table.angle_deg};
    for (const auto& [deg, p] : table.angle_deg) {
        CHECK(plr(0.0, deg * M_PI / 180.0, angle_only) ==
              doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("plr combination and interpolation examples") {
    const PlrTable table = PlrTable::measured_default();
    CHECK(plr(1.0, 0.0, table) == doctest::Approx(0.017923).epsilon(1e-4));
    CHECK(plr(1.15, 0.0, table) == doctest::Approx(0.0293).epsilon(1e-2));
    // Below the first measurement both curves clamp.
    CHECK(plr(0.0, 0.0, table) == doctest::Approx(0.011965).epsilon(1e-4));
    // Far beyond the table the loss ramps to 1 within one extra step.
    CHECK(plr(1.7, 0.0, table) == doctest::Approx(1.0));
    CHECK(plr(1.55, 0.0, table) > 0.357);
}

TEST_CASE("packet channel trivial and Monte-Carlo cases") {
    std::mt19937_64 rng(5);
    ChannelConfig zero;
    zero.plr = PlrTable{{{0.0, 0.0}, {1e4, 0.0}}, {{0.0, 0.0}, {90.0, 0.0}}};
    for (int i = 0; i < 100; ++i) {
        CHECK(apply_channel_packet({1.0, 0.0, 0.0}, zero, rng));
    }
    ChannelConfig one;
    one.plr = PlrTable{{{0.0, 1.0}, {1e4, 1.0}}, {{0.0, 0.0}, {90.0, 0.0}}};
    for (int i = 0; i < 100; ++i) {
        CHECK(!apply_channel_packet({1.0, 0.0, 0.0}, one, rng));
    }

    ChannelConfig real;
    const RelativeState s{0.75 * std::cos(M_PI / 6), 0.75 * std::sin(M_PI / 6),
                          M_PI / 6};
    const double expected =
        plr(0.75, M_PI / 6, real.plr);
    long dropped = 0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) {
        dropped += !apply_channel_packet(s, real, rng);
    }
    CHECK(std::abs(double(dropped) / trials - expected) < 0.005);
}

TEST_CASE("raster corruption identity and box-blur properties") {
    FrameRaster step(64, 16, 255);
    for (int r = 0; r < 16; ++r) {
        for (int c = 0; c < 32; ++c) {
            step.set(r, c, 0);
        }
    }
    ChannelConfig cfg;
    cfg.noise_sigma = 0.0;
    cfg.blur_gain = 1.0;
    std::mt19937_64 rng(7);

    const FrameRaster same = apply_channel_raster(step, 0.0, cfg, rng);
    CHECK(same.pixels == step.pixels);
    const FrameRaster one = apply_channel_raster(step, 1.0, cfg, rng);
    CHECK(one.pixels == step.pixels);

    const FrameRaster blurred = apply_channel_raster(step, 3.0, cfg, rng);
    CHECK(blurred.width == step.width);
    CHECK(blurred.height == step.height);
    // Edge spread over the kernel length, mean preserved within rounding.
    int transition = 0;
    for (int c = 0; c < 64; ++c) {
        const int v = blurred.at(8, c);
        if (v != 0 && v != 255) {
            ++transition;
        }
    }
    CHECK(transition == 2);
    double mean_orig = 0.0, mean_blur = 0.0;
    for (size_t i = 0; i < step.pixels.size(); ++i) {
        mean_orig += step.pixels[i];
        mean_blur += blurred.pixels[i];
    }
    CHECK(std::abs(mean_orig - mean_blur) / step.pixels.size() < 1.0);

    cfg.noise_sigma = 10.0;
    const FrameRaster noisy = apply_channel_raster(step, 0.0, cfg, rng);
    CHECK(noisy.width == step.width);
    for (const auto v : noisy.pixels) {
        CHECK(v <= 255);
    }
}

TEST_CASE("display queue reproduces the measured delay ladder") {
    const double expected[6] = {0.06, 0.67, 1.38, 2.03, 2.55, 3.21};
    const int sizes[6] = {1, 10, 20, 30, 40, 50};
    for (int i = 0; i < 6; ++i) {
        DisplayQueueConfig cfg;
        cfg.queue_size = sizes[i];
        const double delay = simulate_display_queue(cfg, 600.0);
        std::printf("queue N=%d: mean delay %.4f s (target %.2f)\n", sizes[i],
                    delay, expected[i]);
        CHECK(std::abs(delay - expected[i]) <= 0.15 * expected[i]);
    }
}

TEST_CASE("display delay is monotone in queue size when saturated") {
    double prev = 0.0;
    for (const int size : {1, 2, 5, 10, 25, 50}) {
        DisplayQueueConfig cfg;
        cfg.queue_size = size;
        const double delay = simulate_display_queue(cfg, 400.0);
        CHECK(delay >= prev - 1e-9);
        prev = delay;
    }
}

TEST_CASE("slow publisher keeps the queue empty regardless of size") {
    for (const int size : {1, 10, 50}) {
        DisplayQueueConfig cfg;
        cfg.f_pub = 10.0;  // below 1/T_tx
        cfg.queue_size = size;
        const double delay = simulate_display_queue(cfg, 300.0);
        CHECK(delay == doctest::Approx(cfg.t_tx).epsilon(1e-9));
    }
}

namespace {

std::vector<TimedPayload> ramp_history(double duration, double f_pub,
                                       double slope) {
    // Leader accelerating at `slope` m/s^2, v quantized on [0, 0.6], 8 bits.
    std::vector<TimedPayload> history;
    const QuantizerSpec q{0.0, 0.6, 8};
    const double dt = 1.0 / f_pub;
    std::uint16_t seq = 0;
    for (double t = dt; t < duration; t += dt) {
        VelocityPayload p;
        p.code_v = std::uint8_t(quantize(slope * t, q));
        p.seq = seq++;
        p.timestamp_ms = std::uint32_t(std::lround(t * 1000));
        history.push_back({t, p});
    }
    return history;
}

}  // namespace

TEST_CASE("displayed payload staleness under a velocity ramp") {
    const QuantizerSpec q{0.0, 0.6, 8};

    SUBCASE("constant velocity: staleness is invisible") {
        std::vector<TimedPayload> history;
        for (double t = 0.05; t < 5.0; t += 0.05) {
            VelocityPayload p;
            p.code_v = std::uint8_t(quantize(0.3, q));
            history.push_back({t, p});
        }
        DisplayQueueConfig cfg;
        const auto shown = displayed_payload(4.0, history, cfg);
        REQUIRE(shown);
        CHECK(dequantize(shown->code_v, q) == doctest::Approx(0.3).epsilon(2e-2));
    }

    SUBCASE("N_q = 1: lag stays within the analytic staleness envelope") {
        DisplayQueueConfig cfg;
        const auto history = ramp_history(6.0, cfg.f_pub, 0.1);
        // Staleness of the shown image lies in [t_tx, t_tx + 2 / f_pub]
        // (fresh pickup, shows persist for up to two publish intervals).
        for (double t = 2.0; t <= 5.0; t += 0.13) {
            const auto shown = displayed_payload(t, history, cfg);
            REQUIRE(shown);
            const double lag = 0.1 * t - dequantize(shown->code_v, q);
            CHECK(lag >= 0.1 * cfg.t_tx - 0.01);
            CHECK(lag <= 0.1 * (cfg.t_tx + 2.0 / cfg.f_pub) + 0.01);
        }
    }

    SUBCASE("N_q = 50: lag approximately the Table-III delay times the slope") {
        DisplayQueueConfig cfg;
        cfg.queue_size = 50;
        const double duration = 40.0;
        const auto history = ramp_history(duration, cfg.f_pub, 0.01);
        const double queue_delay = simulate_display_queue(cfg, 300.0);
        const auto shown = displayed_payload(38.0, history, cfg);
        REQUIRE(shown);
        const double lag = 0.01 * 38.0 - dequantize(shown->code_v, q);
        CHECK(lag >= 0.01 * queue_delay - 0.01);
        CHECK(lag <= 0.01 * (queue_delay + cfg.t_tx + 2.0 / cfg.f_pub) + 0.01);
    }
}

TEST_CASE("identical seeds give identical channel draws") {
    ChannelConfig cfg;
    const RelativeState s{0.9, 0.1, 0.2};
    std::mt19937_64 rng_a(42), rng_b(42);
    for (int i = 0; i < 1000; ++i) {
        CHECK(apply_channel_packet(s, cfg, rng_a) ==
              apply_channel_packet(s, cfg, rng_b));
    }
}
