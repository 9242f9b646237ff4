#include "oisac/channel.hpp"

#include <algorithm>
#include <cmath>

namespace oisac {

PlrTable PlrTable::measured_default() {
    PlrTable table;
    table.distance_cm = {{50, 0.005},  {60, 0.006},  {70, 0.007},
                         {80, 0.008},  {90, 0.010},  {100, 0.011},
                         {110, 0.017}, {120, 0.028}, {130, 0.057},
                         {140, 0.102}, {150, 0.357}};
    table.angle_deg = {{0, 0.007},  {10, 0.008}, {20, 0.010},
                       {30, 0.010}, {40, 0.011}, {50, 0.013}};
    return table;
}

namespace {

double interp_curve(const std::vector<std::pair<double, double>>& pts,
                    double q) {
    if (pts.empty()) {
        return 0.0;
    }
    if (q <= pts.front().first) {
        return pts.front().second;
    }
    for (size_t i = 1; i < pts.size(); ++i) {
        if (q <= pts[i].first) {
            const double t = (q - pts[i - 1].first) /
                             (pts[i].first - pts[i - 1].first);
            return pts[i - 1].second +
                   t * (pts[i].second - pts[i - 1].second);
        }
    }
    // Beyond the last measurement: ramp to certain loss over one more step.
    const double step = (pts.size() >= 2)
                            ? pts.back().first - pts[pts.size() - 2].first
                            : 1.0;
    const double t = (q - pts.back().first) / step;
    return std::min(1.0, pts.back().second + t * (1.0 - pts.back().second));
}

}  // namespace

double plr(double distance_m, double view_angle_rad, const PlrTable& table) {
    const double p_dist = interp_curve(table.distance_cm, distance_m * 100.0);
    const double p_angle =
        interp_curve(table.angle_deg, std::abs(view_angle_rad) * 180.0 / M_PI);
    return 1.0 - (1.0 - p_dist) * (1.0 - p_angle);
}

bool apply_channel_packet(const RelativeState& s, const ChannelConfig& cfg,
                          std::mt19937_64& rng) {
    const double distance = std::hypot(s.x_lf, s.y_lf);
    const double p = plr(distance, s.gamma, cfg.plr);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    return uniform(rng) >= p;
}

FrameRaster apply_channel_raster(const FrameRaster& raster, double accel_mag,
                                 const ChannelConfig& cfg,
                                 std::mt19937_64& rng) {
    FrameRaster out = raster;
    const int k = int(std::lround(cfg.blur_gain * std::abs(accel_mag)));
    if (k >= 2) {
        const int start = -(k - 1) / 2;
        for (int r = 0; r < raster.height; ++r) {
            for (int c = 0; c < raster.width; ++c) {
                double sum = 0.0;
                for (int j = 0; j < k; ++j) {
                    const int cc =
                        std::clamp(c + start + j, 0, raster.width - 1);
                    sum += raster.at(r, cc);
                }
                out.set(r, c,
                        std::uint8_t(std::clamp(std::lround(sum / k), 0l, 255l)));
            }
        }
    }
    if (cfg.noise_sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
        for (auto& v : out.pixels) {
            v = std::uint8_t(std::clamp(std::lround(v + noise(rng)), 0l, 255l));
        }
    }
    return out;
}

void DisplayPipeline::push(double t, const VelocityPayload& payload) {
    advance(t);
    if (!in_service_ && queue_.empty()) {
        in_service_ = TimedPayload{t, payload};
        service_end_ = t + cfg_.t_tx;
        return;
    }
    const int occupancy = int(queue_.size()) + (in_service_ ? 1 : 0);
    if (occupancy < cfg_.queue_size) {
        queue_.push_back({t, payload});
        return;
    }
    if (cfg_.policy == DisplayQueueConfig::Policy::kDropOldest &&
        !queue_.empty()) {
        queue_.erase(queue_.begin());
        queue_.push_back({t, payload});
    }
    // kRejectNewest (and a full single-slot queue): incoming message dropped.
}

void DisplayPipeline::advance(double t) {
    while (in_service_ && service_end_ <= t) {
        shown_ = in_service_->payload;
        delays_.push_back(service_end_ - in_service_->t);
        in_service_.reset();
        if (!queue_.empty()) {
            in_service_ = queue_.front();
            queue_.erase(queue_.begin());
            service_end_ += cfg_.t_tx;
        }
    }
}

std::optional<VelocityPayload> DisplayPipeline::displayed(double t) {
    advance(t);
    return shown_;
}

double simulate_display_queue(const DisplayQueueConfig& cfg, double duration) {
    DisplayPipeline pipeline(cfg);
    const double dt = 1.0 / cfg.f_pub;
    VelocityPayload payload;
    for (double t = dt; t <= duration; t += dt) {
        payload.seq = std::uint16_t(payload.seq + 1);
        payload.timestamp_ms = std::uint32_t(std::lround(t * 1000.0));
        pipeline.push(t, payload);
    }
    (void)pipeline.displayed(duration);
    const auto& delays = pipeline.delays();
    if (delays.empty()) {
        return 0.0;
    }
    const size_t skip = delays.size() / 10;
    double sum = 0.0;
    for (size_t i = skip; i < delays.size(); ++i) {
        sum += delays[i];
    }
    return sum / double(delays.size() - skip);
}

std::optional<VelocityPayload> displayed_payload(
    double t, const std::vector<TimedPayload>& history,
    const DisplayQueueConfig& cfg) {
    DisplayPipeline pipeline(cfg);
    for (const auto& item : history) {
        if (item.t > t) {
            break;
        }
        pipeline.push(item.t, item.payload);
    }
    return pipeline.displayed(t);
}

}  // namespace oisac
