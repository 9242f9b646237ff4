#ifndef OISAC_CHANNEL_HPP_
#define OISAC_CHANNEL_HPP_

#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "oisac/codec.hpp"
#include "oisac/geometry.hpp"

namespace oisac {

/// Measured packet-loss curves: (distance [cm], loss) and
/// (view angle [deg], loss), strictly increasing abscissae.
struct PlrTable {
    std::vector<std::pair<double, double>> distance_cm;
    std::vector<std::pair<double, double>> angle_deg;

    static PlrTable measured_default();
};

enum class ChannelMode { kPacket, kRaster };

struct ChannelConfig {
    PlrTable plr = PlrTable::measured_default();
    double noise_sigma = 4.0;   // additive intensity noise on rasters
    double blur_gain = 10.0;    // blur pixels per m/s^2 of acceleration
    ChannelMode mode = ChannelMode::kPacket;
    std::uint64_t seed = 0;
};

/// Combined loss probability at a distance [m] and view angle [rad].
/// Piecewise-linear in each curve; clamps below the tables, ramps to 1.0
/// over one table step above them. The two factors combine independently:
/// p = 1 - (1 - p_dist)(1 - p_angle).
double plr(double distance_m, double view_angle_rad, const PlrTable& table);

/// Bernoulli packet-level channel; true = delivered.
bool apply_channel_packet(const RelativeState& s, const ChannelConfig& cfg,
                          std::mt19937_64& rng);

/// Raster-level corruption: horizontal motion blur proportional to the
/// commanded acceleration magnitude, then additive Gaussian intensity noise.
FrameRaster apply_channel_raster(const FrameRaster& raster, double accel_mag,
                                 const ChannelConfig& cfg,
                                 std::mt19937_64& rng);

struct DisplayQueueConfig {
    double f_pub = 20.0;  // [Hz]
    double t_tx = 0.06;   // [s] per-message transform/display time
    int queue_size = 1;   // capacity, including the message being displayed
    enum class Policy { kRejectNewest, kDropOldest } policy = Policy::kRejectNewest;
};

/// Mean display delay (appearance time minus message timestamp) of a
/// saturated producer at f_pub over `duration` seconds, first 10% of the
/// displayed samples discarded.
double simulate_display_queue(const DisplayQueueConfig& cfg, double duration);

struct TimedPayload {
    double t = 0.0;
    VelocityPayload payload;
};

/// Incremental display pipeline used by the simulator: push published
/// messages in time order, query what is on-screen at a given time.
class DisplayPipeline {
  public:
    explicit DisplayPipeline(const DisplayQueueConfig& cfg) : cfg_(cfg) {}

    void push(double t, const VelocityPayload& payload);
    /// Payload shown at time t (empty until the first image appears).
    /// t must not precede earlier queries.
    std::optional<VelocityPayload> displayed(double t);
    /// Appearance-time-minus-timestamp of every message displayed so far.
    const std::vector<double>& delays() const { return delays_; }

  private:
    void advance(double t);

    DisplayQueueConfig cfg_;
    std::vector<TimedPayload> queue_;
    std::optional<TimedPayload> in_service_;
    double service_end_ = 0.0;
    std::optional<VelocityPayload> shown_;
    std::vector<double> delays_;
};

/// Payload on-screen at time t given the full publish history.
std::optional<VelocityPayload> displayed_payload(
    double t, const std::vector<TimedPayload>& history,
    const DisplayQueueConfig& cfg);

}  // namespace oisac

#endif  // OISAC_CHANNEL_HPP_
