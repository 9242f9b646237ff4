#ifndef OISAC_CODEC_HPP_
#define OISAC_CODEC_HPP_

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oisac/camera.hpp"

namespace oisac {

/// Uniform scalar quantizer over [lo, hi] with 2^n_bits levels.
struct QuantizerSpec {
    double lo = 0.0;
    double hi = 1.0;
    int n_bits = 8;

    double step() const { return (hi - lo) / double(1u << n_bits); }
    /// Worst round-to-nearest error for interior values.
    double max_error() const { return (hi - lo) / double(2u << n_bits); }
};

int quantize(double value, const QuantizerSpec& spec);
double dequantize(int code, const QuantizerSpec& spec);

/// One transmitted message: quantized leader twist plus freshness metadata.
struct VelocityPayload {
    std::uint8_t code_v = 0;
    std::uint8_t code_omega = 0;
    std::uint16_t seq = 0;
    std::uint32_t timestamp_ms = 0;

    bool operator==(const VelocityPayload&) const = default;
};

enum class ModulationMode { kFft, kDirect };

/// Geometry of a rendered frame: four corner finder markers, stripe bands
/// between adjacent marker centers, and the centered data-cell grid.
struct FrameLayout {
    int width = 320;
    int height = 240;
    int margin = 8;          // [px] white border around the markers
    int marker_size = 56;    // [px] 7 modules of 8 px
    int stripe_period = 14;  // [px] one black+white pair
    int stripe_thickness = 9;
    int grid_rows = 16;
    int grid_cols = 16;
    int cell_size = 7;       // [px] per data cell

    static FrameLayout standard(ModulationMode mode);

    /// Continuous-coordinate marker centers: A, B, C, D.
    std::array<PixelPoint, 4> marker_centers() const;
    /// Top-left corner of the data region (centered in the frame).
    int data_x0() const { return (width - grid_cols * cell_size) / 2; }
    int data_y0() const { return (height - grid_rows * cell_size) / 2; }
    /// Stripe half-period counts along the horizontal / vertical edges.
    int stripe_runs_horizontal() const;
    int stripe_runs_vertical() const;
};

/// 8-bit grayscale raster, row-major.
struct FrameRaster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    FrameRaster() = default;
    FrameRaster(int w, int h, std::uint8_t fill = 255)
        : width(w), height(h), pixels(size_t(w) * size_t(h), fill) {}

    std::uint8_t at(int row, int col) const {
        return pixels[size_t(row) * width + col];
    }
    void set(int row, int col, std::uint8_t v) {
        pixels[size_t(row) * width + col] = v;
    }
};

/// Duplication code: first four bits of the byte repeated 5x each,
/// last four bits 3x each (MSB first), 32 bits total.
std::array<std::uint8_t, 32> expand_bits(std::uint8_t byte);

struct CollapseResult {
    std::uint8_t value = 0;
    /// Per-bit (votes for winner - votes against); always positive.
    std::array<int, 8> margins{};
};
CollapseResult collapse_bits(std::span<const std::uint8_t, 32> bits);

/// Maps a bit string onto a rows x cols real-valued sample grid in [0, 255].
/// kFft places +-1 on low/mid-frequency DFT coefficient pairs and inverse
/// transforms; kDirect writes one black/white sample per bit. Empty when the
/// bits do not fit the grid's capacity.
std::optional<std::vector<double>> modulate(std::span<const std::uint8_t> bits,
                                            int rows, int cols,
                                            ModulationMode mode);
std::vector<std::uint8_t> demodulate(std::span<const double> block, int rows,
                                     int cols, ModulationMode mode,
                                     int n_bits);

/// Number of payload bits a rows x cols grid can carry in a mode.
int modulation_capacity(int rows, int cols, ModulationMode mode);

/// Full displayed frame: markers + stripes + modulated data matrix.
/// Empty if the serialized payload exceeds the layout's capacity.
std::optional<FrameRaster> render_frame(const VelocityPayload& payload,
                                        const FrameLayout& layout,
                                        ModulationMode mode);

enum class DetectError { kNone, kTooFewCandidates, kStripeMismatch, kAmbiguous };

struct DetectResult {
    bool ok = false;
    FeaturePixels points;
    DetectError error = DetectError::kNone;
};

/// Finds the four stripe-verified finder markers on a (possibly warped or
/// corrupted) raster and labels their centers A/B/C/D.
DetectResult detect_markers(const FrameRaster& raster,
                            const FrameLayout& layout);

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Direct linear transform from four point correspondences, normalized to
/// h33 = 1. Empty when the 8x8 system is singular or near-singular
/// (condition number above 1e10).
std::optional<Mat3> estimate_homography(const std::array<PixelPoint, 4>& src,
                                        const std::array<PixelPoint, 4>& dst);

PixelPoint apply_homography(const Mat3& h, const PixelPoint& p);
std::optional<Mat3> invert_homography(const Mat3& h);

/// Resamples `src` into an out_w x out_h raster through H (mapping src
/// coordinates to output coordinates) with bilinear interpolation.
FrameRaster rectify(const FrameRaster& src, const Mat3& h_src_to_dst,
                    int out_w, int out_h, std::uint8_t background = 255);

enum class DecodeStage { kNone, kDetection, kRectification, kDemodulation };

struct DecodeResult {
    bool ok = false;
    VelocityPayload payload;
    FeaturePixels markers;      // valid whenever detection succeeded
    bool markers_valid = false;
    DecodeStage failed_stage = DecodeStage::kNone;
};

/// detect -> homography -> rectify -> demodulate -> majority vote -> payload.
DecodeResult decode_frame(const FrameRaster& raster, const FrameLayout& layout,
                          ModulationMode mode);

/// Frame bit serialization (preamble, duplicated payload bytes, checksum).
std::vector<std::uint8_t> payload_to_bits(const VelocityPayload& payload);
std::optional<VelocityPayload> bits_to_payload(std::span<const std::uint8_t> bits);
int frame_bit_count();

/// Binary PGM (P5) import/export.
bool write_pgm(const FrameRaster& raster, const std::string& path);
std::optional<FrameRaster> read_pgm(const std::string& path);

/// Otsu threshold over an 8-bit intensity histogram; pixels <= threshold
/// count as dark.
double otsu_threshold(std::span<const std::uint8_t> values);

namespace detail {

/// In-place 2-D DFT (inverse applies the 1/(rows*cols) factor).
/// rows and cols must be powers of two.
void dft2d(std::vector<std::complex<double>>& data, int rows, int cols,
           bool inverse);

/// Coefficient slots used by kFft mode, one per bit, conjugate pairs
/// excluded. Deterministic for a given grid size.
std::vector<std::pair<int, int>> slot_table(int rows, int cols);

}  // namespace detail

}  // namespace oisac

#endif  // OISAC_CODEC_HPP_
