#include "oisac/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace oisac {

namespace {

constexpr std::uint8_t kPreamble = 0xA6;

// Serialized frame: preamble x3, v and omega bytes with 5x/3x duplication,
// seq and timestamp bytes x3, xor checksum x3.
constexpr int kFrameBits = 24 + 32 + 32 + 2 * 24 + 4 * 24 + 24;

void append_expand3(std::vector<std::uint8_t>& bits, std::uint8_t byte) {
    for (int i = 7; i >= 0; --i) {
        const std::uint8_t b = (byte >> i) & 1u;
        bits.push_back(b);
        bits.push_back(b);
        bits.push_back(b);
    }
}

std::uint8_t collapse3(std::span<const std::uint8_t> bits) {
    std::uint8_t byte = 0;
    for (int i = 0; i < 8; ++i) {
        const int ones = bits[3 * i] + bits[3 * i + 1] + bits[3 * i + 2];
        byte = std::uint8_t((byte << 1) | (ones >= 2 ? 1u : 0u));
    }
    return byte;
}

}  // namespace

int quantize(double value, const QuantizerSpec& spec) {
    const double clamped = std::clamp(value, spec.lo, spec.hi);
    const int code = int(std::lround((clamped - spec.lo) / spec.step()));
    return std::clamp(code, 0, (1 << spec.n_bits) - 1);
}

double dequantize(int code, const QuantizerSpec& spec) {
    return spec.lo + double(code) * spec.step();
}

FrameLayout FrameLayout::standard(ModulationMode mode) {
    FrameLayout layout;
    if (mode == ModulationMode::kFft) {
        layout.grid_rows = 32;
        layout.grid_cols = 32;
        layout.cell_size = 4;
    }
    return layout;
}

std::array<PixelPoint, 4> FrameLayout::marker_centers() const {
    const double near = margin + marker_size / 2.0;
    const double far_x = width - margin - marker_size / 2.0;
    const double far_y = height - margin - marker_size / 2.0;
    return {PixelPoint{near, near}, PixelPoint{far_x, near},
            PixelPoint{near, far_y}, PixelPoint{far_x, far_y}};
}

int FrameLayout::stripe_runs_horizontal() const {
    return 2 * (width - 2 * (margin + marker_size)) / stripe_period;
}

int FrameLayout::stripe_runs_vertical() const {
    return 2 * (height - 2 * (margin + marker_size)) / stripe_period;
}

std::array<std::uint8_t, 32> expand_bits(std::uint8_t byte) {
    std::array<std::uint8_t, 32> out{};
    int pos = 0;
    for (int i = 7; i >= 0; --i) {
        const std::uint8_t b = (byte >> i) & 1u;
        const int copies = (i >= 4) ? 5 : 3;
        for (int c = 0; c < copies; ++c) {
            out[pos++] = b;
        }
    }
    return out;
}

CollapseResult collapse_bits(std::span<const std::uint8_t, 32> bits) {
    CollapseResult result;
    int pos = 0;
    for (int i = 0; i < 8; ++i) {
        const int copies = (i < 4) ? 5 : 3;
        int ones = 0;
        for (int c = 0; c < copies; ++c) {
            ones += bits[pos++];
        }
        const int zeros = copies - ones;
        const std::uint8_t winner = (ones > zeros) ? 1u : 0u;
        result.value = std::uint8_t((result.value << 1) | winner);
        result.margins[i] = std::abs(ones - zeros);
    }
    return result;
}

namespace detail {

namespace {

void fft1d(std::complex<double>* data, int n, int stride, bool inverse,
           std::vector<std::complex<double>>& scratch) {
    scratch.resize(n);
    for (int i = 0; i < n; ++i) {
        scratch[i] = data[i * stride];
    }
    // Bit-reversal permutation.
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) {
            j ^= bit;
        }
        j ^= bit;
        if (i < j) {
            std::swap(scratch[i], scratch[j]);
        }
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double angle = (inverse ? 2.0 : -2.0) * M_PI / len;
        const std::complex<double> wl(std::cos(angle), std::sin(angle));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                const std::complex<double> u = scratch[i + k];
                const std::complex<double> t = scratch[i + k + len / 2] * w;
                scratch[i + k] = u + t;
                scratch[i + k + len / 2] = u - t;
                w *= wl;
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        data[i * stride] = scratch[i];
    }
}

}  // namespace

void dft2d(std::vector<std::complex<double>>& data, int rows, int cols,
           bool inverse) {
    std::vector<std::complex<double>> scratch;
    for (int r = 0; r < rows; ++r) {
        fft1d(data.data() + size_t(r) * cols, cols, 1, inverse, scratch);
    }
    for (int c = 0; c < cols; ++c) {
        fft1d(data.data() + c, rows, cols, inverse, scratch);
    }
    if (inverse) {
        const double scale = 1.0 / (double(rows) * double(cols));
        for (auto& v : data) {
            v *= scale;
        }
    }
}

std::vector<std::pair<int, int>> slot_table(int rows, int cols) {
    // Keep low/mid frequencies: skip DC, self-conjugate slots and the
    // highest octave (folded frequency above 3/8 of the grid size). Slots are
    // ordered lowest frequency first so short payloads land on the most
    // resampling-robust coefficients.
    const int f_limit = std::min(rows, cols) * 3 / 8;
    struct Slot {
        int f, fu, fv, u, v;
    };
    std::vector<Slot> slots;
    for (int u = 0; u < rows; ++u) {
        for (int v = 0; v < cols; ++v) {
            const int fu = std::min(u, rows - u);
            const int fv = std::min(v, cols - v);
            const int f = std::max(fu, fv);
            if (f < 1 || f > f_limit) {
                continue;
            }
            if ((2 * u) % rows == 0 && (2 * v) % cols == 0) {
                continue;  // self-conjugate
            }
            const int cu = (rows - u) % rows;
            const int cv = (cols - v) % cols;
            if (std::make_pair(u, v) < std::make_pair(cu, cv)) {
                slots.push_back({f, fu, fv, u, v});
            }
        }
    }
    std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
        return std::tie(a.f, a.fu, a.fv, a.u, a.v) <
               std::tie(b.f, b.fu, b.fv, b.u, b.v);
    });
    std::vector<std::pair<int, int>> table;
    table.reserve(slots.size());
    for (const auto& slot : slots) {
        table.emplace_back(slot.u, slot.v);
    }
    return table;
}

}  // namespace detail

int modulation_capacity(int rows, int cols, ModulationMode mode) {
    if (mode == ModulationMode::kDirect) {
        return rows * cols;
    }
    return int(detail::slot_table(rows, cols).size());
}

std::optional<std::vector<double>> modulate(std::span<const std::uint8_t> bits,
                                            int rows, int cols,
                                            ModulationMode mode) {
    if (int(bits.size()) > modulation_capacity(rows, cols, mode)) {
        return std::nullopt;
    }
    std::vector<double> block(size_t(rows) * cols, 255.0);
    if (mode == ModulationMode::kDirect) {
        for (size_t i = 0; i < bits.size(); ++i) {
            block[i] = bits[i] ? 0.0 : 255.0;
        }
        return block;
    }

    const auto slots = detail::slot_table(rows, cols);
    std::vector<std::complex<double>> freq(size_t(rows) * cols,
                                           std::complex<double>(0.0, 0.0));
    for (size_t i = 0; i < bits.size(); ++i) {
        const auto [u, v] = slots[i];
        const double val = bits[i] ? 1.0 : -1.0;
        freq[size_t(u) * cols + v] = val;
        freq[size_t((rows - u) % rows) * cols + (cols - v) % cols] = val;
    }
    detail::dft2d(freq, rows, cols, /*inverse=*/true);

    double lo = freq[0].real();
    double hi = lo;
    for (const auto& v : freq) {
        lo = std::min(lo, v.real());
        hi = std::max(hi, v.real());
    }
    const double span = hi - lo;
    for (size_t i = 0; i < block.size(); ++i) {
        block[i] = (span > 1e-12) ? (freq[i].real() - lo) * 255.0 / span : 128.0;
    }
    return block;
}

std::vector<std::uint8_t> demodulate(std::span<const double> block, int rows,
                                     int cols, ModulationMode mode,
                                     int n_bits) {
    std::vector<std::uint8_t> bits(n_bits, 0);
    if (mode == ModulationMode::kDirect) {
        std::vector<std::uint8_t> rounded(block.size());
        for (size_t i = 0; i < block.size(); ++i) {
            rounded[i] = std::uint8_t(std::clamp(std::lround(block[i]), 0l, 255l));
        }
        const double thr = otsu_threshold(rounded);
        for (int i = 0; i < n_bits; ++i) {
            bits[i] = (block[i] <= thr) ? 1u : 0u;
        }
        return bits;
    }

    std::vector<std::complex<double>> freq(block.size());
    for (size_t i = 0; i < block.size(); ++i) {
        freq[i] = block[i];
    }
    detail::dft2d(freq, rows, cols, /*inverse=*/false);
    const auto slots = detail::slot_table(rows, cols);
    for (int i = 0; i < n_bits; ++i) {
        const auto [u, v] = slots[i];
        const double re =
            freq[size_t(u) * cols + v].real() +
            freq[size_t((rows - u) % rows) * cols + (cols - v) % cols].real();
        bits[i] = (re > 0.0) ? 1u : 0u;
    }
    return bits;
}

std::vector<std::uint8_t> payload_to_bits(const VelocityPayload& payload) {
    std::vector<std::uint8_t> bits;
    bits.reserve(kFrameBits);
    append_expand3(bits, kPreamble);
    const auto v_bits = expand_bits(payload.code_v);
    bits.insert(bits.end(), v_bits.begin(), v_bits.end());
    const auto w_bits = expand_bits(payload.code_omega);
    bits.insert(bits.end(), w_bits.begin(), w_bits.end());
    const std::array<std::uint8_t, 6> rest = {
        std::uint8_t(payload.seq >> 8),         std::uint8_t(payload.seq & 0xFF),
        std::uint8_t(payload.timestamp_ms >> 24),
        std::uint8_t((payload.timestamp_ms >> 16) & 0xFF),
        std::uint8_t((payload.timestamp_ms >> 8) & 0xFF),
        std::uint8_t(payload.timestamp_ms & 0xFF)};
    for (const auto byte : rest) {
        append_expand3(bits, byte);
    }
    std::uint8_t checksum = payload.code_v ^ payload.code_omega;
    for (const auto byte : rest) {
        checksum ^= byte;
    }
    append_expand3(bits, checksum);
    return bits;
}

std::optional<VelocityPayload> bits_to_payload(
    std::span<const std::uint8_t> bits) {
    if (int(bits.size()) != kFrameBits) {
        return std::nullopt;
    }
    size_t pos = 0;
    const std::uint8_t preamble = collapse3(bits.subspan(pos, 24));
    pos += 24;
    if (preamble != kPreamble) {
        return std::nullopt;
    }
    VelocityPayload payload;
    payload.code_v =
        collapse_bits(std::span<const std::uint8_t, 32>(bits.data() + pos, 32))
            .value;
    pos += 32;
    payload.code_omega =
        collapse_bits(std::span<const std::uint8_t, 32>(bits.data() + pos, 32))
            .value;
    pos += 32;
    std::array<std::uint8_t, 6> rest{};
    for (auto& byte : rest) {
        byte = collapse3(bits.subspan(pos, 24));
        pos += 24;
    }
    const std::uint8_t checksum = collapse3(bits.subspan(pos, 24));
    std::uint8_t expected = payload.code_v ^ payload.code_omega;
    for (const auto byte : rest) {
        expected ^= byte;
    }
    if (checksum != expected) {
        return std::nullopt;
    }
    payload.seq = std::uint16_t((rest[0] << 8) | rest[1]);
    payload.timestamp_ms = (std::uint32_t(rest[2]) << 24) |
                           (std::uint32_t(rest[3]) << 16) |
                           (std::uint32_t(rest[4]) << 8) | rest[5];
    return payload;
}

int frame_bit_count() { return kFrameBits; }

namespace {

void draw_marker(FrameRaster& raster, int x0, int y0, int size) {
    const int module = size / 7;
    for (int my = 0; my < 7; ++my) {
        for (int mx = 0; mx < 7; ++mx) {
            const bool ring = my == 0 || my == 6 || mx == 0 || mx == 6;
            const bool core = my >= 2 && my <= 4 && mx >= 2 && mx <= 4;
            if (!ring && !core) {
                continue;
            }
            for (int dy = 0; dy < module; ++dy) {
                for (int dx = 0; dx < module; ++dx) {
                    raster.set(y0 + my * module + dy, x0 + mx * module + dx, 0);
                }
            }
        }
    }
}

void draw_stripes(FrameRaster& raster, const FrameLayout& layout) {
    // Dark segments are inset a few pixels from the marker squares (so the
    // connected-component pass never fuses a marker ring with a stripe bar)
    // and only complete half-periods are drawn.
    const int gap = 3;
    const int lo = layout.margin + layout.marker_size + gap;
    const int half_period = layout.stripe_period / 2;
    const int half_thick = layout.stripe_thickness / 2;
    const auto centers = layout.marker_centers();

    auto band = [&](bool horizontal, int fixed_center, int hi) {
        const int n_half = (hi - gap - lo) / half_period;
        for (int i = lo; i < lo + n_half * half_period; ++i) {
            const bool dark = ((i - lo) / half_period) % 2 == 0;
            const std::uint8_t v = dark ? 0 : 255;
            for (int d = -half_thick; d <= half_thick; ++d) {
                if (horizontal) {
                    raster.set(fixed_center + d, i, v);
                } else {
                    raster.set(i, fixed_center + d, v);
                }
            }
        }
    };
    band(true, int(centers[0].n), layout.width - lo + gap);
    band(true, int(centers[2].n), layout.width - lo + gap);
    band(false, int(centers[0].m), layout.height - lo + gap);
    band(false, int(centers[1].m), layout.height - lo + gap);
}

}  // namespace

namespace {

// Band-limited rendering for kFft: the coefficient grid is zero-padded to the
// full data-region resolution and inverse transformed, so the raster carries
// no cell-replication harmonics that could alias onto the slot frequencies
// after camera resampling.
std::optional<std::vector<double>> modulate_fft_upsampled(
    std::span<const std::uint8_t> bits, int rows, int cols, int cell) {
    if (int(bits.size()) > modulation_capacity(rows, cols, ModulationMode::kFft)) {
        return std::nullopt;
    }
    const int out_rows = rows * cell;
    const int out_cols = cols * cell;
    const auto slots = detail::slot_table(rows, cols);
    std::vector<std::complex<double>> freq(size_t(out_rows) * out_cols, 0.0);
    // Cell means sample the field at cell centers; shift the spectrum by half
    // a cell so the decimated block reproduces the coarse-grid samples.
    const double shift = (cell - 1) / 2.0;
    for (size_t i = 0; i < bits.size(); ++i) {
        auto [u, v] = slots[i];
        const double val = bits[i] ? 1.0 : -1.0;
        // Map the folded frequency onto the padded grid.
        const int uu = (u <= rows / 2) ? u : out_rows - (rows - u);
        const int vv = (v <= cols / 2) ? v : out_cols - (cols - v);
        const double fu = (uu <= out_rows / 2) ? uu : uu - out_rows;
        const double fv = (vv <= out_cols / 2) ? vv : vv - out_cols;
        const double phase =
            -2.0 * M_PI * (fu * shift / out_rows + fv * shift / out_cols);
        const std::complex<double> coeff =
            val * std::complex<double>(std::cos(phase), std::sin(phase));
        freq[size_t(uu) * out_cols + vv] = coeff;
        freq[size_t((out_rows - uu) % out_rows) * out_cols +
             (out_cols - vv) % out_cols] = std::conj(coeff);
    }
    detail::dft2d(freq, out_rows, out_cols, /*inverse=*/true);
    double lo = freq[0].real();
    double hi = lo;
    for (const auto& v : freq) {
        lo = std::min(lo, v.real());
        hi = std::max(hi, v.real());
    }
    const double span = hi - lo;
    std::vector<double> block(freq.size(), 128.0);
    if (span > 1e-12) {
        for (size_t i = 0; i < freq.size(); ++i) {
            block[i] = (freq[i].real() - lo) * 255.0 / span;
        }
    }
    return block;
}

}  // namespace

std::optional<FrameRaster> render_frame(const VelocityPayload& payload,
                                        const FrameLayout& layout,
                                        ModulationMode mode) {
    const auto bits = payload_to_bits(payload);
    const auto block =
        modulate(bits, layout.grid_rows, layout.grid_cols, mode);
    if (!block) {
        return std::nullopt;
    }

    FrameRaster raster(layout.width, layout.height, 255);
    const int far_x = layout.width - layout.margin - layout.marker_size;
    const int far_y = layout.height - layout.margin - layout.marker_size;
    draw_marker(raster, layout.margin, layout.margin, layout.marker_size);
    draw_marker(raster, far_x, layout.margin, layout.marker_size);
    draw_marker(raster, layout.margin, far_y, layout.marker_size);
    draw_marker(raster, far_x, far_y, layout.marker_size);
    draw_stripes(raster, layout);

    const int x0 = layout.data_x0();
    const int y0 = layout.data_y0();
    if (mode == ModulationMode::kFft) {
        const auto smooth = modulate_fft_upsampled(
            bits, layout.grid_rows, layout.grid_cols, layout.cell_size);
        const int out_cols = layout.grid_cols * layout.cell_size;
        const int out_rows = layout.grid_rows * layout.cell_size;
        for (int r = 0; r < out_rows; ++r) {
            for (int c = 0; c < out_cols; ++c) {
                const double value = (*smooth)[size_t(r) * out_cols + c];
                raster.set(y0 + r, x0 + c,
                           std::uint8_t(std::clamp(std::lround(value), 0l, 255l)));
            }
        }
        return raster;
    }
    for (int r = 0; r < layout.grid_rows; ++r) {
        for (int c = 0; c < layout.grid_cols; ++c) {
            const double value = (*block)[size_t(r) * layout.grid_cols + c];
            const std::uint8_t v =
                std::uint8_t(std::clamp(std::lround(value), 0l, 255l));
            for (int dy = 0; dy < layout.cell_size; ++dy) {
                for (int dx = 0; dx < layout.cell_size; ++dx) {
                    raster.set(y0 + r * layout.cell_size + dy,
                               x0 + c * layout.cell_size + dx, v);
                }
            }
        }
    }
    return raster;
}

namespace {

Mat3 compose(const Mat3& second, const Mat3& first) {
    Mat3 out{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            for (int k = 0; k < 3; ++k) {
                out[r][c] += second[r][k] * first[k][c];
            }
        }
    }
    const double scale = out[2][2];
    for (auto& row : out) {
        for (auto& v : row) {
            v /= scale;
        }
    }
    return out;
}

}  // namespace

DecodeResult decode_frame(const FrameRaster& raster, const FrameLayout& layout,
                          ModulationMode mode) {
    DecodeResult result;
    const DetectResult detection = detect_markers(raster, layout);
    if (!detection.ok) {
        result.failed_stage = DecodeStage::kDetection;
        return result;
    }
    result.markers = detection.points;
    result.markers_valid = true;

    const std::array<PixelPoint, 4> src = {
        detection.points.a, detection.points.b, detection.points.c,
        detection.points.d};
    auto homography = estimate_homography(src, layout.marker_centers());
    if (!homography) {
        result.failed_stage = DecodeStage::kRectification;
        return result;
    }
    // Second registration pass: marker centers measured on the rectified
    // (near-frontal) image carry far less perspective bias, which matters for
    // the phase-sensitive high-frequency coefficient slots.
    {
        const FrameRaster coarse =
            rectify(raster, *homography, layout.width, layout.height);
        const DetectResult refined = detect_markers(coarse, layout);
        if (refined.ok) {
            const std::array<PixelPoint, 4> src2 = {
                refined.points.a, refined.points.b, refined.points.c,
                refined.points.d};
            const auto correction =
                estimate_homography(src2, layout.marker_centers());
            if (correction) {
                homography = compose(*correction, *homography);
            }
        }
    }
    const FrameRaster flat =
        rectify(raster, *homography, layout.width, layout.height);

    std::vector<double> block(size_t(layout.grid_rows) * layout.grid_cols);
    const int x0 = layout.data_x0();
    const int y0 = layout.data_y0();
    const double cell_area = double(layout.cell_size) * layout.cell_size;
    for (int r = 0; r < layout.grid_rows; ++r) {
        for (int c = 0; c < layout.grid_cols; ++c) {
            double sum = 0.0;
            for (int dy = 0; dy < layout.cell_size; ++dy) {
                for (int dx = 0; dx < layout.cell_size; ++dx) {
                    sum += flat.at(y0 + r * layout.cell_size + dy,
                                   x0 + c * layout.cell_size + dx);
                }
            }
            block[size_t(r) * layout.grid_cols + c] = sum / cell_area;
        }
    }

    const auto bits = demodulate(block, layout.grid_rows, layout.grid_cols,
                                 mode, frame_bit_count());
    const auto payload = bits_to_payload(bits);
    if (!payload) {
        result.failed_stage = DecodeStage::kDemodulation;
        return result;
    }
    result.ok = true;
    result.payload = *payload;
    return result;
}

bool write_pgm(const FrameRaster& raster, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        return false;
    }
    out << "P5\n" << raster.width << " " << raster.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(raster.pixels.data()),
              std::streamsize(raster.pixels.size()));
    return bool(out);
}

std::optional<FrameRaster> read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    std::string magic;
    in >> magic;
    if (magic != "P5") {
        return std::nullopt;
    }
    int width = 0, height = 0, maxval = 0;
    in >> width >> height >> maxval;
    if (!in || width <= 0 || height <= 0 || maxval != 255) {
        return std::nullopt;
    }
    in.get();  // single whitespace before the pixel data
    FrameRaster raster(width, height);
    in.read(reinterpret_cast<char*>(raster.pixels.data()),
            std::streamsize(raster.pixels.size()));
    if (!in) {
        return std::nullopt;
    }
    return raster;
}

double otsu_threshold(std::span<const std::uint8_t> values) {
    std::array<long, 256> hist{};
    for (const auto v : values) {
        ++hist[v];
    }
    const double total = double(values.size());
    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) {
        sum_all += double(i) * hist[i];
    }
    double best_var = -1.0;
    int best_t = 127;
    double w0 = 0.0, sum0 = 0.0;
    for (int t = 0; t < 255; ++t) {
        w0 += hist[t];
        sum0 += double(t) * hist[t];
        if (w0 == 0.0) {
            continue;
        }
        const double w1 = total - w0;
        if (w1 == 0.0) {
            break;
        }
        const double mean0 = sum0 / w0;
        const double mean1 = (sum_all - sum0) / w1;
        const double var = w0 * w1 * (mean0 - mean1) * (mean0 - mean1);
        if (var > best_var) {
            best_var = var;
            best_t = t;
        }
    }
    return double(best_t);
}

}  // namespace oisac
