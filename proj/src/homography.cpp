#include <Eigen/Dense>
#include <cmath>

#include "oisac/codec.hpp"

namespace oisac {

namespace {
constexpr double kConditionLimit = 1e10;
}  // namespace

std::optional<Mat3> estimate_homography(const std::array<PixelPoint, 4>& src,
                                        const std::array<PixelPoint, 4>& dst) {
    Eigen::Matrix<double, 8, 8> a;
    Eigen::Matrix<double, 8, 1> b;
    for (int i = 0; i < 4; ++i) {
        const double x = src[i].m;
        const double y = src[i].n;
        const double u = dst[i].m;
        const double v = dst[i].n;
        a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
        a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
        b(2 * i) = u;
        b(2 * i + 1) = v;
    }
    Eigen::JacobiSVD<Eigen::Matrix<double, 8, 8>> svd(
        a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(7) <= 0.0 || sv(0) / sv(7) > kConditionLimit) {
        return std::nullopt;
    }
    const Eigen::Matrix<double, 8, 1> h = svd.solve(b);
    return Mat3{{{h(0), h(1), h(2)}, {h(3), h(4), h(5)}, {h(6), h(7), 1.0}}};
}

PixelPoint apply_homography(const Mat3& h, const PixelPoint& p) {
    const double w = h[2][0] * p.m + h[2][1] * p.n + h[2][2];
    return {(h[0][0] * p.m + h[0][1] * p.n + h[0][2]) / w,
            (h[1][0] * p.m + h[1][1] * p.n + h[1][2]) / w};
}

std::optional<Mat3> invert_homography(const Mat3& h) {
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            m(r, c) = h[r][c];
        }
    }
    if (std::abs(m.determinant()) < 1e-15) {
        return std::nullopt;
    }
    const Eigen::Matrix3d inv = m.inverse();
    Mat3 out;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            out[r][c] = inv(r, c) / inv(2, 2);
        }
    }
    return out;
}

namespace {

double sample_bilinear(const FrameRaster& src, double m, double n,
                       std::uint8_t background) {
    // Continuous coordinates: pixel (r, c) covers [c, c+1) x [r, r+1) with
    // its sample at the center.
    const double gx = m - 0.5;
    const double gy = n - 0.5;
    if (gx < -1.0 || gy < -1.0 || gx > src.width || gy > src.height) {
        return background;
    }
    const int j0 = int(std::floor(gx));
    const int i0 = int(std::floor(gy));
    const double fx = gx - j0;
    const double fy = gy - i0;
    auto fetch = [&](int i, int j) -> double {
        if (i < 0 || j < 0 || i >= src.height || j >= src.width) {
            return background;
        }
        return src.at(i, j);
    };
    const double top = fetch(i0, j0) * (1.0 - fx) + fetch(i0, j0 + 1) * fx;
    const double bot = fetch(i0 + 1, j0) * (1.0 - fx) + fetch(i0 + 1, j0 + 1) * fx;
    return top * (1.0 - fy) + bot * fy;
}

}  // namespace

FrameRaster rectify(const FrameRaster& src, const Mat3& h_src_to_dst,
                    int out_w, int out_h, std::uint8_t background) {
    FrameRaster out(out_w, out_h, background);
    const auto inv = invert_homography(h_src_to_dst);
    if (!inv) {
        return out;
    }
    for (int r = 0; r < out_h; ++r) {
        for (int c = 0; c < out_w; ++c) {
            const PixelPoint p =
                apply_homography(*inv, {c + 0.5, r + 0.5});
            const double v = sample_bilinear(src, p.m, p.n, background);
            out.set(r, c, std::uint8_t(std::clamp(std::lround(v), 0l, 255l)));
        }
    }
    return out;
}

}  // namespace oisac
