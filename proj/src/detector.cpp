#include <algorithm>
#include <cmath>
#include <vector>

#include "oisac/codec.hpp"

namespace oisac {

namespace {

struct Candidate {
    double m = 0.0;  // center, continuous coordinates
    double n = 0.0;
    int min_r = 0, max_r = 0, min_c = 0, max_c = 0;
    long area = 0;
    double sum_r = 0.0, sum_c = 0.0;

    int width() const { return max_c - min_c + 1; }
    int height() const { return max_r - min_r + 1; }
};

bool is_dark(const FrameRaster& raster, double thr, int r, int c) {
    return raster.at(r, c) <= thr;
}

// Otsu on the full histogram splits bright screen pixels from everything
// else when the frame sits inside a darker scene background; refine by
// re-running Otsu inside the dark class until it is a minority.
double detection_threshold(const FrameRaster& raster) {
    double thr = otsu_threshold(raster.pixels);
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<std::uint8_t> dark;
        for (const auto v : raster.pixels) {
            if (v <= thr) {
                dark.push_back(v);
            }
        }
        if (dark.size() <= raster.pixels.size() / 2) {
            break;
        }
        thr = otsu_threshold(dark);
    }
    return thr;
}

// Checks the dark-light-dark-light-dark 1:1:3:1:1 finder profile along one
// scanline of the candidate's bounding box.
bool ring_profile_ok(const FrameRaster& raster, double thr,
                     const Candidate& cand, bool horizontal) {
    const int extent = horizontal ? cand.width() : cand.height();
    const double module = extent / 7.0;
    std::vector<std::pair<bool, int>> runs;
    const int fixed = horizontal ? int((cand.min_r + cand.max_r) / 2)
                                 : int((cand.min_c + cand.max_c) / 2);
    const int lo = horizontal ? cand.min_c : cand.min_r;
    const int hi = horizontal ? cand.max_c : cand.max_r;
    for (int i = lo; i <= hi; ++i) {
        const bool dark = horizontal ? is_dark(raster, thr, fixed, i)
                                     : is_dark(raster, thr, i, fixed);
        if (runs.empty() || runs.back().first != dark) {
            runs.emplace_back(dark, 1);
        } else {
            ++runs.back().second;
        }
    }
    // Perspective skew can push the bounding box past the ring on the center
    // scanline; ignore light margins at either end.
    while (!runs.empty() && !runs.front().first) {
        runs.erase(runs.begin());
    }
    while (!runs.empty() && !runs.back().first) {
        runs.pop_back();
    }
    if (runs.size() != 5) {
        return false;
    }
    const bool pattern = runs[0].first && !runs[1].first && runs[2].first &&
                         !runs[3].first && runs[4].first;
    if (!pattern) {
        return false;
    }
    auto outer_ok = [&](int len) {
        return len >= 0.4 * module && len <= 2.2 * module;
    };
    return outer_ok(runs[0].second) && outer_ok(runs[1].second) &&
           outer_ok(runs[3].second) && outer_ok(runs[4].second) &&
           runs[2].second >= 1.8 * module && runs[2].second <= 4.2 * module;
}

std::vector<Candidate> find_candidates(const FrameRaster& raster, double thr) {
    const int w = raster.width;
    const int h = raster.height;
    std::vector<int> label(size_t(w) * h, -1);
    std::vector<Candidate> candidates;
    std::vector<int> stack;

    for (int start = 0; start < w * h; ++start) {
        if (label[start] >= 0 ||
            !is_dark(raster, thr, start / w, start % w)) {
            continue;
        }
        Candidate cand;
        cand.min_r = cand.max_r = start / w;
        cand.min_c = cand.max_c = start % w;
        stack.push_back(start);
        label[start] = 1;
        while (!stack.empty()) {
            const int idx = stack.back();
            stack.pop_back();
            const int r = idx / w;
            const int c = idx % w;
            ++cand.area;
            cand.sum_r += r;
            cand.sum_c += c;
            cand.min_r = std::min(cand.min_r, r);
            cand.max_r = std::max(cand.max_r, r);
            cand.min_c = std::min(cand.min_c, c);
            cand.max_c = std::max(cand.max_c, c);
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    const int nr = r + dr;
                    const int nc = c + dc;
                    if (nr < 0 || nc < 0 || nr >= h || nc >= w) {
                        continue;
                    }
                    const int nidx = nr * w + nc;
                    if (label[nidx] < 0 && is_dark(raster, thr, nr, nc)) {
                        label[nidx] = 1;
                        stack.push_back(nidx);
                    }
                }
            }
        }

        const int bw = cand.width();
        const int bh = cand.height();
        if (std::min(bw, bh) < 8 || std::max(bw, bh) > std::min(w, h) / 2) {
            continue;
        }
        // Perspective compression at 50 degrees squeezes the far-side rings
        // to roughly 3:1.
        const double aspect = double(std::max(bw, bh)) / std::min(bw, bh);
        if (aspect > 3.6) {
            continue;
        }
        const double fill = double(cand.area) / (double(bw) * bh);
        if (fill < 0.2 || fill > 0.95) {
            continue;
        }
        if (!ring_profile_ok(raster, thr, cand, true) ||
            !ring_profile_ok(raster, thr, cand, false)) {
            continue;
        }
        // Ring-pixel centroid: exact on clean frames by symmetry and less
        // biased than the bounding-box center under perspective.
        cand.m = cand.sum_c / cand.area + 0.5;
        cand.n = cand.sum_r / cand.area + 0.5;
        candidates.push_back(cand);
    }
    return candidates;
}

// Verifies the periodic stripe pattern along the segment between two
// candidate centers. Transition counts are projective invariants, so the
// expected counts come straight from the layout. Center estimates carry a
// couple of pixels of perspective bias, so the profile may be sampled at a
// small perpendicular offset from the center line.
bool stripes_verified(const FrameRaster& raster, double thr,
                      const Candidate& c1, const Candidate& c2,
                      const FrameLayout& layout) {
    const double dx = c2.m - c1.m;
    const double dy = c2.n - c1.n;
    const double len = std::hypot(dx, dy);
    if (len < 1.0) {
        return false;
    }
    const double ux = dx / len;
    const double uy = dy / len;
    const double skip1 =
        0.5 * (c1.width() * std::abs(ux) + c1.height() * std::abs(uy)) + 3.0;
    const double skip2 =
        0.5 * (c2.width() * std::abs(ux) + c2.height() * std::abs(uy)) + 3.0;
    if (len - skip1 - skip2 < 8.0) {
        return false;
    }

    auto profile_ok = [&](double offset) {
        const double om = c1.m - uy * offset;  // perpendicular shift
        const double on = c1.n + ux * offset;
        std::vector<double> run_lengths;
        bool prev = false;
        bool have_prev = false;
        double run_start = skip1;
        double t = skip1;
        const double step = 0.5;
        for (; t <= len - skip2; t += step) {
            const int col = int(std::floor(om + ux * t));
            const int row = int(std::floor(on + uy * t));
            if (col < 0 || row < 0 || col >= raster.width ||
                row >= raster.height) {
                return false;
            }
            const bool dark = is_dark(raster, thr, row, col);
            if (have_prev && dark != prev) {
                run_lengths.push_back(t - run_start);
                run_start = t;
            }
            prev = dark;
            have_prev = true;
        }
        run_lengths.push_back(t - run_start);

        // The skip margins eat a bbox-dependent slice of the stripe span, so
        // the asymmetric band tolerates undercounting more than overcounting.
        const int count = int(run_lengths.size());
        const int expect_h = layout.stripe_runs_horizontal();
        const int expect_v = layout.stripe_runs_vertical();
        auto in_band = [count](int expect) {
            return count >= 0.55 * expect && count <= 1.35 * expect;
        };
        if (!in_band(expect_h) && !in_band(expect_v)) {
            return false;
        }
        if (count < 8) {
            return false;
        }
        // Interior runs stay near-uniform under perspective; random texture
        // does not. Short runs carry +-1 sample of quantization, so compare
        // with an additive allowance.
        double lo = run_lengths[1];
        double hi = run_lengths[1];
        for (int i = 1; i + 1 < count; ++i) {
            lo = std::min(lo, run_lengths[i]);
            hi = std::max(hi, run_lengths[i]);
        }
        return hi <= 2.5 * (lo + 1.0);
    };

    for (const double offset : {0.0, -2.0, 2.0, -4.0, 4.0}) {
        if (profile_ok(offset)) {
            return true;
        }
    }
    return false;
}

struct Quad {
    std::array<int, 4> cycle{};  // candidate indices in angular order
};

Quad order_by_angle(const std::vector<Candidate>& cands,
                    const std::array<int, 4>& subset) {
    double cm = 0.0, cn = 0.0;
    for (const int i : subset) {
        cm += cands[i].m / 4.0;
        cn += cands[i].n / 4.0;
    }
    std::array<std::pair<double, int>, 4> order;
    for (int k = 0; k < 4; ++k) {
        const int i = subset[k];
        order[k] = {std::atan2(cands[i].n - cn, cands[i].m - cm), i};
    }
    std::sort(order.begin(), order.end());
    Quad quad;
    for (int k = 0; k < 4; ++k) {
        quad.cycle[k] = order[k].second;
    }
    return quad;
}

}  // namespace

DetectResult detect_markers(const FrameRaster& raster,
                            const FrameLayout& layout) {
    DetectResult result;
    const double thr = detection_threshold(raster);
    std::vector<Candidate> cands = find_candidates(raster, thr);

    // Merge near-duplicate centers (e.g. a ring split by corruption).
    std::sort(cands.begin(), cands.end(),
              [](const Candidate& a, const Candidate& b) { return a.area > b.area; });
    std::vector<Candidate> merged;
    for (const auto& cand : cands) {
        const bool duplicate = std::any_of(
            merged.begin(), merged.end(), [&](const Candidate& kept) {
                const double d = std::hypot(kept.m - cand.m, kept.n - cand.n);
                return d < 0.5 * std::min(kept.width(), kept.height());
            });
        if (!duplicate) {
            merged.push_back(cand);
        }
    }
    if (merged.size() > 12) {
        merged.resize(12);
    }
    if (merged.size() < 4) {
        result.error = DetectError::kTooFewCandidates;
        return result;
    }

    const int n = int(merged.size());
    std::vector<std::vector<bool>> verified(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            verified[i][j] = verified[j][i] =
                stripes_verified(raster, thr, merged[i], merged[j], layout);
        }
    }

    std::vector<Quad> winners;
    std::array<int, 4> subset{};
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            for (int c = b + 1; c < n; ++c) {
                for (int d = c + 1; d < n; ++d) {
                    subset = {a, b, c, d};
                    const Quad quad = order_by_angle(merged, subset);
                    bool all_edges = true;
                    for (int k = 0; k < 4; ++k) {
                        if (!verified[quad.cycle[k]][quad.cycle[(k + 1) % 4]]) {
                            all_edges = false;
                            break;
                        }
                    }
                    if (all_edges) {
                        winners.push_back(quad);
                    }
                }
            }
        }
    }
    if (winners.empty()) {
        result.error = DetectError::kStripeMismatch;
        return result;
    }
    if (winners.size() > 1) {
        result.error = DetectError::kAmbiguous;
        return result;
    }

    // Anchor on the stripe-verified top edge, then walk the cycle.
    const Quad& quad = winners.front();
    int top_edge = 0;
    double best_n = 1e300;
    for (int k = 0; k < 4; ++k) {
        const double mean_n = 0.5 * (merged[quad.cycle[k]].n +
                                     merged[quad.cycle[(k + 1) % 4]].n);
        if (mean_n < best_n) {
            best_n = mean_n;
            top_edge = k;
        }
    }
    int ia = quad.cycle[top_edge];
    int ib = quad.cycle[(top_edge + 1) % 4];
    int id = quad.cycle[(top_edge + 2) % 4];
    int ic = quad.cycle[(top_edge + 3) % 4];
    if (merged[ia].m > merged[ib].m) {
        std::swap(ia, ib);
        std::swap(ic, id);
    }
    result.ok = true;
    result.points.a = {merged[ia].m, merged[ia].n};
    result.points.b = {merged[ib].m, merged[ib].n};
    result.points.c = {merged[ic].m, merged[ic].n};
    result.points.d = {merged[id].m, merged[id].n};
    return result;
}

}  // namespace oisac
