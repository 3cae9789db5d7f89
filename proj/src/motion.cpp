#include "stitchstab/motion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#include <Eigen/Dense>

namespace stitchstab {

Pyramid build_pyramid(const LumaPlane& luma, int levels) {
    if (levels < 1) throw std::invalid_argument("build_pyramid: levels must be >= 1");
    if (luma.width() < kMinPyramidSide || luma.height() < kMinPyramidSide) {
        throw MotionError("build_pyramid: frame smaller than 32x32");
    }
    Pyramid p;
    p.levels.push_back(luma);
    while (static_cast<int>(p.levels.size()) < levels) {
        const LumaPlane& last = p.levels.back();
        if (last.width() / 2 < kMinPyramidSide || last.height() / 2 < kMinPyramidSide) break;
        p.levels.push_back(downsample_box(last));
    }
    return p;
}

Plane<float> harris_response(const LumaPlane& img, double k) {
    const int w = img.width();
    const int h = img.height();
    constexpr int r = 2;  // 5x5 box

    // Gradient products, summed horizontally over the box; rows 0 and h-1 stay zero.
    Plane<float> hxx(w, h, 0.0f), hyy(w, h, 0.0f), hxy(w, h, 0.0f);
    std::vector<float> pxx(w, 0.0f), pyy(w, 0.0f), pxy(w, 0.0f);
    for (int y = 1; y < h - 1; ++y) {
        const auto rm = img.row(y - 1);
        const auto r0 = img.row(y);
        const auto rp = img.row(y + 1);
        for (int x = 1; x < w - 1; ++x) {
            const float gx = static_cast<float>((rm[x + 1] + 2 * r0[x + 1] + rp[x + 1]) - (rm[x - 1] + 2 * r0[x - 1] + rp[x - 1]));
            const float gy = static_cast<float>((rp[x - 1] + 2 * rp[x] + rp[x + 1]) - (rm[x - 1] + 2 * rm[x] + rm[x + 1]));
            pxx[x] = gx * gx;
            pyy[x] = gy * gy;
            pxy[x] = gx * gy;
        }
        auto dxx = hxx.row(y), dyy = hyy.row(y), dxy = hxy.row(y);
        for (int x = r; x < w - r; ++x) {
            dxx[x] = pxx[x - 2] + pxx[x - 1] + pxx[x] + pxx[x + 1] + pxx[x + 2];
            dyy[x] = pyy[x - 2] + pyy[x - 1] + pyy[x] + pyy[x + 1] + pyy[x + 2];
            dxy[x] = pxy[x - 2] + pxy[x - 1] + pxy[x] + pxy[x + 1] + pxy[x + 2];
        }
    }

    Plane<float> resp(w, h, 0.0f);
    const float kf = static_cast<float>(k);
    auto vsum = [](const Plane<float>& p, int y, int x) {
        return p.at(x, y - 2) + p.at(x, y - 1) + p.at(x, y) + p.at(x, y + 1) + p.at(x, y + 2);
    };
    for (int y = r + 1; y < h - r - 1; ++y) {
        auto out = resp.row(y);
        for (int x = r + 1; x < w - r - 1; ++x) {
            const float a = vsum(hxx, y, x), b = vsum(hyy, y, x), c = vsum(hxy, y, x);
            const float tr = a + b;
            out[x] = a * b - c * c - kf * tr * tr;
        }
    }
    return resp;
}

std::vector<Point2> detect_features(const LumaPlane& level, int max_points, const MotionConfig& cfg, int margin) {
    if (level.width() < kMinPyramidSide || level.height() < kMinPyramidSide) {
        throw std::invalid_argument("detect_features: plane smaller than 32x32");
    }
    if (max_points <= 0) return {};
    if (margin < 0) margin = std::max(cfg.block / 2, 4) + 1;
    const int w = level.width();
    const int h = level.height();
    const int x0 = margin, x1 = w - margin;
    const int y0 = margin, y1 = h - margin;
    if (x1 <= x0 || y1 <= y0) return {};

    const Plane<float> resp = harris_response(level, cfg.harris_k);
    float peak = 0.0f;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) peak = std::max(peak, resp.at(x, y));
    const double threshold = std::max(cfg.absolute_threshold, cfg.relative_threshold * peak);
    if (peak <= threshold) return {};

    const int grid = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(max_points)))));
    const int cell_w = std::max(1, (x1 - x0 + grid - 1) / grid);
    const int cell_h = std::max(1, (y1 - y0 + grid - 1) / grid);

    struct Candidate {
        float response;
        int order;
        Point2 p;
    };
    std::vector<Candidate> found;
    int order = 0;
    for (int cy = y0; cy < y1; cy += cell_h) {
        for (int cx = x0; cx < x1; cx += cell_w) {
            float best = -std::numeric_limits<float>::infinity();
            int bx = -1, by = -1;
            for (int y = cy; y < std::min(cy + cell_h, y1); ++y) {
                for (int x = cx; x < std::min(cx + cell_w, x1); ++x) {
                    if (resp.at(x, y) > best) {
                        best = resp.at(x, y);
                        bx = x;
                        by = y;
                    }
                }
            }
            if (bx < 0 || best <= threshold) continue;
            bool local_max = true;
            for (int dy = -1; dy <= 1 && local_max; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    if ((dx || dy) && resp.at(bx + dx, by + dy) > best) {
                        local_max = false;
                        break;
                    }
            if (local_max) found.push_back({best, order++, {static_cast<double>(bx), static_cast<double>(by)}});
        }
    }
    std::stable_sort(found.begin(), found.end(), [](const Candidate& a, const Candidate& b) { return a.response > b.response; });
    if (static_cast<int>(found.size()) > max_points) found.resize(max_points);
    std::vector<Point2> out;
    out.reserve(found.size());
    for (const auto& c : found) out.push_back(c.p);
    return out;
}

PointMatch track_block(const LumaPlane& prev, const LumaPlane& curr, Point2 p, Point2 init, int radius, int block) {
    const int half = block / 2;
    const int px = static_cast<int>(std::lround(p.x));
    const int py = static_cast<int>(std::lround(p.y));
    if (px - half < 0 || py - half < 0 || px - half + block > prev.width() || py - half + block > prev.height()) {
        throw std::invalid_argument("track_block: block window outside previous plane");
    }
    const int cx = px + static_cast<int>(std::lround(init.x));
    const int cy = py + static_cast<int>(std::lround(init.y));

    long best_sad = std::numeric_limits<long>::max();
    int best_d2 = 0, best_dx = 0, best_dy = 0;
    bool found = false;
    for (int dy = -radius; dy <= radius; ++dy) {
        const int qy = cy + dy - half;
        if (qy < 0 || qy + block > curr.height()) continue;
        for (int dx = -radius; dx <= radius; ++dx) {
            const int qx = cx + dx - half;
            if (qx < 0 || qx + block > curr.width()) continue;
            long sad = 0;
            for (int j = 0; j < block; ++j) {
                const std::uint8_t* a = prev.row(py - half + j).data() + (px - half);
                const std::uint8_t* b = curr.row(qy + j).data() + qx;
                int row_sad = 0;
                for (int i = 0; i < block; ++i) row_sad += std::abs(static_cast<int>(a[i]) - static_cast<int>(b[i]));
                sad += row_sad;
                if (sad > best_sad) break;
            }
            const int d2 = dx * dx + dy * dy;
            if (!found || sad < best_sad || (sad == best_sad && d2 < best_d2)) {
                found = true;
                best_sad = sad;
                best_d2 = d2;
                best_dx = dx;
                best_dy = dy;
            }
        }
    }
    if (!found) throw MotionError("track_block: search window entirely outside current plane");
    return {{static_cast<double>(px), static_cast<double>(py)},
            {static_cast<double>(cx + best_dx), static_cast<double>(cy + best_dy)},
            best_sad};
}

namespace {

// Similarity that moves the centroid to the origin and scales to unit RMS distance.
Homography normalizing_transform(const std::vector<Point2>& pts) {
    double mx = 0, my = 0;
    for (const auto& p : pts) {
        mx += p.x;
        my += p.y;
    }
    mx /= pts.size();
    my /= pts.size();
    double ss = 0;
    for (const auto& p : pts) ss += (p.x - mx) * (p.x - mx) + (p.y - my) * (p.y - my);
    const double rms = std::sqrt(ss / pts.size());
    if (!(rms > 1e-12)) throw MotionError("fit_homography: degenerate point configuration");
    const double s = 1.0 / rms;
    return Homography::from_rows({s, 0, -s * mx, 0, s, -s * my, 0, 0, 1});
}

}  // namespace

Homography fit_homography(const std::vector<PointMatch>& matches) {
    if (matches.size() < 4) throw MotionError("fit_homography: need at least 4 matches");
    std::vector<Point2> src, dst;
    src.reserve(matches.size());
    dst.reserve(matches.size());
    for (const auto& m : matches) {
        src.push_back(m.src);
        dst.push_back(m.dst);
    }
    const Homography ts = normalizing_transform(src);
    const Homography td = normalizing_transform(dst);

    const int n = static_cast<int>(matches.size());
    Eigen::MatrixXd a(2 * n, 8);
    Eigen::VectorXd b(2 * n);
    for (int i = 0; i < n; ++i) {
        const Point2 s = apply(ts, src[i]);
        const Point2 d = apply(td, dst[i]);
        a.row(2 * i) << s.x, s.y, 1, 0, 0, 0, -s.x * d.x, -s.y * d.x;
        b(2 * i) = d.x;
        a.row(2 * i + 1) << 0, 0, 0, s.x, s.y, 1, -s.x * d.y, -s.y * d.y;
        b(2 * i + 1) = d.y;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-9);
    if (qr.rank() < 8) throw MotionError("fit_homography: rank-deficient system");
    const Eigen::VectorXd h = qr.solve(b);
    if (!h.allFinite()) throw MotionError("fit_homography: non-finite solution");

    const Homography hn = Homography::from_rows({h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0});
    return normalize(multiply(multiply(invert(td), hn), ts));
}

Homography upscale_level(const Homography& coarse) {
    const auto a = Homography::from_rows({2, 0, 0.5, 0, 2, 0.5, 0, 0, 1});
    const auto a_inv = Homography::from_rows({0.5, 0, -0.25, 0, 0.5, -0.25, 0, 0, 1});
    return normalize(multiply(multiply(a, coarse), a_inv));
}

MotionEstimate calc_motion(const Pyramid& prev, const Pyramid& curr, const MotionConfig& cfg) {
    if (prev.levels.empty() || curr.levels.empty() || !(prev.levels[0].dims() == curr.levels[0].dims())) {
        throw std::invalid_argument("calc_motion: frames must have equal dimensions");
    }
    const int nlev = static_cast<int>(std::min(prev.levels.size(), curr.levels.size()));
    MotionEstimate est;
    est.confident = false;
    Homography h = Homography::identity();
    for (int level = nlev - 1; level >= 0; --level) {
        if (level != nlev - 1) h = upscale_level(h);
        const LumaPlane& a = prev.levels[level];
        const LumaPlane& b = curr.levels[level];
        const auto features = detect_features(a, cfg.max_features, cfg);

        std::vector<PointMatch> matches;
        matches.reserve(features.size());
        for (const Point2& p : features) {
            Point2 q;
            try {
                q = apply(h, p);
            } catch (const GeometryError&) {
                continue;
            }
            const Point2 init{std::round(q.x - p.x), std::round(q.y - p.y)};
            try {
                matches.push_back(track_block(a, b, p, init, cfg.radius, cfg.block));
            } catch (const MotionError&) {
            }
        }
        if (matches.size() >= 4) {
            std::vector<long> sads;
            sads.reserve(matches.size());
            for (const auto& m : matches) sads.push_back(m.sad);
            std::nth_element(sads.begin(), sads.begin() + sads.size() / 2, sads.end());
            const double limit = cfg.trim_factor * static_cast<double>(sads[sads.size() / 2]);
            std::erase_if(matches, [&](const PointMatch& m) { return static_cast<double>(m.sad) > limit; });
        }
        try {
            h = fit_homography(matches);
            est.confident = true;
            est.matches = static_cast<int>(matches.size());
        } catch (const MotionError&) {
            // keep the propagated estimate from the coarser level
        }
    }
    est.m = est.confident ? h : Homography::identity();
    return est;
}

MotionEstimate calc_motion(const Frame& prev, const Frame& curr, const MotionConfig& cfg) {
    if (!(prev.dims() == curr.dims())) throw std::invalid_argument("calc_motion: frames must have equal dimensions");
    return calc_motion(build_pyramid(prev.luma, cfg.levels), build_pyramid(curr.luma, cfg.levels), cfg);
}

}  // namespace stitchstab
