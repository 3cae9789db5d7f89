#include "stitchstab/seam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>

namespace stitchstab {

namespace {

constexpr double kValidTol = 1e-6;

struct Mapper {
    const Homography& h;
    double sw, sh;  // source width/height - 1

    // Returns false when the source coordinate is behind the camera or outside the frame.
    bool map(double x, double y, Point2& out) const {
        const double w = h(2, 0) * x + h(2, 1) * y + h(2, 2);
        if (!(w > 1e-12)) return false;
        out.x = (h(0, 0) * x + h(0, 1) * y + h(0, 2)) / w;
        out.y = (h(1, 0) * x + h(1, 1) * y + h(1, 2)) / w;
        return out.x >= -kValidTol && out.x <= sw + kValidTol && out.y >= -kValidTol && out.y <= sh + kValidTol;
    }
};

std::uint8_t to_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

// Bilinear sample rounded to 8 bits; the interior skips the clamping in sample_bilinear.
std::uint8_t sample_u8(const LumaPlane& p, double x, double y) {
    const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
    if (x < 0 || y < 0 || x0 + 1 >= p.width() || y0 + 1 >= p.height()) return to_u8(sample_bilinear(p, x, y));
    const double fx = x - x0, fy = y - y0;
    const std::uint8_t* r0 = p.row(y0).data() + x0;
    const std::uint8_t* r1 = p.row(y0 + 1).data() + x0;
    const double top = r0[0] + fx * (r0[1] - r0[0]);
    const double bot = r1[0] + fx * (r1[1] - r1[0]);
    const double v = top + fy * (bot - top);
    return static_cast<std::uint8_t>(std::min(255, static_cast<int>(v + 0.5)));
}

}  // namespace

FrameDims quarter_dims(FrameDims full) { return {(full.width + 3) / 4, (full.height + 3) / 4}; }

LumaPlane quarter_plane(const LumaPlane& luma) { return downsample_box(downsample_box(luma)); }

WarpedImage warp(const Frame& src, const Homography& h, FrameDims out, WarpScale scale) {
    if (scale == WarpScale::Quarter) return warp_quarter(quarter_plane(src.luma), src.dims(), h, out);
    WarpedImage img;
    img.scale = WarpScale::Full;
    img.luma = LumaPlane(out.width, out.height, 0);
    img.valid = Mask(out.width, out.height, 0);
    const Mapper mp{h, src.width() - 1.0, src.height() - 1.0};
    for (int y = 0; y < out.height; ++y) {
        auto lrow = img.luma.row(y);
        auto vrow = img.valid.row(y);
        for (int x = 0; x < out.width; ++x) {
            Point2 u;
            if (!mp.map(x, y, u)) continue;
            vrow[x] = 1;
            lrow[x] = sample_u8(src.luma, u.x, u.y);
        }
    }
    if (src.has_chroma()) {
        const FrameDims c = chroma_dims(out);
        img.cb = LumaPlane(c.width, c.height, 128);
        img.cr = LumaPlane(c.width, c.height, 128);
        for (int j = 0; j < c.height; ++j) {
            for (int i = 0; i < c.width; ++i) {
                if (!img.valid.at(2 * i, 2 * j)) continue;
                Point2 u;
                mp.map(2 * i + 0.5, 2 * j + 0.5, u);
                const double cx = (u.x - 0.5) / 2, cy = (u.y - 0.5) / 2;
                img.cb->at(i, j) = sample_u8(*src.cb, cx, cy);
                img.cr->at(i, j) = sample_u8(*src.cr, cx, cy);
            }
        }
    }
    return img;
}

WarpedImage warp_quarter(const LumaPlane& src_quarter, FrameDims src_dims, const Homography& h, FrameDims out) {
    const FrameDims q = quarter_dims(out);
    WarpedImage img;
    img.scale = WarpScale::Quarter;
    img.luma = LumaPlane(q.width, q.height, 0);
    img.valid = Mask(q.width, q.height, 0);
    const Mapper mp{h, src_dims.width - 1.0, src_dims.height - 1.0};
    for (int j = 0; j < q.height; ++j) {
        const int y0 = 4 * j, y1 = std::min(4 * j + 3, out.height - 1);
        for (int i = 0; i < q.width; ++i) {
            const int x0 = 4 * i, x1 = std::min(4 * i + 3, out.width - 1);
            Point2 u;
            if (!mp.map(x0, y0, u) || !mp.map(x1, y0, u) || !mp.map(x0, y1, u) || !mp.map(x1, y1, u)) continue;
            mp.map(0.5 * (x0 + x1), 0.5 * (y0 + y1), u);
            img.valid.at(i, j) = 1;
            if (!src_quarter.empty()) {
                img.luma.at(i, j) = to_u8(sample_bilinear(src_quarter, (u.x - 1.5) / 4, (u.y - 1.5) / 4));
            }
        }
    }
    return img;
}

Mask deficit_mask(const WarpedImage& img) {
    Mask m(img.valid.width(), img.valid.height());
    for (size_t i = 0; i < m.data().size(); ++i) m.data()[i] = img.valid.data()[i] ? 0 : 1;
    return m;
}

Mask dilate8(const Mask& m) {
    const int w = m.width(), h = m.height();
    Mask out(w, h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!m.at(x, y)) continue;
            for (int yy = std::max(0, y - 1); yy <= std::min(h - 1, y + 1); ++yy)
                for (int xx = std::max(0, x - 1); xx <= std::min(w - 1, x + 1); ++xx) out.at(xx, yy) = 1;
        }
    }
    return out;
}

long count_set(const Mask& m) { return std::count_if(m.data().begin(), m.data().end(), [](auto v) { return v != 0; }); }

const char* to_string(DeficitType t) {
    switch (t) {
        case DeficitType::None: return "none";
        case DeficitType::I: return "I";
        case DeficitType::L: return "L";
        case DeficitType::C: return "C";
        case DeficitType::O: return "O";
    }
    return "?";
}

bool DeficitShape::contains(int x, int y) const {
    const int w = dims.width, h = dims.height;
    if (corner_rect) {
        const bool in_x = (corner == 0 || corner == 3) ? x < rect_w : x >= w - rect_w;
        const bool in_y = (corner == 0 || corner == 1) ? y < rect_h : y >= h - rect_h;
        return in_x && in_y;
    }
    return y < bands[kTop] || x >= w - bands[kRight] || y >= h - bands[kBottom] || x < bands[kLeft];
}

Mask DeficitShape::region() const {
    Mask m(dims.width, dims.height, 0);
    for (int y = 0; y < dims.height; ++y)
        for (int x = 0; x < dims.width; ++x) m.at(x, y) = contains(x, y) ? 1 : 0;
    return m;
}

namespace {

struct Profile {
    int w, h;
    std::vector<int> row_min, row_max;  // x range per row; row_min = w when empty, row_max = -1
    std::vector<int> col_min, col_max;
    int touched = 0;
    long count = 0;
};

Profile profile(const Mask& m) {
    Profile p{m.width(), m.height(), {}, {}, {}, {}};
    p.row_min.assign(p.h, p.w);
    p.row_max.assign(p.h, -1);
    p.col_min.assign(p.w, p.h);
    p.col_max.assign(p.w, -1);
    for (int y = 0; y < p.h; ++y) {
        for (int x = 0; x < p.w; ++x) {
            if (!m.at(x, y)) continue;
            ++p.count;
            p.row_min[y] = std::min(p.row_min[y], x);
            p.row_max[y] = std::max(p.row_max[y], x);
            p.col_min[x] = std::min(p.col_min[x], y);
            p.col_max[x] = std::max(p.col_max[x], y);
            if (y == 0) p.touched |= 1 << kTop;
            if (x == p.w - 1) p.touched |= 1 << kRight;
            if (y == p.h - 1) p.touched |= 1 << kBottom;
            if (x == 0) p.touched |= 1 << kLeft;
        }
    }
    return p;
}

long band_area(int w, int h, const std::array<int, 4>& b) {
    const long iw = std::max(0, w - b[kLeft] - b[kRight]);
    const long ih = std::max(0, h - b[kTop] - b[kBottom]);
    return static_cast<long>(w) * h - iw * ih;
}

DeficitShape band_shape(DeficitType t, const Profile& p, std::array<int, 4> b) {
    DeficitShape s;
    s.type = t;
    s.dims = {p.w, p.h};
    s.bands = b;
    s.area = band_area(p.w, p.h, b);
    s.touched = p.touched;
    return s;
}

bool interior_nonempty(const Profile& p, const std::array<int, 4>& b) {
    return b[kLeft] + b[kRight] < p.w && b[kTop] + b[kBottom] < p.h;
}

}  // namespace

std::vector<DeficitShape> deficit_candidates(const Mask& mask) {
    const Profile p = profile(mask);
    std::vector<DeficitShape> out;
    if (p.count == 0) return out;
    const int w = p.w, h = p.h;

    int max_x = -1, min_x = w, max_y = -1, min_y = h;
    for (int y = 0; y < h; ++y) {
        if (p.row_max[y] < 0) continue;
        max_x = std::max(max_x, p.row_max[y]);
        min_x = std::min(min_x, p.row_min[y]);
        max_y = std::max(max_y, y);
        min_y = std::min(min_y, y);
    }

    auto push = [&](DeficitType t, std::array<int, 4> b) {
        if (interior_nonempty(p, b)) out.push_back(band_shape(t, p, b));
    };

    // I: one band.
    push(DeficitType::I, {max_y + 1, 0, 0, 0});
    push(DeficitType::I, {0, w - min_x, 0, 0});
    push(DeficitType::I, {0, 0, h - min_y, 0});
    push(DeficitType::I, {0, 0, 0, max_x + 1});

    // L as a corner rectangle.
    const int rect_dims[4][2] = {
        {max_x + 1, max_y + 1}, {w - min_x, max_y + 1}, {w - min_x, h - min_y}, {max_x + 1, h - min_y}};
    for (int c = 0; c < 4; ++c) {
        const int a = rect_dims[c][0], b = rect_dims[c][1];
        if (a >= w || b >= h) continue;
        DeficitShape s;
        s.type = DeficitType::L;
        s.dims = {w, h};
        s.corner_rect = true;
        s.corner = c;
        s.rect_w = a;
        s.rect_h = b;
        s.area = static_cast<long>(a) * b;
        s.touched = p.touched;
        out.push_back(s);
    }

    // Row-wise requirements: for a horizontal band pair the side band must reach
    // x <= row_max (left) or x >= row_min (right) for rows not covered vertically.
    auto need_left = [&](int y) { return p.row_max[y] + 1; };
    auto need_right = [&](int y) { return p.row_max[y] < 0 ? 0 : w - p.row_min[y]; };
    auto need_top = [&](int x) { return p.col_max[x] + 1; };
    auto need_bottom = [&](int x) { return p.col_max[x] < 0 ? 0 : h - p.col_min[x]; };

    // L as two adjacent bands, both at least one pixel deep.
    auto best_of = [&](DeficitType t, const std::vector<std::array<int, 4>>& options) {
        std::optional<DeficitShape> best;
        for (const auto& b : options) {
            if (!interior_nonempty(p, b)) continue;
            const long a = band_area(w, h, b);
            if (!best || a < best->area) best = band_shape(t, p, b);
        }
        if (best) out.push_back(*best);
    };
    {
        // Corners in order TL, TR, BR, BL. Vertical band depth dv walks the rows.
        for (int c = 0; c < 4; ++c) {
            const bool top = (c == 0 || c == 1);
            const bool left = (c == 0 || c == 3);
            std::vector<std::array<int, 4>> options;
            // Rows not covered by the horizontal band of depth d: top band covers y < d,
            // bottom band covers y >= h - d.
            std::vector<int> need(h);
            for (int y = 0; y < h; ++y) need[y] = left ? need_left(y) : need_right(y);
            // suffix (top) or prefix (bottom) maxima of the side requirement
            std::vector<int> acc(h + 1, 0);
            if (top) {
                for (int y = h - 1; y >= 0; --y) acc[y] = std::max(acc[y + 1], need[y]);
            } else {
                for (int y = 0; y < h; ++y) acc[y + 1] = std::max(acc[y], need[y]);
            }
            for (int d = 1; d < h; ++d) {
                const int side = top ? acc[d] : acc[h - d];
                if (side < 1) continue;
                std::array<int, 4> b{};
                b[top ? kTop : kBottom] = d;
                b[left ? kLeft : kRight] = side;
                options.push_back(b);
            }
            best_of(DeficitType::L, options);
        }
    }

    // C: three bands, each at least one pixel deep. Ordered by the open edge.
    {
        // Open top or bottom: left and right bands, the horizontal band covers the middle columns.
        auto c_vertical_open = [&](bool open_top) {
            std::vector<std::array<int, 4>> options;
            for (int dl = 1; dl < w - 1; ++dl) {
                int run = 0;
                for (int end = dl + 1; end <= w - 1; ++end) {  // middle columns [dl, end)
                    const int x = end - 1;
                    run = std::max(run, open_top ? need_bottom(x) : need_top(x));
                    const int dr = w - end;
                    if (run < 1) continue;
                    // Remaining columns >= end must be covered by the right band: dr = w - end covers them.
                    std::array<int, 4> b{};
                    b[kLeft] = dl;
                    b[kRight] = dr;
                    b[open_top ? kBottom : kTop] = run;
                    options.push_back(b);
                }
            }
            best_of(DeficitType::C, options);
        };
        auto c_horizontal_open = [&](bool open_left) {
            std::vector<std::array<int, 4>> options;
            for (int dt = 1; dt < h - 1; ++dt) {
                int run = 0;
                for (int end = dt + 1; end <= h - 1; ++end) {
                    const int y = end - 1;
                    run = std::max(run, open_left ? need_right(y) : need_left(y));
                    const int db = h - end;
                    if (run < 1) continue;
                    std::array<int, 4> b{};
                    b[kTop] = dt;
                    b[kBottom] = db;
                    b[open_left ? kRight : kLeft] = run;
                    options.push_back(b);
                }
            }
            best_of(DeficitType::C, options);
        };
        c_vertical_open(true);    // open top
        c_horizontal_open(false); // open right
        c_vertical_open(false);   // open bottom
        c_horizontal_open(true);  // open left
    }

    // O: two opposite bands (closed seam needed, never stitched).
    {
        std::vector<std::array<int, 4>> options;
        for (int dt = 1; dt < h - 1; ++dt) {
            int first = -1;
            for (int y = dt; y < h; ++y)
                if (p.row_max[y] >= 0) {
                    first = y;
                    break;
                }
            if (first < 0) continue;
            options.push_back({dt, 0, h - first, 0});
        }
        best_of(DeficitType::O, options);
        options.clear();
        for (int dl = 1; dl < w - 1; ++dl) {
            int first = -1;
            for (int x = dl; x < w; ++x)
                if (p.col_max[x] >= 0) {
                    first = x;
                    break;
                }
            if (first < 0) continue;
            options.push_back({0, w - first, 0, dl});
        }
        best_of(DeficitType::O, options);
    }
    return out;
}

DeficitShape classify_deficit(const Mask& mask) {
    const auto cands = deficit_candidates(mask);
    if (count_set(mask) == 0) {
        DeficitShape s;
        s.dims = mask.dims();
        return s;
    }
    if (cands.empty()) {
        DeficitShape s;
        s.type = DeficitType::O;
        s.dims = mask.dims();
        s.area = static_cast<long>(mask.width()) * mask.height();
        s.touched = profile(mask).touched;
        return s;
    }
    const DeficitShape* best = &cands.front();
    for (const auto& c : cands)
        if (c.area < best->area) best = &c;
    return *best;
}

SeamGraph::SeamGraph(int w_, int h_)
    : w(w_), h(h_), region(w_, h_, 0),
      hcost(static_cast<size_t>(w_) * (h_ + 1), kInfCost),
      vcost(static_cast<size_t>(w_ + 1) * h_, kInfCost) {}

std::int64_t SeamGraph::edge_cost(int a, int b) const {
    if (a > b) std::swap(a, b);
    const int ax = a % (w + 1), ay = a / (w + 1);
    const int bx = b % (w + 1), by = b / (w + 1);
    if (ay == by && bx == ax + 1) return hedge(ax, ay);
    if (ax == bx && by == ay + 1) return vedge(ax, ay);
    return kInfCost;
}

void SeamParams::validate() const {
    if (!(factor >= 2.0 && factor <= 4.0)) throw std::invalid_argument("seam: search factor must lie in [2, 4]");
}

namespace {

int scaled(int depth, double factor, int limit) {
    return std::min(static_cast<int>(std::ceil(factor * depth)), limit);
}

void add_range(std::vector<int>& nodes, const SeamGraph& g, bool vertical_border, int fixed, int lo, int hi) {
    if (hi < lo) throw SeamError("build_search_region: degenerate search band");
    for (int t = lo; t <= hi; ++t) nodes.push_back(vertical_border ? g.node(fixed, t) : g.node(t, fixed));
}

}  // namespace

SeamGraph build_search_region(const DeficitShape& s, double factor) {
    SeamParams{factor}.validate();
    if (s.type == DeficitType::O) throw SeamError("build_search_region: type O has no open seam");
    if (s.type == DeficitType::None) throw SeamError("build_search_region: empty deficit");
    const int w = s.dims.width, h = s.dims.height;
    SeamGraph g(w, h);
    auto fill_rect = [&](int x0, int y0, int x1, int y1) {
        for (int y = std::max(0, y0); y < std::min(h, y1); ++y)
            for (int x = std::max(0, x0); x < std::min(w, x1); ++x) g.region.at(x, y) = 1;
    };

    if (s.corner_rect) {
        const int a = s.rect_w, b = s.rect_h;
        const int fa = scaled(a, factor, w - 1), fb = scaled(b, factor, h - 1);
        switch (s.corner) {
            case 0:
                fill_rect(0, 0, fa, fb);
                add_range(g.starts, g, false, 0, a, fa);
                add_range(g.ends, g, true, 0, b, fb);
                break;
            case 1:
                fill_rect(w - fa, 0, w, fb);
                add_range(g.starts, g, false, 0, w - fa, w - a);
                add_range(g.ends, g, true, w, b, fb);
                break;
            case 2:
                fill_rect(w - fa, h - fb, w, h);
                add_range(g.starts, g, false, h, w - fa, w - a);
                add_range(g.ends, g, true, w, h - fb, h - b);
                break;
            default:
                fill_rect(0, h - fb, fa, h);
                add_range(g.starts, g, false, h, a, fa);
                add_range(g.ends, g, true, 0, h - fb, h - b);
                break;
        }
        return g;
    }

    const auto& d = s.bands;
    std::array<int, 4> f{};
    f[kTop] = d[kTop] ? scaled(d[kTop], factor, h - 1) : 0;
    f[kBottom] = d[kBottom] ? scaled(d[kBottom], factor, h - 1) : 0;
    f[kLeft] = d[kLeft] ? scaled(d[kLeft], factor, w - 1) : 0;
    f[kRight] = d[kRight] ? scaled(d[kRight], factor, w - 1) : 0;
    // Opposite bands must leave a gap so the two endpoint segments stay apart.
    if (d[kLeft] && d[kRight]) {
        const int mid = (d[kLeft] + w - d[kRight]) / 2;
        f[kLeft] = std::min(f[kLeft], mid);
        f[kRight] = std::min(f[kRight], w - mid - 1);
    }
    if (d[kTop] && d[kBottom]) {
        const int mid = (d[kTop] + h - d[kBottom]) / 2;
        f[kTop] = std::min(f[kTop], mid);
        f[kBottom] = std::min(f[kBottom], h - mid - 1);
    }
    fill_rect(0, 0, w, f[kTop]);
    fill_rect(0, h - f[kBottom], w, h);
    fill_rect(0, 0, f[kLeft], h);
    fill_rect(w - f[kRight], 0, w, h);

    const bool t = d[kTop], r = d[kRight], b = d[kBottom], l = d[kLeft];
    const int used = t + r + b + l;
    // Border segments next to each band, just past its expanded depth.
    auto seg_left = [&](std::vector<int>& n) {  // on the left border, below top / above bottom band
        if (t) add_range(n, g, true, 0, d[kTop], f[kTop]);
        else add_range(n, g, true, 0, h - f[kBottom], h - d[kBottom]);
    };
    auto seg_right = [&](std::vector<int>& n) {
        if (t) add_range(n, g, true, w, d[kTop], f[kTop]);
        else add_range(n, g, true, w, h - f[kBottom], h - d[kBottom]);
    };
    auto seg_top = [&](std::vector<int>& n) {
        if (l) add_range(n, g, false, 0, d[kLeft], f[kLeft]);
        else add_range(n, g, false, 0, w - f[kRight], w - d[kRight]);
    };
    auto seg_bottom = [&](std::vector<int>& n) {
        if (l) add_range(n, g, false, h, d[kLeft], f[kLeft]);
        else add_range(n, g, false, h, w - f[kRight], w - d[kRight]);
    };

    if (used == 1) {
        if (t || b) {
            seg_left(g.starts);
            seg_right(g.ends);
        } else {
            seg_top(g.starts);
            seg_bottom(g.ends);
        }
    } else if (used == 2 && (t || b) && (l || r)) {
        // The open corner is opposite to the bands; the seam joins the two far borders.
        if (l) seg_right(g.starts);
        else seg_left(g.starts);
        if (t) seg_bottom(g.ends);
        else seg_top(g.ends);
    } else if (used == 3) {
        if (!t || !b) {  // open top or bottom
            const int y = t ? h : 0;
            add_range(g.starts, g, false, y, d[kLeft], f[kLeft]);
            add_range(g.ends, g, false, y, w - f[kRight], w - d[kRight]);
        } else {
            const int x = l ? w : 0;
            add_range(g.starts, g, true, x, d[kTop], f[kTop]);
            add_range(g.ends, g, true, x, h - f[kBottom], h - d[kBottom]);
        }
    } else {
        throw SeamError("build_search_region: unsupported band combination");
    }
    return g;
}

void edge_costs(const WarpedImage& main, const WarpedImage& sub, const Mask& vicinity, SeamGraph& g) {
    const int w = g.w, h = g.h;
    if (!(main.dims() == FrameDims{w, h}) || !(sub.dims() == FrameDims{w, h}) || !(vicinity.dims() == FrameDims{w, h})) {
        throw std::invalid_argument("edge_costs: image and graph sizes differ");
    }
    auto pair_cost = [&](int ax, int ay, int bx, int by) -> std::int64_t {
        if (vicinity.at(ax, ay) || vicinity.at(bx, by)) return kInfCost;
        if (!main.valid.at(ax, ay) || !main.valid.at(bx, by) || !sub.valid.at(ax, ay) || !sub.valid.at(bx, by)) {
            return kInvalidLumaCost;
        }
        const int ma = main.luma.at(ax, ay), mb = main.luma.at(bx, by);
        const int sa = sub.luma.at(ax, ay), sb = sub.luma.at(bx, by);
        return std::abs(ma - sb) + std::abs(sa - mb);
    };
    auto border_cost = [&](int x, int y) -> std::int64_t { return vicinity.at(x, y) ? kInfCost : 0; };

    for (int y = 0; y <= h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::int64_t c = kInfCost;
            if (y == 0) {
                if (g.region.at(x, 0)) c = border_cost(x, 0);
            } else if (y == h) {
                if (g.region.at(x, h - 1)) c = border_cost(x, h - 1);
            } else if (g.region.at(x, y - 1) && g.region.at(x, y)) {
                c = pair_cost(x, y - 1, x, y);
            }
            g.hedge(x, y) = c;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x <= w; ++x) {
            std::int64_t c = kInfCost;
            if (x == 0) {
                if (g.region.at(0, y)) c = border_cost(0, y);
            } else if (x == w) {
                if (g.region.at(w - 1, y)) c = border_cost(w - 1, y);
            } else if (g.region.at(x - 1, y) && g.region.at(x, y)) {
                c = pair_cost(x - 1, y, x, y);
            }
            g.vedge(x, y) = c;
        }
    }
}

SeamPath dijkstra_seam(const SeamGraph& g) {
    if (g.starts.empty() || g.ends.empty()) throw SeamError("dijkstra_seam: empty start or end set");
    const int n = g.node_count();
    std::vector<std::int64_t> dist(n, kInfCost);
    std::vector<int> parent(n, -1);
    std::vector<char> is_end(n, 0), done(n, 0);
    for (int e : g.ends) is_end[e] = 1;

    using Item = std::pair<std::int64_t, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    for (int s : g.starts) {
        if (dist[s] != 0) {
            dist[s] = 0;
            pq.push({0, s});
        }
    }
    int hit = -1;
    while (!pq.empty()) {
        const auto [d, u] = pq.top();
        pq.pop();
        if (done[u]) continue;
        done[u] = 1;
        if (is_end[u]) {
            hit = u;
            break;
        }
        const int x = u % (g.w + 1), y = u / (g.w + 1);
        auto relax = [&, d = d, u = u](int v, std::int64_t c) {
            if (c == kInfCost || done[v]) return;
            const std::int64_t nd = d + c;
            if (nd < dist[v]) {
                dist[v] = nd;
                parent[v] = u;
                pq.push({nd, v});
            }
        };
        if (x > 0) relax(u - 1, g.hedge(x - 1, y));
        if (x < g.w) relax(u + 1, g.hedge(x, y));
        if (y > 0) relax(u - (g.w + 1), g.vedge(x, y - 1));
        if (y < g.h) relax(u + (g.w + 1), g.vedge(x, y));
    }
    if (hit < 0) throw SeamError("dijkstra_seam: no finite path");
    SeamPath path;
    path.cost = dist[hit];
    for (int v = hit; v >= 0; v = parent[v]) path.nodes.push_back(v);
    std::reverse(path.nodes.begin(), path.nodes.end());
    return path;
}

Mask label_sub_side(const Mask& deficit, const SeamPath& seam, int w, int h) {
    // cut_h[y * w + x]: horizontal edge (x, y) is on the seam; cut_v[y * (w + 1) + x] likewise.
    std::vector<char> cut_h(static_cast<size_t>(w) * (h + 1), 0), cut_v(static_cast<size_t>(w + 1) * h, 0);
    for (size_t i = 1; i < seam.nodes.size(); ++i) {
        int a = seam.nodes[i - 1], b = seam.nodes[i];
        if (a > b) std::swap(a, b);
        const int ax = a % (w + 1), ay = a / (w + 1);
        if (b == a + 1) cut_h[static_cast<size_t>(ay) * w + ax] = 1;
        else cut_v[static_cast<size_t>(ay) * (w + 1) + ax] = 1;
    }
    Mask label(w, h, 0);
    std::vector<int> stack;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (deficit.at(x, y)) {
                label.at(x, y) = 1;
                stack.push_back(y * w + x);
            }
    while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int x = p % w, y = p / w;
        auto visit = [&](int nx, int ny) {
            if (!label.at(nx, ny)) {
                label.at(nx, ny) = 1;
                stack.push_back(ny * w + nx);
            }
        };
        if (x > 0 && !cut_v[static_cast<size_t>(y) * (w + 1) + x]) visit(x - 1, y);
        if (x + 1 < w && !cut_v[static_cast<size_t>(y) * (w + 1) + x + 1]) visit(x + 1, y);
        if (y > 0 && !cut_h[static_cast<size_t>(y) * w + x]) visit(x, y - 1);
        if (y + 1 < h && !cut_h[static_cast<size_t>(y + 1) * w + x]) visit(x, y + 1);
    }
    return label;
}

MergeResult merge(const WarpedImage& main, const WarpedImage& sub, const Mask& label, FrameDims out) {
    if (!(main.dims() == out) || !(sub.dims() == out)) throw std::invalid_argument("merge: image sizes differ");
    if (!(label.dims() == quarter_dims(out))) throw std::invalid_argument("merge: label must be quarter scale");
    MergeResult r;
    r.frame.luma = LumaPlane(out.width, out.height, 0);
    // 0 = main, 1 = sub, 2 = neither
    Mask source(out.width, out.height, 2);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            const bool want_sub = label.at(x / 4, y / 4) != 0;
            const WarpedImage& a = want_sub ? sub : main;
            const WarpedImage& b = want_sub ? main : sub;
            if (a.valid.at(x, y)) {
                source.at(x, y) = want_sub ? 1 : 0;
                r.frame.luma.at(x, y) = a.luma.at(x, y);
            } else if (b.valid.at(x, y)) {
                source.at(x, y) = want_sub ? 0 : 1;
                r.frame.luma.at(x, y) = b.luma.at(x, y);
            } else {
                ++r.invalid_pixels;
            }
        }
    }
    if (main.cb && sub.cb) {
        const FrameDims c = chroma_dims(out);
        r.frame.cb = LumaPlane(c.width, c.height, 128);
        r.frame.cr = LumaPlane(c.width, c.height, 128);
        for (int j = 0; j < c.height; ++j) {
            for (int i = 0; i < c.width; ++i) {
                const int s = source.at(2 * i, 2 * j);
                if (s == 2) continue;
                const WarpedImage& src = s == 1 ? sub : main;
                r.frame.cb->at(i, j) = src.cb->at(i, j);
                r.frame.cr->at(i, j) = src.cr->at(i, j);
            }
        }
    }
    return r;
}

MergeResult crop_only(const WarpedImage& main) {
    MergeResult r;
    r.frame.luma = main.luma;
    r.frame.cb = main.cb;
    r.frame.cr = main.cr;
    r.invalid_pixels = static_cast<long>(main.valid.data().size()) - count_set(main.valid);
    return r;
}

StitchResult stitch(const Frame& main_src, const LumaPlane& main_quarter, const Homography& main_h,
                    const Frame& sub_src, const LumaPlane& sub_quarter, const Homography& sub_h,
                    FrameDims out, const SeamParams& params) {
    params.validate();
    StitchResult res;
    const WarpedImage qmain = warp_quarter(main_quarter, main_src.dims(), main_h, out);
    const WarpedImage fmain = warp(main_src, main_h, out);
    res.debug.deficit = deficit_mask(qmain);
    res.debug.main_luma = qmain.luma;
    const FrameDims q = qmain.dims();
    if (count_set(res.debug.deficit) == 0) {
        res.merged = crop_only(fmain);
        res.debug.label = Mask(q.width, q.height, 0);
        res.debug.search = Mask(q.width, q.height, 0);
        return res;
    }
    const WarpedImage qsub = warp_quarter(sub_quarter, sub_src.dims(), sub_h, out);
    const WarpedImage fsub = warp(sub_src, sub_h, out);
    const Mask vicinity = dilate8(res.debug.deficit);
    const DeficitShape shape = classify_deficit(vicinity);
    res.type = shape.type;
    res.debug.search = Mask(q.width, q.height, 0);
    if (shape.type == DeficitType::O) {
        res.fallback = true;
        res.fallback_reason = "type O";
    } else {
        try {
            SeamGraph g = build_search_region(shape, params.factor);
            edge_costs(qmain, qsub, vicinity, g);
            res.debug.search = g.region;
            res.debug.seam = dijkstra_seam(g);
            res.seam_cost = res.debug.seam.cost;
        } catch (const SeamError& e) {
            res.fallback = true;
            res.fallback_reason = e.what();
        }
    }
    res.debug.label = res.fallback ? res.debug.deficit : label_sub_side(res.debug.deficit, res.debug.seam, q.width, q.height);
    res.merged = merge(fmain, fsub, res.debug.label, out);
    return res;
}

void write_seam_overlay(const std::string& path, const StitchDebug& dbg) {
    const int w = dbg.main_luma.width(), h = dbg.main_luma.height();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "P6\n" << w << ' ' << h << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(3) * w);
    auto set = [](const Mask& m, int x, int y) { return !m.empty() && m.at(x, y); };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            unsigned char rgb[3];
            const unsigned char g = dbg.main_luma.at(x, y);
            rgb[0] = rgb[1] = rgb[2] = g;
            if (set(dbg.search, x, y)) {
                rgb[0] = 255;
                rgb[1] = 255;
                rgb[2] = 0;
            }
            if (set(dbg.label, x, y)) {
                rgb[0] = 255;
                rgb[1] = 105;
                rgb[2] = 180;
            }
            if (set(dbg.deficit, x, y)) {
                rgb[0] = 0;
                rgb[1] = 0;
                rgb[2] = 255;
            }
            std::copy(rgb, rgb + 3, row.begin() + 3 * x);
        }
        f.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace stitchstab
