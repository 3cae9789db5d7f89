#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "oracles.hpp"
#include "stitchstab/filter.hpp"
#include "stitchstab/seam.hpp"
#include "stitchstab/synth.hpp"

using namespace stitchstab;

namespace {

Frame make_frame(const LumaPlane& luma) {
    Frame f;
    f.luma = luma;
    return f;
}

LumaPlane random_plane(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    LumaPlane p(w, h);
    for (auto& v : p.data()) v = static_cast<std::uint8_t>(rng() & 0xff);
    return p;
}

Mask band_mask(int w, int h, int top, int right, int bottom, int left) {
    Mask m(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (y < top || x >= w - right || y >= h - bottom || x < left) m.at(x, y) = 1;
    return m;
}

bool covers(const DeficitShape& s, const Mask& m) {
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.at(x, y) && !s.contains(x, y)) return false;
    return true;
}

void check_path(const SeamGraph& g, const SeamPath& p) {
    REQUIRE(!p.nodes.empty());
    REQUIRE(std::find(g.starts.begin(), g.starts.end(), p.nodes.front()) != g.starts.end());
    REQUIRE(std::find(g.ends.begin(), g.ends.end(), p.nodes.back()) != g.ends.end());
    std::int64_t sum = 0;
    for (size_t i = 1; i < p.nodes.size(); ++i) {
        const std::int64_t c = g.edge_cost(p.nodes[i - 1], p.nodes[i]);
        REQUIRE(c != kInfCost);
        sum += c;
    }
    REQUIRE(sum == p.cost);
}

}  // namespace

TEST_CASE("full-scale warp") {
    const Frame src = make_frame(random_plane(40, 30, 1));
    const WarpedImage id = warp(src, Homography::identity(), {40, 30});
    CHECK(id.luma == src.luma);
    CHECK(count_set(id.valid) == 40 * 30);

    const WarpedImage off = warp(src, Homography::translation(40, 0), {40, 30});
    CHECK(count_set(off.valid) == 0);
    CHECK(count_set(deficit_mask(off)) == 40 * 30);

    LumaPlane ramp(40, 30);
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 40; ++x) ramp.at(x, y) = static_cast<std::uint8_t>(2 * x);
    const WarpedImage half = warp(make_frame(ramp), Homography::translation(0.5, 0), {40, 30});
    for (int y = 0; y < 30; ++y) {
        for (int x = 0; x < 39; ++x) {
            REQUIRE(half.valid.at(x, y) == 1);
            REQUIRE(half.luma.at(x, y) == 2 * x + 1);
        }
        REQUIRE(half.valid.at(39, y) == 0);
        REQUIRE(half.luma.at(39, y) == 0);
    }
}

TEST_CASE("warp carries chroma") {
    Frame src = make_frame(random_plane(40, 30, 2));
    src.cb = random_plane(20, 15, 3);
    src.cr = random_plane(20, 15, 4);
    const WarpedImage w = warp(src, Homography::identity(), {40, 30});
    REQUIRE(w.cb.has_value());
    CHECK(*w.cb == *src.cb);
    CHECK(*w.cr == *src.cr);
}

TEST_CASE("quarter-scale validity is the all-corners rule") {
    const Frame src = make_frame(random_plane(80, 64, 5));
    const LumaPlane q = quarter_plane(src.luma);
    CHECK(q.dims() == FrameDims{20, 16});
    CHECK(quarter_dims({81, 63}) == FrameDims{21, 16});
    const CameraParams cam = CameraParams::for_frame({80, 64}, 80);
    for (const Homography& h : {Homography::translation(13.3, -7.6), compose(Homography::translation(-9, 5),
                                                                             rotation_homography(0, 0, 0.2, cam))}) {
        const WarpedImage full = warp(src, h, {80, 64});
        const WarpedImage quarter = warp_quarter(q, {80, 64}, h, {80, 64});
        REQUIRE(quarter.dims() == FrameDims{20, 16});
        for (int j = 0; j < 16; ++j)
            for (int i = 0; i < 20; ++i) {
                const bool all = full.valid.at(4 * i, 4 * j) && full.valid.at(4 * i + 3, 4 * j) &&
                                 full.valid.at(4 * i, 4 * j + 3) && full.valid.at(4 * i + 3, 4 * j + 3);
                REQUIRE(bool(quarter.valid.at(i, j)) == all);
            }
    }
}

TEST_CASE("dilate8 and count_set") {
    Mask m(7, 7, 0);
    m.at(3, 3) = 1;
    const Mask d = dilate8(m);
    CHECK(count_set(d) == 9);
    CHECK(d.at(2, 2) == 1);
    CHECK(d.at(4, 4) == 1);
    CHECK(d.at(1, 3) == 0);
    Mask corner(5, 5, 0);
    corner.at(0, 0) = 1;
    CHECK(count_set(dilate8(corner)) == 4);
}

TEST_CASE("classify_deficit examples") {
    CHECK(classify_deficit(Mask(40, 30, 0)).type == DeficitType::None);

    const DeficitShape top = classify_deficit(band_mask(40, 30, 4, 0, 0, 0));
    CHECK(top.type == DeficitType::I);
    CHECK(top.bands[kTop] == 4);
    CHECK(top.area == 160);

    Mask corner(40, 30, 0);
    for (int y = 0; y < 6; ++y)
        for (int x = 30; x < 40; ++x) corner.at(x, y) = 1;
    const DeficitShape l = classify_deficit(corner);
    CHECK(l.type == DeficitType::L);
    CHECK(l.area == 60);
    CHECK(covers(l, corner));

    CHECK(classify_deficit(band_mask(40, 30, 0, 3, 0, 3)).type == DeficitType::O);
    CHECK(classify_deficit(band_mask(40, 30, 2, 2, 2, 2)).type == DeficitType::O);

    const DeficitShape c = classify_deficit(band_mask(40, 30, 2, 3, 0, 1));
    CHECK(c.type == DeficitType::C);

    // Disjoint corner blobs on the same edge join into one band.
    Mask two(40, 30, 0);
    two.at(0, 0) = two.at(1, 0) = two.at(39, 0) = two.at(39, 1) = 1;
    const DeficitShape joined = classify_deficit(two);
    CHECK(covers(joined, two));
    CHECK(joined.type != DeficitType::O);
}

TEST_CASE("classify_deficit picks a minimum-area covering candidate") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> depth(0, 6), pos(0, 39), coin(0, 3);
    for (int trial = 0; trial < 300; ++trial) {
        Mask m(40, 30, 0);
        const int blobs = 1 + coin(rng);
        for (int b = 0; b < blobs; ++b) {
            const int e = coin(rng), d = 1 + depth(rng), a = pos(rng) % 28, len = 1 + depth(rng) * 2;
            for (int t = a; t < std::min(a + len, 30); ++t)
                for (int k = 0; k < d; ++k) {
                    if (e == kTop) m.at(std::min(t, 39), k) = 1;
                    if (e == kBottom) m.at(std::min(t, 39), 29 - k) = 1;
                    if (e == kLeft) m.at(k, t) = 1;
                    if (e == kRight) m.at(39 - k, t) = 1;
                }
        }
        const DeficitShape s = classify_deficit(m);
        if (s.type == DeficitType::O) continue;
        REQUIRE(covers(s, m));
        for (const DeficitShape& c : deficit_candidates(m)) {
            if (covers(c, m)) REQUIRE(s.area <= c.area);
        }
    }
}

TEST_CASE("build_search_region geometry") {
    const DeficitShape top = classify_deficit(band_mask(40, 30, 4, 0, 0, 0));
    const SeamGraph g = build_search_region(top, 3.0);
    for (int y = 0; y < 30; ++y)
        for (int x = 0; x < 40; ++x) REQUIRE(g.region.at(x, y) == (y < 12 ? 1 : 0));
    REQUIRE(!g.starts.empty());
    REQUIRE(!g.ends.empty());
    for (int s : g.starts) CHECK(s % 41 == 0);
    for (int e : g.ends) CHECK(e % 41 == 40);

    Mask corner(40, 30, 0);
    for (int y = 0; y < 6; ++y)
        for (int x = 30; x < 40; ++x) corner.at(x, y) = 1;
    const SeamGraph lg = build_search_region(classify_deficit(corner), 3.0);
    for (int s : lg.starts) CHECK(s / 41 == 0);
    for (int e : lg.ends) CHECK(e % 41 == 40);

    CHECK_THROWS_AS(build_search_region(top, 5.0), std::invalid_argument);
    CHECK_THROWS_AS(build_search_region(classify_deficit(band_mask(40, 30, 0, 3, 0, 3)), 3.0), SeamError);
}

TEST_CASE("edge costs") {
    const int w = 20, h = 16;
    const DeficitShape top = classify_deficit(band_mask(w, h, 2, 0, 0, 0));
    WarpedImage a, b;
    a.luma = LumaPlane(w, h, 100);
    a.valid = Mask(w, h, 1);
    a.scale = WarpScale::Quarter;
    b = a;
    SeamGraph g = build_search_region(top, 3.0);
    edge_costs(a, b, Mask(w, h, 0), g);
    for (int y = 1; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (g.region.at(x, y - 1) && g.region.at(x, y)) REQUIRE(g.hedge(x, y) == 0);

    b.luma = LumaPlane(w, h, 120);
    g = build_search_region(top, 3.0);
    edge_costs(a, b, Mask(w, h, 0), g);
    CHECK(g.hedge(5, 3) == 40);
    CHECK(g.vedge(5, 3) == 40);
    CHECK(g.vedge(0, 3) == 0);  // border edge
    CHECK(g.hedge(5, 10) == kInfCost);  // outside the band

    Mask vic(w, h, 0);
    vic.at(5, 3) = 1;
    b.valid.at(9, 4) = 0;
    g = build_search_region(top, 3.0);
    edge_costs(a, b, vic, g);
    CHECK(g.hedge(5, 3) == kInfCost);
    CHECK(g.hedge(5, 4) == kInfCost);
    CHECK(g.vedge(5, 3) == kInfCost);
    CHECK(g.vedge(6, 3) == kInfCost);
    CHECK(g.hedge(9, 4) == kInvalidLumaCost);
}

TEST_CASE("dijkstra_seam examples") {
    SeamGraph u(2, 2);
    std::fill(u.hcost.begin(), u.hcost.end(), 1);
    std::fill(u.vcost.begin(), u.vcost.end(), 1);
    u.starts = {u.node(0, 1)};
    u.ends = {u.node(2, 1)};
    const SeamPath p = dijkstra_seam(u);
    CHECK(p.cost == 2);
    check_path(u, p);

    SeamGraph c(4, 4);
    std::fill(c.hcost.begin(), c.hcost.end(), 5);
    std::fill(c.vcost.begin(), c.vcost.end(), 5);
    for (int x = 0; x < 4; ++x) c.hedge(x, 2) = 0;
    for (int y = 0; y <= 4; ++y) {
        c.starts.push_back(c.node(0, y));
        c.ends.push_back(c.node(4, y));
    }
    const SeamPath cp = dijkstra_seam(c);
    CHECK(cp.cost == 0);
    for (int v : cp.nodes) CHECK(v / 5 == 2);

    SeamGraph wall(4, 4);
    std::fill(wall.hcost.begin(), wall.hcost.end(), 1);
    std::fill(wall.vcost.begin(), wall.vcost.end(), 1);
    for (int y = 0; y <= 4; ++y) wall.hedge(1, y) = kInfCost;
    wall.hedge(1, 3) = 1;
    wall.starts = {wall.node(0, 0)};
    wall.ends = {wall.node(4, 0)};
    const SeamPath wp = dijkstra_seam(wall);
    CHECK(wp.cost == 10);
    check_path(wall, wp);
    wall.hedge(1, 3) = kInfCost;
    CHECK_THROWS_AS(dijkstra_seam(wall), SeamError);
}

TEST_CASE("oracles agree with each other on small graphs") {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> dim(1, 4);
    for (int t = 0; t < 300; ++t) {
        const SeamGraph g = oracle::random_graph(rng, dim(rng), dim(rng), 9, 0.15);
        REQUIRE(oracle::enumerate_min_seam(g) == oracle::label_correcting_min_seam(g));
    }
}

TEST_CASE("dijkstra_seam is optimal on random graphs") {
    std::mt19937_64 rng(29);
    std::uniform_int_distribution<int> dim(1, 8);
    for (int t = 0; t < 300; ++t) {
        const SeamGraph g = oracle::random_graph(rng, dim(rng), dim(rng), 20, 0.1);
        const auto best = oracle::label_correcting_min_seam(g);
        if (!best) {
            REQUIRE_THROWS_AS(dijkstra_seam(g), SeamError);
            continue;
        }
        const SeamPath p = dijkstra_seam(g);
        REQUIRE(p.cost == *best);
        check_path(g, p);
    }
}

TEST_CASE("dijkstra_seam equals the DP sweep on type-I graphs") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> dim(1, 16);
    for (int t = 0; t < 100; ++t) {
        const SeamGraph g = oracle::random_type_i_graph(rng, dim(rng), dim(rng));
        REQUIRE(dijkstra_seam(g).cost == oracle::dp_sweep_min_seam(g));
    }
}

TEST_CASE("label_sub_side stops at the seam") {
    const int w = 8, h = 8;
    const Mask deficit = band_mask(w, h, 2, 0, 0, 0);
    SeamPath seam;
    for (int x = 0; x <= w; ++x) seam.nodes.push_back(x + 3 * (w + 1));
    const Mask label = label_sub_side(deficit, seam, w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) REQUIRE(label.at(x, y) == (y < 3 ? 1 : 0));
}

TEST_CASE("merge") {
    const Frame src = make_frame(random_plane(40, 32, 8));
    const WarpedImage main = warp(src, Homography::identity(), {40, 32});
    Mask any(10, 8, 0);
    for (int i = 0; i < 10; ++i) any.at(i, i % 8) = 1;
    const MergeResult same = merge(main, main, any, {40, 32});
    CHECK(same.frame.luma == main.luma);
    CHECK(same.invalid_pixels == 0);

    const WarpedImage shifted = warp(src, Homography::translation(0, -6), {40, 32});  // top 6 rows invalid
    CHECK(crop_only(shifted).invalid_pixels == 6 * 40);
    Mask top(10, 8, 0);
    for (int x = 0; x < 10; ++x) top.at(x, 0) = top.at(x, 1) = 1;
    const MergeResult m = merge(shifted, main, top, {40, 32});
    CHECK(m.invalid_pixels == 0);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 40; ++x) REQUIRE(m.frame.luma.at(x, y) == (y < 8 ? main.luma.at(x, y) : shifted.luma.at(x, y)));
}

TEST_CASE("stitch fills a side deficit from the neighbouring frame") {
    const LumaPlane scene = make_source({320, 200}, 9);
    const int w = 160, h = 120;
    const Frame main = make_frame(oracle::resample(scene, Homography::translation(70, 40), w, h));
    const Frame sub = make_frame(oracle::resample(scene, Homography::translation(40, 40), w, h));
    const FrameDims out = output_dims({w, h}, 0.9);
    const Homography main_h = output_to_input(Homography::translation(-20, 0), {w, h}, out);
    const Homography sub_h = compose(Homography::translation(30, 0), main_h);
    const StitchResult r = stitch(main, quarter_plane(main.luma), main_h, sub, quarter_plane(sub.luma), sub_h, out, {});
    CHECK(r.type == DeficitType::I);
    CHECK_FALSE(r.fallback);
    CHECK(r.merged.invalid_pixels == 0);
    const Point2 o = crop_offset({w, h}, out);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            REQUIRE(r.merged.frame.luma.at(x, y) == scene.at(x + int(o.x) - 20 + 70, y + int(o.y) + 40));

    // The seam never touches a deficit pixel.
    const int qw = r.debug.deficit.width();
    for (size_t i = 1; i < r.debug.seam.nodes.size(); ++i) {
        const int a = r.debug.seam.nodes[i - 1], b = r.debug.seam.nodes[i];
        const int ax = a % (qw + 1), ay = a / (qw + 1), bx = b % (qw + 1), by = b / (qw + 1);
        for (int py : {std::min(ay, by) - (ay == by ? 1 : 0), std::min(ay, by)})
            for (int px : {std::min(ax, bx) - (ax == bx ? 1 : 0), std::min(ax, bx)}) {
                if (px < 0 || py < 0 || px >= qw || py >= r.debug.deficit.height()) continue;
                REQUIRE(r.debug.deficit.at(px, py) == 0);
            }
    }

    const auto path = std::filesystem::temp_directory_path() / "stitchstab_overlay_test.ppm";
    write_seam_overlay(path.string(), r.debug);
    std::ifstream f(path, std::ios::binary);
    std::string magic;
    int ow = 0, oh = 0;
    f >> magic >> ow >> oh;
    CHECK(magic == "P6");
    CHECK(ow == r.debug.deficit.width());
    CHECK(oh == r.debug.deficit.height());
    std::filesystem::remove(path);
}

TEST_CASE("stitch falls back on ring deficits") {
    const LumaPlane scene = make_source({320, 200}, 10);
    const Frame main = make_frame(oracle::resample(scene, Homography::translation(70, 40), 160, 120));
    const FrameDims out{160, 120};
    const Homography zoom_out = compose(compose(Homography::translation(79.5, 59.5), Homography::scaling(1.1, 1.1)),
                                        Homography::translation(-79.5, -59.5));
    const StitchResult r = stitch(main, quarter_plane(main.luma), zoom_out, main, quarter_plane(main.luma), zoom_out,
                                  out, {});
    CHECK(r.type == DeficitType::O);
    CHECK(r.fallback);
    CHECK(r.merged.invalid_pixels > 0);
}
