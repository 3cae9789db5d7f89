#include <doctest.h>

#include <cmath>
#include <random>

#include "stitchstab/geometry.hpp"

using namespace stitchstab;

namespace {

const double kPi = std::acos(-1.0);

Homography random_homography(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> small(-0.2, 0.2), trans(-50, 50), proj(-1e-4, 1e-4);
    return Homography::from_rows({1 + small(rng), small(rng), trans(rng), small(rng), 1 + small(rng), trans(rng),
                                  proj(rng), proj(rng), 1});
}

bool near(Point2 a, Point2 b, double tol) { return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol; }

CameraParams cam1080() { return CameraParams::for_frame({1920, 1080}, 1000.0); }

}  // namespace

TEST_CASE("compose examples") {
    CHECK(max_abs_diff(compose(Homography::identity(), Homography::identity()), Homography::identity()) == 0.0);
    CHECK(max_abs_diff(compose(Homography::translation(1, 2), Homography::translation(3, 4)),
                       Homography::translation(4, 6)) < 1e-12);
    std::mt19937_64 rng(3);
    const Homography h = random_homography(rng);
    CHECK(max_abs_diff(compose(h, invert(h)), Homography::identity()) < 1e-9);
}

TEST_CASE("compose(invert(H), H) is the identity for random homographies") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        const Homography h = random_homography(rng);
        REQUIRE(max_abs_diff(compose(invert(h), h), Homography::identity()) < 1e-9);
    }
}

TEST_CASE("apply examples") {
    CHECK(near(apply(Homography::identity(), {5, 7}), {5, 7}, 0));
    CHECK(near(apply(Homography::translation(3, 0), {0, 0}), {3, 0}, 0));
    const Homography g = Homography::from_rows({1, 0, 0, 0, 1, 0, 0.001, 0, 1});
    CHECK(near(apply(g, {100, 0}), {100 / 1.1, 0}, 1e-12));
    const Homography inf = Homography::from_rows({1, 0, 0, 0, 1, 0, 0.01, 0, 1});
    CHECK_THROWS_AS(apply(inf, {-100, 0}), GeometryError);
}

TEST_CASE("rotation_homography examples") {
    const CameraParams cam = cam1080();
    CHECK(max_abs_diff(rotation_homography(0, 0, 0, cam), Homography::identity()) < 1e-15);

    const Homography roll = rotation_homography(0, 0, kPi / 2, cam);
    CHECK(near(apply(roll, {cam.cx, cam.cy}), {cam.cx, cam.cy}, 1e-9));
    const Point2 r = apply(roll, {cam.cx + 10, cam.cy});
    CHECK(std::abs(r.x - cam.cx) < 1e-9);
    CHECK(std::abs(std::abs(r.y - cam.cy) - 10) < 1e-9);

    const double a = 1e-3;
    const Point2 y = apply(rotation_homography(a, 0, 0, cam), {cam.cx, cam.cy});
    CHECK(y.x - cam.cx == doctest::Approx(cam.focal * a).epsilon(1e-5));
    CHECK(std::abs(y.y - cam.cy) < 1e-9);
}

TEST_CASE("single-angle rotations invert by negation") {
    const CameraParams cam = cam1080();
    for (int axis = 0; axis < 3; ++axis) {
        double v[3] = {0, 0, 0};
        v[axis] = 0.13;
        const Homography f = rotation_homography(v[0], v[1], v[2], cam);
        const Homography b = rotation_homography(-v[0], -v[1], -v[2], cam);
        CHECK(max_abs_diff(compose(b, f), Homography::identity()) < 1e-9);
    }
}

TEST_CASE("estimate_angles examples") {
    const CameraParams cam = cam1080();
    const EulerAngles z = estimate_angles(Homography::identity(), cam);
    CHECK(z.yaw == 0.0);
    CHECK(z.pitch == 0.0);
    CHECK(z.roll == 0.0);
    CHECK(estimate_angles(Homography::translation(cam.focal / 2, 0), cam).yaw == doctest::Approx(kPi / 6));
    CHECK(estimate_angles(Homography::from_rows({1, 0, 0, 1, 1, 0, 0, 0, 1}), cam).roll == doctest::Approx(kPi / 4));
    CHECK(estimate_angles(Homography::translation(3 * cam.focal, 0), cam).yaw == doctest::Approx(kPi / 2));
}

TEST_CASE("decompose recovers rotations and reconstructs its input") {
    const CameraParams cam = cam1080();
    const AngleDecomposition id = decompose(Homography::identity(), cam);
    CHECK(max_abs_diff(id.residual, Homography::identity()) < 1e-15);

    const AngleDecomposition d = decompose(rotation_homography(0.1, -0.05, 0.2, cam), cam);
    CHECK(d.angles.yaw == doctest::Approx(0.1).epsilon(0.01));
    CHECK(std::abs(d.angles.yaw - 0.1) < 1e-2);
    CHECK(std::abs(d.angles.pitch + 0.05) < 1e-2);
    CHECK(std::abs(d.angles.roll - 0.2) < 1e-2);

    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        const Homography q = random_homography(rng);
        const AngleDecomposition dq = decompose(q, cam);
        REQUIRE(max_abs_diff(compose(rotation_homography(dq.angles, cam), dq.residual), q) < 1e-9);
    }
}

TEST_CASE("transform_quad") {
    const Quad q = Quad::rect(0, 0, 10, 5);
    const Quad t = transform_quad(q, Homography::translation(2, 3));
    for (int i = 0; i < 4; ++i) CHECK(near(t.v[i], {q.v[i].x + 2, q.v[i].y + 3}, 1e-12));
    const Homography p = Homography::from_rows({1, 0, 0, 0, 1, 0, 0.01, 0, 1});
    const Quad pq = transform_quad(q, p);
    for (int i = 0; i < 4; ++i) CHECK(near(pq.v[i], apply(p, q.v[i]), 0));
    CHECK_THROWS_AS(transform_quad(Quad::rect(-200, 0, -50, 5), p), GeometryError);
}

TEST_CASE("quad_inside_union examples") {
    const Quad a = Quad::rect(0, 0, 100, 100);
    const Quad b = Quad::rect(60, 0, 160, 100);
    CHECK(quad_inside_union(a, a, b));
    CHECK(quad_edges_inside_union(a, a, b));
    CHECK_FALSE(quad_inside_union(Quad::rect(300, 300, 400, 400), a, b));
    CHECK_FALSE(quad_edges_inside_union(Quad::rect(300, 300, 400, 400), a, b));
    const Quad span = Quad::rect(20, 10, 140, 90);
    CHECK(quad_inside_union(span, a, b));
    CHECK(quad_edges_inside_union(span, a, b));
    const Quad gap_a = Quad::rect(0, 0, 50, 100);
    const Quad gap_b = Quad::rect(60, 0, 160, 100);
    CHECK_FALSE(quad_inside_union(span, gap_a, gap_b));
    CHECK_FALSE(quad_edges_inside_union(span, gap_a, gap_b));
}

TEST_CASE("union containment: exact test implies sampled test; shrinking keeps containment") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> off(-40, 40), ang(-0.1, 0.1);
    const CameraParams cam = CameraParams::for_frame({320, 180}, 320);
    const Quad main = Quad::rect(0, 0, 319, 179);
    int covered = 0;
    for (int i = 0; i < 2000; ++i) {
        const Homography m = compose(Homography::translation(off(rng), off(rng)), rotation_homography(0, 0, ang(rng), cam));
        const Quad sub = transform_quad(main, m);
        const Homography c = compose(Homography::translation(off(rng), off(rng)), rotation_homography(0, 0, ang(rng), cam));
        const Quad crop = transform_quad(Quad::rect(16, 9, 303, 170), c);
        const bool exact = quad_edges_inside_union(crop, main, sub);
        if (exact) {
            ++covered;
            REQUIRE(quad_inside_union(crop, main, sub));
            Point2 ctr{0, 0};
            for (const auto& p : crop.v) ctr = {ctr.x + p.x / 4, ctr.y + p.y / 4};
            for (double s : {0.9, 0.5, 0.1}) {
                Quad shrunk = crop;
                for (auto& p : shrunk.v) p = {ctr.x + s * (p.x - ctr.x), ctr.y + s * (p.y - ctr.y)};
                REQUIRE(quad_edges_inside_union(shrunk, main, sub));
                REQUIRE(quad_inside_union(shrunk, main, sub));
            }
        }
    }
    CHECK(covered > 100);
}
