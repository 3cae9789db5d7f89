#include <doctest.h>

#include <random>

#include "stitchstab/rolling_shutter.hpp"

using namespace stitchstab;

namespace {

CameraParams cam_h1080() { return CameraParams::for_frame({1920, 1080}, 1000.0, 1.0); }

}  // namespace

TEST_CASE("distortion_matrix examples") {
    const CameraParams cam = cam_h1080();
    REQUIRE(cam.sensor_height == 1080.0);
    CHECK(max_abs_diff(distortion_matrix(Homography::identity(), cam), Homography::identity()) == 0.0);
    CHECK(max_abs_diff(distortion_matrix(Homography::translation(10.8, 0), cam),
                       Homography::from_rows({1, 0.01, 0, 0, 1, 0, 0, 0, 1})) < 1e-15);
    CHECK(max_abs_diff(distortion_matrix(Homography::translation(0, 108), cam), Homography::scaling(1, 1 / 0.9)) < 1e-15);
}

TEST_CASE("distortion_matrix clamps the row scale") {
    const CameraParams cam = cam_h1080();
    const Homography d = distortion_matrix(Homography::translation(0, 5000), cam);
    CHECK(d(1, 1) == doctest::Approx(1 / kMinRowScale));
    CHECK(std::isfinite(d.determinant()));
}

TEST_CASE("undistorted_motion reconstructs M") {
    const CameraParams cam = cam_h1080();
    CHECK(max_abs_diff(undistorted_motion(Homography::identity(), Homography::identity(), Homography::identity()),
                       Homography::identity()) == 0.0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> s(-0.02, 0.02), t(-60, 60), p(-1e-5, 1e-5);
    RsState rs;
    for (int i = 0; i < 500; ++i) {
        const Homography m = Homography::from_rows({1 + s(rng), s(rng), t(rng), s(rng), 1 + s(rng), t(rng), p(rng), p(rng), 1});
        const Homography d_prev = rs.current();
        const RsStep step = rs.advance(m, cam);
        REQUIRE(max_abs_diff(compose(compose(step.d, step.n), invert(d_prev)), m) < 1e-9);
        REQUIRE(max_abs_diff(step.d, distortion_matrix(m, cam)) == 0.0);
    }
    CHECK(rs.history().size() == 501);
    rs.reset();
    CHECK(rs.history().size() == 1);
    CHECK(max_abs_diff(rs.current(), Homography::identity()) == 0.0);
}

TEST_CASE("pure translation N is M conjugated by the shear") {
    const CameraParams cam = cam_h1080();
    const Homography m = Homography::translation(10.8, 0);
    const Homography d = distortion_matrix(m, cam);
    const Homography n = undistorted_motion(m, d, Homography::identity());
    CHECK(max_abs_diff(n, compose(invert(d), m)) < 1e-15);
}

TEST_CASE("distortion_matrix is continuous at the origin") {
    const CameraParams cam = cam_h1080();
    const Homography d = distortion_matrix(Homography::translation(1e-9, 1e-9), cam);
    CHECK(max_abs_diff(d, Homography::identity()) < 1e-11);
}
