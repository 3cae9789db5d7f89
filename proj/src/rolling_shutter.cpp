#include "stitchstab/rolling_shutter.hpp"

#include <algorithm>

namespace stitchstab {

Homography distortion_matrix(const Homography& m, const CameraParams& cam) {
    const Homography mn = normalize(m);
    const double h = cam.sensor_height;
    const double shear = -mn(0, 2) / h;
    const double scale = std::max(1.0 - mn(1, 2) / h, kMinRowScale);
    // Closed-form inverse of [[1, shear, 0], [0, scale, 0], [0, 0, 1]].
    return Homography::from_rows({1, -shear / scale, 0, 0, 1 / scale, 0, 0, 0, 1});
}

Homography undistorted_motion(const Homography& m, const Homography& d_curr, const Homography& d_prev) {
    return normalize(multiply(multiply(invert(d_curr), m), d_prev));
}

RsStep RsState::advance(const Homography& m, const CameraParams& cam) {
    RsStep step;
    step.d = distortion_matrix(m, cam);
    step.n = undistorted_motion(m, step.d, d_);
    d_ = step.d;
    history_.push_back(d_);
    return step;
}

void RsState::reset() {
    d_ = Homography::identity();
    history_.assign(1, Homography::identity());
}

}  // namespace stitchstab
