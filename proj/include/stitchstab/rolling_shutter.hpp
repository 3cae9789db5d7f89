#pragma once

#include <vector>

#include "stitchstab/geometry.hpp"

namespace stitchstab {

/// Smallest allowed value of 1 - f/H_eff; keeps D well conditioned.
constexpr double kMinRowScale = 0.1;

/// Translational rolling-shutter model:
/// D = [[1, -c/H, 0], [0, 1 - f/H, 0], [0, 0, 1]]^-1 with c, f the translation of m.
Homography distortion_matrix(const Homography& m, const CameraParams& cam);

/// N = D_curr^-1 * M * D_prev, normalized.
Homography undistorted_motion(const Homography& m, const Homography& d_curr, const Homography& d_prev);

struct RsStep {
    Homography d;  // D_n
    Homography n;  // distortion-free motion N_n
};

/// Tracks D across a stream. D_0 = I.
class RsState {
public:
    const Homography& current() const { return d_; }
    const std::vector<Homography>& history() const { return history_; }

    RsStep advance(const Homography& m, const CameraParams& cam);
    void reset();

private:
    Homography d_;
    std::vector<Homography> history_{Homography::identity()};
};

}  // namespace stitchstab
