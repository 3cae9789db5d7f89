#pragma once

#include <stdexcept>
#include <vector>

#include "stitchstab/geometry.hpp"
#include "stitchstab/image.hpp"

namespace stitchstab {

class MotionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MotionConfig {
    int levels = 4;
    int block = 16;
    int radius = 8;
    int max_features = 256;
    double harris_k = 0.04;
    double relative_threshold = 0.01;  // of the strongest response on the level
    double absolute_threshold = 1e4;
    double trim_factor = 2.0;  // drop matches with SAD above trim_factor * median
};

/// Level 0 is full resolution; each further level is a 2x2 box downsample.
struct Pyramid {
    std::vector<LumaPlane> levels;
};

constexpr int kMinPyramidSide = 32;

Pyramid build_pyramid(const LumaPlane& luma, int levels);
inline Pyramid build_pyramid(const Frame& f, int levels) { return build_pyramid(f.luma, levels); }

/// Harris-Stephens response map (det - k * trace^2 of the 5x5 summed Sobel tensor).
Plane<float> harris_response(const LumaPlane& plane, double k);

/// Grid-suppressed Harris corners, strongest first. `margin` keeps detections
/// away from the border so block windows fit.
std::vector<Point2> detect_features(const LumaPlane& level, int max_points, const MotionConfig& cfg = {},
                                    int margin = -1);

struct PointMatch {
    Point2 src;
    Point2 dst;
    long sad = 0;
};

/// Exhaustive SAD search over the (2r+1)^2 displacements around p + init.
/// Ties go to the smallest displacement from the search center, then row-major order.
PointMatch track_block(const LumaPlane& prev, const LumaPlane& curr, Point2 p, Point2 init, int radius, int block);

/// Normalized linear least squares for the 8 free coefficients (h33 = 1).
Homography fit_homography(const std::vector<PointMatch>& matches);

struct MotionEstimate {
    Homography m;          // prev coords -> curr coords
    bool confident = true; // false when every level was degenerate
    int matches = 0;       // matches used at the finest fitted level
};

MotionEstimate calc_motion(const Pyramid& prev, const Pyramid& curr, const MotionConfig& cfg = {});
MotionEstimate calc_motion(const Frame& prev, const Frame& curr, const MotionConfig& cfg = {});

/// Maps level-(k+1) coordinates to level-k coordinates for the box pyramid.
Homography upscale_level(const Homography& coarse);

}  // namespace stitchstab
