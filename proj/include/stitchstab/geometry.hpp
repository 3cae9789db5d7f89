#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace stitchstab {

class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// 3x3 projective transform, row-major. Transforms produced by this module are
/// kept normalized so that the bottom-right coefficient is 1.
struct Homography {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    double& operator()(int r, int c) { return m[r * 3 + c]; }
    double operator()(int r, int c) const { return m[r * 3 + c]; }

    static Homography identity() { return {}; }
    static Homography translation(double tx, double ty);
    static Homography scaling(double sx, double sy);
    static Homography from_rows(const std::array<double, 9>& rows);

    double determinant() const;
};

Homography normalize(const Homography& h);
Homography multiply(const Homography& a, const Homography& b);  // raw product, no normalization
Homography compose(const Homography& a, const Homography& b);   // normalize(a * b)
Homography invert(const Homography& h);

/// Maps p through h with Euclidean division; throws GeometryError when the
/// homogeneous depth vanishes.
Point2 apply(const Homography& h, Point2 p);

/// Largest absolute elementwise difference after normalizing both operands.
double max_abs_diff(const Homography& a, const Homography& b);

struct FrameDims {
    int width = 0;
    int height = 0;
    bool operator==(const FrameDims&) const = default;
};

struct CameraParams {
    double focal = 0.0;      // pixels
    double cx = 0.0;         // principal point, pixels
    double cy = 0.0;
    double sensor_height = 0.0;  // effective rolling-shutter height, pixels
    FrameDims dims;

    /// Principal point at the frame center, effective height = factor * height.
    static CameraParams for_frame(FrameDims dims, double focal, double sensor_height_factor = 2.0);
    void validate() const;
};

struct EulerAngles {
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;
};

struct AngleDecomposition {
    EulerAngles angles;
    Homography residual;
};

/// K * R_yaw * R_pitch * R_roll * K^-1 with K built from the focal length and principal point.
Homography rotation_homography(double yaw, double pitch, double roll, const CameraParams& cam);
inline Homography rotation_homography(const EulerAngles& a, const CameraParams& cam) {
    return rotation_homography(a.yaw, a.pitch, a.roll, cam);
}

/// Rough yaw/pitch/roll read from the translation and shear terms:
/// yaw = asin(c'/l), pitch = -asin(f'/l), roll = atan(d'/e').
/// Coefficients are taken in principal-point-centered coordinates so a pure
/// translation keeps its c'/f' values.
EulerAngles estimate_angles(const Homography& n_inv, const CameraParams& cam);

/// q ~ R(angles) * residual.
AngleDecomposition decompose(const Homography& q, const CameraParams& cam);

struct Quad {
    std::array<Point2, 4> v;

    static Quad rect(double x0, double y0, double x1, double y1);
    double signed_area() const;
};

Quad transform_quad(const Quad& q, const Homography& h);

/// Convex quad containment; boundary counts as inside.
bool point_in_quad(const Quad& q, Point2 p, double tol = 1e-9);

/// True iff every vertex of crop and every sample along its edges lies in a or b.
bool quad_inside_union(const Quad& crop, const Quad& a, const Quad& b, int samples_per_edge = 64);

/// Exact variant: each crop edge is clipped against the convex quads a and b
/// and must be covered by the union of the two parameter intervals.
bool quad_edges_inside_union(const Quad& crop, const Quad& a, const Quad& b);

}  // namespace stitchstab
