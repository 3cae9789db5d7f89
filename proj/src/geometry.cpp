#include "stitchstab/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace stitchstab {

Homography Homography::translation(double tx, double ty) {
    return from_rows({1, 0, tx, 0, 1, ty, 0, 0, 1});
}

Homography Homography::scaling(double sx, double sy) {
    return from_rows({sx, 0, 0, 0, sy, 0, 0, 0, 1});
}

Homography Homography::from_rows(const std::array<double, 9>& rows) {
    Homography h;
    h.m = rows;
    return h;
}

double Homography::determinant() const {
    const auto& a = m;
    return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
           a[2] * (a[3] * a[7] - a[4] * a[6]);
}

Homography normalize(const Homography& h) {
    const double s = h.m[8];
    if (std::abs(s) < 1e-300) return h;
    Homography out;
    for (int i = 0; i < 9; ++i) out.m[i] = h.m[i] / s;
    out.m[8] = 1.0;
    return out;
}

Homography multiply(const Homography& a, const Homography& b) {
    Homography out;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            out(r, c) = a(r, 0) * b(0, c) + a(r, 1) * b(1, c) + a(r, 2) * b(2, c);
        }
    }
    return out;
}

Homography compose(const Homography& a, const Homography& b) { return normalize(multiply(a, b)); }

Homography invert(const Homography& h) {
    const auto& a = h.m;
    const double det = h.determinant();
    double scale = 0.0;
    for (double v : a) scale = std::max(scale, std::abs(v));
    if (!(std::abs(det) > 1e-14 * scale * scale * scale)) {
        throw GeometryError("invert: singular homography");
    }
    Homography adj;
    adj.m = {a[4] * a[8] - a[5] * a[7], a[2] * a[7] - a[1] * a[8], a[1] * a[5] - a[2] * a[4],
             a[5] * a[6] - a[3] * a[8], a[0] * a[8] - a[2] * a[6], a[2] * a[3] - a[0] * a[5],
             a[3] * a[7] - a[4] * a[6], a[1] * a[6] - a[0] * a[7], a[0] * a[4] - a[1] * a[3]};
    for (double& v : adj.m) v /= det;
    return normalize(adj);
}

Point2 apply(const Homography& h, Point2 p) {
    const double w = h(2, 0) * p.x + h(2, 1) * p.y + h(2, 2);
    if (std::abs(w) < 1e-12) throw GeometryError("apply: point maps to infinity");
    return {(h(0, 0) * p.x + h(0, 1) * p.y + h(0, 2)) / w, (h(1, 0) * p.x + h(1, 1) * p.y + h(1, 2)) / w};
}

double max_abs_diff(const Homography& a, const Homography& b) {
    const Homography na = normalize(a);
    const Homography nb = normalize(b);
    double d = 0.0;
    for (int i = 0; i < 9; ++i) d = std::max(d, std::abs(na.m[i] - nb.m[i]));
    return d;
}

CameraParams CameraParams::for_frame(FrameDims dims, double focal, double sensor_height_factor) {
    CameraParams cam;
    cam.focal = focal;
    cam.cx = 0.5 * (dims.width - 1);
    cam.cy = 0.5 * (dims.height - 1);
    cam.sensor_height = sensor_height_factor * dims.height;
    cam.dims = dims;
    return cam;
}

void CameraParams::validate() const {
    if (!(focal > 0.0)) throw std::invalid_argument("camera: focal length must be positive");
    if (sensor_height < dims.height) {
        throw std::invalid_argument("camera: effective sensor height must be >= frame height");
    }
}

namespace {

Homography intrinsics(const CameraParams& cam) {
    return Homography::from_rows({cam.focal, 0, cam.cx, 0, cam.focal, cam.cy, 0, 0, 1});
}

Homography intrinsics_inverse(const CameraParams& cam) {
    const double il = 1.0 / cam.focal;
    return Homography::from_rows({il, 0, -cam.cx * il, 0, il, -cam.cy * il, 0, 0, 1});
}

}  // namespace

Homography rotation_homography(double yaw, double pitch, double roll, const CameraParams& cam) {
    const double ca = std::cos(yaw), sa = std::sin(yaw);
    const double cb = std::cos(pitch), sb = std::sin(pitch);
    const double cg = std::cos(roll), sg = std::sin(roll);
    const auto r_yaw = Homography::from_rows({ca, 0, sa, 0, 1, 0, -sa, 0, ca});
    const auto r_pitch = Homography::from_rows({1, 0, 0, 0, cb, -sb, 0, sb, cb});
    const auto r_roll = Homography::from_rows({cg, -sg, 0, sg, cg, 0, 0, 0, 1});
    const Homography r = multiply(multiply(r_yaw, r_pitch), r_roll);
    return normalize(multiply(multiply(intrinsics(cam), r), intrinsics_inverse(cam)));
}

EulerAngles estimate_angles(const Homography& n_inv, const CameraParams& cam) {
    const Homography to_pixels = Homography::translation(cam.cx, cam.cy);
    const Homography to_centered = Homography::translation(-cam.cx, -cam.cy);
    const Homography c = normalize(multiply(multiply(to_centered, n_inv), to_pixels));

    const double cp = std::clamp(c(0, 2) / cam.focal, -1.0, 1.0);
    const double fp = std::clamp(c(1, 2) / cam.focal, -1.0, 1.0);
    const double dp = c(1, 0);
    const double ep = c(1, 1);

    EulerAngles out;
    out.yaw = std::asin(cp);
    out.pitch = -std::asin(fp);
    if (dp == 0.0 && ep == 0.0) {
        out.roll = 0.0;
    } else if (ep == 0.0) {
        out.roll = std::copysign(M_PI / 2, dp);
    } else {
        out.roll = std::atan(dp / ep);
    }
    return out;
}

AngleDecomposition decompose(const Homography& q, const CameraParams& cam) {
    AngleDecomposition out;
    out.angles = estimate_angles(q, cam);
    out.residual = compose(invert(rotation_homography(out.angles, cam)), q);
    return out;
}

Quad Quad::rect(double x0, double y0, double x1, double y1) {
    return Quad{{Point2{x0, y0}, Point2{x1, y0}, Point2{x1, y1}, Point2{x0, y1}}};
}

double Quad::signed_area() const {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Point2& a = v[i];
        const Point2& b = v[(i + 1) % 4];
        s += a.x * b.y - b.x * a.y;
    }
    return 0.5 * s;
}

Quad transform_quad(const Quad& q, const Homography& h) {
    Quad out;
    for (int i = 0; i < 4; ++i) {
        const double w = h(2, 0) * q.v[i].x + h(2, 1) * q.v[i].y + h(2, 2);
        if (!(w > 1e-12)) throw GeometryError("transform_quad: vertex at or beyond infinity");
        out.v[i] = apply(h, q.v[i]);
    }
    return out;
}

namespace {

double cross(Point2 o, Point2 a, Point2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

// Parameter interval [t0, t1] of the segment p0->p1 lying inside convex q.
// Returns false when the intersection is empty.
bool clip_segment(const Quad& q, Point2 p0, Point2 p1, double tol, double& t0, double& t1) {
    const double orient = q.signed_area() >= 0 ? 1.0 : -1.0;
    t0 = 0.0;
    t1 = 1.0;
    const Point2 d{p1.x - p0.x, p1.y - p0.y};
    for (int i = 0; i < 4; ++i) {
        const Point2 a = q.v[i];
        const Point2 b = q.v[(i + 1) % 4];
        const Point2 e{b.x - a.x, b.y - a.y};
        const double base = orient * (e.x * (p0.y - a.y) - e.y * (p0.x - a.x)) + tol;
        const double slope = orient * (e.x * d.y - e.y * d.x);
        if (std::abs(slope) < 1e-300) {
            if (base < 0) return false;
            continue;
        }
        const double t = -base / slope;
        if (slope > 0) {
            t0 = std::max(t0, t);
        } else {
            t1 = std::min(t1, t);
        }
        if (t0 > t1) return false;
    }
    return true;
}

double edge_tolerance(const Quad& q) {
    double scale = 1.0;
    for (const auto& p : q.v) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
    return 1e-9 * scale;
}

}  // namespace

bool point_in_quad(const Quad& q, Point2 p, double tol) {
    const double orient = q.signed_area() >= 0 ? 1.0 : -1.0;
    const double t = tol * std::max(1.0, std::sqrt(std::abs(q.signed_area())));
    for (int i = 0; i < 4; ++i) {
        if (orient * cross(q.v[i], q.v[(i + 1) % 4], p) < -t) return false;
    }
    return true;
}

bool quad_inside_union(const Quad& crop, const Quad& a, const Quad& b, int samples_per_edge) {
    const int n = std::max(samples_per_edge, 1);
    for (int i = 0; i < 4; ++i) {
        const Point2 p0 = crop.v[i];
        const Point2 p1 = crop.v[(i + 1) % 4];
        for (int s = 0; s < n; ++s) {
            const double t = static_cast<double>(s) / n;
            const Point2 p{p0.x + t * (p1.x - p0.x), p0.y + t * (p1.y - p0.y)};
            if (!point_in_quad(a, p) && !point_in_quad(b, p)) return false;
        }
    }
    return true;
}

bool quad_edges_inside_union(const Quad& crop, const Quad& a, const Quad& b) {
    const double tol_a = edge_tolerance(a);
    const double tol_b = edge_tolerance(b);
    for (int i = 0; i < 4; ++i) {
        const Point2 p0 = crop.v[i];
        const Point2 p1 = crop.v[(i + 1) % 4];
        double a0, a1, b0, b1;
        const bool in_a = clip_segment(a, p0, p1, tol_a, a0, a1);
        const bool in_b = clip_segment(b, p0, p1, tol_b, b0, b1);
        constexpr double eps = 1e-12;
        if (in_a && a0 <= eps && a1 >= 1 - eps) continue;
        if (in_b && b0 <= eps && b1 >= 1 - eps) continue;
        if (!in_a || !in_b) return false;
        // Two intervals must chain from 0 to 1.
        const bool a_first = a0 <= eps && b1 >= 1 - eps && b0 <= a1 + eps;
        const bool b_first = b0 <= eps && a1 >= 1 - eps && a0 <= b1 + eps;
        if (!a_first && !b_first) return false;
    }
    return true;
}

}  // namespace stitchstab
