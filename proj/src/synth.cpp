#include "stitchstab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stitchstab {

namespace {
constexpr double kTwoPi = 6.283185307179586476925;
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    has_spare_ = true;
    return r * std::cos(kTwoPi * u2);
}

int Rng::below(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

void SynthSpec::validate() const {
    if (dims.width < 32 || dims.height < 32) throw std::invalid_argument("synth: frames must be at least 32x32");
    if (frames < 1) throw std::invalid_argument("synth: frame count must be >= 1");
    if (source_scale < 2) throw std::invalid_argument("synth: source must be at least 2x the frame size");
    if (!(focal_px() > 0)) throw std::invalid_argument("synth: focal length must be positive");
}

LumaPlane make_source(FrameDims dims, std::uint64_t seed) {
    Rng rng(seed ^ 0x5eedf00dULL);
    const int w = dims.width, h = dims.height;
    std::vector<double> acc(static_cast<size_t>(w) * h, 0.0);
    double amp = 1.0, total = 0.0;
    for (int cell = 64; cell >= 4; cell /= 2) {
        const int gw = w / cell + 2, gh = h / cell + 2;
        std::vector<double> lattice(static_cast<size_t>(gw) * gh);
        for (auto& v : lattice) v = rng.uniform();
        for (int y = 0; y < h; ++y) {
            const int gy = y / cell;
            double ty = static_cast<double>(y % cell) / cell;
            ty = ty * ty * (3 - 2 * ty);
            for (int x = 0; x < w; ++x) {
                const int gx = x / cell;
                double tx = static_cast<double>(x % cell) / cell;
                tx = tx * tx * (3 - 2 * tx);
                const double a = lattice[gy * gw + gx], b = lattice[gy * gw + gx + 1];
                const double c = lattice[(gy + 1) * gw + gx], d = lattice[(gy + 1) * gw + gx + 1];
                acc[static_cast<size_t>(y) * w + x] += amp * ((a + (b - a) * tx) + ((c + (d - c) * tx) - (a + (b - a) * tx)) * ty);
            }
        }
        total += amp;
        amp *= 0.6;
    }
    LumaPlane out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = static_cast<std::uint8_t>(std::lround(40 + 175 * acc[static_cast<size_t>(y) * w + x] / total));

    // Hard-edged blocks give the corner detector something to lock onto.
    const int blocks = std::max(8, w * h / 4000);
    for (int i = 0; i < blocks; ++i) {
        const int bw = 6 + rng.below(std::max(1, w / 24));
        const int bh = 6 + rng.below(std::max(1, h / 24));
        const int x0 = rng.below(std::max(1, w - bw)), y0 = rng.below(std::max(1, h - bh));
        const auto shade = static_cast<std::uint8_t>(rng.below(256));
        for (int y = y0; y < std::min(h, y0 + bh); ++y)
            for (int x = x0; x < std::min(w, x0 + bw); ++x) out.at(x, y) = shade;
    }
    return out;
}

std::vector<EulerAngles> synth_path(const SynthSpec& spec) {
    Rng rng(spec.seed);
    double phase[3][2];
    for (auto& axis : phase)
        for (double& p : axis) p = rng.uniform(0, kTwoPi);
    std::vector<EulerAngles> path(spec.frames);
    const double base[3] = {spec.base_amplitude.yaw, spec.base_amplitude.pitch, spec.base_amplitude.roll};
    const double pan[3] = {spec.pan.yaw, spec.pan.pitch, spec.pan.roll};
    const double noise[3] = {spec.noise.yaw, spec.noise.pitch, spec.noise.roll};
    for (int n = 0; n < spec.frames; ++n) {
        double v[3];
        for (int a = 0; a < 3; ++a) {
            const double t = kTwoPi * n / spec.base_period;
            v[a] = base[a] * (0.6 * std::sin(t + phase[a][0]) + 0.4 * std::sin(2.7 * t + phase[a][1])) + pan[a] * n +
                   noise[a] * rng.gaussian();
        }
        path[n] = {v[0], v[1], v[2]};
    }
    return path;
}

Homography view_homography(const EulerAngles& a, const SynthSpec& spec) {
    const CameraParams cam = CameraParams::for_frame(spec.dims, spec.focal_px());
    const double ox = 0.5 * (spec.source_scale - 1) * spec.dims.width;
    const double oy = 0.5 * (spec.source_scale - 1) * spec.dims.height;
    return normalize(multiply(Homography::translation(ox, oy), rotation_homography(a, cam)));
}

namespace {

EulerAngles row_angles(const std::vector<EulerAngles>& path, int n, double frac, double rs) {
    if (rs == 0.0 || path.size() < 2) return path[n];
    const int a = n + 1 < static_cast<int>(path.size()) ? n : n - 1;
    const EulerAngles d{path[a + 1].yaw - path[a].yaw, path[a + 1].pitch - path[a].pitch, path[a + 1].roll - path[a].roll};
    const double s = rs * frac;
    return {path[n].yaw + s * d.yaw, path[n].pitch + s * d.pitch, path[n].roll + s * d.roll};
}

LumaPlane chroma_source(FrameDims dims, std::uint64_t seed) { return make_source(dims, seed); }

}  // namespace

SynthSequence synth_generate(const SynthSpec& spec) {
    spec.validate();
    const FrameDims src_dims{spec.source_scale * spec.dims.width, spec.source_scale * spec.dims.height};
    const LumaPlane source = make_source(src_dims, spec.seed);
    LumaPlane src_cb, src_cr;
    if (spec.chroma) {
        const FrameDims c = chroma_dims(src_dims);
        src_cb = chroma_source(c, spec.seed + 101);
        src_cr = chroma_source(c, spec.seed + 202);
    }

    SynthSequence seq;
    seq.truth = synth_path(spec);
    const int w = spec.dims.width, h = spec.dims.height;

    for (int n = 0; n < spec.frames; ++n) {
        // Every row's view must stay inside the source.
        for (int y : {0, h - 1}) {
            const Homography v = view_homography(row_angles(seq.truth, n, static_cast<double>(y) / h, spec.rs_strength), spec);
            for (int x : {0, w - 1}) {
                const Point2 p = apply(v, {static_cast<double>(x), static_cast<double>(y)});
                if (p.x < 0 || p.y < 0 || p.x > src_dims.width - 1 || p.y > src_dims.height - 1) {
                    throw std::invalid_argument("synth: camera path leaves the source image at frame " + std::to_string(n));
                }
            }
        }
        Frame f;
        f.index = n;
        f.luma = LumaPlane(w, h);
        std::vector<Homography> rows(h);
        for (int y = 0; y < h; ++y) {
            rows[y] = view_homography(row_angles(seq.truth, n, static_cast<double>(y) / h, spec.rs_strength), spec);
            auto r = f.luma.row(y);
            for (int x = 0; x < w; ++x) {
                const Point2 p = apply(rows[y], {static_cast<double>(x), static_cast<double>(y)});
                r[x] = static_cast<std::uint8_t>(std::lround(sample_bilinear(source, p.x, p.y)));
            }
        }
        if (spec.chroma) {
            const FrameDims c = chroma_dims(spec.dims);
            f.cb = LumaPlane(c.width, c.height);
            f.cr = LumaPlane(c.width, c.height);
            for (int j = 0; j < c.height; ++j) {
                const Homography& v = rows[std::min(2 * j, h - 1)];
                for (int i = 0; i < c.width; ++i) {
                    const Point2 p = apply(v, {2 * i + 0.5, 2 * j + 0.5});
                    const double cx = (p.x - 0.5) / 2, cy = (p.y - 0.5) / 2;
                    f.cb->at(i, j) = static_cast<std::uint8_t>(std::lround(sample_bilinear(src_cb, cx, cy)));
                    f.cr->at(i, j) = static_cast<std::uint8_t>(std::lround(sample_bilinear(src_cr, cx, cy)));
                }
            }
        }
        seq.frames.push_back(std::move(f));
    }

    seq.motions.push_back(Homography::identity());
    for (int n = 1; n < spec.frames; ++n) {
        seq.motions.push_back(normalize(multiply(invert(view_homography(seq.truth[n], spec)),
                                                 view_homography(seq.truth[n - 1], spec))));
    }
    return seq;
}

void write_ground_truth(const std::string& path, const std::vector<EulerAngles>& truth) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    char buf[128];
    for (const auto& a : truth) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", a.yaw, a.pitch, a.roll);
        f << buf;
    }
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<EulerAngles> read_ground_truth(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path);
    std::vector<EulerAngles> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        EulerAngles a;
        if (!(ls >> a.yaw >> a.pitch >> a.roll)) throw std::runtime_error("bad ground-truth line in " + path);
        out.push_back(a);
    }
    return out;
}

}  // namespace stitchstab
