#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stitchstab/geometry.hpp"
#include "stitchstab/image.hpp"

namespace stitchstab {

/// Portable seeded generator (mt19937_64 with explicit double conversion).
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    std::uint64_t next_u64();
    double uniform();                    // [0, 1)
    double uniform(double lo, double hi);
    double gaussian();                   // standard normal, Box-Muller
    int below(int n);                    // [0, n)

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

struct SynthSpec {
    FrameDims dims{480, 270};
    int frames = 300;
    double focal = 0.0;                  // 0 = frame width
    std::uint64_t seed = 1;
    EulerAngles base_amplitude{0.05, 0.025, 0.0125};  // radians, periodic shake
    double base_period = 10.0;                      // frames
    EulerAngles pan{0.0, 0.0, 0.0};                 // radians per frame
    EulerAngles noise{0.002, 0.002, 0.001};         // per-frame jitter sigma, radians
    double rs_strength = 0.0;            // fraction of the inter-frame motion spread over the rows
    int source_scale = 2;                // source is source_scale x frame size
    bool chroma = false;

    double focal_px() const { return focal > 0 ? focal : dims.width; }
    void validate() const;
};

struct SynthSequence {
    std::vector<Frame> frames;
    std::vector<EulerAngles> truth;   // camera angles per frame
    std::vector<Homography> motions;  // motions[k]: frame k-1 -> frame k (motions[0] = I)
};

/// Procedural textured still (value noise plus random blocks).
LumaPlane make_source(FrameDims dims, std::uint64_t seed);

/// Per-frame camera angles: smooth sinusoids + pan + Gaussian shake.
std::vector<EulerAngles> synth_path(const SynthSpec& spec);

/// Homography from frame pixel coordinates to source pixel coordinates for given angles.
Homography view_homography(const EulerAngles& a, const SynthSpec& spec);

SynthSequence synth_generate(const SynthSpec& spec);

void write_ground_truth(const std::string& path, const std::vector<EulerAngles>& truth);
std::vector<EulerAngles> read_ground_truth(const std::string& path);

}  // namespace stitchstab
