#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "stitchstab/geometry.hpp"

namespace stitchstab {

/// Row-major single-channel raster.
template <typename T>
class Plane {
public:
    Plane() = default;
    Plane(int width, int height, T fill = T{}) : width_(width), height_(height), data_(static_cast<size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    FrameDims dims() const { return {width_, height_}; }
    bool empty() const { return data_.empty(); }

    T& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
    const T& at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }

    std::span<T> row(int y) { return {data_.data() + static_cast<size_t>(y) * width_, static_cast<size_t>(width_)}; }
    std::span<const T> row(int y) const {
        return {data_.data() + static_cast<size_t>(y) * width_, static_cast<size_t>(width_)};
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool operator==(const Plane&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using LumaPlane = Plane<std::uint8_t>;
using Mask = Plane<std::uint8_t>;

/// 8-bit frame: luma always, optional 4:2:0 chroma (Cb, Cr at ceil(w/2) x ceil(h/2)).
struct Frame {
    int index = 0;
    LumaPlane luma;
    std::optional<LumaPlane> cb;
    std::optional<LumaPlane> cr;

    int width() const { return luma.width(); }
    int height() const { return luma.height(); }
    FrameDims dims() const { return luma.dims(); }
    bool has_chroma() const { return cb.has_value() && cr.has_value(); }
    void validate() const;
};

FrameDims chroma_dims(FrameDims luma);

/// Half-size 2x2 box average (dimensions rounded down).
LumaPlane downsample_box(const LumaPlane& src);

/// Bilinear sample at index coordinates (pixel k sits at k); coordinates are
/// clamped to the plane so edge samples stay defined.
double sample_bilinear(const LumaPlane& plane, double x, double y);

}  // namespace stitchstab
