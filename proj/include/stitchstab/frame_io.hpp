#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stitchstab/image.hpp"

namespace stitchstab {

class FrameIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StreamInfo {
    FrameDims dims;
    int fps_num = 30;
    int fps_den = 1;
};

/// Sequential frame source: a Y4M file (8-bit 4:2:0 or mono) or a directory of
/// PGM/PPM images read in lexicographic order.
class FrameReader {
public:
    virtual ~FrameReader() = default;
    virtual std::optional<Frame> next() = 0;
    /// Dimensions are known after the first frame for directories, from the header for Y4M.
    virtual StreamInfo info() const = 0;
};

class FrameWriter {
public:
    virtual ~FrameWriter() = default;
    virtual void write(const Frame& f) = 0;
    virtual void close() = 0;
    virtual int count() const = 0;
};

bool is_y4m_path(const std::string& path);

std::unique_ptr<FrameReader> open_reader(const std::string& path);

/// `.y4m` paths produce a Y4M file, anything else a directory of frame_NNNNNN.pgm/.ppm.
std::unique_ptr<FrameWriter> open_writer(const std::string& path, StreamInfo info = {});

std::vector<Frame> read_frames(const std::string& path);
void write_frames(const std::vector<Frame>& frames, const std::string& path, StreamInfo info = {});

/// BT.601 full-range conversions used for PPM input and output.
Frame frame_from_rgb(int width, int height, const std::vector<std::uint8_t>& rgb);
std::vector<std::uint8_t> frame_to_rgb(const Frame& f);

/// Single-image helpers (binary P5 / P6, maxval 255).
Frame read_pnm(const std::string& path);
void write_pnm(const std::string& path, const Frame& f);

}  // namespace stitchstab
