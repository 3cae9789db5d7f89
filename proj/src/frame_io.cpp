#include "stitchstab/frame_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace stitchstab {

bool is_y4m_path(const std::string& path) {
    const std::string ext = fs::path(path).extension().string();
    std::string lower = ext;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return lower == ".y4m";
}

namespace {

std::uint8_t clamp_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

void read_exact(std::istream& in, std::uint8_t* dst, size_t n, const std::string& what) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n) throw FrameIoError("truncated data in " + what);
}

// ---- Y4M ----

class Y4mReader : public FrameReader {
public:
    explicit Y4mReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) throw FrameIoError("cannot open " + path);
        std::string header;
        if (!std::getline(in_, header)) throw FrameIoError("empty Y4M file: " + path);
        std::istringstream hs(header);
        std::string tok;
        hs >> tok;
        if (tok != "YUV4MPEG2") throw FrameIoError("not a Y4M stream: " + path);
        std::string colorspace = "420jpeg";
        while (hs >> tok) {
            const char tag = tok[0];
            const std::string val = tok.substr(1);
            if (tag == 'W') info_.dims.width = std::stoi(val);
            else if (tag == 'H') info_.dims.height = std::stoi(val);
            else if (tag == 'C') colorspace = val;
            else if (tag == 'F') {
                const auto colon = val.find(':');
                if (colon != std::string::npos) {
                    info_.fps_num = std::stoi(val.substr(0, colon));
                    info_.fps_den = std::stoi(val.substr(colon + 1));
                }
            }
        }
        if (colorspace == "mono") {
            chroma_ = false;
        } else if (colorspace == "420jpeg" || colorspace == "420" || colorspace == "420mpeg2" || colorspace == "420paldv") {
            chroma_ = true;
        } else {
            throw FrameIoError("unsupported Y4M colorspace C" + colorspace + " (8-bit 4:2:0 or mono only)");
        }
        if (info_.dims.width < 0 || info_.dims.height < 0) throw FrameIoError("bad Y4M dimensions");
    }

    std::optional<Frame> next() override {
        if (info_.dims.width == 0 || info_.dims.height == 0) return std::nullopt;
        std::string line;
        if (!std::getline(in_, line)) return std::nullopt;
        if (line.rfind("FRAME", 0) != 0) throw FrameIoError("bad Y4M frame marker in " + path_);
        Frame f;
        f.index = index_++;
        f.luma = LumaPlane(info_.dims.width, info_.dims.height);
        read_exact(in_, f.luma.data().data(), f.luma.data().size(), path_);
        if (chroma_) {
            const FrameDims c = chroma_dims(info_.dims);
            f.cb = LumaPlane(c.width, c.height);
            f.cr = LumaPlane(c.width, c.height);
            read_exact(in_, f.cb->data().data(), f.cb->data().size(), path_);
            read_exact(in_, f.cr->data().data(), f.cr->data().size(), path_);
        }
        return f;
    }

    StreamInfo info() const override { return info_; }

private:
    std::string path_;
    std::ifstream in_;
    StreamInfo info_;
    bool chroma_ = true;
    int index_ = 0;
};

class Y4mWriter : public FrameWriter {
public:
    Y4mWriter(const std::string& path, StreamInfo info) : path_(path), info_(info) {
        if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
        out_.open(path, std::ios::binary);
        if (!out_) throw FrameIoError("cannot write " + path);
    }
    ~Y4mWriter() override {
        try {
            close();
        } catch (...) {
        }
    }

    void write(const Frame& f) override {
        f.validate();
        if (!header_written_) {
            info_.dims = f.dims();
            chroma_ = f.has_chroma();
            write_header();
        } else if (!(f.dims() == info_.dims)) {
            throw FrameIoError("frame size changed mid-stream");
        }
        out_ << "FRAME\n";
        out_.write(reinterpret_cast<const char*>(f.luma.data().data()), static_cast<std::streamsize>(f.luma.data().size()));
        if (chroma_) {
            const FrameDims c = chroma_dims(f.dims());
            if (f.has_chroma()) {
                out_.write(reinterpret_cast<const char*>(f.cb->data().data()), static_cast<std::streamsize>(f.cb->data().size()));
                out_.write(reinterpret_cast<const char*>(f.cr->data().data()), static_cast<std::streamsize>(f.cr->data().size()));
            } else {
                const std::string gray(static_cast<size_t>(2) * c.width * c.height, static_cast<char>(128));
                out_.write(gray.data(), static_cast<std::streamsize>(gray.size()));
            }
        }
        if (!out_) throw FrameIoError("write failed: " + path_);
        ++count_;
    }

    void close() override {
        if (closed_) return;
        if (!header_written_) write_header();
        out_.close();
        closed_ = true;
        if (out_.fail()) throw FrameIoError("write failed: " + path_);
    }

    int count() const override { return count_; }

private:
    void write_header() {
        out_ << "YUV4MPEG2 W" << info_.dims.width << " H" << info_.dims.height << " F" << info_.fps_num << ':'
             << info_.fps_den << " Ip A1:1 C" << (chroma_ ? "420jpeg" : "mono") << "\n";
        header_written_ = true;
    }

    std::string path_;
    StreamInfo info_;
    std::ofstream out_;
    bool header_written_ = false;
    bool chroma_ = true;
    bool closed_ = false;
    int count_ = 0;
};

// ---- PNM ----

void skip_ws_and_comments(std::istream& in) {
    for (;;) {
        const int c = in.peek();
        if (c == '#') {
            std::string dummy;
            std::getline(in, dummy);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

int read_header_int(std::istream& in, const std::string& path) {
    skip_ws_and_comments(in);
    int v = -1;
    in >> v;
    if (!in || v < 0) throw FrameIoError("bad PNM header in " + path);
    return v;
}

bool has_image_ext(const fs::path& p) {
    std::string e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
    return e == ".pgm" || e == ".ppm" || e == ".pnm";
}

class DirReader : public FrameReader {
public:
    explicit DirReader(const std::string& dir) {
        if (!fs::is_directory(dir)) throw FrameIoError("not a directory or Y4M file: " + dir);
        for (const auto& e : fs::directory_iterator(dir)) {
            if (e.is_regular_file() && has_image_ext(e.path())) files_.push_back(e.path().string());
        }
        std::sort(files_.begin(), files_.end());
    }

    std::optional<Frame> next() override {
        if (pos_ >= files_.size()) return std::nullopt;
        Frame f = read_pnm(files_[pos_]);
        f.index = static_cast<int>(pos_);
        ++pos_;
        if (info_.dims.width == 0) {
            info_.dims = f.dims();
        } else if (!(f.dims() == info_.dims)) {
            throw FrameIoError("frame size changed mid-stream at " + files_[pos_ - 1]);
        }
        return f;
    }

    StreamInfo info() const override { return info_; }

private:
    std::vector<std::string> files_;
    size_t pos_ = 0;
    StreamInfo info_;
};

class DirWriter : public FrameWriter {
public:
    explicit DirWriter(const std::string& dir) : dir_(dir) { fs::create_directories(dir); }

    void write(const Frame& f) override {
        f.validate();
        if (count_ > 0 && !(f.dims() == dims_)) throw FrameIoError("frame size changed mid-stream");
        dims_ = f.dims();
        char name[32];
        std::snprintf(name, sizeof name, "frame_%06d.%s", count_, f.has_chroma() ? "ppm" : "pgm");
        write_pnm((fs::path(dir_) / name).string(), f);
        ++count_;
    }
    void close() override {}
    int count() const override { return count_; }

private:
    std::string dir_;
    FrameDims dims_;
    int count_ = 0;
};

}  // namespace

Frame frame_from_rgb(int width, int height, const std::vector<std::uint8_t>& rgb) {
    Frame f;
    f.luma = LumaPlane(width, height);
    const FrameDims c = chroma_dims({width, height});
    f.cb = LumaPlane(c.width, c.height);
    f.cr = LumaPlane(c.width, c.height);
    std::vector<double> cb(static_cast<size_t>(width) * height), cr(cb.size());
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const size_t i = static_cast<size_t>(y) * width + x;
            const double r = rgb[3 * i], g = rgb[3 * i + 1], b = rgb[3 * i + 2];
            f.luma.at(x, y) = clamp_u8(0.299 * r + 0.587 * g + 0.114 * b);
            cb[i] = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
            cr[i] = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
        }
    }
    for (int j = 0; j < c.height; ++j) {
        for (int i = 0; i < c.width; ++i) {
            double sb = 0, sr = 0;
            int n = 0;
            for (int y = 2 * j; y < std::min(2 * j + 2, height); ++y)
                for (int x = 2 * i; x < std::min(2 * i + 2, width); ++x) {
                    sb += cb[static_cast<size_t>(y) * width + x];
                    sr += cr[static_cast<size_t>(y) * width + x];
                    ++n;
                }
            f.cb->at(i, j) = clamp_u8(sb / n);
            f.cr->at(i, j) = clamp_u8(sr / n);
        }
    }
    return f;
}

std::vector<std::uint8_t> frame_to_rgb(const Frame& f) {
    std::vector<std::uint8_t> rgb(static_cast<size_t>(3) * f.width() * f.height());
    for (int y = 0; y < f.height(); ++y) {
        for (int x = 0; x < f.width(); ++x) {
            const double yy = f.luma.at(x, y);
            const double cb = f.has_chroma() ? f.cb->at(x / 2, y / 2) - 128.0 : 0.0;
            const double cr = f.has_chroma() ? f.cr->at(x / 2, y / 2) - 128.0 : 0.0;
            const size_t i = 3 * (static_cast<size_t>(y) * f.width() + x);
            rgb[i] = clamp_u8(yy + 1.402 * cr);
            rgb[i + 1] = clamp_u8(yy - 0.344136 * cb - 0.714136 * cr);
            rgb[i + 2] = clamp_u8(yy + 1.772 * cb);
        }
    }
    return rgb;
}

Frame read_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FrameIoError("cannot open " + path);
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    if (magic != "P5" && magic != "P6") throw FrameIoError("unsupported image format (binary PGM/PPM only): " + path);
    const int w = read_header_int(in, path);
    const int h = read_header_int(in, path);
    const int maxval = read_header_int(in, path);
    if (maxval != 255) throw FrameIoError("unsupported bit depth (maxval " + std::to_string(maxval) + ") in " + path);
    in.get();  // single whitespace before the raster
    if (magic == "P5") {
        Frame f;
        f.luma = LumaPlane(w, h);
        read_exact(in, f.luma.data().data(), f.luma.data().size(), path);
        return f;
    }
    std::vector<std::uint8_t> rgb(static_cast<size_t>(3) * w * h);
    read_exact(in, rgb.data(), rgb.size(), path);
    return frame_from_rgb(w, h, rgb);
}

void write_pnm(const std::string& path, const Frame& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FrameIoError("cannot write " + path);
    if (f.has_chroma()) {
        out << "P6\n" << f.width() << ' ' << f.height() << "\n255\n";
        const auto rgb = frame_to_rgb(f);
        out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    } else {
        out << "P5\n" << f.width() << ' ' << f.height() << "\n255\n";
        out.write(reinterpret_cast<const char*>(f.luma.data().data()), static_cast<std::streamsize>(f.luma.data().size()));
    }
    if (!out) throw FrameIoError("write failed: " + path);
}

std::unique_ptr<FrameReader> open_reader(const std::string& path) {
    if (is_y4m_path(path) || (fs::is_regular_file(path))) return std::make_unique<Y4mReader>(path);
    return std::make_unique<DirReader>(path);
}

std::unique_ptr<FrameWriter> open_writer(const std::string& path, StreamInfo info) {
    if (is_y4m_path(path)) return std::make_unique<Y4mWriter>(path, info);
    return std::make_unique<DirWriter>(path);
}

std::vector<Frame> read_frames(const std::string& path) {
    auto r = open_reader(path);
    std::vector<Frame> out;
    while (auto f = r->next()) out.push_back(std::move(*f));
    return out;
}

void write_frames(const std::vector<Frame>& frames, const std::string& path, StreamInfo info) {
    auto w = open_writer(path, info);
    for (const auto& f : frames) w->write(f);
    w->close();
}

}  // namespace stitchstab
