#include "dfd/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dfd {

namespace {

[[noreturn]] void io_fail(const std::string& path, const std::string& why) {
    throw std::runtime_error(path + ": " + why);
}

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) io_fail(path, "cannot open for reading");
    f.seekg(0, std::ios::end);
    std::vector<uint8_t> buf(static_cast<size_t>(f.tellg()));
    f.seekg(0);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) io_fail(path, "short read");
    return buf;
}

void write_file(const std::string& path, const void* data, size_t n) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) io_fail(path, "cannot open for writing");
    f.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!f) io_fail(path, "short write");
}

void put_u32be(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

uint32_t get_u32be(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | p[3];
}

void append_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& body) {
    put_u32be(out, uint32_t(body.size()));
    const size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), body.begin(), body.end());
    const uint32_t crc =
        uint32_t(::crc32(0L, out.data() + start, uInt(out.size() - start)));
    put_u32be(out, crc);
}

const uint8_t kPngSig[8] = {137, 80, 78, 71, 13, 10, 26, 10};

void validate_raw(const RawImage& img, const std::string& path) {
    if (img.width <= 0 || img.height <= 0) io_fail(path, "empty image");
    if (img.channels != 1 && img.channels != 3) io_fail(path, "channels must be 1 or 3");
    if (img.bit_depth != 8 && img.bit_depth != 16) io_fail(path, "bit depth must be 8 or 16");
    if (img.data.size() != size_t(img.width) * img.height * img.channels)
        io_fail(path, "sample count does not match dimensions");
}

} // namespace

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

void write_png(const std::string& path, const RawImage& img) {
    validate_raw(img, path);
    const int bytes = img.bit_depth / 8;
    const size_t stride = size_t(img.width) * img.channels * bytes;

    // Filter type 0 on every scanline keeps the stream simple and reproducible.
    std::vector<uint8_t> rawrows((stride + 1) * img.height);
    size_t o = 0;
    for (int y = 0; y < img.height; ++y) {
        rawrows[o++] = 0;
        const uint16_t* row = img.data.data() + size_t(y) * img.width * img.channels;
        for (int i = 0; i < img.width * img.channels; ++i) {
            const uint16_t v = row[i];
            if (bytes == 2) {
                rawrows[o++] = uint8_t(v >> 8);
                rawrows[o++] = uint8_t(v);
            } else {
                rawrows[o++] = uint8_t(v);
            }
        }
    }

    uLongf comp_cap = compressBound(uLong(rawrows.size()));
    std::vector<uint8_t> comp(comp_cap);
    if (compress2(comp.data(), &comp_cap, rawrows.data(), uLong(rawrows.size()), 6) != Z_OK)
        io_fail(path, "deflate failed");
    comp.resize(comp_cap);

    std::vector<uint8_t> out(kPngSig, kPngSig + 8);
    std::vector<uint8_t> ihdr;
    put_u32be(ihdr, uint32_t(img.width));
    put_u32be(ihdr, uint32_t(img.height));
    ihdr.push_back(uint8_t(img.bit_depth));
    ihdr.push_back(img.channels == 1 ? 0 : 2);
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", comp);
    append_chunk(out, "IEND", {});
    write_file(path, out.data(), out.size());
}

RawImage read_png(const std::string& path) {
    const std::vector<uint8_t> buf = read_file(path);
    if (buf.size() < 8 || std::memcmp(buf.data(), kPngSig, 8) != 0)
        io_fail(path, "not a PNG file");

    RawImage img;
    std::vector<uint8_t> idat;
    size_t pos = 8;
    bool seen_ihdr = false;
    while (pos + 12 <= buf.size()) {
        const uint32_t len = get_u32be(&buf[pos]);
        if (pos + 12 + len > buf.size()) io_fail(path, "truncated chunk");
        const char* type = reinterpret_cast<const char*>(&buf[pos + 4]);
        const uint8_t* body = &buf[pos + 8];
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) io_fail(path, "bad IHDR");
            img.width = int(get_u32be(body));
            img.height = int(get_u32be(body + 4));
            img.bit_depth = body[8];
            const int color = body[9];
            if (body[12] != 0) io_fail(path, "interlaced PNG not supported");
            if (color == 0) img.channels = 1;
            else if (color == 2) img.channels = 3;
            else io_fail(path, "only grayscale or RGB PNG supported");
            if (img.bit_depth != 8 && img.bit_depth != 16)
                io_fail(path, "only 8/16-bit PNG supported");
            seen_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), body, body + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            break;
        }
        pos += 12 + len;
    }
    if (!seen_ihdr || idat.empty()) io_fail(path, "missing IHDR or IDAT");

    const int bytes = img.bit_depth / 8;
    const int bpp = img.channels * bytes; // filter unit in bytes
    const size_t stride = size_t(img.width) * bpp;
    std::vector<uint8_t> rows((stride + 1) * img.height);
    uLongf outlen = uLongf(rows.size());
    if (uncompress(rows.data(), &outlen, idat.data(), uLong(idat.size())) != Z_OK ||
        outlen != rows.size())
        io_fail(path, "inflate failed");

    // Undo per-scanline filters in place.
    std::vector<uint8_t> prev(stride, 0);
    img.data.resize(size_t(img.width) * img.height * img.channels);
    for (int y = 0; y < img.height; ++y) {
        const uint8_t filter = rows[size_t(y) * (stride + 1)];
        uint8_t* cur = &rows[size_t(y) * (stride + 1) + 1];
        for (size_t i = 0; i < stride; ++i) {
            const int a = i >= size_t(bpp) ? cur[i - bpp] : 0;
            const int b = prev[i];
            const int c = i >= size_t(bpp) ? prev[i - bpp] : 0;
            int add = 0;
            switch (filter) {
                case 0: add = 0; break;
                case 1: add = a; break;
                case 2: add = b; break;
                case 3: add = (a + b) / 2; break;
                case 4: {
                    const int p = a + b - c;
                    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
                    add = (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
                    break;
                }
                default: io_fail(path, "unknown PNG filter type");
            }
            cur[i] = uint8_t((cur[i] + add) & 0xff);
        }
        std::memcpy(prev.data(), cur, stride);
        uint16_t* dst = img.data.data() + size_t(y) * img.width * img.channels;
        for (int i = 0; i < img.width * img.channels; ++i)
            dst[i] = bytes == 2 ? uint16_t((cur[2 * i] << 8) | cur[2 * i + 1]) : cur[i];
    }
    return img;
}

// ---------------------------------------------------------------------------
// PGM (P5)
// ---------------------------------------------------------------------------

void write_pgm(const std::string& path, const RawImage& img) {
    validate_raw(img, path);
    if (img.channels != 1) io_fail(path, "PGM is grayscale only");
    std::vector<uint8_t> out;
    char header[64];
    const int maxval = img.bit_depth == 16 ? 65535 : 255;
    const int n = std::snprintf(header, sizeof header, "P5\n%d %d\n%d\n",
                                img.width, img.height, maxval);
    out.insert(out.end(), header, header + n);
    for (uint16_t v : img.data) {
        if (img.bit_depth == 16) out.push_back(uint8_t(v >> 8));
        out.push_back(uint8_t(v & 0xff));
    }
    write_file(path, out.data(), out.size());
}

RawImage read_pgm(const std::string& path) {
    const std::vector<uint8_t> buf = read_file(path);
    size_t pos = 0;
    auto token = [&]() -> long {
        // skip whitespace and comments
        while (pos < buf.size()) {
            if (std::isspace(buf[pos])) { ++pos; continue; }
            if (buf[pos] == '#') {
                while (pos < buf.size() && buf[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
        long v = 0;
        bool any = false;
        while (pos < buf.size() && std::isdigit(buf[pos])) {
            v = v * 10 + (buf[pos] - '0');
            ++pos;
            any = true;
        }
        if (!any) io_fail(path, "malformed PGM header");
        return v;
    };
    if (buf.size() < 2 || buf[0] != 'P' || buf[1] != '5') io_fail(path, "not a binary PGM");
    pos = 2;
    RawImage img;
    img.channels = 1;
    img.width = int(token());
    img.height = int(token());
    const long maxval = token();
    img.bit_depth = maxval > 255 ? 16 : 8;
    ++pos; // single whitespace after maxval
    const int bytes = img.bit_depth / 8;
    const size_t need = size_t(img.width) * img.height * bytes;
    if (buf.size() - pos < need) io_fail(path, "truncated PGM data");
    img.data.resize(size_t(img.width) * img.height);
    for (size_t i = 0; i < img.data.size(); ++i)
        img.data[i] = bytes == 2 ? uint16_t((buf[pos + 2 * i] << 8) | buf[pos + 2 * i + 1])
                                 : buf[pos + i];
    return img;
}

// ---------------------------------------------------------------------------
// PFM (grayscale, float32)
// ---------------------------------------------------------------------------

void write_pfm(const std::string& path, const ScalarImage& img) {
    std::vector<uint8_t> out;
    char header[64];
    const int n = std::snprintf(header, sizeof header, "Pf\n%d %d\n-1.0\n",
                                img.width(), img.height());
    out.insert(out.end(), header, header + n);
    // Bottom-to-top rows, little-endian floats (negative scale).
    for (int y = img.height() - 1; y >= 0; --y)
        for (int x = 0; x < img.width(); ++x) {
            const float v = float(img.at(x, y));
            uint8_t b[4];
            std::memcpy(b, &v, 4);
            out.insert(out.end(), b, b + 4);
        }
    write_file(path, out.data(), out.size());
}

ScalarImage read_pfm(const std::string& path) {
    const std::vector<uint8_t> buf = read_file(path);
    std::string head(reinterpret_cast<const char*>(buf.data()),
                     std::min<size_t>(buf.size(), 128));
    std::istringstream hs(head);
    std::string magic;
    int w = 0, h = 0;
    double scale = 0.0;
    hs >> magic >> w >> h >> scale;
    if (magic != "Pf" || w <= 0 || h <= 0 || scale == 0.0 || !hs)
        io_fail(path, "not a grayscale PFM");
    size_t pos = size_t(hs.tellg());
    ++pos; // single whitespace after scale
    const bool little = scale < 0.0;
    const size_t need = size_t(w) * h * 4;
    if (buf.size() - pos < need) io_fail(path, "truncated PFM data");
    ScalarImage img(w, h);
    for (int row = 0; row < h; ++row) {
        const int y = h - 1 - row; // stored bottom-to-top
        for (int x = 0; x < w; ++x) {
            uint8_t b[4];
            std::memcpy(b, &buf[pos], 4);
            pos += 4;
            if (!little) std::swap(b[0], b[3]), std::swap(b[1], b[2]);
            float v;
            std::memcpy(&v, b, 4);
            img.at(x, y) = v;
        }
    }
    return img;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

void write_csv(const std::string& path, const ScalarImage& img) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) io_fail(path, "cannot open for writing");
    char buf[40];
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            std::snprintf(buf, sizeof buf, "%.17g", img.at(x, y));
            f << buf << (x + 1 < img.width() ? "," : "\n");
        }
    }
    if (!f) io_fail(path, "short write");
}

ScalarImage read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) io_fail(path, "cannot open for reading");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows[0].size())
            io_fail(path, "ragged CSV rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) io_fail(path, "empty CSV");
    ScalarImage img(int(rows[0].size()), int(rows.size()));
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) img.at(x, y) = rows[y][x];
    return img;
}

// ---------------------------------------------------------------------------
// Conversions
// ---------------------------------------------------------------------------

ScalarImage to_gray(const RawImage& raw) {
    ScalarImage img(raw.width, raw.height);
    const double scale = raw.bit_depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
    for (int y = 0; y < raw.height; ++y)
        for (int x = 0; x < raw.width; ++x) {
            const uint16_t* px = raw.data.data() +
                                 (size_t(y) * raw.width + x) * raw.channels;
            double acc = 0.0;
            for (int c = 0; c < raw.channels; ++c) acc += px[c];
            img.at(x, y) = acc / raw.channels * scale;
        }
    return img;
}

RawImage quantize(const ScalarImage& img, double lo, double hi, int bit_depth) {
    if (!(hi > lo)) hi = lo + 1.0;
    RawImage raw;
    raw.width = img.width();
    raw.height = img.height();
    raw.channels = 1;
    raw.bit_depth = bit_depth;
    raw.data.resize(img.size());
    const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
    for (size_t i = 0; i < img.size(); ++i) {
        const double t = std::clamp((img[i] - lo) / (hi - lo), 0.0, 1.0);
        raw.data[i] = uint16_t(std::lround(t * maxv));
    }
    return raw;
}

ScalarImage dequantize(const RawImage& raw, double lo, double hi) {
    ScalarImage img(raw.width, raw.height);
    const double maxv = raw.bit_depth == 16 ? 65535.0 : 255.0;
    for (size_t i = 0; i < img.size(); ++i)
        img[i] = lo + (hi - lo) * (raw.data[i] / maxv);
    return img;
}

void write_mask_png(const std::string& path, const MaskImage& mask) {
    RawImage raw;
    raw.width = mask.width();
    raw.height = mask.height();
    raw.channels = 1;
    raw.bit_depth = 8;
    raw.data.resize(mask.size());
    for (size_t i = 0; i < mask.size(); ++i) raw.data[i] = mask[i] ? 255 : 0;
    write_png(path, raw);
}

void write_colormap_png(const std::string& path, const ScalarImage& img,
                        const MaskImage& valid, double lo, double hi) {
    // Fixed 5-stop ramp: dark blue - cyan - green - yellow - red.
    static const double stops[5][3] = {
        {0.05, 0.03, 0.35}, {0.0, 0.7, 0.9}, {0.1, 0.75, 0.2},
        {0.95, 0.9, 0.1}, {0.85, 0.1, 0.05}};
    if (!(hi > lo)) hi = lo + 1.0;
    RawImage raw;
    raw.width = img.width();
    raw.height = img.height();
    raw.channels = 3;
    raw.bit_depth = 8;
    raw.data.assign(img.size() * 3, 0);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            if (!valid.at(x, y)) continue;
            double t = std::clamp((img.at(x, y) - lo) / (hi - lo), 0.0, 1.0) * 4.0;
            const int k = std::min(3, int(t));
            t -= k;
            uint16_t* px = raw.data.data() + (size_t(y) * img.width() + x) * 3;
            for (int c = 0; c < 3; ++c)
                px[c] = uint16_t(std::lround(
                    255.0 * ((1.0 - t) * stops[k][c] + t * stops[k + 1][c])));
        }
    write_png(path, raw);
}

} // namespace dfd
