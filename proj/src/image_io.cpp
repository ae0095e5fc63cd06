#include "roiexplain/image_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <png.h>

namespace roiexplain::io {

namespace {

[[noreturn]] void io_error(const fs::path& path, const std::string& what) {
    fail(ErrorKind::InvalidInput, path.string() + ": " + what);
}

bool is_png(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    return bytes.size() >= 8 && std::equal(sig, sig + 8, bytes.begin());
}

Image decode_png(std::span<const std::uint8_t> bytes, const fs::path& path) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
        io_error(path, std::string("PNG decode failed: ") + img.message);
    }
    const bool colour = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
    img.format = colour ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    Image out(static_cast<int>(img.width), static_cast<int>(img.height), colour ? 3 : 1);
    if (!png_image_finish_read(&img, nullptr, out.data.data(), 0, nullptr)) {
        png_image_free(&img);
        io_error(path, std::string("PNG decode failed: ") + img.message);
    }
    return out;
}

struct PgmHeader {
    int width = 0, height = 0, maxval = 0;
    std::size_t offset = 0;
};

PgmHeader parse_pgm_header(std::span<const std::uint8_t> bytes, const fs::path& path) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') io_error(path, "not a PNG or binary PGM file");
    std::size_t pos = 2;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto number = [&] {
        skip_space();
        long long v = 0;
        const std::size_t begin = pos;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
        if (pos == begin || v > 1'000'000) io_error(path, "malformed PGM header");
        return static_cast<int>(v);
    };
    PgmHeader h;
    h.width = number();
    h.height = number();
    h.maxval = number();
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) io_error(path, "malformed PGM header");
    h.offset = pos + 1;
    if (h.width < 1 || h.height < 1 || h.maxval < 1 || h.maxval > 65535) io_error(path, "invalid PGM dimensions");
    const std::size_t bpp = h.maxval > 255 ? 2 : 1;
    if (bytes.size() < h.offset + static_cast<std::size_t>(h.width) * h.height * bpp) {
        io_error(path, "truncated PGM data");
    }
    return h;
}

std::string pgm_header(int w, int h, int maxval) {
    return "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n" + std::to_string(maxval) + "\n";
}

std::uint32_t read_le32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

}  // namespace

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) io_error(path, "cannot open for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) io_error(path, "cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) io_error(path, "write failed");
}

void write_text(const fs::path& path, const std::string& text) {
    write_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

Image read_image(const fs::path& path) {
    const auto bytes = read_bytes(path);
    if (is_png(bytes)) return decode_png(bytes, path);
    const PgmHeader h = parse_pgm_header(bytes, path);
    Image out(h.width, h.height, 1);
    if (h.maxval <= 255) {
        std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(h.offset), out.data.size(), out.data.begin());
    } else {
        for (std::size_t i = 0; i < out.data.size(); ++i) {
            const unsigned v = bytes[h.offset + 2 * i] << 8 | bytes[h.offset + 2 * i + 1];
            out.data[i] = static_cast<std::uint8_t>((v * 255u + h.maxval / 2) / h.maxval);
        }
    }
    return out;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
    validate(image);
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width);
    img.height = static_cast<png_uint_32>(image.height);
    img.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&img, nullptr, &size, 0, image.data.data(), 0, nullptr)) {
        fail(ErrorKind::Internal, std::string("PNG encode failed: ") + img.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.data.data(), 0, nullptr)) {
        fail(ErrorKind::Internal, std::string("PNG encode failed: ") + img.message);
    }
    out.resize(size);
    return out;
}

void write_png(const fs::path& path, const Image& image) { write_bytes(path, encode_png(image)); }

void write_pgm(const fs::path& path, const Image& image) {
    validate(image);
    if (image.channels != 1) fail(ErrorKind::InvalidInput, "PGM output requires a grayscale image");
    const std::string header = pgm_header(image.width, image.height, 255);
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.insert(bytes.end(), image.data.begin(), image.data.end());
    write_bytes(path, bytes);
}

void write_image(const fs::path& path, const Image& image) {
    if (path.extension() == ".pgm") {
        write_pgm(path, image);
    } else {
        write_png(path, image);
    }
}

BinaryMask read_mask(const fs::path& path) {
    Image img = read_image(path);
    if (img.channels == 3) {
        Image gray(img.width, img.height, 1);
        for (std::size_t i = 0; i < gray.data.size(); ++i) {
            gray.data[i] = std::max({img.data[3 * i], img.data[3 * i + 1], img.data[3 * i + 2]});
        }
        img = std::move(gray);
    }
    const std::uint8_t top = *std::max_element(img.data.begin(), img.data.end());
    BinaryMask mask(img.width, img.height);
    for (std::size_t i = 0; i < mask.data.size(); ++i) {
        mask.data[i] = top <= 1 ? img.data[i] : (img.data[i] >= 128 ? 1 : 0);
    }
    return mask;
}

void write_mask(const fs::path& path, const BinaryMask& mask) {
    validate(mask);
    Image img(mask.width, mask.height, 1);
    std::transform(mask.data.begin(), mask.data.end(), img.data.begin(),
                   [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
    write_image(path, img);
}

void write_labels_pgm(const fs::path& path, const LabelMap& labels) {
    const int top = std::max(1, labels.max_label());
    if (top > 65535) fail(ErrorKind::InvalidInput, "label map exceeds 16-bit range");
    const std::string header = pgm_header(labels.width, labels.height, 65535);
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    for (auto v : labels.data) {
        bytes.push_back(static_cast<std::uint8_t>(v >> 8));
        bytes.push_back(static_cast<std::uint8_t>(v & 0xFF));
    }
    write_bytes(path, bytes);
}

LabelMap read_labels_pgm(const fs::path& path) {
    const auto bytes = read_bytes(path);
    const PgmHeader h = parse_pgm_header(bytes, path);
    LabelMap out(h.width, h.height, 1, 0);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] = h.maxval > 255 ? (bytes[h.offset + 2 * i] << 8 | bytes[h.offset + 2 * i + 1])
                                     : bytes[h.offset + i];
    }
    return out;
}

FloatMap read_importance(const fs::path& path) {
    const auto bytes = read_bytes(path);
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), "RF32", 4) == 0) {
        if (bytes.size() < 12) io_error(path, "truncated raw float header");
        const std::uint32_t w = read_le32(bytes.data() + 4), h = read_le32(bytes.data() + 8);
        if (w < 1 || h < 1 || w > 65536 || h > 65536) io_error(path, "invalid raw float dimensions");
        const std::size_t n = static_cast<std::size_t>(w) * h;
        if (bytes.size() != 12 + 4 * n) io_error(path, "raw float payload size mismatch");
        FloatMap map(static_cast<int>(w), static_cast<int>(h), 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t bits = read_le32(bytes.data() + 12 + 4 * i);
            float v;
            std::memcpy(&v, &bits, sizeof v);
            map.data[i] = v;
        }
        return map;
    }
    Image img = read_image(path);
    FloatMap map(img.width, img.height, 1, 0.0);
    const auto ch = static_cast<std::size_t>(img.channels);
    for (std::size_t i = 0; i < map.data.size(); ++i) map.data[i] = img.data[i * ch] / 255.0;
    return map;
}

void write_raw_f32(const fs::path& path, const FloatMap& map) {
    std::vector<std::uint8_t> bytes{'R', 'F', '3', '2'};
    put_le32(bytes, static_cast<std::uint32_t>(map.width));
    put_le32(bytes, static_cast<std::uint32_t>(map.height));
    for (double v : map.data) {
        const auto f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, sizeof bits);
        put_le32(bytes, bits);
    }
    write_bytes(path, bytes);
}

}  // namespace roiexplain::io
