#pragma once

// Raster file I/O: 8-bit PNG (gray or RGB), binary PGM (8- and 16-bit) and a
// raw float format for importance maps:
//   bytes 0..3   magic "RF32"
//   bytes 4..7   width  (uint32, little-endian)
//   bytes 8..11  height (uint32, little-endian)
//   then width*height float32 little-endian values, row-major.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "roiexplain/raster.hpp"

namespace roiexplain::io {

namespace fs = std::filesystem;

/// Loads PNG or PGM (by content). PNGs with colour load as 3 channels,
/// otherwise 1; alpha is dropped.
Image read_image(const fs::path& path);

std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const fs::path& path, const Image& image);
void write_pgm(const fs::path& path, const Image& image);

/// Writes by extension: ".pgm" -> PGM, anything else -> PNG.
void write_image(const fs::path& path, const Image& image);

/// Masks are stored as 0/255. On read, an image whose maximum is 1 is taken
/// as {0,1}; otherwise pixels >= 128 are set.
BinaryMask read_mask(const fs::path& path);
void write_mask(const fs::path& path, const BinaryMask& mask);

/// 16-bit PGM label dump.
void write_labels_pgm(const fs::path& path, const LabelMap& labels);
LabelMap read_labels_pgm(const fs::path& path);

/// Importance map from a raw float file (by magic) or an 8-bit image (value/255).
FloatMap read_importance(const fs::path& path);
void write_raw_f32(const fs::path& path, const FloatMap& map);

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes);
void write_text(const fs::path& path, const std::string& text);
std::vector<std::uint8_t> read_bytes(const fs::path& path);

}  // namespace roiexplain::io
