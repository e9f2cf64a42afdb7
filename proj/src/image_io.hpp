#pragma once

#include <string>

#include "image.hpp"

namespace dna {

// Reads a PGM (P5, maxval 255) or PNG (8-bit grayscale or RGB) file into a
// [0,1]-scaled image; the format is detected from the file's magic bytes.
// Throws FormatError for unsupported or corrupt files, IoError on
// filesystem failures.
Image read_image(const std::string& path);

// Writes .pgm (single channel) or .png (1 or 3 channels) depending on the
// extension, quantising with round-half-up to 8 bits (values clamped to
// [0,1] first). The file is written to a temporary name and renamed, so a
// failed write never leaves a partial file.
void write_image(const std::string& path, const Image& img);

} // namespace dna
