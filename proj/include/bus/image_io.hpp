#pragma once

#include <filesystem>

#include "bus/core.hpp"

namespace bus {

// Binary netpbm containers, 8-bit, maxval 255. Images quantize [0,1] doubles
// with round(v * 255); labels are stored raw (255 is the ignore sentinel).

void write_ppm(const std::filesystem::path& path, const ImageTensor& image);
ImageTensor read_ppm(const std::filesystem::path& path);

void write_pgm(const std::filesystem::path& path, const LabelMap& labels);
LabelMap read_pgm(const std::filesystem::path& path);

}  // namespace bus
