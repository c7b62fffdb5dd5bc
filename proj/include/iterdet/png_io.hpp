#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace iterdet {

struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
};

// 8-bit RGB PNG read/write. Throws std::runtime_error naming the file on
// any failure.
void write_png(const std::string& path, const Image8& image);
Image8 read_png(const std::string& path);

// PNG bytes in memory (used for data-URI embedding in SVG output).
std::vector<std::uint8_t> encode_png(const Image8& image);

}  // namespace iterdet
