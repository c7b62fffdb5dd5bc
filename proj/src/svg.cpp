#include "iterdet/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "iterdet/png_io.hpp"

namespace iterdet {

namespace {

std::string base64(const std::vector<std::uint8_t>& bytes) {
  static const char* table =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    std::uint32_t chunk = bytes[i] << 16;
    if (i + 1 < bytes.size()) chunk |= bytes[i + 1] << 8;
    if (i + 2 < bytes.size()) chunk |= bytes[i + 2];
    out += table[(chunk >> 18) & 63];
    out += table[(chunk >> 12) & 63];
    out += i + 1 < bytes.size() ? table[(chunk >> 6) & 63] : '=';
    out += i + 2 < bytes.size() ? table[chunk & 63] : '=';
  }
  return out;
}

std::string iteration_color(int iteration) {
  if (iteration <= 1) return "#00c800";  // green
  if (iteration == 2) return "#e6c800";  // yellow
  // Later iterations: walk the hue wheel.
  const double hue = std::fmod(120.0 * (iteration - 1), 360.0);
  const double x = 1.0 - std::abs(std::fmod(hue / 60.0, 2.0) - 1.0);
  double r = 0, g = 0, b = 0;
  if (hue < 60) {
    r = 1; g = x;
  } else if (hue < 120) {
    r = x; g = 1;
  } else if (hue < 180) {
    g = 1; b = x;
  } else if (hue < 240) {
    g = x; b = 1;
  } else if (hue < 300) {
    r = x; b = 1;
  } else {
    r = 1; b = x;
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", int(r * 200), int(g * 200),
                int(b * 200));
  return buf;
}

Image8 to_image8(const Tensor& image) {
  Image8 out;
  out.height = image.shape[1];
  out.width = image.shape[2];
  out.rgb.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  std::size_t idx = 0;
  for (int py = 0; py < out.height; ++py) {
    for (int px = 0; px < out.width; ++px) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(image.at3(c, py, px), 0.0, 1.0);
        out.rgb[idx++] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const Tensor& image,
                       const std::vector<ScoredBox>& detections,
                       double min_score) {
  const int h = image.shape[1];
  const int w = image.shape[2];
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
      << "\">\n";
  out << "  <image width=\"" << w << "\" height=\"" << h
      << "\" href=\"data:image/png;base64,"
      << base64(encode_png(to_image8(image))) << "\"/>\n";
  for (const ScoredBox& d : detections) {
    if (d.score < min_score) continue;
    const int iter = std::max(d.iteration, 1);
    out << "  <rect class=\"iter-" << iter << "\" x=\"" << d.box.x
        << "\" y=\"" << d.box.y << "\" width=\"" << d.box.w << "\" height=\""
        << d.box.h << "\" fill=\"none\" stroke=\"" << iteration_color(iter)
        << "\" stroke-width=\"1\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void write_svg(const std::string& path, const std::string& svg) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_svg: cannot write " + path);
  out << svg;
}

}  // namespace iterdet
