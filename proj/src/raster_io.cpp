#include "gsa/raster_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <regex>
#include <string>
#include <vector>

#include "gsa/error.hpp"

namespace gsa {

void write_png(const FeatureMap& map, const std::filesystem::path& path) {
  std::vector<std::uint8_t> pixels(map.values.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(map.values[i], 0.0, 1.0) * 255.0));
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(map.width);
  image.height = static_cast<png_uint_32>(map.height);
  image.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot write PNG '" + path.string() + "': " + msg);
  }
}

FeatureMap read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IoError("cannot read PNG '" + path.string() + "': " + image.message);
  }
  const bool has_alpha = (image.format & PNG_FORMAT_FLAG_ALPHA) != 0;
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot decode PNG '" + path.string() + "': " + msg);
  }
  FeatureMap map(static_cast<int>(image.width), static_cast<int>(image.height));
  const std::size_t n = static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height);
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) map.values[3 * i + c] = pixels[4 * i + c] / 255.0;
    map.alpha[i] = has_alpha ? pixels[4 * i + 3] / 255.0 : 1.0;
  }
  return map;
}

void write_npy(const FeatureMap& map, const std::filesystem::path& path) {
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': (4, " +
                       std::to_string(map.height) + ", " + std::to_string(map.width) + "), }";
  // Magic (6) + version (2) + length (2) + header, padded with spaces to a
  // multiple of 64 and terminated by a newline.
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write("\x93NUMPY\x01\x00", 8);
  const std::uint16_t len = static_cast<std::uint16_t>(header.size());
  const char len_bytes[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
  out.write(len_bytes, 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));

  const std::size_t n = static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height);
  std::vector<float> planar(4 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) planar[c * n + i] = static_cast<float>(map.values[3 * i + c]);
    planar[3 * n + i] = static_cast<float>(map.alpha[i]);
  }
  out.write(reinterpret_cast<const char*>(planar.data()),
            static_cast<std::streamsize>(planar.size() * sizeof(float)));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

FeatureMap read_npy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 10 || bytes.compare(0, 6, "\x93NUMPY") != 0) throw ParseError("not an NPY file", 0);
  const int major = static_cast<unsigned char>(bytes[6]);
  std::size_t header_len = 0;
  std::size_t data_start = 0;
  if (major == 1) {
    header_len = static_cast<unsigned char>(bytes[8]) | (static_cast<unsigned char>(bytes[9]) << 8);
    data_start = 10 + header_len;
  } else if (major == 2 || major == 3) {
    if (bytes.size() < 12) throw ParseError("truncated NPY header", bytes.size());
    for (int k = 0; k < 4; ++k) header_len |= static_cast<std::size_t>(static_cast<unsigned char>(bytes[8 + k])) << (8 * k);
    data_start = 12 + header_len;
  } else {
    throw ParseError("unsupported NPY version " + std::to_string(major), 6);
  }
  if (bytes.size() < data_start) throw ParseError("truncated NPY header", bytes.size());
  const std::string header = bytes.substr(data_start - header_len, header_len);
  if (header.find("'<f4'") == std::string::npos) throw ParseError("NPY dtype must be '<f4'", 10);
  if (header.find("'fortran_order': False") == std::string::npos) {
    throw ParseError("NPY must be C-ordered", 10);
  }
  std::smatch m;
  static const std::regex shape_re(R"('shape':\s*\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*,?\s*\))");
  if (!std::regex_search(header, m, shape_re) || std::stoul(m[1].str()) != 4) {
    throw ParseError("NPY shape must be (4, H, W)", 10);
  }
  const int h = std::stoi(m[2].str());
  const int w = std::stoi(m[3].str());
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - data_start < 4 * n * sizeof(float)) {
    throw ParseError("truncated NPY payload", bytes.size());
  }
  std::vector<float> planar(4 * n);
  std::memcpy(planar.data(), bytes.data() + data_start, planar.size() * sizeof(float));
  FeatureMap map(w, h);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) map.values[3 * i + c] = planar[c * n + i];
    map.alpha[i] = planar[3 * n + i];
  }
  return map;
}

FeatureMap read_raster(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".png") return read_png(path);
  if (ext == ".npy") return read_npy(path);
  throw ValidationError("unknown raster extension '" + ext + "' (expected .png or .npy)");
}

}  // namespace gsa
