#pragma once

#include <filesystem>

#include "gsa/render.hpp"

namespace gsa {

/// 8-bit RGB, channel values mapped [0,1] -> [0,255] with rounding.
void write_png(const FeatureMap& map, const std::filesystem::path& path);
/// Alpha is 1 wherever the file has no alpha channel.
FeatureMap read_png(const std::filesystem::path& path);

/// NPY v1.0, little-endian float32, C order, shape (4, H, W): the three
/// channels followed by alpha.
void write_npy(const FeatureMap& map, const std::filesystem::path& path);
FeatureMap read_npy(const std::filesystem::path& path);

/// Dispatch on the file extension (.png or .npy).
FeatureMap read_raster(const std::filesystem::path& path);

}  // namespace gsa
