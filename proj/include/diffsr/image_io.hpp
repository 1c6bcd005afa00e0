#pragma once

#include <filesystem>

#include "diffsr/image.hpp"

namespace diffsr {

// Reads an 8-bit grayscale or RGB PNG into a unit-range tensor (pixel p
// maps to p/255). Anything else (16-bit, palette, alpha) is rejected with
// an error naming the path.
ImageTensor load_image(const std::filesystem::path& path);

// Writes an 8-bit PNG. Signed images are first mapped to unit range via
// (v+1)/2; values are clamped to [0,1] and quantized as round(v*255).
// Encoder settings are fixed, so identical pixels give identical bytes.
void save_image(const ImageTensor& img, const std::filesystem::path& path);

} // namespace diffsr
