#pragma once

#include "diffsr/image.hpp"

namespace diffsr {

// Catmull-Rom bicubic resize (kernel parameter a = -0.5).
//
// Coordinate convention: half-pixel centers,
//   src = (dst + 0.5) * (src_size / dst_size) - 0.5
// Taps outside the image are clamped to the nearest edge sample. The output
// is clamped to the bounds of the input's range tag. Used both for the LR
// degradation (downscale) and for the baseline upscaled condition image.
ImageTensor bicubic_resize(const ImageTensor& img, int out_h, int out_w);

// The 1-D kernel weight at offset x (|x| < 2), exposed for tests.
double catmull_rom_weight(double x);

} // namespace diffsr
