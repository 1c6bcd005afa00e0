#include "diffsr/image.hpp"

#include <algorithm>
#include <cmath>

#include "diffsr/error.hpp"

namespace diffsr {

const char* to_string(ValueRange r) {
    return r == ValueRange::Unit ? "unit" : "signed";
}

ImageTensor::ImageTensor(int c, int h, int w, ValueRange r, double fill)
    : channels(c), height(h), width(w), range(r) {
    if (c <= 0 || h <= 0 || w <= 0)
        fail(ErrorCategory::shape, "image dimensions must be positive");
    data.assign(static_cast<std::size_t>(c) * h * w, fill);
}

double range_min(ValueRange r) { return r == ValueRange::Unit ? 0.0 : -1.0; }
double range_max(ValueRange) { return 1.0; }

ImageTensor to_signed(const ImageTensor& img) {
    if (img.range != ValueRange::Unit)
        fail(ErrorCategory::shape, "to_signed expects a unit-range image");
    ImageTensor out = img;
    out.range = ValueRange::Signed;
    for (double& v : out.data) v = 2.0 * v - 1.0;
    return out;
}

ImageTensor to_unit(const ImageTensor& img) {
    if (img.range != ValueRange::Signed)
        fail(ErrorCategory::shape, "to_unit expects a signed-range image");
    ImageTensor out = img;
    out.range = ValueRange::Unit;
    for (double& v : out.data) v = (v + 1.0) / 2.0;
    return out;
}

ImageTensor clamp_to_range(ImageTensor img) {
    const double lo = range_min(img.range), hi = range_max(img.range);
    for (double& v : img.data) v = std::clamp(v, lo, hi);
    return img;
}

std::vector<ImageTensor> extract_patches(const ImageTensor& img, int patch, int stride) {
    if (patch <= 0 || stride <= 0)
        fail(ErrorCategory::usage, "patch and stride must be positive");
    if (patch > img.height || patch > img.width)
        fail(ErrorCategory::shape, "patch size exceeds image dimensions");

    const int ny = (img.height - patch) / stride + 1;
    const int nx = (img.width - patch) / stride + 1;
    std::vector<ImageTensor> out;
    out.reserve(static_cast<std::size_t>(ny) * nx);
    for (int py = 0; py < ny; ++py) {
        for (int px = 0; px < nx; ++px) {
            ImageTensor p(img.channels, patch, patch, img.range);
            const int y0 = py * stride, x0 = px * stride;
            for (int c = 0; c < img.channels; ++c)
                for (int y = 0; y < patch; ++y)
                    for (int x = 0; x < patch; ++x)
                        p.at(c, y, x) = img.at(c, y0 + y, x0 + x);
            out.push_back(std::move(p));
        }
    }
    return out;
}

} // namespace diffsr
