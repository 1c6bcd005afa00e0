#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace diffsr {

// Value-range convention of an image's samples.
// Unit   -> values live in [0, 1] (file I/O, metrics)
// Signed -> values live in [-1, 1] (diffusion latents and model inputs)
enum class ValueRange { Unit, Signed };

const char* to_string(ValueRange r);

// Dense C x H x W raster, channel-major (index = (c*H + y)*W + x).
// Samples are stored as double so that the diffusion algebra and the
// metric closed forms are not limited by storage precision; the neural
// net converts to its own scalar type at the boundary.
struct ImageTensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    ValueRange range = ValueRange::Unit;
    std::vector<double> data;

    ImageTensor() = default;
    ImageTensor(int c, int h, int w, ValueRange r, double fill = 0.0);

    std::size_t size() const { return data.size(); }
    double& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    bool same_shape(const ImageTensor& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

// Affine range conversions, v -> 2v-1 and v -> (v+1)/2. Both reject an
// input whose range tag does not match the expected source range.
ImageTensor to_signed(const ImageTensor& img);
ImageTensor to_unit(const ImageTensor& img);

// Clamp samples into the bounds declared by the range tag.
ImageTensor clamp_to_range(ImageTensor img);

// Lower/upper bound of a range tag.
double range_min(ValueRange r);
double range_max(ValueRange r);

// HR/LR training pair; hr dims must equal scale * lr dims.
// id is a diagnostic label carried through training logs and reports.
struct PatchPair {
    ImageTensor hr;
    ImageTensor lr;
    int scale = 2;
    std::string id;
};

// Row-major sliding-window crops of size patch x patch.
// Count per axis is floor((dim - patch)/stride) + 1.
std::vector<ImageTensor> extract_patches(const ImageTensor& img, int patch, int stride);

} // namespace diffsr
