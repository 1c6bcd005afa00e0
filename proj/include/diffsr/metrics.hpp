#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "diffsr/image.hpp"

namespace diffsr {

// Evaluation protocol knobs. The defaults follow the common convention:
// compare in the image's native channels with a border crop of `border`
// pixels on every side (callers set border = upscaling factor). use_y
// switches 3-channel comparisons to the BT.601 full-range luma computed
// from 8-bit-quantized RGB. lpips_exe, when non-empty, names an external
// program invoked as `exe <sr.png> <hr.png>` that prints one float.
struct MetricProtocol {
    bool use_y = false;
    int border = 0;
    std::string lpips_exe;

    std::string describe() const;
};

// Peak signal-to-noise ratio over unit-range images, 10*log10(1/MSE).
// Identical images give +infinity.
double psnr(const ImageTensor& a, const ImageTensor& b);

// Mean structural similarity with the standard 11x11 Gaussian window
// (sigma 1.5, K1 0.01, K2 0.03, dynamic range 1), averaged over all fully
// interior window positions and over channels. Requires extent >= 11.
double ssim(const ImageTensor& a, const ImageTensor& b);

// BT.601 full-range luma of an RGB image after 8-bit quantization:
// Y = (0.299 R8 + 0.587 G8 + 0.114 B8) / 255.
ImageTensor rgb_to_luma(const ImageTensor& rgb);

ImageTensor crop_border(const ImageTensor& img, int border);

struct EvalItem {
    std::string id;
    ImageTensor sr; // unit range
    ImageTensor hr; // unit range
    std::string sr_path; // for the external lpips program
    std::string hr_path;
};

struct EvalRow {
    std::string id;
    double psnr = 0.0;
    double ssim = 0.0;
    double lpips = 0.0;
};

struct EvalReport {
    MetricProtocol protocol;
    bool has_lpips = false;
    std::vector<EvalRow> rows;
    EvalRow mean; // id = "MEAN"
};

EvalReport evaluate(const std::vector<EvalItem>& items, const MetricProtocol& protocol);

// Tab-separated report: "# protocol: ..." line, a column header, one row
// per item, and a trailing MEAN row. Values use 6 decimal places; infinite
// PSNR prints as "inf".
void write_report(std::ostream& os, const EvalReport& report);

} // namespace diffsr
