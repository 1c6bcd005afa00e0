#include "diffsr/resample.hpp"

#include <algorithm>
#include <cmath>

#include "diffsr/error.hpp"

namespace diffsr {

double catmull_rom_weight(double x) {
    constexpr double a = -0.5;
    x = std::fabs(x);
    if (x <= 1.0)
        return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0)
        return a * (((x - 5.0) * x + 8.0) * x - 4.0);
    return 0.0;
}

namespace {

struct TapSet {
    int idx[4];
    double w[4];
};

// Precompute the four clamped tap indices and weights for every output
// coordinate along one axis.
std::vector<TapSet> make_taps(int in_size, int out_size) {
    std::vector<TapSet> taps(out_size);
    const double scale = static_cast<double>(in_size) / out_size;
    for (int o = 0; o < out_size; ++o) {
        const double src = (o + 0.5) * scale - 0.5;
        const double base = std::floor(src);
        const double frac = src - base;
        TapSet t;
        for (int k = 0; k < 4; ++k) {
            const int raw = static_cast<int>(base) - 1 + k;
            t.idx[k] = std::clamp(raw, 0, in_size - 1);
            t.w[k] = catmull_rom_weight(frac + 1.0 - k);
        }
        taps[o] = t;
    }
    return taps;
}

} // namespace

ImageTensor bicubic_resize(const ImageTensor& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1)
        fail(ErrorCategory::usage, "bicubic_resize output dimensions must be >= 1");

    const auto tx = make_taps(img.width, out_w);
    const auto ty = make_taps(img.height, out_h);
    const double lo = range_min(img.range), hi = range_max(img.range);

    ImageTensor out(img.channels, out_h, out_w, img.range);
    // Separable evaluation: horizontal pass into a row-strip, then vertical.
    std::vector<double> strip(static_cast<std::size_t>(4) * out_w);
    for (int c = 0; c < img.channels; ++c) {
        for (int oy = 0; oy < out_h; ++oy) {
            const TapSet& rowt = ty[oy];
            for (int k = 0; k < 4; ++k) {
                const int sy = rowt.idx[k];
                for (int ox = 0; ox < out_w; ++ox) {
                    const TapSet& colt = tx[ox];
                    strip[k * out_w + ox] = colt.w[0] * img.at(c, sy, colt.idx[0]) +
                                            colt.w[1] * img.at(c, sy, colt.idx[1]) +
                                            colt.w[2] * img.at(c, sy, colt.idx[2]) +
                                            colt.w[3] * img.at(c, sy, colt.idx[3]);
                }
            }
            for (int ox = 0; ox < out_w; ++ox) {
                const double v = rowt.w[0] * strip[0 * out_w + ox] +
                                 rowt.w[1] * strip[1 * out_w + ox] +
                                 rowt.w[2] * strip[2 * out_w + ox] +
                                 rowt.w[3] * strip[3 * out_w + ox];
                out.at(c, oy, ox) = std::clamp(v, lo, hi);
            }
        }
    }
    return out;
}

} // namespace diffsr
