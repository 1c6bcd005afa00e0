#include "diffsr/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "diffsr/error.hpp"

namespace diffsr {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01; // (K1 * L)^2 with L = 1
constexpr double kC2 = 0.03 * 0.03;

const std::vector<double>& gaussian_window() {
    static const std::vector<double> w = [] {
        std::vector<double> v(kWindow);
        double sum = 0.0;
        for (int i = 0; i < kWindow; ++i) {
            double d = i - (kWindow - 1) / 2.0;
            v[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
            sum += v[i];
        }
        for (auto& x : v) x /= sum;
        return v;
    }();
    return w;
}

void require_unit_pair(const ImageTensor& a, const ImageTensor& b, const char* what) {
    if (!a.same_shape(b))
        fail(ErrorCategory::shape, std::string(what) + " operands differ in shape");
    if (a.range != ValueRange::Unit || b.range != ValueRange::Unit)
        fail(ErrorCategory::shape, std::string(what) + " expects unit-range images");
}

// Horizontal then vertical pass with the normalized window, keeping only
// positions where the window lies fully inside. Output is (h-10) x (w-10).
void filter_valid(const std::vector<double>& src, int h, int w, std::vector<double>* dst) {
    const auto& win = gaussian_window();
    int ow = w - kWindow + 1;
    int oh = h - kWindow + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += win[k] * src[y * static_cast<std::size_t>(w) + x + k];
            tmp[y * static_cast<std::size_t>(ow) + x] = acc;
        }
    dst->assign(static_cast<std::size_t>(oh) * ow, 0.0);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += win[k] * tmp[(y + k) * static_cast<std::size_t>(ow) + x];
            (*dst)[y * static_cast<std::size_t>(ow) + x] = acc;
        }
}

double ssim_channel(const double* a, const double* b, int h, int w) {
    std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<double> av(a, a + n), bv(b, b + n);
    std::vector<double> aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = av[i] * av[i];
        bb[i] = bv[i] * bv[i];
        ab[i] = av[i] * bv[i];
    }
    std::vector<double> mu_a, mu_b, m_aa, m_bb, m_ab;
    filter_valid(av, h, w, &mu_a);
    filter_valid(bv, h, w, &mu_b);
    filter_valid(aa, h, w, &m_aa);
    filter_valid(bb, h, w, &m_bb);
    filter_valid(ab, h, w, &m_ab);
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        double va = m_aa[i] - mu_a[i] * mu_a[i];
        double vb = m_bb[i] - mu_b[i] * mu_b[i];
        double cov = m_ab[i] - mu_a[i] * mu_b[i];
        double num = (2.0 * mu_a[i] * mu_b[i] + kC1) * (2.0 * cov + kC2);
        double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + kC1) * (va + vb + kC2);
        acc += num / den;
    }
    return acc / static_cast<double>(mu_a.size());
}

double run_lpips(const std::string& exe, const std::string& sr_path,
                 const std::string& hr_path) {
    std::string cmd = "'" + exe + "' '" + sr_path + "' '" + hr_path + "'";
    std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
    if (!pipe) fail(ErrorCategory::io, "cannot run lpips program: " + exe);
    char buf[256];
    std::string out;
    while (std::fgets(buf, sizeof(buf), pipe.get())) out += buf;
    int status = pclose(pipe.release());
    if (status != 0)
        fail(ErrorCategory::io, "lpips program failed on " + sr_path);
    try {
        return std::stod(out);
    } catch (const std::exception&) {
        fail(ErrorCategory::format, "lpips program printed no number for " + sr_path);
    }
}

} // namespace

std::string MetricProtocol::describe() const {
    std::ostringstream os;
    os << "channels=" << (use_y ? "y" : "native") << " border=" << border
       << " lpips=" << (lpips_exe.empty() ? "none" : lpips_exe);
    return os.str();
}

double psnr(const ImageTensor& a, const ImageTensor& b) {
    require_unit_pair(a, b, "psnr");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    double mse = acc / static_cast<double>(a.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImageTensor& a, const ImageTensor& b) {
    require_unit_pair(a, b, "ssim");
    if (a.height < kWindow || a.width < kWindow)
        fail(ErrorCategory::shape, "ssim needs at least an 11x11 image");
    double acc = 0.0;
    std::size_t plane = static_cast<std::size_t>(a.height) * a.width;
    for (int c = 0; c < a.channels; ++c)
        acc += ssim_channel(a.data.data() + c * plane, b.data.data() + c * plane, a.height,
                            a.width);
    return acc / a.channels;
}

ImageTensor rgb_to_luma(const ImageTensor& rgb) {
    if (rgb.channels != 3) fail(ErrorCategory::shape, "luma conversion expects 3 channels");
    if (rgb.range != ValueRange::Unit)
        fail(ErrorCategory::shape, "luma conversion expects a unit-range image");
    ImageTensor y(1, rgb.height, rgb.width, ValueRange::Unit);
    auto q = [](double v) {
        double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        return static_cast<double>(std::lround(c * 255.0));
    };
    for (int yy = 0; yy < rgb.height; ++yy)
        for (int xx = 0; xx < rgb.width; ++xx)
            y.at(0, yy, xx) = (0.299 * q(rgb.at(0, yy, xx)) + 0.587 * q(rgb.at(1, yy, xx)) +
                               0.114 * q(rgb.at(2, yy, xx))) /
                              255.0;
    return y;
}

ImageTensor crop_border(const ImageTensor& img, int border) {
    if (border < 0) fail(ErrorCategory::usage, "border must be non-negative");
    if (border == 0) return img;
    if (img.height <= 2 * border || img.width <= 2 * border)
        fail(ErrorCategory::shape, "border crop leaves no pixels");
    ImageTensor out(img.channels, img.height - 2 * border, img.width - 2 * border, img.range);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < out.height; ++y)
            for (int x = 0; x < out.width; ++x)
                out.at(c, y, x) = img.at(c, y + border, x + border);
    return out;
}

EvalReport evaluate(const std::vector<EvalItem>& items, const MetricProtocol& protocol) {
    if (items.empty()) fail(ErrorCategory::usage, "nothing to evaluate");
    EvalReport report;
    report.protocol = protocol;
    report.has_lpips = !protocol.lpips_exe.empty();
    double sp = 0.0, ss = 0.0, sl = 0.0;
    for (const auto& item : items) {
        if (!item.sr.same_shape(item.hr))
            fail(ErrorCategory::shape, "pair " + item.id + ": sr/hr shapes differ");
        ImageTensor a = item.sr, b = item.hr;
        if (protocol.use_y && a.channels == 3) {
            a = rgb_to_luma(a);
            b = rgb_to_luma(b);
        }
        a = crop_border(a, protocol.border);
        b = crop_border(b, protocol.border);
        EvalRow row;
        row.id = item.id;
        row.psnr = psnr(a, b);
        row.ssim = ssim(a, b);
        if (report.has_lpips)
            row.lpips = run_lpips(protocol.lpips_exe, item.sr_path, item.hr_path);
        sp += row.psnr;
        ss += row.ssim;
        sl += row.lpips;
        report.rows.push_back(std::move(row));
    }
    double n = static_cast<double>(items.size());
    report.mean = {"MEAN", sp / n, ss / n, sl / n};
    return report;
}

namespace {

std::string fmt_metric(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

void write_row(std::ostream& os, const EvalRow& row, bool with_lpips) {
    os << row.id << "\t" << fmt_metric(row.psnr) << "\t" << fmt_metric(row.ssim);
    if (with_lpips) os << "\t" << fmt_metric(row.lpips);
    os << "\n";
}

} // namespace

void write_report(std::ostream& os, const EvalReport& report) {
    os << "# protocol: " << report.protocol.describe() << "\n";
    os << "id\tpsnr\tssim";
    if (report.has_lpips) os << "\tlpips";
    os << "\n";
    for (const auto& row : report.rows) write_row(os, row, report.has_lpips);
    write_row(os, report.mean, report.has_lpips);
}

} // namespace diffsr
