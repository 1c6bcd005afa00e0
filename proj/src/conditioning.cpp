#include "diffsr/conditioning.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "diffsr/error.hpp"
#include "diffsr/image_io.hpp"
#include "diffsr/resample.hpp"

namespace diffsr {

ConditionProvider ConditionProvider::bicubic() { return ConditionProvider(); }

ConditionProvider ConditionProvider::external(const std::string& manifest_path) {
    ConditionProvider p;
    p.external_ = true;
    std::ifstream is(manifest_path);
    if (!is) fail(ErrorCategory::io, "cannot open condition manifest: " + manifest_path);
    std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size())
            fail(ErrorCategory::format, "malformed condition manifest line " +
                                            std::to_string(lineno) + " in " + manifest_path);
        std::string id = line.substr(0, tab);
        std::filesystem::path fp(line.substr(tab + 1));
        if (!fp.is_absolute()) fp = base / fp;
        p.path_by_id_[id] = fp.string();
    }
    return p;
}

ImageTensor quantize_8bit(const ImageTensor& img) {
    if (img.range != ValueRange::Unit)
        fail(ErrorCategory::shape, "8-bit quantization expects a unit-range image");
    ImageTensor out = img;
    for (auto& v : out.data) {
        double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        v = std::lround(c * 255.0) / 255.0;
    }
    return out;
}

ImageTensor ConditionProvider::condition_for(const PatchPair& pair) const {
    ImageTensor unit;
    if (external_) {
        auto it = path_by_id_.find(pair.id);
        if (it == path_by_id_.end())
            fail(ErrorCategory::usage, "no external condition listed for pair " + pair.id);
        unit = load_image(it->second);
        if (unit.channels != pair.hr.channels || unit.height != pair.hr.height ||
            unit.width != pair.hr.width) {
            std::ostringstream os;
            os << "external condition for pair " << pair.id << " is " << unit.channels << "x"
               << unit.height << "x" << unit.width << ", expected " << pair.hr.channels << "x"
               << pair.hr.height << "x" << pair.hr.width;
            fail(ErrorCategory::shape, os.str());
        }
    } else {
        unit = bicubic_resize(pair.lr, pair.hr.height, pair.hr.width);
    }
    return to_signed(quantize_8bit(unit));
}

int cache_conditions(const std::vector<PatchPair>& pairs, const ConditionProvider& provider,
                     const std::string& cache_dir) {
    std::filesystem::create_directories(cache_dir);
    int written = 0;
    for (const auto& pair : pairs) {
        std::filesystem::path path = std::filesystem::path(cache_dir) / (pair.id + ".png");
        if (std::filesystem::exists(path)) {
            ImageTensor existing = load_image(path.string());
            if (existing.channels == pair.hr.channels && existing.height == pair.hr.height &&
                existing.width == pair.hr.width)
                continue;
        }
        ImageTensor cond = provider.condition_for(pair);
        save_image(cond, path);
        ++written;
    }
    return written;
}

ImageTensor load_cached_condition(const std::string& cache_dir, const PatchPair& pair) {
    std::filesystem::path path = std::filesystem::path(cache_dir) / (pair.id + ".png");
    if (!std::filesystem::exists(path))
        fail(ErrorCategory::io, "no cached condition for pair " + pair.id + " in " + cache_dir);
    ImageTensor unit = load_image(path.string());
    if (unit.channels != pair.hr.channels || unit.height != pair.hr.height ||
        unit.width != pair.hr.width)
        fail(ErrorCategory::shape, "cached condition for pair " + pair.id + " has the wrong shape");
    return to_signed(unit);
}

} // namespace diffsr
