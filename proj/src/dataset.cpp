#include "diffsr/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "diffsr/error.hpp"
#include "diffsr/image_io.hpp"

namespace diffsr {

std::vector<DatasetEntry> read_dataset_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(ErrorCategory::io, "cannot open dataset manifest: " + path);
    std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };
    std::vector<DatasetEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        DatasetEntry e;
        std::string scale_str;
        if (!std::getline(ls, e.hr_path, '\t') || !std::getline(ls, e.lr_path, '\t') ||
            !std::getline(ls, scale_str, '\t'))
            fail(ErrorCategory::format, "malformed manifest line " + std::to_string(lineno) +
                                            " in " + path);
        try {
            e.scale = std::stoi(scale_str);
        } catch (const std::exception&) {
            fail(ErrorCategory::format, "bad scale on manifest line " +
                                            std::to_string(lineno) + " in " + path);
        }
        if (e.scale < 1)
            fail(ErrorCategory::format, "scale must be >= 1 on manifest line " +
                                            std::to_string(lineno) + " in " + path);
        e.hr_path = resolve(e.hr_path);
        e.lr_path = resolve(e.lr_path);
        entries.push_back(std::move(e));
    }
    return entries;
}

void write_dataset_manifest(const std::string& path, const std::vector<DatasetEntry>& entries) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream os(path, std::ios::trunc);
    if (!os) fail(ErrorCategory::io, "cannot write dataset manifest: " + path);
    for (const auto& e : entries)
        os << e.hr_path << "\t" << e.lr_path << "\t" << e.scale << "\n";
    if (!os) fail(ErrorCategory::io, "failed writing dataset manifest: " + path);
}

std::string id_from_hr_path(const std::string& hr_path) {
    std::string stem = std::filesystem::path(hr_path).stem().string();
    if (stem.size() > 3 && stem.compare(stem.size() - 3, 3, "_hr") == 0)
        stem.resize(stem.size() - 3);
    return stem;
}

PatchPair load_pair(const DatasetEntry& entry) {
    PatchPair pair;
    pair.id = id_from_hr_path(entry.hr_path);
    pair.scale = entry.scale;
    pair.hr = load_image(entry.hr_path);
    pair.lr = load_image(entry.lr_path);
    if (pair.hr.channels != pair.lr.channels)
        fail(ErrorCategory::shape, "pair " + pair.id + ": hr/lr channel counts differ");
    if (pair.hr.height != pair.lr.height * entry.scale ||
        pair.hr.width != pair.lr.width * entry.scale)
        fail(ErrorCategory::shape,
             "pair " + pair.id + ": hr extent is not scale x lr extent");
    return pair;
}

} // namespace diffsr
