#include "diffsr/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "diffsr/error.hpp"

namespace diffsr {

namespace {

constexpr char kMagic[8] = {'D', 'S', 'R', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        fail(ErrorCategory::format, "truncated checkpoint: " + path);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::string encode_meta(const CheckpointMeta& meta) {
    std::ostringstream os;
    os << "base_channels=" << meta.arch.base_channels << "\n";
    os << "channel_multipliers=";
    for (std::size_t i = 0; i < meta.arch.channel_multipliers.size(); ++i) {
        if (i) os << ",";
        os << meta.arch.channel_multipliers[i];
    }
    os << "\n";
    os << "num_res_blocks=" << meta.arch.num_res_blocks << "\n";
    os << "time_embed_dim=" << meta.arch.time_embed_dim << "\n";
    os << "image_channels=" << meta.arch.image_channels << "\n";
    os << "timesteps=" << meta.timesteps << "\n";
    return os.str();
}

CheckpointMeta decode_meta(const std::string& text, const std::string& path) {
    CheckpointMeta meta;
    bool seen[6] = {};
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorCategory::format, "malformed checkpoint metadata line in " + path);
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        try {
            if (key == "base_channels") {
                meta.arch.base_channels = std::stoi(val);
                seen[0] = true;
            } else if (key == "channel_multipliers") {
                meta.arch.channel_multipliers.clear();
                std::istringstream vs(val);
                std::string tok;
                while (std::getline(vs, tok, ','))
                    meta.arch.channel_multipliers.push_back(std::stoi(tok));
                seen[1] = true;
            } else if (key == "num_res_blocks") {
                meta.arch.num_res_blocks = std::stoi(val);
                seen[2] = true;
            } else if (key == "time_embed_dim") {
                meta.arch.time_embed_dim = std::stoi(val);
                seen[3] = true;
            } else if (key == "image_channels") {
                meta.arch.image_channels = std::stoi(val);
                seen[4] = true;
            } else if (key == "timesteps") {
                meta.timesteps = std::stoi(val);
                seen[5] = true;
            }
            // Unknown keys are ignored so the metadata block can grow.
        } catch (const std::exception&) {
            fail(ErrorCategory::format, "bad checkpoint metadata value for " + key + " in " + path);
        }
    }
    for (bool s : seen)
        if (!s) fail(ErrorCategory::format, "incomplete checkpoint metadata in " + path);
    return meta;
}

} // namespace

void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const ParamSet<float>& params) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCategory::io, "cannot open checkpoint for writing: " + path);
    os.write(kMagic, 8);
    put_u32(os, kVersion);
    std::string m = encode_meta(meta);
    put_u32(os, static_cast<std::uint32_t>(m.size()));
    os.write(m.data(), static_cast<std::streamsize>(m.size()));
    put_u32(os, static_cast<std::uint32_t>(params.tensors.size()));
    for (const auto& t : params.tensors) {
        put_u32(os, static_cast<std::uint32_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put_u32(os, static_cast<std::uint32_t>(t.shape.size()));
        for (int d : t.shape) put_u32(os, static_cast<std::uint32_t>(d));
        static_assert(sizeof(float) == 4);
        os.write(reinterpret_cast<const char*>(t.v.data()),
                 static_cast<std::streamsize>(t.v.size() * sizeof(float)));
    }
    if (!os) fail(ErrorCategory::io, "failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCategory::io, "cannot open checkpoint: " + path);
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        fail(ErrorCategory::format, "not a checkpoint file: " + path);
    std::uint32_t version = get_u32(is, path);
    if (version != kVersion)
        fail(ErrorCategory::format,
             "unsupported checkpoint version " + std::to_string(version) + ": " + path);
    std::uint32_t mlen = get_u32(is, path);
    std::string mtext(mlen, '\0');
    if (!is.read(mtext.data(), mlen))
        fail(ErrorCategory::format, "truncated checkpoint: " + path);

    Checkpoint ckpt;
    ckpt.meta = decode_meta(mtext, path);
    std::uint32_t ntensors = get_u32(is, path);
    ckpt.params.tensors.reserve(ntensors);
    for (std::uint32_t i = 0; i < ntensors; ++i) {
        ParamTensor<float> t;
        std::uint32_t nlen = get_u32(is, path);
        t.name.resize(nlen);
        if (!is.read(t.name.data(), nlen))
            fail(ErrorCategory::format, "truncated checkpoint: " + path);
        std::uint32_t ndim = get_u32(is, path);
        std::size_t count = 1;
        for (std::uint32_t d = 0; d < ndim; ++d) {
            std::uint32_t dim = get_u32(is, path);
            t.shape.push_back(static_cast<int>(dim));
            count *= dim;
        }
        t.v.resize(count);
        if (!is.read(reinterpret_cast<char*>(t.v.data()),
                     static_cast<std::streamsize>(count * sizeof(float))))
            fail(ErrorCategory::format, "truncated checkpoint: " + path);
        ckpt.params.tensors.push_back(std::move(t));
    }
    if (is.peek() != std::ifstream::traits_type::eof())
        fail(ErrorCategory::format, "trailing bytes after checkpoint data: " + path);
    return ckpt;
}

UnetModel<float> model_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.meta.timesteps < 1)
        fail(ErrorCategory::format, "checkpoint has no valid schedule length");
    UnetModel<float> model(ckpt.meta.arch);
    auto& dst = model.params();
    if (dst.tensors.size() != ckpt.params.tensors.size())
        fail(ErrorCategory::format, "checkpoint tensor count does not match the architecture");
    for (std::size_t i = 0; i < dst.tensors.size(); ++i) {
        const auto& src = ckpt.params.tensors[i];
        auto& d = dst.tensors[i];
        if (src.name != d.name)
            fail(ErrorCategory::format, "unexpected checkpoint tensor " + src.name +
                                            " where " + d.name + " was expected");
        if (src.shape != d.shape || src.v.size() != d.v.size())
            fail(ErrorCategory::format, "checkpoint tensor " + src.name + " has the wrong shape");
        d.v = src.v;
    }
    return model;
}

} // namespace diffsr
