#include "diffsr/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "diffsr/checkpoint.hpp"
#include "diffsr/conditioning.hpp"
#include "diffsr/dataset.hpp"
#include "diffsr/diffusion.hpp"
#include "diffsr/error.hpp"
#include "diffsr/image_io.hpp"
#include "diffsr/metrics.hpp"
#include "diffsr/resample.hpp"

namespace fs = std::filesystem;

namespace diffsr {

namespace {

std::vector<std::string> collect_pngs(const std::vector<std::string>& inputs) {
    std::vector<std::string> files;
    for (const auto& in : inputs) {
        fs::path p(in);
        if (fs::is_directory(p)) {
            for (const auto& entry : fs::directory_iterator(p))
                if (entry.is_regular_file() && entry.path().extension() == ".png")
                    files.push_back(entry.path().string());
        } else if (fs::is_regular_file(p)) {
            files.push_back(p.string());
        } else {
            fail(ErrorCategory::io, "input not found: " + in);
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

ImageTensor crop_to_multiple(const ImageTensor& img, int scale) {
    int h = img.height - img.height % scale;
    int w = img.width - img.width % scale;
    if (h < scale || w < scale)
        fail(ErrorCategory::shape, "image smaller than one scale unit");
    if (h == img.height && w == img.width) return img;
    ImageTensor out(img.channels, h, w, img.range);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, y, x);
    return out;
}

ConditionProvider make_provider(const ConditionOptions& opt) {
    if (opt.external) {
        if (opt.manifest.empty())
            fail(ErrorCategory::usage, "external conditions need a manifest");
        return ConditionProvider::external(opt.manifest);
    }
    return ConditionProvider::bicubic();
}

std::vector<PatchPair> load_pairs_sorted(const std::string& manifest) {
    auto entries = read_dataset_manifest(manifest);
    if (entries.empty()) fail(ErrorCategory::format, "dataset manifest is empty: " + manifest);
    std::vector<PatchPair> pairs;
    pairs.reserve(entries.size());
    for (const auto& e : entries) pairs.push_back(load_pair(e));
    std::sort(pairs.begin(), pairs.end(),
              [](const PatchPair& a, const PatchPair& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < pairs.size(); ++i)
        if (pairs[i].id == pairs[i - 1].id)
            fail(ErrorCategory::format, "duplicate pair id in manifest: " + pairs[i].id);
    return pairs;
}

ImageTensor condition_for_pair(const PatchPair& pair, const ConditionProvider& provider,
                               const std::string& cache_dir) {
    if (!cache_dir.empty()) return load_cached_condition(cache_dir, pair);
    return provider.condition_for(pair);
}

nlohmann::json arch_to_json(const ArchitectureConfig& a) {
    return {{"base_channels", a.base_channels},
            {"channel_multipliers", a.channel_multipliers},
            {"num_res_blocks", a.num_res_blocks},
            {"time_embed_dim", a.time_embed_dim},
            {"image_channels", a.image_channels}};
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) fail(ErrorCategory::io, "cannot write " + path.string());
    os << j.dump(2) << "\n";
}

} // namespace

int cmd_make_dataset(const MakeDatasetOptions& opt) {
    if (opt.out_dir.empty()) fail(ErrorCategory::usage, "make-dataset needs an output directory");
    if (opt.scale < 1) fail(ErrorCategory::usage, "scale must be >= 1");
    int patch = opt.patch;
    int stride = opt.stride > 0 ? opt.stride : patch;
    if (patch > 0 && patch % opt.scale != 0)
        fail(ErrorCategory::usage, "patch size must be a multiple of the scale");
    if (patch > 0 && stride % opt.scale != 0)
        fail(ErrorCategory::usage, "stride must be a multiple of the scale");

    auto files = collect_pngs(opt.inputs);
    if (files.empty()) fail(ErrorCategory::usage, "no input PNG files found");
    fs::create_directories(opt.out_dir);

    std::vector<DatasetEntry> entries;
    int counter = 0;
    auto emit = [&](const ImageTensor& hr) {
        ImageTensor lr = bicubic_resize(hr, hr.height / opt.scale, hr.width / opt.scale);
        char hr_name[32], lr_name[32];
        std::snprintf(hr_name, sizeof(hr_name), "%05d_hr.png", counter);
        std::snprintf(lr_name, sizeof(lr_name), "%05d_lr.png", counter);
        save_image(hr, fs::path(opt.out_dir) / hr_name);
        save_image(lr, fs::path(opt.out_dir) / lr_name);
        entries.push_back({hr_name, lr_name, opt.scale});
        ++counter;
    };

    for (const auto& file : files) {
        if (opt.limit > 0 && counter >= opt.limit) break;
        ImageTensor img = crop_to_multiple(load_image(file), opt.scale);
        if (patch == 0) {
            emit(img);
            continue;
        }
        if (img.height < patch || img.width < patch) {
            std::cerr << "warning: " << file << " smaller than the patch size, skipped\n";
            continue;
        }
        for (const auto& crop : extract_patches(img, patch, stride)) {
            if (opt.limit > 0 && counter >= opt.limit) break;
            emit(crop);
        }
    }
    if (entries.empty()) fail(ErrorCategory::usage, "no pairs produced");
    write_dataset_manifest((fs::path(opt.out_dir) / "dataset.tsv").string(), entries);
    std::cout << "wrote " << entries.size() << " pairs to " << opt.out_dir << "\n";
    return 0;
}

int cmd_cache_conditions(const CacheConditionsOptions& opt) {
    auto pairs = load_pairs_sorted(opt.dataset);
    auto provider = make_provider(opt.condition);
    int written = cache_conditions(pairs, provider, opt.cache_dir);
    std::cout << "cached " << written << " new condition images (" << pairs.size()
              << " total) in " << opt.cache_dir << "\n";
    return 0;
}

int cmd_train(const TrainOptions& opt) {
    auto pairs = load_pairs_sorted(opt.dataset);
    auto provider = make_provider(opt.condition);

    const PatchPair& first = pairs.front();
    for (const auto& p : pairs) {
        if (!p.hr.same_shape(first.hr))
            fail(ErrorCategory::shape, "pair " + p.id + " differs in shape from pair " +
                                           first.id + "; training needs uniform patches");
    }

    ArchitectureConfig arch = opt.arch;
    if (arch.image_channels == 0) arch.image_channels = first.hr.channels;

    std::shared_ptr<UnetModel<float>> model;
    int timesteps = opt.train.timesteps;
    if (!opt.resume.empty()) {
        Checkpoint ckpt = load_checkpoint(opt.resume);
        if (ckpt.meta.timesteps != timesteps)
            fail(ErrorCategory::usage, "checkpoint was trained with a different schedule length");
        model = std::make_shared<UnetModel<float>>(model_from_checkpoint(ckpt));
        arch = ckpt.meta.arch;
    } else {
        model = std::make_shared<UnetModel<float>>(arch);
        model->init_parameters(Rng(opt.train.seed).fork(0));
    }
    if (arch.image_channels != first.hr.channels)
        fail(ErrorCategory::shape, "dataset has " + std::to_string(first.hr.channels) +
                                       " channels but the model expects " +
                                       std::to_string(arch.image_channels));
    if (first.hr.height % arch.spatial_divisor() != 0 ||
        first.hr.width % arch.spatial_divisor() != 0)
        fail(ErrorCategory::shape, "patch extent must be divisible by " +
                                       std::to_string(arch.spatial_divisor()));

    std::vector<TrainItem> items;
    items.reserve(pairs.size());
    for (const auto& p : pairs)
        items.push_back({to_signed(p.hr), condition_for_pair(p, provider, opt.condition_cache)});

    fs::create_directories(opt.out_dir);
    nlohmann::json cfg = {
        {"dataset", opt.dataset},
        {"arch", arch_to_json(arch)},
        {"train",
         {{"total_steps", opt.train.total_steps},
          {"batch_size", opt.train.batch_size},
          {"lr", opt.train.adam.lr},
          {"timesteps", timesteps},
          {"log_every", opt.train.log_every},
          {"checkpoint_every", opt.train.checkpoint_every},
          {"seed", opt.train.seed}}},
        {"condition", opt.condition.external ? "external" : "bicubic"},
        {"resume", opt.resume}};
    write_json(fs::path(opt.out_dir) / "config.json", cfg);

    TrainResult result =
        train_loop(model.get(), items, opt.train, opt.out_dir, [](const TrainLogRow& row) {
            std::printf("step %d  loss %.6f  (%.1fs)\n", row.step, row.loss, row.seconds);
            std::fflush(stdout);
        });
    std::cout << "final checkpoint: " << result.final_checkpoint << "\n";
    return 0;
}

int cmd_sample(const SampleOptions& opt) {
    Checkpoint ckpt = load_checkpoint(opt.checkpoint);
    auto model = std::make_shared<UnetModel<float>>(model_from_checkpoint(ckpt));
    NoiseSchedule schedule = make_cosine_schedule(ckpt.meta.timesteps);
    TimestepSubsequence steps = subsample_timesteps(schedule, opt.inference_steps);
    UnetDenoiser denoiser(model, schedule);

    auto pairs = load_pairs_sorted(opt.dataset);
    auto provider = make_provider(opt.condition);
    std::set<std::string> only(opt.only_ids.begin(), opt.only_ids.end());
    for (const auto& id : only) {
        bool found = false;
        for (const auto& p : pairs) found = found || p.id == id;
        if (!found) fail(ErrorCategory::usage, "id not in dataset: " + id);
    }

    fs::create_directories(opt.out_dir);
    nlohmann::json cfg = {{"checkpoint", opt.checkpoint},
                          {"dataset", opt.dataset},
                          {"inference_steps", opt.inference_steps},
                          {"seed", opt.seed},
                          {"condition", opt.condition.external ? "external" : "bicubic"}};
    write_json(fs::path(opt.out_dir) / "config.json", cfg);

    const auto& arch = model->config();
    Rng master(opt.seed);
    int done = 0;
    int total = static_cast<int>(only.empty() ? pairs.size() : only.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const PatchPair& pair = pairs[i];
        // The per-image stream depends on the position in the full sorted
        // manifest, so sampling a subset reproduces the full run's bytes.
        std::uint64_t image_seed = master.fork(i).key();
        if (!only.empty() && !only.count(pair.id)) continue;
        if (pair.hr.channels != arch.image_channels)
            fail(ErrorCategory::shape, "pair " + pair.id + " has " +
                                           std::to_string(pair.hr.channels) +
                                           " channels but the model expects " +
                                           std::to_string(arch.image_channels));
        if (pair.hr.height % arch.spatial_divisor() != 0 ||
            pair.hr.width % arch.spatial_divisor() != 0)
            fail(ErrorCategory::shape, "pair " + pair.id + " extent must be divisible by " +
                                           std::to_string(arch.spatial_divisor()));
        ImageTensor cond = condition_for_pair(pair, provider, opt.condition_cache);
        ImageTensor sr = sample(denoiser, cond, schedule, steps, image_seed);
        save_image(sr, fs::path(opt.out_dir) / (pair.id + "_sr.png"));
        ++done;
        std::printf("sampled %s (%d/%d)\n", pair.id.c_str(), done, total);
        std::fflush(stdout);
    }
    return 0;
}

int cmd_eval(const EvalOptions& opt) {
    auto entries = read_dataset_manifest(opt.dataset);
    if (entries.empty()) fail(ErrorCategory::format, "dataset manifest is empty: " + opt.dataset);

    int border = opt.border;
    if (border < 0) {
        for (const auto& e : entries)
            if (e.scale != entries.front().scale)
                fail(ErrorCategory::format,
                     "mixed scales in manifest; pass an explicit border");
        border = entries.front().scale;
    }

    std::vector<EvalItem> items;
    std::set<std::string> claimed;
    for (const auto& e : entries) {
        EvalItem item;
        item.id = id_from_hr_path(e.hr_path);
        item.hr_path = e.hr_path;
        item.sr_path = (fs::path(opt.sr_dir) / (item.id + "_sr.png")).string();
        if (!fs::exists(item.sr_path))
            fail(ErrorCategory::io, "no super-resolved image for pair " + item.id + ": " +
                                        item.sr_path);
        claimed.insert(item.id + "_sr.png");
        item.hr = load_image(item.hr_path);
        item.sr = load_image(item.sr_path);
        if (!item.sr.same_shape(item.hr))
            fail(ErrorCategory::shape, "pair " + item.id + ": sr/hr shapes differ");
        items.push_back(std::move(item));
    }
    for (const auto& entry : fs::directory_iterator(opt.sr_dir)) {
        std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.size() > 7 &&
            name.compare(name.size() - 7, 7, "_sr.png") == 0 && !claimed.count(name))
            std::cerr << "warning: " << entry.path().string() << " has no manifest entry\n";
    }
    std::sort(items.begin(), items.end(),
              [](const EvalItem& a, const EvalItem& b) { return a.id < b.id; });

    MetricProtocol protocol;
    protocol.use_y = opt.use_y;
    protocol.border = border;
    protocol.lpips_exe = opt.lpips_exe;

    EvalReport report = evaluate(items, protocol);
    write_report(std::cout, report);
    if (!opt.report_path.empty()) {
        fs::path rp(opt.report_path);
        if (rp.has_parent_path()) {
            std::error_code ec;
            fs::create_directories(rp.parent_path(), ec);
        }
        std::ofstream os(rp, std::ios::trunc);
        if (!os) fail(ErrorCategory::io, "cannot write report: " + opt.report_path);
        write_report(os, report);
    }
    return 0;
}

} // namespace diffsr
