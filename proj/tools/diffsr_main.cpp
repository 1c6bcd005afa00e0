#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "diffsr/commands.hpp"
#include "diffsr/error.hpp"

namespace {

void add_condition_flags(CLI::App* sub, diffsr::ConditionOptions* opt) {
    sub->add_flag("--external", opt->external,
                  "take conditions from an external manifest instead of bicubic upscaling");
    sub->add_option("--condition-manifest", opt->manifest,
                    "id<TAB>path manifest of external condition images");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Image super-resolution by conditional diffusion"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from an INI/TOML file");

    diffsr::MakeDatasetOptions mk;
    auto* mk_cmd = app.add_subcommand(
        "make-dataset", "Build an HR/LR pair dataset from high-resolution PNGs");
    mk_cmd->add_option("inputs", mk.inputs, "PNG files or directories")->required();
    mk_cmd->add_option("--out", mk.out_dir, "output directory")->required();
    mk_cmd->add_option("--scale", mk.scale, "downscaling factor")->capture_default_str();
    mk_cmd->add_option("--patch", mk.patch, "HR patch size (0 keeps whole images)")
        ->capture_default_str();
    mk_cmd->add_option("--stride", mk.stride, "HR patch stride (0 means patch size)")
        ->capture_default_str();
    mk_cmd->add_option("--limit", mk.limit, "stop after this many pairs (0 = all)")
        ->capture_default_str();

    diffsr::CacheConditionsOptions cc;
    auto* cc_cmd =
        app.add_subcommand("cache-conditions", "Precompute condition images for a dataset");
    cc_cmd->add_option("--dataset", cc.dataset, "dataset manifest")->required();
    cc_cmd->add_option("--cache-dir", cc.cache_dir, "where to store <id>.png files")
        ->required();
    add_condition_flags(cc_cmd, &cc.condition);

    diffsr::TrainOptions tr;
    auto* tr_cmd = app.add_subcommand("train", "Train the conditional denoiser");
    tr_cmd->add_option("--dataset", tr.dataset, "dataset manifest")->required();
    tr_cmd->add_option("--out", tr.out_dir, "run directory (checkpoints, loss log)")
        ->required();
    tr_cmd->add_option("--steps", tr.train.total_steps, "optimization steps")
        ->capture_default_str();
    tr_cmd->add_option("--batch", tr.train.batch_size, "batch size")->capture_default_str();
    tr_cmd->add_option("--lr", tr.train.adam.lr, "learning rate")->capture_default_str();
    tr_cmd->add_option("--timesteps", tr.train.timesteps, "diffusion schedule length T")
        ->capture_default_str();
    tr_cmd->add_option("--seed", tr.train.seed, "master seed")->capture_default_str();
    tr_cmd->add_option("--log-every", tr.train.log_every, "loss log granularity")
        ->capture_default_str();
    tr_cmd->add_option("--checkpoint-every", tr.train.checkpoint_every,
                       "periodic checkpoint interval (0 = final only)")
        ->capture_default_str();
    tr.arch.image_channels = 0; // infer from the data unless overridden
    tr_cmd->add_option("--base-channels", tr.arch.base_channels, "stem width")
        ->capture_default_str();
    tr_cmd->add_option("--channel-mults", tr.arch.channel_multipliers,
                       "per-level width multipliers")
        ->delimiter(',')
        ->capture_default_str();
    tr_cmd->add_option("--res-blocks", tr.arch.num_res_blocks, "residual blocks per level")
        ->capture_default_str();
    tr_cmd->add_option("--time-embed-dim", tr.arch.time_embed_dim,
                       "timestep embedding width")
        ->capture_default_str();
    tr_cmd->add_option("--image-channels", tr.arch.image_channels,
                       "1 or 3 (0 = infer from the data)")
        ->capture_default_str();
    tr_cmd->add_option("--condition-cache", tr.condition_cache,
                       "load conditions from this cache directory");
    tr_cmd->add_option("--resume", tr.resume, "checkpoint to continue from");
    add_condition_flags(tr_cmd, &tr.condition);

    diffsr::SampleOptions sm;
    auto* sm_cmd =
        app.add_subcommand("sample", "Super-resolve dataset images with a trained model");
    sm_cmd->add_option("--checkpoint", sm.checkpoint, "model checkpoint")->required();
    sm_cmd->add_option("--dataset", sm.dataset, "dataset manifest")->required();
    sm_cmd->add_option("--out", sm.out_dir, "output directory for <id>_sr.png")->required();
    sm_cmd->add_option("--steps", sm.inference_steps, "denoising steps")
        ->capture_default_str();
    sm_cmd->add_option("--seed", sm.seed, "master seed")->capture_default_str();
    sm_cmd->add_option("--id", sm.only_ids, "only sample these pair ids");
    sm_cmd->add_option("--condition-cache", sm.condition_cache,
                       "load conditions from this cache directory");
    add_condition_flags(sm_cmd, &sm.condition);

    diffsr::EvalOptions ev;
    auto* ev_cmd = app.add_subcommand("eval", "Score super-resolved images against HR truth");
    ev_cmd->add_option("--dataset", ev.dataset, "dataset manifest")->required();
    ev_cmd->add_option("--sr-dir", ev.sr_dir, "directory holding <id>_sr.png")->required();
    ev_cmd->add_option("--report", ev.report_path, "also write the report to this file");
    ev_cmd->add_flag("--y", ev.use_y, "compare BT.601 luma instead of native channels");
    ev_cmd->add_option("--border", ev.border, "border crop in pixels (-1 = dataset scale)")
        ->capture_default_str();
    ev_cmd->add_option("--lpips-exe", ev.lpips_exe,
                       "external program printing one perceptual score per pair");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "error:usage: %s\n", e.what());
        return diffsr::exit_code(diffsr::ErrorCategory::usage);
    }

    try {
        if (mk_cmd->parsed()) return diffsr::cmd_make_dataset(mk);
        if (cc_cmd->parsed()) return diffsr::cmd_cache_conditions(cc);
        if (tr_cmd->parsed()) return diffsr::cmd_train(tr);
        if (sm_cmd->parsed()) return diffsr::cmd_sample(sm);
        if (ev_cmd->parsed()) return diffsr::cmd_eval(ev);
    } catch (const diffsr::Error& e) {
        std::fprintf(stderr, "error:%s: %s\n", diffsr::to_string(e.category()), e.what());
        return diffsr::exit_code(e.category());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
