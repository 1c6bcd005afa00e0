// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Criteria 7 and 8 train real models and take minutes and hours
// respectively; pass criterion numbers as arguments to run a subset, e.g.
// `acceptance 1 2 3` or `acceptance 7`.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "diffsr/checkpoint.hpp"
#include "diffsr/commands.hpp"
#include "diffsr/conditioning.hpp"
#include "diffsr/dataset.hpp"
#include "diffsr/diffusion.hpp"
#include "diffsr/image.hpp"
#include "diffsr/image_io.hpp"
#include "diffsr/metrics.hpp"
#include "diffsr/nn.hpp"
#include "diffsr/resample.hpp"
#include "diffsr/rng.hpp"
#include "diffsr/schedule.hpp"
#include "diffsr/training.hpp"
#include "diffsr/unet.hpp"

extern "C" void openblas_set_num_threads(int);

using namespace diffsr;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
    static fs::path dir = [] {
        fs::path d = fs::current_path() / "acceptance_work";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f.good()) return "";
    return std::string(std::istreambuf_iterator<char>(f), {});
}

// Multi-octave value noise: seeded coarse lattices upsampled bicubically and
// blended. `octaves` lists lattice sizes; `weights` their blend weights.
ImageTensor make_texture(int channels, int h, int w, std::uint64_t seed,
                         const std::vector<int>& octaves,
                         const std::vector<double>& weights) {
    ImageTensor out(channels, h, w, ValueRange::Unit);
    double wsum = 0.0;
    for (double wt : weights) wsum += wt;
    Rng rng(seed);
    for (std::size_t o = 0; o < octaves.size(); ++o) {
        ImageTensor lattice(channels, octaves[o], octaves[o], ValueRange::Unit);
        for (auto& v : lattice.data) v = rng.next_unit();
        ImageTensor up = bicubic_resize(lattice, h, w);
        for (std::size_t i = 0; i < out.data.size(); ++i)
            out.data[i] += weights[o] / wsum * up.data[i];
    }
    return out;
}

// Adds unrecoverable per-pixel noise; lowers every interpolation baseline
// without hurting a model that memorizes the exact image.
void add_pixel_noise(ImageTensor* img, double amp, std::uint64_t seed) {
    Rng rng(seed);
    for (auto& v : img->data) {
        v += amp * (rng.next_unit() - 0.5);
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    }
}

std::vector<TrainLogRow> read_loss_log(const fs::path& p) {
    std::ifstream f(p);
    std::vector<TrainLogRow> rows;
    std::string line;
    std::getline(f, line); // header
    while (std::getline(f, line)) {
        TrainLogRow r;
        if (std::sscanf(line.c_str(), "%d\t%lf\t%lf", &r.step, &r.loss, &r.seconds) == 3)
            rows.push_back(r);
    }
    return rows;
}

double mean_loss(const std::vector<TrainLogRow>& rows, int from_step, int to_step) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : rows)
        if (r.step >= from_step && r.step <= to_step) {
            sum += r.loss;
            ++n;
        }
    return n ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------

bool criterion1(std::string* detail) {
    double worst = 0.0;
    for (int T : {4, 100, 1000}) {
        auto s = make_cosine_schedule(T);
        for (int t = 0; t <= T; ++t) {
            worst = std::max(worst, std::abs(s.alpha[t] * s.alpha[t] +
                                             s.sigma[t] * s.sigma[t] - 1.0));
        }
        if (std::abs(s.alpha[0] - 1.0) > 1e-12) return false;
        if (std::abs(s.alpha[T]) > 1e-12) return false;
        for (int t = 1; t <= T; ++t)
            if (!(s.snr[t] < s.snr[t - 1])) return false;
    }
    std::ostringstream os;
    os << "max |alpha^2+sigma^2-1| = " << worst;
    *detail = os.str();
    return worst <= 1e-12;
}

bool criterion2(std::string* detail) {
    auto sched = make_cosine_schedule(1000);
    ImageTensor x0(1, 8, 8, ValueRange::Signed);
    Rng init(2024);
    for (auto& v : x0.data) v = 2.0 * init.next_unit() - 1.0;
    const int N = 10000;
    Rng base(555);
    double worst_mean_z = 0.0, worst_var_rel = 0.0;
    for (int t : {250, 500, 750}) {
        std::vector<double> sum(64, 0.0), sumsq(64, 0.0);
        for (int i = 0; i < N; ++i) {
            auto draw = make_noise_draw(base, static_cast<std::uint64_t>(t) * N + i, 64);
            auto st = forward_diffuse(x0, t, draw, sched);
            for (int p = 0; p < 64; ++p) {
                sum[p] += st.x.data[p];
                sumsq[p] += st.x.data[p] * st.x.data[p];
            }
        }
        const double a = sched.alpha[t], s = sched.sigma[t];
        const double mean_tol = 4.0 * s / std::sqrt(double(N));
        for (int p = 0; p < 64; ++p) {
            double mean = sum[p] / N;
            double var = sumsq[p] / N - mean * mean;
            worst_mean_z = std::max(worst_mean_z, std::abs(mean - a * x0.data[p]) / mean_tol);
            worst_var_rel = std::max(worst_var_rel, std::abs(var - s * s) / (s * s));
        }
    }
    std::ostringstream os;
    os << "worst per-pixel mean dev = " << worst_mean_z << " of the 4 sigma/sqrt(N) budget"
       << ", worst var rel err = " << worst_var_rel;
    *detail = os.str();
    return worst_mean_z <= 1.0 && worst_var_rel <= 0.10;
}

bool criterion3(std::string* detail) {
    auto sched = make_cosine_schedule(1000);
    ImageTensor x0(1, 8, 8, ValueRange::Signed);
    Rng init(31337);
    for (auto& v : x0.data) v = 2.0 * init.next_unit() - 1.0;
    OracleDenoiser den(x0);
    ImageTensor cond(1, 8, 8, ValueRange::Signed);
    double worst = 0.0;
    ImageTensor full;
    for (int s : {1, 10, 100, 1000}) {
        auto out = sample(den, cond, sched, subsample_timesteps(sched, s), 99);
        for (std::size_t i = 0; i < x0.size(); ++i)
            worst = std::max(worst, std::abs(out.data[i] - x0.data[i]));
        if (s == 1000) full = out;
    }
    auto sub = sample(den, cond, sched, subsample_timesteps(sched, 10), 99);
    double traj = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i)
        traj = std::max(traj, std::abs(full.data[i] - sub.data[i]));
    std::ostringstream os;
    os << "max |sample - x0| = " << worst << ", full-vs-10-step gap = " << traj;
    *detail = os.str();
    return worst <= 1e-6 && traj <= 1e-6;
}

bool criterion4(std::string* detail) {
    auto root = work_dir() / "c4";
    fs::create_directories(root);
    auto src = root / "src.png";
    auto tex = make_texture(3, 64, 64, 4001, {4, 8, 16}, {1.0, 0.6, 0.35});
    save_image(tex, src);
    MakeDatasetOptions mk;
    mk.inputs = {src.string()};
    mk.out_dir = (root / "ds").string();
    mk.scale = 4;
    mk.patch = 32;
    mk.stride = 32;
    cmd_make_dataset(mk);

    TrainOptions tr;
    tr.dataset = (root / "ds" / "dataset.tsv").string();
    tr.arch.base_channels = 8;
    tr.arch.channel_multipliers = {1, 2};
    tr.arch.num_res_blocks = 1;
    tr.arch.time_embed_dim = 16;
    tr.arch.image_channels = 0;
    tr.train.total_steps = 3;
    tr.train.batch_size = 2;
    tr.train.timesteps = 50;
    tr.train.log_every = 1;
    tr.train.checkpoint_every = 0;
    tr.train.seed = 42;
    tr.out_dir = (root / "runA").string();
    cmd_train(tr);
    tr.out_dir = (root / "runB").string();
    cmd_train(tr);
    bool ckpt_same =
        slurp(root / "runA" / "final.ckpt") == slurp(root / "runB" / "final.ckpt");

    SampleOptions sm;
    sm.checkpoint = (root / "runA" / "final.ckpt").string();
    sm.dataset = tr.dataset;
    sm.inference_steps = 5;
    sm.seed = 7;
    sm.out_dir = (root / "srA").string();
    cmd_sample(sm);
    sm.out_dir = (root / "srB").string();
    cmd_sample(sm);
    bool png_same = true;
    for (const auto& entry : fs::directory_iterator(root / "srA")) {
        if (entry.path().extension() != ".png") continue;
        auto other = root / "srB" / entry.path().filename();
        png_same = png_same && slurp(entry.path()) == slurp(other);
    }
    *detail = std::string("checkpoints ") + (ckpt_same ? "identical" : "DIFFER") +
              ", sampled PNGs " + (png_same ? "identical" : "DIFFER");
    return ckpt_same && png_same;
}

bool criterion5(std::string* detail) {
    ArchitectureConfig cfg;
    cfg.base_channels = 8;
    cfg.channel_multipliers = {1, 2};
    cfg.num_res_blocks = 1;
    cfg.time_embed_dim = 16;
    cfg.image_channels = 1;
    UnetModel<double> model(cfg);
    model.init_parameters(Rng(77));
    // The head conv initializes to zero, which would short-circuit every
    // interior gradient to exactly zero; randomize it so all paths carry
    // signal.
    {
        auto& ps = model.params();
        Rng hr(81);
        for (auto& v : ps.tensors[ps.index_of("head.conv.weight")].v)
            v = 0.1 * hr.next_normal();
    }
    auto sched = make_cosine_schedule(1000);
    nn::Tensor4<double> x(1, 1, 8, 8), cond(1, 1, 8, 8);
    Rng rng(78);
    for (auto& v : x.v) v = rng.next_normal();
    for (auto& v : cond.v) v = 2.0 * rng.next_unit() - 1.0;
    // Keep every L1 sign fixed under the FD perturbations by placing the
    // target well below the initial (zero) prediction.
    nn::Tensor4<double> target = model.forward(x, cond, {400}, sched);
    Rng tr(79);
    for (auto& v : target.v) v -= (0.2 + 0.3 * tr.next_unit());

    auto grads = zeros_like(model.params());
    model.loss_and_grad(x, cond, {400}, sched, target, &grads);
    auto loss_now = [&] {
        auto g = zeros_like(model.params());
        return model.loss_and_grad(x, cond, {400}, sched, target, &g);
    };

    std::size_t total = model.params().total_count();
    Rng pick(80);
    double worst = 0.0;
    const double step = 1e-5;
    for (int probe = 0; probe < 20; ++probe) {
        std::size_t flat = pick.next_u64() % total;
        std::size_t ti = 0;
        while (flat >= model.params().tensors[ti].v.size()) {
            flat -= model.params().tensors[ti].v.size();
            ++ti;
        }
        auto& tensor = model.params().tensors[ti];
        double keep = tensor.v[flat];
        tensor.v[flat] = keep + step;
        double lp = loss_now();
        tensor.v[flat] = keep - step;
        double lm = loss_now();
        tensor.v[flat] = keep;
        double fd = (lp - lm) / (2.0 * step);
        double an = grads.tensors[ti].v[flat];
        double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
        worst = std::max(worst, std::abs(fd - an) / denom);
    }
    std::ostringstream os;
    os << "worst relative error over 20 probes = " << worst;
    *detail = os.str();
    return worst < 1e-3;
}

// Same windowed statistics as the library's SSIM but written as direct 2-D
// sums, kept independent on purpose.
double naive_ssim(const ImageTensor& a, const ImageTensor& b) {
    const int win = 11;
    const double sigma = 1.5, c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double w[11][11], wsum = 0.0;
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
            double di = i - 5.0, dj = j - 5.0;
            w[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
            wsum += w[i][j];
        }
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) w[i][j] /= wsum;
    double total = 0.0;
    int count = 0;
    for (int ch = 0; ch < a.channels; ++ch)
        for (int y = 0; y + win <= a.height; ++y)
            for (int x = 0; x + win <= a.width; ++x) {
                double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
                for (int i = 0; i < win; ++i)
                    for (int j = 0; j < win; ++j) {
                        double va = a.data[(ch * a.height + y + i) * a.width + x + j];
                        double vb = b.data[(ch * b.height + y + i) * b.width + x + j];
                        mx += w[i][j] * va;
                        my += w[i][j] * vb;
                        mxx += w[i][j] * va * va;
                        myy += w[i][j] * vb * vb;
                        mxy += w[i][j] * va * vb;
                    }
                double sx = mxx - mx * mx, sy = myy - my * my, sxy = mxy - mx * my;
                total += ((2 * mx * my + c1) * (2 * sxy + c2)) /
                         ((mx * mx + my * my + c1) * (sx + sy + c2));
                ++count;
            }
    return total / count;
}

bool criterion6(std::string* detail) {
    ImageTensor z(1, 8, 8, ValueRange::Unit, 0.0);
    ImageTensor one(1, 8, 8, ValueRange::Unit, 1.0);
    if (std::abs(psnr(z, one) - 0.0) > 1e-9) return false;
    ImageTensor a(1, 8, 8, ValueRange::Unit, 0.25);
    ImageTensor b(1, 8, 8, ValueRange::Unit, 0.75);
    if (std::abs(psnr(a, b) - 6.020599913279624) > 1e-9) return false;

    Rng rng(606);
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
        ImageTensor u(1, 16, 16, ValueRange::Unit), v(1, 16, 16, ValueRange::Unit);
        for (auto& x : u.data) x = rng.next_unit();
        if (trial == 0) {
            v = u;
        } else {
            v = u;
            for (auto& x : v.data) {
                x += 0.1 * rng.next_normal();
                x = x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x);
            }
        }
        if (ssim(u, u) != 1.0) return false;
        worst = std::max(worst, std::abs(ssim(u, v) - naive_ssim(u, v)));
    }
    std::ostringstream os;
    os << "max |ssim - naive oracle| = " << worst;
    *detail = os.str();
    return worst <= 1e-6;
}

bool criterion7(std::string* detail) {
    auto root = work_dir() / "c7";
    fs::create_directories(root);
    // A 32x32 patch with coarse structure plus unrecoverable pixel noise:
    // the noise drags the bicubic baseline down while a model that overfits
    // this exact patch can still match it closely.
    auto hr = make_texture(3, 32, 32, 7001, {4, 8, 16}, {1.0, 0.55, 0.3});
    add_pixel_noise(&hr, 0.30, 7002);
    auto src = root / "patch.png";
    save_image(hr, src);

    MakeDatasetOptions mk;
    mk.inputs = {src.string()};
    mk.out_dir = (root / "ds").string();
    mk.scale = 4;
    cmd_make_dataset(mk);
    const std::string dataset = (root / "ds" / "dataset.tsv").string();

    TrainOptions tr;
    tr.dataset = dataset;
    tr.out_dir = (root / "run").string();
    tr.arch.base_channels = 32;
    tr.arch.channel_multipliers = {1, 2};
    tr.arch.num_res_blocks = 1;
    tr.arch.time_embed_dim = 64;
    tr.arch.image_channels = 0;
    tr.train.total_steps = 2000;
    tr.train.batch_size = 4;
    tr.train.adam.lr = 1e-4;
    tr.train.timesteps = 1000;
    tr.train.log_every = 1;
    tr.train.checkpoint_every = 0;
    tr.train.seed = 7;
    cmd_train(tr);

    auto rows = read_loss_log(root / "run" / "loss_log.tsv");
    double first100 = mean_loss(rows, 1, 100);
    double last100 = mean_loss(rows, 1901, 2000);

    SampleOptions sm;
    sm.checkpoint = (root / "run" / "final.ckpt").string();
    sm.dataset = dataset;
    sm.out_dir = (root / "sr").string();
    sm.inference_steps = 100;
    sm.seed = 11;
    cmd_sample(sm);

    auto pairs_list = read_dataset_manifest(dataset);
    auto pair = load_pair(pairs_list.front());
    auto sr = load_image((root / "sr" / (pair.id + "_sr.png")).string());
    double psnr_sr = psnr(sr, pair.hr);
    auto bicubic = quantize_8bit(bicubic_resize(pair.lr, pair.hr.height, pair.hr.width));
    double psnr_bi = psnr(bicubic, pair.hr);

    std::ostringstream os;
    os << "loss mean steps 1-100 = " << first100 << ", steps 1901-2000 = " << last100
       << " (ratio " << last100 / first100 << "), sample PSNR = " << psnr_sr
       << " dB, bicubic PSNR = " << psnr_bi << " dB";
    *detail = os.str();
    return last100 < 0.25 * first100 && psnr_sr >= 26.0 && psnr_sr >= psnr_bi - 0.5;
}

bool criterion8(std::string* detail) {
    auto root = work_dir() / "c8";
    fs::create_directories(root);

    // ~500 grayscale 64px patches cut from eight synthetic 512x512 images.
    MakeDatasetOptions mk;
    for (int i = 0; i < 8; ++i) {
        auto img = make_texture(1, 512, 512, 8000 + i, {4, 8, 16, 32},
                                {1.0, 0.6, 0.35, 0.2});
        auto p = root / ("src" + std::to_string(i) + ".png");
        save_image(img, p);
        mk.inputs.push_back(p.string());
    }
    mk.out_dir = (root / "ds").string();
    mk.scale = 4;
    mk.patch = 64;
    mk.stride = 64;
    mk.limit = 500;
    cmd_make_dataset(mk);

    // Hold out the last 20 pairs.
    auto all = read_dataset_manifest((root / "ds" / "dataset.tsv").string());
    std::vector<DatasetEntry> train_entries(all.begin(), all.end() - 20);
    std::vector<DatasetEntry> held_entries(all.end() - 20, all.end());
    const std::string train_manifest = (root / "train.tsv").string();
    const std::string held_manifest = (root / "held.tsv").string();
    write_dataset_manifest(train_manifest, train_entries);
    write_dataset_manifest(held_manifest, held_entries);

    TrainOptions tr;
    tr.dataset = train_manifest;
    tr.out_dir = (root / "run").string();
    // Sized for single-core CPU wall time (~0.4 s/step, ~2 h for the run).
    tr.arch.base_channels = 8;
    tr.arch.channel_multipliers = {1, 2};
    tr.arch.num_res_blocks = 1;
    tr.arch.time_embed_dim = 32;
    tr.arch.image_channels = 0;
    tr.train.total_steps = 20000;
    tr.train.batch_size = 8;
    tr.train.adam.lr = 1e-4;
    tr.train.timesteps = 1000;
    tr.train.log_every = 200;
    tr.train.checkpoint_every = 5000;
    tr.train.seed = 88;

    // Held-out loss with frozen (t, eps) draws, measured before and after.
    auto sched = make_cosine_schedule(tr.train.timesteps);
    auto provider = ConditionProvider::bicubic();
    struct HeldCase {
        nn::Tensor4<float> xt{1, 1, 64, 64}, cond{1, 1, 64, 64}, target{1, 1, 64, 64};
        int t = 0;
    };
    std::vector<HeldCase> held_cases;
    Rng held_rng(999);
    for (const auto& e : held_entries) {
        auto pair = load_pair(e);
        auto x0 = to_signed(pair.hr);
        auto cond = provider.condition_for(pair);
        HeldCase hc;
        hc.t = held_rng.next_int_1_to(tr.train.timesteps);
        NoiseDraw draw = make_noise_draw(held_rng, held_rng.next_u64(), x0.size());
        auto state = forward_diffuse(x0, hc.t, draw, sched);
        image_to_tensor(state.x, &hc.xt, 0);
        image_to_tensor(cond, &hc.cond, 0);
        image_to_tensor(x0, &hc.target, 0);
        held_cases.push_back(std::move(hc));
    }
    auto held_loss = [&](const UnetModel<float>& model) {
        double total = 0.0;
        for (const auto& hc : held_cases) {
            auto pred = model.forward(hc.xt, hc.cond, {hc.t}, sched);
            total += nn::l1_loss(pred, hc.target);
        }
        return total / held_cases.size();
    };

    ArchitectureConfig fresh_arch = tr.arch;
    fresh_arch.image_channels = 1;
    UnetModel<float> fresh(fresh_arch);
    fresh.init_parameters(Rng(tr.train.seed).fork(0));
    double held_initial = held_loss(fresh);

    cmd_train(tr);

    auto final_model = model_from_checkpoint(
        load_checkpoint((root / "run" / "final.ckpt").string()));
    double held_final = held_loss(final_model);

    // Sample four held-out ids under both condition sources.
    std::vector<std::string> sample_ids;
    std::vector<DatasetEntry> sampled_entries;
    for (std::size_t k = 0; k < 4; ++k) {
        sample_ids.push_back(id_from_hr_path(held_entries[k].hr_path));
        sampled_entries.push_back(held_entries[k]);
    }
    const std::string eval_manifest = (root / "eval4.tsv").string();
    write_dataset_manifest(eval_manifest, sampled_entries);

    SampleOptions sm;
    sm.checkpoint = (root / "run" / "final.ckpt").string();
    sm.dataset = held_manifest;
    sm.inference_steps = 100;
    sm.seed = 5;
    sm.only_ids = sample_ids;
    sm.out_dir = (root / "sr_bicubic").string();
    cmd_sample(sm);

    // HR-as-oracle conditions via the external manifest route.
    {
        std::ofstream m(root / "cond_oracle.tsv");
        for (const auto& e : held_entries)
            m << id_from_hr_path(e.hr_path) << "\t" << e.hr_path << "\n";
    }
    sm.condition.external = true;
    sm.condition.manifest = (root / "cond_oracle.tsv").string();
    sm.out_dir = (root / "sr_oracle").string();
    cmd_sample(sm);

    // Outputs decode, are in range, and both eval reports complete.
    bool in_range = true;
    for (const auto& dir : {root / "sr_bicubic", root / "sr_oracle"}) {
        for (const auto& id : sample_ids) {
            auto img = load_image((dir / (id + "_sr.png")).string());
            for (double v : img.data)
                if (!(v >= 0.0 && v <= 1.0)) in_range = false;
        }
    }
    EvalOptions ev;
    ev.dataset = eval_manifest;
    ev.sr_dir = (root / "sr_bicubic").string();
    ev.report_path = (root / "report_bicubic.tsv").string();
    cmd_eval(ev);
    ev.sr_dir = (root / "sr_oracle").string();
    ev.report_path = (root / "report_oracle.tsv").string();
    cmd_eval(ev);
    bool reports_ok = !slurp(root / "report_bicubic.tsv").empty() &&
                      !slurp(root / "report_oracle.tsv").empty();

    std::ostringstream os;
    os << "held-out loss " << held_initial << " -> " << held_final << " (ratio "
       << held_final / held_initial << "), outputs in range: " << (in_range ? "yes" : "NO")
       << ", reports: " << (reports_ok ? "ok" : "MISSING");
    *detail = os.str();
    return held_final <= 0.5 * held_initial && in_range && reports_ok;
}

bool criterion9(std::string* detail) {
    // Zero-gradient identity.
    ParamSet<double> params;
    params.tensors.push_back({"w", {1}, {0.7}});
    auto state = make_adam_state(params);
    ParamSet<double> zero = zeros_like(params);
    AdamConfig cfg;
    adam_update(&params, zero, &state, cfg);
    if (params.tensors[0].v[0] != 0.7) return false;

    // Scalar first step: -lr within 1e-9.
    ParamSet<double> p2;
    p2.tensors.push_back({"w", {1}, {0.0}});
    auto s2 = make_adam_state(p2);
    ParamSet<double> g2;
    g2.tensors.push_back({"w", {1}, {1.0}});
    AdamConfig c2;
    c2.lr = 1e-4;
    adam_update(&p2, g2, &s2, c2);
    double got = p2.tensors[0].v[0];
    std::ostringstream os;
    os << "first-step update = " << got << " vs -lr = " << -c2.lr;
    *detail = os.str();
    return std::abs(got - (-c2.lr)) <= 1e-9;
}

} // namespace

int main(int argc, char** argv) {
    openblas_set_num_threads(1);
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    struct Entry {
        int id;
        const char* desc;
        std::function<bool(std::string*)> fn;
    };
    const std::vector<Entry> entries = {
        {1, "noise schedule identities and monotone SNR", criterion1},
        {2, "forward-process moments match the schedule", criterion2},
        {3, "oracle denoiser sampling is exact for any step count", criterion3},
        {4, "training and sampling are byte-deterministic", criterion4},
        {5, "network gradients match finite differences", criterion5},
        {6, "PSNR closed forms and SSIM vs naive oracle", criterion6},
        {7, "single-patch overfit reaches reference quality", criterion7},
        {8, "toy training generalizes to held-out patches", criterion8},
        {9, "Adam zero-gradient identity and first-step size", criterion9},
    };

    int failures = 0;
    for (const auto& e : entries) {
        if (!only.empty() && !only.count(e.id)) continue;
        auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = e.fn(&detail);
        } catch (const std::exception& ex) {
            detail = std::string("exception: ") + ex.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                          .count();
        std::printf("%s criterion %d: %s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", e.id,
                    e.desc, secs, detail.empty() ? "" : " -- ", detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures;
}
