#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "diffsr/diffusion.hpp"
#include "diffsr/error.hpp"
#include "diffsr/image.hpp"
#include "diffsr/rng.hpp"
#include "diffsr/schedule.hpp"

using namespace diffsr;

namespace {

ImageTensor random_signed(int c, int h, int w, std::uint64_t seed) {
    ImageTensor img(c, h, w, ValueRange::Signed);
    Rng rng(seed);
    for (auto& v : img.data) v = 2.0 * rng.next_unit() - 1.0;
    return img;
}

// Counts predict_x0 invocations and records the timesteps it was asked about.
class CountingDenoiser : public Denoiser {
public:
    explicit CountingDenoiser(ImageTensor truth) : truth_(std::move(truth)) {}
    ImageTensor predict_x0(const ImageTensor&, int t, const ImageTensor&) const override {
        seen_ts.push_back(t);
        return truth_;
    }
    mutable std::vector<int> seen_ts;

private:
    ImageTensor truth_;
};

ErrorCategory category_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.category();
    }
    FAIL("expected an error");
    return ErrorCategory::usage;
}

} // namespace

TEST_CASE("forward diffusion is the exact schedule mix") {
    auto sched = make_cosine_schedule(100);
    auto x0 = random_signed(2, 3, 4, 10);
    auto draw = make_noise_draw(Rng(99), 3, x0.size());
    for (int t : {1, 37, 50, 100}) {
        auto st = forward_diffuse(x0, t, draw, sched);
        CHECK(st.t == t);
        REQUIRE(st.x.same_shape(x0));
        for (std::size_t i = 0; i < x0.size(); ++i) {
            double want = sched.alpha[t] * x0.data[i] + sched.sigma[t] * draw.eps[i];
            CHECK(std::abs(st.x.data[i] - want) <= 1e-15);
        }
    }
    // At t = T the clean image vanishes entirely (alpha_T = 0, sigma_T = 1).
    auto st = forward_diffuse(x0, 100, draw, sched);
    for (std::size_t i = 0; i < x0.size(); ++i)
        CHECK(st.x.data[i] == doctest::Approx(draw.eps[i]).epsilon(1e-15));
}

TEST_CASE("forward diffusion validates its inputs") {
    auto sched = make_cosine_schedule(10);
    auto x0 = random_signed(1, 2, 2, 11);
    auto draw = make_noise_draw(Rng(1), 0, x0.size());
    CHECK(category_of([&] { forward_diffuse(x0, 0, draw, sched); }) == ErrorCategory::usage);
    CHECK(category_of([&] { forward_diffuse(x0, 11, draw, sched); }) == ErrorCategory::usage);
    auto small = make_noise_draw(Rng(1), 0, x0.size() - 1);
    CHECK(category_of([&] { forward_diffuse(x0, 5, small, sched); }) == ErrorCategory::shape);
    auto unit = x0;
    unit.range = ValueRange::Unit;
    CHECK(category_of([&] { forward_diffuse(unit, 5, draw, sched); }) == ErrorCategory::shape);
}

TEST_CASE("noise estimate inverts forward diffusion exactly") {
    auto sched = make_cosine_schedule(1000);
    auto x0 = random_signed(3, 4, 4, 12);
    auto draw = make_noise_draw(Rng(5), 1, x0.size());
    for (int t : {1, 250, 500, 999, 1000}) {
        auto st = forward_diffuse(x0, t, draw, sched);
        auto z = estimate_noise(st, x0, sched);
        for (std::size_t i = 0; i < x0.size(); ++i)
            CHECK(std::abs(z.data[i] - draw.eps[i]) <= 1e-9);
    }
    LatentState bad{x0, 0};
    CHECK(category_of([&] { estimate_noise(bad, x0, sched); }) == ErrorCategory::usage);
}

TEST_CASE("denoise step reaches the x0 prediction at t_prev = 0") {
    auto sched = make_cosine_schedule(50);
    auto x0 = random_signed(1, 3, 3, 13);
    auto draw = make_noise_draw(Rng(6), 0, x0.size());
    auto st = forward_diffuse(x0, 50, draw, sched);
    auto x0_hat = random_signed(1, 3, 3, 14);
    auto out = ddim_step(st, x0_hat, 0, sched);
    CHECK(out.t == 0);
    for (std::size_t i = 0; i < x0.size(); ++i) CHECK(out.x.data[i] == x0_hat.data[i]);
}

TEST_CASE("denoise step matches its closed form") {
    auto sched = make_cosine_schedule(100);
    auto x0 = random_signed(2, 2, 2, 15);
    auto draw = make_noise_draw(Rng(7), 0, x0.size());
    auto st = forward_diffuse(x0, 80, draw, sched);
    auto x0_hat = random_signed(2, 2, 2, 16);
    auto out = ddim_step(st, x0_hat, 30, sched);
    CHECK(out.t == 30);
    for (std::size_t i = 0; i < x0.size(); ++i) {
        double z = (st.x.data[i] - sched.alpha[80] * x0_hat.data[i]) / sched.sigma[80];
        double want = sched.alpha[30] * x0_hat.data[i] + sched.sigma[30] * z;
        CHECK(std::abs(out.x.data[i] - want) <= 1e-15);
    }
    CHECK(category_of([&] { ddim_step(st, x0_hat, 80, sched); }) == ErrorCategory::usage);
    CHECK(category_of([&] { ddim_step(st, x0_hat, -1, sched); }) == ErrorCategory::usage);
}

TEST_CASE("denoise step with a perfect prediction recovers x0 in one hop") {
    auto sched = make_cosine_schedule(200);
    auto x0 = random_signed(1, 4, 4, 17);
    auto draw = make_noise_draw(Rng(8), 0, x0.size());
    auto st = forward_diffuse(x0, 200, draw, sched);
    auto out = ddim_step(st, x0, 0, sched);
    for (std::size_t i = 0; i < x0.size(); ++i)
        CHECK(std::abs(out.x.data[i] - x0.data[i]) <= 1e-12);
}

TEST_CASE("forward diffusion has the right moments at small N") {
    auto sched = make_cosine_schedule(1000);
    ImageTensor x0(1, 1, 1, ValueRange::Signed);
    x0.data[0] = 0.4;
    const int t = 500;
    const int n = 4000;
    Rng base(321);
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        auto draw = make_noise_draw(base, static_cast<std::uint64_t>(i), 1);
        auto st = forward_diffuse(x0, t, draw, sched);
        sum += st.x.data[0];
        sumsq += st.x.data[0] * st.x.data[0];
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    double want_mean = sched.alpha[t] * 0.4;
    double want_var = sched.sigma[t] * sched.sigma[t];
    CHECK(std::abs(mean - want_mean) < 4.0 * sched.sigma[t] / std::sqrt(double(n)));
    CHECK(std::abs(var - want_var) < 0.15 * want_var);
}

TEST_CASE("sampling with a fixed-point denoiser returns its image exactly") {
    auto sched = make_cosine_schedule(1000);
    auto truth = random_signed(1, 4, 4, 20);
    OracleDenoiser den(truth);
    auto cond = random_signed(1, 4, 4, 21);
    for (int s : {1, 10, 100, 1000}) {
        auto steps = subsample_timesteps(sched, s);
        auto out = sample(den, cond, sched, steps, 7);
        REQUIRE(out.same_shape(truth));
        for (std::size_t i = 0; i < truth.size(); ++i)
            CHECK(std::abs(out.data[i] - truth.data[i]) <= 1e-9);
    }
}

TEST_CASE("sampling output is clamped to the signed range") {
    auto sched = make_cosine_schedule(10);
    ImageTensor truth(1, 2, 2, ValueRange::Signed);
    truth.data = {1.5, -2.0, 0.25, -0.75};
    OracleDenoiser den(truth);
    auto cond = random_signed(1, 2, 2, 22);
    auto out = sample(den, cond, sched, subsample_timesteps(sched, 10), 3);
    CHECK(out.data[0] == 1.0);
    CHECK(out.data[1] == -1.0);
    CHECK(out.data[2] == 0.25);
    CHECK(out.data[3] == -0.75);
}

TEST_CASE("sampling calls the denoiser once per subsequence step") {
    auto sched = make_cosine_schedule(100);
    auto truth = random_signed(1, 2, 2, 23);
    CountingDenoiser den(truth);
    auto cond = random_signed(1, 2, 2, 24);
    auto steps = subsample_timesteps(sched, 7);
    sample(den, cond, sched, steps, 1);
    REQUIRE(den.seen_ts.size() == steps.steps.size());
    for (std::size_t i = 0; i < steps.steps.size(); ++i)
        CHECK(den.seen_ts[i] == steps.steps[i]);
}

TEST_CASE("sampling is a pure function of its seed") {
    auto sched = make_cosine_schedule(100);
    // A denoiser whose output depends on the latent, so the seed matters.
    class Affine : public Denoiser {
    public:
        ImageTensor predict_x0(const ImageTensor& x_t, int,
                               const ImageTensor& cond) const override {
            ImageTensor out = x_t;
            for (std::size_t i = 0; i < out.data.size(); ++i)
                out.data[i] = 0.3 * x_t.data[i] + 0.5 * cond.data[i];
            return out;
        }
    };
    Affine den;
    auto cond = random_signed(1, 3, 3, 26);
    auto steps = subsample_timesteps(sched, 10);
    auto a = sample(den, cond, sched, steps, 42);
    auto b = sample(den, cond, sched, steps, 42);
    auto c = sample(den, cond, sched, steps, 43);
    CHECK(a.data == b.data);
    CHECK(a.data != c.data);
}

TEST_CASE("sampling rejects malformed subsequences and conditions") {
    auto sched = make_cosine_schedule(100);
    auto truth = random_signed(1, 2, 2, 27);
    OracleDenoiser den(truth);
    auto cond = random_signed(1, 2, 2, 28);
    TimestepSubsequence bad;
    bad.steps = {50, 25}; // does not start at T
    CHECK(category_of([&] { sample(den, cond, sched, bad, 1); }) == ErrorCategory::usage);
    TimestepSubsequence empty;
    CHECK(category_of([&] { sample(den, cond, sched, empty, 1); }) == ErrorCategory::usage);
    auto unit_cond = cond;
    unit_cond.range = ValueRange::Unit;
    CHECK(category_of([&] {
        sample(den, unit_cond, sched, subsample_timesteps(sched, 4), 1);
    }) == ErrorCategory::shape);
    // Denoiser output shape must match the condition.
    OracleDenoiser wrong(random_signed(1, 3, 3, 29));
    CHECK(category_of([&] {
        sample(wrong, cond, sched, subsample_timesteps(sched, 4), 1);
    }) == ErrorCategory::shape);
}

TEST_CASE("noise draws are indexed and reproducible") {
    Rng base(1234);
    auto a = make_noise_draw(base, 5, 16);
    auto b = make_noise_draw(base, 5, 16);
    auto c = make_noise_draw(base, 6, 16);
    CHECK(a.eps == b.eps);
    CHECK(a.eps != c.eps);
    CHECK(a.key == base.key());
    CHECK(a.draw_index == 5);
    // Values come from the forked child stream.
    Rng child = base.fork(5);
    for (int i = 0; i < 16; ++i) CHECK(a.eps[i] == child.next_normal());
    // The parent stream is never advanced by taking draws.
    CHECK(base.counter() == 0);
}
