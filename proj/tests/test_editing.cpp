#include <cmath>

#include "doctest.h"

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "datagen/synthetic.hpp"
#include "diffusion/noising.hpp"
#include "editing/editing.hpp"

using namespace affedit;
using namespace affedit::editing;
using core::RngStream;
using core::Tensor;

namespace {

// Minimal world: untrained tiny networks are fine for the structural
// contracts (determinism, masking, round trips).
struct TinyPipeline {
    nn::TextEncoder request_enc;
    nn::TextEncoder semantic_enc;
    mapper::EmotionalMapper map;
    diffusion::LatentDenoiser den;
    diffusion::PatchAutoencoder ae;
    EditPipeline pipe;

    TinyPipeline()
        : request_enc(
              [] {
                  nn::TextEncoderConfig c;
                  c.channels = 8;
                  c.seq_len = 6;
                  c.vocab = 64;
                  c.heads = 2;
                  return c;
              }(),
              1),
          semantic_enc(
              [] {
                  nn::TextEncoderConfig c;
                  c.channels = 16;
                  c.seq_len = 6;
                  c.vocab = 64;
                  c.heads = 2;
                  return c;
              }(),
              2),
          map(
              [] {
                  mapper::MapperConfig c;
                  c.c_s = 16;
                  c.c_t = 8;
                  c.n_l = 6;
                  c.heads = 2;
                  c.depth = 1;
                  return c;
              }(),
              3),
          den(
              [] {
                  diffusion::DenoiserConfig c;
                  c.latent_channels = 2;
                  c.grid = 4;
                  c.width = 8;
                  c.heads = 2;
                  c.cond_channels = 16;
                  return c;
              }(),
              4),
          ae(
              [] {
                  diffusion::AutoencoderConfig c;
                  c.image_size = 16;
                  c.patch = 4;
                  c.latent_channels = 2;
                  c.hidden = 8;
                  return c;
              }(),
              5) {
        pipe.request_encoder = &request_enc;
        pipe.semantic_encoder = &semantic_enc;
        pipe.mapper = &map;
        pipe.denoiser = &den;
        pipe.autoencoder = &ae;
        pipe.schedule = diffusion::build_schedule(10, diffusion::ScheduleKind::LinearBeta, 0.0);
        pipe.tokenizer = core::HashTokenizer(64, 6);
    }

    Tensor sample_image(uint64_t seed) const {
        RngStream rng(seed);
        return datagen::render_image(datagen::warm_palette(), 16, rng);
    }
};

bool bit_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
    return true;
}

}  // namespace

TEST_CASE("edit with t=0 is exactly the autoencoder round-trip") {
    TinyPipeline world;
    Tensor image = world.sample_image(7);

    EditRequest req;
    req.image = image;
    req.text = "a calm warm meadow";
    req.noise_level = 0;
    req.seed = 42;
    EditResult result = edit(req, world.pipe);

    Tensor roundtrip = world.ae.decode(world.ae.encode(image));
    CHECK(bit_equal(result.image, roundtrip));
}

TEST_CASE("edit is deterministic for a fixed seed and validates inputs") {
    TinyPipeline world;
    Tensor image = world.sample_image(8);

    EditRequest req;
    req.image = image;
    req.text = "a calm warm meadow";
    req.noise_level = 5;
    req.seed = 99;
    EditResult a = edit(req, world.pipe);
    EditResult b = edit(req, world.pipe);
    CHECK(bit_equal(a.image, b.image));

    req.seed = 100;
    EditResult c = edit(req, world.pipe);
    real diff = 0;
    for (size_t i = 0; i < a.image.size(); ++i) diff += std::abs(a.image[i] - c.image[i]);
    CHECK(diff > 0);

    EditRequest bad = req;
    bad.noise_level = 11;
    CHECK_THROWS_AS(edit(bad, world.pipe), InvalidStep);
    EditRequest no_image = req;
    no_image.image.reset();
    CHECK_THROWS_AS(edit(no_image, world.pipe), InvalidInput);
    EditRequest empty_text = req;
    empty_text.text = "";
    CHECK_THROWS_AS(edit(empty_text, world.pipe), InvalidInput);
    EditRequest with_mask = req;
    with_mask.mask = Tensor::full({4, 4}, 1.0);
    CHECK_THROWS_AS(edit(with_mask, world.pipe), InvalidInput);
}

TEST_CASE("edit trace records one entry per level") {
    TinyPipeline world;
    EditRequest req;
    req.image = world.sample_image(3);
    req.text = "warm gentle glow";
    req.noise_level = 6;
    req.record_latents = true;
    EditResult result = edit(req, world.pipe);
    REQUIRE(result.trace.size() == 7);  // levels 6..0
    CHECK(result.trace.front().step == 6);
    CHECK(result.trace.back().step == 0);
    CHECK(result.latents.size() == 7);
    for (const auto& step : result.trace) CHECK(step.latent_norm > 0);
}

TEST_CASE("edit_masked: all-ones equals edit bit for bit; all-zeros is a round-trip") {
    TinyPipeline world;
    Tensor image = world.sample_image(21);

    EditRequest req;
    req.image = image;
    req.text = "a calm warm meadow";
    req.noise_level = 7;
    req.seed = 1234;

    EditResult plain = edit(req, world.pipe);

    EditRequest ones = req;
    ones.mask = Tensor::full({4, 4}, 1.0);
    EditResult masked_ones = edit_masked(ones, world.pipe);
    CHECK(bit_equal(plain.image, masked_ones.image));

    EditRequest zeros = req;
    zeros.mask = Tensor({4, 4});
    EditResult masked_zeros = edit_masked(zeros, world.pipe);
    Tensor roundtrip = world.ae.decode(world.ae.encode(image));
    CHECK(bit_equal(masked_zeros.image, roundtrip));
}

TEST_CASE("edit_masked: preserved region pins to the original trajectory") {
    TinyPipeline world;
    Tensor image = world.sample_image(31);

    // half-plane mask: left half editable
    Tensor mask({4, 4});
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 2; ++x) mask.at(y, x) = 1.0;

    EditRequest req;
    req.image = image;
    req.text = "a calm warm meadow";
    req.noise_level = 7;
    req.seed = 77;
    req.mask = mask;
    req.record_latents = true;
    EditResult result = edit_masked(req, world.pipe);

    for (const auto& step : result.trace) CHECK(step.preserved_mismatch == 0.0);

    // independent check: recompute z_in at each level from the recorded
    // initial noise draw and compare the unmasked entries
    Tensor z = world.ae.encode(image);
    RngStream rng(77);
    Tensor eps = rng.normal_tensor(z.shape());
    REQUIRE(result.latents.size() == result.trace.size());
    for (size_t k = 0; k < result.latents.size(); ++k) {
        int level = result.trace[k].step;
        Tensor z_in = diffusion::forward_noise(z, level, eps, world.pipe.schedule);
        size_t plane = 16;
        for (int c = 0; c < z.dim(0); ++c) {
            for (size_t p = 0; p < plane; ++p) {
                if (mask[p] != 0.0) continue;
                CHECK(result.latents[k][static_cast<size_t>(c) * plane + p] ==
                      z_in[static_cast<size_t>(c) * plane + p]);
            }
        }
    }

    // edited region moved measurably more than the preserved region
    Tensor roundtrip = world.ae.decode(world.ae.encode(image));
    real mae_edit = 0, mae_keep = 0;
    int n_edit = 0, n_keep = 0;
    size_t plane_px = 16 * 16;
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 16; ++y) {
            for (int x = 0; x < 16; ++x) {
                size_t idx = static_cast<size_t>(c) * plane_px + static_cast<size_t>(y) * 16 + x;
                real d = std::abs(result.image[idx] - roundtrip[idx]);
                if (x < 8) {
                    mae_edit += d;
                    ++n_edit;
                } else {
                    mae_keep += d;
                    ++n_keep;
                }
            }
        }
    }
    mae_edit /= n_edit;
    mae_keep /= n_keep;
    CHECK(mae_keep == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(mae_edit > 0);

    // non-binary masks are rejected
    EditRequest bad = req;
    bad.mask = Tensor::full({4, 4}, 0.5);
    CHECK_THROWS_AS(edit_masked(bad, world.pipe), InvalidInput);
    EditRequest no_mask = req;
    no_mask.mask.reset();
    CHECK_THROWS_AS(edit_masked(no_mask, world.pipe), InvalidInput);
}

TEST_CASE("generate: determinism and seed sensitivity") {
    TinyPipeline world;
    EditResult a = generate("a warm golden field", 5, world.pipe);
    EditResult b = generate("a warm golden field", 5, world.pipe);
    CHECK(bit_equal(a.image, b.image));
    EditResult c = generate("a warm golden field", 6, world.pipe);
    real diff = 0;
    for (size_t i = 0; i < a.image.size(); ++i) diff += std::abs(a.image[i] - c.image[i]);
    CHECK(diff > 0);
    CHECK_THROWS_AS(generate("", 5, world.pipe), InvalidInput);
    CHECK(a.image.shape() == std::vector<int>{3, 16, 16});
}

TEST_CASE("latent displacement grows with the noise level") {
    TinyPipeline world;
    Tensor image = world.sample_image(55);
    Tensor z = world.ae.encode(image);

    // E||z_t - z|| over seeds, against the closed-form sqrt scaling
    std::vector<int> levels{2, 4, 6, 8, 10};
    std::vector<real> displacement;
    for (int t : levels) {
        real acc = 0;
        const int seeds = 24;
        for (int s = 0; s < seeds; ++s) {
            RngStream rng(1000 + static_cast<uint64_t>(s));
            Tensor eps = rng.normal_tensor(z.shape());
            Tensor zt = diffusion::forward_noise(z, t, eps, world.pipe.schedule);
            real norm = 0;
            for (size_t i = 0; i < z.size(); ++i) {
                norm += (zt[i] - z[i]) * (zt[i] - z[i]);
            }
            acc += std::sqrt(norm);
        }
        displacement.push_back(acc / seeds);
    }
    for (size_t i = 1; i < displacement.size(); ++i) {
        CHECK(displacement[i] >= displacement[i - 1]);
    }
}
