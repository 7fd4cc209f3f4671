#include "diffusion/autoencoder.hpp"

#include <cmath>

#include "core/autodiff.hpp"
#include "core/errors.hpp"
#include "nn/layers.hpp"

namespace affedit::diffusion {

PatchAutoencoder::PatchAutoencoder(AutoencoderConfig cfg, uint64_t seed) : cfg_(cfg) {
    if (cfg_.image_size % cfg_.patch != 0) {
        throw InvalidConfig("autoencoder: image size not divisible by patch");
    }
    RngStream rng(seed);
    nn::add_linear(params_, "enc.fc1", cfg_.patch_dim(), cfg_.hidden, rng);
    nn::add_linear(params_, "enc.fc2", cfg_.hidden, cfg_.latent_channels, rng);
    nn::add_linear(params_, "dec.fc1", cfg_.latent_channels, cfg_.hidden, rng);
    nn::add_linear(params_, "dec.fc2", cfg_.hidden, cfg_.patch_dim(), rng);
}

Tensor PatchAutoencoder::image_to_patches(const Tensor& image) const {
    int s = cfg_.image_size, p = cfg_.patch, g = cfg_.grid(), c = cfg_.image_channels;
    if (image.rank() != 3 || image.dim(0) != c || image.dim(1) != s || image.dim(2) != s) {
        throw InvalidInput("autoencoder: unexpected image shape " + image.shape_str());
    }
    Tensor patches({cfg_.patch_dim(), g * g});
    for (int py = 0; py < g; ++py) {
        for (int px = 0; px < g; ++px) {
            int col = py * g + px;
            int row = 0;
            for (int ch = 0; ch < c; ++ch) {
                for (int dy = 0; dy < p; ++dy) {
                    for (int dx = 0; dx < p; ++dx) {
                        size_t idx = static_cast<size_t>(ch) * s * s +
                                     static_cast<size_t>(py * p + dy) * s + (px * p + dx);
                        patches.at(row++, col) = image[idx];
                    }
                }
            }
        }
    }
    return patches;
}

Tensor PatchAutoencoder::patches_to_image(const Tensor& patches) const {
    int s = cfg_.image_size, p = cfg_.patch, g = cfg_.grid(), c = cfg_.image_channels;
    if (patches.rank() != 2 || patches.dim(0) != cfg_.patch_dim() || patches.dim(1) != g * g) {
        throw InvalidInput("autoencoder: unexpected patch matrix shape");
    }
    Tensor image({c, s, s});
    for (int py = 0; py < g; ++py) {
        for (int px = 0; px < g; ++px) {
            int col = py * g + px;
            int row = 0;
            for (int ch = 0; ch < c; ++ch) {
                for (int dy = 0; dy < p; ++dy) {
                    for (int dx = 0; dx < p; ++dx) {
                        size_t idx = static_cast<size_t>(ch) * s * s +
                                     static_cast<size_t>(py * p + dy) * s + (px * p + dx);
                        image[idx] = patches.at(row++, col);
                    }
                }
            }
        }
    }
    return image;
}

namespace {

ad::Var encode_graph(ad::Tape& t, nn::Bind& bind, ad::Var patches) {
    return nn::linear(t, bind, "enc.fc2", t.gelu(nn::linear(t, bind, "enc.fc1", patches)));
}

ad::Var decode_graph(ad::Tape& t, nn::Bind& bind, ad::Var latent_cols) {
    return nn::linear(t, bind, "dec.fc2", t.gelu(nn::linear(t, bind, "dec.fc1", latent_cols)));
}

}  // namespace

Tensor PatchAutoencoder::encode(const Tensor& image) const {
    if (!image.all_finite()) throw InvalidInput("autoencoder: non-finite image");
    ad::Tape tape;
    nn::Bind bind(tape, params_, false);
    ad::Var patches = tape.leaf(image_to_patches(image), false);
    ad::Var latent = encode_graph(tape, bind, patches);
    int g = cfg_.grid();
    return tape.value(latent).reshaped({cfg_.latent_channels, g, g});
}

Tensor PatchAutoencoder::decode(const Tensor& latent) const {
    int g = cfg_.grid();
    if (latent.rank() != 3 || latent.dim(0) != cfg_.latent_channels || latent.dim(1) != g ||
        latent.dim(2) != g) {
        throw InvalidInput("autoencoder: unexpected latent shape " + latent.shape_str());
    }
    ad::Tape tape;
    nn::Bind bind(tape, params_, false);
    ad::Var cols = tape.leaf(latent.reshaped({cfg_.latent_channels, g * g}), false);
    ad::Var patches = decode_graph(tape, bind, cols);
    return patches_to_image(tape.value(patches));
}

real PatchAutoencoder::train_step(const std::vector<const Tensor*>& images, int batch_patches,
                                  nn::Adam& optimizer, RngStream& rng) {
    if (images.empty()) throw EmptyBatch("autoencoder train step with no images");
    int g = cfg_.grid();
    int per_image = g * g;

    Tensor batch({cfg_.patch_dim(), batch_patches});
    for (int b = 0; b < batch_patches; ++b) {
        const Tensor& img = *images[rng.uniform_int(images.size())];
        Tensor patches = image_to_patches(img);
        size_t col = rng.uniform_int(static_cast<uint64_t>(per_image));
        for (int r = 0; r < cfg_.patch_dim(); ++r) {
            batch.at(r, b) = patches.at(r, static_cast<int>(col));
        }
    }

    ad::Tape tape;
    nn::Bind bind(tape, params_, true);
    ad::Var x = tape.leaf(batch, false);
    ad::Var rec = decode_graph(tape, bind, encode_graph(tape, bind, x));
    ad::Var loss = tape.mean_all(tape.square(tape.sub(rec, x)));
    real value = tape.value(loss)[0];
    tape.backward(loss);
    optimizer.step(params_, tape);
    if (!std::isfinite(value)) throw TrainingDiverged("autoencoder loss is not finite");
    return value;
}

real psnr(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw InvalidInput("psnr shape mismatch");
    real mse = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        real d = a[i] - b[i];
        mse += d * d;
    }
    mse /= static_cast<real>(a.size());
    if (mse <= 0) return 99.0;
    return 10.0 * std::log10(1.0 / mse);
}

real PatchAutoencoder::roundtrip_psnr(const std::vector<const Tensor*>& images) const {
    if (images.empty()) throw EmptyBatch("roundtrip_psnr with no images");
    real total = 0;
    for (const Tensor* img : images) total += psnr(*img, decode(encode(*img)));
    return total / static_cast<real>(images.size());
}

}  // namespace affedit::diffusion
