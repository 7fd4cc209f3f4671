#pragma once

#include <vector>

#include "core/checkpoint.hpp"
#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "nn/adam.hpp"

namespace affedit::diffusion {

using core::ParamMap;
using core::RngStream;
using core::Tensor;

struct AutoencoderConfig {
    int image_channels = 3;
    int image_size = 64;
    int patch = 4;
    int latent_channels = 4;
    int hidden = 32;

    int grid() const { return image_size / patch; }
    int patch_dim() const { return image_channels * patch * patch; }
};

// Patch-local autoencoder: each 4x4 RGB patch is compressed to one latent
// pixel, so a (3,64,64) image maps to a (4,16,16) latent and a binary image
// mask maps one-to-one onto the latent grid.
class PatchAutoencoder {
  public:
    PatchAutoencoder(AutoencoderConfig cfg, uint64_t seed);

    // (image_channels, S, S) -> (latent_channels, grid, grid); deterministic.
    Tensor encode(const Tensor& image) const;
    // Inverse of encode up to reconstruction error.
    Tensor decode(const Tensor& latent) const;

    // One minibatch of patch reconstruction; returns the MSE loss.
    real train_step(const std::vector<const Tensor*>& images, int batch_patches,
                    nn::Adam& optimizer, RngStream& rng);

    // Mean PSNR (dB) of decode(encode(image)) over a set, pixels in [0,1].
    real roundtrip_psnr(const std::vector<const Tensor*>& images) const;

    const AutoencoderConfig& config() const { return cfg_; }
    ParamMap& params() { return params_; }
    const ParamMap& params() const { return params_; }

    // Columns of the returned matrix are flattened patches, one per grid
    // cell; the inverse scatters columns back into an image.
    Tensor image_to_patches(const Tensor& image) const;
    Tensor patches_to_image(const Tensor& patches) const;

  private:
    AutoencoderConfig cfg_;
    ParamMap params_;
};

real psnr(const Tensor& a, const Tensor& b);

}  // namespace affedit::diffusion
