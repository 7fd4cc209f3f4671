#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace affedit::io {

using core::Tensor;

// 8-bit raster image, interleaved row-major pixels. channels is 1 (mask)
// or 3 (RGB).
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<uint8_t> pixels;

    size_t size() const { return pixels.size(); }
    bool empty() const { return pixels.empty(); }
};

Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& image);

// PNG bytes in memory; used for cache keys and supervisor queries.
std::vector<uint8_t> encode_png_bytes(const Image& image);
Image decode_png_bytes(const std::vector<uint8_t>& bytes);

// (channels, h, w) float tensor in [0,1] <-> 8-bit image. tensor_to_image
// clamps and rounds.
Tensor image_to_tensor(const Image& image);
Image tensor_to_image(const Tensor& tensor);

// Strictly binary mask (0 / 255) downsampled nearest-neighbor to the latent
// grid, re-binarized to 0/1. Throws InvalidInput on non-binary values.
Tensor mask_to_latent_grid(const Image& mask, int grid);

}  // namespace affedit::io
