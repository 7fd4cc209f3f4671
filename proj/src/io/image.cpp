#include "io/image.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>

#include "core/errors.hpp"

namespace affedit::io {

namespace {

struct FileCloser {
    FILE* f;
    ~FileCloser() {
        if (f) std::fclose(f);
    }
};

void png_error_thrower(png_structp, png_const_charp msg) {
    throw IoError(std::string("png: ") + msg);
}

void png_warning_sink(png_structp, png_const_charp) {}

struct MemWriter {
    std::vector<uint8_t>* out;
};

void mem_write_cb(png_structp png, png_bytep data, png_size_t len) {
    auto* w = static_cast<MemWriter*>(png_get_io_ptr(png));
    w->out->insert(w->out->end(), data, data + len);
}

void mem_flush_cb(png_structp) {}

struct MemReader {
    const uint8_t* data;
    size_t size;
    size_t offset;
};

void mem_read_cb(png_structp png, png_bytep out, png_size_t len) {
    auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
    if (r->offset + len > r->size) {
        png_error(png, "read past end of buffer");
        return;
    }
    std::memcpy(out, r->data + r->offset, len);
    r->offset += len;
}

Image read_png_rows(png_structp png, png_infop info, const std::string& what) {
    png_read_info(png, info);

    png_uint_32 width = 0, height = 0;
    int bit_depth = 0, color_type = 0;
    png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr,
                 nullptr);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        throw IoError("unsupported channel count in " + what);
    }
    Image image;
    image.width = static_cast<int>(width);
    image.height = static_cast<int>(height);
    image.channels = channels;
    size_t stride = static_cast<size_t>(image.width) * channels;
    image.pixels.resize(stride * static_cast<size_t>(image.height));
    std::vector<png_bytep> rows(static_cast<size_t>(image.height));
    for (int y = 0; y < image.height; ++y) {
        rows[static_cast<size_t>(y)] = image.pixels.data() + static_cast<size_t>(y) * stride;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    return image;
}

void write_png_rows(png_structp png, png_infop info, const Image& image) {
    int color = image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height), 8, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<size_t>(image.height));
    size_t stride = static_cast<size_t>(image.width) * image.channels;
    for (int y = 0; y < image.height; ++y) {
        rows[static_cast<size_t>(y)] =
            const_cast<png_bytep>(image.pixels.data() + static_cast<size_t>(y) * stride);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
}

}  // namespace

Image read_png(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw IoError("cannot open image: " + path);
    FileCloser closer{f};

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                             png_error_thrower, png_warning_sink);
    if (!png) throw IoError("png reader allocation failed");
    png_infop info = png_create_info_struct(png);
    Image image;
    try {
        png_init_io(png, f);
        image = read_png_rows(png, info, path);
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

Image decode_png_bytes(const std::vector<uint8_t>& bytes) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                             png_error_thrower, png_warning_sink);
    if (!png) throw IoError("png reader allocation failed");
    png_infop info = png_create_info_struct(png);
    MemReader reader{bytes.data(), bytes.size(), 0};
    Image image;
    try {
        png_set_read_fn(png, &reader, mem_read_cb);
        image = read_png_rows(png, info, "<memory>");
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

void write_png(const std::string& path, const Image& image) {
    if (image.empty() || (image.channels != 1 && image.channels != 3)) {
        throw InvalidInput("write_png: image must be 1- or 3-channel, non-empty");
    }
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open for writing: " + path);
    FileCloser closer{f};

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              png_error_thrower, png_warning_sink);
    if (!png) throw IoError("png writer allocation failed");
    png_infop info = png_create_info_struct(png);
    try {
        png_init_io(png, f);
        write_png_rows(png, info, image);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
}

std::vector<uint8_t> encode_png_bytes(const Image& image) {
    if (image.empty() || (image.channels != 1 && image.channels != 3)) {
        throw InvalidInput("encode_png_bytes: image must be 1- or 3-channel, non-empty");
    }
    std::vector<uint8_t> bytes;
    MemWriter writer{&bytes};
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              png_error_thrower, png_warning_sink);
    if (!png) throw IoError("png writer allocation failed");
    png_infop info = png_create_info_struct(png);
    try {
        png_set_write_fn(png, &writer, mem_write_cb, mem_flush_cb);
        write_png_rows(png, info, image);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return bytes;
}

Tensor image_to_tensor(const Image& image) {
    if (image.empty()) throw InvalidInput("image_to_tensor: empty image");
    Tensor t({image.channels, image.height, image.width});
    size_t plane = static_cast<size_t>(image.height) * image.width;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            size_t px = (static_cast<size_t>(y) * image.width + x) * image.channels;
            for (int c = 0; c < image.channels; ++c) {
                t[static_cast<size_t>(c) * plane + static_cast<size_t>(y) * image.width + x] =
                    image.pixels[px + static_cast<size_t>(c)] / 255.0;
            }
        }
    }
    return t;
}

Image tensor_to_image(const Tensor& tensor) {
    if (tensor.rank() != 3) throw InvalidInput("tensor_to_image expects rank-3");
    Image image;
    image.channels = tensor.dim(0);
    image.height = tensor.dim(1);
    image.width = tensor.dim(2);
    if (image.channels != 1 && image.channels != 3) {
        throw InvalidInput("tensor_to_image: channels must be 1 or 3");
    }
    image.pixels.resize(tensor.size());
    size_t plane = static_cast<size_t>(image.height) * image.width;
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            size_t px = (static_cast<size_t>(y) * image.width + x) * image.channels;
            for (int c = 0; c < image.channels; ++c) {
                real v = tensor[static_cast<size_t>(c) * plane +
                                static_cast<size_t>(y) * image.width + x];
                v = std::min<real>(1.0, std::max<real>(0.0, v));
                image.pixels[px + static_cast<size_t>(c)] =
                    static_cast<uint8_t>(std::lround(v * 255.0));
            }
        }
    }
    return image;
}

Tensor mask_to_latent_grid(const Image& mask, int grid) {
    if (mask.channels != 1) throw InvalidInput("mask must be single-channel");
    for (uint8_t v : mask.pixels) {
        if (v != 0 && v != 255) throw InvalidInput("mask must contain only 0 and 255");
    }
    Tensor m({grid, grid});
    for (int y = 0; y < grid; ++y) {
        for (int x = 0; x < grid; ++x) {
            // nearest-neighbor: top-left pixel of each cell
            int sy = y * mask.height / grid;
            int sx = x * mask.width / grid;
            uint8_t v = mask.pixels[static_cast<size_t>(sy) * mask.width + sx];
            m.at(y, x) = v == 255 ? 1.0 : 0.0;
        }
    }
    return m;
}

}  // namespace affedit::io
