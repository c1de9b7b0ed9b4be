#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "banis/errors.hpp"
#include "banis/tensor.hpp"

namespace banis {

// 8-bit image, HxWxC row-major with C in {1, 3}. This is the raw-input
// representation: the [-1,1] float domain is only ever produced from 8-bit
// data through normalize_u8 (so re-normalizing an already normalized image is
// a type error, not a silent rescale).
struct Image8 {
    int height = 0, width = 0, channels = 1;
    std::vector<std::uint8_t> pixels;

    Image8() = default;
    Image8(int h, int w, int c) : height(h), width(w), channels(c),
                                  pixels(static_cast<std::size_t>(h) * w * c, 0) {
        if (h <= 0 || w <= 0 || (c != 1 && c != 3))
            throw ValidationError("image: bad dimensions");
    }

    std::uint8_t& at(int y, int x, int c = 0) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int y, int x, int c = 0) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

// Grayscale float grid (H, W). Values are in [-1,1] for normalized images
// and [0,255] in the middle of the preprocessing chain.
using GrayImage = Tensor<float>;

inline GrayImage make_gray(int h, int w, float fill = 0.f) {
    GrayImage g({h, w});
    g.fill(fill);
    return g;
}

// v in [-1,1] -> byte round((v+1)*127.5)
inline std::uint8_t to_byte(float v) {
    float b = std::round((v + 1.0f) * 127.5f);
    if (b < 0.f) b = 0.f;
    if (b > 255.f) b = 255.f;
    return static_cast<std::uint8_t>(b);
}

// byte -> [-1,1]
inline float from_byte(std::uint8_t b) { return static_cast<float>(b) / 127.5f - 1.0f; }

inline Image8 gray_to_image8(const GrayImage& g) {
    Image8 img(g.dim(0), g.dim(1), 1);
    for (std::size_t i = 0; i < g.numel(); ++i) img.pixels[i] = to_byte(g[i]);
    return img;
}

inline GrayImage image8_to_gray(const Image8& img) {
    if (img.channels != 1) throw ValidationError("expected single-channel image");
    GrayImage g({img.height, img.width});
    for (std::size_t i = 0; i < g.numel(); ++i) g[i] = from_byte(img.pixels[i]);
    return g;
}

} // namespace banis
