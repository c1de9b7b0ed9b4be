#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "banis/datagen.hpp"
#include "banis/image.hpp"
#include "banis/mask.hpp"

namespace banis {

// Image-conditioning chain: grayscale -> Gaussian blur -> bilinear resize to
// intermediate_size -> crop_size crop -> normalize to [-1,1] (v/127.5 - 1).
struct PreprocessConfig {
    double gaussian_sigma = 1.0; // pixels; 0 disables the blur
    int intermediate_size = 128;
    int crop_size = 64;
    double test_fraction = 0.10;

    void validate() const {
        if (gaussian_sigma < 0.0) throw ValidationError("preprocess.gaussian_sigma must be >= 0");
        if (intermediate_size < 1 || crop_size < 1)
            throw ValidationError("preprocess sizes must be >= 1");
        if (crop_size > intermediate_size)
            throw ValidationError("preprocess.crop_size must be <= intermediate_size");
        if (test_fraction <= 0.0 || test_fraction >= 1.0)
            throw ValidationError("preprocess.test_fraction must be in (0,1)");
    }
};

// One co-registered slice: both modalities plus optional ground-truth masks.
struct ImagePair {
    std::string id;
    std::string split;
    GrayImage membrane; // crop_size x crop_size in [-1,1]
    GrayImage nuclei;
    BinaryMask membrane_mask; // empty when unavailable
    BinaryMask nuclei_mask;
    std::uint64_t seed = 0;
};

// Individual stages, exposed for the debug mode and the test oracles.
// Values flow as float [0,255] until the final normalization.
GrayImage to_grayscale(const Image8& raw); // Rec.601 luma for RGB
GrayImage gaussian_blur(const GrayImage& img, double sigma); // radius ceil(3*sigma), replicated border
GrayImage resize_bilinear(const GrayImage& img, int out_h, int out_w); // half-pixel centers
GrayImage crop(const GrayImage& img, int center_x, int center_y, int size);
GrayImage normalize_gray255(const GrayImage& img); // v/127.5 - 1

struct PreprocessStages {
    GrayImage gray, blurred, resized, cropped, normalized;
};

// crop center is in resized-image coordinates; the window must fit.
GrayImage preprocess_image(const Image8& raw, const PreprocessConfig& cfg, int crop_center_x,
                           int crop_center_y);
PreprocessStages preprocess_image_debug(const Image8& raw, const PreprocessConfig& cfg,
                                        int crop_center_x, int crop_center_y);

// Loads every manifest pair through the preprocessing chain (center crop) and
// re-splits deterministically from the seed: a shuffled prefix of
// floor(n * test_fraction) pairs becomes the test set. Pairs are never split
// across sets.
std::pair<std::vector<ImagePair>, std::vector<ImagePair>>
build_splits(const DatasetManifest& manifest, const PreprocessConfig& cfg, std::uint64_t seed);

} // namespace banis
