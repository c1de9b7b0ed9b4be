#include "banis/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "banis/png_io.hpp"
#include "banis/rng.hpp"

namespace fs = std::filesystem;

namespace banis {

GrayImage to_grayscale(const Image8& raw) {
    GrayImage g({raw.height, raw.width});
    if (raw.channels == 1) {
        for (std::size_t i = 0; i < g.numel(); ++i) g[i] = static_cast<float>(raw.pixels[i]);
        return g;
    }
    for (int y = 0; y < raw.height; ++y)
        for (int x = 0; x < raw.width; ++x) {
            const float r = raw.at(y, x, 0), gg = raw.at(y, x, 1), b = raw.at(y, x, 2);
            g[static_cast<std::size_t>(y) * raw.width + x] =
                0.299f * r + 0.587f * gg + 0.114f * b;
        }
    return g;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (sigma <= 0.0) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = w;
        sum += w;
    }
    for (auto& w : kernel) w /= sum;

    const int h = img.dim(0), w = img.dim(1);
    GrayImage tmp({h, w}), out({h, w});
    // horizontal pass, replicated border
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int xx = std::clamp(x + i, 0, w - 1);
                acc += kernel[static_cast<std::size_t>(i + radius)] *
                       img[static_cast<std::size_t>(y) * w + xx];
            }
            tmp[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
        }
    // vertical pass
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int yy = std::clamp(y + i, 0, h - 1);
                acc += kernel[static_cast<std::size_t>(i + radius)] *
                       tmp[static_cast<std::size_t>(yy) * w + x];
            }
            out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
        }
    return out;
}

GrayImage resize_bilinear(const GrayImage& img, int out_h, int out_w) {
    const int h = img.dim(0), w = img.dim(1);
    if (out_h == h && out_w == w) return img;
    GrayImage out({out_h, out_w});
    const double sy = static_cast<double>(h) / out_h;
    const double sx = static_cast<double>(w) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - x0;
            const double v00 = img[static_cast<std::size_t>(y0) * w + x0];
            const double v01 = img[static_cast<std::size_t>(y0) * w + x1];
            const double v10 = img[static_cast<std::size_t>(y1) * w + x0];
            const double v11 = img[static_cast<std::size_t>(y1) * w + x1];
            out[static_cast<std::size_t>(y) * out_w + x] = static_cast<float>(
                (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11));
        }
    }
    return out;
}

GrayImage crop(const GrayImage& img, int center_x, int center_y, int size) {
    const int h = img.dim(0), w = img.dim(1);
    const int x0 = center_x - size / 2;
    const int y0 = center_y - size / 2;
    if (x0 < 0 || y0 < 0 || x0 + size > w || y0 + size > h)
        throw ValidationError("crop window out of bounds: center (" + std::to_string(center_x) +
                              "," + std::to_string(center_y) + ") size " + std::to_string(size) +
                              " inside " + std::to_string(w) + "x" + std::to_string(h));
    GrayImage out({size, size});
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            out[static_cast<std::size_t>(y) * size + x] =
                img[static_cast<std::size_t>(y0 + y) * w + (x0 + x)];
    return out;
}

GrayImage normalize_gray255(const GrayImage& img) {
    GrayImage out(img.shape);
    for (std::size_t i = 0; i < img.numel(); ++i) out[i] = img[i] / 127.5f - 1.0f;
    return out;
}

PreprocessStages preprocess_image_debug(const Image8& raw, const PreprocessConfig& cfg,
                                        int crop_center_x, int crop_center_y) {
    cfg.validate();
    if (raw.height < 1 || raw.width < 1) throw ValidationError("preprocess: empty input image");
    PreprocessStages st;
    st.gray = to_grayscale(raw);
    st.blurred = gaussian_blur(st.gray, cfg.gaussian_sigma);
    st.resized = resize_bilinear(st.blurred, cfg.intermediate_size, cfg.intermediate_size);
    st.cropped = crop(st.resized, crop_center_x, crop_center_y, cfg.crop_size);
    st.normalized = normalize_gray255(st.cropped);
    return st;
}

GrayImage preprocess_image(const Image8& raw, const PreprocessConfig& cfg, int crop_center_x,
                           int crop_center_y) {
    return preprocess_image_debug(raw, cfg, crop_center_x, crop_center_y).normalized;
}

namespace {

BinaryMask load_mask_if_present(const fs::path& p) {
    if (!fs::exists(p)) return {};
    const Image8 img = read_png(p.string());
    BinaryMask m(img.height, img.width);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) m.v[i] = img.pixels[i] >= 128 ? 1 : 0;
    return m;
}

} // namespace

std::pair<std::vector<ImagePair>, std::vector<ImagePair>>
build_splits(const DatasetManifest& manifest, const PreprocessConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (manifest.entries.empty()) throw ValidationError("build_splits: empty manifest");

    const int center = cfg.intermediate_size / 2;
    std::vector<ImagePair> pairs;
    pairs.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        const fs::path root(manifest.root_dir);
        const fs::path mpath = root / e.membrane_path;
        const fs::path npath = root / e.nuclei_path;
        if (!fs::exists(mpath) || !fs::exists(npath))
            throw IoError("pair " + e.pair_id + ": missing image file");
        const Image8 mraw = read_png(mpath.string());
        const Image8 nraw = read_png(npath.string());
        if (mraw.height != nraw.height || mraw.width != nraw.width)
            throw ValidationError("pair " + e.pair_id + ": mismatched image sizes (" +
                                  std::to_string(mraw.width) + "x" + std::to_string(mraw.height) +
                                  " vs " + std::to_string(nraw.width) + "x" +
                                  std::to_string(nraw.height) + ")");
        ImagePair p;
        p.id = e.pair_id;
        p.split = e.split;
        p.seed = e.seed;
        p.membrane = preprocess_image(mraw, cfg, center, center);
        p.nuclei = preprocess_image(nraw, cfg, center, center);
        p.membrane_mask = load_mask_if_present(root / e.membrane_mask_path);
        p.nuclei_mask = load_mask_if_present(root / e.nuclei_mask_path);
        pairs.push_back(std::move(p));
    }

    // deterministic re-split: the split is a pure function of (order, seed)
    const std::size_t n = pairs.size();
    const std::size_t n_test =
        static_cast<std::size_t>(static_cast<double>(n) * cfg.test_fraction);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(mix_seed(seed, 0x5917));
    for (std::size_t i = n - 1; i > 0; --i)
        std::swap(order[i], order[rng.uniform_index(i + 1)]);

    std::vector<bool> is_test(n, false);
    for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;

    std::vector<ImagePair> train, test;
    for (std::size_t i = 0; i < n; ++i) {
        pairs[i].split = is_test[i] ? "test" : "train";
        (is_test[i] ? test : train).push_back(std::move(pairs[i]));
    }
    return {std::move(train), std::move(test)};
}

} // namespace banis
