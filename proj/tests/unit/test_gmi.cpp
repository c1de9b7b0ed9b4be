#include <doctest.h>

#include <filesystem>

#include "banis/datagen.hpp"
#include "banis/gmi.hpp"
#include "banis/rng.hpp"

using namespace banis;

namespace {

// Brute-force DSC, fully independent of the gmi module: direct pixel loop.
double dsc_bruteforce(const BinaryMask& x, const BinaryMask& y) {
    std::size_t cx = 0, cy = 0, both = 0;
    for (int r = 0; r < x.height; ++r)
        for (int c = 0; c < x.width; ++c) {
            if (x.at(r, c)) ++cx;
            if (y.at(r, c)) ++cy;
            if (x.at(r, c) && y.at(r, c)) ++both;
        }
    if (cx + cy == 0) return 0.0;
    return 2.0 * static_cast<double>(both) / static_cast<double>(cx + cy);
}

BinaryMask random_mask(Rng& rng, int h, int w, double density) {
    BinaryMask m(h, w);
    for (auto& b : m.v) b = rng.uniform01() < density ? 1 : 0;
    return m;
}

// |x| = |y| = 20 with |intersection| = k on an 8x8 grid: DSC = k/20.
std::pair<BinaryMask, BinaryMask> mask_pair_with_dsc_k20(int k) {
    BinaryMask x(8, 8), y(8, 8);
    for (int i = 0; i < 20; ++i) x.v[static_cast<std::size_t>(i)] = 1;
    for (int i = 20 - k; i < 40 - k; ++i) y.v[static_cast<std::size_t>(i)] = 1;
    return {x, y};
}

} // namespace

TEST_SUITE("gmi") {

TEST_CASE("binarize endpoints and halves") {
    BinarizeSpec fixed;
    GrayImage all_on({4, 4}, 1.f);
    CHECK(binarize(all_on, fixed).count() == 16);
    GrayImage all_off({4, 4}, -1.f);
    CHECK(binarize(all_off, fixed).count() == 0);
    GrayImage half({4, 4}, -1.f);
    for (int y = 0; y < 4; ++y)
        for (int x = 2; x < 4; ++x) half[static_cast<std::size_t>(y) * 4 + x] = 1.f;
    auto m = binarize(half, fixed);
    CHECK(m.count() == 8);
    for (int y = 0; y < 4; ++y) {
        CHECK(m.at(y, 0) == 0);
        CHECK(m.at(y, 3) == 1);
    }
}

TEST_CASE("otsu separates a bimodal image and falls back on constants") {
    Rng rng(81);
    GrayImage img({16, 16});
    for (std::size_t i = 0; i < img.numel(); ++i)
        img[i] = (i % 3 == 0) ? static_cast<float>(rng.uniform(0.5, 0.7))
                              : static_cast<float>(rng.uniform(-0.9, -0.7));
    BinarizeSpec otsu;
    otsu.method = BinarizeMethod::Otsu;
    auto m = binarize(img, otsu);
    std::size_t expect = 0;
    for (std::size_t i = 0; i < img.numel(); ++i) expect += (i % 3 == 0) ? 1 : 0;
    CHECK(m.count() == expect);

    GrayImage flat({8, 8}, 0.25f); // intensity 0.625, above the 0.5 fallback
    auto fm = binarize(flat, otsu); // warning + fixed 0.5 fallback
    CHECK(fm.count() == 64);
    GrayImage dark({8, 8}, -0.5f); // intensity 0.25
    CHECK(binarize(dark, otsu).count() == 0);
}

TEST_CASE("dsc basics") {
    BinaryMask x(4, 4), y(4, 4);
    for (int i = 0; i < 4; ++i) x.v[static_cast<std::size_t>(i)] = 1;
    CHECK(dsc(x, x) == 1.0);
    for (int i = 4; i < 8; ++i) y.v[static_cast<std::size_t>(i)] = 1;
    CHECK(dsc(x, y) == 0.0);
    // |x|=4, |y|=4, |x∩y|=2 -> 0.5 on a 4x4 grid
    BinaryMask z(4, 4);
    for (int i = 2; i < 6; ++i) z.v[static_cast<std::size_t>(i)] = 1;
    CHECK(dsc(x, z) == 0.5);
    CHECK(dsc(x, z) == dsc_bruteforce(x, z));
    BinaryMask empty1(4, 4), empty2(4, 4);
    CHECK(dsc(empty1, empty2) == 0.0);
    BinaryMask other(3, 4);
    CHECK_THROWS_AS(dsc(x, other), ValidationError);
}

TEST_CASE("dsc equals the brute-force oracle exactly on 100 random pairs") {
    Rng rng(82);
    for (int trial = 0; trial < 100; ++trial) {
        auto x = random_mask(rng, 16, 16, rng.uniform(0.05, 0.9));
        auto y = random_mask(rng, 16, 16, rng.uniform(0.05, 0.9));
        CHECK(dsc(x, y) == dsc_bruteforce(x, y)); // bit-exact
        CHECK(dsc(x, y) == dsc(y, x));
        CHECK(dsc(x, y) >= 0.0);
        CHECK(dsc(x, y) <= 1.0);
    }
}

TEST_CASE("constructed DSC ladder gives matched fraction 0.5 at TS 0.2") {
    std::vector<std::pair<BinaryMask, BinaryMask>> owned;
    std::vector<std::pair<const BinaryMask*, const BinaryMask*>> masks;
    std::vector<std::string> ids;
    int i = 0;
    for (int k : {1, 3, 5, 7}) { // DSC 0.05, 0.15, 0.25, 0.35
        owned.push_back(mask_pair_with_dsc_k20(k));
        ids.push_back("p" + std::to_string(i++));
    }
    for (auto& [x, y] : owned) masks.emplace_back(&x, &y);
    // verify the construction against the brute-force oracle first
    CHECK(dsc_bruteforce(*masks[0].first, *masks[0].second) == doctest::Approx(0.05));
    CHECK(dsc_bruteforce(*masks[3].first, *masks[3].second) == doctest::Approx(0.35));

    auto r = gmi_from_masks(ids, masks, {0.2});
    CHECK(r.matched_fraction[0] == 0.5);
}

TEST_CASE("strict inequality: DSC == TS counts as unmatched") {
    auto [x, y] = mask_pair_with_dsc_k20(4); // DSC exactly 0.2
    CHECK(dsc(x, y) == 0.2);
    auto r = gmi_from_masks({"p0"}, {{&x, &y}}, {0.2});
    CHECK(r.matched_fraction[0] == 0.0);
}

TEST_CASE("matched fraction is non-decreasing in TS") {
    Rng rng(83);
    std::vector<std::pair<BinaryMask, BinaryMask>> owned;
    std::vector<std::pair<const BinaryMask*, const BinaryMask*>> masks;
    std::vector<std::string> ids;
    for (int i = 0; i < 40; ++i) {
        owned.emplace_back(random_mask(rng, 8, 8, 0.4), random_mask(rng, 8, 8, 0.4));
        ids.push_back("p" + std::to_string(i));
    }
    for (auto& [x, y] : owned) masks.emplace_back(&x, &y);
    auto r = gmi_from_masks(ids, masks, {0.1, 0.2, 0.3, 0.5, 0.9, 1.0});
    for (std::size_t i = 1; i < r.matched_fraction.size(); ++i)
        CHECK(r.matched_fraction[i] >= r.matched_fraction[i - 1]);
}

TEST_CASE("gmi rejects empty test sets and bad thresholds") {
    CHECK_THROWS_AS(gmi_from_dsc({}, {}, {0.1}), ValidationError);
    auto [x, y] = mask_pair_with_dsc_k20(1);
    CHECK_THROWS_AS(gmi_from_masks({"p"}, {{&x, &y}}, {0.0}), ValidationError);
    CHECK_THROWS_AS(gmi_from_masks({"p"}, {{&x, &y}}, {1.5}), ValidationError);
}

TEST_CASE("compute_gmi: identity toy model on ground-truth pairs matches at TS 0.1") {
    // identity successors reproduce the (disjoint) ground truth, so every
    // DSC is ~0 and the matched fraction is 1 at the strictest threshold
    NetworkConfig cfg;
    cfg.image_size = 64;
    cfg.latent_dim = 64 * 64;
    auto flatten = [] {
        nn::Network<float> n;
        n.layers.push_back(std::make_shared<nn::Reshape<float>>(std::vector<int>{64 * 64}));
        return n;
    };
    auto unflatten = [] {
        nn::Network<float> n;
        n.layers.push_back(std::make_shared<nn::Reshape<float>>(std::vector<int>{64, 64, 1}));
        return n;
    };
    auto m = ModelBundle::from_networks(cfg, 1, flatten(), flatten(), unflatten(), unflatten(),
                                        flatten(), flatten());
    EmbryoSpec spec;
    spec.noise_sigma = 0.0;
    std::vector<ImagePair> pairs;
    for (int i = 0; i < 6; ++i) {
        spec.seed = static_cast<std::uint64_t>(100 + i);
        auto gt = generate_pair(spec);
        ImagePair p;
        p.id = "p" + std::to_string(i);
        p.membrane = gt.membrane_image;
        p.nuclei = gt.nuclei_image;
        pairs.push_back(std::move(p));
    }
    BinarizeSpec bin;
    auto r = compute_gmi(pairs, m, {0.1}, bin);
    CHECK(r.matched_fraction[0] == 1.0);
    CHECK(r.n_pairs == 6);
}

TEST_CASE("compute_gmi: identical successor outputs give total overlap") {
    // both successors emit the same image -> DSC 1 -> matched 0 below TS 1
    NetworkConfig cfg;
    cfg.image_size = 64;
    cfg.latent_dim = 64 * 64;
    Rng rng(84);
    auto flatten = [] {
        nn::Network<float> n;
        n.layers.push_back(std::make_shared<nn::Reshape<float>>(std::vector<int>{64 * 64}));
        return n;
    };
    auto constant_bright = [&] {
        nn::Network<float> n;
        auto dense = std::make_shared<nn::Dense<float>>(64 * 64, 64 * 64, rng, 0.0);
        dense->params()[1]->value.fill(1.f); // bias 1, zero weights
        n.layers.push_back(dense);
        n.layers.push_back(std::make_shared<nn::Reshape<float>>(std::vector<int>{64, 64, 1}));
        return n;
    };
    auto m = ModelBundle::from_networks(cfg, 1, flatten(), flatten(), constant_bright(),
                                        constant_bright(), flatten(), flatten());
    EmbryoSpec spec;
    spec.seed = 9;
    auto gt = generate_pair(spec);
    ImagePair p;
    p.id = "p0";
    p.membrane = gt.membrane_image;
    p.nuclei = gt.nuclei_image;
    auto r = compute_gmi({p}, m, {0.1, 0.2, 0.3}, BinarizeSpec{});
    for (double f : r.matched_fraction) CHECK(f == 0.0);
    CHECK(r.dsc_values[0] == 1.0);
}

TEST_CASE("gmi report round-trips through CSV") {
    auto [x, y] = mask_pair_with_dsc_k20(3);
    auto [u, v] = mask_pair_with_dsc_k20(7);
    auto r = gmi_from_masks({"b", "a"}, {{&x, &y}, {&u, &v}}, {0.1, 0.2, 0.3});
    CHECK(r.pair_ids == std::vector<std::string>{"a", "b"}); // sorted

    auto dir = std::filesystem::temp_directory_path() / "banis_tests";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "report.csv").string();
    write_gmi_report(path, r);
    auto rr = read_gmi_report(path);
    CHECK(rr.pair_ids == r.pair_ids);
    CHECK(rr.dsc_values == r.dsc_values);
    CHECK(rr.thresholds == r.thresholds);
    CHECK(rr.matched_fraction == r.matched_fraction);
}

} // TEST_SUITE
