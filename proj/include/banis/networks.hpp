#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "banis/nn.hpp"

namespace banis {

// Architecture knobs. The ladder is DCGAN-like: 5x5 stride-2 conv blocks
// halving the spatial size down to 4x4 while doubling channels from
// base_channels, mirrored by transposed convolutions in the generator.
// Defaults follow the 64x64 / latent-100 setup; the miniature configuration
// used by gradient checks is image_size=8, base_channels=2, latent_dim=4.
struct NetworkConfig {
    int image_size = 64;
    int base_channels = 64;
    int latent_dim = 100;
    double leaky_slope = 0.2;
    double dropout = 0.3; // encoder and discriminator only
    double init_sigma = 0.02;

    int num_blocks() const {
        int n = 0, s = image_size;
        while (s > 4) {
            s /= 2;
            ++n;
        }
        return n;
    }

    void validate() const {
        if (image_size < 8 || (image_size & (image_size - 1)) != 0)
            throw ValidationError("network.image_size must be a power of two >= 8");
        if (base_channels < 1) throw ValidationError("network.base_channels must be >= 1");
        if (latent_dim < 1) throw ValidationError("network.latent_dim must be >= 1");
        if (dropout < 0.0 || dropout >= 1.0)
            throw ValidationError("network.dropout must be in [0,1)");
    }
};

enum class Side { A, B };

inline const char* side_name(Side s) { return s == Side::A ? "A" : "B"; }

// One row of the layer listing (kind, kernel, stride, width, norm flag,
// activation, dropout rate).
struct NetworkSpec {
    std::string role; // encoder | generator | discriminator
    std::vector<int> input_shape;
    std::vector<int> output_shape;
    std::vector<nn::LayerInfo> layers;
};

namespace builders {

template <typename T>
nn::Network<T> encoder(const NetworkConfig& cfg, Rng& rng) {
    cfg.validate();
    nn::Network<T> net;
    const int n = cfg.num_blocks();
    int in_ch = 1;
    for (int i = 0; i < n; ++i) {
        const int out_ch = cfg.base_channels << i;
        net.layers.push_back(std::make_shared<nn::Conv2d<T>>(in_ch, out_ch, 5, 2, rng,
                                                             cfg.init_sigma));
        net.layers.push_back(std::make_shared<nn::BatchNorm<T>>(out_ch));
        net.layers.push_back(std::make_shared<nn::LeakyReLU<T>>(cfg.leaky_slope));
        if (cfg.dropout > 0.0)
            net.layers.push_back(std::make_shared<nn::Dropout<T>>(cfg.dropout));
        in_ch = out_ch;
    }
    const int flat = 4 * 4 * in_ch;
    net.layers.push_back(std::make_shared<nn::Reshape<T>>(std::vector<int>{flat}));
    net.layers.push_back(std::make_shared<nn::Dense<T>>(flat, cfg.latent_dim, rng,
                                                        cfg.init_sigma));
    return net;
}

template <typename T>
nn::Network<T> generator(const NetworkConfig& cfg, Rng& rng) {
    cfg.validate();
    nn::Network<T> net;
    const int n = cfg.num_blocks();
    const int top_ch = cfg.base_channels << (n - 1);
    const int flat = 4 * 4 * top_ch;
    net.layers.push_back(std::make_shared<nn::Dense<T>>(cfg.latent_dim, flat, rng,
                                                        cfg.init_sigma));
    net.layers.push_back(std::make_shared<nn::BatchNorm<T>>(flat));
    net.layers.push_back(std::make_shared<nn::LeakyReLU<T>>(cfg.leaky_slope));
    net.layers.push_back(std::make_shared<nn::Reshape<T>>(std::vector<int>{4, 4, top_ch}));
    int ch = top_ch;
    for (int i = n - 1; i >= 1; --i) {
        const int out_ch = cfg.base_channels << (i - 1);
        net.layers.push_back(std::make_shared<nn::ConvTranspose2d<T>>(ch, out_ch, 5, 2, rng,
                                                                      cfg.init_sigma));
        net.layers.push_back(std::make_shared<nn::BatchNorm<T>>(out_ch));
        net.layers.push_back(std::make_shared<nn::LeakyReLU<T>>(cfg.leaky_slope));
        ch = out_ch;
    }
    net.layers.push_back(std::make_shared<nn::ConvTranspose2d<T>>(ch, 1, 5, 2, rng,
                                                                  cfg.init_sigma));
    net.layers.push_back(std::make_shared<nn::Tanh<T>>());
    return net;
}

template <typename T>
nn::Network<T> discriminator(const NetworkConfig& cfg, Rng& rng) {
    cfg.validate();
    nn::Network<T> net;
    const int n = cfg.num_blocks();
    int in_ch = 1;
    for (int i = 0; i < n; ++i) {
        const int out_ch = cfg.base_channels << i;
        net.layers.push_back(std::make_shared<nn::Conv2d<T>>(in_ch, out_ch, 5, 2, rng,
                                                             cfg.init_sigma));
        if (i > 0) // first conv block runs without normalization
            net.layers.push_back(std::make_shared<nn::BatchNorm<T>>(out_ch));
        net.layers.push_back(std::make_shared<nn::LeakyReLU<T>>(cfg.leaky_slope));
        if (cfg.dropout > 0.0)
            net.layers.push_back(std::make_shared<nn::Dropout<T>>(cfg.dropout));
        in_ch = out_ch;
    }
    const int flat = 4 * 4 * in_ch;
    net.layers.push_back(std::make_shared<nn::Reshape<T>>(std::vector<int>{flat}));
    net.layers.push_back(std::make_shared<nn::Dense<T>>(flat, 1, rng, cfg.init_sigma));
    net.layers.push_back(std::make_shared<nn::Sigmoid<T>>());
    return net;
}

} // namespace builders

template <typename T>
NetworkSpec spec_of(const nn::Network<T>& net, const std::string& role,
                    const NetworkConfig& cfg) {
    NetworkSpec s;
    s.role = role;
    if (role == "generator") {
        s.input_shape = {cfg.latent_dim};
        s.output_shape = {cfg.image_size, cfg.image_size, 1};
    } else {
        s.input_shape = {cfg.image_size, cfg.image_size, 1};
        s.output_shape = role == "encoder" ? std::vector<int>{cfg.latent_dim}
                                           : std::vector<int>{1};
    }
    for (const auto& l : net.layers) s.layers.push_back(l->info());
    return s;
}

// Uniform prior z ~ U[-1,1]^latent_dim, one row per sample.
template <typename T>
Tensor<T> sample_prior(Rng& rng, int n, int latent_dim) {
    Tensor<T> z({n, latent_dim});
    for (auto& x : z.v) x = static_cast<T>(rng.uniform(-1.0, 1.0));
    return z;
}

template <typename T>
bool all_finite(const Tensor<T>& t) {
    for (const T& x : t.v)
        if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
}

// The six trainable networks. The Successor-facing generator instances share
// parameters, gradients and batch-norm state with the Pioneer-facing ones
// (clone_shared), so a Pioneer update is immediately visible to the
// Successor; only activation caches are distinct.
template <typename T>
struct BanisModel {
    NetworkConfig cfg;
    nn::Network<T> e_a, e_b;
    nn::Network<T> g_a, g_b;           // Pioneer-facing
    nn::Network<T> g_a_succ, g_b_succ; // Successor-facing views of g_a / g_b
    nn::Network<T> d_a, d_b;
    Rng rng; // dropout masks and prior sampling during training

    BanisModel(const NetworkConfig& c, std::uint64_t seed) : cfg(c), rng(seed) {
        Rng init(mix_seed(seed, 0x1a2b3c4dull));
        e_a = builders::encoder<T>(cfg, init);
        e_b = builders::encoder<T>(cfg, init);
        g_a = builders::generator<T>(cfg, init);
        g_b = builders::generator<T>(cfg, init);
        d_a = builders::discriminator<T>(cfg, init);
        d_b = builders::discriminator<T>(cfg, init);
        g_a_succ = g_a.clone_shared();
        g_b_succ = g_b.clone_shared();
    }

    // Assembles a bundle from hand-built networks (toy/identity setups in
    // tests). Successor views are derived from the given generators.
    static BanisModel from_networks(const NetworkConfig& c, std::uint64_t seed,
                                    nn::Network<T> ea, nn::Network<T> eb, nn::Network<T> ga,
                                    nn::Network<T> gb, nn::Network<T> da, nn::Network<T> db) {
        BanisModel m;
        m.cfg = c;
        m.rng.reseed(seed);
        m.e_a = std::move(ea);
        m.e_b = std::move(eb);
        m.g_a = std::move(ga);
        m.g_b = std::move(gb);
        m.d_a = std::move(da);
        m.d_b = std::move(db);
        m.g_a_succ = m.g_a.clone_shared();
        m.g_b_succ = m.g_b.clone_shared();
        return m;
    }

    nn::Network<T>& encoder(Side s) { return s == Side::A ? e_a : e_b; }
    nn::Network<T>& generator(Side s) { return s == Side::A ? g_a : g_b; }
    nn::Network<T>& successor_generator(Side s) { return s == Side::A ? g_a_succ : g_b_succ; }
    nn::Network<T>& discriminator(Side s) { return s == Side::A ? d_a : d_b; }

    void check_image(const Tensor<T>& img, const char* what) const {
        if (img.rank() != 4 || img.dim(1) != cfg.image_size || img.dim(2) != cfg.image_size ||
            img.dim(3) != 1)
            throw ValidationError(std::string(what) + ": expected (N," +
                                  std::to_string(cfg.image_size) + "," +
                                  std::to_string(cfg.image_size) + ",1), got " + img.shape_str());
        if (!all_finite(img))
            throw ValidationError(std::string(what) + ": non-finite input image");
    }

    // Inference-mode ops (dropout off, batch-norm running statistics).

    Tensor<T> encode(Side s, const Tensor<T>& img) {
        check_image(img, "encode");
        return this->encoder(s).forward(img, false, rng);
    }

    Tensor<T> generate(Side s, const Tensor<T>& z) {
        if (z.rank() != 2 || z.dim(1) != cfg.latent_dim)
            throw ValidationError("generate: expected (N," + std::to_string(cfg.latent_dim) +
                                  ") latent batch, got " + z.shape_str());
        if (!all_finite(z)) throw ValidationError("generate: non-finite latent");
        return this->generator(s).forward(z, false, rng);
    }

    Tensor<T> discriminate(Side s, const Tensor<T>& img) {
        check_image(img, "discriminate");
        return this->discriminator(s).forward(img, false, rng);
    }

    // Successor S_A = G_A ∘ E_A maps a B-domain image to an A-domain
    // reconstruction (and vice versa).
    Tensor<T> successor(Side s, const Tensor<T>& img) {
        check_image(img, "successor");
        const Tensor<T>& z = this->encoder(s).forward(img, false, rng);
        return this->successor_generator(s).forward(z, false, rng);
    }

    // Coordinator round trip: C_A(b) = S_B(S_A(b)), C_B(a) = S_A(S_B(a)).
    Tensor<T> coordinator(Side s, const Tensor<T>& img) {
        check_image(img, "coordinator");
        if (s == Side::A) return successor(Side::B, successor(Side::A, img));
        return successor(Side::A, successor(Side::B, img));
    }

    std::vector<nn::ParamTensor<T>*> successor_params() {
        std::vector<nn::ParamTensor<T>*> ps;
        for (auto* net : {&e_a, &e_b, &g_a, &g_b})
            for (auto* p : net->params()) ps.push_back(p);
        return ps;
    }

private:
    BanisModel() = default;
};

using ModelBundle = BanisModel<float>;

} // namespace banis
