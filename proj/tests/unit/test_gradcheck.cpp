#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "banis/losses.hpp"

using namespace banis;

// Gradient checking on the miniature configuration (8x8 images, base width 2,
// latent dim 4). Reference gradients are central finite differences computed
// at 64-bit; the 32-bit model is evaluated at exactly the same parameter
// point (float values embed losslessly into double).

namespace {

NetworkConfig mini_cfg(double dropout = 0.0) {
    NetworkConfig cfg;
    cfg.image_size = 8;
    cfg.base_channels = 2;
    cfg.latent_dim = 4;
    cfg.dropout = dropout;
    return cfg;
}

template <typename T>
std::vector<nn::ParamTensor<T>*> all_params(BanisModel<T>& m) {
    std::vector<nn::ParamTensor<T>*> ps;
    for (auto* net : {&m.e_a, &m.e_b, &m.g_a, &m.g_b, &m.d_a, &m.d_b})
        for (auto* p : net->params()) ps.push_back(p);
    return ps;
}

template <typename T>
void zero_all(BanisModel<T>& m) {
    for (auto* p : all_params(m)) p->grad.zero();
}

// Clone a float model into double at the identical parameter point.
void copy_params_to_double(BanisModel<float>& src, BanisModel<double>& dst) {
    auto sp = all_params(src);
    auto dp = all_params(dst);
    REQUIRE(sp.size() == dp.size());
    for (std::size_t i = 0; i < sp.size(); ++i) {
        REQUIRE(sp[i]->value.numel() == dp[i]->value.numel());
        for (std::size_t j = 0; j < sp[i]->value.numel(); ++j)
            dp[i]->value[j] = static_cast<double>(sp[i]->value[j]);
    }
}

template <typename T>
double norm_rel_err(const Tensor<T>& a, const Tensor<double>& b, double zero_floor) {
    double num = 0, da = 0, db = 0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        const double av = static_cast<double>(a[i]);
        num += (av - b[i]) * (av - b[i]);
        da += av * av;
        db += b[i] * b[i];
    }
    const double denom = std::sqrt(da) + std::sqrt(db);
    // Loss-invariant directions (e.g. a bias absorbed by the following batch
    // norm) leave both sides at roundoff scale; that is agreement, not error.
    if (denom < zero_floor) return 0.0;
    return std::sqrt(num) / denom;
}

// Central finite differences of `value` over every parameter of `ps`,
// restoring the model RNG before each evaluation so dropout masks and prior
// draws are pinned.
std::vector<Tensor<double>> fd_gradients(BanisModel<double>& m,
                                         std::vector<nn::ParamTensor<double>*> ps,
                                         const std::function<double()>& value, double h) {
    const Rng::State rng0 = m.rng.state();
    std::vector<Tensor<double>> out;
    out.reserve(ps.size());
    for (auto* p : ps) {
        Tensor<double> g(p->value.shape);
        for (std::size_t i = 0; i < p->value.numel(); ++i) {
            const double keep = p->value[i];
            p->value[i] = keep + h;
            m.rng.set_state(rng0);
            const double lp = value();
            p->value[i] = keep - h;
            m.rng.set_state(rng0);
            const double lm = value();
            p->value[i] = keep;
            g[i] = (lp - lm) / (2 * h);
        }
        out.push_back(std::move(g));
    }
    m.rng.set_state(rng0);
    return out;
}

// The three loss families as (analytic-backward, value) pairs sharing one
// forward order. `which`: 0 = adversarial (D and G objectives), 1 =
// identical, 2 = pair-matched.
struct LossCase {
    const char* name;
    std::function<void(void)> analytic; // accumulates grads
    std::function<double(void)> value;
    std::vector<int> param_nets; // indices into {e_a,e_b,g_a,g_b,d_a,d_b}
};

template <typename T>
std::vector<nn::ParamTensor<T>*> net_params(BanisModel<T>& m, const std::vector<int>& idx) {
    nn::Network<T>* nets[] = {&m.e_a, &m.e_b, &m.g_a, &m.g_b, &m.d_a, &m.d_b};
    std::vector<nn::ParamTensor<T>*> ps;
    for (int i : idx)
        for (auto* p : nets[i]->params()) ps.push_back(p);
    return ps;
}

template <typename T>
std::vector<LossCase> make_cases(BanisModel<T>& m, const Tensor<T>& a, const Tensor<T>& b,
                                 const Tensor<T>& z) {
    std::vector<LossCase> cases;
    // discriminator objective, side A (negated for minimization)
    cases.push_back({"disc_A",
                     [&m, &a, &z] { discriminator_loss_backward(m, Side::A, a, z); },
                     [&m, &a, &z] {
                         Tensor<T> fake = m.g_a.forward(z, true, m.rng);
                         const Tensor<T>& pr = m.d_a.forward(a, true, m.rng);
                         Tensor<T> pr_copy = pr;
                         const Tensor<T>& pf = m.d_a.forward(fake, true, m.rng);
                         return -static_cast<double>(
                             adversarial_loss(pr_copy, pf).discriminator);
                     },
                     {4}});
    // generator objective, side B (non-saturating)
    cases.push_back({"gen_B",
                     [&m, &z] { generator_loss_backward(m, Side::B, z); },
                     [&m, &z] {
                         const Tensor<T>& fake = m.g_b.forward(z, true, m.rng);
                         const Tensor<T>& pf = m.d_b.forward(fake, true, m.rng);
                         double sum = 0;
                         for (const T& p : pf.v)
                             sum -= std::log(static_cast<double>(clamp_prob(p)));
                         return sum / static_cast<double>(pf.numel());
                     },
                     {3}});
    // identical loss, both domains, both branches
    cases.push_back({"identical",
                     [&m, &a, &b, &z] { identical_loss_backward(m, a, b, z); },
                     [&m, &a, &b, &z] {
                         auto [ia, ib] = identical_loss(m, a, b, z);
                         return static_cast<double>(ia) + static_cast<double>(ib);
                     },
                     {0, 1, 2, 3}});
    // pair-matched loss, both directions
    cases.push_back({"pair_matched",
                     [&m, &a, &b] { pair_matched_loss_backward(m, a, b); },
                     [&m, &a, &b] {
                         auto [pa, pb] = pair_matched_loss(m, a, b);
                         return static_cast<double>(pa) + static_cast<double>(pb);
                     },
                     {0, 1, 2, 3}});
    return cases;
}

template <typename T>
Tensor<T> rand_images(Rng& rng, int n, int size) {
    Tensor<T> t({n, size, size, 1});
    for (auto& v : t.v) v = static_cast<T>(rng.uniform(-1, 1));
    return t;
}

} // namespace

TEST_SUITE("gradcheck") {

TEST_CASE("all three losses match central differences at 64-bit (rel err < 1e-6)") {
    auto cfg = mini_cfg();
    // seeds pinned to a kink-free evaluation point: a LeakyReLU input
    // inside the +-h band makes the central difference smear the slope
    BanisModel<double> m(cfg, 401);
    Rng data_rng(308);
    auto a = rand_images<double>(data_rng, 2, 8);
    auto b = rand_images<double>(data_rng, 2, 8);
    auto z = sample_prior<double>(data_rng, 2, cfg.latent_dim);

    auto cases = make_cases(m, a, b, z);
    for (auto& lc : cases) {
        CAPTURE(lc.name);
        auto ps = net_params(m, lc.param_nets);
        const Rng::State rng0 = m.rng.state();

        zero_all(m);
        m.rng.set_state(rng0);
        lc.analytic();
        std::vector<Tensor<double>> analytic;
        for (auto* p : ps) analytic.push_back(p->grad);

        auto fd = fd_gradients(m, ps, lc.value, 1e-5);
        for (std::size_t i = 0; i < ps.size(); ++i) {
            CAPTURE(i);
            CHECK(norm_rel_err(analytic[i], fd[i], 1e-9) < 1e-6);
        }
    }
}

TEST_CASE("32-bit analytic gradients match the 64-bit reference (rel err < 1e-3)") {
    auto cfg = mini_cfg();
    BanisModel<float> mf(cfg, 401);
    BanisModel<double> md(cfg, 401);
    copy_params_to_double(mf, md);

    Rng data_rng(308);
    auto af = rand_images<float>(data_rng, 2, 8);
    auto bf = rand_images<float>(data_rng, 2, 8);
    auto zf = sample_prior<float>(data_rng, 2, cfg.latent_dim);
    auto ad = af.template cast<double>();
    auto bd = bf.template cast<double>();
    auto zd = zf.template cast<double>();

    auto cases_f = make_cases(mf, af, bf, zf);
    auto cases_d = make_cases(md, ad, bd, zd);
    for (std::size_t ci = 0; ci < cases_f.size(); ++ci) {
        CAPTURE(cases_f[ci].name);
        auto psf = net_params(mf, cases_f[ci].param_nets);
        auto psd = net_params(md, cases_d[ci].param_nets);

        const Rng::State rng0 = mf.rng.state();
        zero_all(mf);
        mf.rng.set_state(rng0);
        cases_f[ci].analytic();

        md.rng.set_state(rng0);
        auto fd = fd_gradients(md, psd, cases_d[ci].value, 1e-5);
        for (std::size_t i = 0; i < psf.size(); ++i) {
            CAPTURE(i);
            CHECK(norm_rel_err(psf[i]->grad, fd[i], 1e-6) < 1e-3);
        }
    }
}

TEST_CASE("gradients stay correct with dropout active (pinned masks)") {
    auto cfg = mini_cfg(0.3);
    BanisModel<double> m(cfg, 105);
    Rng data_rng(106);
    auto a = rand_images<double>(data_rng, 2, 8);
    auto z = sample_prior<double>(data_rng, 2, cfg.latent_dim);

    // discriminator objective exercises the dropout layers in D
    const Rng::State rng0 = m.rng.state();
    zero_all(m);
    m.rng.set_state(rng0);
    discriminator_loss_backward(m, Side::A, a, z);
    auto ps = net_params(m, {4});
    std::vector<Tensor<double>> analytic;
    for (auto* p : ps) analytic.push_back(p->grad);

    auto value = [&m, &a, &z] {
        Tensor<double> fake = m.g_a.forward(z, true, m.rng);
        const Tensor<double>& pr = m.d_a.forward(a, true, m.rng);
        Tensor<double> pr_copy = pr;
        const Tensor<double>& pf = m.d_a.forward(fake, true, m.rng);
        return -static_cast<double>(adversarial_loss(pr_copy, pf).discriminator);
    };
    m.rng.set_state(rng0);
    auto fd = fd_gradients(m, ps, value, 1e-5);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        CAPTURE(i);
        CHECK(norm_rel_err(analytic[i], fd[i], 1e-9) < 1e-6);
    }
}

} // TEST_SUITE
