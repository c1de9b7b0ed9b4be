#pragma once

#include <cstdint>
#include <utility>

#include "banis/networks.hpp"

namespace banis {

// Per-step scalar record; one CSV row per optimizer step.
// adv_* is the Eq.-style max-form discriminator objective
// mean(log D(x)) + mean(log(1 - D(G(z)))), so it is <= 0 and approaches 0
// as the discriminator wins.
struct LossReport {
    double adv_a = 0.0, adv_b = 0.0;
    double id_a = 0.0, id_b = 0.0;
    double pm_a = 0.0, pm_b = 0.0;
    long step = 0;
};

// Probabilities are clamped to [eps, 1-eps] before any log; every clamp is
// counted so training can surface saturation in debug logs.
inline constexpr double kProbEps = 1e-7;
inline std::uint64_t g_prob_clamp_events = 0;

template <typename T>
T clamp_prob(T p) {
    if (p < static_cast<T>(kProbEps)) {
        ++g_prob_clamp_events;
        return static_cast<T>(kProbEps);
    }
    if (p > T(1) - static_cast<T>(kProbEps)) {
        ++g_prob_clamp_events;
        return T(1) - static_cast<T>(kProbEps);
    }
    return p;
}

// ---------------------------------------------------------------------------
// MSE
// ---------------------------------------------------------------------------

template <typename T>
T mse(const Tensor<T>& x, const Tensor<T>& y) {
    require_same_shape(x, y, "mse");
    if (x.empty()) throw ValidationError("mse: empty input");
    double acc = 0.0; // accumulate in double regardless of T
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
        acc += d * d;
    }
    return static_cast<T>(acc / static_cast<double>(x.numel()));
}

// d mse(x,y) / dx, written into g (resized).
template <typename T>
void mse_grad(const Tensor<T>& x, const Tensor<T>& y, Tensor<T>& g) {
    require_same_shape(x, y, "mse_grad");
    g.resize(x.shape);
    const T scale = T(2) / static_cast<T>(x.numel());
    for (std::size_t i = 0; i < x.numel(); ++i) g[i] = scale * (x[i] - y[i]);
}

// ---------------------------------------------------------------------------
// Adversarial loss on probability batches
// ---------------------------------------------------------------------------

template <typename T>
struct AdvObjectives {
    // mean(log d_real) + mean(log(1 - d_fake)); maximized by the
    // discriminator (training minimizes its negation).
    T discriminator;
    // Non-saturating generator objective -mean(log d_fake), minimized.
    T generator;
};

template <typename T>
AdvObjectives<T> adversarial_loss(const Tensor<T>& d_real, const Tensor<T>& d_fake) {
    if (d_real.empty() || d_fake.empty())
        throw ValidationError("adversarial_loss: empty probability batch");
    double lr = 0.0;
    for (const T& p : d_real.v) lr += std::log(static_cast<double>(clamp_prob(p)));
    lr /= static_cast<double>(d_real.numel());
    double lf = 0.0, lg = 0.0;
    for (const T& p : d_fake.v) {
        const double pc = static_cast<double>(clamp_prob(p));
        lf += std::log(1.0 - pc);
        lg += std::log(pc);
    }
    lf /= static_cast<double>(d_fake.numel());
    lg /= static_cast<double>(d_fake.numel());
    return {static_cast<T>(lr + lf), static_cast<T>(-lg)};
}

// ---------------------------------------------------------------------------
// Model-composed losses. All run the networks in train mode; the *_backward
// variants additionally accumulate parameter gradients. Forward order is
// identical between the value and backward variants so that the dropout
// stream lines up (gradient checks re-seed the model RNG per evaluation).
// ---------------------------------------------------------------------------

namespace loss_detail {

template <typename T>
void require_paired(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() < 1 || b.rank() < 1 || a.dim(0) != b.dim(0))
        throw ValidationError("unpaired batch: A and B batch sizes differ (" + a.shape_str() +
                              " vs " + b.shape_str() + ")");
}

} // namespace loss_detail

// Identical loss (per domain):
//   id_A = mse(S_A(b), a) + mse(S_A(b), G_A(z))
//   id_B = mse(S_B(a), b) + mse(S_B(a), G_B(z))
// with the prior term optional (the auto-encoder baseline masks it).
template <typename T>
std::pair<T, T> identical_loss(BanisModel<T>& m, const Tensor<T>& a, const Tensor<T>& b,
                               const Tensor<T>& z, bool include_prior_term = true) {
    loss_detail::require_paired(a, b);
    if (include_prior_term && z.dim(0) != a.dim(0))
        throw ValidationError("unpaired batch: latent batch size differs from image batch");
    T id[2];
    for (Side s : {Side::A, Side::B}) {
        const Tensor<T>& target = s == Side::A ? a : b;
        const Tensor<T>& input = s == Side::A ? b : a;
        const Tensor<T>& code = m.encoder(s).forward(input, true, m.rng);
        const Tensor<T>& rec = m.successor_generator(s).forward(code, true, m.rng);
        T v = mse(rec, target);
        if (include_prior_term) {
            const Tensor<T>& gen = m.generator(s).forward(z, true, m.rng);
            v += mse(rec, gen);
        }
        id[s == Side::A ? 0 : 1] = v;
    }
    return {id[0], id[1]};
}

template <typename T>
std::pair<T, T> identical_loss_backward(BanisModel<T>& m, const Tensor<T>& a, const Tensor<T>& b,
                                        const Tensor<T>& z, bool include_prior_term = true) {
    loss_detail::require_paired(a, b);
    if (include_prior_term && z.dim(0) != a.dim(0))
        throw ValidationError("unpaired batch: latent batch size differs from image batch");
    T id[2];
    Tensor<T> d_rec, d_gen, tmp;
    for (Side s : {Side::A, Side::B}) {
        const Tensor<T>& target = s == Side::A ? a : b;
        const Tensor<T>& input = s == Side::A ? b : a;
        const Tensor<T>& code = m.encoder(s).forward(input, true, m.rng);
        const Tensor<T>& rec = m.successor_generator(s).forward(code, true, m.rng);
        T v = mse(rec, target);
        mse_grad(rec, target, d_rec);
        if (include_prior_term) {
            const Tensor<T>& gen = m.generator(s).forward(z, true, m.rng);
            v += mse(rec, gen);
            // d/d rec of mse(rec, gen), added onto the observation term
            mse_grad(rec, gen, tmp);
            for (std::size_t i = 0; i < d_rec.numel(); ++i) d_rec[i] += tmp[i];
            // gradient through the prior branch G(z)
            mse_grad(gen, rec, d_gen);
            m.generator(s).backward(d_gen);
        }
        Tensor<T> d_code = m.successor_generator(s).backward(d_rec);
        m.encoder(s).backward(d_code);
        id[s == Side::A ? 0 : 1] = v;
    }
    return {id[0], id[1]};
}

// Pair-matched loss: pm_A = mse(C_A(b), b), pm_B = mse(C_B(a), a).
template <typename T>
std::pair<T, T> pair_matched_loss(BanisModel<T>& m, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.empty() || b.empty()) throw ValidationError("pair_matched_loss: empty batch");
    loss_detail::require_paired(a, b);
    T pm[2];
    for (Side s : {Side::A, Side::B}) {
        const Tensor<T>& input = s == Side::A ? b : a;
        const Side first = s, second = s == Side::A ? Side::B : Side::A;
        const Tensor<T>& mid =
            m.successor_generator(first).forward(m.encoder(first).forward(input, true, m.rng),
                                                 true, m.rng);
        const Tensor<T>& out =
            m.successor_generator(second).forward(m.encoder(second).forward(mid, true, m.rng),
                                                  true, m.rng);
        pm[s == Side::A ? 0 : 1] = mse(out, input);
    }
    return {pm[0], pm[1]};
}

template <typename T>
std::pair<T, T> pair_matched_loss_backward(BanisModel<T>& m, const Tensor<T>& a,
                                           const Tensor<T>& b) {
    if (a.empty() || b.empty()) throw ValidationError("pair_matched_loss: empty batch");
    loss_detail::require_paired(a, b);
    T pm[2];
    Tensor<T> d_out;
    for (Side s : {Side::A, Side::B}) {
        const Tensor<T>& input = s == Side::A ? b : a;
        const Side first = s, second = s == Side::A ? Side::B : Side::A;
        const Tensor<T>& mid =
            m.successor_generator(first).forward(m.encoder(first).forward(input, true, m.rng),
                                                 true, m.rng);
        const Tensor<T>& out =
            m.successor_generator(second).forward(m.encoder(second).forward(mid, true, m.rng),
                                                  true, m.rng);
        pm[s == Side::A ? 0 : 1] = mse(out, input);
        mse_grad(out, input, d_out);
        Tensor<T> d = m.successor_generator(second).backward(d_out);
        d = m.encoder(second).backward(d);
        d = m.successor_generator(first).backward(d);
        m.encoder(first).backward(d);
    }
    return {pm[0], pm[1]};
}

// Discriminator update pass for one Pioneer. Returns the max-form objective
// value; accumulates gradients of its negation into D's parameters.
template <typename T>
T discriminator_loss_backward(BanisModel<T>& m, Side s, const Tensor<T>& real,
                              const Tensor<T>& z) {
    Tensor<T> fake = m.generator(s).forward(z, true, m.rng); // copy: D passes reuse buffers
    auto& d = m.discriminator(s);

    const Tensor<T>& p_real = d.forward(real, true, m.rng);
    double obj = 0.0;
    Tensor<T> dp(p_real.shape);
    const T n_real = static_cast<T>(p_real.numel());
    for (std::size_t i = 0; i < p_real.numel(); ++i) {
        const T p = clamp_prob(p_real[i]);
        obj += std::log(static_cast<double>(p));
        dp[i] = -T(1) / (n_real * p); // d(-obj)/dp
    }
    obj /= static_cast<double>(p_real.numel());
    d.backward(dp);

    const Tensor<T>& p_fake = d.forward(fake, true, m.rng);
    double obj_f = 0.0;
    dp.resize(p_fake.shape);
    const T n_fake = static_cast<T>(p_fake.numel());
    for (std::size_t i = 0; i < p_fake.numel(); ++i) {
        const T p = clamp_prob(p_fake[i]);
        obj_f += std::log(1.0 - static_cast<double>(p));
        dp[i] = T(1) / (n_fake * (T(1) - p));
    }
    obj_f /= static_cast<double>(p_fake.numel());
    d.backward(dp);

    return static_cast<T>(obj + obj_f);
}

// Non-saturating generator update pass: minimizes -mean(log D(G(z))).
// Accumulates gradients into G; the discriminator gradient pollution is
// discarded by the next zero_grad on D.
template <typename T>
T generator_loss_backward(BanisModel<T>& m, Side s, const Tensor<T>& z) {
    auto& g = m.generator(s);
    auto& d = m.discriminator(s);
    const Tensor<T>& fake = g.forward(z, true, m.rng);
    const Tensor<T>& p = d.forward(fake, true, m.rng);
    double obj = 0.0;
    Tensor<T> dp(p.shape);
    const T n = static_cast<T>(p.numel());
    for (std::size_t i = 0; i < p.numel(); ++i) {
        const T pc = clamp_prob(p[i]);
        obj -= std::log(static_cast<double>(pc));
        dp[i] = -T(1) / (n * pc);
    }
    obj /= static_cast<double>(p.numel());
    Tensor<T> d_img = d.backward(dp);
    g.backward(d_img);
    return static_cast<T>(obj);
}

} // namespace banis
