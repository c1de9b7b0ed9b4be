#pragma once

#include <cmath>
#include <cstdint>

namespace banis {

// xoshiro256++ with a splitmix64 seeder. Hand-rolled so that streams are
// bit-reproducible across platforms and standard library versions; the
// distributions below are part of the reproducibility contract and must not
// be swapped for std:: equivalents.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : s_) {
            // splitmix64
            x += 0x9e3779b97f4a7c15ull;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            word = z ^ (z >> 31);
        }
        have_gauss_ = false;
        gauss_next_ = 0.0;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // [0, 1)
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // [0, n)
    std::uint64_t uniform_index(std::uint64_t n) {
        // modulo with 64-bit state; bias is negligible for the n used here
        return next_u64() % n;
    }

    double normal(double mu = 0.0, double sigma = 1.0) {
        // Box-Muller with cached spare
        if (have_gauss_) {
            have_gauss_ = false;
            return mu + sigma * gauss_next_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        gauss_next_ = r * std::sin(theta);
        have_gauss_ = true;
        return mu + sigma * r * std::cos(theta);
    }

    // Serialized state: four state words plus the Box-Muller cache.
    struct State {
        std::uint64_t s[4];
        std::uint8_t have_gauss;
        double gauss_next;
    };

    State state() const {
        State st{};
        for (int i = 0; i < 4; ++i) st.s[i] = s_[i];
        st.have_gauss = have_gauss_ ? 1 : 0;
        st.gauss_next = gauss_next_;
        return st;
    }

    void set_state(const State& st) {
        for (int i = 0; i < 4; ++i) s_[i] = st.s[i];
        have_gauss_ = st.have_gauss != 0;
        gauss_next_ = st.gauss_next;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4]{};
    bool have_gauss_ = false;
    double gauss_next_ = 0.0;
};

// Stateless 64-bit mix for deriving independent substream seeds, e.g.
// per-pair seeds in the data generator or per-step batch composition.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace banis
