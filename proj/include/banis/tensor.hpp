#pragma once

#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "banis/errors.hpp"

namespace banis {

// Dense row-major tensor. Images are stored NHWC (batch, height, width,
// channel); dense activations as {N, D}. Small fixed feature set on purpose:
// the layer code works on raw pointers and explicit dims.
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), v(count(shape), T(0)) {}
    Tensor(std::vector<int> s, T fill) : shape(std::move(s)), v(count(shape), fill) {}

    static std::size_t count(const std::vector<int>& s) {
        std::size_t n = 1;
        for (int d : s) {
            if (d < 0) throw ValidationError("tensor dimension must be non-negative");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::size_t numel() const { return v.size(); }
    bool empty() const { return v.empty(); }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    T& operator[](std::size_t i) { return v[i]; }
    const T& operator[](std::size_t i) const { return v[i]; }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }
    void zero() { fill(T(0)); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    // Reinterprets the buffer under a new shape with identical element count.
    Tensor reshaped(std::vector<int> s) const {
        if (count(s) != numel()) throw ValidationError("reshape changes element count");
        Tensor out;
        out.shape = std::move(s);
        out.v = v;
        return out;
    }

    // Resize destructively (contents unspecified); reuses capacity.
    void resize(const std::vector<int>& s) {
        shape = s;
        v.resize(count(s));
    }

    std::string shape_str() const {
        std::ostringstream os;
        os << '(';
        for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
        os << ')';
        return os.str();
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.v.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
    if (!a.same_shape(b))
        throw ValidationError(std::string(what) + ": shape mismatch, expected " + a.shape_str() +
                              " vs actual " + b.shape_str());
}

} // namespace banis
