#pragma once

#include <cstddef>

namespace banis {

// Single-threaded GEMM kernels, written so the compiler's autovectorizer can
// do the heavy lifting (contiguous inner loops over N, restrict pointers,
// 4-row register blocking). Matrices are row-major and dense: A is MxK,
// B is KxN, C is MxN.

namespace detail {

// 8-row blocking for narrow B (N <= 8), where the 4-row kernel's inner loop
// is too short to amortize the B-row loads.
template <typename T>
void gemm_nn_smalln(std::size_t M, std::size_t K, std::size_t N, const T* __restrict a,
                    const T* __restrict b, T* __restrict c) {
    std::size_t m = 0;
    for (; m + 8 <= M; m += 8) {
        T* __restrict cr[8];
        const T* __restrict ar[8];
        for (int r = 0; r < 8; ++r) {
            cr[r] = c + (m + r) * N;
            ar[r] = a + (m + r) * K;
        }
        for (std::size_t k = 0; k < K; ++k) {
            const T* __restrict br = b + k * N;
            for (int r = 0; r < 8; ++r) {
                const T v = ar[r][k];
                for (std::size_t n = 0; n < N; ++n) cr[r][n] += v * br[n];
            }
        }
    }
    for (; m < M; ++m) {
        T* __restrict crow = c + m * N;
        const T* __restrict arow = a + m * K;
        for (std::size_t k = 0; k < K; ++k) {
            const T v = arow[k];
            const T* __restrict br = b + k * N;
            for (std::size_t n = 0; n < N; ++n) crow[n] += v * br[n];
        }
    }
}

} // namespace detail

// C = A*B (or C += A*B when accumulate)
template <typename T>
void gemm_nn(std::size_t M, std::size_t K, std::size_t N, const T* __restrict a,
             const T* __restrict b, T* __restrict c, bool accumulate = false) {
    if (!accumulate) {
        for (std::size_t i = 0; i < M * N; ++i) c[i] = T(0);
    }
    if (N <= 8) {
        detail::gemm_nn_smalln(M, K, N, a, b, c);
        return;
    }
    std::size_t m = 0;
    for (; m + 4 <= M; m += 4) {
        T* __restrict c0 = c + (m + 0) * N;
        T* __restrict c1 = c + (m + 1) * N;
        T* __restrict c2 = c + (m + 2) * N;
        T* __restrict c3 = c + (m + 3) * N;
        const T* __restrict a0 = a + (m + 0) * K;
        const T* __restrict a1 = a + (m + 1) * K;
        const T* __restrict a2 = a + (m + 2) * K;
        const T* __restrict a3 = a + (m + 3) * K;
        for (std::size_t k = 0; k < K; ++k) {
            const T v0 = a0[k], v1 = a1[k], v2 = a2[k], v3 = a3[k];
            const T* __restrict br = b + k * N;
            for (std::size_t n = 0; n < N; ++n) {
                const T bv = br[n];
                c0[n] += v0 * bv;
                c1[n] += v1 * bv;
                c2[n] += v2 * bv;
                c3[n] += v3 * bv;
            }
        }
    }
    for (; m < M; ++m) {
        T* __restrict cr = c + m * N;
        const T* __restrict ar = a + m * K;
        for (std::size_t k = 0; k < K; ++k) {
            const T v = ar[k];
            const T* __restrict br = b + k * N;
            for (std::size_t n = 0; n < N; ++n) cr[n] += v * br[n];
        }
    }
}

// C += A^T * B where A is MxK and B is MxN, so C is KxN. Used for weight
// gradients (cols^T * dOut); always accumulates.
template <typename T>
void gemm_tn_acc(std::size_t M, std::size_t K, std::size_t N, const T* __restrict a,
                 const T* __restrict b, T* __restrict c) {
    std::size_t m = 0;
    for (; m + 4 <= M; m += 4) {
        const T* __restrict a0 = a + (m + 0) * K;
        const T* __restrict a1 = a + (m + 1) * K;
        const T* __restrict a2 = a + (m + 2) * K;
        const T* __restrict a3 = a + (m + 3) * K;
        const T* __restrict b0 = b + (m + 0) * N;
        const T* __restrict b1 = b + (m + 1) * N;
        const T* __restrict b2 = b + (m + 2) * N;
        const T* __restrict b3 = b + (m + 3) * N;
        for (std::size_t k = 0; k < K; ++k) {
            const T v0 = a0[k], v1 = a1[k], v2 = a2[k], v3 = a3[k];
            T* __restrict cr = c + k * N;
            for (std::size_t n = 0; n < N; ++n)
                cr[n] += v0 * b0[n] + v1 * b1[n] + v2 * b2[n] + v3 * b3[n];
        }
    }
    for (; m < M; ++m) {
        const T* __restrict ar = a + m * K;
        const T* __restrict br = b + m * N;
        for (std::size_t k = 0; k < K; ++k) {
            const T v = ar[k];
            T* __restrict cr = c + k * N;
            for (std::size_t n = 0; n < N; ++n) cr[n] += v * br[n];
        }
    }
}

// out = in^T for a row-major KxN matrix (out is NxK). Weights are small, so
// this is cheap relative to the GEMMs that consume the result.
template <typename T>
void transpose(std::size_t K, std::size_t N, const T* in, T* out) {
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t n = 0; n < N; ++n) out[n * K + k] = in[k * N + n];
}

} // namespace banis
