// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma for this TU only;
// callers reach these through the dispatcher, which checks CPU support first.

#include "ddcl/kernels.hpp"

#include "kernels_backends.hpp"

#include <cstring>
#include <immintrin.h>

namespace ddcl::kernels::avx2 {

static inline float hsum256(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehl_ps(lo, lo);
    lo = _mm_add_ps(lo, sh);
    sh = _mm_shuffle_ps(lo, lo, 0x1);
    lo = _mm_add_ss(lo, sh);
    return _mm_cvtss_f32(lo);
}

float dot(const float* a, const float* b, std::size_t n) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
    }
    for (; i + 8 <= n; i += 8)
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    float acc = hsum256(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
    const __m256 va = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 r = _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i));
        _mm256_storeu_ps(y + i, r);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(float alpha, float* x, std::size_t n) {
    const __m256 va = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

float sum(const float* x, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
    float r = hsum256(acc);
    for (; i < n; ++i) r += x[i];
    return r;
}

float sumsq(const float* x, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(x + i);
        acc = _mm256_fmadd_ps(v, v, acc);
    }
    float r = hsum256(acc);
    for (; i < n; ++i) r += x[i] * x[i];
    return r;
}

void relu_forward(const float* x, float* y, std::size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
    for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const float* x, const float* dy, float* dx, std::size_t n) {
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), zero, _CMP_GT_OQ);
        _mm256_storeu_ps(dx + i, _mm256_and_ps(mask, _mm256_loadu_ps(dy + i)));
    }
    for (; i < n; ++i) dx[i] = x[i] > 0.0f ? dy[i] : 0.0f;
}

void sgd_momentum_update(float* param, float* vel, const float* grad,
                         float lr, float momentum, float weight_decay, std::size_t n) {
    const __m256 vlr = _mm256_set1_ps(lr);
    const __m256 vmu = _mm256_set1_ps(momentum);
    const __m256 vwd = _mm256_set1_ps(weight_decay);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 p = _mm256_loadu_ps(param + i);
        __m256 g = _mm256_fmadd_ps(vwd, p, _mm256_loadu_ps(grad + i));
        __m256 v = _mm256_fmadd_ps(vmu, _mm256_loadu_ps(vel + i), g);
        _mm256_storeu_ps(vel + i, v);
        _mm256_storeu_ps(param + i, _mm256_fnmadd_ps(vlr, v, p));
    }
    for (; i < n; ++i) {
        float g = grad[i] + weight_decay * param[i];
        float v = momentum * vel[i] + g;
        vel[i] = v;
        param[i] -= lr * v;
    }
}

// Broadcast-A saxpy form; C rows accumulate in the same k order as the scalar
// reference, lanes differ only in j.
void gemm_nn(std::size_t M, std::size_t N, std::size_t K,
             const float* A, const float* B, float* C, float beta) {
    if (beta == 0.0f) std::memset(C, 0, M * N * sizeof(float));
    for (std::size_t i = 0; i < M; ++i) {
        float* c = C + i * N;
        const float* a = A + i * K;
        std::size_t k = 0;
        for (; k + 2 <= K; k += 2) {
            const __m256 a0 = _mm256_set1_ps(a[k]);
            const __m256 a1 = _mm256_set1_ps(a[k + 1]);
            const float* b0 = B + k * N;
            const float* b1 = B + (k + 1) * N;
            std::size_t j = 0;
            for (; j + 8 <= N; j += 8) {
                __m256 cv = _mm256_loadu_ps(c + j);
                cv = _mm256_fmadd_ps(a0, _mm256_loadu_ps(b0 + j), cv);
                cv = _mm256_fmadd_ps(a1, _mm256_loadu_ps(b1 + j), cv);
                _mm256_storeu_ps(c + j, cv);
            }
            for (; j < N; ++j) c[j] += a[k] * b0[j] + a[k + 1] * b1[j];
        }
        for (; k < K; ++k) {
            const __m256 av = _mm256_set1_ps(a[k]);
            const float* b = B + k * N;
            std::size_t j = 0;
            for (; j + 8 <= N; j += 8)
                _mm256_storeu_ps(c + j, _mm256_fmadd_ps(av, _mm256_loadu_ps(b + j),
                                                        _mm256_loadu_ps(c + j)));
            for (; j < N; ++j) c[j] += a[k] * b[j];
        }
    }
}

void gemm_nt(std::size_t M, std::size_t N, std::size_t K,
             const float* A, const float* B, float* C, float beta) {
    for (std::size_t i = 0; i < M; ++i) {
        const float* a = A + i * K;
        float* c = C + i * N;
        for (std::size_t j = 0; j < N; ++j) {
            float acc = dot(a, B + j * K, K);
            c[j] = beta == 0.0f ? acc : c[j] + acc;
        }
    }
}

void gemm_tn(std::size_t M, std::size_t N, std::size_t K,
             const float* A, const float* B, float* C, float beta) {
    if (beta == 0.0f) std::memset(C, 0, M * N * sizeof(float));
    for (std::size_t k = 0; k < K; ++k) {
        const float* a = A + k * M;
        const float* b = B + k * N;
        for (std::size_t i = 0; i < M; ++i) {
            const __m256 av = _mm256_set1_ps(a[i]);
            float* c = C + i * N;
            std::size_t j = 0;
            for (; j + 8 <= N; j += 8)
                _mm256_storeu_ps(c + j, _mm256_fmadd_ps(av, _mm256_loadu_ps(b + j),
                                                        _mm256_loadu_ps(c + j)));
            for (; j < N; ++j) c[j] += a[i] * b[j];
        }
    }
}

const Kernels table = {
    dot, axpy, scale, sum, sumsq, relu_forward, relu_backward,
    sgd_momentum_update, gemm_nn, gemm_nt, gemm_tn,
};

} // namespace ddcl::kernels::avx2
