// NEON kernel variants for aarch64.

#include "ddcl/kernels.hpp"

#include "kernels_backends.hpp"

#include <arm_neon.h>
#include <cstring>

namespace ddcl::kernels::neon {

float dot(const float* a, const float* b, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = vfmaq_f32(acc, vld1q_f32(a + i), vld1q_f32(b + i));
    float r = vaddvq_f32(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
    const float32x4_t va = vdupq_n_f32(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        vst1q_f32(y + i, vfmaq_f32(vld1q_f32(y + i), va, vld1q_f32(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale(float alpha, float* x, std::size_t n) {
    const float32x4_t va = vdupq_n_f32(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(x + i, vmulq_f32(va, vld1q_f32(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

float sum(const float* x, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = vaddq_f32(acc, vld1q_f32(x + i));
    float r = vaddvq_f32(acc);
    for (; i < n; ++i) r += x[i];
    return r;
}

float sumsq(const float* x, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float32x4_t v = vld1q_f32(x + i);
        acc = vfmaq_f32(acc, v, v);
    }
    float r = vaddvq_f32(acc);
    for (; i < n; ++i) r += x[i] * x[i];
    return r;
}

void relu_forward(const float* x, float* y, std::size_t n) {
    const float32x4_t zero = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vmaxq_f32(vld1q_f32(x + i), zero));
    for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const float* x, const float* dy, float* dx, std::size_t n) {
    const float32x4_t zero = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        uint32x4_t mask = vcgtq_f32(vld1q_f32(x + i), zero);
        float32x4_t g = vld1q_f32(dy + i);
        vst1q_f32(dx + i, vreinterpretq_f32_u32(
                              vandq_u32(mask, vreinterpretq_u32_f32(g))));
    }
    for (; i < n; ++i) dx[i] = x[i] > 0.0f ? dy[i] : 0.0f;
}

void sgd_momentum_update(float* param, float* vel, const float* grad,
                         float lr, float momentum, float weight_decay, std::size_t n) {
    const float32x4_t vlr = vdupq_n_f32(lr);
    const float32x4_t vmu = vdupq_n_f32(momentum);
    const float32x4_t vwd = vdupq_n_f32(weight_decay);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float32x4_t p = vld1q_f32(param + i);
        float32x4_t g = vfmaq_f32(vld1q_f32(grad + i), vwd, p);
        float32x4_t v = vfmaq_f32(g, vmu, vld1q_f32(vel + i));
        vst1q_f32(vel + i, v);
        vst1q_f32(param + i, vfmsq_f32(p, vlr, v));
    }
    for (; i < n; ++i) {
        float g = grad[i] + weight_decay * param[i];
        float v = momentum * vel[i] + g;
        vel[i] = v;
        param[i] -= lr * v;
    }
}

void gemm_nn(std::size_t M, std::size_t N, std::size_t K,
             const float* A, const float* B, float* C, float beta) {
    if (beta == 0.0f) std::memset(C, 0, M * N * sizeof(float));
    for (std::size_t i = 0; i < M; ++i) {
        float* c = C + i * N;
        const float* a = A + i * K;
        for (std::size_t k = 0; k < K; ++k) {
            const float32x4_t av = vdupq_n_f32(a[k]);
            const float* b = B + k * N;
            std::size_t j = 0;
            for (; j + 4 <= N; j += 4)
                vst1q_f32(c + j, vfmaq_f32(vld1q_f32(c + j), av, vld1q_f32(b + j)));
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
            const float32x4_t av = vdupq_n_f32(a[i]);
            float* c = C + i * N;
            std::size_t j = 0;
            for (; j + 4 <= N; j += 4)
                vst1q_f32(c + j, vfmaq_f32(vld1q_f32(c + j), av, vld1q_f32(b + j)));
            for (; j < N; ++j) c[j] += a[i] * b[j];
        }
    }
}

const Kernels table = {
    dot, axpy, scale, sum, sumsq, relu_forward, relu_backward,
    sgd_momentum_update, gemm_nn, gemm_nt, gemm_tn,
};

} // namespace ddcl::kernels::neon
