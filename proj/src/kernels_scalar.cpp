// Reference kernels. Plain loops, no ISA assumptions; every SIMD variant is
// equivalence-tested against these.

#include "ddcl/kernels.hpp"

#include "kernels_backends.hpp"

#include <cstring>

namespace ddcl::kernels::scalar {

float dot(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(float alpha, const float* x, float* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale(float alpha, float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

float sum(const float* x, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

float sumsq(const float* x, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

void relu_forward(const float* x, float* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const float* x, const float* dy, float* dx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dx[i] = x[i] > 0.0f ? dy[i] : 0.0f;
}

void sgd_momentum_update(float* param, float* vel, const float* grad,
                         float lr, float momentum, float weight_decay, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
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
            const float av = a[k];
            const float* b = B + k * N;
            for (std::size_t j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

void gemm_nt(std::size_t M, std::size_t N, std::size_t K,
             const float* A, const float* B, float* C, float beta) {
    for (std::size_t i = 0; i < M; ++i) {
        const float* a = A + i * K;
        float* c = C + i * N;
        for (std::size_t j = 0; j < N; ++j) {
            const float* b = B + j * K;
            float acc = 0.0f;
            for (std::size_t k = 0; k < K; ++k) acc += a[k] * b[k];
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
            const float av = a[i];
            float* c = C + i * N;
            for (std::size_t j = 0; j < N; ++j) c[j] += av * b[j];
        }
    }
}

const Kernels table = {
    dot, axpy, scale, sum, sumsq, relu_forward, relu_backward,
    sgd_momentum_update, gemm_nn, gemm_nt, gemm_tn,
};

} // namespace ddcl::kernels::scalar
