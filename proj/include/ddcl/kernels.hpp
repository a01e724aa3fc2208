#pragma once

#include <cstddef>
#include <string>

namespace ddcl::kernels {

// Runtime-selected backend. The scalar kernels are the reference semantics;
// SIMD variants must agree with them within the tolerances pinned in
// tests/test_kernels.cpp. Selection happens once at startup (best ISA the CPU
// reports) and can be forced for testing via set_backend() or the
// DDCL_FORCE_SCALAR environment variable.
enum class Backend { scalar, avx2, neon };

Backend active_backend();
void set_backend(Backend b);      // throws ddcl::Error if unsupported on this CPU
bool backend_supported(Backend b);
std::string backend_name(Backend b);

// ---- fp32 primitives (model hot path) ----

float dot(const float* a, const float* b, std::size_t n);
void axpy(float alpha, const float* x, float* y, std::size_t n);   // y += alpha*x
void scale(float alpha, float* x, std::size_t n);
float sum(const float* x, std::size_t n);
float sumsq(const float* x, std::size_t n);
void relu_forward(const float* x, float* y, std::size_t n);
void relu_backward(const float* x, const float* dy, float* dx, std::size_t n);
// v = momentum*v + (g + wd*p); p -= lr*v   (classic coupled-L2 SGD step)
void sgd_momentum_update(float* param, float* vel, const float* grad,
                         float lr, float momentum, float weight_decay, std::size_t n);

// Row-major GEMM, the three transpose combinations the layers need.
// beta selects overwrite (0) or accumulate (1).
// C[M,N] = A[M,K] * B[K,N] + beta*C
void gemm_nn(std::size_t M, std::size_t N, std::size_t K,
             const float* A, const float* B, float* C, float beta);
// C[M,N] = A[M,K] * B[N,K]^T + beta*C
void gemm_nt(std::size_t M, std::size_t N, std::size_t K,
             const float* A, const float* B, float* C, float beta);
// C[M,N] = A[K,M]^T * B[K,N] + beta*C
void gemm_tn(std::size_t M, std::size_t N, std::size_t K,
             const float* A, const float* B, float* C, float beta);

// Per-kernel function tables, exposed so the equivalence tests can compare
// backends directly without flipping global state.
struct Kernels {
    float (*dot)(const float*, const float*, std::size_t);
    void (*axpy)(float, const float*, float*, std::size_t);
    void (*scale)(float, float*, std::size_t);
    float (*sum)(const float*, std::size_t);
    float (*sumsq)(const float*, std::size_t);
    void (*relu_forward)(const float*, float*, std::size_t);
    void (*relu_backward)(const float*, const float*, float*, std::size_t);
    void (*sgd_momentum_update)(float*, float*, const float*, float, float, float, std::size_t);
    void (*gemm_nn)(std::size_t, std::size_t, std::size_t, const float*, const float*, float*, float);
    void (*gemm_nt)(std::size_t, std::size_t, std::size_t, const float*, const float*, float*, float);
    void (*gemm_tn)(std::size_t, std::size_t, std::size_t, const float*, const float*, float*, float);
};

const Kernels& table(Backend b);  // throws if backend not compiled/supported

} // namespace ddcl::kernels
