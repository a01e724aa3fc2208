#include "ddcl/kernels.hpp"

#include <atomic>
#include <cstdlib>

#include "ddcl/errors.hpp"
#include "kernels_backends.hpp"

namespace ddcl::kernels {

namespace {

bool cpu_has_avx2() {
#if DDCL_BUILD_AVX2
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

bool cpu_has_neon() {
#if DDCL_BUILD_NEON
    return true;  // NEON is baseline on aarch64
#else
    return false;
#endif
}

Backend detect_best() {
    if (std::getenv("DDCL_FORCE_SCALAR")) return Backend::scalar;
    if (cpu_has_avx2()) return Backend::avx2;
    if (cpu_has_neon()) return Backend::neon;
    return Backend::scalar;
}

std::atomic<Backend> g_backend{detect_best()};

} // namespace

bool backend_supported(Backend b) {
    switch (b) {
        case Backend::scalar: return true;
        case Backend::avx2: return cpu_has_avx2();
        case Backend::neon: return cpu_has_neon();
    }
    return false;
}

Backend active_backend() { return g_backend.load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (!backend_supported(b))
        throw Error("kernel backend '" + backend_name(b) + "' not supported on this CPU");
    g_backend.store(b, std::memory_order_relaxed);
}

std::string backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "?";
}

const Kernels& table(Backend b) {
    switch (b) {
        case Backend::scalar: return scalar::table;
#if DDCL_BUILD_AVX2
        case Backend::avx2:
            if (cpu_has_avx2()) return avx2::table;
            break;
#endif
#if DDCL_BUILD_NEON
        case Backend::neon: return neon::table;
#endif
        default: break;
    }
    throw Error("kernel backend '" + backend_name(b) + "' not available");
}

static const Kernels& active() { return table(active_backend()); }

float dot(const float* a, const float* b, std::size_t n) { return active().dot(a, b, n); }
void axpy(float alpha, const float* x, float* y, std::size_t n) { active().axpy(alpha, x, y, n); }
void scale(float alpha, float* x, std::size_t n) { active().scale(alpha, x, n); }
float sum(const float* x, std::size_t n) { return active().sum(x, n); }
float sumsq(const float* x, std::size_t n) { return active().sumsq(x, n); }
void relu_forward(const float* x, float* y, std::size_t n) { active().relu_forward(x, y, n); }
void relu_backward(const float* x, const float* dy, float* dx, std::size_t n) {
    active().relu_backward(x, dy, dx, n);
}
void sgd_momentum_update(float* param, float* vel, const float* grad,
                         float lr, float momentum, float weight_decay, std::size_t n) {
    active().sgd_momentum_update(param, vel, grad, lr, momentum, weight_decay, n);
}
void gemm_nn(std::size_t M, std::size_t N, std::size_t K,
             const float* A, const float* B, float* C, float beta) {
    active().gemm_nn(M, N, K, A, B, C, beta);
}
void gemm_nt(std::size_t M, std::size_t N, std::size_t K,
             const float* A, const float* B, float* C, float beta) {
    active().gemm_nt(M, N, K, A, B, C, beta);
}
void gemm_tn(std::size_t M, std::size_t N, std::size_t K,
             const float* A, const float* B, float* C, float beta) {
    active().gemm_tn(M, N, K, A, B, C, beta);
}

} // namespace ddcl::kernels
