#pragma once

#include <span>

#include "ddcl/mat.hpp"

namespace ddcl::losses {

// All loss algebra runs in double precision; the f32 model path converts at
// the boundary. Every differentiable operation ships its analytic gradient,
// checked against central finite differences in the test suite.

struct Hyperparams {
    double lambda_offdiag = 5e-3;  // off-diagonal weight of the redundancy term
    double gamma = 1.0;            // weight of the distortion-disentangled term
    double xi = 0.0;               // target cosine for the DVR pair
};

// Columns whose population std falls below this floor standardize to zero
// instead of dividing by ~0 (bounded gradients on degenerate batches).
inline constexpr double kSigmaFloor = 1e-12;
// Rows with L2 norm below this are degenerate for cosine purposes.
inline constexpr double kNormFloor = 1e-12;

// Per-column standardization over the batch dimension: zero mean, unit
// population std. Requires B >= 2. Throws InvalidInput on non-finite input.
MatD normalize_columns(const MatD& z);

// C = Norm(z1)^T * Norm(z2) / B. Inputs are raw projections; standardization
// happens inside. Throws ShapeError on mismatched shapes.
MatD cross_correlation(const MatD& z1, const MatD& z2);

// Given dL/dC, accumulates dL/dz1 and dL/dz2 through the 1/B scaling and the
// column standardization. Sigma-floored columns receive zero gradient.
void cross_correlation_backward(const MatD& z1, const MatD& z2, const MatD& dC,
                                MatD& dz1, MatD& dz2);

struct BtParts {
    double value;       // diag_mse + lambda * offdiag_ss
    double diag_mse;    // sum_i (1 - C_ii)^2
    double offdiag_ss;  // sum_{i != j} C_ij^2 (unweighted)
};
BtParts bt_loss(const MatD& C, const Hyperparams& h);
MatD bt_loss_grad(const MatD& C, const Hyperparams& h);  // dL/dC

// Row form: cosine in [-1, 1]. Throws DegenerateVector (naming the row) when
// either argument has near-zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
// Batch form: mean over rows of the row-wise cosine.
double cosine_similarity(const MatD& a, const MatD& b);

// L = 1/2 mean_rows(-cos(p1, sg(z2))) + 1/2 mean_rows(-cos(p2, sg(z1))).
// Gradients flow to the predictions only; z1/z2 are stop-gradded by contract.
double simsiam_loss(const MatD& p1, const MatD& p2, const MatD& z1, const MatD& z2,
                    MatD* dp1 = nullptr, MatD* dp2 = nullptr);

// Row form of the orthogonality distance: |cos(a, b) - xi|.
double ddl_distance(std::span<const double> a, std::span<const double> b, double xi);
// Batch form: mean over rows.
double ddl_distance(const MatD& a, const MatD& b, double xi);

// Symmetric form: distance on the DVR projection pair, gradients to both.
double ddl_symmetric(const MatD& zv1, const MatD& zv2, const Hyperparams& h,
                     MatD* dzv1 = nullptr, MatD* dzv2 = nullptr);

// Asymmetric form: 1/2 D(p1, sg(z2)) + 1/2 D(p2, sg(z1)). dzv1/dzv2, when
// requested, are filled with exact zeros (the stop-gradient contract).
double ddl_asymmetric(const MatD& pv1, const MatD& pv2, const MatD& zv1, const MatD& zv2,
                      const Hyperparams& h, MatD* dpv1 = nullptr, MatD* dpv2 = nullptr,
                      MatD* dzv1 = nullptr, MatD* dzv2 = nullptr);

struct LossReport {
    double total = 0.0;
    double dir_component = 0.0;
    double ddl_component = 0.0;
    // Mean |cos| over the DVR pairs the distance term supervises:
    // (z_V, z'_V) in the symmetric mode, the prediction/projection pairs in
    // the asymmetric mode.
    double mean_abs_cos_dvr = 0.0;
    double diag_mse = 0.0;    // symmetric only
    double offdiag_ss = 0.0;  // symmetric only
};

struct SymmetricGrads {
    MatD dzi1, dzi2, dzv1, dzv2;
};
// z gradients are identically zero in the asymmetric objective and therefore
// not represented.
struct AsymmetricGrads {
    MatD dpi1, dpi2, dpv1, dpv2;
};

LossReport total_loss_symmetric(const MatD& zi1, const MatD& zi2,
                                const MatD& zv1, const MatD& zv2,
                                const Hyperparams& h, SymmetricGrads* grads = nullptr);

LossReport total_loss_asymmetric(const MatD& pi1, const MatD& pi2,
                                 const MatD& zi1, const MatD& zi2,
                                 const MatD& pv1, const MatD& pv2,
                                 const MatD& zv1, const MatD& zv2,
                                 const Hyperparams& h, AsymmetricGrads* grads = nullptr);

} // namespace ddcl::losses
