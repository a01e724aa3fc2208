#include "ddcl/losses.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace ddcl::losses {

namespace {

void require_finite(const MatD& m, const char* what) {
    if (!m.all_finite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

void require_same_shape(const MatD& a, const MatD& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": shape mismatch " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

struct ColumnStats {
    std::vector<double> mean, sigma;
    std::vector<bool> floored;
};

ColumnStats column_stats(const MatD& z) {
    const std::size_t B = z.rows(), D = z.cols();
    ColumnStats s;
    s.mean.assign(D, 0.0);
    s.sigma.assign(D, 0.0);
    s.floored.assign(D, false);
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t j = 0; j < D; ++j) s.mean[j] += z(i, j);
    for (std::size_t j = 0; j < D; ++j) s.mean[j] /= static_cast<double>(B);
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t j = 0; j < D; ++j) {
            const double d = z(i, j) - s.mean[j];
            s.sigma[j] += d * d;
        }
    for (std::size_t j = 0; j < D; ++j) {
        s.sigma[j] = std::sqrt(s.sigma[j] / static_cast<double>(B));
        s.floored[j] = s.sigma[j] < kSigmaFloor;
    }
    return s;
}

MatD apply_stats(const MatD& z, const ColumnStats& s) {
    MatD out(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < z.cols(); ++j)
            out(i, j) = s.floored[j] ? 0.0 : (z(i, j) - s.mean[j]) / s.sigma[j];
    return out;
}

double row_norm(const double* v, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += v[i] * v[i];
    return std::sqrt(acc);
}

double row_dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

// Row cosine with norms precomputed. Degenerate rows raise before this runs.
double row_cosine(const double* a, const double* b, std::size_t n, double na, double nb) {
    return row_dot(a, b, n) / (na * nb);
}

void check_row_norm(double n, std::size_t row, const char* what) {
    if (n < kNormFloor)
        throw DegenerateVector(std::string(what) + ": near-zero norm at row " +
                               std::to_string(row));
}

// d(cos)/da = b/(|a||b|) - cos * a/|a|^2, accumulated with weight w.
void accumulate_cosine_grad(const double* a, const double* b, std::size_t n,
                            double na, double nb, double cosv, double w, double* da) {
    const double inv = 1.0 / (na * nb);
    const double s = cosv / (na * na);
    for (std::size_t i = 0; i < n; ++i) da[i] += w * (b[i] * inv - s * a[i]);
}

// mean over rows of -cos(p_i, t_i); gradient w.r.t. p only (t is detached).
double negative_cosine_mean(const MatD& p, const MatD& t, double gw, MatD* dp,
                            const char* what) {
    const std::size_t B = p.rows(), D = p.cols();
    double acc = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        const double np = row_norm(p.row(i), D);
        const double nt = row_norm(t.row(i), D);
        check_row_norm(np, i, what);
        check_row_norm(nt, i, what);
        const double c = row_cosine(p.row(i), t.row(i), D, np, nt);
        acc += -c;
        if (dp)
            accumulate_cosine_grad(p.row(i), t.row(i), D, np, nt, c,
                                   -gw / static_cast<double>(B), dp->row(i));
    }
    return acc / static_cast<double>(B);
}

// mean over rows of |cos(a_i, b_i) - xi|; gradients optional per argument.
double abs_cos_distance_mean(const MatD& a, const MatD& b, double xi, double gw,
                             MatD* da, MatD* db, const char* what,
                             double* mean_abs_cos = nullptr) {
    const std::size_t B = a.rows(), D = a.cols();
    double acc = 0.0, abs_cos_acc = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        const double na = row_norm(a.row(i), D);
        const double nb = row_norm(b.row(i), D);
        check_row_norm(na, i, what);
        check_row_norm(nb, i, what);
        const double c = row_cosine(a.row(i), b.row(i), D, na, nb);
        const double diff = c - xi;
        acc += std::fabs(diff);
        abs_cos_acc += std::fabs(c);
        // subgradient 0 exactly at cos == xi
        const double sgn = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        const double w = gw * sgn / static_cast<double>(B);
        if (da) accumulate_cosine_grad(a.row(i), b.row(i), D, na, nb, c, w, da->row(i));
        if (db) accumulate_cosine_grad(b.row(i), a.row(i), D, nb, na, c, w, db->row(i));
    }
    if (mean_abs_cos) *mean_abs_cos = abs_cos_acc / static_cast<double>(B);
    return acc / static_cast<double>(B);
}

void zero_like(MatD* g, const MatD& ref) {
    if (!g) return;
    *g = MatD(ref.rows(), ref.cols(), 0.0);
}

} // namespace

MatD normalize_columns(const MatD& z) {
    require_finite(z, "normalize_columns");
    if (z.rows() < 2)
        throw InvalidInput("normalize_columns: batch size must be >= 2, got " +
                           std::to_string(z.rows()));
    return apply_stats(z, column_stats(z));
}

MatD cross_correlation(const MatD& z1, const MatD& z2) {
    require_same_shape(z1, z2, "cross_correlation");
    const MatD n1 = normalize_columns(z1);
    const MatD n2 = normalize_columns(z2);
    const std::size_t B = z1.rows(), D = z1.cols();
    MatD C(D, D, 0.0);
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t a = 0; a < D; ++a) {
            const double v = n1(i, a);
            if (v == 0.0) continue;
            for (std::size_t b = 0; b < D; ++b) C(a, b) += v * n2(i, b);
        }
    const double invB = 1.0 / static_cast<double>(B);
    for (std::size_t a = 0; a < D; ++a)
        for (std::size_t b = 0; b < D; ++b) C(a, b) *= invB;
    return C;
}

void cross_correlation_backward(const MatD& z1, const MatD& z2, const MatD& dC,
                                MatD& dz1, MatD& dz2) {
    require_same_shape(z1, z2, "cross_correlation_backward");
    const std::size_t B = z1.rows(), D = z1.cols();
    if (dC.rows() != D || dC.cols() != D)
        throw ShapeError("cross_correlation_backward: dC must be DxD");

    const ColumnStats s1 = column_stats(z1);
    const ColumnStats s2 = column_stats(z2);
    const MatD n1 = apply_stats(z1, s1);
    const MatD n2 = apply_stats(z2, s2);
    const double invB = 1.0 / static_cast<double>(B);

    // dN1 = N2 * dC^T / B ; dN2 = N1 * dC / B
    MatD dn1(B, D, 0.0), dn2(B, D, 0.0);
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t a = 0; a < D; ++a) {
            double acc1 = 0.0, acc2 = 0.0;
            for (std::size_t b = 0; b < D; ++b) {
                acc1 += n2(i, b) * dC(a, b);
                acc2 += n1(i, b) * dC(b, a);
            }
            dn1(i, a) = acc1 * invB;
            dn2(i, a) = acc2 * invB;
        }

    // Standardization backward per column (population std, no epsilon):
    // dz = (g - mean(g) - n * mean(g .* n)) / sigma
    auto backprop_norm = [B, D](const MatD& n, const ColumnStats& s, const MatD& g, MatD& dz) {
        if (dz.rows() != B || dz.cols() != D) dz = MatD(B, D, 0.0);
        for (std::size_t j = 0; j < D; ++j) {
            if (s.floored[j]) {
                for (std::size_t i = 0; i < B; ++i) dz(i, j) += 0.0;
                continue;
            }
            double gbar = 0.0, gn = 0.0;
            for (std::size_t i = 0; i < B; ++i) {
                gbar += g(i, j);
                gn += g(i, j) * n(i, j);
            }
            gbar /= static_cast<double>(B);
            gn /= static_cast<double>(B);
            const double inv_sigma = 1.0 / s.sigma[j];
            for (std::size_t i = 0; i < B; ++i)
                dz(i, j) += (g(i, j) - gbar - n(i, j) * gn) * inv_sigma;
        }
    };
    backprop_norm(n1, s1, dn1, dz1);
    backprop_norm(n2, s2, dn2, dz2);
}

BtParts bt_loss(const MatD& C, const Hyperparams& h) {
    require_finite(C, "bt_loss");
    if (C.rows() != C.cols()) throw ShapeError("bt_loss: C must be square");
    double diag = 0.0, off = 0.0;
    for (std::size_t i = 0; i < C.rows(); ++i)
        for (std::size_t j = 0; j < C.cols(); ++j) {
            if (i == j) {
                const double d = 1.0 - C(i, j);
                diag += d * d;
            } else {
                off += C(i, j) * C(i, j);
            }
        }
    return {diag + h.lambda_offdiag * off, diag, off};
}

MatD bt_loss_grad(const MatD& C, const Hyperparams& h) {
    if (C.rows() != C.cols()) throw ShapeError("bt_loss_grad: C must be square");
    MatD g(C.rows(), C.cols());
    for (std::size_t i = 0; i < C.rows(); ++i)
        for (std::size_t j = 0; j < C.cols(); ++j)
            g(i, j) = i == j ? -2.0 * (1.0 - C(i, j)) : 2.0 * h.lambda_offdiag * C(i, j);
    return g;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("cosine_similarity: length mismatch");
    const double na = row_norm(a.data(), a.size());
    const double nb = row_norm(b.data(), b.size());
    check_row_norm(na, 0, "cosine_similarity");
    check_row_norm(nb, 0, "cosine_similarity");
    return row_cosine(a.data(), b.data(), a.size(), na, nb);
}

double cosine_similarity(const MatD& a, const MatD& b) {
    require_same_shape(a, b, "cosine_similarity");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double na = row_norm(a.row(i), a.cols());
        const double nb = row_norm(b.row(i), b.cols());
        check_row_norm(na, i, "cosine_similarity");
        check_row_norm(nb, i, "cosine_similarity");
        acc += row_cosine(a.row(i), b.row(i), a.cols(), na, nb);
    }
    return acc / static_cast<double>(a.rows());
}

double simsiam_loss(const MatD& p1, const MatD& p2, const MatD& z1, const MatD& z2,
                    MatD* dp1, MatD* dp2) {
    require_same_shape(p1, p2, "simsiam_loss");
    require_same_shape(p1, z1, "simsiam_loss");
    require_same_shape(p1, z2, "simsiam_loss");
    require_finite(p1, "simsiam_loss");
    require_finite(p2, "simsiam_loss");
    require_finite(z1, "simsiam_loss");
    require_finite(z2, "simsiam_loss");
    zero_like(dp1, p1);
    zero_like(dp2, p2);
    const double l1 = negative_cosine_mean(p1, z2, 0.5, dp1, "simsiam_loss");
    const double l2 = negative_cosine_mean(p2, z1, 0.5, dp2, "simsiam_loss");
    return 0.5 * l1 + 0.5 * l2;
}

double ddl_distance(std::span<const double> a, std::span<const double> b, double xi) {
    return std::fabs(cosine_similarity(a, b) - xi);
}

double ddl_distance(const MatD& a, const MatD& b, double xi) {
    require_same_shape(a, b, "ddl_distance");
    return abs_cos_distance_mean(a, b, xi, 0.0, nullptr, nullptr, "ddl_distance");
}

double ddl_symmetric(const MatD& zv1, const MatD& zv2, const Hyperparams& h,
                     MatD* dzv1, MatD* dzv2) {
    require_same_shape(zv1, zv2, "ddl_symmetric");
    require_finite(zv1, "ddl_symmetric");
    require_finite(zv2, "ddl_symmetric");
    zero_like(dzv1, zv1);
    zero_like(dzv2, zv2);
    return abs_cos_distance_mean(zv1, zv2, h.xi, 1.0, dzv1, dzv2, "ddl_symmetric");
}

double ddl_asymmetric(const MatD& pv1, const MatD& pv2, const MatD& zv1, const MatD& zv2,
                      const Hyperparams& h, MatD* dpv1, MatD* dpv2,
                      MatD* dzv1, MatD* dzv2) {
    require_same_shape(pv1, pv2, "ddl_asymmetric");
    require_same_shape(pv1, zv1, "ddl_asymmetric");
    require_same_shape(pv1, zv2, "ddl_asymmetric");
    require_finite(pv1, "ddl_asymmetric");
    require_finite(pv2, "ddl_asymmetric");
    require_finite(zv1, "ddl_asymmetric");
    require_finite(zv2, "ddl_asymmetric");
    zero_like(dpv1, pv1);
    zero_like(dpv2, pv2);
    zero_like(dzv1, zv1);  // stop-grad: stays exactly zero
    zero_like(dzv2, zv2);
    const double d1 =
        abs_cos_distance_mean(pv1, zv2, h.xi, 0.5, dpv1, nullptr, "ddl_asymmetric");
    const double d2 =
        abs_cos_distance_mean(pv2, zv1, h.xi, 0.5, dpv2, nullptr, "ddl_asymmetric");
    return 0.5 * d1 + 0.5 * d2;
}

LossReport total_loss_symmetric(const MatD& zi1, const MatD& zi2,
                                const MatD& zv1, const MatD& zv2,
                                const Hyperparams& h, SymmetricGrads* grads) {
    LossReport r;
    const MatD C = cross_correlation(zi1, zi2);
    const BtParts bt = bt_loss(C, h);
    r.dir_component = bt.value;
    r.diag_mse = bt.diag_mse;
    r.offdiag_ss = bt.offdiag_ss;

    MatD* dzv1 = grads ? &grads->dzv1 : nullptr;
    MatD* dzv2 = grads ? &grads->dzv2 : nullptr;
    r.ddl_component = ddl_symmetric(zv1, zv2, h, dzv1, dzv2);
    r.mean_abs_cos_dvr = 0.0;
    abs_cos_distance_mean(zv1, zv2, 0.0, 0.0, nullptr, nullptr, "total_loss_symmetric",
                          &r.mean_abs_cos_dvr);

    if (grads) {
        const MatD dC = bt_loss_grad(C, h);
        grads->dzi1 = MatD(zi1.rows(), zi1.cols(), 0.0);
        grads->dzi2 = MatD(zi2.rows(), zi2.cols(), 0.0);
        cross_correlation_backward(zi1, zi2, dC, grads->dzi1, grads->dzi2);
        // total = dir + gamma * ddl
        for (auto& v : grads->dzv1.storage()) v *= h.gamma;
        for (auto& v : grads->dzv2.storage()) v *= h.gamma;
    }
    r.total = r.dir_component + h.gamma * r.ddl_component;
    return r;
}

LossReport total_loss_asymmetric(const MatD& pi1, const MatD& pi2,
                                 const MatD& zi1, const MatD& zi2,
                                 const MatD& pv1, const MatD& pv2,
                                 const MatD& zv1, const MatD& zv2,
                                 const Hyperparams& h, AsymmetricGrads* grads) {
    LossReport r;
    MatD* dpi1 = grads ? &grads->dpi1 : nullptr;
    MatD* dpi2 = grads ? &grads->dpi2 : nullptr;
    MatD* dpv1 = grads ? &grads->dpv1 : nullptr;
    MatD* dpv2 = grads ? &grads->dpv2 : nullptr;
    r.dir_component = simsiam_loss(pi1, pi2, zi1, zi2, dpi1, dpi2);
    r.ddl_component = ddl_asymmetric(pv1, pv2, zv1, zv2, h, dpv1, dpv2);

    double mac1 = 0.0, mac2 = 0.0;
    abs_cos_distance_mean(pv1, zv2, 0.0, 0.0, nullptr, nullptr, "total_loss_asymmetric", &mac1);
    abs_cos_distance_mean(pv2, zv1, 0.0, 0.0, nullptr, nullptr, "total_loss_asymmetric", &mac2);
    r.mean_abs_cos_dvr = 0.5 * (mac1 + mac2);

    if (grads) {
        for (auto& v : grads->dpv1.storage()) v *= h.gamma;
        for (auto& v : grads->dpv2.storage()) v *= h.gamma;
    }
    r.total = r.dir_component + h.gamma * r.ddl_component;
    return r;
}

} // namespace ddcl::losses
