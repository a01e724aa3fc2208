#include "ddcl/model.hpp"

#include <cmath>

#include "ddcl/kernels.hpp"
#include "ddcl/representation.hpp"
#include "ddcl/threadpool.hpp"

namespace ddcl::model {

namespace k = ddcl::kernels;

namespace {

void he_normal(std::vector<float>& w, std::size_t fan_in, Rng& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : w) v = static_cast<float>(rng.normal(0.0, stddev));
}

} // namespace

// ---- LinearLayer ----

void LinearLayer::init(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
    in = in_dim;
    out = out_dim;
    w.init(in * out);
    b.init(out);
    he_normal(w.v, in, rng);
}

MatF LinearLayer::forward(const MatF& x) const {
    if (x.cols() != in) throw ShapeError("LinearLayer: input width mismatch");
    MatF y(x.rows(), out);
    k::gemm_nt(x.rows(), out, in, x.data(), w.v.data(), y.data(), 0.0f);
    for (std::size_t i = 0; i < y.rows(); ++i)
        for (std::size_t j = 0; j < out; ++j) y(i, j) += b.v[j];
    return y;
}

MatF LinearLayer::backward(const MatF& dy, const MatF& x) {
    // dW += dy^T x ; db += colsum(dy) ; dx = dy W
    k::gemm_tn(out, in, x.rows(), dy.data(), x.data(), w.g.data(), 1.0f);
    for (std::size_t i = 0; i < dy.rows(); ++i)
        for (std::size_t j = 0; j < out; ++j) b.g[j] += dy(i, j);
    MatF dx(x.rows(), in);
    k::gemm_nn(x.rows(), in, out, dy.data(), w.v.data(), dx.data(), 0.0f);
    return dx;
}

void LinearLayer::collect(const std::string& prefix, std::vector<ParamRef>& ps) {
    ps.push_back({prefix + ".w", &w});
    ps.push_back({prefix + ".b", &b});
}

// ---- BatchNormLayer ----

void BatchNormLayer::init(std::size_t ch, std::size_t sp) {
    channels = ch;
    spatial = sp;
    gamma.init(ch);
    beta.init(ch);
    std::fill(gamma.v.begin(), gamma.v.end(), 1.0f);
    running_mean.assign(ch, 0.0f);
    running_var.assign(ch, 1.0f);
}

MatF BatchNormLayer::forward_train(const MatF& x, Cache& cache) {
    const std::size_t B = x.rows();
    const std::size_t n = B * spatial;
    MatF y(B, x.cols());
    cache.xhat = MatF(B, x.cols());
    cache.inv_std.assign(channels, 0.0f);
    for (std::size_t c = 0; c < channels; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < B; ++i) {
            const float* row = x.row(i) + c * spatial;
            for (std::size_t s = 0; s < spatial; ++s) mean += row[s];
        }
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < B; ++i) {
            const float* row = x.row(i) + c * spatial;
            for (std::size_t s = 0; s < spatial; ++s) {
                const double d = row[s] - mean;
                var += d * d;
            }
        }
        var /= static_cast<double>(n);  // biased, used for normalization
        const double inv = 1.0 / std::sqrt(var + eps);
        cache.inv_std[c] = static_cast<float>(inv);

        const double unbiased = n > 1 ? var * static_cast<double>(n) / static_cast<double>(n - 1) : var;
        running_mean[c] = static_cast<float>((1.0 - momentum) * running_mean[c] + momentum * mean);
        running_var[c] = static_cast<float>((1.0 - momentum) * running_var[c] + momentum * unbiased);

        const float gm = gamma.v[c], bt = beta.v[c];
        for (std::size_t i = 0; i < B; ++i) {
            const float* row = x.row(i) + c * spatial;
            float* xh = cache.xhat.row(i) + c * spatial;
            float* yr = y.row(i) + c * spatial;
            for (std::size_t s = 0; s < spatial; ++s) {
                xh[s] = static_cast<float>((row[s] - mean) * inv);
                yr[s] = gm * xh[s] + bt;
            }
        }
    }
    return y;
}

MatF BatchNormLayer::forward_eval(const MatF& x) const {
    MatF y(x.rows(), x.cols());
    for (std::size_t c = 0; c < channels; ++c) {
        const float inv = 1.0f / std::sqrt(running_var[c] + eps);
        const float gm = gamma.v[c], bt = beta.v[c], mu = running_mean[c];
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const float* row = x.row(i) + c * spatial;
            float* yr = y.row(i) + c * spatial;
            for (std::size_t s = 0; s < spatial; ++s)
                yr[s] = gm * (row[s] - mu) * inv + bt;
        }
    }
    return y;
}

MatF BatchNormLayer::backward(const MatF& dy, const Cache& cache) {
    const std::size_t B = dy.rows();
    const std::size_t n = B * spatial;
    MatF dx(B, dy.cols());
    for (std::size_t c = 0; c < channels; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t i = 0; i < B; ++i) {
            const float* g = dy.row(i) + c * spatial;
            const float* xh = cache.xhat.row(i) + c * spatial;
            for (std::size_t s = 0; s < spatial; ++s) {
                sum_dy += g[s];
                sum_dy_xhat += static_cast<double>(g[s]) * xh[s];
            }
        }
        gamma.g[c] += static_cast<float>(sum_dy_xhat);
        beta.g[c] += static_cast<float>(sum_dy);

        const double gm = gamma.v[c];
        const double inv = cache.inv_std[c];
        const double mean_dy = sum_dy / static_cast<double>(n);
        const double mean_dy_xhat = sum_dy_xhat / static_cast<double>(n);
        for (std::size_t i = 0; i < B; ++i) {
            const float* g = dy.row(i) + c * spatial;
            const float* xh = cache.xhat.row(i) + c * spatial;
            float* d = dx.row(i) + c * spatial;
            for (std::size_t s = 0; s < spatial; ++s)
                d[s] = static_cast<float>(gm * inv * (g[s] - mean_dy - xh[s] * mean_dy_xhat));
        }
    }
    return dx;
}

void BatchNormLayer::collect(const std::string& prefix, std::vector<ParamRef>& ps,
                             std::vector<BufferRef>& bs) {
    ps.push_back({prefix + ".gamma", &gamma});
    ps.push_back({prefix + ".beta", &beta});
    bs.push_back({prefix + ".running_mean", &running_mean});
    bs.push_back({prefix + ".running_var", &running_var});
}

// ---- ConvLayer ----

void ConvLayer::init(std::size_t ic, std::size_t oc, std::size_t h, std::size_t wdt, Rng& rng) {
    in_c = ic;
    out_c = oc;
    in_h = h;
    in_w = wdt;
    out_h = (h + 1) / 2;
    out_w = (wdt + 1) / 2;
    w.init(oc * ic * 9);
    b.init(oc);
    he_normal(w.v, ic * 9, rng);
}

MatF ConvLayer::forward(const MatF& x, Cache* cache) const {
    const std::size_t B = x.rows();
    const std::size_t hw = out_h * out_w;
    const std::size_t kdim = in_c * 9;
    MatF y(B, out_c * hw);
    if (cache) cache->cols.assign(B, MatF());
    MatF local_col;
    for (std::size_t img = 0; img < B; ++img) {
        MatF& col = cache ? cache->cols[img] : local_col;
        col = MatF(hw, kdim);
        const float* xp = x.row(img);
        for (std::size_t oy = 0; oy < out_h; ++oy)
            for (std::size_t ox = 0; ox < out_w; ++ox) {
                float* crow = col.row(oy * out_w + ox);
                for (std::size_t ic = 0; ic < in_c; ++ic) {
                    const float* plane = xp + ic * in_h * in_w;
                    for (int ky = 0; ky < 3; ++ky) {
                        const long sy = static_cast<long>(2 * oy) + ky - 1;
                        for (int kx = 0; kx < 3; ++kx) {
                            const long sx = static_cast<long>(2 * ox) + kx - 1;
                            float v = 0.0f;
                            if (sy >= 0 && sx >= 0 && sy < static_cast<long>(in_h) &&
                                sx < static_cast<long>(in_w))
                                v = plane[sy * in_w + sx];
                            crow[ic * 9 + ky * 3 + kx] = v;
                        }
                    }
                }
            }
        float* yp = y.row(img);
        k::gemm_nt(out_c, hw, kdim, w.v.data(), col.data(), yp, 0.0f);
        for (std::size_t oc = 0; oc < out_c; ++oc) {
            float* plane = yp + oc * hw;
            for (std::size_t s = 0; s < hw; ++s) plane[s] += b.v[oc];
        }
    }
    return y;
}

MatF ConvLayer::backward(const MatF& dy, const Cache& cache) {
    const std::size_t B = dy.rows();
    const std::size_t hw = out_h * out_w;
    const std::size_t kdim = in_c * 9;
    MatF dx(B, in_c * in_h * in_w, 0.0f);
    MatF dcol(hw, kdim);
    for (std::size_t img = 0; img < B; ++img) {
        const float* dyp = dy.row(img);
        // dW += dy * col ; db += rowsum(dy)
        k::gemm_nn(out_c, kdim, hw, dyp, cache.cols[img].data(), w.g.data(), 1.0f);
        for (std::size_t oc = 0; oc < out_c; ++oc)
            b.g[oc] += k::sum(dyp + oc * hw, hw);
        // dcol = dy^T * W, then scatter back (col2im)
        k::gemm_tn(hw, kdim, out_c, dyp, w.v.data(), dcol.data(), 0.0f);
        float* dxp = dx.row(img);
        for (std::size_t oy = 0; oy < out_h; ++oy)
            for (std::size_t ox = 0; ox < out_w; ++ox) {
                const float* crow = dcol.row(oy * out_w + ox);
                for (std::size_t ic = 0; ic < in_c; ++ic) {
                    float* plane = dxp + ic * in_h * in_w;
                    for (int ky = 0; ky < 3; ++ky) {
                        const long sy = static_cast<long>(2 * oy) + ky - 1;
                        if (sy < 0 || sy >= static_cast<long>(in_h)) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const long sx = static_cast<long>(2 * ox) + kx - 1;
                            if (sx < 0 || sx >= static_cast<long>(in_w)) continue;
                            plane[sy * in_w + sx] += crow[ic * 9 + ky * 3 + kx];
                        }
                    }
                }
            }
    }
    return dx;
}

void ConvLayer::collect(const std::string& prefix, std::vector<ParamRef>& ps) {
    ps.push_back({prefix + ".w", &w});
    ps.push_back({prefix + ".b", &b});
}

// ---- Mlp ----

Mlp Mlp::projector(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng) {
    Mlp m;
    m.fc.resize(3);
    m.bn.resize(3);
    m.relu_after = {true, true, false};
    m.fc[0].init(in, hidden, rng);
    m.fc[1].init(hidden, hidden, rng);
    m.fc[2].init(hidden, out, rng);
    m.bn[0].init(hidden, 1);
    m.bn[1].init(hidden, 1);
    m.bn[2].init(out, 1);
    return m;
}

Mlp Mlp::predictor(std::size_t dim, std::size_t bottleneck, Rng& rng) {
    Mlp m;
    m.fc.resize(2);
    m.bn.resize(1);
    m.relu_after = {true, false};
    m.fc[0].init(dim, bottleneck, rng);
    m.fc[1].init(bottleneck, dim, rng);
    m.bn[0].init(bottleneck, 1);
    // a dead bottleneck row would emit an exact zero prediction and break the
    // cosine; the output bias keeps every row's norm positive
    std::fill(m.fc[1].b.v.begin(), m.fc[1].b.v.end(), 0.01f);
    return m;
}

MatF Mlp::forward_train(const MatF& x, Cache& cache) {
    cache.fc_in.clear();
    cache.relu_in.clear();
    cache.bn.assign(bn.size(), BatchNormLayer::Cache{});
    MatF h = x;
    for (std::size_t i = 0; i < fc.size(); ++i) {
        cache.fc_in.push_back(h);
        h = fc[i].forward(h);
        if (i < bn.size()) h = bn[i].forward_train(h, cache.bn[i]);
        if (relu_after[i]) {
            cache.relu_in.push_back(h);
            MatF r(h.rows(), h.cols());
            k::relu_forward(h.data(), r.data(), h.size());
            h = r;
        } else {
            cache.relu_in.emplace_back();
        }
    }
    return h;
}

MatF Mlp::forward_eval(const MatF& x) const {
    MatF h = x;
    for (std::size_t i = 0; i < fc.size(); ++i) {
        h = fc[i].forward(h);
        if (i < bn.size()) h = bn[i].forward_eval(h);
        if (relu_after[i]) {
            MatF r(h.rows(), h.cols());
            k::relu_forward(h.data(), r.data(), h.size());
            h = r;
        }
    }
    return h;
}

MatF Mlp::backward(const MatF& dy, const Cache& cache) {
    MatF g = dy;
    for (std::size_t idx = fc.size(); idx-- > 0;) {
        if (relu_after[idx]) {
            const MatF& pre = cache.relu_in[idx];
            MatF masked(g.rows(), g.cols());
            k::relu_backward(pre.data(), g.data(), masked.data(), g.size());
            g = masked;
        }
        if (idx < bn.size()) g = bn[idx].backward(g, cache.bn[idx]);
        g = fc[idx].backward(g, cache.fc_in[idx]);
    }
    return g;
}

void Mlp::collect(const std::string& prefix, std::vector<ParamRef>& ps,
                  std::vector<BufferRef>& bs) {
    for (std::size_t i = 0; i < fc.size(); ++i)
        fc[i].collect(prefix + ".fc" + std::to_string(i), ps);
    for (std::size_t i = 0; i < bn.size(); ++i)
        bn[i].collect(prefix + ".bn" + std::to_string(i), ps, bs);
}

// ---- Net ----

Net::Net(const ModelConfig& cfg, bool asymmetric, Rng& init_rng)
    : cfg_(cfg), asymmetric_(asymmetric) {
    if (cfg.arch != "tiny_cnn")
        throw InvalidInput("Net: arch '" + cfg.arch + "' is not available in this build");
    d_i_ = repr::dir_len(cfg.output_dim, cfg.dr);

    std::size_t h = cfg.input_size, w = cfg.input_size, c = cfg.input_channels;
    conv_.resize(cfg.conv_channels.size());
    bn_.resize(cfg.conv_channels.size());
    for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i) {
        conv_[i].init(c, cfg.conv_channels[i], h, w, init_rng);
        bn_[i].init(cfg.conv_channels[i], conv_[i].out_h * conv_[i].out_w);
        c = cfg.conv_channels[i];
        h = conv_[i].out_h;
        w = conv_[i].out_w;
    }
    last_h_ = h;
    last_w_ = w;
    fc_.init(c, cfg.output_dim, init_rng);

    const std::size_t d_v = cfg.output_dim - d_i_;
    proj_i_ = Mlp::projector(d_i_, cfg.proj_hidden, cfg.head_dim, init_rng);
    proj_v_ = Mlp::projector(d_v, cfg.proj_hidden, cfg.head_dim, init_rng);
    if (asymmetric_) {
        const std::size_t bottleneck = std::max<std::size_t>(1, cfg.head_dim / 2);
        pred_i_ = Mlp::predictor(cfg.head_dim, bottleneck, init_rng);
        pred_v_ = Mlp::predictor(cfg.head_dim, bottleneck, init_rng);
    }
}

MatF Net::to_input(const std::vector<const Image*>& images) const {
    const std::size_t hw = cfg_.input_size * cfg_.input_size;
    MatF x(images.size(), cfg_.input_channels * hw);
    for (std::size_t i = 0; i < images.size(); ++i) {
        const Image& im = *images[i];
        if (im.height != cfg_.input_size || im.width != cfg_.input_size ||
            im.channels != cfg_.input_channels)
            throw ShapeError("Net::to_input: image does not match configured input size");
        float* row = x.row(i);
        for (std::size_t c = 0; c < im.channels; ++c)
            for (std::size_t y = 0; y < im.height; ++y)
                for (std::size_t xx = 0; xx < im.width; ++xx)
                    row[c * hw + y * im.width + xx] = im.at(y, xx, c);
    }
    return x;
}

BranchOut Net::forward_train(const MatF& images, BranchCache& cache) {
    cache.conv.assign(conv_.size(), ConvLayer::Cache{});
    cache.bn.assign(bn_.size(), BatchNormLayer::Cache{});
    cache.relu_in.assign(conv_.size(), MatF());
    MatF h = images;
    for (std::size_t i = 0; i < conv_.size(); ++i) {
        h = conv_[i].forward(h, &cache.conv[i]);
        h = bn_[i].forward_train(h, cache.bn[i]);
        cache.relu_in[i] = h;
        MatF r(h.rows(), h.cols());
        k::relu_forward(h.data(), r.data(), h.size());
        h = r;
    }
    cache.gap_in = h;
    // global average pool
    const std::size_t hw = last_h_ * last_w_;
    const std::size_t ch = cfg_.conv_channels.back();
    MatF pooled(h.rows(), ch);
    for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t c = 0; c < ch; ++c)
            pooled(i, c) = k::sum(h.row(i) + c * hw, hw) / static_cast<float>(hw);
    cache.fc_in = pooled;
    MatF y = fc_.forward(pooled);
    cache.y = y;

    BranchOut out;
    out.y = y;
    MatF yi = repr::split_dir(y, cfg_.dr);
    MatF yv = repr::split_dvr(y, cfg_.dr);
    out.heads.zi = proj_i_.forward_train(yi, cache.proj_i);
    out.heads.zv = proj_v_.forward_train(yv, cache.proj_v);
    if (asymmetric_) {
        out.heads.pi = pred_i_.forward_train(out.heads.zi, cache.pred_i);
        out.heads.pv = pred_v_.forward_train(out.heads.zv, cache.pred_v);
    }
    return out;
}

MatF Net::conv_stack_eval(const MatF& images) const {
    MatF h = images;
    for (std::size_t i = 0; i < conv_.size(); ++i) {
        h = conv_[i].forward(h, nullptr);
        h = bn_[i].forward_eval(h);
        MatF r(h.rows(), h.cols());
        k::relu_forward(h.data(), r.data(), h.size());
        h = r;
    }
    return h;
}

MatF Net::encode_eval(const MatF& images) const {
    MatF h = conv_stack_eval(images);
    const std::size_t hw = last_h_ * last_w_;
    const std::size_t ch = cfg_.conv_channels.back();
    MatF pooled(h.rows(), ch);
    for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t c = 0; c < ch; ++c)
            pooled(i, c) = k::sum(h.row(i) + c * hw, hw) / static_cast<float>(hw);
    return fc_.forward(pooled);
}

HeadsOut Net::heads_eval(const MatF& y) const {
    HeadsOut out;
    out.zi = proj_i_.forward_eval(repr::split_dir(y, cfg_.dr));
    out.zv = proj_v_.forward_eval(repr::split_dvr(y, cfg_.dr));
    if (asymmetric_) {
        out.pi = pred_i_.forward_eval(out.zi);
        out.pv = pred_v_.forward_eval(out.zv);
    }
    return out;
}

BranchOut Net::forward_eval(const MatF& images) const {
    BranchOut out;
    out.y = encode_eval(images);
    out.heads = heads_eval(out.y);
    return out;
}

void Net::backward(const BranchCache& cache, const MatF& dzi, const MatF& dzv,
                   const MatF& dpi, const MatF& dpv) {
    const std::size_t B = cache.y.rows();
    MatF dzi_total = dzi.empty() ? MatF(B, cfg_.head_dim, 0.0f) : dzi;
    MatF dzv_total = dzv.empty() ? MatF(B, cfg_.head_dim, 0.0f) : dzv;
    if (asymmetric_ && !dpi.empty()) {
        MatF through = pred_i_.backward(dpi, cache.pred_i);
        for (std::size_t i = 0; i < through.size(); ++i)
            dzi_total.storage()[i] += through.storage()[i];
    }
    if (asymmetric_ && !dpv.empty()) {
        MatF through = pred_v_.backward(dpv, cache.pred_v);
        for (std::size_t i = 0; i < through.size(); ++i)
            dzv_total.storage()[i] += through.storage()[i];
    }
    MatF dyi = proj_i_.backward(dzi_total, cache.proj_i);
    MatF dyv = proj_v_.backward(dzv_total, cache.proj_v);

    MatF dy(B, cfg_.output_dim);
    for (std::size_t i = 0; i < B; ++i) {
        for (std::size_t j = 0; j < d_i_; ++j) dy(i, j) = dyi(i, j);
        for (std::size_t j = d_i_; j < cfg_.output_dim; ++j) dy(i, j) = dyv(i, j - d_i_);
    }

    MatF dpooled = fc_.backward(dy, cache.fc_in);
    // GAP backward: broadcast mean gradient over the spatial cells
    const std::size_t hw = last_h_ * last_w_;
    const std::size_t ch = cfg_.conv_channels.back();
    MatF dgap(B, ch * hw);
    const float inv_hw = 1.0f / static_cast<float>(hw);
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t c = 0; c < ch; ++c) {
            const float g = dpooled(i, c) * inv_hw;
            float* row = dgap.row(i) + c * hw;
            for (std::size_t s = 0; s < hw; ++s) row[s] = g;
        }

    MatF grad = dgap;
    for (std::size_t i = conv_.size(); i-- > 0;) {
        MatF masked(grad.rows(), grad.cols());
        k::relu_backward(cache.relu_in[i].data(), grad.data(), masked.data(), grad.size());
        grad = bn_[i].backward(masked, cache.bn[i]);
        grad = conv_[i].backward(grad, cache.conv[i]);
    }
}

void Net::zero_grads() {
    for (auto& p : params()) std::fill(p.t->g.begin(), p.t->g.end(), 0.0f);
}

std::vector<int> Net::attention_groups() const {
    const std::size_t ch = cfg_.conv_channels.back();
    const std::size_t d = cfg_.output_dim;
    std::vector<int> group(ch, 1);
    for (std::size_t c = 0; c < ch; ++c) {
        double aff_i = 0.0, aff_v = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
            const double wv = std::fabs(fc_.w.v[r * ch + c]);
            if (r < d_i_)
                aff_i += wv;
            else
                aff_v += wv;
        }
        aff_i /= static_cast<double>(d_i_);
        aff_v /= static_cast<double>(d - d_i_);
        group[c] = aff_i >= aff_v ? 1 : 2;
    }
    return group;
}

MatF Net::attention_energy(const Image& x, int part) const {
    if (conv_.empty()) throw Error("attention_map: encoder has no convolutional stack");
    MatF input = to_input({&x});
    MatF feat = conv_stack_eval(input);
    const std::size_t hw = last_h_ * last_w_;
    const std::size_t ch = cfg_.conv_channels.back();
    const std::vector<int> group = attention_groups();
    MatF energy(last_h_, last_w_, 0.0f);
    for (std::size_t c = 0; c < ch; ++c) {
        if (part != 0 && group[c] != part) continue;
        const float* plane = feat.row(0) + c * hw;
        for (std::size_t s = 0; s < hw; ++s)
            energy.storage()[s] += plane[s] * plane[s];
    }
    return energy;
}

Image Net::attention_map(const Image& x, int part) const {
    MatF energy = attention_energy(x, part);
    float lo = energy.storage()[0], hi = lo;
    for (float v : energy.storage()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Image small(last_h_, last_w_, 1);
    const float range = hi - lo;
    for (std::size_t i = 0; i < energy.size(); ++i)
        small.pixels[i] = range > 1e-20f ? (energy.storage()[i] - lo) / range : 0.0f;
    return resize_bilinear(small, x.height, x.width);
}

std::vector<ParamRef> Net::params() {
    std::vector<ParamRef> ps;
    std::vector<BufferRef> bs;
    for (std::size_t i = 0; i < conv_.size(); ++i) {
        conv_[i].collect("enc.block" + std::to_string(i) + ".conv", ps);
        bn_[i].collect("enc.block" + std::to_string(i) + ".bn", ps, bs);
    }
    fc_.collect("enc.fc", ps);
    proj_i_.collect("proj_i", ps, bs);
    proj_v_.collect("proj_v", ps, bs);
    if (asymmetric_) {
        pred_i_.collect("pred_i", ps, bs);
        pred_v_.collect("pred_v", ps, bs);
    }
    return ps;
}

std::vector<BufferRef> Net::buffers() {
    std::vector<ParamRef> ps;
    std::vector<BufferRef> bs;
    for (std::size_t i = 0; i < conv_.size(); ++i) {
        conv_[i].collect("enc.block" + std::to_string(i) + ".conv", ps);
        bn_[i].collect("enc.block" + std::to_string(i) + ".bn", ps, bs);
    }
    fc_.collect("enc.fc", ps);
    proj_i_.collect("proj_i", ps, bs);
    proj_v_.collect("proj_v", ps, bs);
    if (asymmetric_) {
        pred_i_.collect("pred_i", ps, bs);
        pred_v_.collect("pred_v", ps, bs);
    }
    return bs;
}

} // namespace ddcl::model
