#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddcl/image.hpp"
#include "ddcl/mat.hpp"
#include "ddcl/rng.hpp"

namespace ddcl::model {

// Trainable tensor: value, gradient, SGD momentum buffer.
struct Tensor {
    std::vector<float> v, g, m;
    void init(std::size_t n) {
        v.assign(n, 0.0f);
        g.assign(n, 0.0f);
        m.assign(n, 0.0f);
    }
    std::size_t size() const { return v.size(); }
};

struct ParamRef {
    std::string name;
    Tensor* t;
};
struct BufferRef {
    std::string name;
    std::vector<float>* v;
};

// ---- layers ----

struct LinearLayer {
    std::size_t in = 0, out = 0;
    Tensor w;  // [out][in]
    Tensor b;  // [out]
    void init(std::size_t in_dim, std::size_t out_dim, Rng& rng);
    MatF forward(const MatF& x) const;
    MatF backward(const MatF& dy, const MatF& x);  // accumulates grads, returns dx
    void collect(const std::string& prefix, std::vector<ParamRef>& ps);
};

// Per-channel batch normalization over rows x spatial. Layout: each row is a
// sample, columns are [channel][spatial] contiguous; spatial = 1 gives the 1d
// form, spatial = H*W the 2d form.
struct BatchNormLayer {
    std::size_t channels = 0, spatial = 1;
    Tensor gamma, beta;
    std::vector<float> running_mean, running_var;
    float momentum = 0.1f, eps = 1e-5f;

    struct Cache {
        MatF xhat;
        std::vector<float> inv_std;
    };

    void init(std::size_t ch, std::size_t sp);
    MatF forward_train(const MatF& x, Cache& cache);
    MatF forward_eval(const MatF& x) const;
    MatF backward(const MatF& dy, const Cache& cache);
    void collect(const std::string& prefix, std::vector<ParamRef>& ps,
                 std::vector<BufferRef>& bs);
};

// 3x3 stride-2 pad-1 convolution on CHW rows, fixed geometry per layer.
struct ConvLayer {
    std::size_t in_c = 0, out_c = 0, in_h = 0, in_w = 0, out_h = 0, out_w = 0;
    Tensor w;  // [out_c][in_c*9]
    Tensor b;  // [out_c]

    struct Cache {
        std::vector<MatF> cols;  // per image, [out_h*out_w][in_c*9]
    };

    void init(std::size_t ic, std::size_t oc, std::size_t h, std::size_t wdt, Rng& rng);
    MatF forward(const MatF& x, Cache* cache) const;
    MatF backward(const MatF& dy, const Cache& cache);
    void collect(const std::string& prefix, std::vector<ParamRef>& ps);
};

// ---- network ----

struct ModelConfig {
    std::string arch = "tiny_cnn";
    std::size_t input_size = 64;
    std::size_t input_channels = 3;
    std::vector<std::size_t> conv_channels = {16, 32, 64, 64};
    std::size_t output_dim = 64;  // d (representation length)
    double dr = 0.8;              // disentangling ratio
    std::size_t proj_hidden = 64;
    std::size_t head_dim = 16;    // projection/prediction output dimension
};

struct HeadsOut {
    MatF zi, zv, pi, pv;  // pi/pv empty in the symmetric architecture
};

struct BranchOut {
    MatF y;  // B x d representations
    HeadsOut heads;
};

// 3-layer projector (fc-bn-relu, fc-bn-relu, fc-bn) per part; 2-layer
// bottleneck predictor (fc-bn-relu, fc) per part in the asymmetric mode.
struct Mlp {
    std::vector<LinearLayer> fc;
    std::vector<BatchNormLayer> bn;   // bn[i] follows fc[i] when present
    std::vector<bool> relu_after;     // relu after bn[i]?

    struct Cache {
        std::vector<MatF> fc_in;
        std::vector<BatchNormLayer::Cache> bn;
        std::vector<MatF> relu_in;
    };

    static Mlp projector(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng);
    static Mlp predictor(std::size_t dim, std::size_t bottleneck, Rng& rng);
    MatF forward_train(const MatF& x, Cache& cache);
    MatF forward_eval(const MatF& x) const;
    MatF backward(const MatF& dy, const Cache& cache);
    void collect(const std::string& prefix, std::vector<ParamRef>& ps,
                 std::vector<BufferRef>& bs);
};

class Net {
public:
    Net(const ModelConfig& cfg, bool asymmetric, Rng& init_rng);

    struct BranchCache {
        std::vector<ConvLayer::Cache> conv;
        std::vector<BatchNormLayer::Cache> bn;
        std::vector<MatF> relu_in;   // bn output per block
        MatF gap_in;                 // last relu output
        MatF fc_in;                  // pooled features
        MatF y;                      // representations
        Mlp::Cache proj_i, proj_v, pred_i, pred_v;
    };

    // Train-mode forward (updates BN running statistics).
    BranchOut forward_train(const MatF& images, BranchCache& cache);
    // Eval-mode forward; safe to share across threads.
    BranchOut forward_eval(const MatF& images) const;
    MatF encode_eval(const MatF& images) const;  // representations only
    HeadsOut heads_eval(const MatF& y) const;

    // Accumulates parameter gradients for one branch. Upstream mats may be
    // empty (no gradient from that head). z gradients reach the encoder only
    // through the projector path; prediction gradients flow through the
    // predictors first.
    void backward(const BranchCache& cache, const MatF& dzi, const MatF& dzv,
                  const MatF& dpi, const MatF& dpv);
    void zero_grads();

    // Channel-group attention. part: 0 = full, 1 = DIR, 2 = DVR.
    MatF attention_energy(const Image& x, int part) const;  // out_h x out_w raw energy
    Image attention_map(const Image& x, int part) const;    // [0,1], input size

    std::vector<ParamRef> params();
    std::vector<BufferRef> buffers();

    const ModelConfig& config() const { return cfg_; }
    bool asymmetric() const { return asymmetric_; }
    std::size_t dir_dim() const { return d_i_; }

    // CHW-flattened rows from images (all must match the configured size).
    MatF to_input(const std::vector<const Image*>& images) const;

private:
    MatF conv_stack_eval(const MatF& images) const;
    std::vector<int> attention_groups() const;  // per-channel: 1 = DIR, 2 = DVR

    ModelConfig cfg_;
    bool asymmetric_ = true;
    std::size_t d_i_ = 0;

    std::vector<ConvLayer> conv_;
    std::vector<BatchNormLayer> bn_;
    LinearLayer fc_;
    Mlp proj_i_, proj_v_, pred_i_, pred_v_;
    std::size_t last_h_ = 0, last_w_ = 0;
};

} // namespace ddcl::model
