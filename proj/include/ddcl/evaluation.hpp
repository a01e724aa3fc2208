#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ddcl/augmentation.hpp"
#include "ddcl/config.hpp"
#include "ddcl/data.hpp"
#include "ddcl/mat.hpp"
#include "ddcl/model.hpp"
#include "ddcl/representation.hpp"

namespace ddcl::eval {

enum class Part { full, dir, dvr };
const char* part_name(Part p);
Part part_by_name(const std::string& name);

struct Provenance {
    std::uint64_t checkpoint_hash = 0;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::string suite = "identity";
    // FNV over the distorted pixel stream; equal digests mean every part and
    // method saw identical distorted inputs.
    std::uint64_t distortion_digest = 0;
};

struct FeatureBank {
    MatF features;
    std::vector<std::uint32_t> labels;
    Part part = Part::full;
    Provenance prov;
};

// Frozen-model features: distort with the suite (fixed per-sample seeds),
// forward in eval mode, slice the requested part.
FeatureBank extract_features(const model::Net& net, const data::Dataset& ds,
                             const aug::DistortionSuite& suite, Part part,
                             Provenance prov = {});

struct EvalParams {
    std::size_t probe_epochs = 100;
    double probe_lr = 30.0;
    double probe_momentum = 0.9;
    double probe_weight_decay = 0.0;
    std::size_t probe_batch = 256;
    std::size_t knn_k = 20;
    bool normalize_features = false;
    std::uint64_t seed = 0;

    static EvalParams from(const config::ExperimentConfig& cfg);
};

struct LinearProbe {
    MatF w;  // [classes][dim]
    std::vector<float> b;
    bool normalized_inputs = false;
};

struct Accuracy {
    double top1 = 0.0, top3 = 0.0;
};

LinearProbe train_linear_probe(const FeatureBank& train, const EvalParams& p);
Accuracy evaluate_probe(const LinearProbe& probe, const FeatureBank& test);
// Trains on `train`, reports top-1/top-3 on `test`.
Accuracy linear_probe(const FeatureBank& train, const FeatureBank& test, const EvalParams& p);

// Cosine-distance k-NN majority vote; ties resolved by smallest summed
// distance. Requires k <= train size.
double knn_eval(const FeatureBank& train, const FeatureBank& test, std::size_t k);

struct Table {
    std::string title;
    std::vector<std::string> col_names;
    std::vector<std::string> row_names;
    std::vector<std::vector<double>> values;  // row-major accuracies (percent)
    Provenance prov;
    std::vector<std::string> notes;
};

// Table-4-shaped sweep: per part, a probe trained once on clean train
// features, evaluated on Identity plus the four distortion suites.
Table robustness_sweep(const model::Net& net, const data::Dataset& train,
                       const data::Dataset& test, const std::vector<Part>& parts,
                       const EvalParams& p, std::uint64_t suite_seed, Provenance prov);

// Brick views: Orig., Flip, Flip+90° (deterministic flip, seeded rotation).
enum class BrickView : std::uint32_t { orig = 0, flip = 1, flip90 = 2 };
Image brick_view_image(const Image& x, BrickView view, std::uint64_t sample_id,
                       std::uint64_t seed);

// Table-7-shaped grid: rows are the DIR view, columns the DVR source
// (same-instance views, a deranged-instance Flip+90°, and zeroed DVR). The
// probe is trained once on unaltered full train representations.
Table brick_study(const model::Net& net, const data::Dataset& train, const data::Dataset& test,
                  const EvalParams& p, std::uint64_t seed, Provenance prov);

// Seeded derangement of [0, n): no index maps to itself.
std::vector<std::size_t> seeded_derangement(std::size_t n, std::uint64_t seed);

// Per-part linear probes on an external labeled directory.
std::map<std::string, Accuracy> transfer_probe(const model::Net& net,
                                               const std::string& labeled_dir,
                                               double train_fraction, std::uint64_t split_seed,
                                               const EvalParams& p);

// Mean |cos| over the DVR pairs the distance term supervises, measured on
// view pairs of held-out data in eval mode.
double dvr_orthogonality(const model::Net& net, const data::Dataset& ds,
                         const aug::AugStrategy& strategy, std::uint64_t seed);

void write_table_csv(const Table& t, const std::string& path);
void write_table_json(const Table& t, const std::string& path);

} // namespace ddcl::eval
