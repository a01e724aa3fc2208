#pragma once

#include <cstdint>
#include <set>
#include <map>
#include <string>

#include "ddcl/augmentation.hpp"
#include "ddcl/data.hpp"
#include "ddcl/model.hpp"

namespace ddcl::config {

struct DatasetSection {
    std::string kind = "synth";  // synth | image_directory | cifar_binary
    std::string path;
    data::SynthSpec synth;
    double train_fraction = 0.8;
    std::uint64_t split_seed = 1;
};

struct TrainSection {
    std::string mode = "asymmetric";  // asymmetric | symmetric
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    double base_lr = 0.03;
    bool scale_lr_by_batch = true;  // effective lr = base_lr * batch/512
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::size_t warmup_epochs = 5;
    bool warmup = true;
    std::string strategy = "CAug";  // BAug | CAug | CAugPlus | identity
    bool use_blur = false;
    double lambda = 5e-3;
    double gamma = 1.0;
    double xi = 0.0;
    std::size_t checkpoint_every = 0;  // epochs; 0 = final checkpoint only
};

struct EvalSection {
    std::size_t probe_epochs = 100;
    double probe_lr = 30.0;
    double probe_momentum = 0.9;
    double probe_weight_decay = 0.0;
    std::size_t probe_batch = 256;
    std::size_t knn_k = 20;
    bool normalize_features = false;
    std::uint64_t suite_seed = 1799;
    std::string transfer_dir;
};

struct ExperimentConfig {
    std::uint32_t schema_version = 1;
    std::uint64_t seed = 1;
    std::string output_dir = "runs/out";
    DatasetSection dataset;
    model::ModelConfig model;
    TrainSection train;
    EvalSection eval;
    // Per-field overrides of the named strategy's transform parameters; the
    // resolved config records the full effective strategy.
    std::map<std::string, double> aug;
};

// Parses and validates; every violation is collected and reported at once
// (ConfigError message carries one line per problem). Unknown keys are
// rejected.
ExperimentConfig load_file(const std::string& path);
ExperimentConfig parse_json_text(const std::string& text);

// Canonical resolved form: all defaults expanded, keys sorted. Reloading the
// resolved text yields the identical config.
std::string resolved_json(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

double effective_base_lr(const ExperimentConfig& cfg);

// The named strategy preset with the config's aug overrides applied.
aug::AugStrategy effective_strategy(const ExperimentConfig& cfg);
const std::set<std::string>& aug_override_keys();

// Loads or generates the configured dataset and applies the stratified split.
std::pair<data::Dataset, data::Dataset> load_split(const ExperimentConfig& cfg);

} // namespace ddcl::config
