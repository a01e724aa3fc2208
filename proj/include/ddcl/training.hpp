#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddcl/augmentation.hpp"
#include "ddcl/config.hpp"
#include "ddcl/data.hpp"
#include "ddcl/losses.hpp"
#include "ddcl/model.hpp"

namespace ddcl::training {

struct Schedule {
    double base_lr = 0.03;
    std::size_t warmup_steps = 0;
    std::size_t total_steps = 0;
};

// Linear ramp 0 -> base_lr over the warm-up, then cosine decay to 0.
double lr_at(std::size_t step, const Schedule& s);

Schedule make_schedule(const config::ExperimentConfig& cfg, std::size_t steps_per_epoch);

aug::AugStrategy strategy_from(const config::ExperimentConfig& cfg);

// One optimization step on an explicit batch. Generates the view pairs,
// forwards both branches, dispatches the mode's loss, backpropagates and
// applies the SGD update. Throws TrainingError on a non-finite loss.
losses::LossReport train_step(model::Net& net, const std::vector<const Image*>& batch,
                              const std::vector<std::uint64_t>& sample_ids,
                              const config::ExperimentConfig& cfg, double lr,
                              std::uint64_t epoch);

struct PretrainResult {
    std::string checkpoint_path;
    std::string trainlog_path;
    std::uint64_t steps = 0;
    losses::LossReport last_report;
};

// Full pretraining loop: seeded shuffling, schedule, per-step TrainLog
// records, checkpoint cadence. resume_path restores a mid-run checkpoint
// whose config snapshot must equal this run's resolved config.
PretrainResult pretrain(const config::ExperimentConfig& cfg, const data::Dataset& train_set,
                        const std::string& out_dir, const std::string& resume_path = "");

} // namespace ddcl::training
