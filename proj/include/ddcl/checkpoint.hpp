#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ddcl/model.hpp"
#include "ddcl/rng.hpp"

namespace ddcl::ckpt {

// Versioned training snapshot: resolved config, step counter, RNG state,
// named f32 tensors (parameters, their SGD momentum as "<name>.vel", BN
// running statistics), integrity-hashed trailer.
struct Checkpoint {
    std::uint32_t version = 1;
    std::string config_json;
    std::uint64_t step = 0;
    std::array<std::uint64_t, 4> rng_state{};
    std::map<std::string, std::vector<float>> tensors;
};

void save(const std::string& path, const Checkpoint& c);
Checkpoint load(const std::string& path);  // verifies the integrity hash

// The stored integrity hash (also the provenance "checkpoint hash").
std::uint64_t stored_hash(const std::string& path);

Checkpoint snapshot(model::Net& net, std::uint64_t step, const std::string& config_json,
                    const Rng& rng);
// Restores parameters, velocities and buffers; every name must match.
void restore(model::Net& net, const Checkpoint& c, Rng* rng = nullptr);

} // namespace ddcl::ckpt
