#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddcl/image.hpp"

namespace ddcl::data {

struct DataItem {
    Image image;
    std::uint32_t label = 0;
    std::uint64_t instance_id = 0;
};

struct Dataset {
    std::vector<DataItem> items;  // ordered by instance_id
    std::vector<std::string> class_names;
    std::string split = "all";

    std::size_t size() const { return items.size(); }
    std::size_t num_classes() const { return class_names.size(); }
};

enum class Format { image_directory, cifar_binary };

// image-directory: class-named subfolders of PNG/PPM/PGM files.
// cifar-binary: standard 3073-byte records (1 label byte + 3072 CHW pixels).
Dataset load_dataset(const std::string& path, Format format);

struct SynthSpec {
    std::size_t n_per_class = 200;
    std::vector<std::string> classes = {"disk", "square", "triangle", "cross"};
    std::size_t size = 64;  // H = W
    double base_radius = 0.26;        // fraction of the frame
    double scale_jitter = 0.25;       // relative radius jitter
    double position_jitter = 0.12;    // fraction of the frame
    double color_jitter = 0.35;       // channel jitter around base colors
    std::uint64_t seed = 0;
};

// Seeded procedural shapes; same spec -> bit-identical dataset.
Dataset generate_synth(const SynthSpec& spec);

// Seeded stratified split; disjoint and exhaustive, per-class balance +-1.
std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction,
                                          std::uint64_t seed);

// Writes ds as an image-directory tree (class-named subfolders of PNGs).
void save_image_directory(const Dataset& ds, const std::string& path);

} // namespace ddcl::data
