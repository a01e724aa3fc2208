#include "ddcl/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "ddcl/png_io.hpp"
#include "ddcl/rng.hpp"

namespace fs = std::filesystem;

namespace ddcl::data {

namespace {

bool is_image_file(const fs::path& p) {
    const std::string ext = p.extension().string();
    return ext == ".png" || ext == ".PNG" || ext == ".ppm" || ext == ".pgm";
}

Dataset load_image_directory(const std::string& path) {
    if (!fs::is_directory(path)) throw IoError("load_dataset: not a directory: " + path);
    std::vector<std::string> classes;
    for (const auto& e : fs::directory_iterator(path))
        if (e.is_directory()) classes.push_back(e.path().filename().string());
    std::sort(classes.begin(), classes.end());
    if (classes.empty()) throw IoError("load_dataset: no class subdirectories in " + path);

    Dataset ds;
    ds.class_names = classes;
    std::uint64_t next_id = 0;
    for (std::size_t ci = 0; ci < classes.size(); ++ci) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(fs::path(path) / classes[ci]))
            if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw IoError("load_dataset: class '" + classes[ci] + "' contains no images");
        for (const auto& f : files) {
            DataItem item;
            item.image = imgio::load_image(f.string());
            item.label = static_cast<std::uint32_t>(ci);
            item.instance_id = next_id++;
            ds.items.push_back(std::move(item));
        }
    }
    return ds;
}

Dataset load_cifar_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("load_dataset: cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                     std::istreambuf_iterator<char>());
    constexpr std::size_t kRecord = 3073;
    if (bytes.empty() || bytes.size() % kRecord != 0)
        throw IoError("load_dataset: malformed cifar record at byte offset " +
                      std::to_string((bytes.size() / kRecord) * kRecord) + " in " + path);
    Dataset ds;
    for (int c = 0; c < 10; ++c) ds.class_names.push_back("class_" + std::to_string(c));
    const std::size_t n = bytes.size() / kRecord;
    for (std::size_t r = 0; r < n; ++r) {
        const unsigned char* rec = &bytes[r * kRecord];
        if (rec[0] > 9)
            throw IoError("load_dataset: label out of range at byte offset " +
                          std::to_string(r * kRecord));
        DataItem item;
        item.label = rec[0];
        item.instance_id = r;
        item.image = Image(32, 32, 3);
        // CHW planes (R, G, B), 1024 bytes each
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t y = 0; y < 32; ++y)
                for (std::size_t x = 0; x < 32; ++x)
                    item.image.at(y, x, c) = rec[1 + c * 1024 + y * 32 + x] / 255.0f;
        ds.items.push_back(std::move(item));
    }
    return ds;
}

struct Shape {
    enum Kind { disk, square, triangle, cross } kind;
    double cy, cx, r;
};

Shape::Kind kind_by_name(const std::string& name) {
    if (name == "disk") return Shape::disk;
    if (name == "square") return Shape::square;
    if (name == "triangle") return Shape::triangle;
    if (name == "cross") return Shape::cross;
    throw InvalidInput("generate_synth: unknown shape class '" + name + "'");
}

void hsv_to_rgb(double h, double s, double v, float& r, float& g, float& b) {
    h -= std::floor(h);
    const double hh = h * 6.0;
    const int i = static_cast<int>(hh) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    double rr, gg, bb;
    switch (i) {
        case 0: rr = v; gg = t; bb = p; break;
        case 1: rr = q; gg = v; bb = p; break;
        case 2: rr = p; gg = v; bb = t; break;
        case 3: rr = p; gg = q; bb = v; break;
        case 4: rr = t; gg = p; bb = v; break;
        default: rr = v; gg = p; bb = q; break;
    }
    r = static_cast<float>(rr);
    g = static_cast<float>(gg);
    b = static_cast<float>(bb);
}

bool inside(const Shape& s, double y, double x) {
    const double dy = y - s.cy, dx = x - s.cx;
    switch (s.kind) {
        case Shape::disk:
            return dy * dy + dx * dx <= s.r * s.r;
        case Shape::square:
            return std::fabs(dy) <= s.r * 0.9 && std::fabs(dx) <= s.r * 0.9;
        case Shape::triangle: {
            // equilateral, apex up
            const double h = s.r * 1.5;
            const double top = -s.r;
            if (dy < top || dy > top + h) return false;
            const double half_width = (dy - top) / h * s.r * 1.05;
            return std::fabs(dx) <= half_width;
        }
        case Shape::cross: {
            const double bar = s.r * 0.34;
            return (std::fabs(dy) <= bar && std::fabs(dx) <= s.r) ||
                   (std::fabs(dx) <= bar && std::fabs(dy) <= s.r);
        }
    }
    return false;
}

} // namespace

Dataset load_dataset(const std::string& path, Format format) {
    switch (format) {
        case Format::image_directory: return load_image_directory(path);
        case Format::cifar_binary: return load_cifar_binary(path);
    }
    throw InvalidInput("load_dataset: unknown format");
}

Dataset generate_synth(const SynthSpec& spec) {
    if (spec.size < 8) throw InvalidInput("generate_synth: size must be >= 8");
    const double max_extent =
        spec.base_radius * (1.0 + spec.scale_jitter) * 1.05 + spec.position_jitter;
    if (max_extent > 0.5)
        throw InvalidInput("generate_synth: shape larger than frame (extent " +
                           std::to_string(max_extent) + " > 0.5)");
    Dataset ds;
    ds.class_names = spec.classes;
    const double sz = static_cast<double>(spec.size);
    std::uint64_t next_id = 0;

    for (std::size_t ci = 0; ci < spec.classes.size(); ++ci) {
        const Shape::Kind kind = kind_by_name(spec.classes[ci]);
        for (std::size_t n = 0; n < spec.n_per_class; ++n) {
            Rng rng(fold_u64(fold_u64(fold_u64(spec.seed, 0x517eULL), ci), n));
            Shape shape;
            shape.kind = kind;
            shape.r = sz * spec.base_radius *
                      (1.0 + spec.scale_jitter * rng.uniform(-1.0, 1.0));
            shape.cy = sz * (0.5 + spec.position_jitter * rng.uniform(-1.0, 1.0));
            shape.cx = sz * (0.5 + spec.position_jitter * rng.uniform(-1.0, 1.0));

            // foreground hue centers on a per-class base and jitters per
            // instance; backgrounds stay class-free dark gray
            float bg[3], fg[3];
            for (int c = 0; c < 3; ++c)
                bg[c] = static_cast<float>(0.14 + 0.12 * rng.uniform());
            const double base_hue =
                0.11 + 0.26 * static_cast<double>(ci);  // spread over the hue circle
            const double hue = base_hue + 0.2 * spec.color_jitter * rng.uniform(-1.0, 1.0);
            const double sat = 0.55 + 0.35 * rng.uniform();
            const double val = 0.68 + 0.27 * rng.uniform();
            hsv_to_rgb(hue, sat, val, fg[0], fg[1], fg[2]);

            DataItem item;
            item.label = static_cast<std::uint32_t>(ci);
            item.instance_id = next_id++;
            item.image = Image(spec.size, spec.size, 3);
            for (std::size_t y = 0; y < spec.size; ++y)
                for (std::size_t x = 0; x < spec.size; ++x) {
                    // 2x2 supersampled coverage
                    int hits = 0;
                    for (int sy = 0; sy < 2; ++sy)
                        for (int sx = 0; sx < 2; ++sx)
                            if (inside(shape, y + 0.25 + 0.5 * sy, x + 0.25 + 0.5 * sx)) ++hits;
                    const float cov = hits / 4.0f;
                    for (int c = 0; c < 3; ++c)
                        item.image.at(y, x, c) = bg[c] * (1.0f - cov) + fg[c] * cov;
                }
            ds.items.push_back(std::move(item));
        }
    }
    std::sort(ds.items.begin(), ds.items.end(),
              [](const DataItem& a, const DataItem& b) { return a.instance_id < b.instance_id; });
    return ds;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double train_fraction,
                                          std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InvalidInput("split_dataset: train_fraction must lie in (0,1)");
    Dataset train, test;
    train.class_names = test.class_names = ds.class_names;
    train.split = "train";
    test.split = "test";

    std::vector<std::vector<std::size_t>> by_class(ds.class_names.size());
    for (std::size_t i = 0; i < ds.items.size(); ++i)
        by_class[ds.items[i].label].push_back(i);

    for (std::size_t ci = 0; ci < by_class.size(); ++ci) {
        auto& idx = by_class[ci];
        if (idx.size() < 2)
            throw InvalidInput("split_dataset: class '" + ds.class_names[ci] +
                               "' has fewer than 2 items");
        Rng rng(fold_u64(fold_u64(seed, 0x5b117ULL), ci));
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
        const auto n_train = static_cast<std::size_t>(
            std::floor(train_fraction * static_cast<double>(idx.size()) + 0.5));
        const std::size_t clamped = std::min(std::max<std::size_t>(n_train, 1), idx.size() - 1);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            (i < clamped ? train : test).items.push_back(ds.items[idx[i]]);
        }
    }
    auto by_id = [](const DataItem& a, const DataItem& b) {
        return a.instance_id < b.instance_id;
    };
    std::sort(train.items.begin(), train.items.end(), by_id);
    std::sort(test.items.begin(), test.items.end(), by_id);
    return {std::move(train), std::move(test)};
}

void save_image_directory(const Dataset& ds, const std::string& path) {
    fs::create_directories(path);
    for (const auto& item : ds.items) {
        const fs::path dir = fs::path(path) / ds.class_names[item.label];
        fs::create_directories(dir);
        char name[32];
        std::snprintf(name, sizeof(name), "%08llu.png",
                      static_cast<unsigned long long>(item.instance_id));
        imgio::save_png((dir / name).string(), item.image);
    }
}

} // namespace ddcl::data
