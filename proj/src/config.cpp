#include "ddcl/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ddcl/augmentation.hpp"
#include "ddcl/binio.hpp"
#include "ddcl/errors.hpp"

using nlohmann::json;

namespace ddcl::config {

const std::set<std::string>& aug_override_keys() {
    static const std::set<std::string> keys{
        "crop_scale_lo", "crop_scale_hi", "crop_ratio_lo", "crop_ratio_hi",
        "flip_prob", "jitter_prob", "jitter_brightness", "jitter_contrast",
        "jitter_saturation", "jitter_hue", "grayscale_prob", "blur_prob",
        "blur_sigma_lo", "blur_sigma_hi", "rotation_prob", "rotation_deg",
        "elastic_alpha", "elastic_sigma"};
    return keys;
}

aug::AugStrategy effective_strategy(const ExperimentConfig& cfg) {
    aug::AugStrategy s =
        aug::AugStrategy::by_name(cfg.train.strategy, cfg.model.input_size, cfg.model.input_size);
    s.use_blur = cfg.train.use_blur;
    auto set = [&](const char* key, double& field) {
        auto it = cfg.aug.find(key);
        if (it != cfg.aug.end()) field = it->second;
    };
    set("crop_scale_lo", s.crop_scale_lo);
    set("crop_scale_hi", s.crop_scale_hi);
    set("crop_ratio_lo", s.crop_ratio_lo);
    set("crop_ratio_hi", s.crop_ratio_hi);
    set("flip_prob", s.flip_prob);
    set("jitter_prob", s.jitter_prob);
    set("jitter_brightness", s.jitter_brightness);
    set("jitter_contrast", s.jitter_contrast);
    set("jitter_saturation", s.jitter_saturation);
    set("jitter_hue", s.jitter_hue);
    set("grayscale_prob", s.grayscale_prob);
    set("blur_prob", s.blur_prob);
    set("blur_sigma_lo", s.blur_sigma_lo);
    set("blur_sigma_hi", s.blur_sigma_hi);
    set("rotation_prob", s.rotation_prob);
    set("rotation_deg", s.rotation_deg);
    set("elastic_alpha", s.elastic_alpha);
    set("elastic_sigma", s.elastic_sigma);
    return s;
}

namespace {

// Collects every violation; callers throw one ConfigError listing all.
struct Validator {
    std::vector<std::string> errors;

    void fail(const std::string& path, const std::string& msg) {
        errors.push_back(path + ": " + msg);
    }

    void check_keys(const json& obj, const std::string& path,
                    const std::set<std::string>& allowed) {
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (!allowed.count(it.key())) fail(path + "." + it.key(), "unknown key");
    }

    template <typename T>
    T number(const json& obj, const std::string& path, const char* key, T def, double lo,
             double hi) {
        if (!obj.contains(key)) return def;
        const json& v = obj[key];
        if (!v.is_number()) {
            fail(path + "." + key, "expected a number");
            return def;
        }
        const double d = v.get<double>();
        if (d < lo || d > hi) {
            std::ostringstream os;
            os << "value " << d << " outside [" << lo << ", " << hi << "]";
            fail(path + "." + key, os.str());
            return def;
        }
        return v.get<T>();
    }

    bool boolean(const json& obj, const std::string& path, const char* key, bool def) {
        if (!obj.contains(key)) return def;
        if (!obj[key].is_boolean()) {
            fail(path + "." + key, "expected a boolean");
            return def;
        }
        return obj[key].get<bool>();
    }

    std::string text(const json& obj, const std::string& path, const char* key,
                     const std::string& def) {
        if (!obj.contains(key)) return def;
        if (!obj[key].is_string()) {
            fail(path + "." + key, "expected a string");
            return def;
        }
        return obj[key].get<std::string>();
    }

    std::string choice(const json& obj, const std::string& path, const char* key,
                       const std::string& def, const std::set<std::string>& allowed) {
        std::string v = text(obj, path, key, def);
        if (!allowed.count(v)) {
            std::string opts;
            for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
            fail(path + "." + key, "'" + v + "' is not one of: " + opts);
            return def;
        }
        return v;
    }
};

ExperimentConfig from_json(const json& root) {
    Validator v;
    ExperimentConfig cfg;

    v.check_keys(root, "$", {"schema_version", "seed", "output_dir", "dataset", "model",
                             "train", "eval", "aug"});
    cfg.schema_version = v.number<std::uint32_t>(root, "$", "schema_version", 1, 1, 1);
    cfg.seed = v.number<std::uint64_t>(root, "$", "seed", 1, 0, 9e18);
    cfg.output_dir = v.text(root, "$", "output_dir", cfg.output_dir);

    if (root.contains("dataset")) {
        const json& d = root["dataset"];
        v.check_keys(d, "dataset",
                     {"kind", "path", "synth", "train_fraction", "split_seed"});
        cfg.dataset.kind = v.choice(d, "dataset", "kind", "synth",
                                    {"synth", "image_directory", "cifar_binary"});
        cfg.dataset.path = v.text(d, "dataset", "path", "");
        cfg.dataset.train_fraction =
            v.number<double>(d, "dataset", "train_fraction", 0.8, 0.01, 0.99);
        cfg.dataset.split_seed = v.number<std::uint64_t>(d, "dataset", "split_seed", 1, 0, 9e18);
        if (d.contains("synth")) {
            const json& s = d["synth"];
            v.check_keys(s, "dataset.synth",
                         {"n_per_class", "classes", "size", "base_radius", "scale_jitter",
                          "position_jitter", "color_jitter", "seed"});
            auto& sp = cfg.dataset.synth;
            sp.n_per_class = v.number<std::size_t>(s, "dataset.synth", "n_per_class", 200, 0, 1e6);
            sp.size = v.number<std::size_t>(s, "dataset.synth", "size", 64, 8, 4096);
            sp.base_radius = v.number<double>(s, "dataset.synth", "base_radius", 0.26, 0.01, 0.5);
            sp.scale_jitter = v.number<double>(s, "dataset.synth", "scale_jitter", 0.25, 0.0, 1.0);
            sp.position_jitter =
                v.number<double>(s, "dataset.synth", "position_jitter", 0.12, 0.0, 0.5);
            sp.color_jitter = v.number<double>(s, "dataset.synth", "color_jitter", 0.35, 0.0, 1.0);
            sp.seed = v.number<std::uint64_t>(s, "dataset.synth", "seed", 0, 0, 9e18);
            if (s.contains("classes")) {
                if (!s["classes"].is_array() || s["classes"].empty()) {
                    v.fail("dataset.synth.classes", "expected a nonempty array of shape names");
                } else {
                    sp.classes.clear();
                    for (const auto& c : s["classes"]) {
                        if (!c.is_string()) {
                            v.fail("dataset.synth.classes", "entries must be strings");
                        } else {
                            const std::string name = c.get<std::string>();
                            static const std::set<std::string> kShapes{"disk", "square",
                                                                       "triangle", "cross"};
                            if (!kShapes.count(name))
                                v.fail("dataset.synth.classes", "unknown shape '" + name + "'");
                            else
                                sp.classes.push_back(name);
                        }
                    }
                }
            }
        }
        if (cfg.dataset.kind != "synth" && cfg.dataset.path.empty())
            v.fail("dataset.path", "required for kind '" + cfg.dataset.kind + "'");
    }

    if (root.contains("model")) {
        const json& m = root["model"];
        v.check_keys(m, "model",
                     {"arch", "input_size", "input_channels", "conv_channels", "output_dim",
                      "dr", "proj_hidden", "head_dim"});
        cfg.model.arch = v.choice(m, "model", "arch", "tiny_cnn",
                                  {"tiny_cnn", "resnet18_lightly", "resnet50"});
        if (cfg.model.arch != "tiny_cnn")
            v.fail("model.arch", "'" + cfg.model.arch +
                                     "' is a full-scale configuration; this desk-scale build "
                                     "provides tiny_cnn");
        cfg.model.input_size = v.number<std::size_t>(m, "model", "input_size", 64, 8, 512);
        cfg.model.input_channels = v.number<std::size_t>(m, "model", "input_channels", 3, 1, 3);
        if (cfg.model.input_channels == 2) v.fail("model.input_channels", "must be 1 or 3");
        cfg.model.output_dim = v.number<std::size_t>(m, "model", "output_dim", 64, 2, 8192);
        cfg.model.dr = v.number<double>(m, "model", "dr", 0.8, 0.01, 0.99);
        cfg.model.proj_hidden = v.number<std::size_t>(m, "model", "proj_hidden", 64, 1, 8192);
        cfg.model.head_dim = v.number<std::size_t>(m, "model", "head_dim", 16, 2, 8192);
        if (m.contains("conv_channels")) {
            if (!m["conv_channels"].is_array() || m["conv_channels"].empty()) {
                v.fail("model.conv_channels", "expected a nonempty array");
            } else {
                cfg.model.conv_channels.clear();
                for (const auto& c : m["conv_channels"]) {
                    if (!c.is_number_unsigned())
                        v.fail("model.conv_channels", "entries must be positive integers");
                    else
                        cfg.model.conv_channels.push_back(c.get<std::size_t>());
                }
            }
        }
        const auto d_i = static_cast<std::size_t>(cfg.model.dr * double(cfg.model.output_dim));
        if (d_i == 0 || d_i >= cfg.model.output_dim)
            v.fail("model.dr", "DR leaves an empty DIR or DVR block for output_dim " +
                                   std::to_string(cfg.model.output_dim));
    }

    if (root.contains("train")) {
        const json& t = root["train"];
        v.check_keys(t, "train",
                     {"mode", "epochs", "batch_size", "base_lr", "scale_lr_by_batch",
                      "effective_base_lr", "momentum", "weight_decay", "warmup_epochs",
                      "warmup", "strategy", "use_blur", "lambda", "gamma", "xi",
                      "checkpoint_every"});
        cfg.train.mode = v.choice(t, "train", "mode", "asymmetric", {"asymmetric", "symmetric"});
        cfg.train.epochs = v.number<std::size_t>(t, "train", "epochs", 50, 0, 100000);
        cfg.train.batch_size = v.number<std::size_t>(t, "train", "batch_size", 64, 2, 8192);
        cfg.train.base_lr = v.number<double>(t, "train", "base_lr", 0.03, 0.0, 100.0);
        cfg.train.scale_lr_by_batch = v.boolean(t, "train", "scale_lr_by_batch", true);
        cfg.train.momentum = v.number<double>(t, "train", "momentum", 0.9, 0.0, 0.9999);
        cfg.train.weight_decay = v.number<double>(t, "train", "weight_decay", 1e-4, 0.0, 1.0);
        cfg.train.warmup_epochs = v.number<std::size_t>(t, "train", "warmup_epochs", 5, 0, 100000);
        cfg.train.warmup = v.boolean(t, "train", "warmup", true);
        cfg.train.strategy = v.choice(t, "train", "strategy", "CAug",
                                      {"BAug", "CAug", "CAugPlus", "identity"});
        cfg.train.use_blur = v.boolean(t, "train", "use_blur", false);
        cfg.train.lambda = v.number<double>(t, "train", "lambda", 5e-3, 0.0, 1e6);
        cfg.train.gamma = v.number<double>(t, "train", "gamma", 1.0, 0.0, 1e6);
        cfg.train.xi = v.number<double>(t, "train", "xi", 0.0, 0.0, 1.0);
        cfg.train.checkpoint_every =
            v.number<std::size_t>(t, "train", "checkpoint_every", 0, 0, 100000);
        if (cfg.train.warmup && cfg.train.warmup_epochs > cfg.train.epochs)
            v.fail("train.warmup_epochs", "exceeds train.epochs");
    }

    if (root.contains("eval")) {
        const json& e = root["eval"];
        v.check_keys(e, "eval",
                     {"probe_epochs", "probe_lr", "probe_momentum", "probe_weight_decay",
                      "probe_batch", "knn_k", "normalize_features", "suite_seed",
                      "transfer_dir"});
        cfg.eval.probe_epochs = v.number<std::size_t>(e, "eval", "probe_epochs", 100, 1, 100000);
        cfg.eval.probe_lr = v.number<double>(e, "eval", "probe_lr", 30.0, 0.0, 1000.0);
        cfg.eval.probe_momentum = v.number<double>(e, "eval", "probe_momentum", 0.9, 0.0, 0.9999);
        cfg.eval.probe_weight_decay =
            v.number<double>(e, "eval", "probe_weight_decay", 0.0, 0.0, 1.0);
        cfg.eval.probe_batch = v.number<std::size_t>(e, "eval", "probe_batch", 256, 1, 8192);
        cfg.eval.knn_k = v.number<std::size_t>(e, "eval", "knn_k", 20, 1, 100000);
        cfg.eval.normalize_features = v.boolean(e, "eval", "normalize_features", false);
        cfg.eval.suite_seed = v.number<std::uint64_t>(e, "eval", "suite_seed", 1799, 0, 9e18);
        cfg.eval.transfer_dir = v.text(e, "eval", "transfer_dir", "");
    }

    if (root.contains("aug")) {
        const json& a = root["aug"];
        if (!a.is_object()) {
            v.fail("aug", "expected an object of strategy parameter overrides");
        } else {
            for (auto it = a.begin(); it != a.end(); ++it) {
                if (!aug_override_keys().count(it.key())) {
                    v.fail("aug." + it.key(), "unknown key");
                } else if (!it.value().is_number()) {
                    v.fail("aug." + it.key(), "expected a number");
                } else {
                    const double val = it.value().get<double>();
                    if (val < 0.0 || val > 10000.0)
                        v.fail("aug." + it.key(), "value outside [0, 10000]");
                    else
                        cfg.aug[it.key()] = val;
                }
            }
        }
    }

    if (cfg.model.input_size != cfg.dataset.synth.size && cfg.dataset.kind == "synth")
        v.fail("model.input_size", "must equal dataset.synth.size for synth datasets");

    if (!v.errors.empty()) {
        std::string msg = "configuration invalid (" + std::to_string(v.errors.size()) +
                          " problem(s)):";
        for (const auto& e : v.errors) msg += "\n  - " + e;
        throw ConfigError(msg);
    }
    return cfg;
}

} // namespace

ExperimentConfig parse_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("configuration root must be a JSON object");
    return from_json(root);
}

ExperimentConfig load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_json_text(ss.str());
}

double effective_base_lr(const ExperimentConfig& cfg) {
    return cfg.train.scale_lr_by_batch
               ? cfg.train.base_lr * static_cast<double>(cfg.train.batch_size) / 512.0
               : cfg.train.base_lr;
}

std::string resolved_json(const ExperimentConfig& cfg) {
    json root;
    root["schema_version"] = cfg.schema_version;
    root["seed"] = cfg.seed;
    root["output_dir"] = cfg.output_dir;
    root["dataset"] = {{"kind", cfg.dataset.kind},
                       {"path", cfg.dataset.path},
                       {"train_fraction", cfg.dataset.train_fraction},
                       {"split_seed", cfg.dataset.split_seed},
                       {"synth",
                        {{"n_per_class", cfg.dataset.synth.n_per_class},
                         {"classes", cfg.dataset.synth.classes},
                         {"size", cfg.dataset.synth.size},
                         {"base_radius", cfg.dataset.synth.base_radius},
                         {"scale_jitter", cfg.dataset.synth.scale_jitter},
                         {"position_jitter", cfg.dataset.synth.position_jitter},
                         {"color_jitter", cfg.dataset.synth.color_jitter},
                         {"seed", cfg.dataset.synth.seed}}}};
    root["model"] = {{"arch", cfg.model.arch},
                     {"input_size", cfg.model.input_size},
                     {"input_channels", cfg.model.input_channels},
                     {"conv_channels", cfg.model.conv_channels},
                     {"output_dim", cfg.model.output_dim},
                     {"dr", cfg.model.dr},
                     {"proj_hidden", cfg.model.proj_hidden},
                     {"head_dim", cfg.model.head_dim}};
    root["train"] = {{"mode", cfg.train.mode},
                     {"epochs", cfg.train.epochs},
                     {"batch_size", cfg.train.batch_size},
                     {"base_lr", cfg.train.base_lr},
                     {"scale_lr_by_batch", cfg.train.scale_lr_by_batch},
                     {"effective_base_lr", effective_base_lr(cfg)},
                     {"momentum", cfg.train.momentum},
                     {"weight_decay", cfg.train.weight_decay},
                     {"warmup_epochs", cfg.train.warmup_epochs},
                     {"warmup", cfg.train.warmup},
                     {"strategy", cfg.train.strategy},
                     {"use_blur", cfg.train.use_blur},
                     {"lambda", cfg.train.lambda},
                     {"gamma", cfg.train.gamma},
                     {"xi", cfg.train.xi},
                     {"checkpoint_every", cfg.train.checkpoint_every}};
    root["eval"] = {{"probe_epochs", cfg.eval.probe_epochs},
                    {"probe_lr", cfg.eval.probe_lr},
                    {"probe_momentum", cfg.eval.probe_momentum},
                    {"probe_weight_decay", cfg.eval.probe_weight_decay},
                    {"probe_batch", cfg.eval.probe_batch},
                    {"knn_k", cfg.eval.knn_k},
                    {"normalize_features", cfg.eval.normalize_features},
                    {"suite_seed", cfg.eval.suite_seed},
                    {"transfer_dir", cfg.eval.transfer_dir}};
    // the full effective strategy, so the document alone reproduces the views
    const aug::AugStrategy s = effective_strategy(cfg);
    root["aug"] = {{"crop_scale_lo", s.crop_scale_lo},
                   {"crop_scale_hi", s.crop_scale_hi},
                   {"crop_ratio_lo", s.crop_ratio_lo},
                   {"crop_ratio_hi", s.crop_ratio_hi},
                   {"flip_prob", s.flip_prob},
                   {"jitter_prob", s.jitter_prob},
                   {"jitter_brightness", s.jitter_brightness},
                   {"jitter_contrast", s.jitter_contrast},
                   {"jitter_saturation", s.jitter_saturation},
                   {"jitter_hue", s.jitter_hue},
                   {"grayscale_prob", s.grayscale_prob},
                   {"blur_prob", s.blur_prob},
                   {"blur_sigma_lo", s.blur_sigma_lo},
                   {"blur_sigma_hi", s.blur_sigma_hi},
                   {"rotation_prob", s.rotation_prob},
                   {"rotation_deg", s.rotation_deg},
                   {"elastic_alpha", s.elastic_alpha},
                   {"elastic_sigma", s.elastic_sigma}};
    return root.dump(2) + "\n";
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    binio::Fnv64 h;
    h.add_str(resolved_json(cfg));
    return h.state;
}

std::pair<data::Dataset, data::Dataset> load_split(const ExperimentConfig& cfg) {
    data::Dataset full;
    if (cfg.dataset.kind == "synth") {
        full = data::generate_synth(cfg.dataset.synth);
    } else if (cfg.dataset.kind == "image_directory") {
        full = data::load_dataset(cfg.dataset.path, data::Format::image_directory);
    } else {
        full = data::load_dataset(cfg.dataset.path, data::Format::cifar_binary);
    }
    return data::split_dataset(full, cfg.dataset.train_fraction, cfg.dataset.split_seed);
}

} // namespace ddcl::config
