// ddcl — desk-scale distortion-disentangled contrastive learning lab.
// Subcommands: pretrain, eval, report, synth, inspect.
// Exit codes: 0 success, 2 validation error, 3 runtime error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ddcl/checkpoint.hpp"
#include "ddcl/config.hpp"
#include "ddcl/evaluation.hpp"
#include "ddcl/report.hpp"
#include "ddcl/training.hpp"
#include "ddcl/version.hpp"

namespace fs = std::filesystem;
using namespace ddcl;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

config::ExperimentConfig load_config(const CommonOpts& opts) {
    config::ExperimentConfig cfg = config::load_file(opts.config_path);
    if (opts.seed_set) cfg.seed = opts.seed;
    return cfg;
}

std::string resolve_out(const CommonOpts& opts, const config::ExperimentConfig& cfg) {
    return opts.out_dir.empty() ? cfg.output_dir : opts.out_dir;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path);
    os << text;
}

int cmd_pretrain(const CommonOpts& opts, const std::string& resume) {
    const auto cfg = load_config(opts);
    const std::string out = resolve_out(opts, cfg);
    fs::create_directories(out);
    write_text((fs::path(out) / "resolved_config.json").string(), config::resolved_json(cfg));

    auto [train_set, test_set] = config::load_split(cfg);
    std::printf("dataset: %zu train / %zu test, %zu classes\n", train_set.size(),
                test_set.size(), train_set.num_classes());
    const auto result = training::pretrain(cfg, train_set, out, resume);
    std::printf("pretrain done: %llu steps, final total=%.6f dir=%.6f ddl=%.6f |cos|=%.4f\n",
                static_cast<unsigned long long>(result.steps), result.last_report.total,
                result.last_report.dir_component, result.last_report.ddl_component,
                result.last_report.mean_abs_cos_dvr);
    std::printf("checkpoint: %s\n", result.checkpoint_path.c_str());
    std::printf("trainlog:   %s\n", result.trainlog_path.c_str());
    return 0;
}

model::Net net_from_checkpoint(const std::string& path, config::ExperimentConfig& cfg_out,
                               std::uint64_t& hash_out) {
    const auto ck = ckpt::load(path);
    hash_out = ckpt::stored_hash(path);
    cfg_out = config::parse_json_text(ck.config_json);
    Rng tmp(1);
    model::Net net(cfg_out.model, cfg_out.train.mode == "asymmetric", tmp);
    ckpt::restore(net, ck);
    return net;
}

int cmd_eval(const CommonOpts& opts, const std::string& ckpt_path, const std::string& mode,
             const std::string& part_name, const std::string& suite_id) {
    config::ExperimentConfig ckpt_cfg;
    std::uint64_t ckpt_hash = 0;
    model::Net net = net_from_checkpoint(ckpt_path, ckpt_cfg, ckpt_hash);

    config::ExperimentConfig cfg = ckpt_cfg;
    if (!opts.config_path.empty()) {
        cfg = load_config(opts);
        const auto a = config::resolved_json(cfg);
        const auto b = config::resolved_json(ckpt_cfg);
        auto section = [](const std::string& text, const char* key) {
            const auto at = text.find(std::string("\"") + key + "\"");
            return text.substr(at, text.find("\n  }", at) - at);
        };
        if (section(a, "model") != section(b, "model") ||
            cfg.train.mode != ckpt_cfg.train.mode)
            throw ConfigError("eval: config model/mode section does not match the checkpoint's");
    }

    const std::string out = resolve_out(opts, cfg);
    fs::create_directories(out);
    auto [train_set, test_set] = config::load_split(cfg);

    eval::EvalParams params = eval::EvalParams::from(cfg);
    if (opts.seed_set) params.seed = opts.seed;
    eval::Provenance prov;
    prov.checkpoint_hash = ckpt_hash;
    prov.config_hash = config::config_hash(cfg);
    prov.seed = params.seed;

    const eval::Part part = eval::part_by_name(part_name);
    const aug::DistortionSuite suite = aug::DistortionSuite::by_id(suite_id, cfg.eval.suite_seed);

    auto emit = [&](const eval::Table& t, const std::string& stem) {
        eval::write_table_csv(t, (fs::path(out) / (stem + ".csv")).string());
        eval::write_table_json(t, (fs::path(out) / (stem + ".json")).string());
        std::printf("wrote %s.{csv,json} under %s\n", stem.c_str(), out.c_str());
    };

    if (mode == "linear") {
        const auto train_bank = eval::extract_features(net, train_set, suite, part, prov);
        const auto test_bank = eval::extract_features(net, test_set, suite, part, prov);
        const auto acc = eval::linear_probe(train_bank, test_bank, params);
        eval::Table t;
        t.title = "linear";
        t.prov = test_bank.prov;
        t.col_names = {"top1", "top3"};
        t.row_names = {part_name};
        t.values = {{acc.top1, acc.top3}};
        const std::string stem = "eval_linear_" + part_name;
        emit(t, stem);
        // machine-readable single-result doc for the DR ablation grid
        char extra[256];
        std::snprintf(extra, sizeof(extra),
                      "{\"part\": \"%s\", \"dr\": %.6f, \"top1\": %.6f, \"top3\": %.6f, "
                      "\"checkpoint_hash\": \"%016llx\"}\n",
                      part_name.c_str(), cfg.model.dr, acc.top1, acc.top3,
                      static_cast<unsigned long long>(ckpt_hash));
        write_text((fs::path(out) / ("eval_linear_" + part_name + "_point.json")).string(),
                   extra);
        std::printf("linear[%s]: top1=%.2f%% top3=%.2f%%\n", part_name.c_str(), acc.top1,
                    acc.top3);
    } else if (mode == "knn") {
        const auto train_bank = eval::extract_features(net, train_set, suite, part, prov);
        const auto test_bank = eval::extract_features(net, test_set, suite, part, prov);
        const double acc = eval::knn_eval(train_bank, test_bank, params.knn_k);
        eval::Table t;
        t.title = "knn";
        t.prov = test_bank.prov;
        t.col_names = {"knn_top1"};
        t.row_names = {part_name};
        t.values = {{acc}};
        t.notes = {"k=" + std::to_string(params.knn_k) + ", cosine distance"};
        emit(t, "eval_knn_" + part_name);
        std::printf("knn[%s]: top1=%.2f%% (k=%zu)\n", part_name.c_str(), acc, params.knn_k);
    } else if (mode == "robustness") {
        const auto t = eval::robustness_sweep(net, train_set, test_set,
                                              {eval::Part::full, eval::Part::dir, eval::Part::dvr},
                                              params, cfg.eval.suite_seed, prov);
        emit(t, "eval_robustness");
    } else if (mode == "brick") {
        const auto t =
            eval::brick_study(net, train_set, test_set, params, cfg.eval.suite_seed, prov);
        emit(t, "eval_brick");
    } else if (mode == "transfer") {
        if (cfg.eval.transfer_dir.empty())
            throw ConfigError("eval: --mode transfer requires eval.transfer_dir in the config");
        const auto results = eval::transfer_probe(net, cfg.eval.transfer_dir,
                                                  cfg.dataset.train_fraction,
                                                  cfg.dataset.split_seed, params);
        eval::Table t;
        t.title = "transfer";
        t.prov = prov;
        t.col_names = {"top1", "top3"};
        for (const auto& [name, acc] : results) {
            t.row_names.push_back(name);
            t.values.push_back({acc.top1, acc.top3});
        }
        emit(t, "eval_transfer");
    } else {
        throw ConfigError("eval: unknown --mode '" + mode +
                          "' (linear|knn|robustness|brick|transfer)");
    }
    return 0;
}

int cmd_synth(const CommonOpts& opts) {
    const auto cfg = load_config(opts);
    const std::string out = resolve_out(opts, cfg);
    const auto ds = data::generate_synth(cfg.dataset.synth);
    data::save_image_directory(ds, out);
    std::printf("wrote %zu images (%zu classes) under %s\n", ds.size(), ds.num_classes(),
                out.c_str());
    return 0;
}

int cmd_inspect(const std::string& ckpt_path) {
    const auto ck = ckpt::load(ckpt_path);  // verifies integrity hash
    const auto hash = ckpt::stored_hash(ckpt_path);
    std::size_t total = 0;
    for (const auto& [name, data] : ck.tensors) total += data.size();
    std::printf("checkpoint: %s\n", ckpt_path.c_str());
    std::printf("  integrity: ok (%016llx)\n", static_cast<unsigned long long>(hash));
    std::printf("  step: %llu\n", static_cast<unsigned long long>(ck.step));
    std::printf("  tensors: %zu (%zu floats)\n", ck.tensors.size(), total);
    const auto cfg = config::parse_json_text(ck.config_json);
    std::printf("  arch: %s d=%zu dr=%.2f head_dim=%zu mode=%s\n", cfg.model.arch.c_str(),
                cfg.model.output_dim, cfg.model.dr, cfg.model.head_dim,
                cfg.train.mode.c_str());
    std::printf("  config_hash: %016llx\n",
                static_cast<unsigned long long>(config::config_hash(cfg)));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"distortion-disentangled contrastive learning lab"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonOpts opts;
    std::string resume, mode = "linear", part = "full", suite = "identity", ckpt_path,
                results_dir;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        sub->add_option("--config", opts.config_path, "experiment config (JSON)")
            ->required(config_required);
        sub->add_option("--out", opts.out_dir, "output directory (default: config output_dir)");
        sub->add_option("--seed", opts.seed, "override config seed")
            ->each([&](const std::string&) { opts.seed_set = true; });
    };

    CLI::App* pre = app.add_subcommand("pretrain", "run the pretraining loop");
    add_common(pre, true);
    pre->add_option("--resume", resume, "resume from a checkpoint file");

    CLI::App* ev = app.add_subcommand("eval", "frozen-feature evaluation protocols");
    add_common(ev, false);
    ev->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    ev->add_option("--mode", mode, "linear|knn|robustness|brick|transfer");
    ev->add_option("--part", part, "full|dir|dvr");
    ev->add_option("--suite", suite, "identity|cj|cj_flip|cj_90|cj_90_et");

    CLI::App* rep = app.add_subcommand("report", "render plots from a results directory");
    rep->add_option("--results", results_dir, "results directory")->required();
    rep->add_option("--out", opts.out_dir, "output directory (default: results dir)");

    CLI::App* syn = app.add_subcommand("synth", "generate the synthetic shapes dataset");
    add_common(syn, true);

    CLI::App* ins = app.add_subcommand("inspect", "summarize a checkpoint");
    ins->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (pre->parsed()) return cmd_pretrain(opts, resume);
        if (ev->parsed()) return cmd_eval(opts, ckpt_path, mode, part, suite);
        if (rep->parsed()) {
            report::generate_reports(results_dir,
                                     opts.out_dir.empty() ? results_dir : opts.out_dir);
            std::printf("reports written under %s\n",
                        (opts.out_dir.empty() ? results_dir : opts.out_dir).c_str());
            return 0;
        }
        if (syn->parsed()) return cmd_synth(opts);
        if (ins->parsed()) return cmd_inspect(ckpt_path);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
