#include "ddcl/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ddcl/checkpoint.hpp"
#include "ddcl/kernels.hpp"

namespace ddcl::training {

namespace {

constexpr double kPi = 3.14159265358979323846;

MatD to_double(const MatF& m) {
    MatD out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) out.storage()[i] = m.storage()[i];
    return out;
}

MatF to_float(const MatD& m) {
    MatF out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i)
        out.storage()[i] = static_cast<float>(m.storage()[i]);
    return out;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string step_record(std::uint64_t step, double lr, const losses::LossReport& r) {
    std::string line = "{\"step\":" + std::to_string(step) + ",\"lr\":" + fmt_double(lr) +
                       ",\"total\":" + fmt_double(r.total) +
                       ",\"dir\":" + fmt_double(r.dir_component) +
                       ",\"ddl\":" + fmt_double(r.ddl_component) +
                       ",\"mean_abs_cos_dvr\":" + fmt_double(r.mean_abs_cos_dvr) + "}";
    return line;
}

} // namespace

double lr_at(std::size_t step, const Schedule& s) {
    if (s.total_steps == 0) return 0.0;
    if (step < s.warmup_steps)
        return s.base_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
    if (s.total_steps <= s.warmup_steps) return s.base_lr;
    const double progress = static_cast<double>(step - s.warmup_steps) /
                            static_cast<double>(s.total_steps - s.warmup_steps);
    return s.base_lr * 0.5 * (1.0 + std::cos(kPi * std::min(progress, 1.0)));
}

Schedule make_schedule(const config::ExperimentConfig& cfg, std::size_t steps_per_epoch) {
    Schedule s;
    s.base_lr = config::effective_base_lr(cfg);
    s.total_steps = cfg.train.epochs * steps_per_epoch;
    s.warmup_steps = cfg.train.warmup ? cfg.train.warmup_epochs * steps_per_epoch : 0;
    return s;
}

aug::AugStrategy strategy_from(const config::ExperimentConfig& cfg) {
    return config::effective_strategy(cfg);
}

losses::LossReport train_step(model::Net& net, const std::vector<const Image*>& batch,
                              const std::vector<std::uint64_t>& sample_ids,
                              const config::ExperimentConfig& cfg, double lr,
                              std::uint64_t epoch) {
    const aug::AugStrategy strategy = strategy_from(cfg);
    const auto pairs = aug::make_view_pairs(batch, sample_ids, strategy, cfg.seed, epoch);

    std::vector<const Image*> v1(pairs.size()), v2(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        v1[i] = &pairs[i].v1;
        v2[i] = &pairs[i].v2;
    }
    const MatF x1 = net.to_input(v1);
    const MatF x2 = net.to_input(v2);

    model::Net::BranchCache c1, c2;
    model::BranchOut o1 = net.forward_train(x1, c1);
    model::BranchOut o2 = net.forward_train(x2, c2);

    auto diagnostics = [&](const std::string& cause) {
        double mean = 0.0, mx = 0.0;
        for (float v : x1.storage()) {
            mean += v;
            mx = std::max(mx, static_cast<double>(std::fabs(v)));
        }
        mean /= static_cast<double>(x1.size());
        return cause + " lr=" + fmt_double(lr) + " batch_mean=" + fmt_double(mean) +
               " batch_absmax=" + fmt_double(mx) + " batch_size=" +
               std::to_string(batch.size()) + " epoch=" + std::to_string(epoch);
    };

    losses::Hyperparams h{cfg.train.lambda, cfg.train.gamma, cfg.train.xi};
    losses::LossReport report;
    net.zero_grads();
    try {
        if (cfg.train.mode == "symmetric") {
            losses::SymmetricGrads g;
            report = losses::total_loss_symmetric(to_double(o1.heads.zi), to_double(o2.heads.zi),
                                                  to_double(o1.heads.zv), to_double(o2.heads.zv),
                                                  h, &g);
            net.backward(c1, to_float(g.dzi1), to_float(g.dzv1), MatF(), MatF());
            net.backward(c2, to_float(g.dzi2), to_float(g.dzv2), MatF(), MatF());
        } else {
            losses::AsymmetricGrads g;
            report = losses::total_loss_asymmetric(
                to_double(o1.heads.pi), to_double(o2.heads.pi), to_double(o1.heads.zi),
                to_double(o2.heads.zi), to_double(o1.heads.pv), to_double(o2.heads.pv),
                to_double(o1.heads.zv), to_double(o2.heads.zv), h, &g);
            // stop-grad: projections receive nothing directly; gradients reach
            // the encoder only through the predictor path.
            net.backward(c1, MatF(), MatF(), to_float(g.dpi1), to_float(g.dpv1));
            net.backward(c2, MatF(), MatF(), to_float(g.dpi2), to_float(g.dpv2));
        }
    } catch (const InvalidInput& e) {
        // non-finite activations reached the loss
        throw TrainingError(diagnostics(std::string("non-finite loss input (") + e.what() + ")"));
    }

    if (!std::isfinite(report.total))
        throw TrainingError(diagnostics("non-finite loss: total=" + fmt_double(report.total)));

    for (auto& p : net.params())
        kernels::sgd_momentum_update(p.t->v.data(), p.t->m.data(), p.t->g.data(),
                                     static_cast<float>(lr),
                                     static_cast<float>(cfg.train.momentum),
                                     static_cast<float>(cfg.train.weight_decay), p.t->size());
    return report;
}

PretrainResult pretrain(const config::ExperimentConfig& cfg, const data::Dataset& train_set,
                        const std::string& out_dir, const std::string& resume_path) {
    namespace fs = std::filesystem;
    const std::size_t n = train_set.size();
    const std::size_t bs = cfg.train.batch_size;

    // Report inconsistencies before any compute.
    if (n == 0) throw ConfigError("pretrain: training dataset is empty");
    if (n >= 2 && n % bs == 1)
        throw ConfigError("pretrain: final batch would hold a single sample (N=" +
                          std::to_string(n) + ", batch_size=" + std::to_string(bs) +
                          "); batch-normalized losses need at least 2");
    if (n == 1) throw ConfigError("pretrain: need at least 2 training samples");
    for (const auto& item : train_set.items)
        if (item.image.height != cfg.model.input_size ||
            item.image.width != cfg.model.input_size ||
            item.image.channels != cfg.model.input_channels)
            throw ConfigError("pretrain: dataset image geometry does not match model.input_size");

    const std::size_t steps_per_epoch = (n + bs - 1) / bs;
    const Schedule sched = make_schedule(cfg, steps_per_epoch);
    const std::string resolved = config::resolved_json(cfg);

    Rng init_rng(fold_u64(cfg.seed, 0x1417ULL));
    model::Net net(cfg.model, cfg.train.mode == "asymmetric", init_rng);
    Rng train_rng(fold_u64(cfg.seed, 0x7124ULL));

    std::uint64_t step = 0;
    if (!resume_path.empty()) {
        ckpt::Checkpoint c = ckpt::load(resume_path);
        if (c.config_json != resolved)
            throw ConfigError("pretrain: resume checkpoint was produced by a different resolved "
                              "config");
        ckpt::restore(net, c, &train_rng);
        step = c.step;
        if (step % steps_per_epoch != 0)
            throw ConfigError("pretrain: resume checkpoint does not sit on an epoch boundary");
    }

    fs::create_directories(out_dir);
    const std::string trainlog_path = (fs::path(out_dir) / "trainlog.ndjson").string();
    std::ofstream log(trainlog_path, resume_path.empty() ? std::ios::trunc : std::ios::app);
    if (!log) throw IoError("pretrain: cannot open " + trainlog_path);

    const auto t_start = std::chrono::steady_clock::now();
    losses::LossReport last{};
    const std::uint64_t start_epoch = step / steps_per_epoch;
    for (std::uint64_t epoch = start_epoch; epoch < cfg.train.epochs; ++epoch) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        Rng shuffle_rng(fold_u64(fold_u64(cfg.seed, 0x500ffULL), epoch));
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);

        double sum_total = 0, sum_dir = 0, sum_ddl = 0, sum_mac = 0;
        for (std::size_t b = 0; b < steps_per_epoch; ++b) {
            const std::size_t lo = b * bs, hi = std::min(n, lo + bs);
            std::vector<const Image*> batch;
            std::vector<std::uint64_t> ids;
            for (std::size_t i = lo; i < hi; ++i) {
                batch.push_back(&train_set.items[order[i]].image);
                ids.push_back(train_set.items[order[i]].instance_id);
            }
            const double lr = lr_at(step, sched);
            last = train_step(net, batch, ids, cfg, lr, epoch);
            log << step_record(step, lr, last) << "\n";
            ++step;
            sum_total += last.total;
            sum_dir += last.dir_component;
            sum_ddl += last.ddl_component;
            sum_mac += last.mean_abs_cos_dvr;
        }
        const double inv = 1.0 / static_cast<double>(steps_per_epoch);
        log << "{\"epoch\":" << epoch << ",\"mean_total\":" << fmt_double(sum_total * inv)
            << ",\"mean_dir\":" << fmt_double(sum_dir * inv)
            << ",\"mean_ddl\":" << fmt_double(sum_ddl * inv)
            << ",\"mean_abs_cos_dvr\":" << fmt_double(sum_mac * inv) << "}\n";
        log.flush();

        if (cfg.train.checkpoint_every != 0 && (epoch + 1) % cfg.train.checkpoint_every == 0 &&
            epoch + 1 != cfg.train.epochs) {
            const std::string path =
                (fs::path(out_dir) / ("checkpoint_epoch" + std::to_string(epoch + 1) + ".ddcl"))
                    .string();
            ckpt::save(path, ckpt::snapshot(net, step, resolved, train_rng));
        }
    }

    const std::string ckpt_path = (fs::path(out_dir) / "checkpoint.ddcl").string();
    ckpt::save(ckpt_path, ckpt::snapshot(net, step, resolved, train_rng));

    // Wall time lives outside the deterministic TrainLog.
    const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - t_start)
                             .count();
    std::ofstream meta((fs::path(out_dir) / "run_meta.json").string());
    meta << "{\"wall_ms\":" << wall_ms << ",\"steps\":" << step << "}\n";

    PretrainResult result;
    result.checkpoint_path = ckpt_path;
    result.trainlog_path = trainlog_path;
    result.steps = step;
    result.last_report = last;
    return result;
}

} // namespace ddcl::training
