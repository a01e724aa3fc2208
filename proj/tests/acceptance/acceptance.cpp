// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Heavy artifacts (the 50-epoch desk runs) are produced once and shared by
// the criteria that need them.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ddcl/augmentation.hpp"
#include "ddcl/checkpoint.hpp"
#include "ddcl/config.hpp"
#include "ddcl/evaluation.hpp"
#include "ddcl/kernels.hpp"
#include "ddcl/losses.hpp"
#include "ddcl/representation.hpp"
#include "ddcl/threadpool.hpp"
#include "ddcl/training.hpp"

#include "../oracle_losses.hpp"

namespace fs = std::filesystem;
using namespace ddcl;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

MatD random_mat(Rng& rng, std::size_t B, std::size_t D) {
    MatD m(B, D);
    for (auto& v : m.storage()) v = rng.uniform(-2.0, 2.0);
    return m;
}

MatD wrap_mat(const oracle::Vec& x, std::size_t B, std::size_t D) {
    MatD m(B, D);
    m.storage() = x;
    return m;
}

// ---- the shared desk-scale experiment ----

config::ExperimentConfig desk_config(const std::string& out_dir) {
    config::ExperimentConfig cfg;
    cfg.seed = 7;
    cfg.output_dir = out_dir;
    cfg.dataset.synth.n_per_class = 200;
    cfg.dataset.synth.size = 64;
    cfg.dataset.synth.seed = 1234;
    cfg.dataset.train_fraction = 0.8;
    cfg.dataset.split_seed = 5;
    cfg.model.input_size = 64;
    cfg.model.conv_channels = {16, 32, 64, 64};
    cfg.model.output_dim = 64;
    cfg.model.dr = 0.8;
    cfg.model.proj_hidden = 64;
    cfg.model.head_dim = 16;
    cfg.train.mode = "asymmetric";
    cfg.train.epochs = 50;
    cfg.train.batch_size = 64;
    cfg.train.base_lr = 0.24;  // x 64/512 -> effective 0.03
    cfg.train.scale_lr_by_batch = true;
    cfg.train.warmup_epochs = 5;
    cfg.train.strategy = "CAug";
    cfg.eval.probe_epochs = 100;
    cfg.eval.probe_lr = 0.5;
    cfg.eval.probe_batch = 128;
    cfg.eval.knn_k = 20;
    return cfg;
}

struct SharedRuns {
    fs::path root;
    config::ExperimentConfig cfg_main;     // gamma = 1
    config::ExperimentConfig cfg_control;  // gamma = 0
    data::Dataset train_set, test_set;
    std::unique_ptr<model::Net> net_main, net_control;
    double dynamics_seconds = 0.0;

    static std::unique_ptr<model::Net> load_net(const std::string& path) {
        const auto ck = ckpt::load(path);
        const auto cfg = config::parse_json_text(ck.config_json);
        Rng tmp(1);
        auto net = std::make_unique<model::Net>(cfg.model, cfg.train.mode == "asymmetric", tmp);
        ckpt::restore(*net, ck);
        return net;
    }

    void prepare() {
        root = fs::current_path() / "acceptance_scratch";
        fs::remove_all(root);
        fs::create_directories(root);

        cfg_main = desk_config((root / "main").string());
        cfg_control = desk_config((root / "control").string());
        cfg_control.train.gamma = 0.0;

        auto split = config::load_split(cfg_main);
        train_set = std::move(split.first);
        test_set = std::move(split.second);

        const auto t0 = Clock::now();
        const auto r_main = training::pretrain(cfg_main, train_set, (root / "main").string());
        const auto r_ctrl =
            training::pretrain(cfg_control, train_set, (root / "control").string());
        dynamics_seconds = seconds_since(t0);

        net_main = load_net(r_main.checkpoint_path);
        net_control = load_net(r_ctrl.checkpoint_path);
    }
};

SharedRuns g_runs;

// ---- criteria ----

bool loss_oracle_suite(std::string& detail) {
    const auto t0 = Clock::now();
    Rng rng(20240801);
    losses::Hyperparams h;
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t B = 2 + rng.uniform_int(15);  // [2, 16]
        const std::size_t D = 2 + rng.uniform_int(63);  // [2, 64]
        const MatD zi1 = random_mat(rng, B, D), zi2 = random_mat(rng, B, D);
        const MatD zv1 = random_mat(rng, B, D), zv2 = random_mat(rng, B, D);
        const MatD pi1 = random_mat(rng, B, D), pi2 = random_mat(rng, B, D);
        const MatD pv1 = random_mat(rng, B, D), pv2 = random_mat(rng, B, D);

        auto f = [](const MatD& m) -> const oracle::Vec& { return m.storage(); };

        const MatD n = losses::normalize_columns(zi1);
        const oracle::Vec n_ref = oracle::normalize(f(zi1), B, D);
        for (std::size_t i = 0; i < n.size(); ++i)
            worst = std::max(worst, std::fabs(n.storage()[i] - n_ref[i]));

        const MatD C = losses::cross_correlation(zi1, zi2);
        const oracle::Vec c_ref = oracle::crosscorr(f(zi1), f(zi2), B, D);
        for (std::size_t i = 0; i < C.size(); ++i)
            worst = std::max(worst, std::fabs(C.storage()[i] - c_ref[i]));

        worst = std::max(worst, std::fabs(losses::bt_loss(C, h).value -
                                          oracle::bt(c_ref, D, h.lambda_offdiag)));
        worst = std::max(worst, std::fabs(losses::cosine_similarity(pv1, zv2) -
                                          oracle::mean_cos(f(pv1), f(zv2), B, D)));
        worst = std::max(worst, std::fabs(losses::simsiam_loss(pi1, pi2, zi1, zi2) -
                                          oracle::simsiam(f(pi1), f(pi2), f(zi1), f(zi2), B, D)));
        worst = std::max(worst, std::fabs(losses::ddl_distance(zv1, zv2, h.xi) -
                                          oracle::ddl_dist(f(zv1), f(zv2), B, D, h.xi)));
        worst = std::max(worst, std::fabs(losses::ddl_symmetric(zv1, zv2, h) -
                                          oracle::ddl_dist(f(zv1), f(zv2), B, D, h.xi)));
        const double asy_ref = 0.5 * oracle::ddl_dist(f(pv1), f(zv2), B, D, h.xi) +
                               0.5 * oracle::ddl_dist(f(pv2), f(zv1), B, D, h.xi);
        worst =
            std::max(worst, std::fabs(losses::ddl_asymmetric(pv1, pv2, zv1, zv2, h) - asy_ref));

        const auto sym = losses::total_loss_symmetric(zi1, zi2, zv1, zv2, h);
        worst = std::max(worst,
                         std::fabs(sym.total - oracle::total_sym(f(zi1), f(zi2), f(zv1), f(zv2),
                                                                 B, D, h.lambda_offdiag, h.gamma,
                                                                 h.xi)));
        const auto asy =
            losses::total_loss_asymmetric(pi1, pi2, zi1, zi2, pv1, pv2, zv1, zv2, h);
        worst = std::max(worst, std::fabs(asy.total - oracle::total_asy(
                                                          f(pi1), f(pi2), f(zi1), f(zi2), f(pv1),
                                                          f(pv2), f(zv1), f(zv2), B, D, h.gamma,
                                                          h.xi)));
    }
    const double secs = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "worst abs dev %.3g (<=1e-10), 1000 instances, %.2fs (<10s)",
                  worst, secs);
    detail = buf;
    return worst <= 1e-10 && secs < 10.0;
}

bool gradient_suite(std::string& detail) {
    const auto t0 = Clock::now();
    Rng rng(998877);
    losses::Hyperparams h;
    double worst = 0.0, worst_sg = 0.0;

    auto check = [&](const std::function<double(const oracle::Vec&)>& f, const oracle::Vec& x,
                     const oracle::Vec& analytic) {
        const oracle::Vec fd = oracle::finite_diff(f, x);
        worst = std::max(worst, oracle::rel_error(analytic, fd));
    };

    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t B = 2 + rng.uniform_int(7);
        const std::size_t D = 2 + rng.uniform_int(15);
        const MatD zi1 = random_mat(rng, B, D), zi2 = random_mat(rng, B, D);
        const MatD zv1 = random_mat(rng, B, D), zv2 = random_mat(rng, B, D);
        const MatD pi1 = random_mat(rng, B, D), pi2 = random_mat(rng, B, D);
        const MatD pv1 = random_mat(rng, B, D), pv2 = random_mat(rng, B, D);
        auto wrap = [&](const oracle::Vec& x) { return wrap_mat(x, B, D); };

        {
            const MatD C = random_mat(rng, D, D);
            const MatD g = losses::bt_loss_grad(C, h);
            check([&](const oracle::Vec& x) { return losses::bt_loss(wrap_mat(x, D, D), h).value; },
                  C.storage(), g.storage());
        }
        {
            MatD dp1, dp2;
            losses::simsiam_loss(pi1, pi2, zi1, zi2, &dp1, &dp2);
            check([&](const oracle::Vec& x) { return losses::simsiam_loss(wrap(x), pi2, zi1, zi2); },
                  pi1.storage(), dp1.storage());
            check([&](const oracle::Vec& x) { return losses::simsiam_loss(pi1, wrap(x), zi1, zi2); },
                  pi2.storage(), dp2.storage());
        }
        {
            MatD d1, d2;
            losses::ddl_symmetric(zv1, zv2, h, &d1, &d2);
            check([&](const oracle::Vec& x) { return losses::ddl_symmetric(wrap(x), zv2, h); },
                  zv1.storage(), d1.storage());
            check([&](const oracle::Vec& x) { return losses::ddl_symmetric(zv1, wrap(x), h); },
                  zv2.storage(), d2.storage());
        }
        {
            MatD dp1, dp2, dz1, dz2;
            losses::ddl_asymmetric(pv1, pv2, zv1, zv2, h, &dp1, &dp2, &dz1, &dz2);
            check([&](const oracle::Vec& x) {
                return losses::ddl_asymmetric(wrap(x), pv2, zv1, zv2, h);
            }, pv1.storage(), dp1.storage());
            for (double v : dz1.storage()) worst_sg = std::max(worst_sg, std::fabs(v));
            for (double v : dz2.storage()) worst_sg = std::max(worst_sg, std::fabs(v));
        }
        {
            losses::SymmetricGrads g;
            losses::total_loss_symmetric(zi1, zi2, zv1, zv2, h, &g);
            check([&](const oracle::Vec& x) {
                return losses::total_loss_symmetric(wrap(x), zi2, zv1, zv2, h).total;
            }, zi1.storage(), g.dzi1.storage());
            check([&](const oracle::Vec& x) {
                return losses::total_loss_symmetric(zi1, zi2, zv1, wrap(x), h).total;
            }, zv2.storage(), g.dzv2.storage());
        }
        {
            losses::AsymmetricGrads g;
            losses::total_loss_asymmetric(pi1, pi2, zi1, zi2, pv1, pv2, zv1, zv2, h, &g);
            check([&](const oracle::Vec& x) {
                return losses::total_loss_asymmetric(pi1, pi2, zi1, zi2, wrap(x), pv2, zv1, zv2, h)
                    .total;
            }, pv1.storage(), g.dpv1.storage());
        }
    }
    const double secs = seconds_since(t0);
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "worst rel err %.3g (<=1e-4), worst sg grad %.3g (==0), %.2fs (<60s)", worst,
                  worst_sg, secs);
    detail = buf;
    return worst <= 1e-4 && worst_sg == 0.0 && secs < 60.0;
}

bool decomposition_identity(std::string& detail) {
    config::ExperimentConfig cfg;
    cfg.seed = 99;
    cfg.dataset.synth.n_per_class = 44;  // 140 train -> 18 steps/epoch at B=8
    cfg.dataset.synth.size = 16;
    cfg.dataset.synth.seed = 77;
    cfg.model.input_size = 16;
    cfg.model.conv_channels = {4, 8};
    cfg.model.output_dim = 16;
    cfg.model.dr = 0.75;
    cfg.model.proj_hidden = 8;
    cfg.model.head_dim = 8;
    cfg.train.epochs = 12;
    cfg.train.batch_size = 8;
    cfg.train.warmup_epochs = 2;
    auto [train_set, test_set] = config::load_split(cfg);
    const auto r = training::pretrain(cfg, train_set, (g_runs.root / "decomp").string());

    std::ifstream is(r.trainlog_path);
    std::string line;
    std::size_t steps = 0;
    double worst = 0.0;
    while (std::getline(is, line)) {
        if (line.find("\"step\"") == std::string::npos) continue;
        auto grab = [&](const char* key) {
            return std::stod(line.substr(line.find(key) + std::strlen(key)));
        };
        const double total = grab("\"total\":");
        const double dir = grab("\"dir\":");
        const double ddl = grab("\"ddl\":");
        worst = std::max(worst, std::fabs(total - (dir + cfg.train.gamma * ddl)) /
                                    std::max(1.0, std::fabs(total)));
        ++steps;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%zu steps, worst rel residual %.3g (<=1e-9)", steps, worst);
    detail = buf;
    return steps >= 200 && worst <= 1e-9;
}

bool grouping_round_trip(std::string& detail) {
    Rng rng(13579);
    std::size_t checked = 0;
    for (double dr : {0.2, 0.4, 0.6, 0.8}) {
        for (std::size_t d = 2; d <= 8192; d = d < 16 ? d + 1 : d * 2 + 1) {
            const auto d_i = static_cast<std::size_t>(std::floor(dr * double(d)));
            if (d_i == 0 || d_i >= d) continue;
            std::vector<float> y(d);
            for (auto& v : y) v = static_cast<float>(rng.uniform(-10.0, 10.0));
            const auto sp = repr::split(y, dr);
            if (repr::concat(sp.dir, sp.dvr) != y) {
                detail = "round trip mismatch at d=" + std::to_string(d);
                return false;
            }
            ++checked;
        }
        // the exact top of the grid
        std::vector<float> top(8192);
        for (auto& v : top) v = static_cast<float>(rng.uniform(-10.0, 10.0));
        const auto sp = repr::split(top, dr);
        if (repr::concat(sp.dir, sp.dvr) != top) {
            detail = "round trip mismatch at d=8192";
            return false;
        }
        ++checked;
    }
    detail = std::to_string(checked) + " (d, DR) combinations bit-exact, d up to 8192";
    return true;
}

bool determinism_criterion(std::string& detail) {
    auto cfg = desk_config((g_runs.root / "det1").string());
    cfg.train.epochs = 2;
    cfg.train.warmup_epochs = 1;
    cfg.train.checkpoint_every = 1;

    auto [train_set, test_set] = config::load_split(cfg);
    const auto r1 = training::pretrain(cfg, train_set, (g_runs.root / "det1").string());
    const auto r2 = training::pretrain(cfg, train_set, (g_runs.root / "det2").string());

    const bool ckpt_equal = slurp(r1.checkpoint_path) == slurp(r2.checkpoint_path);
    const bool log_equal = slurp(r1.trainlog_path) == slurp(r2.trainlog_path);

    const std::string mid = (g_runs.root / "det1" / "checkpoint_epoch1.ddcl").string();
    const auto r3 =
        training::pretrain(cfg, train_set, (g_runs.root / "det_resume").string(), mid);
    const bool resume_equal = slurp(r3.checkpoint_path) == slurp(r1.checkpoint_path);

    detail = std::string("checkpoints ") + (ckpt_equal ? "identical" : "DIFFER") +
             ", trainlogs " + (log_equal ? "identical" : "DIFFER") + ", resume " +
             (resume_equal ? "bit-exact" : "DIFFERS");
    return ckpt_equal && log_equal && resume_equal;
}

bool disentanglement_dynamics(std::string& detail) {
    const auto strategy = training::strategy_from(g_runs.cfg_main);
    const double treated =
        eval::dvr_orthogonality(*g_runs.net_main, g_runs.test_set, strategy, 2025);
    const double control =
        eval::dvr_orthogonality(*g_runs.net_control, g_runs.test_set, strategy, 2025);
    char buf[220];
    std::snprintf(buf, sizeof(buf),
                  "gamma=1 held-out |cos| %.4f (<0.15), gamma=0 control %.4f (>=0.15), runs took "
                  "%.1fs (<1200s)",
                  treated, control, g_runs.dynamics_seconds);
    detail = buf;
    return treated < 0.15 && control >= 0.15 && g_runs.dynamics_seconds < 1200.0;
}

bool functional_learning(std::string& detail) {
    auto params = eval::EvalParams::from(g_runs.cfg_main);
    const aug::DistortionSuite identity{aug::SuiteKind::identity,
                                        g_runs.cfg_main.eval.suite_seed};
    const auto tr_full =
        eval::extract_features(*g_runs.net_main, g_runs.train_set, identity, eval::Part::full);
    const auto te_full =
        eval::extract_features(*g_runs.net_main, g_runs.test_set, identity, eval::Part::full);
    const auto tr_dir =
        eval::extract_features(*g_runs.net_main, g_runs.train_set, identity, eval::Part::dir);
    const auto te_dir =
        eval::extract_features(*g_runs.net_main, g_runs.test_set, identity, eval::Part::dir);
    const auto acc_full = eval::linear_probe(tr_full, te_full, params);
    const auto acc_dir = eval::linear_probe(tr_dir, te_dir, params);
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "top1(full) %.2f%% (>=85%%), top1(DIR) %.2f%%, full >= DIR - 0.5: %s",
                  acc_full.top1, acc_dir.top1,
                  acc_full.top1 >= acc_dir.top1 - 0.5 ? "yes" : "NO");
    detail = buf;
    return acc_full.top1 >= 85.0 && acc_full.top1 >= acc_dir.top1 - 0.5;
}

bool robustness_harness(std::string& detail) {
    auto params = eval::EvalParams::from(g_runs.cfg_main);
    params.probe_epochs = 60;
    const std::uint64_t suite_seed = g_runs.cfg_main.eval.suite_seed;
    const auto table = eval::robustness_sweep(
        *g_runs.net_main, g_runs.train_set, g_runs.test_set,
        {eval::Part::full, eval::Part::dir, eval::Part::dvr}, params, suite_seed, {});

    const bool columns_ok = table.col_names.size() == 5 && table.col_names[0] == "Identity" &&
                            table.col_names[1] == "CJ" && table.col_names[2] == "CJ+Flip" &&
                            table.col_names[3] == "CJ+90°" && table.col_names[4] == "CJ+90°+ET";

    bool identity_ok = true;
    const aug::DistortionSuite identity{aug::SuiteKind::identity, suite_seed};
    const eval::Part parts[3] = {eval::Part::full, eval::Part::dir, eval::Part::dvr};
    for (int r = 0; r < 3; ++r) {
        const auto tr =
            eval::extract_features(*g_runs.net_main, g_runs.train_set, identity, parts[r]);
        const auto te =
            eval::extract_features(*g_runs.net_main, g_runs.test_set, identity, parts[r]);
        if (table.values[r][0] != eval::linear_probe(tr, te, params).top1) identity_ok = false;
    }

    const aug::DistortionSuite cj90{aug::SuiteKind::cj_90, suite_seed};
    const auto a =
        eval::extract_features(*g_runs.net_main, g_runs.test_set, cj90, eval::Part::full);
    const auto b =
        eval::extract_features(*g_runs.net_main, g_runs.test_set, cj90, eval::Part::dvr);
    const bool audit_ok = a.prov.distortion_digest == b.prov.distortion_digest;

    eval::write_table_csv(table, (g_runs.root / "robustness.csv").string());
    detail = std::string("columns ") + (columns_ok ? "ok" : "WRONG") + ", identity column " +
             (identity_ok ? "exact" : "DIFFERS") + ", seed audit " +
             (audit_ok ? "identical" : "DIFFERS");
    return columns_ok && identity_ok && audit_ok;
}

bool brick_harness(std::string& detail) {
    auto params = eval::EvalParams::from(g_runs.cfg_main);
    params.probe_epochs = 60;
    const std::uint64_t seed = g_runs.cfg_main.eval.suite_seed;
    const auto table =
        eval::brick_study(*g_runs.net_main, g_runs.train_set, g_runs.test_set, params, seed, {});

    const aug::DistortionSuite identity{aug::SuiteKind::identity, seed};
    const auto tr =
        eval::extract_features(*g_runs.net_main, g_runs.train_set, identity, eval::Part::full);
    const auto te =
        eval::extract_features(*g_runs.net_main, g_runs.test_set, identity, eval::Part::full);
    const auto base = eval::linear_probe(tr, te, params);
    const bool identity_ok = table.values[0][0] == base.top1;

    bool cells_ok = table.values.size() == 3;
    for (const auto& row : table.values) {
        if (row.size() != 5) cells_ok = false;
        for (double v : row)
            if (!(v >= 0.0 && v <= 100.0)) cells_ok = false;
    }
    const auto derangement = eval::seeded_derangement(g_runs.test_set.size(), seed);
    bool derangement_ok = true;
    for (std::size_t i = 0; i < derangement.size(); ++i)
        if (derangement[i] == i) derangement_ok = false;

    eval::write_table_csv(table, (g_runs.root / "brick.csv").string());
    detail = std::string("identity brick ") + (identity_ok ? "exact" : "DIFFERS") +
             ", all 15 cells emitted " + (cells_ok ? "ok" : "INCOMPLETE") + ", derangement " +
             (derangement_ok ? "valid" : "HAS FIXED POINT");
    return identity_ok && cells_ok && derangement_ok;
}

bool augmentation_determinism(std::string& detail) {
    Rng rng(404);
    std::vector<Image> imgs;
    for (int i = 0; i < 16; ++i) {
        Image im(64, 64, 3);
        for (auto& v : im.pixels) v = static_cast<float>(rng.uniform());
        imgs.push_back(std::move(im));
    }
    std::vector<const Image*> ptrs;
    std::vector<std::uint64_t> ids;
    for (int i = 0; i < 16; ++i) {
        ptrs.push_back(&imgs[i]);
        ids.push_back(i);
    }
    auto strategy = aug::AugStrategy::caug_plus(64, 64);
    strategy.use_blur = true;

    set_worker_count(1);
    const auto seq = aug::make_view_pairs(ptrs, ids, strategy, 31337, 3);
    set_worker_count(4);
    const auto par = aug::make_view_pairs(ptrs, ids, strategy, 31337, 3);
    set_worker_count(0);
    bool replay_ok = true;
    for (std::size_t i = 0; i < seq.size(); ++i)
        if (!(seq[i].v1 == par[i].v1 && seq[i].v2 == par[i].v2)) replay_ok = false;

    Rng ergn(5);
    const bool alpha0_ok = aug::elastic_transform(imgs[0], 0.0, 5.0, ergn) == imgs[0];

    Image flat(64, 64, 1, 0.41f);
    bool bound_ok = true;
    for (double alpha : {2.0, 5.0, 9.0}) {
        Rng er(99);
        const Image warped = aug::elastic_transform(flat, alpha, 4.0, er);
        const auto margin = static_cast<std::size_t>(alpha) + 1;
        for (std::size_t y = margin; y < 64 - margin; ++y)
            for (std::size_t x = margin; x < 64 - margin; ++x)
                if (warped.at(y, x, 0) != 0.41f) bound_ok = false;
    }
    detail = std::string("workers {1,4} ") + (replay_ok ? "byte-identical" : "DIFFER") +
             ", alpha=0 " + (alpha0_ok ? "bit-exact" : "NOT IDENTITY") + ", displacement bound " +
             (bound_ok ? "held" : "VIOLATED");
    return replay_ok && alpha0_ok && bound_ok;
}

bool knn_oracle_equivalence(std::string& detail) {
    auto predict_oracle = [](const eval::FeatureBank& train, const float* q, std::size_t dim,
                             std::size_t k) {
        struct Hit {
            double d;
            std::size_t i;
        };
        std::vector<Hit> hits;
        for (std::size_t t = 0; t < train.features.rows(); ++t) {
            double dot = 0, na = 0, nb = 0;
            for (std::size_t j = 0; j < dim; ++j) {
                dot += double(q[j]) * train.features(t, j);
                na += double(q[j]) * q[j];
                nb += double(train.features(t, j)) * train.features(t, j);
            }
            const double cos = (na < 1e-24 || nb < 1e-24) ? 0.0 : dot / std::sqrt(na * nb);
            hits.push_back({1.0 - cos, t});
        }
        std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
            return a.d != b.d ? a.d < b.d : a.i < b.i;
        });
        std::uint32_t classes = 0;
        for (auto l : train.labels) classes = std::max(classes, l + 1);
        std::vector<std::size_t> votes(classes, 0);
        std::vector<double> summed(classes, 0.0);
        for (std::size_t r = 0; r < k; ++r) {
            votes[train.labels[hits[r].i]]++;
            summed[train.labels[hits[r].i]] += hits[r].d;
        }
        std::uint32_t best = 0;
        for (std::uint32_t c = 1; c < classes; ++c)
            if (votes[c] > votes[best] || (votes[c] == votes[best] && summed[c] < summed[best]))
                best = c;
        return best;
    };

    std::size_t mismatches = 0, total = 0;
    auto compare = [&](const eval::FeatureBank& train, const eval::FeatureBank& test,
                       std::size_t k) {
        for (std::size_t i = 0; i < test.features.rows(); ++i) {
            eval::FeatureBank one;
            one.features = MatF(1, test.features.cols());
            for (std::size_t j = 0; j < test.features.cols(); ++j)
                one.features(0, j) = test.features(i, j);
            one.labels = {test.labels[i]};
            const bool lib_hit = eval::knn_eval(train, one, k) == 100.0;
            const bool oracle_hit =
                predict_oracle(train, test.features.row(i), test.features.cols(), k) ==
                test.labels[i];
            if (lib_hit != oracle_hit) ++mismatches;
            ++total;
        }
    };

    const aug::DistortionSuite identity{aug::SuiteKind::identity, 1};
    const auto tr =
        eval::extract_features(*g_runs.net_main, g_runs.train_set, identity, eval::Part::full);
    const auto te =
        eval::extract_features(*g_runs.net_main, g_runs.test_set, identity, eval::Part::full);
    compare(tr, te, 20);
    compare(tr, te, 1);

    Rng rng(606);
    eval::FeatureBank rtrain, rtest;
    rtrain.features = MatF(500, 12);
    for (auto& v : rtrain.features.storage()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    rtrain.labels.resize(500);
    for (auto& l : rtrain.labels) l = static_cast<std::uint32_t>(rng.uniform_int(5));
    rtest.features = MatF(80, 12);
    for (auto& v : rtest.features.storage()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    rtest.labels.resize(80);
    for (auto& l : rtest.labels) l = static_cast<std::uint32_t>(rng.uniform_int(5));
    compare(rtrain, rtest, 20);
    compare(rtrain, rtest, 7);

    detail = std::to_string(total) + " queries vs brute force, " + std::to_string(mismatches) +
             " mismatches (==0)";
    return mismatches == 0;
}

struct Criterion {
    const char* name;
    std::function<bool(std::string&)> fn;
};

} // namespace

int main() {
    std::printf("ddcl acceptance suite (kernel backend: %s, workers: %zu)\n",
                kernels::backend_name(kernels::active_backend()).c_str(), worker_count());

    std::printf("preparing shared desk-scale runs (2 x 50 epochs)...\n");
    std::fflush(stdout);
    const auto t0 = Clock::now();
    g_runs.prepare();
    std::printf("shared runs ready in %.1fs\n\n", seconds_since(t0));
    std::fflush(stdout);

    const std::vector<Criterion> criteria = {
        {"loss-oracle-suite", loss_oracle_suite},
        {"gradient-suite", gradient_suite},
        {"decomposition-identity", decomposition_identity},
        {"grouping-round-trip", grouping_round_trip},
        {"determinism-replay-and-resume", determinism_criterion},
        {"disentanglement-dynamics", disentanglement_dynamics},
        {"functional-learning-check", functional_learning},
        {"robustness-harness-identity", robustness_harness},
        {"brick-study-identity", brick_harness},
        {"augmentation-determinism-and-bounds", augmentation_determinism},
        {"knn-oracle-equivalence", knn_oracle_equivalence},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        std::string detail;
        bool ok = false;
        try {
            ok = c.fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] %-36s %s\n", ok ? "PASS" : "FAIL", c.name, detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    std::printf("\n%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures == 0 ? 0 : 1;
}
