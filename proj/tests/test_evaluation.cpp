#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "ddcl/evaluation.hpp"
#include "ddcl/training.hpp"

using namespace ddcl;
namespace e = ddcl::eval;

namespace {

e::FeatureBank make_bank(const MatF& feats, const std::vector<std::uint32_t>& labels) {
    e::FeatureBank b;
    b.features = feats;
    b.labels = labels;
    return b;
}

e::EvalParams quick_params() {
    e::EvalParams p;
    p.probe_epochs = 60;
    p.probe_lr = 0.5;
    p.probe_batch = 64;
    p.seed = 5;
    return p;
}

// independent exhaustive-search reference for the knn contract
std::uint32_t knn_oracle_predict(const MatF& train, const std::vector<std::uint32_t>& labels,
                                 const float* query, std::size_t k) {
    struct Hit {
        double dist;
        std::size_t idx;
    };
    std::vector<Hit> hits;
    for (std::size_t t = 0; t < train.rows(); ++t) {
        double dot = 0, na = 0, nb = 0;
        for (std::size_t j = 0; j < train.cols(); ++j) {
            dot += double(query[j]) * train(t, j);
            na += double(query[j]) * query[j];
            nb += double(train(t, j)) * train(t, j);
        }
        double cos = (na < 1e-24 || nb < 1e-24) ? 0.0 : dot / std::sqrt(na * nb);
        hits.push_back({1.0 - cos, t});
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        return a.idx < b.idx;
    });
    std::uint32_t classes = 0;
    for (auto l : labels) classes = std::max(classes, l + 1);
    std::vector<std::size_t> votes(classes, 0);
    std::vector<double> summed(classes, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
        votes[labels[hits[r].idx]]++;
        summed[labels[hits[r].idx]] += hits[r].dist;
    }
    std::uint32_t best = 0;
    for (std::uint32_t c = 1; c < classes; ++c)
        if (votes[c] > votes[best] || (votes[c] == votes[best] && summed[c] < summed[best]))
            best = c;
    return best;
}

config::ExperimentConfig micro_exp() {
    config::ExperimentConfig cfg;
    cfg.seed = 31;
    cfg.dataset.synth.n_per_class = 10;
    cfg.dataset.synth.size = 16;
    cfg.dataset.synth.seed = 12;
    cfg.model.input_size = 16;
    cfg.model.conv_channels = {4, 8};
    cfg.model.output_dim = 16;
    cfg.model.dr = 0.75;
    cfg.model.proj_hidden = 8;
    cfg.model.head_dim = 8;
    cfg.eval.probe_epochs = 40;
    cfg.eval.probe_lr = 0.5;
    cfg.eval.probe_batch = 32;
    return cfg;
}

} // namespace

TEST_CASE("linear probe separates a linearly separable bank perfectly") {
    Rng rng(1);
    const std::size_t n = 60;
    MatF train(n, 4), test(n, 4);
    std::vector<std::uint32_t> labels(n);
    auto fill = [&](MatF& m) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t cls = i % 2;
            labels[i] = cls;
            for (std::size_t j = 0; j < 4; ++j)
                m(i, j) = static_cast<float>(rng.uniform(-0.3, 0.3)) +
                          (j == 0 ? (cls == 0 ? 1.5f : -1.5f) : 0.0f);
        }
    };
    fill(train);
    fill(test);
    const auto acc =
        e::linear_probe(make_bank(train, labels), make_bank(test, labels), quick_params());
    CHECK(acc.top1 == 100.0);
    CHECK(acc.top3 == 100.0);
}

TEST_CASE("shuffled labels land at chance level") {
    Rng rng(7);
    const std::size_t n = 400;
    MatF feats(n, 8);
    for (auto& v : feats.storage()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    std::vector<std::uint32_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::uint32_t>(rng.uniform_int(4));
    auto p = quick_params();
    p.probe_epochs = 30;
    const auto acc = e::linear_probe(make_bank(feats, labels), make_bank(feats, labels), p);
    // same features, shuffled labels: nothing to learn beyond class priors
    CHECK(acc.top1 >= 25.0 - 5.0);
    CHECK(acc.top1 <= 25.0 + 12.0);
    CHECK(acc.top3 >= acc.top1);
}

TEST_CASE("top3 dominates top1 on random banks") {
    Rng rng(17);
    for (int t = 0; t < 5; ++t) {
        const std::size_t n = 50;
        MatF feats(n, 6);
        for (auto& v : feats.storage()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        std::vector<std::uint32_t> labels(n);
        for (std::size_t i = 0; i < n; ++i)
            labels[i] = static_cast<std::uint32_t>(rng.uniform_int(5));
        auto p = quick_params();
        p.probe_epochs = 10;
        const auto acc = e::linear_probe(make_bank(feats, labels), make_bank(feats, labels), p);
        CHECK(acc.top3 >= acc.top1);
    }
}

TEST_CASE("single-class training bank is rejected") {
    MatF feats(4, 3, 1.0f);
    std::vector<std::uint32_t> labels{0, 0, 0, 0};
    CHECK_THROWS_AS(e::train_linear_probe(make_bank(feats, labels), quick_params()),
                    InvalidInput);
}

TEST_CASE("knn") {
    Rng rng(3);
    const std::size_t n = 20;
    MatF train(n, 5);
    std::vector<std::uint32_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<std::uint32_t>(i % 3);
        for (std::size_t j = 0; j < 5; ++j)
            train(i, j) = static_cast<float>(rng.uniform(-1.0, 1.0)) +
                          (j == labels[i] ? 1.0f : 0.0f);
    }
    auto train_bank = make_bank(train, labels);

    SUBCASE("a duplicated train point at k=1 returns its own label") {
        MatF q(1, 5);
        for (std::size_t j = 0; j < 5; ++j) q(0, j) = train(4, j);
        auto test_bank = make_bank(q, {labels[4]});
        CHECK(e::knn_eval(train_bank, test_bank, 1) == 100.0);
    }
    SUBCASE("k equal to the bank size votes the majority class everywhere") {
        // labels 0..2 appear 7,7,6 times; ties by summed distance
        MatF q(2, 5);
        for (auto& v : q.storage()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        auto test_bank = make_bank(q, {0, 0});
        const double acc = e::knn_eval(train_bank, test_bank, n);
        // both queries receive the same majority prediction
        CHECK((acc == 0.0 || acc == 50.0 || acc == 100.0));
    }
    SUBCASE("matches the exhaustive oracle on a hand-built bank") {
        MatF q(30, 5);
        std::vector<std::uint32_t> qlabels(30);
        for (std::size_t i = 0; i < 30; ++i) {
            qlabels[i] = static_cast<std::uint32_t>(rng.uniform_int(3));
            for (std::size_t j = 0; j < 5; ++j)
                q(i, j) = static_cast<float>(rng.uniform(-1.5, 1.5));
        }
        for (std::size_t k : {1u, 3u, 7u, 20u}) {
            std::size_t oracle_hits = 0;
            for (std::size_t i = 0; i < 30; ++i)
                if (knn_oracle_predict(train, labels, q.row(i), k) == qlabels[i]) ++oracle_hits;
            const double expect = 100.0 * double(oracle_hits) / 30.0;
            CHECK(e::knn_eval(train_bank, make_bank(q, qlabels), k) ==
                  doctest::Approx(expect).epsilon(1e-12));
        }
    }
    SUBCASE("k beyond the bank is rejected") {
        CHECK_THROWS_AS(e::knn_eval(train_bank, train_bank, n + 1), InvalidInput);
    }
}

TEST_CASE("feature extraction against a frozen net") {
    auto cfg = micro_exp();
    auto [train_set, test_set] = config::load_split(cfg);
    Rng init(fold_u64(cfg.seed, 0x1417ULL));
    model::Net net(cfg.model, true, init);
    const aug::DistortionSuite identity{aug::SuiteKind::identity, 5};

    auto full = e::extract_features(net, test_set, identity, e::Part::full);
    auto dir = e::extract_features(net, test_set, identity, e::Part::dir);
    auto dvr = e::extract_features(net, test_set, identity, e::Part::dvr);

    SUBCASE("identity extraction twice is bit-identical") {
        auto again = e::extract_features(net, test_set, identity, e::Part::full);
        CHECK(again.features.storage() == full.features.storage());
        CHECK(again.prov.distortion_digest == full.prov.distortion_digest);
    }
    SUBCASE("part widths and columnwise concat equality") {
        CHECK(dir.features.cols() == 12);  // floor(0.75 * 16)
        CHECK(dvr.features.cols() == 4);
        for (std::size_t i = 0; i < full.features.rows(); ++i) {
            for (std::size_t j = 0; j < 12; ++j)
                CHECK(full.features(i, j) == dir.features(i, j));
            for (std::size_t j = 0; j < 4; ++j)
                CHECK(full.features(i, 12 + j) == dvr.features(i, j));
        }
    }
    SUBCASE("distorted extraction is seed-stable across parts") {
        const aug::DistortionSuite cj{aug::SuiteKind::cj_90, 42};
        auto a = e::extract_features(net, test_set, cj, e::Part::dir);
        auto b = e::extract_features(net, test_set, cj, e::Part::dvr);
        CHECK(a.prov.distortion_digest == b.prov.distortion_digest);
    }
}

TEST_CASE("robustness sweep: identity column reproduces base accuracy exactly") {
    auto cfg = micro_exp();
    auto [train_set, test_set] = config::load_split(cfg);
    Rng init(fold_u64(cfg.seed, 0x1417ULL));
    model::Net net(cfg.model, true, init);
    auto params = e::EvalParams::from(cfg);
    params.probe_lr = 0.5;
    params.probe_batch = 32;

    const auto table = e::robustness_sweep(net, train_set, test_set,
                                           {e::Part::full, e::Part::dir}, params, 7, {});
    REQUIRE(table.col_names.size() == 5);
    CHECK(table.col_names[0] == "Identity");
    CHECK(table.col_names[4] == "CJ+90°+ET");
    REQUIRE(table.row_names.size() == 2);

    // base accuracy via the same probe path
    const aug::DistortionSuite identity{aug::SuiteKind::identity, 7};
    for (std::size_t r = 0; r < 2; ++r) {
        const e::Part part = r == 0 ? e::Part::full : e::Part::dir;
        auto tr = e::extract_features(net, train_set, identity, part);
        auto te = e::extract_features(net, test_set, identity, part);
        const auto base = e::linear_probe(tr, te, params);
        CHECK(table.values[r][0] == base.top1);
    }
}

TEST_CASE("seeded derangement has no fixed points and replays") {
    for (std::size_t n : {2u, 3u, 10u, 101u}) {
        auto d1 = e::seeded_derangement(n, 33);
        auto d2 = e::seeded_derangement(n, 33);
        CHECK(d1 == d2);
        std::set<std::size_t> seen;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(d1[i] != i);
            seen.insert(d1[i]);
        }
        CHECK(seen.size() == n);  // a valid permutation
    }
    CHECK_FALSE(e::seeded_derangement(10, 33) == e::seeded_derangement(10, 34));
}

TEST_CASE("brick study identity cell reproduces the unaltered accuracy") {
    auto cfg = micro_exp();
    auto [train_set, test_set] = config::load_split(cfg);
    Rng init(fold_u64(cfg.seed, 0x1417ULL));
    model::Net net(cfg.model, true, init);
    auto params = e::EvalParams::from(cfg);
    params.probe_lr = 0.5;
    params.probe_batch = 32;

    const auto table = e::brick_study(net, train_set, test_set, params, 9, {});
    REQUIRE(table.row_names.size() == 3);
    REQUIRE(table.col_names.size() == 5);
    CHECK(table.col_names[3] == "Dif.Inst+Flip+90°");
    CHECK(table.col_names[4] == "Zero DVR");

    // row Orig., col Orig. is the plain full-feature evaluation
    const aug::DistortionSuite identity{aug::SuiteKind::identity, 9};
    auto tr = e::extract_features(net, train_set, identity, e::Part::full);
    auto te = e::extract_features(net, test_set, identity, e::Part::full);
    const auto base = e::linear_probe(tr, te, params);
    CHECK(table.values[0][0] == base.top1);
    // every cell is a valid accuracy
    for (const auto& row : table.values)
        for (double v : row) {
            CHECK(v >= 0.0);
            CHECK(v <= 100.0);
        }
}

TEST_CASE("dvr orthogonality diagnostic is a mean |cos| in [0,1]") {
    auto cfg = micro_exp();
    auto [train_set, test_set] = config::load_split(cfg);
    for (bool asym : {true, false}) {
        Rng init(fold_u64(cfg.seed, 0x1417ULL));
        model::Net net(cfg.model, asym, init);
        const auto strategy = training::strategy_from(cfg);
        const double v1 = e::dvr_orthogonality(net, test_set, strategy, 4);
        const double v2 = e::dvr_orthogonality(net, test_set, strategy, 4);
        CHECK(v1 == v2);
        CHECK(v1 >= 0.0);
        CHECK(v1 <= 1.0);
    }
}

TEST_CASE("table serialization embeds provenance") {
    e::Table t;
    t.title = "linear";
    t.col_names = {"top1", "top3"};
    t.row_names = {"full"};
    t.values = {{91.25, 99.5}};
    t.prov.checkpoint_hash = 0xabcdef;
    t.prov.seed = 7;
    e::write_table_csv(t, "table_test.csv");
    e::write_table_json(t, "table_test.json");
    std::ifstream is("table_test.csv");
    std::string first, header, row;
    std::getline(is, first);
    std::getline(is, header);
    std::getline(is, row);
    CHECK(first.find("checkpoint_hash=0000000000abcdef") != std::string::npos);
    CHECK(header == "part,top1,top3");
    CHECK(row == "full,91.250000,99.500000");
    std::remove("table_test.csv");
    std::remove("table_test.json");
}

TEST_CASE("transfer probe to the pretraining data equals the in-domain probe") {
    auto cfg = micro_exp();
    auto [train_set, test_set] = config::load_split(cfg);
    Rng init(fold_u64(cfg.seed, 0x1417ULL));
    model::Net net(cfg.model, true, init);

    // persist the pretraining dataset, then compare against the in-domain
    // probe on the reloaded copy (u8 quantization makes the file the source
    // of truth on both sides)
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "ddcl_transfer_self";
    fs::remove_all(dir);
    data::Dataset full = data::generate_synth(cfg.dataset.synth);
    data::save_image_directory(full, dir.string());

    auto params = e::EvalParams::from(cfg);
    params.probe_lr = 0.5;
    params.probe_batch = 32;
    const auto transfer = e::transfer_probe(net, dir.string(), cfg.dataset.train_fraction,
                                            cfg.dataset.split_seed, params);

    const data::Dataset reloaded =
        data::load_dataset(dir.string(), data::Format::image_directory);
    auto [tr, te] = data::split_dataset(reloaded, cfg.dataset.train_fraction,
                                        cfg.dataset.split_seed);
    const aug::DistortionSuite identity{aug::SuiteKind::identity, params.seed};
    const auto tr_bank = e::extract_features(net, tr, identity, e::Part::full);
    const auto te_bank = e::extract_features(net, te, identity, e::Part::full);
    const auto in_domain = e::linear_probe(tr_bank, te_bank, params);

    REQUIRE(transfer.count("full") == 1);
    CHECK(transfer.at("full").top1 == in_domain.top1);
    CHECK(transfer.at("full").top3 == in_domain.top3);
    CHECK(transfer.count("dir") == 1);
    CHECK(transfer.count("dvr") == 1);
    fs::remove_all(dir);

    SUBCASE("unreadable directory raises") {
        CHECK_THROWS_AS(e::transfer_probe(net, "/nonexistent/labeled_dir", 0.8, 1, params),
                        IoError);
    }
}

TEST_CASE("feature-normalization flag is honored end to end") {
    Rng rng(88);
    const std::size_t n = 40;
    MatF train(n, 3), test(n, 3);
    std::vector<std::uint32_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<std::uint32_t>(i % 2);
        const float scale = labels[i] == 0 ? 0.01f : 100.0f;  // direction is the signal
        for (std::size_t j = 0; j < 3; ++j) {
            const float v = static_cast<float>(rng.uniform(-0.2, 0.2)) +
                            (j == labels[i] ? 1.0f : 0.0f);
            train(i, j) = v * scale;
            test(i, j) = v * scale;
        }
    }
    auto p = quick_params();
    p.normalize_features = true;
    const auto acc = e::linear_probe(make_bank(train, labels), make_bank(test, labels), p);
    CHECK(acc.top1 == 100.0);
}
