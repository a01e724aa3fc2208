#include "ddcl/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ddcl/binio.hpp"
#include "ddcl/threadpool.hpp"
#include "ddcl/version.hpp"

namespace ddcl::eval {

namespace {

MatF normalized_rows(const MatF& m) {
    MatF out = m;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double n = 0.0;
        for (std::size_t j = 0; j < out.cols(); ++j) n += double(out(i, j)) * out(i, j);
        n = std::sqrt(n);
        if (n > 1e-12)
            for (std::size_t j = 0; j < out.cols(); ++j)
                out(i, j) = static_cast<float>(out(i, j) / n);
    }
    return out;
}

double row_cos(const float* a, const float* b, std::size_t n) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dot += double(a[i]) * b[i];
        na += double(a[i]) * a[i];
        nb += double(b[i]) * b[i];
    }
    if (na < 1e-24 || nb < 1e-24) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

} // namespace

const char* part_name(Part p) {
    switch (p) {
        case Part::full: return "full";
        case Part::dir: return "dir";
        case Part::dvr: return "dvr";
    }
    return "?";
}

Part part_by_name(const std::string& name) {
    if (name == "full") return Part::full;
    if (name == "dir") return Part::dir;
    if (name == "dvr") return Part::dvr;
    throw InvalidInput("unknown part '" + name + "' (full|dir|dvr)");
}

EvalParams EvalParams::from(const config::ExperimentConfig& cfg) {
    EvalParams p;
    p.probe_epochs = cfg.eval.probe_epochs;
    p.probe_lr = cfg.eval.probe_lr;
    p.probe_momentum = cfg.eval.probe_momentum;
    p.probe_weight_decay = cfg.eval.probe_weight_decay;
    p.probe_batch = cfg.eval.probe_batch;
    p.knn_k = cfg.eval.knn_k;
    p.normalize_features = cfg.eval.normalize_features;
    p.seed = cfg.seed;
    return p;
}

FeatureBank extract_features(const model::Net& net, const data::Dataset& ds,
                             const aug::DistortionSuite& suite, Part part, Provenance prov) {
    const std::size_t n = ds.size();
    if (n == 0) throw InvalidInput("extract_features: empty dataset");
    std::vector<Image> distorted(n);
    parallel_for(n, [&](std::size_t i) {
        distorted[i] = aug::apply_suite(ds.items[i].image, suite, ds.items[i].instance_id);
    });

    binio::Fnv64 digest;
    for (const auto& img : distorted)
        digest.add(img.pixels.data(), img.pixels.size() * sizeof(float));

    MatF full(n, net.config().output_dim);
    parallel_for(n, [&](std::size_t i) {
        const MatF y = net.encode_eval(net.to_input({&distorted[i]}));
        for (std::size_t j = 0; j < y.cols(); ++j) full(i, j) = y(0, j);
    });

    FeatureBank bank;
    bank.part = part;
    bank.prov = prov;
    bank.prov.suite = suite.id();
    bank.prov.distortion_digest = digest.state;
    bank.labels.reserve(n);
    for (const auto& item : ds.items) bank.labels.push_back(item.label);
    switch (part) {
        case Part::full: bank.features = full; break;
        case Part::dir: bank.features = repr::split_dir(full, net.config().dr); break;
        case Part::dvr: bank.features = repr::split_dvr(full, net.config().dr); break;
    }
    return bank;
}

LinearProbe train_linear_probe(const FeatureBank& train, const EvalParams& p) {
    const std::size_t n = train.features.rows();
    const std::size_t dim = train.features.cols();
    std::uint32_t classes = 0;
    for (auto l : train.labels) classes = std::max(classes, l + 1);
    if (classes < 2)
        throw InvalidInput("train_linear_probe: degenerate single-class training set");

    const MatF feats = p.normalize_features ? normalized_rows(train.features) : train.features;

    LinearProbe probe;
    probe.w = MatF(classes, dim, 0.0f);
    probe.b.assign(classes, 0.0f);
    probe.normalized_inputs = p.normalize_features;
    MatF vw(classes, dim, 0.0f);
    std::vector<float> vb(classes, 0.0f);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::vector<double> logits(classes), prob(classes);

    for (std::size_t epoch = 0; epoch < p.probe_epochs; ++epoch) {
        Rng rng(fold_u64(fold_u64(p.seed, 0x9806ULL), epoch));
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(i)]);
        for (std::size_t lo = 0; lo < n; lo += p.probe_batch) {
            const std::size_t hi = std::min(n, lo + p.probe_batch);
            MatF gw(classes, dim, 0.0f);
            std::vector<float> gb(classes, 0.0f);
            for (std::size_t bi = lo; bi < hi; ++bi) {
                const std::size_t i = order[bi];
                const float* f = feats.row(i);
                double mx = -1e300;
                for (std::size_t c = 0; c < classes; ++c) {
                    double acc = probe.b[c];
                    for (std::size_t j = 0; j < dim; ++j) acc += double(probe.w(c, j)) * f[j];
                    logits[c] = acc;
                    mx = std::max(mx, acc);
                }
                double zsum = 0.0;
                for (std::size_t c = 0; c < classes; ++c) {
                    prob[c] = std::exp(logits[c] - mx);
                    zsum += prob[c];
                }
                for (std::size_t c = 0; c < classes; ++c) {
                    const double g =
                        prob[c] / zsum - (c == train.labels[i] ? 1.0 : 0.0);
                    gb[c] += static_cast<float>(g);
                    float* gr = gw.row(c);
                    const auto gf = static_cast<float>(g);
                    for (std::size_t j = 0; j < dim; ++j) gr[j] += gf * f[j];
                }
            }
            const float inv = 1.0f / static_cast<float>(hi - lo);
            for (std::size_t c = 0; c < classes; ++c) {
                float* wr = probe.w.row(c);
                float* vr = vw.row(c);
                const float* gr = gw.row(c);
                for (std::size_t j = 0; j < dim; ++j) {
                    const float g = gr[j] * inv + static_cast<float>(p.probe_weight_decay) * wr[j];
                    vr[j] = static_cast<float>(p.probe_momentum) * vr[j] + g;
                    wr[j] -= static_cast<float>(p.probe_lr) * vr[j];
                }
                const float g = gb[c] * inv;
                vb[c] = static_cast<float>(p.probe_momentum) * vb[c] + g;
                probe.b[c] -= static_cast<float>(p.probe_lr) * vb[c];
            }
        }
    }
    return probe;
}

Accuracy evaluate_probe(const LinearProbe& probe, const FeatureBank& test) {
    const std::size_t n = test.features.rows();
    if (n == 0) throw InvalidInput("evaluate_probe: empty bank");
    if (test.features.cols() != probe.w.cols())
        throw ShapeError("evaluate_probe: feature width " + std::to_string(test.features.cols()) +
                         " does not match probe width " + std::to_string(probe.w.cols()));
    const MatF feats = probe.normalized_inputs ? normalized_rows(test.features) : test.features;
    const std::size_t classes = probe.w.rows();
    std::size_t hit1 = 0, hit3 = 0;
    std::vector<std::pair<double, std::size_t>> scored(classes);
    for (std::size_t i = 0; i < n; ++i) {
        const float* f = feats.row(i);
        for (std::size_t c = 0; c < classes; ++c) {
            double acc = probe.b[c];
            for (std::size_t j = 0; j < feats.cols(); ++j) acc += double(probe.w(c, j)) * f[j];
            scored[c] = {acc, c};
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        if (scored[0].second == test.labels[i]) ++hit1;
        const std::size_t top = std::min<std::size_t>(3, classes);
        for (std::size_t r = 0; r < top; ++r)
            if (scored[r].second == test.labels[i]) {
                ++hit3;
                break;
            }
    }
    return {100.0 * double(hit1) / double(n), 100.0 * double(hit3) / double(n)};
}

Accuracy linear_probe(const FeatureBank& train, const FeatureBank& test, const EvalParams& p) {
    return evaluate_probe(train_linear_probe(train, p), test);
}

double knn_eval(const FeatureBank& train, const FeatureBank& test, std::size_t k) {
    const std::size_t n_train = train.features.rows();
    const std::size_t n_test = test.features.rows();
    if (n_train == 0 || n_test == 0) throw InvalidInput("knn_eval: empty bank");
    if (k == 0 || k > n_train)
        throw InvalidInput("knn_eval: k=" + std::to_string(k) + " exceeds train size " +
                           std::to_string(n_train));
    std::uint32_t classes = 0;
    for (auto l : train.labels) classes = std::max(classes, l + 1);

    std::vector<std::size_t> hits(n_test, 0);
    parallel_for(n_test, [&](std::size_t i) {
        std::vector<std::pair<double, std::size_t>> dist(n_train);
        for (std::size_t t = 0; t < n_train; ++t)
            dist[t] = {1.0 - row_cos(test.features.row(i), train.features.row(t),
                                     train.features.cols()),
                       t};
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end(),
                          [](const auto& a, const auto& b) {
                              if (a.first != b.first) return a.first < b.first;
                              return a.second < b.second;
                          });
        std::vector<std::size_t> votes(classes, 0);
        std::vector<double> summed(classes, 0.0);
        for (std::size_t r = 0; r < k; ++r) {
            const auto label = train.labels[dist[r].second];
            votes[label]++;
            summed[label] += dist[r].first;
        }
        std::size_t best = 0;
        for (std::size_t c = 1; c < classes; ++c) {
            if (votes[c] > votes[best] ||
                (votes[c] == votes[best] && summed[c] < summed[best]))
                best = c;
        }
        hits[i] = best == test.labels[i] ? 1 : 0;
    });
    std::size_t total = 0;
    for (auto h : hits) total += h;
    return 100.0 * double(total) / double(n_test);
}

Table robustness_sweep(const model::Net& net, const data::Dataset& train,
                       const data::Dataset& test, const std::vector<Part>& parts,
                       const EvalParams& p, std::uint64_t suite_seed, Provenance prov) {
    std::vector<aug::DistortionSuite> suites{{aug::SuiteKind::identity, suite_seed}};
    for (auto s : aug::DistortionSuite::robustness_set(suite_seed)) suites.push_back(s);

    Table t;
    t.title = "robustness";
    t.prov = prov;
    t.prov.seed = suite_seed;
    t.notes.push_back("probes trained on clean (Identity) train features");
    for (const auto& s : suites) t.col_names.push_back(s.name());

    const aug::DistortionSuite identity{aug::SuiteKind::identity, suite_seed};
    std::vector<std::uint64_t> digests(suites.size(), 0);
    bool digests_set = false;
    for (Part part : parts) {
        const FeatureBank train_bank = extract_features(net, train, identity, part, prov);
        const LinearProbe probe = train_linear_probe(train_bank, p);
        t.row_names.push_back(part_name(part));
        std::vector<double> row;
        for (std::size_t si = 0; si < suites.size(); ++si) {
            const FeatureBank test_bank = extract_features(net, test, suites[si], part, prov);
            if (!digests_set)
                digests[si] = test_bank.prov.distortion_digest;
            else if (digests[si] != test_bank.prov.distortion_digest)
                throw Error("robustness_sweep: distortion seed audit failed for suite " +
                            suites[si].id());
            row.push_back(evaluate_probe(probe, test_bank).top1);
        }
        digests_set = true;
        t.values.push_back(std::move(row));
    }
    binio::Fnv64 d;
    for (auto v : digests) d.add(&v, sizeof(v));
    t.prov.distortion_digest = d.state;
    return t;
}

std::vector<std::size_t> seeded_derangement(std::size_t n, std::uint64_t seed) {
    if (n < 2) throw InvalidInput("seeded_derangement: need at least 2 elements");
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(fold_u64(seed, 0xde7a9ULL));
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_int(i)]);
    // rotate fixed points among themselves (swap with a neighbour when single)
    std::vector<std::size_t> fixed;
    for (std::size_t i = 0; i < n; ++i)
        if (perm[i] == i) fixed.push_back(i);
    if (fixed.size() == 1) {
        const std::size_t i = fixed[0];
        const std::size_t j = (i + 1) % n;
        std::swap(perm[i], perm[j]);
    } else if (fixed.size() > 1) {
        for (std::size_t r = 0; r < fixed.size(); ++r)
            perm[fixed[r]] = fixed[(r + 1) % fixed.size()];
    }
    return perm;
}

Image brick_view_image(const Image& x, BrickView view, std::uint64_t sample_id,
                       std::uint64_t seed) {
    switch (view) {
        case BrickView::orig: return x;
        case BrickView::flip: return aug::horizontal_flip(x);
        case BrickView::flip90: {
            RngStream stream{seed, sample_id, 0, 0};
            Rng rot = stream.rng("brick_rot");
            return aug::rotate(aug::horizontal_flip(x), rot.uniform(-90.0, 90.0));
        }
    }
    throw InvalidInput("brick_view_image: unknown view");
}

namespace {

MatF brick_features(const model::Net& net, const data::Dataset& ds, BrickView view,
                    std::uint64_t seed) {
    const std::size_t n = ds.size();
    MatF full(n, net.config().output_dim);
    parallel_for(n, [&](std::size_t i) {
        const Image img =
            brick_view_image(ds.items[i].image, view, ds.items[i].instance_id, seed);
        const MatF y = net.encode_eval(net.to_input({&img}));
        for (std::size_t j = 0; j < y.cols(); ++j) full(i, j) = y(0, j);
    });
    return full;
}

} // namespace

Table brick_study(const model::Net& net, const data::Dataset& train, const data::Dataset& test,
                  const EvalParams& p, std::uint64_t seed, Provenance prov) {
    const aug::DistortionSuite identity{aug::SuiteKind::identity, seed};
    const FeatureBank train_bank = extract_features(net, train, identity, Part::full, prov);
    const LinearProbe probe = train_linear_probe(train_bank, p);

    const std::size_t n = test.size();
    const std::size_t d = net.config().output_dim;
    const std::size_t d_i = net.dir_dim();

    const std::array<BrickView, 3> views{BrickView::orig, BrickView::flip, BrickView::flip90};
    std::array<MatF, 3> feats;
    for (std::size_t v = 0; v < 3; ++v) feats[v] = brick_features(net, test, views[v], seed);

    const std::vector<std::size_t> derangement = seeded_derangement(n, seed);

    Table t;
    t.title = "brick_study";
    t.prov = prov;
    t.prov.seed = seed;
    t.col_names = {"Orig.", "Flip", "Flip+90°", "Dif.Inst+Flip+90°", "Zero DVR"};
    t.row_names = {"Orig.", "Flip", "Flip+90°"};
    t.notes.push_back("probe trained on unaltered full train representations");
    t.notes.push_back("Dif.Inst pairing is a seeded derangement of test instances");

    FeatureBank bank;
    bank.labels = train_bank.labels;
    bank.labels.clear();
    for (const auto& item : test.items) bank.labels.push_back(item.label);
    bank.prov = prov;

    for (std::size_t r = 0; r < 3; ++r) {
        std::vector<double> row;
        for (std::size_t c = 0; c < 5; ++c) {
            MatF composed(n, d);
            for (std::size_t i = 0; i < n; ++i) {
                const float* dir_src = feats[r].row(i);
                for (std::size_t j = 0; j < d_i; ++j) composed(i, j) = dir_src[j];
                if (c < 3) {
                    const float* dvr_src = feats[c].row(i);
                    for (std::size_t j = d_i; j < d; ++j) composed(i, j) = dvr_src[j];
                } else if (c == 3) {
                    const float* dvr_src = feats[2].row(derangement[i]);
                    for (std::size_t j = d_i; j < d; ++j) composed(i, j) = dvr_src[j];
                } else {
                    for (std::size_t j = d_i; j < d; ++j) composed(i, j) = 0.0f;
                }
            }
            bank.features = std::move(composed);
            row.push_back(evaluate_probe(probe, bank).top1);
        }
        t.values.push_back(std::move(row));
    }
    return t;
}

std::map<std::string, Accuracy> transfer_probe(const model::Net& net,
                                               const std::string& labeled_dir,
                                               double train_fraction, std::uint64_t split_seed,
                                               const EvalParams& p) {
    const data::Dataset full = data::load_dataset(labeled_dir, data::Format::image_directory);
    auto [train, test] = data::split_dataset(full, train_fraction, split_seed);
    const aug::DistortionSuite identity{aug::SuiteKind::identity, p.seed};
    std::map<std::string, Accuracy> out;
    for (Part part : {Part::full, Part::dir, Part::dvr}) {
        const FeatureBank tr = extract_features(net, train, identity, part);
        const FeatureBank te = extract_features(net, test, identity, part);
        out[part_name(part)] = linear_probe(tr, te, p);
    }
    return out;
}

double dvr_orthogonality(const model::Net& net, const data::Dataset& ds,
                         const aug::AugStrategy& strategy, std::uint64_t seed) {
    const std::size_t n = ds.size();
    if (n == 0) throw InvalidInput("dvr_orthogonality: empty dataset");
    constexpr std::uint64_t kEvalEpochTag = 0xe7a1u;
    std::vector<const Image*> imgs;
    std::vector<std::uint64_t> ids;
    for (const auto& item : ds.items) {
        imgs.push_back(&item.image);
        ids.push_back(item.instance_id);
    }
    const auto pairs = aug::make_view_pairs(imgs, ids, strategy, seed, kEvalEpochTag);

    double acc = 0.0;
    const std::size_t chunk = 64;
    for (std::size_t lo = 0; lo < n; lo += chunk) {
        const std::size_t hi = std::min(n, lo + chunk);
        std::vector<const Image*> v1, v2;
        for (std::size_t i = lo; i < hi; ++i) {
            v1.push_back(&pairs[i].v1);
            v2.push_back(&pairs[i].v2);
        }
        const model::BranchOut o1 = net.forward_eval(net.to_input(v1));
        const model::BranchOut o2 = net.forward_eval(net.to_input(v2));
        for (std::size_t i = 0; i < hi - lo; ++i) {
            if (net.asymmetric()) {
                const double c1 = row_cos(o1.heads.pv.row(i), o2.heads.zv.row(i),
                                          o1.heads.pv.cols());
                const double c2 = row_cos(o2.heads.pv.row(i), o1.heads.zv.row(i),
                                          o2.heads.pv.cols());
                acc += 0.5 * (std::fabs(c1) + std::fabs(c2));
            } else {
                acc += std::fabs(
                    row_cos(o1.heads.zv.row(i), o2.heads.zv.row(i), o1.heads.zv.cols()));
            }
        }
    }
    return acc / static_cast<double>(n);
}

namespace {

std::string provenance_line(const Provenance& prov) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "checkpoint_hash=%016llx config_hash=%016llx seed=%llu suite=%s "
                  "distortion_digest=%016llx version=%s",
                  static_cast<unsigned long long>(prov.checkpoint_hash),
                  static_cast<unsigned long long>(prov.config_hash),
                  static_cast<unsigned long long>(prov.seed), prov.suite.c_str(),
                  static_cast<unsigned long long>(prov.distortion_digest), kVersion);
    return buf;
}

} // namespace

void write_table_csv(const Table& t, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("write_table_csv: cannot open " + path);
    os << "# " << t.title << " | " << provenance_line(t.prov) << "\n";
    os << "part";
    for (const auto& c : t.col_names) os << "," << c;
    os << "\n";
    for (std::size_t r = 0; r < t.row_names.size(); ++r) {
        os << t.row_names[r];
        for (double v : t.values[r]) os << "," << fmt(v);
        os << "\n";
    }
}

void write_table_json(const Table& t, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw IoError("write_table_json: cannot open " + path);
    os << "{\n  \"title\": \"" << t.title << "\",\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "  \"provenance\": {\"checkpoint_hash\": \"%016llx\", \"config_hash\": "
                  "\"%016llx\", \"seed\": %llu, \"distortion_digest\": \"%016llx\", "
                  "\"version\": \"%s\"},\n",
                  static_cast<unsigned long long>(t.prov.checkpoint_hash),
                  static_cast<unsigned long long>(t.prov.config_hash),
                  static_cast<unsigned long long>(t.prov.seed),
                  static_cast<unsigned long long>(t.prov.distortion_digest), kVersion);
    os << buf;
    os << "  \"columns\": [";
    for (std::size_t i = 0; i < t.col_names.size(); ++i)
        os << (i ? ", " : "") << "\"" << t.col_names[i] << "\"";
    os << "],\n  \"rows\": [";
    for (std::size_t i = 0; i < t.row_names.size(); ++i)
        os << (i ? ", " : "") << "\"" << t.row_names[i] << "\"";
    os << "],\n  \"values\": [\n";
    for (std::size_t r = 0; r < t.values.size(); ++r) {
        os << "    [";
        for (std::size_t c = 0; c < t.values[r].size(); ++c)
            os << (c ? ", " : "") << fmt(t.values[r][c]);
        os << "]" << (r + 1 < t.values.size() ? "," : "") << "\n";
    }
    os << "  ],\n  \"notes\": [";
    for (std::size_t i = 0; i < t.notes.size(); ++i)
        os << (i ? ", " : "") << "\"" << t.notes[i] << "\"";
    os << "]\n}\n";
}

} // namespace ddcl::eval
