#include "ddcl/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ddcl/checkpoint.hpp"
#include "ddcl/config.hpp"
#include "ddcl/errors.hpp"
#include "ddcl/png_io.hpp"
#include "ddcl/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ddcl::report {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

constexpr const char* kPalette[6] = {"#1f77b4", "#d62728", "#2ca02c",
                                     "#9467bd", "#ff7f0e", "#17becf"};

struct Range {
    double lo = 0.0, hi = 1.0;
    void grow(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
};

std::vector<double> nice_ticks(double lo, double hi, int target = 5) {
    if (hi <= lo) hi = lo + 1.0;
    const double raw = (hi - lo) / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag) {
            step = m * mag;
            break;
        }
    }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + step * 1e-9; t += step)
        ticks.push_back(t);
    return ticks;
}

} // namespace

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series, const std::string& provenance,
                     const std::vector<double>& explicit_xticks) {
    const double W = 720, H = 440, ml = 70, mr = 160, mt = 40, mb = 55;
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            ylo = std::min(ylo, s.y[i]);
            yhi = std::max(yhi, s.y[i]);
        }
    if (xlo > xhi) {
        xlo = 0;
        xhi = 1;
    }
    if (ylo > yhi) {
        ylo = 0;
        yhi = 1;
    }
    if (xhi == xlo) xhi = xlo + 1;
    if (yhi == ylo) yhi = ylo + 1;
    const double ypad = 0.05 * (yhi - ylo);
    ylo -= ypad;
    yhi += ypad;

    auto px = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - ylo) / (yhi - ylo) * (H - mt - mb); };

    std::ofstream os(path);
    if (!os) throw IoError("write_svg_chart: cannot open " + path);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
    os << "<!-- provenance: " << provenance << " version=" << kVersion << " -->\n";
    os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
          "font-family=\"sans-serif\">" << title << "</text>\n";

    const std::vector<double> xticks =
        explicit_xticks.empty() ? nice_ticks(xlo, xhi) : explicit_xticks;
    for (double t : xticks) {
        if (t < xlo - 1e-9 || t > xhi + 1e-9) continue;
        os << "<line class=\"xtick\" x1=\"" << num(px(t)) << "\" y1=\"" << H - mb
           << "\" x2=\"" << num(px(t)) << "\" y2=\"" << H - mb + 5
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(px(t)) << "\" y=\"" << H - mb + 18
           << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << num(t)
           << "</text>\n";
    }
    for (double t : nice_ticks(ylo, yhi)) {
        os << "<line class=\"ytick\" x1=\"" << ml - 5 << "\" y1=\"" << num(py(t)) << "\" x2=\""
           << ml << "\" y2=\"" << num(py(t)) << "\" stroke=\"black\"/>\n";
        os << "<line x1=\"" << ml << "\" y1=\"" << num(py(t)) << "\" x2=\"" << W - mr
           << "\" y2=\"" << num(py(t)) << "\" stroke=\"#dddddd\"/>\n";
        os << "<text x=\"" << ml - 8 << "\" y=\"" << num(py(t) + 4)
           << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << num(t)
           << "</text>\n";
    }
    os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
       << H - mb << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << xlabel
       << "</text>\n";
    os << "<text x=\"18\" y=\"" << (mt + H - mb) / 2
       << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\" "
          "transform=\"rotate(-90 18 " << (mt + H - mb) / 2 << ")\">" << ylabel << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % 6];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i)
            os << num(px(series[s].x[i])) << "," << num(py(series[s].y[i])) << " ";
        os << "\"/>\n";
        if (series[s].x.size() <= 16)
            for (std::size_t i = 0; i < series[s].x.size(); ++i)
                os << "<circle cx=\"" << num(px(series[s].x[i])) << "\" cy=\""
                   << num(py(series[s].y[i])) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        const double ly = mt + 16.0 * static_cast<double>(s);
        os << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - mr + 30
           << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - mr + 35 << "\" y=\"" << ly + 4
           << "\" font-size=\"11\" font-family=\"sans-serif\">" << series[s].label
           << "</text>\n";
    }
    os << "</svg>\n";
}

void write_attention_panels(const std::string& path, const model::Net& net,
                            const std::vector<const Image*>& images) {
    if (images.empty()) throw InvalidInput("write_attention_panels: no images");
    const std::size_t cell = images[0]->height;
    const std::size_t pad = 2;
    const std::size_t cols = 4;  // input, full, DIR, DVR
    const std::size_t W = cols * cell + (cols + 1) * pad;
    const std::size_t H = images.size() * cell + (images.size() + 1) * pad;
    Image canvas(H, W, 3, 1.0f);

    auto blit = [&](const Image& img, std::size_t row, std::size_t col, bool heat) {
        const std::size_t oy = pad + row * (cell + pad);
        const std::size_t ox = pad + col * (cell + pad);
        for (std::size_t y = 0; y < img.height; ++y)
            for (std::size_t x = 0; x < img.width; ++x) {
                float r, g, b;
                if (heat) {
                    // dark blue -> red -> yellow heat ramp
                    const float v = img.at(y, x, 0);
                    r = std::min(1.0f, 2.0f * v);
                    g = std::max(0.0f, 2.0f * v - 1.0f);
                    b = std::max(0.0f, 0.55f - v);
                } else if (img.channels == 3) {
                    r = img.at(y, x, 0);
                    g = img.at(y, x, 1);
                    b = img.at(y, x, 2);
                } else {
                    r = g = b = img.at(y, x, 0);
                }
                canvas.at(oy + y, ox + x, 0) = r;
                canvas.at(oy + y, ox + x, 1) = g;
                canvas.at(oy + y, ox + x, 2) = b;
            }
    };

    for (std::size_t i = 0; i < images.size(); ++i) {
        blit(*images[i], i, 0, false);
        blit(net.attention_map(*images[i], 0), i, 1, true);
        blit(net.attention_map(*images[i], 1), i, 2, true);
        blit(net.attention_map(*images[i], 2), i, 3, true);
    }
    imgio::save_ppm(path, canvas);
}

void generate_reports(const std::string& results_dir, const std::string& out_dir) {
    if (!fs::is_directory(results_dir))
        throw ConfigError("report: results directory does not exist: " + results_dir);

    std::vector<std::string> trainlogs, eval_jsons, checkpoints;
    for (const auto& e : fs::recursive_directory_iterator(results_dir)) {
        if (!e.is_regular_file()) continue;
        const std::string name = e.path().filename().string();
        if (name == "trainlog.ndjson") trainlogs.push_back(e.path().string());
        if (name.size() > 5 && name.compare(name.size() - 5, 5, ".json") == 0 &&
            name.rfind("eval_", 0) == 0)
            eval_jsons.push_back(e.path().string());
        if (name == "checkpoint.ddcl") checkpoints.push_back(e.path().string());
    }
    std::sort(trainlogs.begin(), trainlogs.end());
    std::sort(eval_jsons.begin(), eval_jsons.end());
    std::sort(checkpoints.begin(), checkpoints.end());

    if (trainlogs.empty() && eval_jsons.empty() && checkpoints.empty()) {
        throw ConfigError(
            "report: no inputs found in " + results_dir +
            "; looked for: trainlog.ndjson (loss curves), eval_*.json (DR ablation grid), "
            "checkpoint.ddcl (attention panels)");
    }
    fs::create_directories(out_dir);

    if (!trainlogs.empty()) {
        std::ifstream is(trainlogs.front());
        Series total{"total", {}, {}}, dir{"dir", {}, {}}, ddl{"ddl", {}, {}},
            mac{"mean_abs_cos_dvr", {}, {}};
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            json rec = json::parse(line, nullptr, false);
            if (rec.is_discarded() || !rec.contains("step")) continue;
            const double step = rec["step"].get<double>();
            total.x.push_back(step);
            total.y.push_back(rec["total"].get<double>());
            dir.x.push_back(step);
            dir.y.push_back(rec["dir"].get<double>());
            ddl.x.push_back(step);
            ddl.y.push_back(rec["ddl"].get<double>());
            mac.x.push_back(step);
            mac.y.push_back(rec["mean_abs_cos_dvr"].get<double>());
        }
        write_svg_chart((fs::path(out_dir) / "loss_curves.svg").string(), "training losses",
                        "step", "loss", {total, dir, ddl}, "source=" + trainlogs.front());
        write_svg_chart((fs::path(out_dir) / "ddl_trajectory.svg").string(),
                        "distortion-disentangled trajectory", "step", "mean |cos|", {mac},
                        "source=" + trainlogs.front());
    }

    if (!eval_jsons.empty()) {
        // accuracy-vs-DR grid from eval_linear_*.json documents carrying "dr"
        std::map<std::string, std::map<double, double>> by_part;
        for (const auto& path : eval_jsons) {
            std::ifstream is(path);
            json doc = json::parse(is, nullptr, false);
            if (doc.is_discarded() || !doc.contains("dr") || !doc.contains("top1")) continue;
            by_part[doc.value("part", "full")][doc["dr"].get<double>()] =
                doc["top1"].get<double>();
        }
        std::set<double> drs;
        std::vector<Series> series;
        for (const auto& [part, points] : by_part) {
            Series s{part, {}, {}};
            for (const auto& [dr, top1] : points) {
                s.x.push_back(dr);
                s.y.push_back(top1);
                drs.insert(dr);
            }
            series.push_back(std::move(s));
        }
        if (!series.empty()) {
            write_svg_chart((fs::path(out_dir) / "dr_ablation.svg").string(),
                            "linear accuracy vs disentangling ratio", "DR", "top-1 (%)", series,
                            "sources=" + std::to_string(eval_jsons.size()),
                            std::vector<double>(drs.begin(), drs.end()));
        }
    }

    if (!checkpoints.empty()) {
        const auto ck = ckpt::load(checkpoints.front());
        const auto cfg = config::parse_json_text(ck.config_json);
        Rng tmp(1);
        model::Net net(cfg.model, cfg.train.mode == "asymmetric", tmp);
        ckpt::restore(net, ck);
        auto [train_set, test_set] = config::load_split(cfg);
        (void)train_set;
        std::vector<const Image*> imgs;
        for (std::size_t i = 0; i < std::min<std::size_t>(6, test_set.size()); ++i)
            imgs.push_back(&test_set.items[i].image);
        write_attention_panels((fs::path(out_dir) / "attention_panels.ppm").string(), net, imgs);
    }
}

} // namespace ddcl::report
