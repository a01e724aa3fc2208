#pragma once

#include <string>
#include <vector>

#include "ddcl/image.hpp"
#include "ddcl/model.hpp"

namespace ddcl::report {

struct Series {
    std::string label;
    std::vector<double> x, y;
};

// Deterministic SVG line chart. When explicit_xticks is nonempty the x axis
// carries exactly those tick positions (used by the DR-ablation grid).
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series, const std::string& provenance,
                     const std::vector<double>& explicit_xticks = {});

// Rows: one per input image; columns: input, full, DIR, DVR attention maps.
void write_attention_panels(const std::string& path, const model::Net& net,
                            const std::vector<const Image*>& images);

// Reads a results directory (trainlog.ndjson, eval *.json files, checkpoint)
// and emits loss curves, the accuracy-vs-DR grid and attention panels into
// out_dir. Throws ConfigError listing every missing input when nothing can
// be produced.
void generate_reports(const std::string& results_dir, const std::string& out_dir);

} // namespace ddcl::report
