#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cqural/data.hpp"
#include "cqural/errors.hpp"

namespace cqural {

// RFC-4180 CSV: header row, quoting for commas/quotes/newlines, final
// newline. Rows must be rectangular.
std::string emit_csv(const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows);

// Bundled reader used for round-trip checks and the self-audit of emitted
// metrics. Returns all records including the header row.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

// Line plot as standalone SVG: one polyline per series, axes scaled to the
// data range with a 5% margin, legend labels equal to series names.
// Single-point series fall back to a centered marker.
std::string emit_svg_plot(const std::vector<PlotSeries>& series, int width, int height,
                          const std::string& title);

// Minimal XML well-formedness check (prolog, balanced tags, quoted
// attributes); used by tests and the selftest command.
bool xml_well_formed(std::string_view text);

// Binary PPM (P6) of a grayscale view of the image blended with a
// red-yellow heat ramp: out = (1 - alpha*s) * gray + alpha*s * heat(s).
std::vector<std::uint8_t> emit_ppm_overlay(const LabeledImage& image,
                                           const std::vector<double>& saliency, double alpha);

void write_text_file_atomic(const std::string& path, std::string_view text);

}  // namespace cqural
