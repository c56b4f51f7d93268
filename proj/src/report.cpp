#include "cqural/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace cqural {

namespace {

bool needs_quoting(const std::string& field) {
    return field.find_first_of(",\"\r\n") != std::string::npos;
}

void append_field(std::string& out, const std::string& field) {
    if (!needs_quoting(field)) {
        out += field;
        return;
    }
    out += '"';
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}

void append_row(std::string& out, const std::vector<std::string>& row) {
    for (size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        append_field(out, row[i]);
    }
    out += '\n';
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

std::string emit_csv(const std::vector<std::string>& header,
                     const std::vector<std::vector<std::string>>& rows) {
    if (header.empty()) throw UsageError("emit_csv: empty header");
    for (size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != header.size()) {
            throw UsageError("emit_csv: row " + std::to_string(r) + " has " +
                             std::to_string(rows[r].size()) + " fields, header has " +
                             std::to_string(header.size()));
        }
    }
    std::string out;
    append_row(out, header);
    for (const auto& row : rows) append_row(out, row);
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;

    size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    i += 2;
                } else {
                    in_quotes = false;
                    ++i;
                }
            } else {
                field += c;
                ++i;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                row_started = true;
                ++i;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                row_started = true;
                ++i;
                break;
            case '\r':
                ++i;
                break;
            case '\n':
                if (row_started || !field.empty() || !row.empty()) {
                    row.push_back(std::move(field));
                    field.clear();
                    records.push_back(std::move(row));
                    row.clear();
                    row_started = false;
                }
                ++i;
                break;
            default:
                field += c;
                row_started = true;
                ++i;
        }
    }
    if (in_quotes) throw FormatError("parse_csv: unterminated quoted field");
    if (row_started || !row.empty()) {
        row.push_back(std::move(field));
        records.push_back(std::move(row));
    }
    return records;
}

std::string emit_svg_plot(const std::vector<PlotSeries>& series, int width, int height,
                          const std::string& title) {
    if (series.empty()) throw UsageError("emit_svg_plot: no series");
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    bool first = true;
    for (const auto& s : series) {
        if (s.x.empty() || s.x.size() != s.y.size()) {
            throw UsageError("emit_svg_plot: series '" + s.name + "' is empty or ragged");
        }
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                throw DataError("emit_svg_plot: non-finite value in series '" + s.name + "'");
            }
            if (first) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                first = false;
            } else {
                xmin = std::min(xmin, s.x[i]);
                xmax = std::max(xmax, s.x[i]);
                ymin = std::min(ymin, s.y[i]);
                ymax = std::max(ymax, s.y[i]);
            }
        }
    }
    // Degenerate ranges get a unit guard so single points land centered.
    if (xmax - xmin < 1e-12) {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double xpad = 0.05 * (xmax - xmin), ypad = 0.05 * (ymax - ymin);
    xmin -= xpad;
    xmax += xpad;
    ymin -= ypad;
    ymax += ypad;

    const double margin = 40.0;
    const double plot_w = width - 2 * margin, plot_h = height - 2 * margin;
    const auto px = [&](double x) { return margin + (x - xmin) / (xmax - xmin) * plot_w; };
    const auto py = [&](double y) { return height - margin - (y - ymin) / (ymax - ymin) * plot_h; };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << width / 2.0 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">"
        << xml_escape(title) << "</text>\n";
    svg << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
        << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
        << height - margin << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << margin << "\" y=\"" << height - margin + 16 << "\" font-size=\"10\">"
        << fmt(xmin + xpad) << "</text>\n";
    svg << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 16
        << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(xmax - xpad) << "</text>\n";
    svg << "<text x=\"" << margin - 4 << "\" y=\"" << height - margin
        << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(ymin + ypad) << "</text>\n";
    svg << "<text x=\"" << margin - 4 << "\" y=\"" << margin + 4
        << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(ymax - ypad) << "</text>\n";

    for (size_t s = 0; s < series.size(); ++s) {
        const char* color = palette[s % 6];
        if (series[s].x.size() == 1) {
            svg << "<circle cx=\"" << px(series[s].x[0]) << "\" cy=\"" << py(series[s].y[0])
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        } else {
            svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (size_t i = 0; i < series[s].x.size(); ++i) {
                if (i) svg << ' ';
                svg << px(series[s].x[i]) << ',' << py(series[s].y[i]);
            }
            svg << "\"/>\n";
        }
        const double ly = margin + 14.0 * static_cast<double>(s);
        svg << "<rect x=\"" << width - margin - 110 << "\" y=\"" << ly << "\" width=\"10\" height=\"10\" fill=\""
            << color << "\"/>\n";
        svg << "<text x=\"" << width - margin - 96 << "\" y=\"" << ly + 9 << "\" font-size=\"10\">"
            << xml_escape(series[s].name) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

bool xml_well_formed(std::string_view text) {
    std::vector<std::string> stack;
    size_t i = 0;
    const size_t n = text.size();

    const auto skip_ws = [&](size_t p) {
        while (p < n && std::isspace(static_cast<unsigned char>(text[p]))) ++p;
        return p;
    };

    while (i < n) {
        if (text[i] != '<') {
            if (text[i] == '>') return false;
            ++i;
            continue;
        }
        if (i + 1 >= n) return false;
        if (text.compare(i, 2, "<?") == 0) {
            const size_t end = text.find("?>", i);
            if (end == std::string_view::npos) return false;
            i = end + 2;
            continue;
        }
        if (text.compare(i, 4, "<!--") == 0) {
            const size_t end = text.find("-->", i);
            if (end == std::string_view::npos) return false;
            i = end + 3;
            continue;
        }
        const bool closing = text[i + 1] == '/';
        size_t p = i + (closing ? 2 : 1);
        const size_t name_start = p;
        while (p < n && (std::isalnum(static_cast<unsigned char>(text[p])) || text[p] == ':' ||
                         text[p] == '_' || text[p] == '-' || text[p] == '.')) {
            ++p;
        }
        if (p == name_start) return false;
        const std::string name(text.substr(name_start, p - name_start));

        // Attributes: name="value" pairs until '>' or '/>'.
        bool self_closing = false;
        while (true) {
            p = skip_ws(p);
            if (p >= n) return false;
            if (text[p] == '>') {
                ++p;
                break;
            }
            if (text.compare(p, 2, "/>") == 0) {
                self_closing = true;
                p += 2;
                break;
            }
            if (closing) return false;  // close tags take no attributes
            const size_t an = p;
            while (p < n && text[p] != '=' && text[p] != '>' &&
                   !std::isspace(static_cast<unsigned char>(text[p]))) {
                ++p;
            }
            if (p == an || p >= n || text[p] != '=') return false;
            ++p;
            if (p >= n || (text[p] != '"' && text[p] != '\'')) return false;
            const char quote = text[p];
            ++p;
            while (p < n && text[p] != quote) {
                if (text[p] == '<') return false;
                ++p;
            }
            if (p >= n) return false;
            ++p;
        }

        if (closing) {
            if (self_closing || stack.empty() || stack.back() != name) return false;
            stack.pop_back();
        } else if (!self_closing) {
            stack.push_back(name);
        }
        i = p;
    }
    return stack.empty();
}

std::vector<std::uint8_t> emit_ppm_overlay(const LabeledImage& image,
                                           const std::vector<double>& saliency, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw ParameterError("emit_ppm_overlay: alpha must lie in [0, 1]");
    const int h = image.height, w = image.width;
    if (saliency.size() != static_cast<size_t>(h) * w) {
        throw DimensionError("emit_ppm_overlay: saliency has " + std::to_string(saliency.size()) +
                             " values, image is " + std::to_string(h) + "x" + std::to_string(w));
    }

    // Grayscale view of the (possibly standardized) image, rescaled to 0..255.
    std::vector<double> gray(static_cast<size_t>(h) * w, 0.0);
    const int plane = h * w;
    for (int p = 0; p < plane; ++p) {
        double acc = 0.0;
        for (int c = 0; c < image.channels; ++c) acc += image.pixels[static_cast<size_t>(c * plane + p)];
        gray[static_cast<size_t>(p)] = acc / image.channels;
    }
    const auto [mn_it, mx_it] = std::minmax_element(gray.begin(), gray.end());
    const double mn = *mn_it, mx = *mx_it;
    const double scale = mx - mn > 1e-12 ? 255.0 / (mx - mn) : 0.0;

    std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + static_cast<size_t>(plane) * 3);
    for (int p = 0; p < plane; ++p) {
        const double g = (gray[static_cast<size_t>(p)] - mn) * scale;
        const double s = std::clamp(saliency[static_cast<size_t>(p)], 0.0, 1.0);
        const double heat_r = 255.0, heat_g = 255.0 * s, heat_b = 0.0;
        const double mixr = (1.0 - alpha * s) * g + alpha * s * heat_r;
        const double mixg = (1.0 - alpha * s) * g + alpha * s * heat_g;
        const double mixb = (1.0 - alpha * s) * g + alpha * s * heat_b;
        out.push_back(static_cast<std::uint8_t>(std::clamp(mixr, 0.0, 255.0)));
        out.push_back(static_cast<std::uint8_t>(std::clamp(mixg, 0.0, 255.0)));
        out.push_back(static_cast<std::uint8_t>(std::clamp(mixb, 0.0, 255.0)));
    }
    return out;
}

void write_text_file_atomic(const std::string& path, std::string_view text) {
    std::vector<std::uint8_t> bytes(text.begin(), text.end());
    write_binary_file_atomic(path, bytes);
}

}  // namespace cqural
