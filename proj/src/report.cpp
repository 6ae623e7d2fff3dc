#include "opclass/report.hpp"

#include "opclass/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace opclass::report {

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + '"';
}

std::string xml_escape(const std::string& s) {
    std::string out;
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

std::string slug(std::string s) {
    for (char& c : s) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                          c == '-' || c == '.';
        c = keep ? c : '_';
    }
    return s;
}

std::string num(double v) {
    // Layout coordinates, not data.
    return number_text(std::round(v * 100.0) / 100.0);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
}

std::string bar_svg(const ChartData& c) {
    constexpr double kBarWidth = 80, kGap = 20, kHeight = 200, kTop = 40, kLeft = 40;
    const auto& values = c.cells.empty() ? std::vector<double>{} : c.cells.front();
    const double width = kLeft * 2 + static_cast<double>(values.size()) * (kBarWidth + kGap);
    const double total_height = kTop + kHeight + 60;
    const double peak = std::max(1.0, values.empty() ? 1.0 : *std::max_element(values.begin(), values.end()));
    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
                      num(total_height) + "\">\n";
    svg += "<text x=\"" + num(kLeft) + "\" y=\"20\" font-size=\"14\">" + xml_escape(c.title) + "</text>\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        const double h = std::max(0.0, v) / peak * kHeight;
        const double x = kLeft + static_cast<double>(i) * (kBarWidth + kGap);
        svg += "<rect x=\"" + num(x) + "\" y=\"" + num(kTop + kHeight - h) + "\" width=\"" + num(kBarWidth) +
               "\" height=\"" + num(h) + "\" fill=\"#4e79a7\"/>\n";
        svg += "<text x=\"" + num(x) + "\" y=\"" + num(kTop + kHeight - h - 4) + "\" font-size=\"12\">" +
               number_text(v) + "</text>\n";
        svg += "<text x=\"" + num(x) + "\" y=\"" + num(kTop + kHeight + 16) + "\" font-size=\"11\">" +
               xml_escape(c.column_labels[i]) + "</text>\n";
    }
    return svg + "</svg>\n";
}

std::string heatmap_svg(const ChartData& c) {
    constexpr double kCell = 40, kTop = 40, kLeft = 120;
    const std::size_t rows = c.row_labels.size(), cols = c.column_labels.size();
    double peak = 0.0;
    for (const auto& row : c.cells) {
        for (double v : row) {
            peak = std::max(peak, v);
        }
    }
    const double width = kLeft + static_cast<double>(cols) * kCell + 20;
    const double height = kTop + static_cast<double>(rows) * kCell + 20;
    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
                      num(height) + "\">\n";
    svg += "<text x=\"10\" y=\"20\" font-size=\"14\">" + xml_escape(c.title) + "</text>\n";
    for (std::size_t j = 0; j < cols; ++j) {
        svg += "<text x=\"" + num(kLeft + static_cast<double>(j) * kCell + 2) + "\" y=\"" + num(kTop - 4) +
               "\" font-size=\"9\">" + xml_escape(c.column_labels[j]) + "</text>\n";
    }
    for (std::size_t i = 0; i < rows; ++i) {
        const double y = kTop + static_cast<double>(i) * kCell;
        svg += "<text x=\"10\" y=\"" + num(y + kCell / 2) + "\" font-size=\"9\">" + xml_escape(c.row_labels[i]) +
               "</text>\n";
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = c.cells[i][j];
            const double x = kLeft + static_cast<double>(j) * kCell;
            const int shade = peak > 0 ? static_cast<int>(std::lround(255.0 - 200.0 * v / peak)) : 255;
            svg += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(kCell) + "\" height=\"" +
                   num(kCell) + "\" fill=\"rgb(" + std::to_string(shade) + "," + std::to_string(shade) +
                   ",255)\" stroke=\"#888\"/>\n";
            svg += "<text x=\"" + num(x + 4) + "\" y=\"" + num(y + kCell / 2 + 4) + "\" font-size=\"11\">" +
                   cell_text(c, v) + "</text>\n";
        }
    }
    return svg + "</svg>\n";
}

std::string title_of(const classic::ClassifierResult& r) {
    return r.classifier + " " + r.mode + " " + r.target;
}

} // namespace

void ChartData::validate() const {
    if (kind == ChartKind::bar && cells.size() != 1) {
        throw Error("bar chart '" + title + "' must have exactly one row of cells");
    }
    if (kind == ChartKind::heatmap && cells.size() != row_labels.size()) {
        throw Error("heatmap '" + title + "' has " + std::to_string(cells.size()) + " rows for " +
                    std::to_string(row_labels.size()) + " labels");
    }
    for (const auto& row : cells) {
        if (row.size() != column_labels.size()) {
            throw Error("chart '" + title + "' cells do not form a full rectangle");
        }
        for (double v : row) {
            if (!std::isfinite(v)) {
                throw Error("chart '" + title + "' has a non-finite value");
            }
        }
    }
}

std::string number_text(double v) {
    return nlohmann::json(v).dump();
}

std::string cell_text(const ChartData& chart, double v) {
    if (chart.kind == ChartKind::heatmap) {
        return nlohmann::json(static_cast<std::int64_t>(v)).dump();
    }
    return number_text(v);
}

ChartData bar_chart(const classic::ClassifierResult& r) {
    ChartData c;
    c.kind = ChartKind::bar;
    c.title = title_of(r);
    c.column_labels = {"accuracy", "macro_recall", "macro_precision", "f_measure"};
    c.cells = {{classic::round6(r.accuracy), classic::round6(r.macro_recall),
                classic::round6(r.macro_precision), classic::round6(r.f_measure)}};
    c.validate();
    return c;
}

ChartData heatmap(const classic::ClassifierResult& r) {
    ChartData c;
    c.kind = ChartKind::heatmap;
    c.title = title_of(r) + " confusion";
    c.row_labels = r.class_names;
    c.column_labels = r.class_names;
    for (const auto& row : r.confusion_matrix) {
        c.cells.emplace_back(row.begin(), row.end());
    }
    c.validate();
    return c;
}

std::string chart_to_csv(const ChartData& c) {
    std::string out;
    if (c.kind == ChartKind::bar) {
        out = "metric,value\n";
        for (std::size_t j = 0; j < c.column_labels.size(); ++j) {
            out += csv_field(c.column_labels[j]) + ',' + number_text(c.cells[0][j]) + '\n';
        }
        return out;
    }
    out = "true\\predicted";
    for (const auto& label : c.column_labels) {
        out += ',' + csv_field(label);
    }
    out += '\n';
    for (std::size_t i = 0; i < c.row_labels.size(); ++i) {
        out += csv_field(c.row_labels[i]);
        for (double v : c.cells[i]) {
            out += ',' + cell_text(c, v);
        }
        out += '\n';
    }
    return out;
}

std::string chart_to_svg(const ChartData& c) {
    return c.kind == ChartKind::bar ? bar_svg(c) : heatmap_svg(c);
}

std::string chart_stem(const classic::ClassifierResult& r, std::size_t index) {
    std::string n = std::to_string(index + 1);
    if (n.size() < 2) {
        n.insert(0, "0");
    }
    return n + "_" + slug(r.classifier) + "_" + slug(r.mode) + "_" + slug(r.target);
}

std::vector<fs::path> render_charts(std::span<const classic::ClassifierResult> results,
                                    const fs::path& directory) {
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) {
        throw IoError("cannot create " + directory.string() + ": " + ec.message());
    }
    std::vector<fs::path> written;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const std::string stem = chart_stem(results[i], i);
        ChartData charts[2];
        try {
            charts[0] = bar_chart(results[i]);
            charts[1] = heatmap(results[i]);
        } catch (const Error& e) {
            throw ParseError("result record " + std::to_string(i) + " (" + title_of(results[i]) +
                             "): " + e.what());
        }
        for (const ChartData& c : charts) {
            const std::string suffix = c.kind == ChartKind::bar ? "_bar" : "_heatmap";
            for (const auto& [ext, text] : {std::pair{".csv", chart_to_csv(c)}, std::pair{".svg", chart_to_svg(c)}}) {
                const fs::path path = directory / (stem + suffix + ext);
                write_text(path, text);
                written.push_back(path);
            }
        }
    }
    return written;
}

std::vector<fs::path> render_results_file(const fs::path& results_json, const fs::path& directory) {
    const auto results = classic::load_results(results_json);
    return render_charts(results, directory);
}

} // namespace opclass::report
