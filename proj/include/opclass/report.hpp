#pragma once

#include "opclass/classic/evaluation.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace opclass::report {

namespace fs = std::filesystem;

enum class ChartKind { bar, heatmap };

/// Numbers ready to plot. A bar chart has one row of cells (one per column
/// label); a heatmap has one row per row label. Cells are exactly the values
/// found in the result record after 6-decimal rounding.
struct ChartData {
    ChartKind kind = ChartKind::bar;
    std::string title;
    std::vector<std::string> column_labels;
    std::vector<std::string> row_labels;
    std::vector<std::vector<double>> cells;

    /// Throws Error when the cells are not a full rectangle or a bar is not finite.
    void validate() const;
};

/// accuracy, macro_recall, macro_precision, f_measure.
ChartData bar_chart(const classic::ClassifierResult& result);

/// Rows are true classes, columns predicted classes.
ChartData heatmap(const classic::ClassifierResult& result);

/// Bar charts: "metric,value" rows. Heatmaps: a header of predicted class
/// names followed by one row per true class.
std::string chart_to_csv(const ChartData& chart);

/// Plain rectangles and text; every number printed equals the CSV text.
std::string chart_to_svg(const ChartData& chart);

/// JSON text of a real, as written in results files.
std::string number_text(double v);

/// Text used for a cell in both CSV and SVG output: number_text for bars,
/// integer counts for heatmaps.
std::string cell_text(const ChartData& chart, double v);

/// Base file name for result `index`: "<NN>_<classifier>_<mode>_<target>".
std::string chart_stem(const classic::ClassifierResult& result, std::size_t index);

/// Write `<stem>_bar.{csv,svg}` and `<stem>_heatmap.{csv,svg}` per result
/// into `directory`; returns the written paths in order.
std::vector<fs::path> render_charts(std::span<const classic::ClassifierResult> results,
                                    const fs::path& directory);

/// Load a results file and render it. Parse errors name the offending record.
std::vector<fs::path> render_results_file(const fs::path& results_json, const fs::path& directory);

} // namespace opclass::report
