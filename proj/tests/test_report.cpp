#include "opclass/error.hpp"
#include "opclass/report.hpp"

#include "support/fixtures.hpp"

#include <doctest.h>

using namespace opclass;
using namespace opclass::report;

namespace {

classic::ClassifierResult sample_result(double accuracy = 0.75) {
    classic::ClassifierResult r;
    r.classifier = "knn";
    r.mode = "single";
    r.target = "group";
    r.accuracy = accuracy;
    r.macro_recall = 1.0 / 3.0;
    r.macro_precision = 0.5;
    r.f_measure = 0.4;
    r.class_names = {"G1", "G2", "G,3"};
    r.confusion_matrix = {{3, 1, 0}, {0, 2, 0}, {1, 0, 5}};
    return r;
}

} // namespace

TEST_SUITE("report") {

TEST_CASE("bar chart passes values through") {
    const auto c = bar_chart(sample_result());
    CHECK(c.kind == ChartKind::bar);
    REQUIRE(c.cells.size() == 1);
    CHECK(c.cells[0][0] == 0.75);
    CHECK(c.cells[0][1] == 0.333333);
    const auto csv = chart_to_csv(c);
    CHECK(csv == "metric,value\naccuracy,0.75\nmacro_recall,0.333333\nmacro_precision,0.5\nf_measure,0.4\n");
}

TEST_CASE("heatmap has one cell per confusion entry") {
    const auto c = heatmap(sample_result());
    CHECK(c.cells.size() == 3);
    std::size_t cells = 0;
    for (const auto& row : c.cells) cells += row.size();
    CHECK(cells == 9);
    const auto csv = chart_to_csv(c);
    CHECK(csv.rfind("true\\predicted,G1,G2,\"G,3\"\n", 0) == 0);
    CHECK(csv.find("\"G,3\",1,0,5\n") != std::string::npos);
}

TEST_CASE("svg text equals the csv numbers") {
    const auto r = sample_result();
    for (const auto& chart : {bar_chart(r), heatmap(r)}) {
        const auto svg = chart_to_svg(chart);
        CHECK(svg.rfind("<svg", 0) == 0);
        for (const auto& row : chart.cells) {
            for (double v : row) CHECK(svg.find(">" + cell_text(chart, v) + "</text>") != std::string::npos);
        }
    }
}

TEST_CASE("chart numbers derive from the results JSON alone") {
    const std::vector<classic::ClassifierResult> results = {sample_result(0.123456789)};
    const auto json = nlohmann::json::parse(classic::results_to_json_text(results));
    const auto back = classic::results_from_json_text(classic::results_to_json_text(results));
    const auto csv = chart_to_csv(bar_chart(back[0]));
    CHECK(csv.find("accuracy," + json[0]["accuracy"].dump() + "\n") != std::string::npos);
    CHECK(chart_to_csv(bar_chart(results[0])) == csv);
}

TEST_CASE("validation of chart shapes") {
    ChartData c;
    c.kind = ChartKind::heatmap;
    c.row_labels = {"a", "b"};
    c.column_labels = {"a", "b"};
    c.cells = {{1, 2}, {3}};
    CHECK_THROWS_AS(c.validate(), Error);
    ChartData bar;
    bar.column_labels = {"x"};
    bar.cells = {{std::nan("")}};
    CHECK_THROWS_AS(bar.validate(), Error);
}

TEST_CASE("render 21 results gives 21 bars and 21 heatmaps") {
    fixtures::TempDir dir;
    std::vector<classic::ClassifierResult> results(21, sample_result());
    const auto files = render_charts(results, dir / "charts");
    CHECK(files.size() == 84);
    std::size_t bars = 0, heats = 0;
    for (const auto& f : fs::directory_iterator(dir / "charts")) {
        const auto name = f.path().filename().string();
        bars += name.ends_with("_bar.csv");
        heats += name.ends_with("_heatmap.csv");
    }
    CHECK(bars == 21);
    CHECK(heats == 21);
    CHECK(chart_stem(results[0], 0) == "01_knn_single_group");
}

TEST_CASE("malformed results file names the record") {
    fixtures::TempDir dir;
    auto good = classic::to_json(sample_result());
    auto bad = good;
    bad["confusion_matrix"] = {{1, 2}};
    nlohmann::ordered_json arr = nlohmann::ordered_json::array({good, bad});
    fixtures::write_file(dir / "results.json", arr.dump());
    try {
        render_results_file(dir / "results.json", dir / "charts");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("record 1") != std::string::npos);
        CHECK(msg.find("results.json") != std::string::npos);
    }
    fixtures::write_file(dir / "broken.json", "[{");
    CHECK_THROWS_AS(render_results_file(dir / "broken.json", dir / "charts"), ParseError);
}

}
