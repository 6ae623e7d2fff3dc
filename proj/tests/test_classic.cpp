#include "opclass/classic/suite.hpp"
#include "opclass/error.hpp"

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <set>

using namespace opclass;
using namespace opclass::classic;

namespace {

EncodedDesign design_of(const std::vector<std::vector<double>>& rows, const std::vector<int>& y,
                        std::size_t classes) {
    EncodedDesign d;
    d.X = Matrix(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) d.X(r, c) = rows[r][c];
    }
    d.y = y;
    for (std::size_t c = 0; c < classes; ++c) d.class_names.push_back("c" + std::to_string(c));
    for (std::size_t c = 0; c < d.X.cols; ++c) d.feature_names.push_back("f" + std::to_string(c));
    return d;
}

std::vector<std::vector<double>> random_rows(Rng& rng, std::size_t n, std::size_t f, std::size_t levels = 0) {
    std::vector<std::vector<double>> rows(n, std::vector<double>(f));
    for (auto& r : rows) {
        for (auto& v : r) {
            v = levels ? static_cast<double>(rng.below(levels)) : rng.uniform();
        }
    }
    return rows;
}

std::vector<int> random_labels(Rng& rng, std::size_t n, std::size_t classes) {
    std::vector<int> y(n);
    for (auto& v : y) v = static_cast<int>(rng.below(classes));
    return y;
}

FeatureDataset small_dataset() {
    FeatureDataset ds;
    ds.feature_names = {"A", "B"};
    ds.labels = {LabelRow{"G1", "S1", "exe", "a"}, LabelRow{"G2", "S2", "dll", "b"},
                 LabelRow{"G1", "S3", "exe", "c"}, LabelRow{"G2", "S1", "dll", "d"}};
    ds.values = {0.1, 0.9, 0.8, 0.2, 0.3, 0.7, 0.6, 0.4};
    return ds;
}

} // namespace

TEST_SUITE("classic") {

TEST_CASE("ordinal encoding") {
    const std::vector<std::string> labels = {"B", "A", "B"};
    const auto enc = ordinal_encode(labels);
    CHECK(enc.codes == std::vector<int>{1, 0, 1});
    CHECK(enc.class_names == std::vector<std::string>{"A", "B"});
    const std::vector<std::string> same = {"x", "x"};
    CHECK(ordinal_encode(same).codes == std::vector<int>{0, 0});

    Rng rng(1);
    std::vector<std::string> many(1000);
    for (auto& s : many) s = "L" + std::to_string(rng.below(37));
    const auto e = ordinal_encode(many);
    CHECK(std::is_sorted(e.class_names.begin(), e.class_names.end()));
    for (std::size_t i = 0; i < many.size(); ++i) CHECK(e.class_names[static_cast<std::size_t>(e.codes[i])] == many[i]);
}

TEST_CASE("mode specs") {
    CHECK_NOTHROW(ModeSpec{Mode::all, Target::file_name}.validate());
    CHECK_THROWS_AS((ModeSpec{Mode::all, Target::group}.validate()), ConfigError);
    CHECK_THROWS_AS((ModeSpec{Mode::single, Target::file_name}.validate()), ConfigError);
    CHECK_THROWS_AS(parse_mode("bogus"), ConfigError);
    CHECK_THROWS_AS(parse_target("bogus"), ConfigError);
    CHECK(parse_target("file_name") == Target::file_name);
}

TEST_CASE("design widths per mode") {
    const auto ds = small_dataset();
    const auto single = assemble_design(ds, {Mode::single, Target::group});
    CHECK(single.X.cols == 2);
    CHECK(single.y == std::vector<int>{0, 1, 0, 1});
    for (Target t : {Target::group, Target::name, Target::type}) {
        CHECK(assemble_design(ds, {Mode::multi, t}).X.cols == single.X.cols + 2);
    }
    const auto multi_type = assemble_design(ds, {Mode::multi, Target::type});
    // group then name codes appended.
    CHECK(multi_type.X(1, 2) == 1.0);
    CHECK(multi_type.X(2, 3) == 2.0);
    CHECK(multi_type.feature_names.back() == "name");
    const auto all = assemble_design(ds, {Mode::all, Target::file_name});
    CHECK(all.X.cols == single.X.cols + 3);
    CHECK(all.num_classes() == 4);
}

TEST_CASE("knn basics and errors") {
    const auto d = design_of({{0, 0}, {1, 1}, {5, 5}}, {0, 0, 1}, 2);
    const auto m1 = train_knn(d, 1);
    CHECK(predict_knn(m1, d.X) == d.y);
    CHECK_THROWS_AS(train_knn(design_of({}, {}, 1), 1), ConfigError);
    CHECK_THROWS_AS(train_knn(d, 4), ConfigError);
}

TEST_CASE("knn tie rules") {
    // Query at 0: rows 1 and 2 are both at distance 1; the lower index wins.
    auto d = design_of({{5}, {1}, {-1}}, {0, 1, 2}, 3);
    Matrix q(1, 1);
    CHECK(predict_knn(train_knn(d, 1), q) == std::vector<int>{1});
    // k=3 over three distinct classes: all tie with one vote, nearest is row 1.
    CHECK(predict_knn(train_knn(d, 3), q) == std::vector<int>{1});
    // Vote tie between classes 0 and 1 (two each) with class 1 nearest.
    d = design_of({{0.5}, {2}, {3}, {0.7}}, {1, 0, 0, 1}, 2);
    CHECK(predict_knn(train_knn(d, 4), q) == std::vector<int>{1});
}

TEST_CASE("knn matches the exhaustive oracle") {
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 5 + rng.below(120), f = 1 + rng.below(8);
        const std::size_t levels = trial % 2 ? 3 : 0; // coarse grids create distance ties
        const auto rows = random_rows(rng, n, f, levels);
        const auto y = random_labels(rng, n, 1 + rng.below(4));
        const auto d = design_of(rows, y, 4);
        const std::size_t k = 1 + rng.below(std::min<std::size_t>(n, 7));
        const auto queries = random_rows(rng, 20, f, levels);
        const auto qd = design_of(queries, std::vector<int>(20, 0), 1);
        const auto got = predict_knn(train_knn(d, k), qd.X);
        for (std::size_t i = 0; i < queries.size(); ++i) {
            CHECK(got[i] == oracle::knn_predict(rows, y, queries[i], k));
        }
    }
}

TEST_CASE("tree on separable and pure data") {
    const auto d = design_of({{0}, {1}, {2}, {3}}, {0, 0, 1, 1}, 2);
    const auto t = train_decision_tree(d);
    CHECK(t.depth() == 1);
    CHECK(predict_tree(t, d.X) == d.y);
    REQUIRE(split_sequence(t).size() == 1);
    CHECK(split_sequence(t)[0] == Split{0, 1.5});

    const auto pure = train_decision_tree(design_of({{0}, {1}}, {1, 1}, 2));
    CHECK(pure.nodes.size() == 1);
    CHECK(pure.nodes[0].prediction == 1);
}

TEST_CASE("tree leaf majority ties go to the lowest class") {
    // Identical rows cannot be split.
    const auto t = train_decision_tree(design_of({{1}, {1}, {1}, {1}}, {2, 1, 2, 1}, 3));
    CHECK(t.nodes.size() == 1);
    CHECK(t.nodes[0].prediction == 1);
}

TEST_CASE("tree memorizes XOR even though the first split does not reduce impurity") {
    const auto d = design_of({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {0, 1, 1, 0}, 2);
    const auto t = train_decision_tree(d);
    CHECK(predict_tree(t, d.X) == d.y);
}

TEST_CASE("tree split sequence matches the recount oracle") {
    Rng rng(4);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 2 + rng.below(29), f = 1 + rng.below(5);
        const auto rows = random_rows(rng, n, f, 2 + rng.below(4));
        const std::size_t classes = 2 + rng.below(3);
        const auto y = random_labels(rng, n, classes);
        const auto d = design_of(rows, y, classes);
        const auto got = split_sequence(train_decision_tree(d));
        const auto want = oracle::cart_splits(rows, y, static_cast<int>(classes));
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].feature == want[i].feature);
            CHECK(got[i].threshold == want[i].threshold);
        }
    }
}

TEST_CASE("tree training accuracy is 1 without conflicting rows") {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const auto rows = random_rows(rng, 80, 6);
        const auto y = random_labels(rng, 80, 4);
        const auto d = design_of(rows, y, 4);
        CHECK(predict_tree(train_decision_tree(d), d.X) == y);
    }
}

TEST_CASE("uniform positive scaling leaves knn and tree predictions unchanged") {
    Rng rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        auto rows = random_rows(rng, 60, 4);
        const auto y = random_labels(rng, 60, 3);
        const auto d = design_of(rows, y, 3);
        // Power-of-two factors keep every product exact.
        for (double s : {0.25, 8.0}) {
            auto scaled_rows = rows;
            for (auto& r : scaled_rows) for (auto& v : r) v *= s;
            const auto ds = design_of(scaled_rows, y, 3);
            CHECK(predict_knn(train_knn(d, 3), d.X) == predict_knn(train_knn(ds, 3), ds.X));
            const auto qs = random_rows(rng, 20, 4);
            auto qss = qs;
            for (auto& r : qss) for (auto& v : r) v *= s;
            CHECK(predict_tree(train_decision_tree(d), design_of(qs, std::vector<int>(20), 1).X) ==
                  predict_tree(train_decision_tree(ds), design_of(qss, std::vector<int>(20), 1).X));
        }
    }
}

TEST_CASE("svm separates blobs and has one weight vector per class") {
    Rng rng(7);
    std::vector<std::vector<double>> rows;
    std::vector<int> y;
    for (int i = 0; i < 60; ++i) {
        const int c = i % 2;
        rows.push_back({(c ? 3.0 : -3.0) + rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)});
        y.push_back(c);
    }
    const auto d = design_of(rows, y, 2);
    const auto m = train_svm(d);
    CHECK(predict_svm(m, d.X) == y);

    std::vector<int> y3 = y;
    for (std::size_t i = 0; i < y3.size(); i += 3) y3[i] = 2;
    const auto m3 = train_svm(design_of(rows, y3, 3));
    CHECK(m3.weights.size() == 3);
    CHECK(m3.bias.size() == 3);

    CHECK_THROWS_AS(train_svm(design_of(rows, std::vector<int>(60, 0), 1)), ConfigError);
}

TEST_CASE("svm on identical rows predicts the majority") {
    const std::vector<std::vector<double>> rows(10, std::vector<double>{0.5, 0.5});
    const std::vector<int> y = {0, 0, 0, 0, 0, 0, 0, 1, 1, 1};
    const auto d = design_of(rows, y, 2);
    const auto m = evaluate(predict_svm(train_svm(d), d.X), y, 2);
    CHECK(m.accuracy == doctest::Approx(0.7));
}

TEST_CASE("svm is deterministic given a seed") {
    Rng rng(8);
    const auto rows = random_rows(rng, 40, 5);
    const auto d = design_of(rows, random_labels(rng, 40, 3), 3);
    SvmParams p;
    p.seed = 42;
    CHECK(train_svm(d, p).weights == train_svm(d, p).weights);
}

TEST_CASE("evaluate: hand-computed three-class case") {
    const auto m = evaluate(std::vector<int>{0, 1, 1, 2}, std::vector<int>{0, 0, 1, 2}, 3);
    CHECK(m.accuracy == 0.75);
    CHECK(m.macro_recall == doctest::Approx((0.5 + 1 + 1) / 3.0).epsilon(1e-15));
    CHECK(m.macro_precision == doctest::Approx((1 + 0.5 + 1) / 3.0).epsilon(1e-15));
    const double r = 2.5 / 3, p = 2.5 / 3;
    CHECK(m.f_measure == doctest::Approx(2 * r * p / (r + p)).epsilon(1e-15));
    CHECK(m.confusion == ConfusionMatrix{{1, 1, 0}, {0, 1, 0}, {0, 0, 1}});
}

TEST_CASE("evaluate: perfect, constant predictor, errors") {
    const auto perfect = evaluate(std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 2}, 3);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.f_measure == 1.0);
    CHECK(perfect.confusion == ConfusionMatrix{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    const auto constant = evaluate(std::vector<int>{0, 0, 0, 0}, std::vector<int>{0, 0, 1, 1}, 2);
    CHECK(constant.accuracy == 0.5);
    CHECK(constant.macro_recall == 0.5);
    CHECK_THROWS_AS(evaluate(std::vector<int>{0}, std::vector<int>{0, 1}, 2), ConfigError);
    CHECK_THROWS_AS(evaluate(std::vector<int>{5}, std::vector<int>{0}, 2), ConfigError);
}

TEST_CASE("evaluate agrees with hand tallies and the trace identity") {
    Rng rng(9);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng.below(60), c = 1 + rng.below(6);
        const auto truth = random_labels(rng, n, c), pred = random_labels(rng, n, c);
        const auto m = evaluate(pred, truth, c);
        const auto h = oracle::hand_metrics(pred, truth, static_cast<int>(c));
        CHECK(m.accuracy == doctest::Approx(h.accuracy).epsilon(1e-12));
        CHECK(m.macro_recall == doctest::Approx(h.macro_recall).epsilon(1e-12));
        CHECK(m.macro_precision == doctest::Approx(h.macro_precision).epsilon(1e-12));
        CHECK(m.f_measure == doctest::Approx(h.f_measure).epsilon(1e-12));
        std::int64_t trace = 0, total = 0;
        for (std::size_t i = 0; i < c; ++i) {
            std::int64_t row = 0;
            for (std::size_t j = 0; j < c; ++j) {
                row += m.confusion[i][j];
                total += m.confusion[i][j];
            }
            trace += m.confusion[i][i];
            CHECK(row == std::count(truth.begin(), truth.end(), static_cast<int>(i)));
        }
        CHECK(static_cast<double>(trace) / static_cast<double>(total) == m.accuracy);
    }
}

TEST_CASE("suite order and count") {
    const auto combos = suite_combinations();
    REQUIRE(combos.size() == 21);
    CHECK(combos.front().classifier == ClassifierKind::svm);
    CHECK(combos.front().spec == ModeSpec{Mode::single, Target::group});
    CHECK(combos[9].spec == ModeSpec{Mode::multi, Target::group});
    CHECK(combos.back().classifier == ClassifierKind::decision_tree);
    CHECK(combos.back().spec == ModeSpec{Mode::all, Target::file_name});
    std::set<std::tuple<int, int, int>> unique;
    for (const auto& c : combos) {
        unique.insert({static_cast<int>(c.classifier), static_cast<int>(c.spec.mode), static_cast<int>(c.spec.target)});
    }
    CHECK(unique.size() == 21);
}

TEST_CASE("suite reports failures as diagnostics") {
    auto ds = small_dataset();
    for (auto& l : ds.labels) l[2] = "exe"; // a single type: SVM cannot train on it
    const auto results = run_suite(ds);
    CHECK(results.size() == 21);
    const auto& svm_type = results[2];
    CHECK(svm_type.classifier == "svm");
    CHECK(svm_type.target == "type");
    CHECK(!svm_type.diagnostic.empty());
    CHECK(results[8].classifier == "decision_tree");
    CHECK(results[8].diagnostic.empty());
}

TEST_CASE("suite with holdout and threads is deterministic") {
    Rng rng(10);
    FeatureDataset ds;
    for (int c = 0; c < 6; ++c) ds.feature_names.push_back("F" + std::to_string(c));
    for (int r = 0; r < 40; ++r) {
        ds.labels.push_back({"G" + std::to_string(r % 2), "S" + std::to_string(r % 4), r % 3 ? "exe" : "dll",
                             "f" + std::to_string(r)});
    }
    for (int i = 0; i < 240; ++i) ds.values.push_back(rng.uniform());
    SuiteOptions a;
    a.holdout = 0.25;
    a.seed = 3;
    SuiteOptions b = a;
    b.threads = 4;
    auto ra = run_suite(ds, a), rb = run_suite(ds, b);
    for (auto* v : {&ra, &rb}) for (auto& r : *v) r.training_seconds = 0;
    CHECK(ra == rb);
    const auto [train, test] = holdout_split(40, 0.25, 3);
    CHECK(test.size() == 10);
    CHECK(train.size() == 30);
}

TEST_CASE("results serialization round trip") {
    const auto results = run_suite(small_dataset());
    const auto text = results_to_json_text(results);
    auto back = results_from_json_text(text);
    REQUIRE(back.size() == 21);
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].classifier == results[i].classifier);
        CHECK(back[i].accuracy == round6(results[i].accuracy));
        CHECK(back[i].confusion_matrix == results[i].confusion_matrix);
    }
    CHECK(results_to_json_text(back) == text);
    CHECK(results_to_json_text(std::vector<ClassifierResult>{}) == "[]\n");
    // Field order is fixed.
    CHECK(text.find("\"classifier\"") < text.find("\"mode\""));
    CHECK(text.find("\"mode\"") < text.find("\"accuracy\""));

    fixtures::TempDir dir;
    serialize_results(results, dir / "sub/results.json");
    CHECK(load_results(dir / "sub/results.json").size() == 21);
    CHECK_THROWS_AS(serialize_results(results, "/proc/definitely/not/writable.json"), IoError);
}

TEST_CASE("malformed results name the record") {
    try {
        results_from_json_text(R"([{"classifier":"svm"}])");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("record 0") != std::string::npos);
    }
}

}
