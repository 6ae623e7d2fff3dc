#include "opclass/classic/suite.hpp"

#include "opclass/error.hpp"
#include "opclass/parallel.hpp"
#include "opclass/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace opclass::classic {

std::string_view to_string(ClassifierKind k) {
    switch (k) {
    case ClassifierKind::svm: return "svm";
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::decision_tree: return "decision_tree";
    }
    return "?";
}

std::vector<Combination> suite_combinations() {
    constexpr ClassifierKind kinds[] = {ClassifierKind::svm, ClassifierKind::knn,
                                        ClassifierKind::decision_tree};
    std::vector<Combination> out;
    for (Mode mode : {Mode::single, Mode::multi}) {
        for (ClassifierKind kind : kinds) {
            for (Target target : {Target::group, Target::name, Target::type}) {
                out.push_back({kind, {mode, target}});
            }
        }
    }
    for (ClassifierKind kind : kinds) {
        out.push_back({kind, {Mode::all, Target::file_name}});
    }
    return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
holdout_split(std::size_t rows, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw ConfigError("holdout fraction must lie in (0, 1)");
    }
    std::vector<std::size_t> order(rows);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(std::span(order));
    const auto n_test = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows)));
    std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    if (train.empty() || test.empty()) {
        throw ConfigError("holdout split leaves an empty train or test set");
    }
    return {std::move(train), std::move(test)};
}

ClassifierResult run_combination(const FeatureDataset& dataset, const Combination& combo,
                                 const SuiteOptions& options) {
    const EncodedDesign full = assemble_design(dataset, combo.spec);

    EncodedDesign train_design;
    Matrix eval_X;
    std::vector<int> eval_y;
    if (options.holdout) {
        auto [train_idx, test_idx] = holdout_split(full.X.rows, *options.holdout, options.seed);
        train_design.X = full.X.take_rows(train_idx);
        for (std::size_t i : train_idx) {
            train_design.y.push_back(full.y[i]);
        }
        train_design.class_names = full.class_names;
        train_design.feature_names = full.feature_names;
        eval_X = full.X.take_rows(test_idx);
        for (std::size_t i : test_idx) {
            eval_y.push_back(full.y[i]);
        }
    } else {
        train_design = full;
        eval_X = full.X;
        eval_y = full.y;
    }

    const auto start = std::chrono::steady_clock::now();
    std::vector<int> predicted;
    double seconds = 0.0;
    auto stop_clock = [&] {
        seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    switch (combo.classifier) {
    case ClassifierKind::svm: {
        SvmParams p = options.svm;
        p.seed = options.seed;
        const auto model = train_svm(train_design, p);
        stop_clock();
        predicted = predict_svm(model, eval_X);
        break;
    }
    case ClassifierKind::knn: {
        const auto model = train_knn(train_design, options.knn_k);
        stop_clock();
        predicted = predict_knn(model, eval_X);
        break;
    }
    case ClassifierKind::decision_tree: {
        const auto model = train_decision_tree(train_design);
        stop_clock();
        predicted = predict_tree(model, eval_X);
        break;
    }
    }

    const Metrics m = evaluate(predicted, eval_y, full.num_classes());
    return make_result(std::string(to_string(combo.classifier)), std::string(to_string(combo.spec.mode)),
                       std::string(to_string(combo.spec.target)), m, full.class_names, seconds);
}

std::vector<ClassifierResult> run_suite(const FeatureDataset& dataset, const SuiteOptions& options) {
    const auto combos = suite_combinations();
    std::vector<ClassifierResult> results(combos.size());
    parallel_for(combos.size(), options.threads, [&](std::size_t i) {
        try {
            results[i] = run_combination(dataset, combos[i], options);
        } catch (const std::exception& e) {
            ClassifierResult r;
            r.classifier = std::string(to_string(combos[i].classifier));
            r.mode = std::string(to_string(combos[i].spec.mode));
            r.target = std::string(to_string(combos[i].spec.target));
            r.diagnostic = e.what();
            results[i] = std::move(r);
        }
    });
    return results;
}

} // namespace opclass::classic
