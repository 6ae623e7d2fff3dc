#pragma once

#include "opclass/classic/classifiers.hpp"
#include "opclass/classic/evaluation.hpp"

#include <optional>

namespace opclass::classic {

enum class ClassifierKind { svm, knn, decision_tree };

std::string_view to_string(ClassifierKind k);

struct Combination {
    ClassifierKind classifier;
    ModeSpec spec;
};

/// The 21 combinations in report order: for single then multi mode, each
/// classifier (SVM, KNN, Decision Tree) against group, name and type; then
/// each classifier in all mode against file_name.
std::vector<Combination> suite_combinations();

struct SuiteOptions {
    /// When set, this fraction of rows (seeded shuffle) is held out for
    /// evaluation. Unset: train and evaluate on the full dataset.
    std::optional<double> holdout;
    std::uint64_t seed = 0;
    std::size_t knn_k = 3;
    SvmParams svm{};
    unsigned threads = 1;
};

/// Train and score one combination. Errors are not caught here.
ClassifierResult run_combination(const FeatureDataset& dataset, const Combination& combo,
                                 const SuiteOptions& options);

/// All 21 combinations. A failing combination yields a result with its
/// `diagnostic` set instead of aborting the suite.
std::vector<ClassifierResult> run_suite(const FeatureDataset& dataset,
                                        const SuiteOptions& options = {});

/// Seeded split of [0, rows) into (train, test) index lists, both ascending.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
holdout_split(std::size_t rows, double fraction, std::uint64_t seed);

} // namespace opclass::classic
