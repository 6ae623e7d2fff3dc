#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace opclass::classic {

using ConfusionMatrix = std::vector<std::vector<std::int64_t>>;

struct Metrics {
    double accuracy = 0.0;
    double macro_recall = 0.0;
    double macro_precision = 0.0;
    double f_measure = 0.0;
    ConfusionMatrix confusion; ///< rows = true class, columns = predicted
};

/// Accuracy = correct / total. Per-class precision and recall define 0/0 as
/// 0; the macro averages run over classes with nonzero support in `truth`.
/// F-measure is the harmonic mean of macro precision and macro recall.
/// Throws ConfigError when the lengths differ or a label is out of range.
Metrics evaluate(std::span<const int> predicted, std::span<const int> truth,
                 std::size_t num_classes);

struct ClassifierResult {
    std::string classifier; ///< "svm", "knn", "decision_tree" or "cnn"
    std::string mode;
    std::string target;
    double accuracy = 0.0;
    double macro_recall = 0.0;
    double macro_precision = 0.0;
    double f_measure = 0.0;
    std::vector<std::string> class_names;
    ConfusionMatrix confusion_matrix;
    double training_seconds = 0.0;
    /// Empty on success; otherwise why this combination produced no metrics.
    std::string diagnostic;

    bool operator==(const ClassifierResult&) const = default;
};

ClassifierResult make_result(std::string classifier, std::string mode, std::string target,
                             const Metrics& metrics, std::vector<std::string> class_names,
                             double training_seconds);

/// Fixed field order; reals rounded to 6 decimals.
nlohmann::ordered_json to_json(const ClassifierResult& result);
ClassifierResult result_from_json(const nlohmann::json& j);

std::string results_to_json_text(std::span<const ClassifierResult> results);
std::vector<ClassifierResult> results_from_json_text(std::string_view text);

void serialize_results(std::span<const ClassifierResult> results,
                       const std::filesystem::path& path);
std::vector<ClassifierResult> load_results(const std::filesystem::path& path);

double round6(double v);

} // namespace opclass::classic
