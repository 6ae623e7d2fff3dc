#include "opclass/classic/evaluation.hpp"

#include "opclass/corpus.hpp"
#include "opclass/error.hpp"

#include <cmath>
#include <fstream>

namespace opclass::classic {

double round6(double v) {
    const double r = std::round(v * 1e6) / 1e6;
    return r == 0.0 ? 0.0 : r; // no "-0.0" in output
}

Metrics evaluate(std::span<const int> predicted, std::span<const int> truth,
                 std::size_t num_classes) {
    if (predicted.size() != truth.size()) {
        throw ConfigError("evaluate: " + std::to_string(predicted.size()) + " predictions for " +
                          std::to_string(truth.size()) + " labels");
    }
    Metrics m;
    m.confusion.assign(num_classes, std::vector<std::int64_t>(num_classes, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i];
        const int p = predicted[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= num_classes ||
            static_cast<std::size_t>(p) >= num_classes) {
            throw ConfigError("evaluate: label out of range at position " + std::to_string(i));
        }
        ++m.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    }
    if (truth.empty()) {
        return m;
    }

    std::int64_t correct = 0;
    double recall_sum = 0.0;
    double precision_sum = 0.0;
    std::size_t supported = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        correct += m.confusion[c][c];
        std::int64_t support = 0;
        std::int64_t predicted_as = 0;
        for (std::size_t k = 0; k < num_classes; ++k) {
            support += m.confusion[c][k];
            predicted_as += m.confusion[k][c];
        }
        if (support == 0) {
            continue;
        }
        ++supported;
        const auto tp = static_cast<double>(m.confusion[c][c]);
        recall_sum += tp / static_cast<double>(support);
        precision_sum += predicted_as == 0 ? 0.0 : tp / static_cast<double>(predicted_as);
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    m.macro_recall = recall_sum / static_cast<double>(supported);
    m.macro_precision = precision_sum / static_cast<double>(supported);
    const double denom = m.macro_precision + m.macro_recall;
    m.f_measure = denom == 0.0 ? 0.0 : 2.0 * m.macro_precision * m.macro_recall / denom;
    return m;
}

ClassifierResult make_result(std::string classifier, std::string mode, std::string target,
                             const Metrics& metrics, std::vector<std::string> class_names,
                             double training_seconds) {
    ClassifierResult r;
    r.classifier = std::move(classifier);
    r.mode = std::move(mode);
    r.target = std::move(target);
    r.accuracy = metrics.accuracy;
    r.macro_recall = metrics.macro_recall;
    r.macro_precision = metrics.macro_precision;
    r.f_measure = metrics.f_measure;
    r.class_names = std::move(class_names);
    r.confusion_matrix = metrics.confusion;
    r.training_seconds = training_seconds;
    return r;
}

nlohmann::ordered_json to_json(const ClassifierResult& r) {
    nlohmann::ordered_json j;
    j["classifier"] = r.classifier;
    j["mode"] = r.mode;
    j["target"] = r.target;
    j["accuracy"] = round6(r.accuracy);
    j["macro_recall"] = round6(r.macro_recall);
    j["macro_precision"] = round6(r.macro_precision);
    j["f_measure"] = round6(r.f_measure);
    j["class_names"] = r.class_names;
    j["confusion_matrix"] = r.confusion_matrix;
    j["training_seconds"] = round6(r.training_seconds);
    j["diagnostic"] = r.diagnostic;
    return j;
}

ClassifierResult result_from_json(const nlohmann::json& j) {
    ClassifierResult r;
    try {
        r.classifier = j.at("classifier").get<std::string>();
        r.mode = j.at("mode").get<std::string>();
        r.target = j.at("target").get<std::string>();
        r.accuracy = j.at("accuracy").get<double>();
        r.macro_recall = j.at("macro_recall").get<double>();
        r.macro_precision = j.at("macro_precision").get<double>();
        r.f_measure = j.at("f_measure").get<double>();
        r.class_names = j.at("class_names").get<std::vector<std::string>>();
        r.confusion_matrix = j.at("confusion_matrix").get<ConfusionMatrix>();
        r.training_seconds = j.value("training_seconds", 0.0);
        r.diagnostic = j.value("diagnostic", std::string{});
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed classifier result: ") + e.what());
    }
    const std::size_t n = r.class_names.size();
    if (r.confusion_matrix.size() != n) {
        throw ParseError("confusion matrix has " + std::to_string(r.confusion_matrix.size()) +
                         " rows for " + std::to_string(n) + " classes");
    }
    for (const auto& row : r.confusion_matrix) {
        if (row.size() != n) {
            throw ParseError("confusion matrix is not square");
        }
    }
    return r;
}

std::string results_to_json_text(std::span<const ClassifierResult> results) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        arr.push_back(to_json(r));
    }
    return arr.dump(2) + "\n";
}

std::vector<ClassifierResult> results_from_json_text(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("results are not valid JSON: ") + e.what());
    }
    if (!j.is_array()) {
        throw ParseError("results JSON must be an array");
    }
    std::vector<ClassifierResult> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        try {
            out.push_back(result_from_json(j[i]));
        } catch (const ParseError& e) {
            throw ParseError("result record " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

void serialize_results(std::span<const ClassifierResult> results,
                       const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write results to " + path.string());
    }
    out << results_to_json_text(results);
    if (!out) {
        throw IoError("error writing results to " + path.string());
    }
}

std::vector<ClassifierResult> load_results(const std::filesystem::path& path) {
    try {
        return results_from_json_text(read_file_bytes(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

} // namespace opclass::classic
