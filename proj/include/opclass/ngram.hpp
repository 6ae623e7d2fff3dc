#pragma once

#include "opclass/corpus.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace opclass {

inline constexpr std::string_view kPadToken = "PAD";

enum class NGramMode {
    chunked, ///< non-overlapping partitions of the padded stream (default)
    sliding, ///< every window of n consecutive tokens
};

/// Append "PAD" until the length is a multiple of `n`. Empty stays empty.
std::vector<std::string> pad_tokens(std::vector<std::string> tokens, std::size_t n);

/// Split into grams of `n` tokens joined by one space.
/// Chunked mode requires tokens.size() % n == 0 (ConfigError otherwise).
/// Sliding mode yields max(0, len - n + 1) windows.
std::vector<std::string> generate_ngrams(std::span<const std::string> tokens, std::size_t n,
                                         NGramMode mode = NGramMode::chunked);

/// Pad (chunked mode only) and generate in one step.
std::vector<std::string> document_ngrams(const std::vector<std::string>& tokens, std::size_t n,
                                         NGramMode mode = NGramMode::chunked);

class NGramVocabulary {
public:
    NGramVocabulary() = default;
    /// `grams` need not be sorted or unique.
    NGramVocabulary(std::size_t n, std::vector<std::string> grams);

    std::size_t n() const { return n_; }
    std::size_t size() const { return grams_.size(); }
    const std::vector<std::string>& grams() const { return grams_; }
    /// Column of `gram`, or npos.
    std::size_t find(const std::string& gram) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::size_t n_ = 1;
    std::vector<std::string> grams_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Sorted union of all documents' grams.
NGramVocabulary build_vocabulary(std::span<const std::vector<std::string>> documents, std::size_t n,
                                 NGramMode mode = NGramMode::chunked, unsigned threads = 1);

/// Count of each vocabulary gram divided by the document's total gram count.
/// Grams missing from the vocabulary still count toward the total.
std::vector<double> featurize(const std::vector<std::string>& tokens,
                              const NGramVocabulary& vocabulary,
                              NGramMode mode = NGramMode::chunked);

enum class LabelColumn : std::size_t { group = 0, name = 1, type = 2, file_name = 3 };
inline constexpr std::size_t kLabelColumnCount = 4;
inline constexpr std::array<std::string_view, kLabelColumnCount> kLabelColumnNames = {
    "group", "name", "type", "file_name"};

using LabelRow = std::array<std::string, kLabelColumnCount>;

/// Row-per-sample table: four label columns followed by gram frequencies.
/// Frequencies are stored row-major in `values`.
struct FeatureDataset {
    std::vector<std::string> feature_names;
    std::vector<LabelRow> labels;
    std::vector<double> values;

    std::size_t rows() const { return labels.size(); }
    std::size_t features() const { return feature_names.size(); }

    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * features(), features()};
    }
    std::span<double> row(std::size_t r) { return {values.data() + r * features(), features()}; }
    double at(std::size_t r, std::size_t c) const { return values[r * features() + c]; }

    std::vector<std::string> label_column(LabelColumn which) const;

    /// Throws ParseError if shapes disagree or a value is outside [0, 1].
    void validate() const;

    bool operator==(const FeatureDataset&) const = default;
};

LabelRow labels_of(const SampleRecord& record);

/// Vocabulary + featurization over a whole corpus, rows in document order.
FeatureDataset build_feature_dataset(const std::vector<OpcodeDocument>& documents, std::size_t n,
                                     NGramMode mode = NGramMode::chunked, unsigned threads = 1);

struct PruneResult {
    FeatureDataset dataset;
    std::vector<std::string> kept;
    double threshold = 0.0;
};

/// Population variance of every feature column.
std::vector<double> column_variances(const FeatureDataset& dataset);

/// Keep feature columns whose population variance is strictly greater than
/// the linear-interpolated `percentile` of all column variances.
PruneResult variance_prune(const FeatureDataset& dataset, double percentile);

} // namespace opclass
