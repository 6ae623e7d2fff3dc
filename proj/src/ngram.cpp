#include "opclass/ngram.hpp"

#include "opclass/error.hpp"
#include "opclass/parallel.hpp"
#include "opclass/stats.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

namespace opclass {

std::vector<std::string> pad_tokens(std::vector<std::string> tokens, std::size_t n) {
    if (n == 0) {
        throw ConfigError("n-gram size must be at least 1");
    }
    while (tokens.size() % n != 0) {
        tokens.emplace_back(kPadToken);
    }
    return tokens;
}

std::vector<std::string> generate_ngrams(std::span<const std::string> tokens, std::size_t n,
                                         NGramMode mode) {
    if (n == 0) {
        throw ConfigError("n-gram size must be at least 1");
    }
    std::vector<std::string> grams;
    auto join = [&](std::size_t start) {
        std::string gram = tokens[start];
        for (std::size_t j = 1; j < n; ++j) {
            gram += ' ';
            gram += tokens[start + j];
        }
        return gram;
    };

    if (mode == NGramMode::chunked) {
        if (tokens.size() % n != 0) {
            throw ConfigError("token count " + std::to_string(tokens.size()) +
                              " is not divisible by n=" + std::to_string(n) + "; pad first");
        }
        grams.reserve(tokens.size() / n);
        for (std::size_t i = 0; i < tokens.size(); i += n) {
            grams.push_back(join(i));
        }
    } else if (tokens.size() >= n) {
        grams.reserve(tokens.size() - n + 1);
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            grams.push_back(join(i));
        }
    }
    return grams;
}

std::vector<std::string> document_ngrams(const std::vector<std::string>& tokens, std::size_t n,
                                         NGramMode mode) {
    if (mode == NGramMode::chunked) {
        const auto padded = pad_tokens(tokens, n);
        return generate_ngrams(padded, n, mode);
    }
    return generate_ngrams(tokens, n, mode);
}

NGramVocabulary::NGramVocabulary(std::size_t n, std::vector<std::string> grams)
    : n_(n), grams_(std::move(grams)) {
    std::sort(grams_.begin(), grams_.end());
    grams_.erase(std::unique(grams_.begin(), grams_.end()), grams_.end());
    index_.reserve(grams_.size());
    for (std::size_t i = 0; i < grams_.size(); ++i) {
        index_.emplace(grams_[i], i);
    }
}

std::size_t NGramVocabulary::find(const std::string& gram) const {
    const auto it = index_.find(gram);
    return it == index_.end() ? npos : it->second;
}

NGramVocabulary build_vocabulary(std::span<const std::vector<std::string>> documents, std::size_t n,
                                 NGramMode mode, unsigned threads) {
    if (n == 0) {
        throw ConfigError("n-gram size must be at least 1");
    }
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, documents.size()));
    std::vector<std::unordered_set<std::string>> partial(workers);
    parallel_for(workers, workers, [&](std::size_t w) {
        for (std::size_t d = w; d < documents.size(); d += workers) {
            for (auto& g : document_ngrams(documents[d], n, mode)) {
                partial[w].insert(std::move(g));
            }
        }
    });
    std::set<std::string> merged;
    for (auto& part : partial) {
        merged.insert(part.begin(), part.end());
    }
    return NGramVocabulary(n, {merged.begin(), merged.end()});
}

std::vector<double> featurize(const std::vector<std::string>& tokens,
                              const NGramVocabulary& vocabulary, NGramMode mode) {
    std::vector<double> freq(vocabulary.size(), 0.0);
    const auto grams = document_ngrams(tokens, vocabulary.n(), mode);
    if (grams.empty()) {
        return freq;
    }
    std::vector<std::size_t> counts(vocabulary.size(), 0);
    for (const auto& g : grams) {
        const std::size_t idx = vocabulary.find(g);
        if (idx != NGramVocabulary::npos) {
            ++counts[idx];
        }
    }
    const auto total = static_cast<double>(grams.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        freq[i] = static_cast<double>(counts[i]) / total;
    }
    return freq;
}

std::vector<std::string> FeatureDataset::label_column(LabelColumn which) const {
    std::vector<std::string> out;
    out.reserve(labels.size());
    for (const auto& row : labels) {
        out.push_back(row[static_cast<std::size_t>(which)]);
    }
    return out;
}

void FeatureDataset::validate() const {
    if (values.size() != rows() * features()) {
        throw ParseError("dataset has " + std::to_string(values.size()) + " values, expected " +
                         std::to_string(rows()) + " x " + std::to_string(features()));
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ParseError("frequency out of [0,1] at row " + std::to_string(i / features() + 1) +
                             ", feature " + std::to_string(i % features() + 1));
        }
    }
}

LabelRow labels_of(const SampleRecord& record) {
    return {record.group, record.software_name, record.malware_type, record.file_name};
}

FeatureDataset build_feature_dataset(const std::vector<OpcodeDocument>& documents, std::size_t n,
                                     NGramMode mode, unsigned threads) {
    std::vector<std::vector<std::string>> token_lists;
    token_lists.reserve(documents.size());
    for (const auto& d : documents) {
        token_lists.push_back(d.tokens);
    }
    const NGramVocabulary vocab = build_vocabulary(token_lists, n, mode, threads);

    FeatureDataset ds;
    ds.feature_names = vocab.grams();
    ds.labels.reserve(documents.size());
    for (const auto& d : documents) {
        ds.labels.push_back(labels_of(d.record));
    }
    ds.values.assign(documents.size() * vocab.size(), 0.0);
    parallel_for(documents.size(), threads, [&](std::size_t r) {
        const auto freq = featurize(token_lists[r], vocab, mode);
        std::copy(freq.begin(), freq.end(), ds.row(r).begin());
    });
    return ds;
}

std::vector<double> column_variances(const FeatureDataset& dataset) {
    const std::size_t rows = dataset.rows();
    const std::size_t cols = dataset.features();
    std::vector<double> mean(cols, 0.0);
    std::vector<double> var(cols, 0.0);
    if (rows == 0) {
        return var;
    }
    for (std::size_t r = 0; r < rows; ++r) {
        const auto row = dataset.row(r);
        for (std::size_t c = 0; c < cols; ++c) {
            mean[c] += row[c];
        }
    }
    for (double& m : mean) {
        m /= static_cast<double>(rows);
    }
    for (std::size_t r = 0; r < rows; ++r) {
        const auto row = dataset.row(r);
        for (std::size_t c = 0; c < cols; ++c) {
            const double d = row[c] - mean[c];
            var[c] += d * d;
        }
    }
    for (double& v : var) {
        v /= static_cast<double>(rows);
    }
    return var;
}

PruneResult variance_prune(const FeatureDataset& dataset, double percentile) {
    if (!(percentile >= 0.0 && percentile <= 100.0)) {
        throw ConfigError("percentile must lie in [0, 100]");
    }
    if (dataset.features() == 0) {
        throw ConfigError("variance pruning needs at least one feature column");
    }
    const auto variances = column_variances(dataset);
    PruneResult out;
    out.threshold = percentile_linear(variances, percentile);

    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < variances.size(); ++c) {
        if (variances[c] > out.threshold) {
            keep.push_back(c);
            out.kept.push_back(dataset.feature_names[c]);
        }
    }

    out.dataset.feature_names = out.kept;
    out.dataset.labels = dataset.labels;
    out.dataset.values.reserve(dataset.rows() * keep.size());
    for (std::size_t r = 0; r < dataset.rows(); ++r) {
        const auto row = dataset.row(r);
        for (std::size_t c : keep) {
            out.dataset.values.push_back(row[c]);
        }
    }
    return out;
}

} // namespace opclass
