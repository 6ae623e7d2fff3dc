#include "opclass/cnn/dataset.hpp"

#include "opclass/error.hpp"
#include "opclass/stats.hpp"

#include <cmath>

namespace opclass::cnn {

std::size_t sequence_length_for(std::span<const std::size_t> lengths, double percentile) {
    std::vector<double> values(lengths.begin(), lengths.end());
    const double p = percentile_linear(values, percentile);
    return std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(p)));
}

SequenceDataset encode_sequences(const std::vector<OpcodeDocument>& documents,
                                 classic::Target target, std::size_t max_len) {
    if (documents.empty()) {
        throw ConfigError("cannot build a sequence dataset from an empty corpus");
    }
    if (target == classic::Target::file_name) {
        throw ConfigError("sequence targets are group, name or type");
    }

    SequenceDataset ds;
    ds.max_len = max_len;
    ds.target = target;
    for (const auto& doc : documents) {
        for (const auto& tok : doc.tokens) {
            ds.vocab.emplace(tok, 0);
        }
    }
    std::int32_t next = 1;
    for (auto& [tok, index] : ds.vocab) {
        index = next++;
    }
    ds.vocab_size = ds.vocab.size();

    ds.tokens.assign(documents.size() * max_len, 0);
    for (std::size_t r = 0; r < documents.size(); ++r) {
        const auto& toks = documents[r].tokens;
        const std::size_t n = std::min(max_len, toks.size());
        for (std::size_t t = 0; t < n; ++t) {
            ds.tokens[r * max_len + t] = ds.vocab.at(toks[t]);
        }
    }

    std::vector<std::string> labels;
    labels.reserve(documents.size());
    for (const auto& doc : documents) {
        labels.push_back(labels_of(doc.record)[static_cast<std::size_t>(target)]);
    }
    auto enc = classic::ordinal_encode(labels);
    ds.labels = std::move(enc.codes);
    ds.class_names = std::move(enc.class_names);
    return ds;
}

SequenceDataset build_sequence_dataset(const std::vector<OpcodeDocument>& documents,
                                       classic::Target target, double percentile) {
    if (documents.empty()) {
        throw ConfigError("cannot build a sequence dataset from an empty corpus");
    }
    std::vector<std::size_t> lengths;
    lengths.reserve(documents.size());
    for (const auto& doc : documents) {
        lengths.push_back(doc.tokens.size());
    }
    return encode_sequences(documents, target, sequence_length_for(lengths, percentile));
}

} // namespace opclass::cnn
