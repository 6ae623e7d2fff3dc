#pragma once

#include "opclass/classic/design.hpp"
#include "opclass/corpus.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace opclass::cnn {

namespace fs = std::filesystem;

struct DedupReport {
    fs::path source;
    fs::path destination;
    /// Software directories deleted from the copy, relative to its root.
    std::vector<fs::path> removed;
    std::size_t files_before = 0;
    std::size_t files_after = 0;
    double reduction_percent = 0.0;

    nlohmann::ordered_json to_json() const;
};

/// Copy `source` to `destination`, then for every software directory name
/// found under more than one group keep only the copy under the
/// lexicographically smallest group. `source` is never modified.
/// `destination` must not exist or be an empty directory (ConfigError).
DedupReport dedup_one_to_one(const fs::path& source, const fs::path& destination,
                             std::string_view extension = kOpcodeExtension);

/// software name -> groups it appears under, from `<group>/<software>/` dirs.
std::map<std::string, std::set<std::string>> software_groups(const fs::path& root);

/// Integer-encoded, fixed-length opcode sequences.
struct SequenceDataset {
    std::size_t max_len = 0;
    std::size_t vocab_size = 0;         ///< distinct opcodes; indices 1..vocab_size
    std::vector<std::int32_t> tokens;   ///< rows x max_len, 0 = padding
    std::vector<int> labels;
    std::map<std::string, std::int32_t> vocab;
    std::vector<std::string> class_names;
    classic::Target target = classic::Target::group;

    std::size_t rows() const { return labels.size(); }
    std::size_t num_classes() const { return class_names.size(); }
    std::span<const std::int32_t> row(std::size_t r) const {
        return {tokens.data() + r * max_len, max_len};
    }
};

/// max(4, ceil(linear percentile of document lengths)).
std::size_t sequence_length_for(std::span<const std::size_t> lengths, double percentile);

/// Vocabulary = sorted unique opcodes mapped to 1..V. Longer documents keep
/// their prefix; shorter ones are right-padded with 0. Labels are the ordinal
/// codes of `target` (group, name or type). Throws ConfigError when empty.
SequenceDataset build_sequence_dataset(const std::vector<OpcodeDocument>& documents,
                                       classic::Target target, double percentile);

/// Same encoding with sequence length given explicitly.
SequenceDataset encode_sequences(const std::vector<OpcodeDocument>& documents,
                                 classic::Target target, std::size_t max_len);

} // namespace opclass::cnn
