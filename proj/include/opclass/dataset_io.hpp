#pragma once

#include "opclass/ngram.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace opclass {

enum class DatasetFormat { csv, binary };

/// Binary cache layout (all integers little-endian):
///
///   "OPCDSET\x01"            8-byte magic
///   u32 version (=1), u32 label column count (=4)
///   u64 rows, u64 features
///   features x { u32 byte length, UTF-8 bytes }      feature names
///   rows x 4 x { u32 byte length, UTF-8 bytes }      label values
///   rows x features x f64                            frequencies, row-major
///   "OPCDEND\0"              8-byte trailer
inline constexpr std::string_view kDatasetMagic{"OPCDSET\x01", 8};
inline constexpr std::string_view kDatasetTrailer{"OPCDEND\0", 8};
inline constexpr std::uint32_t kDatasetVersion = 1;

void write_dataset(const FeatureDataset& dataset, const std::filesystem::path& path,
                   DatasetFormat format);

/// Detects the format from the file's leading bytes. Throws ParseError with
/// a row/column location on malformed input and IoError on unreadable files.
FeatureDataset read_dataset(const std::filesystem::path& path);

std::string dataset_to_csv(const FeatureDataset& dataset);
FeatureDataset dataset_from_csv(std::string_view text);
std::string dataset_to_binary(const FeatureDataset& dataset);
FeatureDataset dataset_from_binary(std::string_view bytes);

/// Shortest round-trippable text for a frequency at 12 significant digits.
std::string format_value(double v);

} // namespace opclass
