#pragma once

#include "opclass/cnn/model.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace opclass::cnn {

/// Model container, all integers and floats little-endian:
///
///   magic    8 bytes  "OPCNNMD\x01"
///   version  u32      1
///   tensors  u32      number of tensors (9)
///   shape    u32 x 7  vocab_size, embedding_dim, max_len, filters, kernel,
///                     dense_units, num_classes
///   dropout  f32
///   then per tensor:
///     name_len u32, name bytes, ndim u32, dims u32 x ndim,
///     data f32 x prod(dims)
///
/// Parameters are stored as 32-bit floats, so a round trip is exact only to
/// single precision. Optimizer state is not stored.
std::string model_to_bytes(const CnnModel& model);
CnnModel model_from_bytes(std::string_view bytes);

void save_model(const CnnModel& model, const std::filesystem::path& path);
CnnModel load_model(const std::filesystem::path& path);

} // namespace opclass::cnn
