#pragma once

#include "opclass/ngram.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace opclass::classic {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    /// Rows selected by index, in the given order.
    Matrix take_rows(std::span<const std::size_t> indices) const;
};

enum class Mode { single, multi, all };
enum class Target { group, name, type, file_name };

std::string_view to_string(Mode m);
std::string_view to_string(Target t);
Mode parse_mode(std::string_view s);
Target parse_target(std::string_view s);

struct ModeSpec {
    Mode mode = Mode::single;
    Target target = Target::group;

    /// all => file_name; single/multi => one of group/name/type.
    void validate() const;
    bool operator==(const ModeSpec&) const = default;
};

struct OrdinalEncoding {
    std::vector<int> codes;
    std::vector<std::string> class_names;
};

/// class_names = sorted unique labels; each code is its label's index there.
OrdinalEncoding ordinal_encode(std::span<const std::string> labels);

struct EncodedDesign {
    Matrix X;
    std::vector<int> y;
    std::vector<std::string> class_names;
    std::vector<std::string> feature_names;

    std::size_t num_classes() const { return class_names.size(); }
};

/// single: frequency columns only.
/// multi:  frequencies + ordinal codes of the two non-target labels among
///         group/name/type, in that order, as the last columns.
/// all:    frequencies + ordinal codes of group, name, type; target file_name.
EncodedDesign assemble_design(const FeatureDataset& dataset, const ModeSpec& spec);

} // namespace opclass::classic
