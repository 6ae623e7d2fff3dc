#include "opclass/classic/design.hpp"

#include "opclass/error.hpp"

#include <algorithm>
#include <map>

namespace opclass::classic {

Matrix Matrix::take_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

std::string_view to_string(Mode m) {
    switch (m) {
    case Mode::single: return "single";
    case Mode::multi: return "multi";
    case Mode::all: return "all";
    }
    return "?";
}

std::string_view to_string(Target t) {
    switch (t) {
    case Target::group: return "group";
    case Target::name: return "name";
    case Target::type: return "type";
    case Target::file_name: return "file_name";
    }
    return "?";
}

Mode parse_mode(std::string_view s) {
    if (s == "single") return Mode::single;
    if (s == "multi") return Mode::multi;
    if (s == "all") return Mode::all;
    throw ConfigError("unknown mode '" + std::string(s) + "'");
}

Target parse_target(std::string_view s) {
    if (s == "group") return Target::group;
    if (s == "name") return Target::name;
    if (s == "type") return Target::type;
    if (s == "file_name") return Target::file_name;
    throw ConfigError("unknown target '" + std::string(s) + "'");
}

void ModeSpec::validate() const {
    const bool file_target = target == Target::file_name;
    if ((mode == Mode::all) != file_target) {
        throw ConfigError("mode '" + std::string(to_string(mode)) + "' cannot predict target '" +
                          std::string(to_string(target)) + "'");
    }
}

OrdinalEncoding ordinal_encode(std::span<const std::string> labels) {
    std::map<std::string, int> index;
    for (const auto& l : labels) {
        index.emplace(l, 0);
    }
    OrdinalEncoding out;
    out.class_names.reserve(index.size());
    int next = 0;
    for (auto& [name, code] : index) {
        code = next++;
        out.class_names.push_back(name);
    }
    out.codes.reserve(labels.size());
    for (const auto& l : labels) {
        out.codes.push_back(index.at(l));
    }
    return out;
}

EncodedDesign assemble_design(const FeatureDataset& dataset, const ModeSpec& spec) {
    spec.validate();

    std::vector<LabelColumn> extra;
    if (spec.mode == Mode::multi) {
        for (LabelColumn c : {LabelColumn::group, LabelColumn::name, LabelColumn::type}) {
            if (static_cast<std::size_t>(c) != static_cast<std::size_t>(spec.target)) {
                extra.push_back(c);
            }
        }
    } else if (spec.mode == Mode::all) {
        extra = {LabelColumn::group, LabelColumn::name, LabelColumn::type};
    }

    const std::size_t rows = dataset.rows();
    const std::size_t freq_cols = dataset.features();
    EncodedDesign design;
    design.X = Matrix(rows, freq_cols + extra.size());
    design.feature_names = dataset.feature_names;
    for (std::size_t r = 0; r < rows; ++r) {
        const auto src = dataset.row(r);
        std::copy(src.begin(), src.end(), design.X.row(r).begin());
    }
    for (std::size_t e = 0; e < extra.size(); ++e) {
        const auto column = dataset.label_column(extra[e]);
        const auto enc = ordinal_encode(column);
        for (std::size_t r = 0; r < rows; ++r) {
            design.X(r, freq_cols + e) = enc.codes[r];
        }
        design.feature_names.emplace_back(kLabelColumnNames[static_cast<std::size_t>(extra[e])]);
    }

    const auto target = dataset.label_column(static_cast<LabelColumn>(spec.target));
    auto enc = ordinal_encode(target);
    design.y = std::move(enc.codes);
    design.class_names = std::move(enc.class_names);
    return design;
}

} // namespace opclass::classic
