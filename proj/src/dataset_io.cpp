#include "opclass/dataset_io.hpp"

#include "opclass/corpus.hpp"
#include "opclass/error.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>

namespace opclass {

namespace {

bool needs_quoting(std::string_view field) {
    if (field.empty()) {
        return false;
    }
    if (field.front() == ' ' || field.back() == ' ') {
        return true;
    }
    return field.find_first_of(",\"\r\n") != std::string_view::npos;
}

void append_field(std::string& out, std::string_view field) {
    if (!needs_quoting(field)) {
        out += field;
        return;
    }
    out += '"';
    for (char c : field) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
}

std::string location(std::size_t line, std::size_t column) {
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

/// RFC 4180 style record reader over an in-memory buffer.
class CsvReader {
public:
    explicit CsvReader(std::string_view text) : text_(text) {}

    bool done() const { return pos_ >= text_.size(); }
    std::size_t line() const { return line_; }

    /// Reads one record; every record must be newline-terminated.
    std::vector<std::string> next_record() {
        std::vector<std::string> fields;
        const std::size_t record_line = line_ + 1;
        std::string field;
        bool quoted = false;
        bool field_started_quoted = false;
        while (true) {
            if (pos_ >= text_.size()) {
                throw ParseError("truncated CSV: record at " +
                                 location(record_line, fields.size() + 1) +
                                 " has no terminating newline");
            }
            const char c = text_[pos_++];
            if (quoted) {
                if (c == '"') {
                    if (pos_ < text_.size() && text_[pos_] == '"') {
                        field += '"';
                        ++pos_;
                    } else {
                        quoted = false;
                    }
                } else {
                    if (c == '\n') {
                        ++embedded_lines_;
                    }
                    field += c;
                }
                continue;
            }
            if (c == '"' && field.empty() && !field_started_quoted) {
                quoted = true;
                field_started_quoted = true;
            } else if (c == ',') {
                fields.push_back(std::move(field));
                field.clear();
                field_started_quoted = false;
            } else if (c == '\n') {
                if (!field.empty() && field.back() == '\r' && !field_started_quoted) {
                    field.pop_back();
                }
                fields.push_back(std::move(field));
                line_ += 1 + embedded_lines_;
                embedded_lines_ = 0;
                return fields;
            } else if (c == '\r' && field_started_quoted) {
                // CRLF after a closing quote.
            } else {
                if (field_started_quoted) {
                    throw ParseError("unexpected character after closing quote at " +
                                     location(record_line, fields.size() + 1));
                }
                field += c;
            }
        }
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 0;
    std::size_t embedded_lines_ = 0;
};

class ByteWriter {
public:
    void raw(std::string_view s) { out_.append(s); }

    template <typename T>
    void scalar(T v) {
        if constexpr (std::endian::native == std::endian::big) {
            v = byteswap(v);
        }
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        out_.append(buf, sizeof(T));
    }

    void string(std::string_view s) {
        scalar(static_cast<std::uint32_t>(s.size()));
        raw(s);
    }

    std::string take() { return std::move(out_); }

    template <typename T>
    static T byteswap(T v) {
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
            std::swap(buf[i], buf[sizeof(T) - 1 - i]);
        }
        std::memcpy(&v, buf, sizeof(T));
        return v;
    }

private:
    std::string out_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

    std::string_view raw(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) {
            throw ParseError(std::string("truncated dataset cache while reading ") + what +
                             " at byte offset " + std::to_string(pos_));
        }
        std::string_view s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    template <typename T>
    T scalar(const char* what) {
        T v;
        std::memcpy(&v, raw(sizeof(T), what).data(), sizeof(T));
        if constexpr (std::endian::native == std::endian::big) {
            v = ByteWriter::byteswap(v);
        }
        return v;
    }

    std::string string(const char* what) {
        const auto len = scalar<std::uint32_t>(what);
        return std::string(raw(len, what));
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }
    std::size_t offset() const { return pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::string format_value(double v) {
    if (v == 0.0) {
        return "0";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

std::string dataset_to_csv(const FeatureDataset& ds) {
    std::string out;
    out.reserve(ds.values.size() * 6 + 64);
    for (std::size_t i = 0; i < kLabelColumnCount; ++i) {
        if (i > 0) {
            out += ',';
        }
        out += kLabelColumnNames[i];
    }
    for (const auto& name : ds.feature_names) {
        out += ',';
        append_field(out, name);
    }
    out += '\n';
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        for (std::size_t i = 0; i < kLabelColumnCount; ++i) {
            if (i > 0) {
                out += ',';
            }
            append_field(out, ds.labels[r][i]);
        }
        for (double v : ds.row(r)) {
            out += ',';
            out += format_value(v);
        }
        out += '\n';
    }
    return out;
}

FeatureDataset dataset_from_csv(std::string_view text) {
    CsvReader reader(text);
    if (reader.done()) {
        throw ParseError("empty CSV dataset: missing header at line 1");
    }
    auto header = reader.next_record();
    if (header.size() < kLabelColumnCount) {
        throw ParseError("CSV header at line 1 has " + std::to_string(header.size()) +
                         " columns; expected at least the 4 label columns");
    }
    for (std::size_t i = 0; i < kLabelColumnCount; ++i) {
        if (header[i] != kLabelColumnNames[i]) {
            throw ParseError("CSV header at " + location(1, i + 1) + " is '" + header[i] +
                             "', expected '" + std::string(kLabelColumnNames[i]) + "'");
        }
    }

    FeatureDataset ds;
    ds.feature_names.assign(header.begin() + kLabelColumnCount, header.end());
    const std::size_t width = header.size();
    while (!reader.done()) {
        const std::size_t line = reader.line() + 1;
        auto fields = reader.next_record();
        if (fields.size() != width) {
            throw ParseError("CSV record at line " + std::to_string(line) + " has " +
                             std::to_string(fields.size()) + " columns, expected " +
                             std::to_string(width));
        }
        LabelRow labels;
        for (std::size_t i = 0; i < kLabelColumnCount; ++i) {
            labels[i] = std::move(fields[i]);
        }
        ds.labels.push_back(std::move(labels));
        for (std::size_t c = kLabelColumnCount; c < width; ++c) {
            const std::string& f = fields[c];
            double v = 0.0;
            const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (res.ec != std::errc() || res.ptr != f.data() + f.size() || f.empty()) {
                throw ParseError("invalid number '" + f + "' at " + location(line, c + 1));
            }
            if (!(v >= 0.0 && v <= 1.0)) {
                throw ParseError("frequency " + f + " outside [0,1] at " + location(line, c + 1));
            }
            ds.values.push_back(v);
        }
    }
    return ds;
}

std::string dataset_to_binary(const FeatureDataset& ds) {
    ds.validate();
    ByteWriter w;
    w.raw(kDatasetMagic);
    w.scalar<std::uint32_t>(kDatasetVersion);
    w.scalar<std::uint32_t>(kLabelColumnCount);
    w.scalar<std::uint64_t>(ds.rows());
    w.scalar<std::uint64_t>(ds.features());
    for (const auto& name : ds.feature_names) {
        w.string(name);
    }
    for (const auto& row : ds.labels) {
        for (const auto& label : row) {
            w.string(label);
        }
    }
    if constexpr (std::endian::native == std::endian::little) {
        w.raw(std::string_view(reinterpret_cast<const char*>(ds.values.data()),
                               ds.values.size() * sizeof(double)));
    } else {
        for (double v : ds.values) {
            w.scalar(v);
        }
    }
    w.raw(kDatasetTrailer);
    return w.take();
}

FeatureDataset dataset_from_binary(std::string_view bytes) {
    ByteReader r(bytes);
    if (r.raw(kDatasetMagic.size(), "magic") != kDatasetMagic) {
        throw ParseError("not a dataset cache: bad magic bytes");
    }
    const auto version = r.scalar<std::uint32_t>("version");
    if (version != kDatasetVersion) {
        throw ParseError("unsupported dataset cache version " + std::to_string(version));
    }
    const auto label_count = r.scalar<std::uint32_t>("label column count");
    if (label_count != kLabelColumnCount) {
        throw ParseError("dataset cache has " + std::to_string(label_count) +
                         " label columns, expected 4");
    }
    const auto rows = r.scalar<std::uint64_t>("row count");
    const auto features = r.scalar<std::uint64_t>("feature count");
    // Every string costs at least 4 bytes, every value 8.
    if (features > r.remaining() / 4 || rows > r.remaining() / (4 * kLabelColumnCount) ||
        (features != 0 && rows > r.remaining() / (8 * features))) {
        throw ParseError("truncated dataset cache: header declares " + std::to_string(rows) +
                         " x " + std::to_string(features) + " but only " +
                         std::to_string(r.remaining()) + " bytes follow");
    }

    FeatureDataset ds;
    ds.feature_names.reserve(features);
    for (std::uint64_t i = 0; i < features; ++i) {
        ds.feature_names.push_back(r.string("feature name"));
    }
    ds.labels.resize(rows);
    for (std::uint64_t i = 0; i < rows; ++i) {
        for (auto& label : ds.labels[i]) {
            label = r.string("label value");
        }
    }
    const std::size_t count = rows * features;
    const auto payload = r.raw(count * sizeof(double), "frequency values");
    ds.values.resize(count);
    std::memcpy(ds.values.data(), payload.data(), payload.size());
    if constexpr (std::endian::native == std::endian::big) {
        for (double& v : ds.values) {
            v = ByteWriter::byteswap(v);
        }
    }
    if (r.raw(kDatasetTrailer.size(), "trailer") != kDatasetTrailer) {
        throw ParseError("dataset cache trailer missing at byte offset " +
                         std::to_string(r.offset() - kDatasetTrailer.size()));
    }
    if (r.remaining() != 0) {
        throw ParseError("dataset cache has " + std::to_string(r.remaining()) +
                         " unexpected trailing bytes");
    }
    return ds;
}

void write_dataset(const FeatureDataset& dataset, const std::filesystem::path& path,
                   DatasetFormat format) {
    const std::string bytes =
        format == DatasetFormat::csv ? dataset_to_csv(dataset) : dataset_to_binary(dataset);
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write dataset to " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("error writing dataset to " + path.string());
    }
}

FeatureDataset read_dataset(const std::filesystem::path& path) {
    const std::string bytes = read_file_bytes(path);
    try {
        if (bytes.size() >= kDatasetMagic.size() &&
            std::string_view(bytes).substr(0, kDatasetMagic.size()) == kDatasetMagic) {
            return dataset_from_binary(bytes);
        }
        return dataset_from_csv(bytes);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

} // namespace opclass
