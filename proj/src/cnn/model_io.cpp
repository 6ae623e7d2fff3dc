#include "opclass/cnn/model_io.hpp"

#include "opclass/corpus.hpp"
#include "opclass/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace opclass::cnn {

namespace {

constexpr char kMagic[8] = {'O', 'P', 'C', 'N', 'N', 'M', 'D', '\x01'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");

void put_u32(std::string& out, std::size_t v) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
        throw ConfigError("model dimension " + std::to_string(v) + " does not fit in 32 bits");
    }
    const auto x = static_cast<std::uint32_t>(v);
    out.append(reinterpret_cast<const char*>(&x), sizeof x);
}

void put_f32(std::string& out, double v) {
    const auto x = static_cast<float>(v);
    out.append(reinterpret_cast<const char*>(&x), sizeof x);
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::string_view take(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) {
            throw ParseError(std::string("model file truncated while reading ") + what + " at byte " +
                             std::to_string(pos_));
        }
        const auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    std::uint32_t u32(const char* what) {
        std::uint32_t x;
        std::memcpy(&x, take(sizeof x, what).data(), sizeof x);
        return x;
    }
    float f32(const char* what) {
        float x;
        std::memcpy(&x, take(sizeof x, what).data(), sizeof x);
        return x;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::string model_to_bytes(const CnnModel& model) {
    const CnnShape& s = model.shape;
    std::string out(kMagic, sizeof kMagic);
    put_u32(out, kVersion);
    put_u32(out, kParamCount);
    for (std::size_t v : {s.vocab_size, s.embedding_dim, s.max_len, s.filters, s.kernel, s.dense_units,
                          s.num_classes}) {
        put_u32(out, v);
    }
    put_f32(out, model.dropout_rate);
    for (const Tensor& t : model.params) {
        put_u32(out, t.name.size());
        out += t.name;
        put_u32(out, t.shape.size());
        for (std::size_t d : t.shape) {
            put_u32(out, d);
        }
        for (double v : t.data) {
            put_f32(out, v);
        }
    }
    return out;
}

CnnModel model_from_bytes(std::string_view bytes) {
    Reader in(bytes);
    if (in.take(sizeof kMagic, "magic") != std::string_view(kMagic, sizeof kMagic)) {
        throw ParseError("not a model file (bad magic)");
    }
    if (const auto version = in.u32("version"); version != kVersion) {
        throw ParseError("unsupported model file version " + std::to_string(version));
    }
    if (const auto count = in.u32("tensor count"); count != kParamCount) {
        throw ParseError("model file has " + std::to_string(count) + " tensors, expected " +
                         std::to_string(kParamCount));
    }
    std::array<std::size_t, 7> dims{};
    for (auto& d : dims) {
        d = in.u32("shape table");
    }
    // Shape fields mirror CnnShape; the config only carries what build_model reads.
    CnnConfig config;
    config.embedding_dim = dims[1];
    config.conv_filters = dims[3];
    config.conv_kernel = dims[4];
    config.dense_units = dims[5];
    config.dropout_rate = in.f32("dropout rate");
    CnnModel model;
    try {
        model = build_model(config, dims[0], dims[6], dims[2]);
    } catch (const ConfigError& e) {
        throw ParseError(std::string("model file shape table is invalid: ") + e.what());
    }

    for (Tensor& t : model.params) {
        const auto name_len = in.u32("tensor name length");
        const auto name = in.take(name_len, "tensor name");
        if (name != t.name) {
            throw ParseError("expected tensor '" + t.name + "', found '" + std::string(name) + "'");
        }
        const auto ndim = in.u32("tensor rank");
        if (ndim != t.shape.size()) {
            throw ParseError("tensor '" + t.name + "' has rank " + std::to_string(ndim));
        }
        for (std::size_t expected : t.shape) {
            if (in.u32("tensor dims") != expected) {
                throw ParseError("tensor '" + t.name + "' dimensions disagree with the shape table");
            }
        }
        for (double& v : t.data) {
            v = in.f32("tensor data");
        }
    }
    if (!in.done()) {
        throw ParseError("trailing bytes after the last tensor");
    }
    return model;
}

void save_model(const CnnModel& model, const std::filesystem::path& path) {
    const auto bytes = model_to_bytes(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("cannot write model file " + path.string());
    }
}

CnnModel load_model(const std::filesystem::path& path) {
    try {
        return model_from_bytes(read_file_bytes(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

} // namespace opclass::cnn
