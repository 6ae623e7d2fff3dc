#include "opclass/corpus.hpp"

#include "opclass/error.hpp"
#include "opclass/parallel.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>

namespace opclass {

namespace {

bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
}

std::string to_lower_ascii(std::string s) {
    for (char& c : s) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return s;
}

void scan_directory(const fs::path& dir, const fs::path& root, std::string_view extension,
                    ScanResult& out) {
    std::error_code ec;
    fs::directory_iterator it(dir, ec);
    if (ec) {
        out.warnings.push_back("cannot read directory " + dir.string() + ": " + ec.message());
        return;
    }
    for (const fs::directory_iterator end; it != end; it.increment(ec)) {
        if (ec) {
            out.warnings.push_back("error while listing " + dir.string() + ": " + ec.message());
            break;
        }
        const fs::directory_entry& entry = *it;
        std::error_code type_ec;
        if (entry.is_directory(type_ec)) {
            scan_directory(entry.path(), root, extension, out);
            continue;
        }
        const std::string name = entry.path().filename().string();
        if (!entry.is_regular_file(type_ec) || !name.ends_with(extension)) {
            continue;
        }
        SampleRecord record;
        record.absolute_path = fs::absolute(entry.path());
        record.relative_path = entry.path().lexically_relative(root);
        const SampleMetadata meta = extract_metadata(record.relative_path, extension);
        record.group = meta.group;
        record.software_name = meta.software_name;
        record.malware_type = meta.malware_type;
        record.file_name = name;
        out.records.push_back(std::move(record));
    }
}

} // namespace

SampleMetadata extract_metadata(const fs::path& relative_path, std::string_view suffix) {
    std::vector<std::string> parts;
    for (const auto& component : relative_path) {
        const std::string s = component.string();
        if (!s.empty() && s != "." && s != "/") {
            parts.push_back(s);
        }
    }

    SampleMetadata meta{std::string(kUnknownLabel), std::string(kUnknownLabel),
                        std::string(kUnknownLabel)};
    if (parts.empty()) {
        return meta;
    }

    const std::size_t dir_count = parts.size() - 1;
    if (dir_count >= 1) {
        meta.group = parts[0];
    }
    if (dir_count >= 2) {
        meta.software_name = parts[1];
    }

    std::string stem = parts.back();
    if (!suffix.empty() && stem.ends_with(suffix)) {
        stem.resize(stem.size() - suffix.size());
    }
    // A leading dot marks a hidden file, not an extension.
    const auto dot = stem.find_last_of('.');
    if (dot != std::string::npos && dot > 0 && dot + 1 < stem.size()) {
        meta.malware_type = to_lower_ascii(stem.substr(dot + 1));
    }
    return meta;
}

ScanResult scan_corpus(const fs::path& root, std::string_view extension) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw IoError("corpus root is not a readable directory: " + root.string());
    }
    fs::directory_iterator probe(root, ec);
    if (ec) {
        throw IoError("cannot read corpus root " + root.string() + ": " + ec.message());
    }

    ScanResult result;
    scan_directory(root, root, extension, result);
    std::sort(result.records.begin(), result.records.end(),
              [](const SampleRecord& a, const SampleRecord& b) {
                  return a.relative_path.generic_string() < b.relative_path.generic_string();
              });
    return result;
}

bool is_valid_utf8(std::string_view bytes) {
    std::size_t i = 0;
    const std::size_t n = bytes.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(bytes[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > n) {
            return false;
        }
        for (std::size_t k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(bytes[i + k]);
            if ((cc & 0xC0) != 0x80) {
                return false;
            }
            cp = (cp << 6) | (cc & 0x3F);
        }
        // Reject overlong forms, surrogates and out-of-range code points.
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
            (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
            return false;
        }
        i += len;
    }
    return true;
}

std::vector<std::string> parse_opcode_text(std::string_view bytes, std::string_view source_name) {
    if (!is_valid_utf8(bytes)) {
        throw ParseError("opcode file is not valid UTF-8: " + std::string(source_name));
    }

    std::vector<std::string> tokens;
    std::size_t pos = 0;
    while (pos <= bytes.size()) {
        std::size_t eol = bytes.find('\n', pos);
        if (eol == std::string_view::npos) {
            eol = bytes.size();
        }
        std::string_view line = bytes.substr(pos, eol - pos);
        pos = eol + 1;

        std::string token;
        bool pending_gap = false;
        for (char c : line) {
            if (is_ascii_space(c)) {
                pending_gap = !token.empty();
                continue;
            }
            if (pending_gap) {
                token.push_back('_');
                pending_gap = false;
            }
            token.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        }
        if (!token.empty()) {
            tokens.push_back(std::move(token));
        }
    }
    return tokens;
}

std::string render_opcode_text(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        out += t;
        out += '\n';
    }
    return out;
}

std::string read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError("error reading " + path.string());
    }
    return data;
}

OpcodeDocument load_document(const SampleRecord& record) {
    OpcodeDocument doc;
    doc.record = record;
    doc.tokens = parse_opcode_text(read_file_bytes(record.absolute_path),
                                   record.relative_path.generic_string());
    return doc;
}

std::vector<OpcodeDocument> load_documents(const std::vector<SampleRecord>& records,
                                           unsigned threads) {
    std::vector<OpcodeDocument> docs(records.size());
    parallel_for(records.size(), threads, [&](std::size_t i) { docs[i] = load_document(records[i]); });
    return docs;
}

} // namespace opclass
