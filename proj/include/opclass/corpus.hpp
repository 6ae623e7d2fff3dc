#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace opclass {

namespace fs = std::filesystem;

/// Label used wherever a piece of path-derived metadata is absent.
inline constexpr std::string_view kUnknownLabel = "unknown";

/// Default suffix of extracted opcode listings.
inline constexpr std::string_view kOpcodeExtension = ".opcode";

struct SampleMetadata {
    std::string group;
    std::string software_name;
    std::string malware_type;

    bool operator==(const SampleMetadata&) const = default;
};

/// One opcode file discovered under a corpus root laid out as
/// `<group>/<software>/<file>` (the software level is optional).
struct SampleRecord {
    fs::path absolute_path;
    fs::path relative_path;
    std::string group;
    std::string software_name;
    std::string malware_type;
    std::string file_name;
};

struct OpcodeDocument {
    SampleRecord record;
    std::vector<std::string> tokens;
};

struct ScanResult {
    std::vector<SampleRecord> records;
    /// Subdirectories that could not be read; the scan continues past them.
    std::vector<std::string> warnings;
};

/// Derive (group, software, type) from a path relative to the corpus root.
///
/// The first directory is the group, the second (when present) the software
/// name. The type is the lowercased extension of the original executable name,
/// i.e. of the file name with `suffix` removed: `x.exe.opcode` gives "exe".
/// Every missing piece is reported as "unknown". Never throws.
SampleMetadata extract_metadata(const fs::path& relative_path,
                                std::string_view suffix = kOpcodeExtension);

/// Recursively find files ending in `extension`, sorted by relative path.
/// Throws IoError when `root` itself cannot be read.
ScanResult scan_corpus(const fs::path& root, std::string_view extension = kOpcodeExtension);

/// Parse an opcode listing: one token per nonempty trimmed line, uppercased.
/// Interior whitespace runs inside a line are folded into a single '_' so a
/// token never contains whitespace. LF and CRLF line endings are accepted.
/// Throws ParseError naming `source_name` if the bytes are not valid UTF-8.
std::vector<std::string> parse_opcode_text(std::string_view bytes,
                                           std::string_view source_name = "<memory>");

/// Inverse of parse_opcode_text for well-formed tokens: one per line.
std::string render_opcode_text(const std::vector<std::string>& tokens);

/// Read and parse the file behind `record`.
OpcodeDocument load_document(const SampleRecord& record);

/// Read and parse every record. Order of the result matches `records`.
std::vector<OpcodeDocument> load_documents(const std::vector<SampleRecord>& records,
                                           unsigned threads = 1);

/// Whole-file read; throws IoError on failure.
std::string read_file_bytes(const fs::path& path);

bool is_valid_utf8(std::string_view bytes);

} // namespace opclass
