#pragma once

#include "opclass/corpus.hpp"
#include "opclass/random.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/stat.h>
#include <unistd.h>
#include <vector>

namespace fixtures {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "opclass-test-XXXXXX").string();
        if (!mkdtemp(tmpl.data())) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::permissions(path_, fs::perms::owner_all, fs::perm_options::add, ec);
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const fs::path& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

inline std::string read_file(const fs::path& path) {
    return opclass::read_file_bytes(path);
}

/// Write an executable /bin/sh script.
inline fs::path write_script(const fs::path& path, const std::string& body) {
    write_file(path, "#!/bin/sh\n" + body);
    fs::permissions(path, fs::perms::owner_all | fs::perms::group_read | fs::perms::others_read);
    return path;
}

inline std::string join_lines(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        out += t + '\n';
    }
    return out;
}

/// Snapshot of every file under root: relative path -> contents.
inline std::vector<std::pair<std::string, std::string>> tree_snapshot(const fs::path& root) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        const auto rel = fs::relative(e.path(), root).generic_string();
        out.emplace_back(rel, e.is_regular_file() ? read_file(e.path()) : std::string("<dir>"));
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Opcode tree where software i uses its own alphabet of opcodes
/// ("S<i>_OP<j>") and every file is long enough for the default CNN.
/// `groups_of(i)` lists the groups software i appears under.
template <typename GroupsOf>
void write_software_corpus(const fs::path& root, std::size_t software_count, std::size_t samples,
                           std::size_t min_len, std::size_t max_len, GroupsOf groups_of,
                           std::uint64_t seed, const std::vector<std::string>& extensions = {"exe", "dll"}) {
    opclass::Rng rng(seed);
    for (std::size_t s = 0; s < software_count; ++s) {
        const std::string ext = extensions[s % extensions.size()];
        std::vector<std::string> docs;
        for (std::size_t k = 0; k < samples; ++k) {
            const std::size_t len = min_len + rng.below(max_len - min_len + 1);
            std::string text;
            for (std::size_t t = 0; t < len; ++t) {
                text += "s" + std::to_string(s) + "_op" + std::to_string(rng.below(5)) + "\n";
            }
            docs.push_back(text);
        }
        for (const std::string& g : groups_of(s)) {
            for (std::size_t k = 0; k < samples; ++k) {
                write_file(root / g / ("Software " + std::to_string(s)) /
                               ("sample" + std::to_string(k) + "." + ext + ".opcode"),
                           docs[k]);
            }
        }
    }
}

} // namespace fixtures
