#include "opclass/cnn/dataset.hpp"

#include "opclass/error.hpp"

#include <algorithm>

namespace opclass::cnn {

namespace {

std::size_t count_files(const fs::path& root, std::string_view extension) {
    std::size_t n = 0;
    std::error_code ec;
    for (fs::recursive_directory_iterator it(root, ec), end; !ec && it != end; it.increment(ec)) {
        if (it->is_regular_file() && it->path().filename().string().ends_with(extension)) {
            ++n;
        }
    }
    return n;
}

std::vector<fs::path> sorted_subdirectories(const fs::path& dir) {
    std::vector<fs::path> out;
    std::error_code ec;
    for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
        if (it->is_directory()) {
            out.push_back(it->path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

nlohmann::ordered_json DedupReport::to_json() const {
    nlohmann::ordered_json j;
    j["source"] = source.string();
    j["destination"] = destination.string();
    j["files_before"] = files_before;
    j["files_after"] = files_after;
    j["reduction_percent"] = reduction_percent;
    auto removed_paths = nlohmann::ordered_json::array();
    for (const auto& p : removed) {
        removed_paths.push_back(p.generic_string());
    }
    j["removed"] = std::move(removed_paths);
    return j;
}

std::map<std::string, std::set<std::string>> software_groups(const fs::path& root) {
    std::map<std::string, std::set<std::string>> out;
    for (const auto& group : sorted_subdirectories(root)) {
        for (const auto& software : sorted_subdirectories(group)) {
            out[software.filename().string()].insert(group.filename().string());
        }
    }
    return out;
}

DedupReport dedup_one_to_one(const fs::path& source, const fs::path& destination,
                             std::string_view extension) {
    std::error_code ec;
    if (!fs::is_directory(source, ec)) {
        throw IoError("dataset directory does not exist: " + source.string());
    }
    if (fs::exists(destination, ec) &&
        (!fs::is_directory(destination, ec) || !fs::is_empty(destination, ec))) {
        throw ConfigError("destination must be absent or empty: " + destination.string());
    }
    const auto src = fs::weakly_canonical(source);
    const auto dst = fs::weakly_canonical(destination);
    const auto rel = dst.lexically_relative(src);
    if (!rel.empty() && *rel.begin() != "..") {
        throw ConfigError("destination may not lie inside the source tree");
    }

    fs::create_directories(destination, ec);
    if (ec) {
        throw IoError("cannot create " + destination.string() + ": " + ec.message());
    }
    fs::copy(source, destination, fs::copy_options::recursive, ec);
    if (ec) {
        throw IoError("cannot copy " + source.string() + " to " + destination.string() + ": " +
                      ec.message());
    }

    DedupReport report;
    report.source = source;
    report.destination = destination;
    report.files_before = count_files(destination, extension);

    for (const auto& [software, groups] : software_groups(destination)) {
        if (groups.size() < 2) {
            continue;
        }
        // std::set iterates in ascending order; the first group keeps its copy.
        for (auto it = std::next(groups.begin()); it != groups.end(); ++it) {
            const fs::path victim = fs::path(*it) / software;
            fs::remove_all(destination / victim, ec);
            if (ec) {
                throw IoError("cannot remove " + (destination / victim).string() + ": " + ec.message());
            }
            report.removed.push_back(victim);
        }
    }

    report.files_after = count_files(destination, extension);
    report.reduction_percent =
        report.files_before == 0
            ? 0.0
            : 100.0 * static_cast<double>(report.files_before - report.files_after) /
                  static_cast<double>(report.files_before);
    return report;
}

} // namespace opclass::cnn
