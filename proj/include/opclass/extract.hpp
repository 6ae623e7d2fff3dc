#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace opclass::extract {

namespace fs = std::filesystem;

/// Settings for a batch extraction run.
///
/// `extractor_command_template` is run through `/bin/sh -c` once per input
/// after substituting `{input}`, `{output}` and (optionally) `{workdir}` with
/// shell-quoted paths. The command runs inside its own empty work directory.
struct ManagerConfig {
    std::string extractor_command_template;
    unsigned threads = 4;
    bool skip_existing = false;
    unsigned timeout_seconds = 1200;
    fs::path corpus_root;
    fs::path output_root;

    /// Throws ConfigError on threads == 0, timeout == 0 or a template
    /// missing either required placeholder.
    void validate() const;
};

enum class JobState { pending, running, done, skipped, timed_out, failed };

inline constexpr std::array<JobState, 4> kTerminalStates = {JobState::done, JobState::skipped,
                                                            JobState::timed_out, JobState::failed};

std::string_view to_string(JobState s);
bool is_terminal(JobState s);

struct ExtractionJob {
    fs::path input_path;
    fs::path output_path;
    JobState state = JobState::pending;
    double duration_seconds = 0.0;
    std::string diagnostic;
};

struct ExtractionReport {
    std::vector<ExtractionJob> jobs;
    std::size_t done = 0;
    std::size_t skipped = 0;
    std::size_t timed_out = 0;
    std::size_t failed = 0;
    double wall_seconds = 0.0;

    std::size_t total() const { return jobs.size(); }
    /// At least one job failed or timed out.
    bool has_failures() const { return failed + timed_out > 0; }
    nlohmann::ordered_json to_json() const;
};

/// `output_root / relative(input, corpus_root)` with ".opcode" appended.
/// Throws ConfigError when `input` is not strictly inside `corpus_root`.
fs::path mirror_output_path(const fs::path& input, const fs::path& corpus_root,
                            const fs::path& output_root);

/// One pending job per regular file under corpus_root that does not end in
/// ".opcode" (files under output_root are ignored), sorted by path. With
/// skip_existing, jobs whose output already exists start as skipped.
std::vector<ExtractionJob> plan_jobs(const ManagerConfig& config);

/// Invoked from worker threads each time a job reaches a terminal state.
using ProgressCallback = std::function<void(const ExtractionJob&)>;

/// Run every pending job on `config.threads` workers and return the final
/// states. Throws ConfigError before starting anything when the template's
/// command cannot be resolved.
ExtractionReport run_jobs(std::vector<ExtractionJob> jobs, const ManagerConfig& config,
                          const ProgressCallback& progress = {});

/// Path of the extractor program named by the template's first word, or an
/// empty path when it is not an executable file (directly or on PATH).
fs::path resolve_command(std::string_view command_template);

/// Template with placeholders replaced by single-quoted shell words.
std::string render_command(std::string_view command_template, const fs::path& input,
                           const fs::path& output, const fs::path& workdir);

} // namespace opclass::extract
