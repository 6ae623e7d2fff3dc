#include "opclass/extract.hpp"

#include "opclass/corpus.hpp"
#include "opclass/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>

extern "C" {
#include <fcntl.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>
#ifdef __linux__
#include <sys/prctl.h>
#endif
}

namespace opclass::extract {

namespace {

using Clock = std::chrono::steady_clock;

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    out += '\'';
    return out;
}

bool is_executable_file(const fs::path& p) {
    std::error_code ec;
    return fs::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
}

bool is_inside(const fs::path& path, const fs::path& root) {
    const auto rel = path.lexically_normal().lexically_relative(root.lexically_normal());
    return !rel.empty() && *rel.begin() != "..";
}

void remove_quietly(const fs::path& p) {
    std::error_code ec;
    fs::remove_all(p, ec);
}

std::string tail_of_file(const fs::path& p, std::size_t limit) {
    std::string text;
    try {
        text = read_file_bytes(p);
    } catch (const IoError&) {
        return {};
    }
    if (text.size() > limit) {
        text = "..." + text.substr(text.size() - limit);
    }
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
        text.pop_back();
    }
    return text;
}

fs::path make_work_dir() {
    std::string pattern = (fs::temp_directory_path() / "opclass-job-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) {
        throw IoError("cannot create a work directory under " + fs::temp_directory_path().string());
    }
    return pattern;
}

/// Kill every process left in the job's group and reap those that were
/// reparented to us.
void kill_group(pid_t pgid) {
    ::killpg(pgid, SIGKILL);
    int status = 0;
    while (::waitpid(-pgid, &status, 0) > 0) {
    }
}

struct ProcessOutcome {
    bool timed_out = false;
    bool spawn_failed = false;
    int exit_code = -1;
    int signal = 0;
    std::string error;
};

ProcessOutcome run_process(const std::string& command, const fs::path& workdir,
                           const fs::path& log_path, unsigned timeout_seconds) {
    ProcessOutcome outcome;

    // Everything the child needs is prepared before fork.
    const int devnull = ::open("/dev/null", O_RDONLY | O_CLOEXEC);
    const int log_fd = ::open(log_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (devnull < 0 || log_fd < 0) {
        if (devnull >= 0) ::close(devnull);
        if (log_fd >= 0) ::close(log_fd);
        outcome.spawn_failed = true;
        outcome.error = "cannot open job log in " + workdir.string();
        return outcome;
    }
    const std::string dir = workdir.string();
    const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};

    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(devnull);
        ::close(log_fd);
        outcome.spawn_failed = true;
        outcome.error = "fork failed";
        return outcome;
    }
    if (pid == 0) {
        ::setpgid(0, 0);
        if (::chdir(dir.c_str()) != 0) {
            ::_exit(126);
        }
        ::dup2(devnull, STDIN_FILENO);
        ::dup2(log_fd, STDOUT_FILENO);
        ::dup2(log_fd, STDERR_FILENO);
        ::execv("/bin/sh", const_cast<char* const*>(argv));
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(devnull);
    ::close(log_fd);

    const auto deadline = Clock::now() + std::chrono::seconds(timeout_seconds);
    int status = 0;
    while (true) {
        const pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) {
            break;
        }
        if (r < 0 && errno != EINTR) {
            outcome.spawn_failed = true;
            outcome.error = "waitpid failed";
            kill_group(pid);
            return outcome;
        }
        if (Clock::now() >= deadline) {
            outcome.timed_out = true;
            ::killpg(pid, SIGTERM);
            const auto grace = Clock::now() + std::chrono::milliseconds(200);
            while (::waitpid(pid, &status, WNOHANG) == 0 && Clock::now() < grace) {
                std::this_thread::sleep_for(std::chrono::milliseconds(5));
            }
            ::killpg(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    kill_group(pid);

    if (WIFEXITED(status)) {
        outcome.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        outcome.signal = WTERMSIG(status);
    }
    return outcome;
}

void execute_job(ExtractionJob& job, const ManagerConfig& config) {
    const auto start = Clock::now();
    job.state = JobState::running;

    fs::path workdir;
    try {
        workdir = make_work_dir();
        std::error_code ec;
        fs::create_directories(job.output_path.parent_path(), ec);
        if (ec) {
            throw IoError("cannot create output directory " +
                          job.output_path.parent_path().string() + ": " + ec.message());
        }
        fs::remove(job.output_path, ec);

        const std::string command = render_command(config.extractor_command_template,
                                                   job.input_path, job.output_path, workdir);
        const fs::path log = workdir / "extractor.log";
        const ProcessOutcome outcome = run_process(command, workdir, log, config.timeout_seconds);

        if (outcome.spawn_failed) {
            job.state = JobState::failed;
            job.diagnostic = outcome.error;
        } else if (outcome.timed_out) {
            job.state = JobState::timed_out;
            job.diagnostic = "exceeded timeout of " + std::to_string(config.timeout_seconds) + " s";
        } else if (outcome.exit_code != 0) {
            job.state = JobState::failed;
            job.diagnostic = outcome.signal != 0
                                 ? "extractor killed by signal " + std::to_string(outcome.signal)
                                 : "extractor exited with status " + std::to_string(outcome.exit_code);
            const std::string tail = tail_of_file(log, 2000);
            if (!tail.empty()) {
                job.diagnostic += ": " + tail;
            }
        } else if (!fs::is_regular_file(job.output_path, ec) ||
                   fs::file_size(job.output_path, ec) == 0) {
            job.state = JobState::failed;
            job.diagnostic = "empty output";
        } else {
            try {
                parse_opcode_text(read_file_bytes(job.output_path), job.output_path.string());
                job.state = JobState::done;
            } catch (const Error& e) {
                job.state = JobState::failed;
                job.diagnostic = std::string("unparseable output: ") + e.what();
            }
        }
    } catch (const std::exception& e) {
        job.state = JobState::failed;
        job.diagnostic = e.what();
    }

    if (job.state != JobState::done) {
        remove_quietly(job.output_path);
    }
    if (!workdir.empty()) {
        remove_quietly(workdir);
    }
    job.duration_seconds = std::chrono::duration<double>(Clock::now() - start).count();
}

} // namespace

std::string_view to_string(JobState s) {
    switch (s) {
    case JobState::pending: return "pending";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::skipped: return "skipped";
    case JobState::timed_out: return "timed_out";
    case JobState::failed: return "failed";
    }
    return "?";
}

bool is_terminal(JobState s) {
    return std::find(kTerminalStates.begin(), kTerminalStates.end(), s) != kTerminalStates.end();
}

void ManagerConfig::validate() const {
    if (threads == 0) {
        throw ConfigError("threads must be at least 1");
    }
    if (timeout_seconds == 0) {
        throw ConfigError("timeout must be at least 1 second");
    }
    if (extractor_command_template.find("{input}") == std::string::npos ||
        extractor_command_template.find("{output}") == std::string::npos) {
        throw ConfigError("extractor template must contain both {input} and {output}");
    }
}

nlohmann::ordered_json ExtractionReport::to_json() const {
    nlohmann::ordered_json j;
    j["total"] = total();
    j["counts"] = {{"done", done}, {"skipped", skipped}, {"timed_out", timed_out}, {"failed", failed}};
    j["wall_seconds"] = wall_seconds;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& job : jobs) {
        nlohmann::ordered_json o;
        o["input"] = job.input_path.string();
        o["output"] = job.output_path.string();
        o["state"] = to_string(job.state);
        o["duration_seconds"] = job.duration_seconds;
        o["diagnostic"] = job.diagnostic;
        arr.push_back(std::move(o));
    }
    j["jobs"] = std::move(arr);
    return j;
}

fs::path mirror_output_path(const fs::path& input, const fs::path& corpus_root,
                            const fs::path& output_root) {
    const fs::path rel = input.lexically_normal().lexically_relative(corpus_root.lexically_normal());
    if (rel.empty() || rel == "." || *rel.begin() == "..") {
        throw ConfigError("input " + input.string() + " is not inside corpus root " +
                          corpus_root.string());
    }
    fs::path out = output_root / rel;
    out += std::string(kOpcodeExtension);
    return out;
}

std::vector<ExtractionJob> plan_jobs(const ManagerConfig& config) {
    std::error_code ec;
    if (!fs::is_directory(config.corpus_root, ec)) {
        throw IoError("corpus root is not a directory: " + config.corpus_root.string());
    }
    const fs::path root = fs::absolute(config.corpus_root);
    const fs::path out_root = fs::absolute(config.output_root);
    const bool output_nested = is_inside(out_root, root);

    std::vector<fs::path> inputs;
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
    if (ec) {
        throw IoError("cannot read corpus root " + root.string() + ": " + ec.message());
    }
    for (const fs::recursive_directory_iterator end; it != end; it.increment(ec)) {
        if (ec) {
            break;
        }
        const auto& entry = *it;
        if (output_nested && entry.is_directory() && entry.path() == out_root) {
            it.disable_recursion_pending();
            continue;
        }
        if (!entry.is_regular_file() ||
            entry.path().filename().string().ends_with(kOpcodeExtension)) {
            continue;
        }
        inputs.push_back(entry.path());
    }
    std::sort(inputs.begin(), inputs.end());

    std::vector<ExtractionJob> jobs;
    jobs.reserve(inputs.size());
    for (const auto& input : inputs) {
        ExtractionJob job;
        job.input_path = input;
        job.output_path = mirror_output_path(input, root, out_root);
        if (config.skip_existing && fs::exists(job.output_path, ec)) {
            job.state = JobState::skipped;
            job.diagnostic = "output already exists";
        }
        jobs.push_back(std::move(job));
    }
    return jobs;
}

fs::path resolve_command(std::string_view command_template) {
    const auto begin = command_template.find_first_not_of(" \t");
    if (begin == std::string_view::npos) {
        return {};
    }
    const auto end = command_template.find_first_of(" \t", begin);
    std::string word(command_template.substr(begin, end == std::string_view::npos
                                                        ? std::string_view::npos
                                                        : end - begin));
    if (word.size() >= 2 && (word.front() == '\'' || word.front() == '"') &&
        word.back() == word.front()) {
        word = word.substr(1, word.size() - 2);
    }
    if (word.empty() || word.find('{') != std::string::npos) {
        return {};
    }
    if (word.find('/') != std::string::npos) {
        return is_executable_file(word) ? fs::path(word) : fs::path{};
    }
    const char* path_env = std::getenv("PATH");
    std::string_view path = path_env ? path_env : "/usr/bin:/bin";
    while (!path.empty()) {
        const auto colon = path.find(':');
        const std::string_view dir = path.substr(0, colon);
        const fs::path candidate = fs::path(dir.empty() ? "." : std::string(dir)) / word;
        if (is_executable_file(candidate)) {
            return candidate;
        }
        if (colon == std::string_view::npos) {
            break;
        }
        path.remove_prefix(colon + 1);
    }
    return {};
}

std::string render_command(std::string_view command_template, const fs::path& input,
                           const fs::path& output, const fs::path& workdir) {
    const std::pair<std::string_view, std::string> substitutions[] = {
        {"{input}", shell_quote(input.string())},
        {"{output}", shell_quote(output.string())},
        {"{workdir}", shell_quote(workdir.string())},
    };
    std::string out;
    std::size_t i = 0;
    while (i < command_template.size()) {
        bool replaced = false;
        for (const auto& [key, value] : substitutions) {
            if (command_template.substr(i, key.size()) == key) {
                out += value;
                i += key.size();
                replaced = true;
                break;
            }
        }
        if (!replaced) {
            out += command_template[i++];
        }
    }
    return out;
}

ExtractionReport run_jobs(std::vector<ExtractionJob> jobs, const ManagerConfig& config,
                          const ProgressCallback& progress) {
    config.validate();
    if (resolve_command(config.extractor_command_template).empty()) {
        throw ConfigError("extractor command cannot be resolved: " +
                          config.extractor_command_template);
    }
#ifdef __linux__
    // Orphaned descendants of a killed extractor are re-parented here so
    // kill_group can reap them.
    ::prctl(PR_SET_CHILD_SUBREAPER, 1);
#endif

    const auto start = Clock::now();
    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) {
                return;
            }
            ExtractionJob& job = jobs[i];
            if (job.state == JobState::pending) {
                execute_job(job, config);
            }
            if (progress) {
                std::lock_guard lock(progress_mutex);
                progress(job);
            }
        }
    };
    const unsigned workers =
        static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(config.threads, jobs.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }

    ExtractionReport report;
    report.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    for (const auto& job : jobs) {
        switch (job.state) {
        case JobState::done: ++report.done; break;
        case JobState::skipped: ++report.skipped; break;
        case JobState::timed_out: ++report.timed_out; break;
        case JobState::failed: ++report.failed; break;
        default: break;
        }
    }
    report.jobs = std::move(jobs);
    return report;
}

} // namespace opclass::extract
