#pragma once

#include "opclass/classic/suite.hpp"
#include "opclass/cnn/dataset.hpp"
#include "opclass/cnn/model.hpp"
#include "opclass/error.hpp"
#include "opclass/extract.hpp"
#include "opclass/ngram.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace opclass::pipeline {

namespace fs = std::filesystem;

/// Raised by run_all when a stage fails; carries the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message)
        : Error(stage + ": " + message), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

// ---- individual stages (each is also a CLI subcommand) ----

/// Plan and run extraction, then write the report JSON to `report_path`.
extract::ExtractionReport extract_stage(const extract::ManagerConfig& config,
                                        const fs::path& report_path,
                                        std::ostream* log = nullptr);

struct PreprocessOptions {
    fs::path opcodes;
    std::size_t max_n = 2;
    /// Applied to every n. Empty: 10 for 1-grams, 80 otherwise.
    std::vector<double> percentiles;
    fs::path output_dir;
    NGramMode mode = NGramMode::chunked;
    unsigned threads = 4;
};

double default_percentile(std::size_t n);

/// "<n>gram_p<percentile>", e.g. "2gram_p80" or "1gram_p12.5".
std::string dataset_stem(std::size_t n, double percentile);

/// Writes `<stem>.csv` and `<stem>.bin` per (n, percentile); returns the CSV paths.
std::vector<fs::path> preprocess_stage(const PreprocessOptions& options, std::ostream* log = nullptr);

/// Run the 21-combination suite over one dataset file and write
/// `results.json` plus chart files under `output_dir/charts`.
std::vector<classic::ClassifierResult> classify_stage(const fs::path& dataset,
                                                      const fs::path& output_dir,
                                                      const classic::SuiteOptions& options,
                                                      std::ostream* log = nullptr);

/// One-to-one copy of `dataset_dir` at `destination`, report JSON beside it.
cnn::DedupReport cnn_preprocess_stage(const fs::path& dataset_dir, const fs::path& destination,
                                      const fs::path& report_path);

struct CnnTrainOutputs {
    /// Argmax metrics over every row, one per target.
    std::vector<classic::ClassifierResult> results;
    /// Same metrics restricted to the held-out validation rows.
    std::vector<classic::ClassifierResult> validation_results;
};

/// Train one model per target on the opcode tree at `directory`. Writes
/// history_<target>.csv, model_<target>.bin, model_<target>.json (vocabulary
/// and class names), results.json, validation_results.json and charts.
/// A target with fewer than two classes yields a result with a diagnostic.
CnnTrainOutputs cnn_train_stage(const fs::path& directory, const cnn::CnnConfig& config,
                                const fs::path& output_dir,
                                const std::vector<classic::Target>& targets,
                                unsigned threads = 4, std::ostream* log = nullptr);

// ---- whole pipeline ----

struct RunAllConfig {
    fs::path corpus;
    fs::path results_dir = "results";
    /// Extractor command template; when empty the corpus is already an opcode tree.
    std::string extractor;
    unsigned threads = 4;
    bool skip = false;
    unsigned timeout_seconds = 1200;
    std::size_t max_n = 2;
    std::vector<double> percentiles;
    std::optional<double> holdout;
    std::uint64_t seed = 0;
    cnn::CnnConfig cnn{};
};

struct StageRecord {
    std::string name;
    std::string status; ///< "ok", "skipped" or "failed"
    double seconds = 0.0;
    std::vector<fs::path> outputs;
    std::string message;
};

struct PipelineRun {
    std::vector<StageRecord> stages;
    std::uint64_t seed = 0;
    fs::path results_dir;

    bool ok() const;
    nlohmann::ordered_json to_json() const;
};

/// extract -> preprocess -> classify -> cnn-preprocess -> cnn-train, with
/// artifacts under results_dir/{extract,ngram,classic,cnn}. A failing stage
/// is recorded and stops the run. Throws ConfigError before any stage when
/// the corpus is missing. The run summary is written to
/// results_dir/pipeline.json.
PipelineRun run_all(const RunAllConfig& config, std::ostream* log = nullptr);

} // namespace opclass::pipeline
