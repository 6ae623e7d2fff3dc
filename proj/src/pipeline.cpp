#include "opclass/pipeline.hpp"

#include "opclass/cnn/model_io.hpp"
#include "opclass/cnn/train.hpp"
#include "opclass/corpus.hpp"
#include "opclass/dataset_io.hpp"
#include "opclass/report.hpp"

#include <chrono>
#include <fstream>
#include <ostream>

namespace opclass::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        ensure_dir(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
}

std::vector<OpcodeDocument> load_corpus(const fs::path& root, unsigned threads, std::ostream* log) {
    auto scan = scan_corpus(root);
    if (log) {
        for (const auto& w : scan.warnings) {
            *log << "warning: " << w << '\n';
        }
    }
    if (scan.records.empty()) {
        throw ConfigError("no " + std::string(kOpcodeExtension) + " files under " + root.string());
    }
    return load_documents(scan.records, threads);
}

} // namespace

extract::ExtractionReport extract_stage(const extract::ManagerConfig& config,
                                        const fs::path& report_path, std::ostream* log) {
    auto jobs = extract::plan_jobs(config);
    extract::ProgressCallback progress;
    if (log) {
        progress = [log](const extract::ExtractionJob& job) {
            // Called from workers; a single formatted write keeps lines intact.
            std::string line = std::string(extract::to_string(job.state)) + " " + job.input_path.string() + "\n";
            *log << line << std::flush;
        };
    }
    auto report = extract::run_jobs(std::move(jobs), config, progress);
    write_text(report_path, report.to_json().dump(2) + "\n");
    return report;
}

double default_percentile(std::size_t n) {
    return n == 1 ? 10.0 : 80.0;
}

std::string dataset_stem(std::size_t n, double percentile) {
    return std::to_string(n) + "gram_p" + format_value(percentile);
}

std::vector<fs::path> preprocess_stage(const PreprocessOptions& options, std::ostream* log) {
    if (options.max_n == 0) {
        throw ConfigError("-n must be at least 1");
    }
    for (double p : options.percentiles) {
        if (!(p >= 0.0 && p <= 100.0)) {
            throw ConfigError("percentile " + format_value(p) + " is outside [0, 100]");
        }
    }
    const auto docs = load_corpus(options.opcodes, options.threads, log);
    ensure_dir(options.output_dir);

    std::vector<fs::path> written;
    for (std::size_t n = 1; n <= options.max_n; ++n) {
        const auto full = build_feature_dataset(docs, n, options.mode, options.threads);
        std::vector<double> percentiles = options.percentiles;
        if (percentiles.empty()) {
            percentiles.push_back(default_percentile(n));
        }
        for (double p : percentiles) {
            const std::string stem = dataset_stem(n, p);
            if (full.features() == 0) {
                throw ConfigError("the " + std::to_string(n) + "-gram vocabulary is empty");
            }
            const auto pruned = variance_prune(full, p);
            const fs::path csv = options.output_dir / (stem + ".csv");
            write_dataset(pruned.dataset, csv, DatasetFormat::csv);
            write_dataset(pruned.dataset, options.output_dir / (stem + ".bin"), DatasetFormat::binary);
            if (log) {
                *log << stem << ": " << pruned.dataset.rows() << " rows, " << pruned.dataset.features()
                     << " of " << full.features() << " features kept\n";
            }
            written.push_back(csv);
        }
    }
    return written;
}

std::vector<classic::ClassifierResult> classify_stage(const fs::path& dataset,
                                                      const fs::path& output_dir,
                                                      const classic::SuiteOptions& options,
                                                      std::ostream* log) {
    const auto ds = read_dataset(dataset);
    const auto results = classic::run_suite(ds, options);
    ensure_dir(output_dir);
    classic::serialize_results(results, output_dir / "results.json");
    report::render_charts(results, output_dir / "charts");
    if (log) {
        for (const auto& r : results) {
            *log << r.classifier << ' ' << r.mode << ' ' << r.target << ": ";
            if (r.diagnostic.empty()) {
                *log << "accuracy " << r.accuracy << '\n';
            } else {
                *log << "error: " << r.diagnostic << '\n';
            }
        }
    }
    return results;
}

cnn::DedupReport cnn_preprocess_stage(const fs::path& dataset_dir, const fs::path& destination,
                                      const fs::path& report_path) {
    auto report = cnn::dedup_one_to_one(dataset_dir, destination);
    write_text(report_path, report.to_json().dump(2) + "\n");
    return report;
}

CnnTrainOutputs cnn_train_stage(const fs::path& directory, const cnn::CnnConfig& config,
                                const fs::path& output_dir,
                                const std::vector<classic::Target>& targets, unsigned threads,
                                std::ostream* log) {
    config.validate();
    const auto docs = load_corpus(directory, threads, log);
    ensure_dir(output_dir);

    CnnTrainOutputs out;
    for (const auto target : targets) {
        const std::string name(classic::to_string(target));
        auto dataset = cnn::build_sequence_dataset(docs, target, config.length_percentile);
        if (dataset.num_classes() < 2) {
            classic::ClassifierResult failed;
            failed.classifier = "cnn";
            failed.mode = "single";
            failed.target = name;
            failed.class_names = dataset.class_names;
            failed.confusion_matrix.assign(dataset.num_classes(),
                                           std::vector<std::int64_t>(dataset.num_classes(), 0));
            failed.diagnostic = "target has fewer than two classes";
            out.results.push_back(failed);
            out.validation_results.push_back(failed);
            continue;
        }

        const auto start = Clock::now();
        auto model = cnn::build_model(config, dataset.vocab_size, dataset.num_classes(), dataset.max_len);
        const auto history = cnn::train(model, dataset, config);
        const double elapsed = seconds_since(start);
        if (log) {
            for (const auto& w : history.warnings) {
                *log << "warning: " << name << ": " << w << '\n';
            }
        }

        auto full = cnn::evaluate_cnn(model, dataset);
        full.training_seconds = elapsed;
        out.results.push_back(full);
        if (!history.validation_indices.empty()) {
            auto val = cnn::evaluate_cnn(model, dataset, history.validation_indices);
            val.training_seconds = elapsed;
            out.validation_results.push_back(val);
        } else {
            classic::ClassifierResult empty = full;
            empty.accuracy = empty.macro_recall = empty.macro_precision = empty.f_measure = 0.0;
            for (auto& row : empty.confusion_matrix) {
                std::fill(row.begin(), row.end(), 0);
            }
            empty.diagnostic = "no validation rows";
            out.validation_results.push_back(empty);
        }

        write_text(output_dir / ("history_" + name + ".csv"), cnn::history_to_csv(history));
        cnn::save_model(model, output_dir / ("model_" + name + ".bin"));
        nlohmann::ordered_json meta;
        meta["target"] = name;
        meta["max_len"] = dataset.max_len;
        meta["class_names"] = dataset.class_names;
        meta["vocabulary"] = dataset.vocab; // opcode -> index, 0 is padding
        write_text(output_dir / ("model_" + name + ".json"), meta.dump(2) + "\n");
        if (log) {
            *log << "cnn " << name << ": accuracy " << full.accuracy << " (" << dataset.rows() << " rows, max_len "
                 << dataset.max_len << ")\n";
        }
    }
    classic::serialize_results(out.results, output_dir / "results.json");
    classic::serialize_results(out.validation_results, output_dir / "validation_results.json");
    report::render_charts(out.results, output_dir / "charts");
    return out;
}

bool PipelineRun::ok() const {
    return std::none_of(stages.begin(), stages.end(), [](const StageRecord& s) { return s.status == "failed"; });
}

nlohmann::ordered_json PipelineRun::to_json() const {
    nlohmann::ordered_json j;
    j["results_dir"] = results_dir.string();
    j["seed"] = seed;
    j["ok"] = ok();
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : stages) {
        nlohmann::ordered_json e;
        e["name"] = s.name;
        e["status"] = s.status;
        e["seconds"] = classic::round6(s.seconds);
        auto outs = nlohmann::ordered_json::array();
        for (const auto& p : s.outputs) {
            outs.push_back(p.string());
        }
        e["outputs"] = std::move(outs);
        e["message"] = s.message;
        arr.push_back(std::move(e));
    }
    j["stages"] = std::move(arr);
    return j;
}

PipelineRun run_all(const RunAllConfig& config, std::ostream* log) {
    std::error_code ec;
    if (!fs::is_directory(config.corpus, ec)) {
        throw ConfigError("corpus directory does not exist: " + config.corpus.string());
    }
    const fs::path results = config.results_dir;
    const fs::path extract_dir = results / "extract";
    const fs::path ngram_dir = results / "ngram";
    const fs::path classic_dir = results / "classic";
    const fs::path cnn_dir = results / "cnn";

    PipelineRun run;
    run.seed = config.seed;
    run.results_dir = results;

    auto stage = [&](const std::string& name, auto&& body) {
        StageRecord rec;
        rec.name = name;
        if (log) {
            *log << "== " << name << '\n';
        }
        const auto start = Clock::now();
        try {
            body(rec);
            if (rec.status.empty()) {
                rec.status = "ok";
            }
        } catch (const std::exception& e) {
            rec.status = "failed";
            rec.message = e.what();
            if (log) {
                *log << name << " failed: " << e.what() << '\n';
            }
        }
        rec.seconds = seconds_since(start);
        run.stages.push_back(rec);
        return rec.status != "failed";
    };

    fs::path opcodes = config.corpus;
    std::vector<fs::path> datasets;
    fs::path one_to_one = cnn_dir / "one_to_one";

    bool ok = stage("extract", [&](StageRecord& rec) {
        if (config.extractor.empty()) {
            rec.status = "skipped";
            rec.message = "no extractor configured; corpus used as an opcode tree";
            return;
        }
        extract::ManagerConfig mc;
        mc.extractor_command_template = config.extractor;
        mc.threads = config.threads;
        mc.skip_existing = config.skip;
        mc.timeout_seconds = config.timeout_seconds;
        mc.corpus_root = config.corpus;
        mc.output_root = extract_dir / "opcodes";
        const auto report = extract_stage(mc, extract_dir / "report.json", log);
        rec.outputs = {extract_dir / "report.json", mc.output_root};
        rec.message = std::to_string(report.done) + " done, " + std::to_string(report.skipped) + " skipped, " +
                      std::to_string(report.timed_out) + " timed out, " + std::to_string(report.failed) +
                      " failed";
        if (report.total() > 0 && report.skipped == report.total()) {
            rec.status = "skipped";
        }
        if (report.done + report.skipped == 0) {
            throw Error("extraction produced no opcode files (" + rec.message + ")");
        }
        opcodes = mc.output_root;
    });

    ok = ok && stage("preprocess", [&](StageRecord& rec) {
        PreprocessOptions po;
        po.opcodes = opcodes;
        po.max_n = config.max_n;
        po.percentiles = config.percentiles;
        po.output_dir = ngram_dir;
        po.threads = config.threads;
        datasets = preprocess_stage(po, log);
        rec.outputs = datasets;
    });

    ok = ok && stage("classify", [&](StageRecord& rec) {
        classic::SuiteOptions so;
        so.holdout = config.holdout;
        so.seed = config.seed;
        so.threads = config.threads;
        std::size_t failed = 0;
        for (const auto& ds : datasets) {
            const fs::path dir = classic_dir / ds.stem();
            for (const auto& r : classify_stage(ds, dir, so, log)) {
                failed += r.diagnostic.empty() ? 0 : 1;
            }
            rec.outputs.push_back(dir / "results.json");
        }
        if (failed > 0) {
            rec.message = std::to_string(failed) + " combinations reported a diagnostic";
        }
    });

    ok = ok && stage("cnn-preprocess", [&](StageRecord& rec) {
        // The one-to-one copy is our own artifact; replace it on reruns.
        fs::remove_all(one_to_one, ec);
        const auto report = cnn_preprocess_stage(opcodes, one_to_one, cnn_dir / "dedup.json");
        rec.outputs = {one_to_one, cnn_dir / "dedup.json"};
        rec.message = std::to_string(report.removed.size()) + " duplicate software directories removed";
    });

    ok = ok && stage("cnn-train", [&](StageRecord& rec) {
        cnn::CnnConfig cc = config.cnn;
        cc.seed = config.seed;
        cnn_train_stage(one_to_one, cc, cnn_dir,
                        {classic::Target::group, classic::Target::name, classic::Target::type},
                        config.threads, log);
        rec.outputs = {cnn_dir / "results.json", cnn_dir / "validation_results.json"};
    });

    write_text(results / "pipeline.json", run.to_json().dump(2) + "\n");
    return run;
}

} // namespace opclass::pipeline
