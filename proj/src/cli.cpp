#include "opclass/cli.hpp"

#include "opclass/cnn/dataset.hpp"
#include "opclass/pipeline.hpp"
#include "opclass/report.hpp"

#include <algorithm>
#include <iostream>

#include <CLI11.hpp>

namespace opclass::cli {

namespace {

namespace fs = std::filesystem;

std::string env_for(std::string flag) {
    std::string out = "OPCLASS_";
    for (char c : flag) {
        out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
}

template <typename T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& value, const std::string& help) {
    return app->add_option("--" + name, value, help)->envname(env_for(name))->capture_default_str();
}

struct ExtractArgs {
    std::string extractor;
    fs::path directory;
    fs::path output;
    fs::path report;
    unsigned threads = 4;
    bool skip = false;
    unsigned timeout = 1200;
};

struct PreprocessArgs {
    fs::path opcodes;
    std::size_t n = 2;
    std::vector<double> percentiles;
    fs::path output = "results/ngram";
    bool sliding = false;
    unsigned threads = 4;
};

struct ClassifyArgs {
    fs::path dataset;
    fs::path output;
    std::optional<double> holdout;
    std::uint64_t seed = 0;
    std::size_t knn_k = 3;
    unsigned threads = 4;
};

struct CnnPreprocessArgs {
    fs::path dataset;
    fs::path output;
    fs::path report;
};

struct CnnTrainArgs {
    fs::path directory;
    fs::path output = "results/cnn";
    std::vector<std::string> targets = {"group", "name", "type"};
    unsigned threads = 4;
    cnn::CnnConfig config;
};

struct ReportArgs {
    fs::path results;
    fs::path output;
};

struct RunAllArgs {
    pipeline::RunAllConfig config;
};

void add_cnn_flags(CLI::App* app, cnn::CnnConfig& c) {
    flag(app, "percentile", c.length_percentile, "Sequence length percentile");
    flag(app, "k", c.embedding_dim, "Embedding dimension");
    flag(app, "epochs", c.epochs, "Training epochs");
    flag(app, "batch_size", c.batch_size, "Mini-batch size");
    flag(app, "validation_split", c.validation_split, "Held-out validation fraction");
    flag(app, "conv_filters", c.conv_filters, "Filters per convolution");
    flag(app, "conv_kernel", c.conv_kernel, "Convolution kernel width");
    flag(app, "dense_units", c.dense_units, "Hidden dense units");
    flag(app, "dropout", c.dropout_rate, "Dropout rate");
    flag(app, "learning_rate", c.learning_rate, "Adam learning rate");
}

fs::path sibling_with_suffix(const fs::path& p, const std::string& suffix) {
    fs::path clean = p;
    if (!clean.has_filename()) {
        clean = clean.parent_path();
    }
    return clean.parent_path() / (clean.filename().string() + suffix);
}

std::vector<classic::Target> parse_targets(const std::vector<std::string>& names) {
    std::vector<classic::Target> out;
    for (const auto& n : names) {
        const auto t = classic::parse_target(n);
        if (t == classic::Target::file_name) {
            throw ConfigError("CNN targets are group, name or type");
        }
        out.push_back(t);
    }
    return out;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Opcode n-gram and CNN malware classification toolkit", "opclass"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "opclass 0.1.0");

    ExtractArgs ex;
    auto* extract_cmd = app.add_subcommand("extract", "Run an external extractor over every executable");
    flag(extract_cmd, "extractor", ex.extractor,
         "Command template with {input} and {output} placeholders (optional {workdir})")
        ->required();
    flag(extract_cmd, "directory", ex.directory, "Corpus root")->required();
    flag(extract_cmd, "output", ex.output, "Opcode output root")->required();
    flag(extract_cmd, "report", ex.report, "Report JSON path (default <output>/report.json)");
    flag(extract_cmd, "threads", ex.threads, "Concurrent jobs");
    flag(extract_cmd, "skip", ex.skip, "Skip inputs whose output exists (true|false)");
    flag(extract_cmd, "timeout", ex.timeout, "Per-job timeout in seconds");

    PreprocessArgs pp;
    auto* pre_cmd = app.add_subcommand("preprocess", "Build n-gram feature datasets");
    flag(pre_cmd, "opcodes", pp.opcodes, "Opcode tree root")->required();
    pre_cmd->add_option("-n", pp.n, "Largest n (one dataset per n in 1..n)")
        ->envname("OPCLASS_N")
        ->capture_default_str();
    flag(pre_cmd, "percentiles", pp.percentiles, "Comma-separated pruning percentiles "
                                                  "(default 10 for 1-grams, 80 otherwise)")
        ->delimiter(',');
    flag(pre_cmd, "output", pp.output, "Output directory");
    pre_cmd->add_flag("--sliding", pp.sliding, "Overlapping n-grams instead of PAD-ed chunks")
        ->envname("OPCLASS_SLIDING");
    flag(pre_cmd, "threads", pp.threads, "Worker threads");

    ClassifyArgs cl;
    auto* cls_cmd = app.add_subcommand("classify", "Run SVM, KNN and decision tree in every mode");
    flag(cls_cmd, "dataset", cl.dataset, "Dataset file (.csv or .bin)")->required();
    flag(cls_cmd, "output", cl.output, "Output directory (default results/classic/<dataset stem>)");
    flag(cls_cmd, "holdout", cl.holdout, "Hold out this fraction for evaluation");
    flag(cls_cmd, "seed", cl.seed, "Seed for the split and the SVM");
    flag(cls_cmd, "knn_k", cl.knn_k, "Neighbours for KNN");
    flag(cls_cmd, "threads", cl.threads, "Combinations run in parallel");

    CnnPreprocessArgs cp;
    auto* cnnpre_cmd = app.add_subcommand("cnn-preprocess", "Copy the corpus keeping one group per software");
    flag(cnnpre_cmd, "dataset", cp.dataset, "Opcode tree root")->required();
    flag(cnnpre_cmd, "output", cp.output, "Destination (default <dataset>_one_to_one)");
    flag(cnnpre_cmd, "report", cp.report, "Report JSON path (default <output>_dedup.json)");

    CnnTrainArgs ct;
    auto* cnntr_cmd = app.add_subcommand("cnn-train", "Train the sequence CNN");
    flag(cnntr_cmd, "directory", ct.directory, "Opcode tree root")->required();
    add_cnn_flags(cnntr_cmd, ct.config);
    flag(cnntr_cmd, "seed", ct.config.seed, "Seed for initialisation, split and shuffling");
    flag(cnntr_cmd, "targets", ct.targets, "Comma-separated targets")->delimiter(',');
    flag(cnntr_cmd, "output", ct.output, "Output directory");
    flag(cnntr_cmd, "threads", ct.threads, "Threads for loading the corpus");

    ReportArgs rp;
    auto* rep_cmd = app.add_subcommand("report", "Render chart data and SVGs from a results file");
    flag(rep_cmd, "results", rp.results, "results.json")->required();
    flag(rep_cmd, "output", rp.output, "Output directory (default <results dir>/charts)");

    RunAllArgs ra;
    auto& rc = ra.config;
    auto* all_cmd = app.add_subcommand("run-all", "Run every stage in order");
    flag(all_cmd, "directory", rc.corpus, "Corpus root")->required();
    flag(all_cmd, "results", rc.results_dir, "Results directory");
    flag(all_cmd, "extractor", rc.extractor, "Extractor template; omit when the corpus is already opcodes");
    flag(all_cmd, "threads", rc.threads, "Worker threads");
    flag(all_cmd, "skip", rc.skip, "Skip existing extraction outputs (true|false)");
    flag(all_cmd, "timeout", rc.timeout_seconds, "Per-job timeout in seconds");
    all_cmd->add_option("-n", rc.max_n, "Largest n")->envname("OPCLASS_N")->capture_default_str();
    flag(all_cmd, "percentiles", rc.percentiles, "Comma-separated pruning percentiles")->delimiter(',');
    flag(all_cmd, "holdout", rc.holdout, "Hold out this fraction for the classic classifiers");
    flag(all_cmd, "seed", rc.seed, "Global seed");
    add_cnn_flags(all_cmd, rc.cnn);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << "opclass 0.1.0\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        for (auto* sub : app.get_subcommands()) {
            err << sub->help();
            return kExitUsage;
        }
        err << app.help();
        return kExitUsage;
    }

    auto* chosen = app.get_subcommands().front();
    const std::string stage = chosen->get_name();
    try {
        if (chosen == extract_cmd) {
            extract::ManagerConfig mc;
            mc.extractor_command_template = ex.extractor;
            mc.threads = ex.threads;
            mc.skip_existing = ex.skip;
            mc.timeout_seconds = ex.timeout;
            mc.corpus_root = ex.directory;
            mc.output_root = ex.output;
            const fs::path report_path = ex.report.empty() ? ex.output / "report.json" : ex.report;
            const auto report = pipeline::extract_stage(mc, report_path, &err);
            out << report.to_json().dump(2) << '\n';
            return report.has_failures() ? kExitStageFailure : kExitOk;
        }
        if (chosen == pre_cmd) {
            pipeline::PreprocessOptions po;
            po.opcodes = pp.opcodes;
            po.max_n = pp.n;
            po.percentiles = pp.percentiles;
            po.output_dir = pp.output;
            po.mode = pp.sliding ? NGramMode::sliding : NGramMode::chunked;
            po.threads = pp.threads;
            for (const auto& p : pipeline::preprocess_stage(po, &err)) {
                out << p.string() << '\n';
            }
            return kExitOk;
        }
        if (chosen == cls_cmd) {
            classic::SuiteOptions so;
            so.holdout = cl.holdout;
            so.seed = cl.seed;
            so.knn_k = cl.knn_k;
            so.svm.seed = cl.seed;
            so.threads = cl.threads;
            const fs::path dir = cl.output.empty() ? fs::path("results/classic") / cl.dataset.stem() : cl.output;
            const auto results = pipeline::classify_stage(cl.dataset, dir, so, &err);
            out << (dir / "results.json").string() << '\n';
            const bool any_failed = std::any_of(results.begin(), results.end(),
                                                [](const auto& r) { return !r.diagnostic.empty(); });
            return any_failed ? kExitStageFailure : kExitOk;
        }
        if (chosen == cnnpre_cmd) {
            const fs::path dst = cp.output.empty() ? sibling_with_suffix(cp.dataset, "_one_to_one") : cp.output;
            const fs::path rpt = cp.report.empty() ? sibling_with_suffix(dst, "_dedup.json") : cp.report;
            const auto report = pipeline::cnn_preprocess_stage(cp.dataset, dst, rpt);
            out << report.to_json().dump(2) << '\n';
            return kExitOk;
        }
        if (chosen == cnntr_cmd) {
            const auto outputs =
                pipeline::cnn_train_stage(ct.directory, ct.config, ct.output, parse_targets(ct.targets),
                                          ct.threads, &err);
            out << (ct.output / "results.json").string() << '\n';
            const bool any_failed = std::any_of(outputs.results.begin(), outputs.results.end(),
                                                [](const auto& r) { return !r.diagnostic.empty(); });
            return any_failed ? kExitStageFailure : kExitOk;
        }
        if (chosen == rep_cmd) {
            const fs::path dir = rp.output.empty() ? rp.results.parent_path() / "charts" : rp.output;
            for (const auto& p : report::render_results_file(rp.results, dir)) {
                out << p.string() << '\n';
            }
            return kExitOk;
        }
        if (chosen == all_cmd) {
            const auto run = pipeline::run_all(rc, &err);
            out << run.to_json().dump(2) << '\n';
            return run.ok() ? kExitOk : kExitStageFailure;
        }
    } catch (const std::exception& e) {
        err << stage << ": " << e.what() << '\n';
        return kExitStageFailure;
    }
    return kExitUsage;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

} // namespace opclass::cli
