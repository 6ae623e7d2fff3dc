#include "opclass/classic/evaluation.hpp"
#include "opclass/cli.hpp"
#include "opclass/cnn/dataset.hpp"
#include "opclass/corpus.hpp"
#include "opclass/error.hpp"
#include "opclass/ngram.hpp"
#include "opclass/stats.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace opclass;

namespace {

NGramMode mode_of(bool sliding) {
    return sliding ? NGramMode::sliding : NGramMode::chunked;
}

py::dict metrics_dict(const classic::Metrics& m) {
    py::dict d;
    d["accuracy"] = m.accuracy;
    d["macro_recall"] = m.macro_recall;
    d["macro_precision"] = m.macro_precision;
    d["f_measure"] = m.f_measure;
    d["confusion_matrix"] = m.confusion;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Opcode n-gram malware classification toolkit";

    static py::exception<Error> error(m, "Error");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const IoError& e) {
            PyErr_SetString(PyExc_OSError, e.what());
        } catch (const ConfigError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const ParseError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    m.def("parse_opcode_text", [](const std::string& text) { return parse_opcode_text(text); }, py::arg("text"),
          "Tokens of an opcode listing, one per nonempty line, uppercased.");
    m.def("pad_tokens", &pad_tokens, py::arg("tokens"), py::arg("n"));
    m.def(
        "generate_ngrams",
        [](const std::vector<std::string>& tokens, std::size_t n, bool sliding) {
            return document_ngrams(tokens, n, mode_of(sliding));
        },
        py::arg("tokens"), py::arg("n"), py::arg("sliding") = false,
        "Grams of a token list; chunked mode pads with PAD first.");
    m.def(
        "featurize",
        [](const std::vector<std::string>& tokens, const std::vector<std::string>& vocabulary, std::size_t n,
           bool sliding) { return featurize(tokens, NGramVocabulary(n, vocabulary), mode_of(sliding)); },
        py::arg("tokens"), py::arg("vocabulary"), py::arg("n"), py::arg("sliding") = false,
        "Relative frequency of each vocabulary gram; returns values in sorted-vocabulary order.");
    m.def(
        "percentile",
        [](const std::vector<double>& values, double p) { return percentile_linear(values, p); },
        py::arg("values"), py::arg("p"));
    m.def(
        "evaluate",
        [](const std::vector<int>& predicted, const std::vector<int>& truth, std::size_t num_classes) {
            return metrics_dict(classic::evaluate(predicted, truth, num_classes));
        },
        py::arg("predicted"), py::arg("truth"), py::arg("num_classes"));
    m.def(
        "dedup_one_to_one",
        [](const std::filesystem::path& source, const std::filesystem::path& destination) {
            const auto report = cnn::dedup_one_to_one(source, destination);
            return report.to_json().dump();
        },
        py::arg("source"), py::arg("destination"), "Copy and dedup a corpus; returns the report as JSON text.");
    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a CLI subcommand in-process; returns (exit_code, stdout, stderr).");
}
