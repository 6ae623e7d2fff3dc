#include "opclass/dataset_io.hpp"
#include "opclass/error.hpp"
#include "opclass/ngram.hpp"

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <set>
#include <unordered_set>

using namespace opclass;
using Tokens = std::vector<std::string>;

namespace {

Tokens random_tokens(Rng& rng, std::size_t max_len, std::size_t alphabet) {
    Tokens t(rng.below(max_len + 1));
    for (auto& s : t) s = "T" + std::to_string(rng.below(alphabet));
    return t;
}

OpcodeDocument doc_of(Tokens tokens, std::string group = "G", std::string name = "S", std::string type = "exe",
                      std::string file = "f") {
    OpcodeDocument d;
    d.record.group = std::move(group);
    d.record.software_name = std::move(name);
    d.record.malware_type = std::move(type);
    d.record.file_name = std::move(file);
    d.tokens = std::move(tokens);
    return d;
}

FeatureDataset random_dataset(Rng& rng, std::size_t rows, std::size_t cols) {
    FeatureDataset ds;
    for (std::size_t c = 0; c < cols; ++c) ds.feature_names.push_back("F" + std::to_string(c));
    for (std::size_t r = 0; r < rows; ++r) {
        ds.labels.push_back({"G" + std::to_string(r % 3), "N", "t", "file" + std::to_string(r)});
    }
    ds.values.resize(rows * cols);
    for (auto& v : ds.values) v = rng.uniform();
    return ds;
}

} // namespace

TEST_SUITE("ngram") {

TEST_CASE("padding") {
    CHECK(pad_tokens({"MOV", "PUSH", "RET"}, 2) == Tokens{"MOV", "PUSH", "RET", "PAD"});
    CHECK(pad_tokens({"MOV"}, 1) == Tokens{"MOV"});
    CHECK(pad_tokens({}, 2).empty());
    CHECK(pad_tokens({"A"}, 3) == Tokens{"A", "PAD", "PAD"});
}

TEST_CASE("chunked generation") {
    CHECK(generate_ngrams(Tokens{"MOV", "PUSH", "RET", "PAD"}, 2) == Tokens{"MOV PUSH", "RET PAD"});
    CHECK(generate_ngrams(Tokens{"A", "B", "C", "D", "E", "F"}, 2) == Tokens{"A B", "C D", "E F"});
    CHECK(generate_ngrams(Tokens{"A", "B", "C"}, 1) == Tokens{"A", "B", "C"});
    CHECK_THROWS_AS(generate_ngrams(Tokens{"A", "B", "C"}, 2), ConfigError);
}

TEST_CASE("sliding generation") {
    CHECK(generate_ngrams(Tokens{"A", "B", "C"}, 2, NGramMode::sliding) == Tokens{"A B", "B C"});
    CHECK(generate_ngrams(Tokens{"A"}, 2, NGramMode::sliding).empty());
}

TEST_CASE("chunking partitions the padded stream") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(3);
        const auto padded = pad_tokens(random_tokens(rng, 40, 6), n);
        Tokens rebuilt;
        for (const auto& g : generate_ngrams(padded, n)) {
            std::size_t start = 0;
            for (std::size_t pos; (pos = g.find(' ', start)) != std::string::npos; start = pos + 1) {
                rebuilt.push_back(g.substr(start, pos - start));
            }
            rebuilt.push_back(g.substr(start));
        }
        CHECK(rebuilt == padded);
    }
}

TEST_CASE("vocabulary") {
    std::vector<Tokens> docs = {{"A", "B"}, {"B", "A"}};
    CHECK(build_vocabulary(docs, 1).grams() == Tokens{"A", "B"});
    docs = {{"A", "B"}, {"A", "B"}};
    CHECK(build_vocabulary(docs, 2).grams() == Tokens{"A B"});
    CHECK(build_vocabulary(std::vector<Tokens>{}, 2).size() == 0);
}

TEST_CASE("vocabulary equals hash-set union, is order-insensitive and thread-count independent") {
    Rng rng(5);
    std::vector<Tokens> docs;
    for (int i = 0; i < 100; ++i) docs.push_back(random_tokens(rng, 30, 8));
    for (std::size_t n = 1; n <= 3; ++n) {
        std::unordered_set<std::string> seen;
        for (const auto& d : docs) {
            for (const auto& [g, c] : oracle::chunk_counts(d, n)) seen.insert(g);
        }
        Tokens expected(seen.begin(), seen.end());
        std::sort(expected.begin(), expected.end());
        const auto vocab = build_vocabulary(docs, n);
        CHECK(vocab.grams() == expected);
        for (std::size_t i = 0; i < expected.size(); ++i) CHECK(vocab.find(expected[i]) == i);
        CHECK(vocab.find("nope") == NGramVocabulary::npos);

        auto shuffled = docs;
        rng.shuffle(std::span(shuffled));
        CHECK(build_vocabulary(shuffled, n).grams() == expected);
        CHECK(build_vocabulary(docs, n, NGramMode::chunked, 4).grams() == expected);
    }
}

TEST_CASE("featurize") {
    const NGramVocabulary vocab(1, {"A", "B"});
    const auto v = featurize({"A", "A", "B"}, vocab);
    CHECK(v[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(v[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(featurize({}, vocab) == std::vector<double>{0.0, 0.0});
    // Out-of-vocabulary grams still count toward the total.
    const auto w = featurize({"A", "C"}, vocab);
    CHECK(w[0] == 0.5);
    CHECK(w[1] == 0.0);
}

TEST_CASE("featurize sums to one when the vocabulary covers the document") {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng.below(3);
        const auto toks = random_tokens(rng, 50, 10);
        if (toks.empty()) continue;
        const std::vector<Tokens> single = {toks};
        const auto vocab = build_vocabulary(single, n);
        const auto v = featurize(toks, vocab);
        double s = 0;
        for (double x : v) s += x;
        CHECK(std::abs(s - 1.0) < 1e-12);

        const std::vector<Tokens> other = {random_tokens(rng, 50, 10)};
        double partial = 0;
        for (double x : featurize(toks, build_vocabulary(other, n))) partial += x;
        CHECK(partial <= 1.0 + 1e-12);
    }
}

TEST_CASE("feature dataset rows follow document order with labels") {
    std::vector<OpcodeDocument> docs = {doc_of({"A", "B", "A"}, "G1", "S1", "exe", "a"),
                                        doc_of({"B"}, "G2", "S2", "dll", "b")};
    const auto ds = build_feature_dataset(docs, 1);
    CHECK(ds.feature_names == Tokens{"A", "B"});
    REQUIRE(ds.rows() == 2);
    CHECK(ds.labels[0] == LabelRow{"G1", "S1", "exe", "a"});
    CHECK(ds.at(0, 0) == doctest::Approx(2.0 / 3.0));
    CHECK(ds.at(1, 1) == 1.0);
    CHECK(ds.label_column(LabelColumn::type) == Tokens{"exe", "dll"});
    CHECK_NOTHROW(ds.validate());
}

TEST_CASE("variance pruning") {
    FeatureDataset ds;
    ds.feature_names = {"const", "low", "high"};
    ds.labels = {LabelRow{"a", "b", "c", "d"}, LabelRow{"a", "b", "c", "e"}};
    ds.values = {0.5, 0.1, 0.0, 0.5, 0.2, 1.0};
    const auto p0 = variance_prune(ds, 0);
    CHECK(p0.kept == Tokens{"low", "high"});
    const auto p50 = variance_prune(ds, 50);
    CHECK(p50.kept == Tokens{"high"});
    CHECK(p50.dataset.rows() == 2);
    CHECK(p50.dataset.labels == ds.labels);
    CHECK_THROWS_AS(variance_prune(ds, 101), ConfigError);
    CHECK_THROWS_AS(variance_prune(ds, -1), ConfigError);
}

TEST_CASE("variance pruning matches the sort-based oracle and is monotone") {
    Rng rng(13);
    for (int trial = 0; trial < 40; ++trial) {
        const auto ds = random_dataset(rng, 20, 15);
        std::vector<std::vector<double>> rows;
        for (std::size_t r = 0; r < ds.rows(); ++r) rows.emplace_back(ds.row(r).begin(), ds.row(r).end());
        std::vector<std::string> prev;
        for (double p : {0.0, 10.0, 50.0, 80.0, 100.0}) {
            const auto got = variance_prune(ds, p);
            Tokens want;
            for (std::size_t c : oracle::kept_columns(rows, p)) want.push_back(ds.feature_names[c]);
            CHECK(got.kept == want);
            auto sorted = got.kept;
            std::sort(sorted.begin(), sorted.end());
            if (p > 0) {
                CHECK(std::includes(prev.begin(), prev.end(), sorted.begin(), sorted.end()));
            }
            prev = std::move(sorted);
        }
    }
}

TEST_CASE("identical corpus gives byte-identical CSV") {
    Rng rng(21);
    std::vector<OpcodeDocument> docs;
    for (int i = 0; i < 30; ++i) docs.push_back(doc_of(random_tokens(rng, 40, 7), "G" + std::to_string(i % 2)));
    const auto a = dataset_to_csv(build_feature_dataset(docs, 2, NGramMode::chunked, 1));
    const auto b = dataset_to_csv(build_feature_dataset(docs, 2, NGramMode::chunked, 4));
    CHECK(a == b);
}

}

TEST_SUITE("dataset_io") {

TEST_CASE("CSV round trip within 1e-10") {
    Rng rng(31);
    auto ds = random_dataset(rng, 25, 12);
    ds.labels[0] = {"G, with comma", "quote \"q\"", "line\nbreak", "plain"};
    const auto back = dataset_from_csv(dataset_to_csv(ds));
    CHECK(back.feature_names == ds.feature_names);
    CHECK(back.labels == ds.labels);
    REQUIRE(back.values.size() == ds.values.size());
    for (std::size_t i = 0; i < ds.values.size(); ++i) CHECK(std::abs(back.values[i] - ds.values[i]) < 1e-10);
}

TEST_CASE("binary round trip is exact") {
    Rng rng(32);
    const auto ds = random_dataset(rng, 25, 12);
    CHECK(dataset_from_binary(dataset_to_binary(ds)) == ds);

    fixtures::TempDir dir;
    write_dataset(ds, dir / "d.bin", DatasetFormat::binary);
    write_dataset(ds, dir / "d.csv", DatasetFormat::csv);
    CHECK(read_dataset(dir / "d.bin") == ds);
    CHECK(read_dataset(dir / "d.csv").rows() == ds.rows());
}

TEST_CASE("CSV header layout") {
    FeatureDataset ds;
    ds.feature_names = {"MOV PUSH"};
    ds.labels = {LabelRow{"G1", "S", "exe", "f.opcode"}};
    ds.values = {0.25};
    CHECK(dataset_to_csv(ds) == "group,name,type,file_name,MOV PUSH\nG1,S,exe,f.opcode,0.25\n");
}

TEST_CASE("truncated files are errors, never partial datasets") {
    Rng rng(33);
    const auto ds = random_dataset(rng, 4, 3);
    const auto csv = dataset_to_csv(ds);
    const auto bin = dataset_to_binary(ds);
    for (std::size_t cut = 0; cut < bin.size(); ++cut) {
        CHECK_THROWS_AS(dataset_from_binary(std::string_view(bin).substr(0, cut)), ParseError);
    }
    // A CSV cut exactly after a record's newline is itself a well-formed
    // shorter file; every other cut must fail.
    for (std::size_t cut = 1; cut < csv.size(); ++cut) {
        if (csv[cut - 1] == '\n') continue;
        INFO("cut at " << cut);
        CHECK_THROWS_AS(dataset_from_csv(std::string_view(csv).substr(0, cut)), ParseError);
    }
}

TEST_CASE("malformed CSV reports a location") {
    const std::string bad = "group,name,type,file_name,A\nG,S,t,f,0.5\nG,S,t,f,zebra\n";
    try {
        dataset_from_csv(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("column 5") != std::string::npos);
    }
    CHECK_THROWS_AS(dataset_from_csv("group,name,type,file_name,A\nG,S,t,f\n"), ParseError);
    CHECK_THROWS_AS(dataset_from_csv("wrong,header\n"), ParseError);
}

TEST_CASE("values outside [0,1] are rejected") {
    CHECK_THROWS_AS(dataset_from_csv("group,name,type,file_name,A\nG,S,t,f,1.5\n"), ParseError);
}

}
