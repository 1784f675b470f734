#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "semtree/ingest.hpp"

using namespace semtree;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("semtree_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = path / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p.string();
    }
    static inline int counter = 0;
};

}  // namespace

TEST_CASE("load_corpus reads records, metadata, and extras") {
    TempDir dir;
    const std::string path = dir.file("c.jsonl",
        R"({"doc_id": "a", "content": "alpha", "source_id": "s1", "source_position": 0})" "\n"
        R"({"doc_id": "b", "content": "beta", "source_id": "s1", "source_position": 1, "lang": "en"})" "\n"
        R"({"doc_id": "c", "content": "gamma"})" "\n");
    LoadReport report;
    auto corpus = load_corpus(path, {}, &report);
    REQUIRE(corpus.size() == 3);
    CHECK(report.records == 3);
    CHECK(report.with_source_metadata == 2);
    CHECK(corpus.documents[0].doc_id == "a");
    CHECK(corpus.documents[1].extra.at("lang") == "en");
    CHECK(!corpus.documents[2].source_id.has_value());
    CHECK(!corpus.has_full_source_metadata());
}

TEST_CASE("load_corpus errors carry the line number") {
    TempDir dir;
    SUBCASE("duplicate doc id") {
        const std::string path = dir.file("dup.jsonl",
            R"({"doc_id": "a", "content": "x"})" "\n"
            R"({"doc_id": "a", "content": "y"})" "\n");
        try {
            load_corpus(path);
            FAIL("expected duplicate error");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find(":2:") != std::string::npos);
        }
    }
    SUBCASE("malformed line") {
        const std::string path = dir.file("bad.jsonl",
            R"({"doc_id": "a", "content": "x"})" "\n" "{{{\n");
        try {
            load_corpus(path);
            FAIL("expected parse error");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find(":2:") != std::string::npos);
        }
    }
    SUBCASE("missing file") { CHECK_THROWS(load_corpus(dir.path.string() + "/nope.jsonl")); }
}

TEST_CASE("corpus write/load round-trip preserves content and extras") {
    TempDir dir;
    Corpus corpus;
    Document d1;
    d1.doc_id = "a";
    d1.content = "alpha text";
    d1.source_id = "s";
    d1.source_position = 4;
    d1.extra["tag"] = "keep me";
    corpus.documents.push_back(d1);
    Document d2;
    d2.doc_id = "b";
    d2.content = "beta";
    corpus.documents.push_back(d2);

    const std::string path = (dir.path / "round.jsonl").string();
    write_corpus(corpus, path);
    auto back = load_corpus(path);
    REQUIRE(back.size() == 2);
    CHECK(back.documents[0].doc_id == "a");
    CHECK(back.documents[0].content == "alpha text");
    CHECK(back.documents[0].source_position == 4);
    CHECK(back.documents[0].extra.at("tag") == "keep me");
    CHECK(back.documents[1].doc_id == "b");

    // loading is idempotent: a second write/load cycle is byte-stable
    const std::string path2 = (dir.path / "round2.jsonl").string();
    write_corpus(back, path2);
    std::ifstream f1(path), f2(path2);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
}

TEST_CASE("field maps rename on-disk fields") {
    TempDir dir;
    const std::string map_path = dir.file("map.json",
        R"({"corpus": {"doc_id": "pid", "content": "text"}})");
    const std::string corpus_path = dir.file("c.jsonl",
        R"({"pid": "a", "text": "alpha"})" "\n");
    auto fields = FieldMap::load(map_path);
    auto corpus = load_corpus(corpus_path, fields);
    REQUIRE(corpus.size() == 1);
    CHECK(corpus.documents[0].doc_id == "a");
    CHECK(corpus.documents[0].content == "alpha");
}

TEST_CASE("load_eval_bundle maps gains and exclusions") {
    TempDir dir;
    const std::string queries = dir.file("q.jsonl",
        R"({"query_id": "q1", "text": "first query"})" "\n"
        R"({"query_id": "q2", "text": "second"})" "\n");
    const std::string qrels = dir.file("r.jsonl",
        R"({"query_id": "q1", "doc_id": "a", "gain": 2})" "\n"
        R"({"query_id": "q1", "doc_id": "b", "gain": 1})" "\n"
        R"({"query_id": "q2", "doc_id": "c", "gain": 1})" "\n");
    const std::string exclusions = dir.file("e.jsonl",
        R"({"query_id": "q1", "excluded_doc_ids": ["z", "b"]})" "\n");

    auto bundle = load_eval_bundle(queries, qrels, exclusions);
    REQUIRE(bundle.queries.size() == 2);
    CHECK(bundle.qrels.for_query("q1").at("a") == 2);
    CHECK(bundle.qrels.for_query("q2").at("c") == 1);
    CHECK(bundle.exclusions_for("q1").count("z") == 1);
    CHECK(bundle.exclusions_for("q2").empty());
}

TEST_CASE("missing exclusion file means empty exclusions") {
    TempDir dir;
    const std::string queries = dir.file("q.jsonl", R"({"query_id": "q1", "text": "t"})" "\n");
    const std::string qrels = dir.file("r.jsonl",
        R"({"query_id": "q1", "doc_id": "a", "gain": 1})" "\n");
    auto bundle = load_eval_bundle(queries, qrels);
    CHECK(bundle.exclusions.empty());
}

TEST_CASE("qrels naming unknown queries fail; unknown docs only warn") {
    TempDir dir;
    const std::string queries = dir.file("q.jsonl", R"({"query_id": "q1", "text": "t"})" "\n");
    SUBCASE("unknown query id") {
        const std::string qrels = dir.file("r.jsonl",
            R"({"query_id": "ghost", "doc_id": "a", "gain": 1})" "\n");
        CHECK_THROWS(load_eval_bundle(queries, qrels));
    }
    SUBCASE("unknown doc id warns but keeps the judgment") {
        const std::string qrels = dir.file("r.jsonl",
            R"({"query_id": "q1", "doc_id": "outside", "gain": 1})" "\n");
        LoadReport report;
        auto bundle = load_eval_bundle(queries, qrels, std::nullopt,
                                       std::vector<std::string>{"a", "b"}, {}, &report);
        CHECK(bundle.qrels.for_query("q1").at("outside") == 1);
        REQUIRE(report.warnings.size() == 1);
        CHECK(report.warnings[0].find("outside") != std::string::npos);
    }
    SUBCASE("unknown excluded doc warns, entry kept") {
        const std::string qrels = dir.file("r.jsonl",
            R"({"query_id": "q1", "doc_id": "a", "gain": 1})" "\n");
        const std::string exclusions = dir.file("e.jsonl",
            R"({"query_id": "q1", "excluded_doc_ids": ["phantom"]})" "\n");
        LoadReport report;
        auto bundle = load_eval_bundle(queries, qrels, exclusions,
                                       std::vector<std::string>{"a"}, {}, &report);
        CHECK(bundle.exclusions_for("q1").count("phantom") == 1);
        CHECK(report.warnings.size() == 1);
    }
}

TEST_CASE("BRIGHT-shaped subsample loads with source metadata intact") {
    TempDir dir;
    std::string content;
    for (int i = 0; i < 500; ++i) {
        content += R"({"doc_id": "bio_)" + std::to_string(i) + R"(", "content": "passage )" +
                   std::to_string(i) + R"(", "source_id": "article_)" + std::to_string(i / 8) +
                   R"(", "source_position": )" + std::to_string(i % 8) + "}\n";
    }
    const std::string path = dir.file("bio.jsonl", content);
    LoadReport report;
    auto corpus = load_corpus(path, {}, &report);
    CHECK(corpus.size() == 500);
    CHECK(corpus.has_full_source_metadata());
    CHECK(report.with_source_metadata == 500);
}
