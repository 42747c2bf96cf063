#include <filesystem>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "flowpix/dataset.hpp"
#include "flowpix/encode.hpp"
#include "flowpix/evalreport.hpp"
#include "flowpix/util.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace flowpix;
using flowpix::testing::TempDir;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result flowpix_cmd(std::vector<std::string> args) {
    args.insert(args.begin(), "flowpix");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

bool exists(const std::string& p) { return std::filesystem::exists(p); }

struct Workspace {
    TempDir dir{"cli"};
    std::string train, test, data;

    Workspace() {
        train = flowpix::testing::write_fixture(dir, "train.csv", synth_fixture(1, 40, 4));
        test = flowpix::testing::write_fixture(dir, "test.csv",
                                               synth_fixture(2, 15, 4, FixtureShape::small(), Split::test));
        data = dir.file("data");
    }
};

}  // namespace

TEST_CASE("help and version exit 0") {
    CHECK(flowpix_cmd({"--help"}).code == 0);
    const auto h = flowpix_cmd({"train", "--help"});
    CHECK(h.code == 0);
    CHECK(h.out.find("--classifier") != std::string::npos);
    CHECK(flowpix_cmd({"--version"}).code == 0);
}

TEST_CASE("usage errors exit 1 with a suggestion") {
    const auto a = flowpix_cmd({"train", "--data", "d", "--out", "o", "--seeed", "3"});
    CHECK(a.code == 1);
    CHECK(a.err.find("--seed") != std::string::npos);
    const auto b = flowpix_cmd({"encod", "--train", "x"});
    CHECK(b.code == 1);
    CHECK(b.err.find("encode") != std::string::npos);
    CHECK(flowpix_cmd({}).code == 1);
    CHECK(flowpix_cmd({"encode", "--train", "x.csv", "--out", "o", "--pad", "300"}).code == 1);
    CHECK(flowpix_cmd({"train", "--data", "d"}).code == 1);  // missing --out
}

TEST_CASE("a missing input file is a data error naming the path") {
    const auto r = flowpix_cmd({"counts", "--train", "/missing/train.csv", "--test", "/missing/test.csv"});
    CHECK(r.code == 2);
    CHECK(r.err.find("/missing/train.csv") != std::string::npos);
    CHECK(r.out.empty());
}

TEST_CASE("edit distance") {
    CHECK(cli::edit_distance("seed", "seeed") == 1);
    CHECK(cli::edit_distance("", "abc") == 3);
    CHECK(cli::edit_distance("kitten", "sitting") == 3);
}

TEST_CASE("schema command writes schema, layout and config echo") {
    Workspace ws;
    const auto r = flowpix_cmd({"schema", "--train", ws.train, "--out", ws.dir.file("s")});
    REQUIRE(r.code == 0);
    CHECK(exists(ws.dir.file("s/schema.txt")));
    CHECK(exists(ws.dir.file("s/layout.csv")));
    const auto run = nlohmann::json::parse(read_file(ws.dir.file("s/run.json")));
    CHECK(run["command"] == "schema");
    CHECK(run["options"]["train"] == ws.train);
    CHECK(run["command_line"].get<std::string>().starts_with("flowpix schema --train"));
}

TEST_CASE("encode, train, eval and importance compose") {
    Workspace ws;
    auto r = flowpix_cmd({"encode", "--train", ws.train, "--test", ws.test, "--out", ws.data});
    REQUIRE(r.code == 0);
    for (const char* f : {"schema.txt", "layout.csv", "train_index.csv", "test_index.csv", "run.json"}) {
        CHECK(exists(ws.data + "/" + f));
    }
    CHECK(load_index(ws.data + "/train_index.csv").entries.size() == 160);
    CHECK(load_index(ws.data + "/test_index.csv").entries.size() == 60);

    r = flowpix_cmd({"train", "--data", ws.data, "--out", ws.dir.file("m"), "--trees", "15"});
    REQUIRE(r.code == 0);
    CHECK(exists(ws.dir.file("m/forest.model")));

    r = flowpix_cmd({"eval", "--data", ws.data, "--model", ws.dir.file("m/forest.model"), "--format", "json",
                     "--out", ws.dir.file("e")});
    REQUIRE(r.code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc["overall_accuracy"].get<double>() == 1.0);
    CHECK(doc["per_class"].size() == 4);
    CHECK(exists(ws.dir.file("e/report.csv")));
    const auto back = parse_report_csv(read_file(ws.dir.file("e/report.csv")));
    CHECK(back.matrix.total() == 60);

    r = flowpix_cmd({"importance", "--model", ws.dir.file("m/forest.model"), "--top", "3"});
    REQUIRE(r.code == 0);
    CHECK(split(std::string(trim(r.out)), '\n').size() == 3);

    r = flowpix_cmd({"importance", "--model", ws.dir.file("m/forest.model"), "--format", "csv"});
    CHECK(r.out.starts_with("rank,feature,importance\n"));
}

TEST_CASE("binary task and pixel classifier") {
    Workspace ws;
    REQUIRE(flowpix_cmd({"encode", "--train", ws.train, "--test", ws.test, "--out", ws.data}).code == 0);
    REQUIRE(flowpix_cmd({"train", "--data", ws.data, "--out", ws.dir.file("p"), "--classifier", "pixel",
                         "--task", "binary", "--epochs", "5"}).code == 0);
    const auto r = flowpix_cmd({"eval", "--data", ws.data, "--model", ws.dir.file("p/pixel.model"), "--format", "csv"});
    REQUIRE(r.code == 0);
    const auto report = parse_report_csv(r.out);
    CHECK(report.matrix.class_names == std::vector<std::string>{"Normal", "Attack"});
    CHECK(report.matrix.row_sum(0) == 15);
    CHECK(report.matrix.row_sum(1) == 45);

    // Importance needs a forest.
    CHECK(flowpix_cmd({"importance", "--model", ws.dir.file("p/pixel.model")}).code == 2);
}

TEST_CASE("a forest refuses a dataset encoded under another schema") {
    Workspace ws;
    REQUIRE(flowpix_cmd({"encode", "--train", ws.train, "--test", ws.test, "--out", ws.data}).code == 0);
    REQUIRE(flowpix_cmd({"train", "--data", ws.data, "--out", ws.dir.file("m"), "--trees", "3"}).code == 0);
    const auto other = flowpix::testing::write_fixture(ws.dir, "other.csv", synth_fixture(9, 40, 4));
    REQUIRE(flowpix_cmd({"encode", "--train", other, "--test", ws.test, "--out", ws.dir.file("d2")}).code == 0);
    const auto r = flowpix_cmd({"eval", "--data", ws.dir.file("d2"), "--model", ws.dir.file("m/forest.model")});
    CHECK(r.code == 2);
    CHECK(r.err.find("schema") != std::string::npos);
}

TEST_CASE("counts and subset commands") {
    Workspace ws;
    auto r = flowpix_cmd({"counts", "--train", ws.train, "--test", ws.test});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("Total,160,60") != std::string::npos);

    r = flowpix_cmd({"subset", "--input", ws.train, "--out", ws.dir.file("sub"), "--cap", "20"});
    REQUIRE(r.code == 0);
    CHECK(load_csv(ws.dir.file("sub/train.csv"), LoadOptions{}).size() == 64);
    CHECK(load_csv(ws.dir.file("sub/holdout.csv"), LoadOptions{}).size() == 16);

    r = flowpix_cmd({"subset", "--input", ws.train, "--out", ws.dir.file("q"), "--binary", "--quota",
                     "Normal=10,Attack=12"});
    REQUIRE(r.code == 0);
    const auto sample = to_binary(load_csv(ws.dir.file("q/sample.csv"), LoadOptions{}));
    CHECK(sample.class_counts == std::vector<std::size_t>{10, 12});

    CHECK(flowpix_cmd({"subset", "--input", ws.train, "--out", ws.dir.file("q2"), "--quota", "Nope=3"}).code == 1);
    CHECK(flowpix_cmd({"subset", "--input", ws.train, "--out", ws.dir.file("q3"), "--holdout", "1"}).code == 1);
}

TEST_CASE("ablate-shuffle writes both reports and the delta") {
    Workspace ws;
    REQUIRE(flowpix_cmd({"encode", "--train", ws.train, "--test", ws.test, "--out", ws.data}).code == 0);
    const auto r = flowpix_cmd({"ablate-shuffle", "--data", ws.data, "--out", ws.dir.file("ab"), "--seed", "7",
                                "--trees", "10"});
    REQUIRE(r.code == 0);
    CHECK(exists(ws.dir.file("ab/default/report.json")));
    CHECK(exists(ws.dir.file("ab/shuffled/report.json")));
    const auto summary = nlohmann::json::parse(read_file(ws.dir.file("ab/ablation.json")));
    // The forest reads encoded columns, not cell positions.
    CHECK(summary["delta"].get<double>() == 0.0);
    CHECK(summary["default_model_digest"] == summary["shuffled_model_digest"]);
}

TEST_CASE("pipeline artifacts are byte-identical across worker counts") {
    Workspace ws;
    std::map<std::string, std::string> first;
    for (const char* workers : {"1", "8"}) {
        const std::string root = ws.dir.file(std::string("w") + workers);
        REQUIRE(flowpix_cmd({"encode", "--train", ws.train, "--test", ws.test, "--out", root + "/data",
                             "--workers", workers}).code == 0);
        REQUIRE(flowpix_cmd({"train", "--data", root + "/data", "--out", root + "/model", "--trees", "12",
                             "--seed", "3", "--workers", workers}).code == 0);
        REQUIRE(flowpix_cmd({"eval", "--data", root + "/data", "--model", root + "/model/forest.model",
                             "--out", root + "/eval", "--workers", workers}).code == 0);
        for (const char* f : {"data/train_index.csv", "data/test_index.csv", "data/schema.txt", "data/layout.csv",
                              "model/forest.model", "eval/report.txt", "eval/report.csv", "eval/report.json"}) {
            const auto bytes = read_file(root + "/" + f);
            if (first.count(f)) {
                CHECK_MESSAGE(bytes == first[f], f);
            } else {
                first[f] = bytes;
            }
        }
    }
}
