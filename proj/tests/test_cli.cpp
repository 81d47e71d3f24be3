#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "taxodng/rng.hpp"
#include "taxodng/synthlab.hpp"

using namespace taxodng;
using json = nlohmann::json;
using testutil::TempDir;
using testutil::read_file;
using testutil::write_file;

namespace {

std::string binary() {
    const char* bin = std::getenv("TAXO_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "TAXO_BIN must point at the taxo-dng binary");
    return bin;
}

int run_cli(const std::string& args, const std::string& log_path) {
    const std::string cmd = binary() + " " + args + " >" + log_path + " 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

void write_vectors(const std::string& path, const std::vector<std::string>& ids, const Matrix& x) {
    std::ostringstream out;
    out.precision(17);
    out << ids.size() << " " << x.cols << "\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i];
        for (std::size_t j = 0; j < x.cols; ++j) out << " " << x(i, j);
        out << "\n";
    }
    write_file(path, out.str());
}

// Chain fixture on disk: taxonomy v1 -> v2 -> v4 -> v3 plus matching vectors.
// gen_sem row order is (v1, v2, v3, v4).
constexpr std::size_t kDim = 600;

SemSample chain_sample() { return gen_sem(four_chain_spec(SupplementaryDist::uniform, kDim, 42)); }

void write_chain_fixture(const std::string& dir) {
    write_file(dir + "/nodes.tsv", "v1\tv1\nv2\tv2\nv3\tv3\nv4\tv4\n");
    write_file(dir + "/edges.tsv", "v1\tv2\nv2\tv4\nv4\tv3\n");
    write_vectors(dir + "/vec.txt", {"v1", "v2", "v3", "v4"}, chain_sample().x);
    write_file(dir + "/config.json", "{\"density\": \"sub_gaussian\"}\n");
}

std::string train_args(const std::string& dir, const std::string& out) {
    return "train --taxonomy " + dir + "/nodes.tsv," + dir + "/edges.tsv --embeddings " + dir +
           "/vec.txt --config " + dir + "/config.json --seed 5 --out " + out;
}

std::vector<json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    std::vector<json> lines;
    std::string buf;
    while (std::getline(in, buf))
        if (!buf.empty()) lines.push_back(json::parse(buf));
    return lines;
}

}  // namespace

TEST_CASE("train writes a reloadable model deterministically") {
    TempDir dir("cli_train");
    write_chain_fixture(dir.str());
    const std::string log = dir.str() + "/log.txt";

    CHECK(run_cli(train_args(dir.str(), dir.str() + "/m1"), log) == 0);
    CHECK(run_cli(train_args(dir.str(), dir.str() + "/m2"), log) == 0);

    for (const char* name : {"manifest.json", "W.bin", "Z.bin", "means.bin", "Xc.bin", "nodes.tsv",
                             "edges.tsv", "training_log.csv"}) {
        const std::string a = read_file(dir.str() + "/m1/" + std::string(name));
        CHECK(a == read_file(dir.str() + "/m2/" + std::string(name)));
        CHECK_FALSE(a.empty());
    }
    const std::string log_csv = read_file(dir.str() + "/m1/training_log.csv");
    CHECK(log_csv.rfind("iteration,loss\n", 0) == 0);
}

TEST_CASE("train reports missing inputs on exit code 2") {
    TempDir dir("cli_train_missing");
    write_chain_fixture(dir.str());
    const std::string log = dir.str() + "/log.txt";
    const int rc = run_cli("train --taxonomy " + dir.str() + "/nodes.tsv," + dir.str() +
                               "/edges.tsv --embeddings " + dir.str() + "/absent.txt --out " +
                               dir.str() + "/m",
                           log);
    CHECK(rc == 2);
    CHECK(read_file(log).find("embeddings not found") != std::string::npos);
}

TEST_CASE("expand ranks the true parents first and attaches the queries") {
    TempDir dir("cli_expand");
    write_chain_fixture(dir.str());
    const std::string log = dir.str() + "/log.txt";
    REQUIRE(run_cli(train_args(dir.str(), dir.str() + "/model"), log) == 0);

    SemSample sample = chain_sample();
    Matrix queries(2, kDim);
    Rng rng(derive_seed(42, "query"));
    const double hw = std::sqrt(3.0);
    for (std::size_t j = 0; j < kDim; ++j) {
        queries(0, j) = 0.7 * sample.x(3, j) + rng.uniform(-hw, hw);  // under v4
        queries(1, j) = 0.5 * sample.x(0, j) + rng.uniform(-hw, hw);  // under v1
    }
    write_vectors(dir.str() + "/queries.txt", {"q1", "q2"}, queries);

    const std::string expand = "expand --model " + dir.str() + "/model --queries " + dir.str() +
                               "/queries.txt --out " + dir.str() + "/out";
    CHECK(run_cli(expand, log) == 0);

    std::vector<json> preds = read_jsonl(dir.str() + "/out/predictions.jsonl");
    REQUIRE(preds.size() == 2);
    CHECK(preds[0].at("query") == "q1");
    CHECK(preds[0].at("ranking").at(0).at(0) == "v4");
    CHECK(std::abs(preds[0].at("ranking").at(0).at(1).get<double>() - 0.7) <= 0.2);
    CHECK(preds[1].at("query") == "q2");
    CHECK(preds[1].at("ranking").at(0).at(0) == "v1");

    const std::string nodes = read_file(dir.str() + "/out/expanded_nodes.tsv");
    CHECK(nodes.find("q1") != std::string::npos);
    CHECK(nodes.find("q2") != std::string::npos);
    const std::string edges = read_file(dir.str() + "/out/expanded_edges.tsv");
    CHECK(edges.find("v4\tq1") != std::string::npos);
    CHECK(edges.find("v1\tq2") != std::string::npos);

    CHECK(run_cli("expand --model " + dir.str() + "/model --queries " + dir.str() +
                      "/queries.txt --out " + dir.str() + "/out2",
                  log) == 0);
    CHECK(read_file(dir.str() + "/out/predictions.jsonl") ==
          read_file(dir.str() + "/out2/predictions.jsonl"));
}

TEST_CASE("expand passes an empty query set through unchanged") {
    TempDir dir("cli_expand_empty");
    write_chain_fixture(dir.str());
    const std::string log = dir.str() + "/log.txt";
    REQUIRE(run_cli(train_args(dir.str(), dir.str() + "/model"), log) == 0);

    write_file(dir.str() + "/queries.txt", "0 " + std::to_string(kDim) + "\n");
    CHECK(run_cli("expand --model " + dir.str() + "/model --queries " + dir.str() +
                      "/queries.txt --out " + dir.str() + "/out",
                  log) == 0);
    CHECK(read_file(dir.str() + "/out/predictions.jsonl").empty());
    CHECK(read_file(dir.str() + "/out/expanded_nodes.tsv") ==
          read_file(dir.str() + "/model/nodes.tsv"));
    CHECK(read_file(dir.str() + "/out/expanded_edges.tsv") ==
          read_file(dir.str() + "/model/edges.tsv"));
}

TEST_CASE("expand rejects malformed requests on exit code 2") {
    TempDir dir("cli_expand_bad");
    write_chain_fixture(dir.str());
    const std::string log = dir.str() + "/log.txt";
    REQUIRE(run_cli(train_args(dir.str(), dir.str() + "/model"), log) == 0);

    Matrix narrow(1, 32);
    for (std::size_t j = 0; j < 32; ++j) narrow(0, j) = static_cast<double>(j);
    write_vectors(dir.str() + "/narrow.txt", {"q"}, narrow);
    CHECK(run_cli("expand --model " + dir.str() + "/model --queries " + dir.str() +
                      "/narrow.txt --out " + dir.str() + "/out",
                  log) == 2);
    CHECK(read_file(log).find("dimension mismatch") != std::string::npos);

    CHECK(run_cli("expand --model " + dir.str() + "/model --queries " + dir.str() +
                      "/narrow.txt --mode sideways --out " + dir.str() + "/out",
                  log) == 2);
    CHECK(read_file(log).find("frozen or refit") != std::string::npos);
}

TEST_CASE("eval computes the pinned metric values") {
    TempDir dir("cli_eval");
    const std::string log = dir.str() + "/log.txt";
    write_file(dir.str() + "/predictions.jsonl",
               "{\"query\":\"q1\",\"ranking\":[[\"a\",0.9],[\"b\",0.5],[\"c\",0.1],[\"d\",0.05]]}\n");
    write_file(dir.str() + "/judgments.jsonl", "{\"query\":\"q1\",\"ground_truth\":[\"b\",\"d\"]}\n");

    CHECK(run_cli("eval --predictions " + dir.str() + "/predictions.jsonl --judgments " +
                      dir.str() + "/judgments.jsonl --ks 1,2 --out " + dir.str() + "/out",
                  log) == 0);

    std::ifstream rf(dir.str() + "/out/report.json");
    json report;
    rf >> report;
    CHECK(report.at("mean_rank").get<double>() == 3.0);  // ground-truth ranks 2 and 4
    CHECK(report.at("mrr").get<double>() == 0.375);
    CHECK(report.at("scaled_mrr").get<double>() == 3.75);
    CHECK(report.at("precision_at_k").at("2").get<double>() == 0.5);
    CHECK(report.at("recall_at_k").at("2").get<double>() == 0.5);
    CHECK(read_file(dir.str() + "/out/report.csv").find("mean_rank,3\n") != std::string::npos);
}

TEST_CASE("eval rejects inconsistent inputs on exit code 2") {
    TempDir dir("cli_eval_bad");
    const std::string log = dir.str() + "/log.txt";
    write_file(dir.str() + "/predictions.jsonl",
               "{\"query\":\"q1\",\"ranking\":[[\"a\",0.9],[\"b\",0.5]]}\n");
    write_file(dir.str() + "/unknown.jsonl", "{\"query\":\"ghost\",\"ground_truth\":[\"a\"]}\n");
    CHECK(run_cli("eval --predictions " + dir.str() + "/predictions.jsonl --judgments " +
                      dir.str() + "/unknown.jsonl --ks 1 --out " + dir.str() + "/out",
                  log) == 2);
    CHECK(read_file(log).find("no prediction for query") != std::string::npos);

    write_file(dir.str() + "/judgments.jsonl", "{\"query\":\"q1\",\"ground_truth\":[\"a\"]}\n");
    CHECK(run_cli("eval --predictions " + dir.str() + "/predictions.jsonl --judgments " +
                      dir.str() + "/judgments.jsonl --ks 10 --out " + dir.str() + "/out",
                  log) == 2);
    CHECK(read_file(log).find("exceeds ranking length") != std::string::npos);
}

TEST_CASE("synth runs both experiments reproducibly") {
    TempDir dir("cli_synth");
    const std::string log = dir.str() + "/log.txt";

    const std::string rec = "synth recovery --dist uniform --seeds 1 --samples 400 --out ";
    CHECK(run_cli(rec + dir.str() + "/r1", log) == 0);
    CHECK(run_cli(rec + dir.str() + "/r2", log) == 0);
    const std::string csv = read_file(dir.str() + "/r1/recovery.csv");
    CHECK(csv.rfind("seed,distribution,edge,truth,estimate,abs_error\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + one row per edge
    CHECK(csv == read_file(dir.str() + "/r2/recovery.csv"));

    std::ifstream sf(dir.str() + "/r1/summary.json");
    json summary;
    sf >> summary;
    CHECK(summary.at("per_seed").size() == 1);
    CHECK(std::isfinite(summary.at("mean_edge_error").get<double>()));

    CHECK(run_cli("synth deviation --dist gaussian --seeds 1 --samples 400 --out " + dir.str() +
                      "/dev",
                  log) == 0);
    const std::string dev = read_file(dir.str() + "/dev/deviation.csv");
    CHECK(dev.rfind("seed,distribution,node,forward,backward,ratio\n", 0) == 0);
    CHECK(std::count(dev.begin(), dev.end(), '\n') == 5);  // header + one row per node

    CHECK(run_cli("synth osmosis --dist uniform --seeds 1 --samples 400 --out " + dir.str() + "/x",
                  log) == 2);
    CHECK(read_file(log).find("usage:") != std::string::npos);

    CHECK(run_cli("", log) == 2);  // a subcommand is required
}
