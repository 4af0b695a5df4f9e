#include "doctest.h"

#include "aric/cli.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = aric::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("aric_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json report_without_timing(const fs::path& p) {
  json j = json::parse(slurp(p));
  j.erase(aric::cli::kTimingKey);
  return j;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

std::string two_clique_edges(int k) {
  std::ostringstream s;
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j) s << b * k + i << ' ' << b * k + j << '\n';
  return s.str();
}

const std::vector<std::string> kFastTrain{"--batch", "16", "--pretrain-iters", "60", "--train-iters", "60"};
const std::vector<std::string> kFastGraph{"--batch",  "128", "--pretrain-iters", "100", "--train-iters", "300",
                                          "--eta-d",  "1",   "--eta-g",          "0.1", "--gamma",       "0.0078125",
                                          "--dim",    "8"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"bogus"}).code == 2);
  CHECK(run({"theory", "--no-such-flag"}).code == 2);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"train", "--help"}).code == 0);
}

TEST_CASE("synth") {
  const fs::path dir = scratch("synth");
  const auto a = run({"synth", "ir=9.4", "n=10992", "dim=16", "sep=2", "--seed", "3", "--out", (dir / "a.csv").string()});
  REQUIRE(a.code == 0);
  const json j = json::parse(a.out);
  CHECK(j["positives"] == 1057);
  CHECK(j["negatives"] == 9935);
  const auto b = run({"synth", "ir=9.4", "n=10992", "dim=16", "sep=2", "--seed", "3", "--out", (dir / "b.csv").string()});
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.csv").rfind("x0,x1,", 0) == 0);

  CHECK(run({"synth", "n=3", "ir=100"}).code == 2);
  CHECK(run({"synth", "ir=two"}).code == 2);
  CHECK(run({"synth", "colour=red"}).code == 2);
  CHECK(run({"synth", "n=100", "--out", "/proc/definitely/not/here.csv"}).code == 1);
}

TEST_CASE("train") {
  const fs::path dir = scratch("train");

  SUBCASE("missing dataset names the flag") {
    const auto r = run({"train", "--seed", "1"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--data") != std::string::npos);
  }
  SUBCASE("data errors exit 1") {
    CHECK(run({"train", "--data", (dir / "missing.csv").string(), "--out", dir.string()}).code == 1);
    write_file(dir / "bad.csv", "a,label\n1,1\nfoo,0\n");
    CHECK(run({"train", "--data", (dir / "bad.csv").string(), "--out", dir.string()}).code == 1);
  }
  SUBCASE("invalid settings exit 2") {
    CHECK(run(cat({"train", "--synth", "ir=5", "n=300", "--gen-arch", "wide"}, kFastTrain)).code == 2);
    CHECK(run(cat({"train", "--synth", "ir=5", "n=300", "--batch", "0"}, {})).code == 2);
    CHECK(run({"train", "--synth", "ir=5", "n=300", "--eta-d", "abc"}).code == 2);
  }
  SUBCASE("synthetic run writes a deterministic report") {
    const auto args = cat({"train", "--synth", "ir=50", "n=5000", "dim=2", "sep=2", "--seed", "7", "--out",
                           (dir / "r1").string()},
                          kFastTrain);
    const auto r = run(args);
    REQUIRE(r.code == 0);
    const json j = report_without_timing(dir / "r1" / "report.json");
    for (const char* m : {"aric", "pretrain_only", "undersample", "oversample"}) {
      CHECK(j["models"][m]["test"].contains("auc"));
      CHECK(j["models"][m]["val"].contains("f1"));
    }
    CHECK(j["data"]["positives"] == 98);
    CHECK(j["config"]["gamma"] == doctest::Approx(1.0 / 16.0));
    CHECK(json::parse(slurp(dir / "r1" / "report.json")).contains(aric::cli::kTimingKey));
    const std::string trace = slurp(dir / "r1" / "trace.csv");
    CHECK(trace.rfind("phase,iteration,d_loss,g_loss,weight_entropy,max_weight,min_weight\n", 0) == 0);
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 121);

    auto again = args;
    again[again.size() - kFastTrain.size() - 1] = (dir / "r2").string();
    REQUIRE(run(again).code == 0);
    json j2 = report_without_timing(dir / "r2" / "report.json");
    j2["artifacts"] = j["artifacts"];
    CHECK(j.dump() == j2.dump());
  }
  SUBCASE("no adversarial iterations: ARIC equals the pretraining baseline") {
    const auto r = run({"train", "--synth", "ir=10", "n=800", "--seed", "2", "--batch", "16", "--pretrain-iters",
                        "50", "--train-iters", "0", "--out", (dir / "zero").string()});
    REQUIRE(r.code == 0);
    const json j = report_without_timing(dir / "zero" / "report.json");
    CHECK(j["models"]["aric"] == j["models"]["pretrain_only"]);
  }
  SUBCASE("csv input and config file, flags win") {
    REQUIRE(run({"synth", "ir=4", "n=400", "dim=3", "--out", (dir / "d.csv").string()}).code == 0);
    write_file(dir / "run.cfg", "# settings\nbatch=32\nseed = 5\npretrain-iters=20\ntrain-iters=20\nlambda=0.5\n");
    const auto r = run({"train", "--config", (dir / "run.cfg").string(), "--data", (dir / "d.csv").string(),
                        "--batch", "8", "--out", (dir / "cfg").string()});
    REQUIRE(r.code == 0);
    const json j = report_without_timing(dir / "cfg" / "report.json");
    CHECK(j["config"]["batch"] == 8);
    CHECK(j["config"]["seed"] == 5);
    CHECK(j["config"]["lambda"] == 0.5);
    CHECK(j["data"]["dim"] == 3);
    CHECK(run({"train", "--config", (dir / "nope.cfg").string()}).code == 2);
    write_file(dir / "bad.cfg", "no equals sign\n");
    CHECK(run({"train", "--config", (dir / "bad.cfg").string()}).code == 2);
  }
}

TEST_CASE("graph") {
  const fs::path dir = scratch("graph");
  const fs::path edges = write_file(dir / "cliques.txt", two_clique_edges(10));

  SUBCASE("two cliques are separated; no labels means no node section") {
    const auto r = run(cat({"graph", "--edges", edges.string(), "--out", (dir / "g1").string()}, kFastGraph));
    REQUIRE(r.code == 0);
    const json j = report_without_timing(dir / "g1" / "report.json");
    CHECK(j["link_prediction"]["accuracy"].get<double>() > 0.9);
    CHECK_FALSE(j.contains("node_classification"));
    const std::string emb = slurp(dir / "g1" / "embeddings.csv");
    CHECK(emb.rfind("node_id,e0,", 0) == 0);
    CHECK(std::count(emb.begin(), emb.end(), '\n') == 21);

    REQUIRE(run(cat({"graph", "--edges", edges.string(), "--out", (dir / "g2").string()}, kFastGraph)).code == 0);
    json j2 = report_without_timing(dir / "g2" / "report.json");
    j2["artifacts"] = j["artifacts"];
    CHECK(j.dump() == j2.dump());
    CHECK(slurp(dir / "g1" / "embeddings.csv") == slurp(dir / "g2" / "embeddings.csv"));
  }
  SUBCASE("labels add node classification over 10 shuffles") {
    std::ostringstream labels;
    for (int v = 0; v < 20; ++v) labels << v << ' ' << (v < 10 ? 0 : 1) << '\n';
    const fs::path lab = write_file(dir / "labels.txt", labels.str());
    const auto r = run(cat({"graph", "--edges", edges.string(), "--labels", lab.string(), "--out",
                            (dir / "g3").string()},
                           kFastGraph));
    REQUIRE(r.code == 0);
    const json j = report_without_timing(dir / "g3" / "report.json");
    REQUIRE(j.contains("node_classification"));
    CHECK(j["node_classification"]["micro_f1"].size() == 10);
    CHECK(j["node_classification"]["micro_f1_mean"].get<double>() > 0.9);
  }
  SUBCASE("defaults") {
    const auto r = run({"graph", "--edges", edges.string(), "--pretrain-iters", "1", "--train-iters", "1", "--out",
                        (dir / "g4").string()});
    REQUIRE(r.code == 0);
    const json j = report_without_timing(dir / "g4" / "report.json");
    CHECK(j["config"]["batch"] == 1024);
    CHECK(j["config"]["dim"] == 20);
    CHECK(j["config"]["gamma"] == 1e-3);
    CHECK(j["config"]["lambda"] == 0.1);
    CHECK(j["config"]["eta_d"] == 1e-3);
    CHECK(j["config"]["eta_g"] == 1e-5);
    CHECK(j["config"]["test_frac"] == 0.1);
  }
  SUBCASE("errors") {
    const auto missing = run({"graph"});
    CHECK(missing.code == 2);
    CHECK(missing.err.find("--edges") != std::string::npos);
    CHECK(run({"graph", "--edges", (dir / "none.txt").string(), "--out", dir.string()}).code == 1);
    const fs::path bad = write_file(dir / "bad.txt", "0 1\n1 1\n");
    CHECK(run({"graph", "--edges", bad.string(), "--out", dir.string()}).code == 1);
    CHECK(run({"graph", "--edges", edges.string(), "--test-frac", "1.5"}).code == 2);
  }
}

TEST_CASE("theory") {
  SUBCASE("lambda 0 residual") {
    const auto r = run({"theory", "--k", "3", "--lambda", "0"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    for (const char* key : {"lambda", "k", "p_plus", "minimizer", "residual", "converged"}) CHECK(j.contains(key));
    CHECK(j["residual"].get<double>() < 1e-4);
    CHECK(j["k"] == 3);
    CHECK(run({"theory", "--k", "3", "--lambda", "0"}).out == r.out);
  }
  SUBCASE("uniform p+ gives uniform minimizer") {
    const json j = json::parse(run({"theory", "--k", "4", "--lambda", "0", "--p-plus", "uniform"}).out);
    for (const auto& p : j["minimizer"]) CHECK(p.get<double>() == doctest::Approx(0.25));
  }
  SUBCASE("explicit p+") {
    const auto r = run({"theory", "--p-plus", "0.7,0.2,0.1", "--lambda", "0.1"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["k"] == 3);
  }
  SUBCASE("invalid input exits 2") {
    CHECK(run({"theory", "--p-plus", "0.5,0.6"}).code == 2);
    CHECK(run({"theory", "--p-plus", "0.5,x"}).code == 2);
    CHECK(run({"theory", "--k", "1"}).code == 2);
    CHECK(run({"theory", "--lambda", "-1"}).code == 2);
    CHECK(run({"theory", "--k", "4", "--p-plus", "0.5,0.5"}).code == 2);
  }
}

TEST_CASE("installed binary") {
  const char* bin = std::getenv("ARIC_BIN");
  if (bin == nullptr) return;
  const std::string quiet = " > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system((std::string(bin) + " theory --k 3" + quiet).c_str())) == 0);
  CHECK(WEXITSTATUS(std::system((std::string(bin) + " theory --p-plus 0.5,0.6" + quiet).c_str())) == 2);
  CHECK(WEXITSTATUS(std::system((std::string(bin) + " graph --edges /nonexistent" + quiet).c_str())) == 1);
}
