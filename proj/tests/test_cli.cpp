#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "gspn/checkpoint.hpp"
#include "gspn/cli.hpp"
#include "gspn/dataset_io.hpp"
#include "gspn/synthetic.hpp"

using namespace gspn;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("gspn_cli_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string fixture(const std::string& name) {
  return std::string(GSPN_TEST_DATA_DIR) + "/" + name;
}

const char* kTrainConfig = R"({
  "model": {"num_layers": 2, "num_states": 3, "shortcut": false,
            "learning_rate": 0.05, "batch_size": 8, "epochs": 6,
            "patience": 6, "seed": 4}
})";

void require_metrics_shape(const json& j) {
  REQUIRE(j.contains("metric"));
  REQUIRE(j.at("metric").is_string());
  REQUIRE(j.contains("mean"));
  REQUIRE(j.at("mean").is_number());
  REQUIRE(j.contains("std"));
  REQUIRE(j.at("std").is_number());
  REQUIRE(j.contains("per_graph"));
  REQUIRE(j.at("per_graph").is_array());
}

}  // namespace

TEST_CASE("mask is reproducible and writes valid datasets") {
  TempDir dir("mask");
  Dataset ds = synth_community_graphs(6, 8, 2, 0.1, 3);
  save_dataset(ds, dir.file("full.json"));

  const std::vector<std::string> cmd = {
      "mask", "--data", dir.file("full.json"), "--out", dir.file("m1.json"),
      "--concentration", "1.5", "--rate", "0.5", "--seed", "7"};
  REQUIRE(cli::run(cmd) == 0);
  std::vector<std::string> cmd2 = cmd;
  cmd2[4] = dir.file("m2.json");
  REQUIRE(cli::run(cmd2) == 0);
  CHECK(slurp(dir.file("m1.json")) == slurp(dir.file("m2.json")));
  Dataset masked = load_dataset(dir.file("m1.json"));
  bool any = false;
  for (const auto& g : masked.graphs) any = any || !g.mask.all();
  CHECK(any);
}

TEST_CASE("train then evaluate round trip, bit-identical reruns") {
  TempDir dir("train");
  Dataset ds = synth_community_graphs(24, 8, 2, 0.1, 5);
  save_dataset(ds, dir.file("ds.json"));
  write_file(dir.file("cfg.json"), kTrainConfig);

  auto train = [&](const std::string& out) {
    return cli::run({"train-unsup", "--config", dir.file("cfg.json"), "--data",
                     dir.file("ds.json"), "--out", out, "--seed", "4"});
  };
  REQUIRE(train(dir.file("a.ckpt")) == 0);
  REQUIRE(train(dir.file("b.ckpt")) == 0);
  CHECK(slurp(dir.file("a.ckpt")) == slurp(dir.file("b.ckpt")));

  // checkpoint round trip through load/save is byte exact
  GspnModel model = load_gspn_checkpoint(dir.file("a.ckpt"));
  save_checkpoint(model, dir.file("c.ckpt"));
  CHECK(slurp(dir.file("a.ckpt")) == slurp(dir.file("c.ckpt")));

  auto eval = [&](const std::string& out) {
    return cli::run({"eval-pll", "--model", dir.file("a.ckpt"), "--data", dir.file("ds.json"),
                     "--metrics-out", out, "--workers", "1"});
  };
  REQUIRE(eval(dir.file("m1.json")) == 0);
  REQUIRE(eval(dir.file("m2.json")) == 0);
  CHECK(slurp(dir.file("m1.json")) == slurp(dir.file("m2.json")));

  const json metrics = json::parse(slurp(dir.file("m1.json")));
  require_metrics_shape(metrics);
  CHECK(metrics.at("per_graph").size() == ds.graphs.size());
  CHECK(std::isfinite(metrics.at("mean").get<double>()));

  SUBCASE("multi-worker evaluation matches single worker") {
    REQUIRE(cli::run({"eval-pll", "--model", dir.file("a.ckpt"), "--data", dir.file("ds.json"),
                      "--metrics-out", dir.file("m4.json"), "--workers", "4"}) == 0);
    CHECK(slurp(dir.file("m1.json")) == slurp(dir.file("m4.json")));

    for (const char* workers : {"1", "4"}) {
      REQUIRE(cli::run({"eval-missing-nll", "--model", dir.file("a.ckpt"), "--data",
                        dir.file("ds.json"), "--concentration", "1.5", "--rate", "0.5",
                        "--mask-seed", "2", "--workers", workers, "--metrics-out",
                        dir.file(std::string("nw") + workers + ".json")}) == 0);
    }
    CHECK(slurp(dir.file("nw1.json")) == slurp(dir.file("nw4.json")));
  }

  SUBCASE("missing NLL with internal masking, then impute and embed") {
    REQUIRE(cli::run({"eval-missing-nll", "--model", dir.file("a.ckpt"), "--data",
                      dir.file("ds.json"), "--concentration", "1.5", "--rate", "0.5",
                      "--mask-seed", "2", "--metrics-out", dir.file("nll.json")}) == 0);
    const json nll = json::parse(slurp(dir.file("nll.json")));
    require_metrics_shape(nll);
    CHECK(nll.contains("per_attribute_mean"));

    REQUIRE(cli::run({"mask", "--data", dir.file("ds.json"), "--out", dir.file("masked.json"),
                      "--concentration", "1.5", "--rate", "0.5", "--seed", "2"}) == 0);
    REQUIRE(cli::run({"eval-missing-nll", "--model", dir.file("a.ckpt"), "--data",
                      dir.file("masked.json"), "--truth", dir.file("ds.json"),
                      "--metrics-out", dir.file("nll2.json")}) == 0);
    const json nll2 = json::parse(slurp(dir.file("nll2.json")));
    CHECK(nll.at("mean").get<double>() ==
          doctest::Approx(nll2.at("mean").get<double>()).epsilon(1e-12));

    REQUIRE(cli::run({"impute", "--model", dir.file("a.ckpt"), "--data", dir.file("masked.json"),
                      "--out", dir.file("filled.json"), "--csv-out", dir.file("filled.csv")}) ==
            0);
    Dataset filled = load_dataset(dir.file("filled.json"));
    for (const auto& g : filled.graphs) CHECK(g.mask.all());
    CHECK(slurp(dir.file("filled.csv")).rfind("graph_id,vertex_id,attribute,value\n", 0) == 0);

    REQUIRE(cli::run({"embed", "--model", dir.file("a.ckpt"), "--data", dir.file("ds.json"),
                      "--out", dir.file("emb.csv")}) == 0);
    const std::string emb = slurp(dir.file("emb.csv"));
    CHECK(emb.rfind("graph_id,vertex_id,e0,e1,e2,e3,e4,e5,e6,e7,e8\n", 0) == 0);  // (L+1)*C = 9
  }
}

TEST_CASE("perturbation CSV respects the locality bound") {
  TempDir dir("perturb");
  Dataset ds = synth_community_graphs(4, 10, 2, 0.1, 9);
  save_dataset(ds, dir.file("ds.json"));
  write_file(dir.file("cfg.json"), kTrainConfig);
  REQUIRE(cli::run({"train-unsup", "--config", dir.file("cfg.json"), "--data",
                    dir.file("ds.json"), "--out", dir.file("m.ckpt")}) == 0);
  REQUIRE(cli::run({"query-perturb", "--model", dir.file("m.ckpt"), "--data", dir.file("ds.json"),
                    "--graph", "1", "--vertex", "3", "--attr", "0", "--value", "2.0",
                    "--out", dir.file("q.csv")}) == 0);
  std::istringstream csv(slurp(dir.file("q.csv")));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "vertex_id,hop_distance,delta_pll");
  int rows = 0;
  while (std::getline(csv, line)) {
    std::istringstream ls(line);
    std::string vertex, hops, delta;
    std::getline(ls, vertex, ',');
    std::getline(ls, hops, ',');
    std::getline(ls, delta, ',');
    const int h = std::stoi(hops);
    if (h > 2 || h < 0) {
      if (std::stoi(vertex) != 3) CHECK(std::stod(delta) == 0.0);
    }
    ++rows;
  }
  CHECK(rows == 10);
}

TEST_CASE("supervised training and classification workflow") {
  TempDir dir("classify");
  Dataset ds = synth_community_graphs(30, 10, 2, 0.1, 15);
  save_dataset(ds, dir.file("ds.json"));
  write_file(dir.file("cfg.json"), R"({
    "model": {"num_layers": 1, "num_states": 3, "learning_rate": 0.05,
              "batch_size": 8, "epochs": 5, "patience": 5, "seed": 2},
    "readout": {"num_states": 4, "pooling": "mean", "mode": "joint"}
  })");
  REQUIRE(cli::run({"train-sup", "--config", dir.file("cfg.json"), "--data", dir.file("ds.json"),
                    "--out", dir.file("sup.ckpt")}) == 0);
  REQUIRE(cli::run({"classify", "--model", dir.file("sup.ckpt"), "--data", dir.file("ds.json"),
                    "--metrics-out", dir.file("acc.json")}) == 0);
  const json acc = json::parse(slurp(dir.file("acc.json")));
  require_metrics_shape(acc);
  CHECK(acc.at("metric") == "accuracy");
  CHECK(acc.at("mean").get<double>() >= 0.0);
  CHECK(acc.at("mean").get<double>() <= 1.0);
  CHECK(acc.contains("predictions"));
}

TEST_CASE("baseline subcommands share the evaluation protocol") {
  TempDir dir("baseline");
  Dataset ds = synth_community_graphs(20, 10, 2, 0.1, 25);
  save_dataset(ds, dir.file("ds.json"));
  REQUIRE(cli::run({"baseline", "gaussian", "--data", dir.file("ds.json"), "--out",
                    dir.file("g.ckpt")}) == 0);
  REQUIRE(cli::run({"baseline", "gmm", "--data", dir.file("ds.json"), "--out", dir.file("m.ckpt"),
                    "--components", "3", "--seed", "3"}) == 0);
  REQUIRE(cli::run({"eval-missing-nll", "--model", dir.file("g.ckpt"), "--data",
                    dir.file("ds.json"), "--concentration", "1.5", "--rate", "0.5",
                    "--mask-seed", "1", "--metrics-out", dir.file("gn.json")}) == 0);
  REQUIRE(cli::run({"eval-missing-nll", "--model", dir.file("m.ckpt"), "--data",
                    dir.file("ds.json"), "--concentration", "1.5", "--rate", "0.5",
                    "--mask-seed", "1", "--metrics-out", dir.file("mn.json")}) == 0);
  const json gn = json::parse(slurp(dir.file("gn.json")));
  const json mn = json::parse(slurp(dir.file("mn.json")));
  require_metrics_shape(gn);
  require_metrics_shape(mn);
  // the mixture captures the bimodal attribute; the single gaussian cannot
  CHECK(mn.at("mean").get<double>() < gn.at("mean").get<double>());
}

TEST_CASE("usage and data errors map to exit codes 1 and 2") {
  TempDir dir("errors");
  CHECK(cli::run({"no-such-command"}) == 1);
  CHECK(cli::run({"eval-pll", "--data", "x.json"}) == 1);  // missing required --model
  CHECK(cli::run({"eval-pll", "--model", dir.file("none.ckpt"), "--data",
                  dir.file("none.json")}) == 2);
  // schema mismatch between checkpoint and dataset
  Dataset ds = synth_community_graphs(4, 6, 2, 0.1, 2);
  save_dataset(ds, dir.file("ds.json"));
  write_file(dir.file("cfg.json"), kTrainConfig);
  REQUIRE(cli::run({"train-unsup", "--config", dir.file("cfg.json"), "--data",
                    dir.file("ds.json"), "--out", dir.file("m.ckpt")}) == 0);
  Dataset other;
  other.schema.attributes = {AttributeKind::categorical(2)};
  Graph g;
  g.num_vertices = 1;
  g.attributes = Eigen::MatrixXd::Zero(1, 1);
  g.mask.setConstant(1, 1, true);
  other.graphs.push_back(g);
  save_dataset(other, dir.file("other.json"));
  CHECK(cli::run({"eval-pll", "--model", dir.file("m.ckpt"), "--data", dir.file("other.json"),
                  "--metrics-out", dir.file("x.json")}) == 2);
}

TEST_CASE("golden pipeline output stays stable") {
  TempDir dir("golden");
  const std::string fixture_ds = fixture("tiny.json");
  write_file(dir.file("cfg.json"), R"({
    "model": {"num_layers": 1, "num_states": 2, "learning_rate": 0.05,
              "batch_size": 4, "epochs": 4, "patience": 4, "seed": 11}
  })");
  REQUIRE(cli::run({"train-unsup", "--config", dir.file("cfg.json"), "--data", fixture_ds,
                    "--out", dir.file("m.ckpt")}) == 0);
  REQUIRE(cli::run({"eval-pll", "--model", dir.file("m.ckpt"), "--data", fixture_ds,
                    "--metrics-out", dir.file("pll.json")}) == 0);
  const json got = json::parse(slurp(dir.file("pll.json")));
  const json want = json::parse(slurp(fixture("golden_eval_pll.json")));
  require_metrics_shape(got);
  CHECK(got.at("metric") == want.at("metric"));
  REQUIRE(got.at("per_graph").size() == want.at("per_graph").size());
  CHECK(got.at("mean").get<double>() ==
        doctest::Approx(want.at("mean").get<double>()).epsilon(1e-9));
  for (std::size_t i = 0; i < got.at("per_graph").size(); ++i) {
    CHECK(got.at("per_graph").at(i).get<double>() ==
          doctest::Approx(want.at("per_graph").at(i).get<double>()).epsilon(1e-9));
  }
}
