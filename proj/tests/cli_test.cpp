//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#include <algorithm>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "phdiff/cli.hpp"
#include "test_utils.hpp"

using namespace phdiff;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run(const std::vector<std::string> &args, const std::string &stdin_text = {}) {
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  const int code = cli::run(args, in, out, err);
  return { code, out.str(), err.str() };
}

class CliTest: public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path()
           / ("phdiff_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string &name) const { return (dir_ / name).string(); }

  // Small dataset, hypothesis and checkpoint shared by several tests.
  void pipeline() {
    ASSERT_EQ(run({ "gen-data", "--seed", "4", "--count", "12", "--min", "6", "--max", "10",
                    "--out", path("d.sdf") })
                  .code,
              0);
    ASSERT_EQ(run({ "featurize", "--mol", path("d.sdf"), "--record", "1", "--seed", "2",
                    "--hyp-out", path("h.json") })
                  .code,
              0);
    write_text_file(path("cfg.json"),
                    R"({"epochs": 5, "batch_size": 4, "schedule": {"T": 12},
                        "model": {"layers": 1, "width": 16, "heads": 2, "edge_width": 8,
                                  "time_dim": 8}})");
    ASSERT_EQ(run({ "train", "--data", path("d.sdf"), "--config", path("cfg.json"), "--epochs",
                    "1", "--out", path("m.ckpt"), "--quiet" })
                  .code,
              0);
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, VersionAndUsage) {
  CliRun r = run({ "--version" });
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("checkpoint format 1"), std::string::npos);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({ "frobnicate" }).code, 1);
  r = run({ "match", "--mol", "x.sdf" });
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--hyp"), std::string::npos);
  EXPECT_EQ(run({ "gen-data", "--out", path("x.sdf"), "--min", "9", "--max", "5" }).code, 1);
  EXPECT_EQ(run({ "sample", "--help" }).code, 0);
}

TEST_F(CliTest, DataErrorsExitTwo) {
  EXPECT_EQ(run({ "match", "--mol", path("missing.sdf"), "--hyp", path("missing.json") }).code, 2);
  write_text_file(path("bad.json"), "{not json");
  write_text_file(path("one.sdf"), serialize_sdf(test::benzene({ Element::O })));
  EXPECT_EQ(run({ "match", "--mol", path("one.sdf"), "--hyp", path("bad.json") }).code, 2);
  EXPECT_EQ(run({ "match", "--mol", "-", "--hyp", path("bad.json") }, "garbage\n").code, 2);
}

TEST_F(CliTest, GenDataMatchesLibrary) {
  const CliRun r = run({ "gen-data", "--seed", "0", "--count", "20", "--min", "6", "--max", "16",
                      "--out", path("data.sdf"), "--json" });
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_text_file(path("data.sdf")), serialize_sdf(gen_synthetic(0, 20, 6, 16)));
  const Json m = Json::parse(read_text_file(path("data.sdf.manifest.json")));
  EXPECT_EQ(m["seed"], 0);
  EXPECT_EQ(m["count"], 20);
  EXPECT_EQ(m["size_range"], Json::array({ 6, 16 }));
  EXPECT_EQ(Json::parse(r.out), m);
}

TEST_F(CliTest, FeaturizeAndMatchMatchLibrary) {
  write_text_file(path("m.sdf"), serialize_sdf(gen_synthetic(6, 5, 7, 12)));
  const std::vector<MolGraph> mols = read_sdf_file(path("m.sdf"));
  CliRun r = run({ "featurize", "--mol", path("m.sdf"), "--record", "3", "--seed", "5", "--hyp-out",
                path("h.json"), "--json" });
  ASSERT_EQ(r.code, 0) << r.err;
  const Hypothesis expect = sample_hypothesis(mols[3], 5).first;
  const Hypothesis got = hypothesis_from_json(Json::parse(read_text_file(path("h.json"))));
  ASSERT_EQ(got.size(), expect.size());
  for (int k = 0; k < got.size(); ++k) {
    EXPECT_EQ(got.features[k].type, expect.features[k].type);
    EXPECT_LT((got.features[k].pos - expect.features[k].pos).norm(), 1e-12);
  }
  EXPECT_EQ(Json::parse(r.out)["features"].size(), perceive_features(mols[3]).size());

  // Multi-record match from a file and single-record match from stdin.
  r = run({ "match", "--mol", path("m.sdf"), "--hyp", path("h.json"), "--tol", "1.0", "--json",
            "--threads", "2" });
  ASSERT_EQ(r.code, 0) << r.err;
  const Json all = Json::parse(r.out);
  ASSERT_EQ(all.size(), mols.size());
  for (size_t k = 0; k < mols.size(); ++k) {
    const MatchResult m = match_score(mols[k], got, 1.0);
    EXPECT_EQ(all[k]["ms"].get<double>(), m.score.value());
    EXPECT_EQ(all[k]["matched_pairs"].get<int>(), m.score.matched_pairs);
  }
  r = run({ "match", "--mol", "-", "--hyp", path("h.json"), "--json" }, serialize_sdf(mols[3]));
  ASSERT_EQ(r.code, 0) << r.err;
  const Json self = Json::parse(r.out);
  EXPECT_EQ(self["ms"].get<double>(), 1.0);
  EXPECT_EQ(self["mapping"].size(), static_cast<size_t>(got.size()));
}

TEST_F(CliTest, NoiseDemo) {
  write_text_file(path("m.sdf"), serialize_sdf(gen_synthetic(1, 3, 6, 10)));
  const CliRun r = run({ "noise-demo", "--mol", path("m.sdf"), "--record", "1", "--t", "1", "500",
                      "--out", path("n.sdf"), "--json" });
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  ASSERT_EQ(j["steps"].size(), 2u);
  EXPECT_EQ(j["steps"][0]["atom_types_kept"].get<double>(), 1.0);
  EXPECT_LT(j["steps"][0]["coord_rmsd"].get<double>(), 1e-3);
  EXPECT_GT(j["steps"][1]["coord_rmsd"].get<double>(), 0.5);
  EXPECT_EQ(read_sdf_file(path("n.sdf")).size(), 2u);
  EXPECT_EQ(run({ "noise-demo", "--mol", path("m.sdf"), "--t", "501" }).code, 2);
}

TEST_F(CliTest, TrainFlagsOverrideConfig) {
  pipeline();
  const Checkpoint ck = load_checkpoint(path("m.ckpt"));
  EXPECT_EQ(ck.config.epochs, 1);        // flag
  EXPECT_EQ(ck.config.batch_size, 4);    // config file
  EXPECT_EQ(ck.config.schedule.T, 12);
  EXPECT_EQ(ck.model.config().layers, 1);
  const Json m = Json::parse(read_text_file(path("m.ckpt.manifest.json")));
  EXPECT_EQ(m["command"], "train");
  const std::string csv = read_text_file(path("m.ckpt.loss.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST_F(CliTest, SampleIsDeterministicAndMatchesLibrary) {
  pipeline();
  const std::vector<std::string> base { "sample", "--ckpt", path("m.ckpt"), "--hyp", path("h.json"),
                                        "--count", "6", "--seed", "7" };
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  ASSERT_EQ(run(with({ "--out", path("a.sdf"), "--threads", "1" })).code, 0);
  ASSERT_EQ(run(with({ "--out", path("b.sdf"), "--threads", "3", "--raw-out", path("raw.sdf") }))
                .code,
            0);
  EXPECT_EQ(read_text_file(path("a.sdf")), read_text_file(path("b.sdf")));

  const Checkpoint ck = load_checkpoint(path("m.ckpt"));
  const Hypothesis h = hypothesis_from_json(Json::parse(read_text_file(path("h.json"))));
  SampleOptions opts;
  opts.count = 6;
  opts.seed = 7;
  const std::vector<GeneratedMolecule> lib = sample(ck, &*h.source, opts);
  std::vector<MolGraph> mols, raw;
  for (const GeneratedMolecule &g: lib) {
    mols.push_back(g.mol);
    raw.push_back(g.raw);
  }
  EXPECT_EQ(read_text_file(path("a.sdf")), serialize_sdf(mols));
  EXPECT_EQ(read_text_file(path("raw.sdf")), serialize_sdf(raw));

  const Json report = Json::parse(read_text_file(path("a.sdf.report.json")));
  EXPECT_EQ(report, to_json(batch_report(lib, &h, h.tol)));
  EXPECT_TRUE(fs::exists(path("a.sdf.manifest.json")));

  // eval over the written file agrees with the post-filter part of the report.
  const CliRun e = run({ "eval", "--mol", path("a.sdf"), "--hyp", path("h.json"), "--json" });
  ASSERT_EQ(e.code, 0) << e.err;
  const Json ej = Json::parse(e.out);
  for (const char *key: { "validity", "uniqueness", "ms_mean", "pmr", "ms_ge_0.8" })
    EXPECT_EQ(ej[key], report[key]) << key;
}

TEST_F(CliTest, SampleRejectsBareHypothesisAndTooFewAtoms) {
  pipeline();
  write_text_file(path("bare.json"),
                  R"({"features": [{"type": "HBA", "pos": [0,0,0]},
                                   {"type": "HBD", "pos": [3,0,0]},
                                   {"type": "HYD", "pos": [0,3,0]}], "tol": 1.0})");
  CliRun r = run({ "sample", "--ckpt", path("m.ckpt"), "--hyp", path("bare.json"), "--out",
                path("s.sdf") });
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("featurize"), std::string::npos);
  r = run({ "sample", "--ckpt", path("m.ckpt"), "--hyp", path("h.json"), "--n-atoms", "1",
            "--out", path("s.sdf") });
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("TooFewAtoms"), std::string::npos);
  EXPECT_EQ(run({ "sample", "--ckpt", path("m.ckpt"), "--n-atoms", "many", "--out",
                  path("s.sdf") })
                .code,
            1);
  write_text_file(path("junk.ckpt"), "PHDFjunk");
  r = run({ "sample", "--ckpt", path("junk.ckpt"), "--out", path("s.sdf") });
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("CheckpointMismatch"), std::string::npos);
}

TEST_F(CliTest, EvalNovelty) {
  const std::vector<MolGraph> train = gen_synthetic(2, 10, 5, 9);
  write_text_file(path("t.sdf"), serialize_sdf(train));
  const std::vector<MolGraph> s(train.begin(), train.begin() + 4);
  const CliRun r = run({ "eval", "--mol", "-", "--train", path("t.sdf"), "--json", "--csv",
                      path("e.csv"), "--out", path("e.json") },
                    serialize_sdf(s));
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["novelty"].get<double>(), 0.0);
  EXPECT_TRUE(j["ms_mean"].is_null());
  EXPECT_EQ(Json::parse(read_text_file(path("e.json"))), j);
  EXPECT_EQ(run({ "eval", "--mol", "-" }, "").code, 2);
}
