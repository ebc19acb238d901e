//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "model_fixtures.hpp"
#include "phdiff/evalsuite/metrics.hpp"
#include "phdiff/molio/synthetic.hpp"
#include "phdiff/sampler/report.hpp"
#include "phdiff/sampler/sampler.hpp"
#include "phdiff/trainer/train.hpp"
#include "test_utils.hpp"

using namespace phdiff;

namespace {

// Briefly trained small model; real marginals and size histogram.
const Checkpoint &toy_checkpoint() {
  static const Checkpoint ck = [] {
    TrainConfig cfg;
    cfg.model = test::small_config();
    cfg.schedule.T = 20;
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.learning_rate = 3e-3;
    cfg.seed = 9;
    return train(cfg, make_training_set(gen_synthetic(31, 12, 5, 10), 4)).checkpoint;
  }();
  return ck;
}

std::pair<Hypothesis, PharmacophoreGraph> hypothesis_for(std::uint64_t seed) {
  for (std::uint64_t k = 0;; ++k) {
    MolGraph m = gen_synthetic(seed * 97 + k, 1, 6, 12)[0];
    try {
      return sample_hypothesis(m, seed);
    } catch (const Error &) {
    }
  }
}

double max_pair_distance_error(const MolGraph &m, const PharmacophoreGraph &cond) {
  double err = 0;
  for (int a = 0; a < cond.mask_size(); ++a)
    for (int b = a + 1; b < cond.mask_size(); ++b) {
      const int i = cond.mask_indices[a], j = cond.mask_indices[b];
      const double got = (m.coords.row(i) - m.coords.row(j)).norm();
      const double want = (cond.coords.row(a) - cond.coords.row(b)).norm();
      err = std::max(err, std::abs(got - want));
    }
  return err;
}

::testing::AssertionResult masked_entries_exact(const MolGraph &m, const PharmacophoreGraph &cond) {
  const int n = m.num_atoms();
  const int q = cond.mask_size();
  for (int a = 0; a < q; ++a) {
    const int i = cond.mask_indices[a];
    if (m.atom_types.row(i) != cond.atom_types.row(a))
      return ::testing::AssertionFailure() << "type of masked atom " << i;
    if (m.charges.row(i) != cond.charges.row(a))
      return ::testing::AssertionFailure() << "charge of masked atom " << i;
    for (int b = 0; b < q; ++b)
      if (a != b
          && m.bonds.row(pair_index(n, i, cond.mask_indices[b]))
                 != cond.bonds.row(pair_index(q, a, b)))
        return ::testing::AssertionFailure() << "bond between masked atoms";
  }
  const double err = max_pair_distance_error(m, cond);
  if (err > 1e-9)
    return ::testing::AssertionFailure() << "masked distance error " << err;
  return ::testing::AssertionSuccess();
}

}  // namespace

TEST(LargestFragment, ConnectedIsIdentity) {
  const MolGraph m = test::benzene({ Element::O });
  const Fragment f = largest_fragment(m, { 0, 6 });
  EXPECT_TRUE(test::same_molecule(f.mol, m, 0.0));
  EXPECT_EQ(f.dropped_mask_atoms, 0);
  EXPECT_EQ(f.kept.size(), 7u);
}

TEST(LargestFragment, LargerComponentSurvives) {
  // Atoms 0..4 form a chain of five, 5..7 a chain of three.
  std::vector<BondRecord> bonds;
  for (int i = 0; i < 4; ++i)
    bonds.push_back({ i, i + 1, BondType::kSingle });
  bonds.push_back({ 5, 6, BondType::kSingle });
  bonds.push_back({ 6, 7, BondType::kDouble });
  const MolGraph m = MolGraph::create(std::vector<Element>(8, Element::C),
                                      std::vector<int>(8, 0), test::line_coords(8), bonds, "x");
  const Fragment f = largest_fragment(m, { 1, 6, 7 });
  EXPECT_EQ(f.mol.num_atoms(), 5);
  EXPECT_EQ(f.kept, (std::vector<int> { 0, 1, 2, 3, 4 }));
  EXPECT_EQ(f.dropped_mask_atoms, 2);
  EXPECT_TRUE(test::isomorphic(f.mol, test::chain(Element::C, 5)));
  EXPECT_EQ(f.mol.coords.row(3), m.coords.row(3));
}

TEST(LargestFragment, TiePrefersMaskedComponent) {
  std::vector<BondRecord> bonds;
  for (int i = 0; i < 3; ++i) {
    bonds.push_back({ i, i + 1, BondType::kSingle });
    bonds.push_back({ 4 + i, 5 + i, BondType::kSingle });
  }
  std::vector<Element> el(8, Element::C);
  el[5] = Element::N;
  const MolGraph m = MolGraph::create(el, std::vector<int>(8, 0), test::line_coords(8), bonds, "t");
  Fragment f = largest_fragment(m, { 5, 6 });
  EXPECT_EQ(f.kept, (std::vector<int> { 4, 5, 6, 7 }));
  EXPECT_EQ(f.dropped_mask_atoms, 0);
  f = largest_fragment(m);
  EXPECT_EQ(f.kept, (std::vector<int> { 0, 1, 2, 3 }));
}

TEST(Sample, ConditionedHardGuarantee) {
  const Checkpoint &ck = toy_checkpoint();
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto [h, gp] = hypothesis_for(seed);
    SampleOptions opts;
    opts.count = 3;
    opts.seed = seed;
    const std::vector<GeneratedMolecule> out = sample(ck, &gp, opts);
    ASSERT_EQ(out.size(), 3u);
    for (const GeneratedMolecule &g: out) {
      EXPECT_GE(g.raw.num_atoms(), gp.mask_size() + 1);
      EXPECT_EQ(g.conditioning.mask_size(), gp.mask_size());
      EXPECT_TRUE(masked_entries_exact(g.raw, g.conditioning));
      // Post-filter violations are exactly the dropped masked atoms.
      int missing = 0;
      for (int i: g.conditioning.mask_indices)
        missing += std::find(g.kept.begin(), g.kept.end(), i) == g.kept.end() ? 1 : 0;
      EXPECT_EQ(missing, g.dropped_mask_atoms);
    }
  }
}

TEST(Sample, ExplicitSizeAndTooFewAtoms) {
  const Checkpoint &ck = toy_checkpoint();
  const auto [h, gp] = hypothesis_for(3);
  SampleOptions opts;
  opts.n_atoms = gp.mask_size();
  opts.count = 1;
  EXPECT_EQ(sample(ck, &gp, opts)[0].raw.num_atoms(), gp.mask_size());
  opts.n_atoms = gp.mask_size() - 1;
  try {
    sample(ck, &gp, opts);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTooFewAtoms);
  }
}

TEST(Sample, Unconditional) {
  SampleOptions opts;
  opts.count = 4;
  opts.seed = 3;
  const std::vector<GeneratedMolecule> out = sample(toy_checkpoint(), nullptr, opts);
  ASSERT_EQ(out.size(), 4u);
  for (const GeneratedMolecule &g: out) {
    EXPECT_GE(g.raw.num_atoms(), 1);
    EXPECT_TRUE(g.conditioning.empty());
    EXPECT_EQ(g.dropped_mask_atoms, 0);
    EXPECT_GE(g.mol.num_atoms(), 1);
  }
}

TEST(Sample, DeterministicAcrossThreadCounts) {
  const auto [h, gp] = hypothesis_for(5);
  SampleOptions opts;
  opts.count = 4;
  opts.seed = 7;
  const std::vector<GeneratedMolecule> a = sample(toy_checkpoint(), &gp, opts);
  const std::vector<GeneratedMolecule> b = sample(toy_checkpoint(), &gp, opts);
  opts.threads = 3;
  const std::vector<GeneratedMolecule> c = sample(toy_checkpoint(), &gp, opts);
  for (size_t k = 0; k < a.size(); ++k) {
    EXPECT_TRUE(test::same_molecule(a[k].raw, b[k].raw, 0.0));
    EXPECT_TRUE(test::same_molecule(a[k].raw, c[k].raw, 0.0));
  }
  opts.seed = 8;
  const std::vector<GeneratedMolecule> d = sample(toy_checkpoint(), &gp, opts);
  EXPECT_FALSE(test::same_molecule(a[0].raw, d[0].raw, 0.0));
}

TEST(Sample, EveryStepIsCenterFree) {
  const auto [h, gp] = hypothesis_for(6);
  SampleOptions opts;
  opts.count = 3;
  opts.seed = 2;
  int calls = 0;
  double worst = 0;
  opts.on_step = [&](int, int, const NoisyGraph &z) {
    ++calls;
    worst = std::max(worst, z.coords.colwise().sum().cwiseAbs().maxCoeff());
  };
  sample(toy_checkpoint(), &gp, opts);
  sample(toy_checkpoint(), nullptr, opts);
  EXPECT_EQ(calls, 2 * 3 * (toy_checkpoint().config.schedule.T + 1));
  EXPECT_LT(worst, 1e-6);
}

TEST(Sample, HistogramRequired) {
  Checkpoint ck = toy_checkpoint();
  ck.size_histogram.clear();
  try {
    sample(ck, nullptr, SampleOptions {});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCheckpointMismatch);
  }
}

TEST(BatchReport, SingleAndDuplicate) {
  const MolGraph m = test::benzene({ Element::O });
  GenerationReport r = batch_report(std::vector<MolGraph> { m }, nullptr, 1.0);
  EXPECT_EQ(r.validity.value(), 1.0);
  EXPECT_EQ(r.uniqueness.value(), 1.0);
  EXPECT_FALSE(r.diversity.has_value());
  r = batch_report(std::vector<MolGraph> { m, m }, nullptr, 1.0);
  EXPECT_EQ(r.uniqueness.value(), 0.5);
  EXPECT_EQ(*r.diversity, 0.0);
  try {
    batch_report(std::vector<MolGraph> {}, nullptr, 1.0);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyBatch);
  }
}

TEST(BatchReport, AgreesWithDirectRecomputation) {
  const auto [h, gp] = hypothesis_for(2);
  SampleOptions opts;
  opts.count = 8;
  opts.seed = 4;
  const std::vector<GeneratedMolecule> out = sample(toy_checkpoint(), &gp, opts);
  const std::vector<MolGraph> train_mols = gen_synthetic(31, 12, 5, 10);
  const HashIndex train_idx = build_hash_index(train_mols);
  const GenerationReport r = batch_report(out, &h, 1.0, &train_idx);

  std::vector<MolGraph> mols;
  std::vector<MatchScore> scores, raw_scores;
  int dropped = 0;
  for (const GeneratedMolecule &g: out) {
    mols.push_back(g.mol);
    scores.push_back(match_score(g.mol, h, 1.0).score);
    raw_scores.push_back(match_score(g.raw, h, 1.0).score);
    dropped += g.dropped_mask_atoms;
  }
  EXPECT_EQ(r.count, 8);
  EXPECT_TRUE(same_value(r.validity, validity(mols)));
  EXPECT_TRUE(same_value(r.uniqueness, uniqueness(mols)));
  EXPECT_TRUE(same_value(*r.novelty, novelty(mols, train_idx)));
  EXPECT_EQ(r.match->ms_mean, ms_mean(scores));
  EXPECT_EQ(r.match->pmr, pmr(scores));
  EXPECT_EQ(r.match->ms_ge_08, ms_at_least(scores, 0.8));
  EXPECT_EQ(r.raw_match->ms_mean, ms_mean(raw_scores));
  EXPECT_EQ(r.dropped_mask_atoms, dropped);

  const Json j = to_json(r);
  for (const char *key: { "validity", "uniqueness", "novelty", "diversity", "ms_mean", "pmr",
                          "ms_ge_0.8" })
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["ms_mean"].get<double>(), r.match->ms_mean);

  std::ostringstream csv;
  write_report_csv(csv, r);
  const std::string text = csv.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 9);
}
