//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "phdiff/molio/synthetic.hpp"
#include "phdiff/pharmakit/features.hpp"
#include "phdiff/pharmakit/json_io.hpp"
#include "test_utils.hpp"

namespace phdiff {
namespace {
int count_type(const std::vector<FeatureGroup> &groups, FeatureType t) {
  return static_cast<int>(std::count_if(
      groups.begin(), groups.end(),
      [t](const FeatureGroup &g) { return g.type == t; }));
}

TEST(PerceiveFeatures, BenzeneRingIsOneAromaticGroup) {
  auto groups = perceive_features(test::benzene());
  ASSERT_EQ(count_type(groups, FeatureType::kARO), 1);
  EXPECT_EQ(groups[0].type, FeatureType::kARO);
  EXPECT_EQ(groups[0].atoms, (std::vector<int> { 0, 1, 2, 3, 4, 5 }));
}

TEST(PerceiveFeatures, HydroxylIsAcceptorAndDonor) {
  MolGraph co = MolGraph::create({ Element::C, Element::O }, { 0, 0 },
                                 test::line_coords(2),
                                 { { 0, 1, BondType::kSingle } });
  auto groups = perceive_features(co);
  ASSERT_EQ(groups.size(), 2);
  EXPECT_EQ(groups[0], (FeatureGroup { FeatureType::kHBA, { 1 } }));
  EXPECT_EQ(groups[1], (FeatureGroup { FeatureType::kHBD, { 1 } }));

  // Ether oxygen has no implicit H: acceptor only.
  MolGraph coc = MolGraph::create({ Element::C, Element::O, Element::C },
                                  { 0, 0, 0 }, test::line_coords(3),
                                  { { 0, 1, BondType::kSingle },
                                    { 1, 2, BondType::kSingle } });
  auto ether = perceive_features(coc);
  EXPECT_EQ(count_type(ether, FeatureType::kHBA), 1);
  EXPECT_EQ(count_type(ether, FeatureType::kHBD), 0);
}

TEST(PerceiveFeatures, CarbonChainIsHydrophobicOnly) {
  auto groups = perceive_features(test::chain(Element::C, 5));
  ASSERT_EQ(groups.size(), 5);
  for (const auto &g: groups)
    EXPECT_EQ(g.type, FeatureType::kHYD);
}

TEST(PerceiveFeatures, ChargedAtoms) {
  MolGraph m = MolGraph::create({ Element::C, Element::N, Element::O },
                                { 0, 1, -1 }, test::line_coords(3),
                                { { 0, 1, BondType::kSingle },
                                  { 0, 2, BondType::kSingle } });
  auto groups = perceive_features(m);
  EXPECT_EQ(count_type(groups, FeatureType::kPOS), 1);
  EXPECT_EQ(count_type(groups, FeatureType::kNEG), 1);
  // N+ is not an acceptor; O- (valence 1, one bond) accepts but donates no H.
  for (const auto &g: groups) {
    if (g.type == FeatureType::kHBA)
      EXPECT_EQ(g.atoms, std::vector<int> { 2 });
  }
}

TEST(PerceiveFeatures, PyridineNitrogenAcceptsFusedDoesNot) {
  MolGraph pyr = test::benzene();
  pyr.atom_types.row(0).setZero();
  pyr.atom_types(0, static_cast<int>(Element::N)) = 1.0;
  auto groups = perceive_features(pyr);
  EXPECT_EQ(count_type(groups, FeatureType::kHBA), 1);
  EXPECT_EQ(count_type(groups, FeatureType::kHBD), 0);
}

TEST(ExtractPharmacophore, AromaticGroup) {
  MolGraph m = test::benzene({ Element::O, Element::C });
  auto groups = perceive_features(m);
  ASSERT_EQ(groups[0].type, FeatureType::kARO);
  PharmacophoreGraph gp = extract_pharmacophore(m, groups, { 0 });
  ASSERT_EQ(gp.mask_size(), 6);
  EXPECT_EQ(gp.mask_indices, (std::vector<int> { 0, 1, 2, 3, 4, 5 }));
  for (int i = 0; i < m.num_atoms(); ++i) {
    const auto expect = i < 6 ? FeatureType::kARO : FeatureType::kNone;
    EXPECT_EQ(argmax_row(gp.feature_labels.row(i)), static_cast<int>(expect));
    EXPECT_DOUBLE_EQ(gp.feature_labels.row(i).sum(), 1.0);
  }
  // Ring bonds only, no substituent edges.
  for (int p = 0; p < 6; ++p)
    for (int q = 0; q < 6; ++q) {
      const int expect = (std::abs(p - q) == 1 || std::abs(p - q) == 5) ? 4 : 0;
      EXPECT_EQ(argmax_row(gp.bonds.row(pair_index(6, p, q))), expect);
    }
  EXPECT_EQ(gp.coords, m.coords.topRows(6));
}

TEST(ExtractPharmacophore, EmptySelection) {
  MolGraph m = test::chain(Element::C, 3);
  try {
    extract_pharmacophore(m, {});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptySelection);
  }
}

TEST(ExtractPharmacophore, FullMaskKeepsWholeGraph) {
  for (const MolGraph &m: gen_synthetic(2, 20, 4, 14)) {
    auto groups = perceive_features(m);
    std::vector<int> all(groups.size());
    std::iota(all.begin(), all.end(), 0);
    std::set<int> covered;
    for (const auto &g: groups)
      covered.insert(g.atoms.begin(), g.atoms.end());
    if (static_cast<int>(covered.size()) != m.num_atoms())
      continue;
    PharmacophoreGraph gp = extract_pharmacophore(m, groups, all);
    EXPECT_EQ(gp.mask_size(), m.num_atoms());
    EXPECT_EQ(gp.bonds, m.bonds);
    EXPECT_EQ(gp.atom_types, m.atom_types);
  }
}

TEST(ExtractPharmacophore, PriorityTieBreak) {
  // Hydroxyl O: HBA and HBD both claim atom 1; HBD wins.
  MolGraph co = MolGraph::create({ Element::C, Element::O }, { 0, 0 },
                                 test::line_coords(2),
                                 { { 0, 1, BondType::kSingle } });
  PharmacophoreGraph gp = extract_pharmacophore(co, { 0, 1 });
  EXPECT_EQ(gp.mask_indices, std::vector<int> { 1 });
  EXPECT_EQ(argmax_row(gp.feature_labels.row(1)),
            static_cast<int>(FeatureType::kHBD));
  EXPECT_EQ(gp.feature_groups.size(), 2);

  // Ring carbons are both ARO and HYD; ARO wins.
  MolGraph bz = test::benzene();
  auto groups = perceive_features(bz);
  std::vector<int> all(groups.size());
  std::iota(all.begin(), all.end(), 0);
  PharmacophoreGraph ring = extract_pharmacophore(bz, groups, all);
  for (int i = 0; i < 6; ++i)
    EXPECT_EQ(argmax_row(ring.feature_labels.row(i)),
              static_cast<int>(FeatureType::kARO));
}

TEST(SampleHypothesis, ForcedSubset) {
  MolGraph propane = test::chain(Element::C, 3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto [h, gp] = sample_hypothesis(propane, seed);
    ASSERT_EQ(h.size(), 3);
    EXPECT_EQ(gp.mask_indices, (std::vector<int> { 0, 1, 2 }));
    EXPECT_TRUE(h.well_formed());
  }
  EXPECT_THROW(sample_hypothesis(test::chain(Element::C, 2), 0), Error);
}

TEST(SampleHypothesis, DeterministicPerSeed) {
  MolGraph decane = test::chain(Element::C, 10);
  auto [a, ga] = sample_hypothesis(decane, 99);
  auto [b, gb] = sample_hypothesis(decane, 99);
  EXPECT_EQ(ga.mask_indices, gb.mask_indices);
  ASSERT_EQ(a.size(), b.size());
  for (int i = 0; i < a.size(); ++i)
    EXPECT_EQ(a.features[i].pos, b.features[i].pos);
}

TEST(SampleHypothesis, UniformFeatureCount) {
  MolGraph decane = test::chain(Element::C, 10);
  std::map<int, int> hist;
  for (std::uint64_t seed = 0; seed < 1000; ++seed)
    ++hist[sample_hypothesis(decane, seed).first.size()];
  ASSERT_EQ(hist.size(), 5);
  double chi2 = 0;
  for (int k = 3; k <= 7; ++k) {
    const double freq = hist[k] / 1000.0;
    EXPECT_NEAR(freq, 0.2, 0.05) << "k=" << k;
    chi2 += (hist[k] - 200.0) * (hist[k] - 200.0) / 200.0;
  }
  // 4 dof, p = 0.01 critical value.
  EXPECT_LT(chi2, 13.277);
}

TEST(SampleHypothesis, CoincidentCentroidsNeverBothDrawn) {
  for (const MolGraph &m: gen_synthetic(4, 100, 6, 18)) {
    std::pair<Hypothesis, PharmacophoreGraph> drawn;
    try {
      drawn = sample_hypothesis(m, 3);
    } catch (const Error &e) {
      ASSERT_EQ(e.kind(), ErrorKind::kTooFewFeatures);
      continue;
    }
    EXPECT_TRUE(drawn.first.well_formed());
  }
}

TEST(MatchScore, SelfMatchIsPerfect) {
  int tried = 0;
  for (const MolGraph &m: gen_synthetic(12, 100, 6, 20)) {
    std::pair<Hypothesis, PharmacophoreGraph> drawn;
    try {
      drawn = sample_hypothesis(m, 5);
    } catch (const Error &) {
      continue;
    }
    ++tried;
    MatchResult r = match_score(m, drawn.first, 1.0);
    EXPECT_TRUE(r.score.perfect());
    EXPECT_DOUBLE_EQ(r.score.value(), 1.0);
    // Also at a vanishing tolerance.
    EXPECT_TRUE(match_score(m, drawn.first, 1e-9).score.perfect());
  }
  EXPECT_GT(tried, 50);
}

TEST(MatchScore, MissingAromaticCostsItsPairs) {
  MolGraph chainC = test::chain(Element::C, 6);
  Hypothesis h;
  h.features = { { FeatureType::kARO, Vec3(0, 0, 0) },
                 { FeatureType::kHYD, Vec3(1.5, 0, 0) },
                 { FeatureType::kHYD, Vec3(3.0, 0, 0) } };
  MatchResult r = match_score(chainC, h, 1.0);
  EXPECT_LE(r.score.value(), 1.0 / 3.0);
  EXPECT_EQ(r.score.matched_pairs, 1);
  EXPECT_FALSE(r.mapping[0].has_value());
}

TEST(MatchScore, DegenerateHypothesis) {
  Hypothesis h;
  h.features = { { FeatureType::kHYD, Vec3(0, 0, 0) } };
  EXPECT_THROW(match_score(test::chain(Element::C, 3), h, 1.0), Error);
}

using test::brute_force_matched;

TEST(MatchScore, BranchAndBoundEqualsExhaustive) {
  Rng rng = make_rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const test::MatchInstance in = test::random_match_instance(rng);
    const std::vector<FeatureGroup> &mf = in.mf;
    const std::vector<Vec3> &mp = in.mp;
    const Hypothesis &h = in.h;
    const double tol = in.tol;
    const int k = h.size();
    MatchResult r = match_score(mf, mp, h, tol);
    ASSERT_EQ(r.score.matched_pairs, brute_force_matched(mf, mp, h, tol))
        << "trial " << trial;
    ASSERT_EQ(r.score.total_pairs, k * (k - 1) / 2);

    // The returned mapping realizes the score.
    int realized = 0;
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b)
        if (r.mapping[a] && r.mapping[b]
            && std::abs((mp[*r.mapping[a]] - mp[*r.mapping[b]]).norm()
                        - (h.features[a].pos - h.features[b].pos).norm())
                   <= tol)
          ++realized;
    ASSERT_EQ(realized, r.score.matched_pairs);
  }
}

TEST(MatchScore, RigidMotionInvariantAndMonotoneInTolerance) {
  Rng rng = make_rng(77);
  int checked = 0;
  for (const MolGraph &m: gen_synthetic(30, 40, 8, 18)) {
    std::pair<Hypothesis, PharmacophoreGraph> drawn;
    try {
      drawn = sample_hypothesis(m, 1);
    } catch (const Error &) {
      continue;
    }
    MolGraph other = gen_synthetic(31 + checked, 1, 8, 18)[0];
    MolGraph moved = other;
    const Eigen::Matrix3d rot = test::random_rotation(rng);
    moved.coords = (other.coords * rot.transpose()).rowwise() + Vec3(3, -2, 7);

    int prev = std::numeric_limits<int>::max();
    for (double tol: { 100.0, 3.0, 1.0, 0.5, 0.1, 0.0 }) {
      const MatchScore a = match_score(other, drawn.first, tol).score;
      const MatchScore b = match_score(moved, drawn.first, tol).score;
      EXPECT_EQ(a.matched_pairs, b.matched_pairs);
      EXPECT_LE(a.matched_pairs, prev);
      prev = a.matched_pairs;
    }
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

TEST(MatchScore, InfiniteToleranceWithEnoughCandidates) {
  MolGraph m = test::benzene({ Element::O, Element::C, Element::N });
  Hypothesis h;
  h.features = { { FeatureType::kARO, Vec3(0, 0, 0) },
                 { FeatureType::kHBA, Vec3(10, 0, 0) },
                 { FeatureType::kHBD, Vec3(0, 10, 0) },
                 { FeatureType::kHYD, Vec3(0, 0, 10) } };
  EXPECT_TRUE(match_score(m, h, std::numeric_limits<double>::infinity())
                  .score.perfect());
}

TEST(Pmr, Counting) {
  EXPECT_DOUBLE_EQ(pmr({ { 1, 1 }, { 3, 3 }, { 1, 2 } }), 2.0 / 3.0);
  EXPECT_THROW(pmr({}), Error);
  EXPECT_THROW(ms_at_least({}, 0.8), Error);
  // [1.0, 5/6, 0.5] at threshold 0.8.
  EXPECT_DOUBLE_EQ(ms_at_least({ { 6, 6 }, { 5, 6 }, { 3, 6 } }, 0.8), 2.0 / 3.0);
  // Exact ratio: 4/5 sits on the threshold.
  EXPECT_DOUBLE_EQ(ms_at_least({ { 8, 10 } }, 0.8), 1.0);
}

TEST(JsonIo, HypothesisAndPharmacophore) {
  MolGraph m = gen_synthetic(6, 1, 14, 14)[0];
  auto [h, gp] = sample_hypothesis(m, 8);
  Hypothesis back = hypothesis_from_json(Json::parse(to_json(h).dump()));
  ASSERT_EQ(back.size(), h.size());
  for (int i = 0; i < h.size(); ++i) {
    EXPECT_EQ(back.features[i].type, h.features[i].type);
    EXPECT_EQ(back.features[i].pos, h.features[i].pos);
  }
  ASSERT_TRUE(back.source.has_value());
  const PharmacophoreGraph &g2 = *back.source;
  EXPECT_EQ(g2.mask_indices, gp.mask_indices);
  EXPECT_EQ(g2.atom_types, gp.atom_types);
  EXPECT_EQ(g2.charges, gp.charges);
  EXPECT_EQ(g2.feature_labels, gp.feature_labels);
  EXPECT_EQ(g2.coords, gp.coords);
  EXPECT_EQ(g2.bonds, gp.bonds);
  EXPECT_EQ(g2.feature_groups, gp.feature_groups);

  EXPECT_THROW(hypothesis_from_json(Json::parse(R"({"features":[{"type":"XYZ","pos":[0,0,0]}]})")),
               Error);
}

TEST(PharmacophoreGraph, CompactedRelabelsMask) {
  MolGraph m = test::benzene({ Element::O, Element::C });
  PharmacophoreGraph gp = extract_pharmacophore(m, { 0 });
  PharmacophoreGraph c = gp.compacted(9);
  EXPECT_EQ(c.num_atoms, 9);
  EXPECT_EQ(c.mask_indices, (std::vector<int> { 0, 1, 2, 3, 4, 5 }));
  EXPECT_EQ(c.feature_labels.rows(), 9);
  EXPECT_THROW(gp.compacted(5), Error);
}
}  // namespace
}  // namespace phdiff
