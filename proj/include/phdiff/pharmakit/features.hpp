//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_PHARMAKIT_FEATURES_HPP_
#define PHDIFF_PHARMAKIT_FEATURES_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phdiff/core.hpp"
#include "phdiff/molio/chem.hpp"
#include "phdiff/molio/molgraph.hpp"

namespace phdiff {

enum class FeatureType : int {
  kNone = 0,
  kHBA,
  kHBD,
  kARO,
  kHYD,
  kPOS,
  kNEG,
};

inline constexpr int kNumFeatureTypes = 7;

inline std::string_view feature_name(FeatureType t) {
  static constexpr std::array<std::string_view, kNumFeatureTypes> kNames {
    "NONE", "HBA", "HBD", "ARO", "HYD", "POS", "NEG"
  };
  return kNames[static_cast<int>(t)];
}

inline std::optional<FeatureType> parse_feature(std::string_view name) {
  for (int i = 0; i < kNumFeatureTypes; ++i)
    if (feature_name(static_cast<FeatureType>(i)) == name)
      return static_cast<FeatureType>(i);
  return std::nullopt;
}

// Labeling priority when an atom belongs to several selected groups;
// higher wins.
inline int feature_priority(FeatureType t) {
  switch (t) {
  case FeatureType::kARO: return 6;
  case FeatureType::kHBD: return 5;
  case FeatureType::kHBA: return 4;
  case FeatureType::kPOS: return 3;
  case FeatureType::kNEG: return 2;
  case FeatureType::kHYD: return 1;
  case FeatureType::kNone: break;
  }
  return 0;
}

struct FeatureGroup {
  FeatureType type;
  std::vector<int> atoms;

  friend bool operator==(const FeatureGroup &, const FeatureGroup &) = default;
};

inline Vec3 group_centroid(const MolGraph &m, const FeatureGroup &g) {
  Vec3 c = Vec3::Zero();
  for (int a: g.atoms)
    c += m.position(a);
  return c / static_cast<double>(g.atoms.size());
}

/// Rule-based feature perception. Aromatic ring groups come first (ring
/// order), then single-atom groups in atom order as HBA, HBD, HYD, POS, NEG.
inline std::vector<FeatureGroup> perceive_features(const MolGraph &m) {
  std::vector<FeatureGroup> groups;
  for (auto &ring: aromatic_rings(m))
    groups.push_back({ FeatureType::kARO, std::move(ring) });

  const int n = m.num_atoms();
  std::vector<int> ring_bonds = ring_bond_counts(m);
  for (int i = 0; i < n; ++i) {
    const Element e = m.element(i);
    const int charge = m.charge(i);
    const bool polar = e == Element::N || e == Element::O;
    bool aromatic = false;
    bool all_carbon = true;
    for (int j: m.neighbors(i)) {
      aromatic |= m.bond(i, j) == BondType::kAromatic;
      all_carbon &= m.element(j) == Element::C;
    }

    if (polar && charge <= 0
        && !(e == Element::N && aromatic && ring_bonds[i] == 3))
      groups.push_back({ FeatureType::kHBA, { i } });
    if (polar && implicit_hydrogens(m, i) >= 1)
      groups.push_back({ FeatureType::kHBD, { i } });
    if (e == Element::C && all_carbon)
      groups.push_back({ FeatureType::kHYD, { i } });
    if (charge == 1)
      groups.push_back({ FeatureType::kPOS, { i } });
    if (charge == -1)
      groups.push_back({ FeatureType::kNEG, { i } });
  }
  return groups;
}

/// Sub-molecular conditioning graph: the atoms behind the selected features
/// with their types, charges, positions and the bonds among them.
struct PharmacophoreGraph {
  int num_atoms = 0;              // host molecule size n
  std::vector<int> mask_indices;  // sorted, within [0, n)
  Matrix atom_types;              // |M| x d
  Matrix charges;                 // |M| x a
  Matrix feature_labels;          // n x e, NONE outside the mask
  Coords coords;                  // |M| x 3
  Matrix bonds;                   // |M|*|M| x b, pair-row layout
  std::vector<FeatureGroup> feature_groups;

  int mask_size() const { return static_cast<int>(mask_indices.size()); }

  bool empty() const { return mask_indices.empty(); }

  // Rows of F_p belonging to the masked atoms (|M| x e).
  Matrix masked_features() const {
    Matrix f(mask_size(), kNumFeatureTypes);
    for (int k = 0; k < mask_size(); ++k)
      f.row(k) = feature_labels.row(mask_indices[k]);
    return f;
  }

  // Same pharmacophore hosted in an n-atom graph with the masked atoms
  // relabeled to 0..|M|-1 (order preserved).
  PharmacophoreGraph compacted(int n) const {
    if (n < mask_size())
      throw Error(ErrorKind::kTooFewAtoms,
                  "host graph of " + std::to_string(n)
                      + " atoms cannot hold " + std::to_string(mask_size())
                      + " pharmacophore atoms");
    PharmacophoreGraph gp = *this;
    gp.num_atoms = n;
    gp.feature_labels = Matrix::Zero(n, kNumFeatureTypes);
    gp.feature_labels.col(0).setOnes();
    std::vector<int> remap(num_atoms, -1);
    for (int k = 0; k < mask_size(); ++k) {
      remap[mask_indices[k]] = k;
      gp.mask_indices[k] = k;
      gp.feature_labels.row(k) = feature_labels.row(mask_indices[k]);
    }
    for (FeatureGroup &g: gp.feature_groups)
      for (int &a: g.atoms)
        a = remap[a];
    return gp;
  }

  static PharmacophoreGraph empty_for(int n) {
    PharmacophoreGraph gp;
    gp.num_atoms = n;
    gp.atom_types = Matrix::Zero(0, kNumElements);
    gp.charges = Matrix::Zero(0, kNumCharges);
    gp.feature_labels = Matrix::Zero(n, kNumFeatureTypes);
    gp.feature_labels.col(0).setOnes();
    gp.coords = Coords::Zero(0, 3);
    gp.bonds = Matrix::Zero(0, kNumBondTypes);
    return gp;
  }
};

inline PharmacophoreGraph extract_pharmacophore(
    const MolGraph &m, const std::vector<FeatureGroup> &groups,
    const std::vector<int> &selection) {
  if (selection.empty())
    throw Error(ErrorKind::kEmptySelection, "no feature group selected");
  const int n = m.num_atoms();
  PharmacophoreGraph gp = PharmacophoreGraph::empty_for(n);

  std::set<int> atoms;
  std::vector<int> best(n, 0);
  for (int s: selection) {
    if (s < 0 || s >= static_cast<int>(groups.size()))
      throw Error(ErrorKind::kInvalidArgument,
                  "feature group index " + std::to_string(s) + " out of range");
    const FeatureGroup &g = groups[s];
    if (g.atoms.empty())
      throw Error(ErrorKind::kInvalidArgument, "empty feature group");
    gp.feature_groups.push_back(g);
    for (int a: g.atoms) {
      if (a < 0 || a >= n)
        throw Error(ErrorKind::kMaskOutOfRange, "feature atom out of range");
      atoms.insert(a);
      if (feature_priority(g.type) > feature_priority(static_cast<FeatureType>(best[a])))
        best[a] = static_cast<int>(g.type);
    }
  }

  gp.mask_indices.assign(atoms.begin(), atoms.end());
  const int k = gp.mask_size();
  gp.atom_types.resize(k, kNumElements);
  gp.charges.resize(k, kNumCharges);
  gp.coords.resize(k, 3);
  gp.bonds.resize(static_cast<Eigen::Index>(k) * k, kNumBondTypes);
  for (int p = 0; p < k; ++p) {
    const int i = gp.mask_indices[p];
    gp.atom_types.row(p) = m.atom_types.row(i);
    gp.charges.row(p) = m.charges.row(i);
    gp.coords.row(p) = m.coords.row(i);
    gp.feature_labels.row(i).setZero();
    gp.feature_labels(i, best[i]) = 1.0;
    for (int q = 0; q < k; ++q)
      gp.bonds.row(pair_index(k, p, q)) =
          m.bonds.row(pair_index(n, i, gp.mask_indices[q]));
  }
  return gp;
}

inline PharmacophoreGraph extract_pharmacophore(
    const MolGraph &m, const std::vector<int> &selection) {
  return extract_pharmacophore(m, perceive_features(m), selection);
}

struct HypothesisFeature {
  FeatureType type;
  Vec3 pos;
};

struct Hypothesis {
  std::vector<HypothesisFeature> features;
  double tol = 1.0;
  std::optional<PharmacophoreGraph> source;

  int size() const { return static_cast<int>(features.size()); }

  // k in [3, 7], finite positions, distinct centroids.
  bool well_formed() const {
    if (size() < 3 || size() > 7)
      return false;
    for (int i = 0; i < size(); ++i) {
      if (!features[i].pos.allFinite())
        return false;
      for (int j = i + 1; j < size(); ++j)
        if ((features[i].pos - features[j].pos).norm() <= 0.0)
          return false;
    }
    return true;
  }
};

/// Draws k ~ U{3..min(7, D)} features (D = number of distinct feature
/// centroids) without replacement and builds the matching conditioning
/// graph. Groups whose centroid coincides with an already drawn one (e.g.
/// HBA and HBD on one oxygen) are skipped so hypothesis points stay distinct.
inline std::pair<Hypothesis, PharmacophoreGraph>
sample_hypothesis(const MolGraph &m, std::uint64_t seed) {
  std::vector<FeatureGroup> groups = perceive_features(m);
  std::vector<Vec3> centroids;
  for (const FeatureGroup &g: groups)
    centroids.push_back(group_centroid(m, g));

  auto coincides = [&](const std::vector<int> &chosen, int g) {
    for (int c: chosen)
      if ((centroids[c] - centroids[g]).norm() < 1e-6)
        return true;
    return false;
  };
  std::vector<int> sites;
  for (int g = 0; g < static_cast<int>(groups.size()); ++g)
    if (!coincides(sites, g))
      sites.push_back(g);
  const int distinct = static_cast<int>(sites.size());
  if (distinct < 3)
    throw Error(ErrorKind::kTooFewFeatures,
                "molecule has " + std::to_string(distinct)
                    + " distinct feature sites, need at least 3");

  Rng rng = make_rng(seed, 0x68797000ULL);
  const int k = static_cast<int>(uniform_int(rng, 3, std::min(7, distinct)));
  std::vector<int> order(groups.size());
  for (int i = 0; i < static_cast<int>(order.size()); ++i)
    order[i] = i;
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i)
    std::swap(order[i], order[uniform_int(rng, 0, i)]);

  std::vector<int> chosen;
  for (int g: order) {
    if (static_cast<int>(chosen.size()) == k)
      break;
    if (!coincides(chosen, g))
      chosen.push_back(g);
  }
  std::sort(chosen.begin(), chosen.end());

  Hypothesis h;
  for (int g: chosen)
    h.features.push_back({ groups[g].type, centroids[g] });
  PharmacophoreGraph gp = extract_pharmacophore(m, groups, chosen);
  h.source = gp;
  return { std::move(h), std::move(gp) };
}

/// Match score as an exact ratio of hypothesis pairs.
struct MatchScore {
  int matched_pairs = 0;
  int total_pairs = 1;

  double value() const {
    return static_cast<double>(matched_pairs) / static_cast<double>(total_pairs);
  }
  bool perfect() const { return matched_pairs == total_pairs; }
};

struct MatchResult {
  MatchScore score;
  // Per hypothesis feature: index into the molecule's perceived features,
  // or nullopt when left unmatched.
  std::vector<std::optional<int>> mapping;
  std::vector<FeatureGroup> molecule_features;
};

namespace match_internal {
struct Problem {
  int k;
  std::vector<std::vector<int>> candidates;  // per hypothesis feature
  std::vector<std::vector<double>> hyp_dist;
  std::vector<std::vector<double>> mol_dist;
  double tol;

  bool pair_ok(int i, int fi, int j, int fj) const {
    return std::abs(mol_dist[fi][fj] - hyp_dist[i][j]) <= tol;
  }
};

inline Problem build(const std::vector<Vec3> &mol_pos,
                     const std::vector<FeatureType> &mol_types,
                     const Hypothesis &h, double tol) {
  Problem p;
  p.k = h.size();
  p.tol = tol;
  p.candidates.resize(p.k);
  for (int i = 0; i < p.k; ++i)
    for (int f = 0; f < static_cast<int>(mol_types.size()); ++f)
      if (mol_types[f] == h.features[i].type)
        p.candidates[i].push_back(f);
  p.hyp_dist.assign(p.k, std::vector<double>(p.k, 0.0));
  for (int i = 0; i < p.k; ++i)
    for (int j = 0; j < p.k; ++j)
      p.hyp_dist[i][j] = (h.features[i].pos - h.features[j].pos).norm();
  const int nf = static_cast<int>(mol_pos.size());
  p.mol_dist.assign(nf, std::vector<double>(nf, 0.0));
  for (int a = 0; a < nf; ++a)
    for (int b = 0; b < nf; ++b)
      p.mol_dist[a][b] = (mol_pos[a] - mol_pos[b]).norm();
  return p;
}
}  // namespace match_internal

/// Best pair-consistency over injective, type-respecting partial
/// assignments of hypothesis features to molecule features. Exact
/// depth-first branch and bound; the bound counts every pair that still
/// involves an undecided feature.
inline MatchResult match_score(const std::vector<FeatureGroup> &mol_features,
                               const std::vector<Vec3> &mol_centroids,
                               const Hypothesis &h, double tol) {
  const int k = h.size();
  if (k < 2)
    throw Error(ErrorKind::kDegenerateHypothesis,
                "hypothesis needs at least 2 features");
  std::vector<FeatureType> types;
  for (const FeatureGroup &g: mol_features)
    types.push_back(g.type);
  const match_internal::Problem p =
      match_internal::build(mol_centroids, types, h, tol);
  const int total = k * (k - 1) / 2;

  std::vector<int> assign(k, -1), best_assign(k, -1);
  std::vector<bool> used(mol_features.size(), false);
  int best = -1;

  auto search = [&](auto &&self, int depth, int matched) -> void {
    if (best == total)
      return;
    if (depth == k) {
      if (matched > best) {
        best = matched;
        best_assign = assign;
      }
      return;
    }
    const int open_pairs = total - depth * (depth - 1) / 2;
    if (matched + open_pairs <= best)
      return;
    for (int f: p.candidates[depth]) {
      if (used[f])
        continue;
      int gain = 0;
      for (int i = 0; i < depth; ++i)
        if (assign[i] >= 0 && p.pair_ok(i, assign[i], depth, f))
          ++gain;
      assign[depth] = f;
      used[f] = true;
      self(self, depth + 1, matched + gain);
      used[f] = false;
      assign[depth] = -1;
    }
    self(self, depth + 1, matched);
  };
  search(search, 0, 0);

  MatchResult r;
  r.score = { best, total };
  r.mapping.resize(k);
  for (int i = 0; i < k; ++i)
    if (best_assign[i] >= 0)
      r.mapping[i] = best_assign[i];
  r.molecule_features = mol_features;
  return r;
}

inline MatchResult match_score(const MolGraph &m, const Hypothesis &h,
                               double tol) {
  std::vector<FeatureGroup> groups = perceive_features(m);
  std::vector<Vec3> centroids;
  for (const FeatureGroup &g: groups)
    centroids.push_back(group_centroid(m, g));
  return match_score(groups, centroids, h, tol);
}

/// Fraction of perfect matches (MS = 1), counted on exact ratios.
inline double pmr(const std::vector<MatchScore> &scores) {
  if (scores.empty())
    throw Error(ErrorKind::kEmptyInput, "no match scores");
  const auto perfect = std::count_if(scores.begin(), scores.end(),
                                     [](const MatchScore &s) { return s.perfect(); });
  return static_cast<double>(perfect) / static_cast<double>(scores.size());
}

inline double ms_at_least(const std::vector<MatchScore> &scores,
                          double threshold) {
  if (scores.empty())
    throw Error(ErrorKind::kEmptyInput, "no match scores");
  // matched / total >= threshold, compared without dividing.
  const auto hits = std::count_if(
      scores.begin(), scores.end(), [&](const MatchScore &s) {
        return static_cast<double>(s.matched_pairs)
               >= threshold * static_cast<double>(s.total_pairs) - 1e-12;
      });
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

inline double ms_mean(const std::vector<MatchScore> &scores) {
  if (scores.empty())
    throw Error(ErrorKind::kEmptyInput, "no match scores");
  double sum = 0;
  for (const MatchScore &s: scores)
    sum += s.value();
  return sum / static_cast<double>(scores.size());
}

}  // namespace phdiff

#endif  // PHDIFF_PHARMAKIT_FEATURES_HPP_
