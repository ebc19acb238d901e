//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_EVALSUITE_METRICS_HPP_
#define PHDIFF_EVALSUITE_METRICS_HPP_

#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "phdiff/core.hpp"
#include "phdiff/molio/chem.hpp"
#include "phdiff/molio/molgraph.hpp"

namespace phdiff {

// Exact count ratio; an empty denominator reads as 0.
struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 0;

  double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / den; }

  // Equality of the rational values, not of the representation.
  friend bool same_value(const Ratio &a, const Ratio &b) {
    if (a.den == 0 || b.den == 0)
      return a.den == b.den || a.value() == b.value();
    return a.num * b.den == b.num * a.den;
  }
};

using HashIndex = std::unordered_set<std::uint64_t>;

inline HashIndex build_hash_index(const std::vector<MolGraph> &mols) {
  HashIndex idx;
  for (const MolGraph &m: mols)
    idx.insert(canonical_hash(m));
  return idx;
}

namespace eval_internal {
inline void require_nonempty(const std::vector<MolGraph> &samples) {
  if (samples.empty())
    throw Error(ErrorKind::kEmptyInput, "no molecules to evaluate");
}

inline HashIndex valid_hashes(const std::vector<MolGraph> &samples, std::int64_t *valid) {
  HashIndex h;
  *valid = 0;
  for (const MolGraph &m: samples)
    if (check_validity(m)) {
      ++*valid;
      h.insert(canonical_hash(m));
    }
  return h;
}
}  // namespace eval_internal

inline Ratio validity(const std::vector<MolGraph> &samples) {
  eval_internal::require_nonempty(samples);
  Ratio r { 0, static_cast<std::int64_t>(samples.size()) };
  for (const MolGraph &m: samples)
    r.num += check_validity(m) ? 1 : 0;
  return r;
}

// Distinct canonical identities among the valid molecules.
inline Ratio uniqueness(const std::vector<MolGraph> &samples) {
  eval_internal::require_nonempty(samples);
  std::int64_t valid = 0;
  const HashIndex h = eval_internal::valid_hashes(samples, &valid);
  return { static_cast<std::int64_t>(h.size()), valid };
}

// Unique valid identities absent from the training index.
inline Ratio novelty(const std::vector<MolGraph> &samples, const HashIndex &train) {
  eval_internal::require_nonempty(samples);
  std::int64_t valid = 0;
  const HashIndex h = eval_internal::valid_hashes(samples, &valid);
  Ratio r { 0, static_cast<std::int64_t>(h.size()) };
  for (std::uint64_t x: h)
    r.num += train.count(x) ? 0 : 1;
  return r;
}

inline double validity_rate(const std::vector<MolGraph> &s) { return validity(s).value(); }
inline double uniqueness_rate(const std::vector<MolGraph> &s) { return uniqueness(s).value(); }
inline double novelty_rate(const std::vector<MolGraph> &s, const HashIndex &train) {
  return novelty(s, train).value();
}

// One minus the mean Tanimoto similarity over unordered pairs.
inline double diversity_of(const std::vector<Fingerprint> &fps) {
  if (fps.size() < 2)
    throw Error(ErrorKind::kTooFewMolecules, "diversity needs at least two molecules");
  double sum = 0;
  std::int64_t pairs = 0;
  for (size_t i = 0; i < fps.size(); ++i)
    for (size_t j = i + 1; j < fps.size(); ++j) {
      sum += tanimoto(fps[i], fps[j]);
      ++pairs;
    }
  return 1.0 - sum / static_cast<double>(pairs);
}

// Computed over the valid molecules.
inline double diversity(const std::vector<MolGraph> &samples) {
  std::vector<Fingerprint> fps;
  for (const MolGraph &m: samples)
    if (check_validity(m))
      fps.push_back(fingerprint(m));
  return diversity_of(fps);
}

struct Physchem {
  double mw = 0.0;     // daltons, implicit hydrogens included
  int ring_count = 0;  // cycle rank
};

inline Physchem physchem(const MolGraph &m) {
  const ElementTable &et = ElementTable::instance();
  Physchem p;
  for (int i = 0; i < m.num_atoms(); ++i)
    p.mw += et.info(m.element(i)).mass
            + implicit_hydrogens(m, i) * ElementTable::kHydrogenMass;
  int components = 0;
  connected_components(m, &components);
  p.ring_count = static_cast<int>(m.bond_list().size()) - m.num_atoms() + components;
  return p;
}

struct Summary {
  double mean = 0.0;
  double se = 0.0;  // sample standard deviation / sqrt(n); 0 for one value
  int n = 0;
};

inline Summary summarize(const std::vector<double> &values) {
  if (values.empty())
    throw Error(ErrorKind::kEmptyInput, "nothing to summarize");
  Summary s;
  s.n = static_cast<int>(values.size());
  for (double v: values)
    s.mean += v;
  s.mean /= s.n;
  if (s.n > 1) {
    double ss = 0;
    for (double v: values)
      ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / (s.n - 1)) / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

}  // namespace phdiff

#endif  // PHDIFF_EVALSUITE_METRICS_HPP_
