//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_TRAINER_LOSS_HPP_
#define PHDIFF_TRAINER_LOSS_HPP_

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "phdiff/core.hpp"
#include "phdiff/denoiser/autodiff.hpp"
#include "phdiff/denoiser/model.hpp"
#include "phdiff/molio/molgraph.hpp"
#include "phdiff/pharmakit/features.hpp"

namespace phdiff {

enum class LossTerm : int {
  kCoords = 0,
  kAtomTypes,
  kCharges,
  kBonds,
  kPharmCoords,
  kPharmAtomTypes,
  kPharmCharges,
};

inline constexpr int kNumLossTerms = 7;
inline constexpr int kNumMolecularTerms = 4;

inline std::string_view loss_term_name(LossTerm term) {
  static constexpr std::array<std::string_view, kNumLossTerms> names = {
    "coords", "atom_types", "charges", "bonds", "pharm_coords", "pharm_atom_types", "pharm_charges",
  };
  return names[static_cast<int>(term)];
}

struct LossWeights {
  std::array<double, kNumLossTerms> w = { 3.0, 0.4, 1.0, 2.0, 1.0, 1.0, 1.0 };

  double &operator[](LossTerm term) { return w[static_cast<int>(term)]; }
  double operator[](LossTerm term) const { return w[static_cast<int>(term)]; }

  void validate() const {
    bool any = false;
    for (int k = 0; k < kNumLossTerms; ++k) {
      if (!(w[k] >= 0.0) || !std::isfinite(w[k]))
        throw Error(ErrorKind::kInvalidArgument,
                    "loss weight " + std::string(loss_term_name(LossTerm(k)))
                        + " must be finite and nonnegative");
      if (k < kNumMolecularTerms && w[k] > 0.0)
        any = true;
    }
    if (!any)
      throw Error(ErrorKind::kInvalidArgument, "at least one molecular loss weight must be positive");
  }

  static LossWeights molecular_only() {
    LossWeights lw;
    lw[LossTerm::kPharmCoords] = 0.0;
    lw[LossTerm::kPharmAtomTypes] = 0.0;
    lw[LossTerm::kPharmCharges] = 0.0;
    return lw;
  }
};

struct LossResult {
  Var total;
  std::array<double, kNumLossTerms> terms {};  // unweighted term values

  double value() const { return total.value()(0, 0); }
  double operator[](LossTerm term) const { return terms[static_cast<int>(term)]; }
};

namespace loss_internal {

// Mean over rows of the cross-entropy against one-hot targets; rows of
// `target` that are all zero contribute nothing.
inline Var cross_entropy(Var logits, const Matrix &target, double denom) {
  Tape &t = *logits.tape;
  Var ls = ad::log_softmax_rows(logits);
  return ad::scale(ad::sum_all(ad::mul(t.constant(target), ls)), -1.0 / denom);
}

inline Var squared_distance(Var pred, const Matrix &target, double denom) {
  Tape &t = *pred.tape;
  Var d = ad::sub(pred, t.constant(target));
  return ad::scale(ad::sum_all(ad::mul(d, d)), 1.0 / denom);
}

}  // namespace loss_internal

// Composite denoising loss. Molecular terms average over all atoms (bonds
// over ordered off-diagonal pairs); pharmacophore terms average over masked
// atoms and vanish when the mask is empty. `target` must be centered and
// `gp` must live in the same frame.
inline LossResult loss(const DenoiserVars &pred, const MolGraph &target,
                       const PharmacophoreGraph &gp, const LossWeights &weights) {
  using namespace loss_internal;
  weights.validate();
  const int n = target.num_atoms();
  if (n == 0)
    throw Error(ErrorKind::kShapeMismatch, "empty target");
  const Eigen::Index nn = static_cast<Eigen::Index>(n) * n;
  if (pred.atom_logits.rows() != n || pred.atom_logits.cols() != kNumElements
      || pred.charge_logits.rows() != n || pred.charge_logits.cols() != kNumCharges
      || pred.coords.rows() != n || pred.coords.cols() != 3
      || pred.bond_logits.rows() != nn || pred.bond_logits.cols() != kNumBondTypes
      || target.bonds.rows() != nn)
    throw Error(ErrorKind::kShapeMismatch, "prediction and target shapes disagree");
  if (gp.num_atoms != n)
    throw Error(ErrorKind::kShapeMismatch, "pharmacophore is hosted in a different graph");
  Tape &t = *pred.coords.tape;

  std::array<Var, kNumLossTerms> terms;
  terms[0] = squared_distance(pred.coords, target.coords, n);
  terms[1] = cross_entropy(pred.atom_logits, target.atom_types, n);
  terms[2] = cross_entropy(pred.charge_logits, target.charges, n);
  if (n > 1) {
    Matrix off = target.bonds;
    for (int i = 0; i < n; ++i)
      off.row(pair_index(n, i, i)).setZero();
    terms[3] = cross_entropy(pred.bond_logits, off, static_cast<double>(n) * (n - 1));
  } else {
    terms[3] = t.constant(Matrix::Zero(1, 1));
  }

  const int m = gp.mask_size();
  if (m > 0) {
    terms[4] = squared_distance(ad::gather_rows(pred.coords, gp.mask_indices), gp.coords, m);
    terms[5] = cross_entropy(ad::gather_rows(pred.atom_logits, gp.mask_indices), gp.atom_types, m);
    terms[6] = cross_entropy(ad::gather_rows(pred.charge_logits, gp.mask_indices), gp.charges, m);
  } else {
    for (int k = 4; k < kNumLossTerms; ++k)
      terms[k] = t.constant(Matrix::Zero(1, 1));
  }

  std::vector<std::pair<double, Var>> weighted;
  LossResult out;
  for (int k = 0; k < kNumLossTerms; ++k) {
    out.terms[k] = terms[k].value()(0, 0);
    if (weights.w[k] != 0.0)
      weighted.emplace_back(weights.w[k], terms[k]);
  }
  out.total = ad::add_scalar_terms(weighted);
  return out;
}

// Evaluation on plain outputs; the returned Var lives on `tape`.
inline LossResult loss(Tape &tape, const DenoiserOutput &pred, const MolGraph &target,
                       const PharmacophoreGraph &gp, const LossWeights &weights) {
  DenoiserVars v;
  v.atom_logits = tape.constant(pred.atom_logits);
  v.charge_logits = tape.constant(pred.charge_logits);
  v.coords = tape.constant(pred.coords);
  v.bond_logits = tape.constant(pred.bond_logits);
  return loss(v, target, gp, weights);
}

}  // namespace phdiff

#endif  // PHDIFF_TRAINER_LOSS_HPP_
