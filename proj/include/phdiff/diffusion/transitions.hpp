//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_DIFFUSION_TRANSITIONS_HPP_
#define PHDIFF_DIFFUSION_TRANSITIONS_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "phdiff/core.hpp"
#include "phdiff/diffusion/schedule.hpp"
#include "phdiff/molio/molgraph.hpp"

namespace phdiff {

// Marginal-preserving transitions for one categorical modality:
// Q_t = alpha_t I + (1 - alpha_t) 1 m^T, Qbar_t = Q_1 ... Q_t.
class CategoricalTransitions {
public:
  CategoricalTransitions() = default;

  CategoricalTransitions(const std::vector<double> &alpha, RowVector marginal)
      : m_(std::move(marginal)) {
    const int d = static_cast<int>(m_.size());
    if (d < 1 || (m_.array() < 0).any() || !m_.allFinite())
      throw Error(ErrorKind::kInvalidArgument,
                  "marginal must be a non-negative vector");
    const double total = m_.sum();
    if (!(total > 0))
      throw Error(ErrorKind::kInvalidArgument, "marginal has zero mass");
    m_ /= total;
    const int T = static_cast<int>(alpha.size()) - 1;
    q_.resize(T + 1);
    qbar_.resize(T + 1);
    q_[0] = qbar_[0] = Matrix::Identity(d, d);
    const Matrix ones_m = Vector::Ones(d) * m_;
    for (int t = 1; t <= T; ++t) {
      q_[t] = alpha[t] * Matrix::Identity(d, d) + (1.0 - alpha[t]) * ones_m;
      qbar_[t] = qbar_[t - 1] * q_[t];
    }
  }

  int classes() const { return static_cast<int>(m_.size()); }
  int T() const { return static_cast<int>(q_.size()) - 1; }
  const RowVector &marginal() const { return m_; }
  const Matrix &Q(int t) const { return q_[t]; }
  const Matrix &Qbar(int t) const { return qbar_[t]; }

private:
  RowVector m_;
  std::vector<Matrix> q_;
  std::vector<Matrix> qbar_;
};

struct Marginals {
  RowVector atom_types = RowVector::Constant(kNumElements, 1.0 / kNumElements);
  RowVector charges = RowVector::Constant(kNumCharges, 1.0 / kNumCharges);
  RowVector bonds = RowVector::Constant(kNumBondTypes, 1.0 / kNumBondTypes);
};

// Class frequencies over atoms and over ordered off-diagonal atom pairs.
inline Marginals estimate_marginals(const std::vector<MolGraph> &mols) {
  if (mols.empty())
    throw Error(ErrorKind::kEmptyDataset, "cannot estimate marginals from no molecules");
  Marginals m;
  m.atom_types.setZero();
  m.charges.setZero();
  m.bonds.setZero();
  for (const MolGraph &g: mols) {
    const int n = g.num_atoms();
    m.atom_types += g.atom_types.colwise().sum();
    m.charges += g.charges.colwise().sum();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j)
          m.bonds += g.bonds.row(pair_index(n, i, j));
  }
  for (RowVector *v: { &m.atom_types, &m.charges, &m.bonds }) {
    if (v->sum() <= 0)
      // single-atom molecules only: no pairs observed
      v->setConstant(1.0 / v->size());
    else
      *v /= v->sum();
  }
  return m;
}

class TransitionKit {
public:
  TransitionKit() = default;

  TransitionKit(const NoiseSchedule &sched, const Marginals &m)
      : marginals_(m),
        types_(sched[Modality::kAtomTypes].alpha, m.atom_types),
        charges_(sched[Modality::kCharges].alpha, m.charges),
        bonds_(sched[Modality::kBonds].alpha, m.bonds) { }

  const CategoricalTransitions &operator[](Modality mod) const {
    switch (mod) {
    case Modality::kAtomTypes: return types_;
    case Modality::kCharges: return charges_;
    case Modality::kBonds: return bonds_;
    default:
      throw Error(ErrorKind::kInvalidArgument, "coordinates have no transition kit");
    }
  }

  const Marginals &marginals() const { return marginals_; }

private:
  Marginals marginals_;
  CategoricalTransitions types_;
  CategoricalTransitions charges_;
  CategoricalTransitions bonds_;
};

// Row-wise posterior over the class at t-1 given the current class z_t and a
// predicted clean distribution p:
//   q(z_{t-1} | z_t) ∝ sum_x p(x) (z_t Q_t^T ⊙ x Qbar_{t-1})
//                    = (z_t Q_t^T) ⊙ (p Qbar_{t-1}).
inline Matrix discrete_posterior_rows(const Matrix &z_t, const Matrix &pred_x, int t,
                                      const CategoricalTransitions &kit) {
  if (t < 1 || t > kit.T())
    throw Error(ErrorKind::kTimestepOutOfRange,
                "timestep " + std::to_string(t) + " outside [1, "
                    + std::to_string(kit.T()) + "]");
  if (z_t.cols() != kit.classes() || pred_x.cols() != kit.classes()
      || z_t.rows() != pred_x.rows())
    throw Error(ErrorKind::kShapeMismatch, "posterior inputs disagree in shape");
  Matrix out = (z_t * kit.Q(t).transpose()).cwiseProduct(pred_x * kit.Qbar(t - 1));
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double norm = out.row(r).sum();
    if (!(norm > 0) || !std::isfinite(norm))
      throw Error(ErrorKind::kZeroNormalizer,
                  "posterior row " + std::to_string(r) + " has no support");
    out.row(r) /= norm;
  }
  return out;
}

inline RowVector discrete_posterior(const RowVector &z_t, const RowVector &pred_x,
                                    int t, const CategoricalTransitions &kit) {
  return discrete_posterior_rows(Matrix(z_t), Matrix(pred_x), t, kit).row(0);
}

}  // namespace phdiff

#endif  // PHDIFF_DIFFUSION_TRANSITIONS_HPP_
