//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_DIFFUSION_PROCESS_HPP_
#define PHDIFF_DIFFUSION_PROCESS_HPP_

#include <cmath>
#include <cstdint>
#include <string>

#include "phdiff/core.hpp"
#include "phdiff/diffusion/schedule.hpp"
#include "phdiff/diffusion/transitions.hpp"
#include "phdiff/molio/molgraph.hpp"

namespace phdiff {

inline Coords centered(const Coords &x) {
  if (x.rows() == 0)
    return x;
  return x.rowwise() - x.colwise().mean();
}

// Standard normal n x 3 draw projected onto the zero center-of-mass subspace.
inline Coords sample_com_noise(int n, Rng &rng) {
  if (n < 1)
    throw Error(ErrorKind::kInvalidArgument, "noise needs at least one atom");
  Coords eps(n, 3);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k)
      eps(i, k) = standard_normal(rng);
  return centered(eps);
}

inline Coords sample_com_noise(int n, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x636f6d);
  return sample_com_noise(n, rng);
}

inline int sample_categorical(const Eigen::Ref<const RowVector> &p, Rng &rng) {
  const double total = p.sum();
  double u = uniform_real(rng) * total;
  const int d = static_cast<int>(p.size());
  for (int k = 0; k < d; ++k) {
    if (u < p[k])
      return k;
    u -= p[k];
  }
  // Round-off: fall back to the last class with mass.
  for (int k = d - 1; k >= 0; --k)
    if (p[k] > 0)
      return k;
  return d - 1;
}

namespace diffusion_internal {
inline Matrix sample_rows(const Matrix &probs, Rng &rng) {
  Matrix out = Matrix::Zero(probs.rows(), probs.cols());
  for (Eigen::Index r = 0; r < probs.rows(); ++r)
    out(r, sample_categorical(probs.row(r), rng)) = 1.0;
  return out;
}

// Upper triangle sampled, mirrored; diagonal fixed to "no bond".
inline Matrix sample_bond_rows(const Matrix &probs, int n, Rng &rng) {
  Matrix out = Matrix::Zero(probs.rows(), probs.cols());
  for (int i = 0; i < n; ++i) {
    out(pair_index(n, i, i), 0) = 1.0;
    for (int j = i + 1; j < n; ++j) {
      const int k = sample_categorical(probs.row(pair_index(n, i, j)), rng);
      out(pair_index(n, i, j), k) = 1.0;
      out(pair_index(n, j, i), k) = 1.0;
    }
  }
  return out;
}

// Closed-form q(G_t | G_0); t = 0 is the identity.
inline NoisyGraph apply_noise(const NoisyGraph &g, int t, const NoiseSchedule &sched,
                              const TransitionKit &kit, Rng &rng) {
  const int n = g.num_atoms();
  NoisyGraph out;
  out.t = t;
  const double ab = sched.alpha_bar(Modality::kCoords, t);
  const double sb = sched.sigma_bar(Modality::kCoords, t);
  out.coords = ab * centered(g.coords) + sb * sample_com_noise(n, rng);
  out.atom_types =
      sample_rows(g.atom_types * kit[Modality::kAtomTypes].Qbar(t), rng);
  out.charges = sample_rows(g.charges * kit[Modality::kCharges].Qbar(t), rng);
  out.bonds = sample_bond_rows(g.bonds * kit[Modality::kBonds].Qbar(t), n, rng);
  return out;
}
}  // namespace diffusion_internal

inline NoisyGraph forward_noise(const NoisyGraph &g, int t, const NoiseSchedule &sched,
                                const TransitionKit &kit, Rng &rng) {
  sched.check_timestep(t);
  return diffusion_internal::apply_noise(g, t, sched, kit, rng);
}

inline NoisyGraph forward_noise(const MolGraph &g, int t, const NoiseSchedule &sched,
                                const TransitionKit &kit, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0x6677);
  return forward_noise(as_noisy(g), t, sched, kit, rng);
}

// One reverse step of the zero-CoM Gaussian chain using the predicted clean
// coordinates in place of x. With s = t - 1:
//   sigma^2_{t|s} = sigma_bar_t^2 - alpha_t^2 sigma_bar_s^2
//   mu = alpha_t sigma_bar_s^2 / sigma_bar_t^2 z_t
//        + alpha_bar_s sigma^2_{t|s} / sigma_bar_t^2 x
//   var = sigma^2_{t|s} sigma_bar_s^2 / sigma_bar_t^2
inline Coords gaussian_posterior_step(const Coords &z_t, const Coords &pred_r, int t,
                                      const NoiseSchedule &sched, Rng &rng) {
  sched.check_timestep(t);
  if (z_t.rows() != pred_r.rows() || z_t.cols() != 3 || pred_r.cols() != 3)
    throw Error(ErrorKind::kShapeMismatch, "coordinate shapes disagree");
  const ModalitySchedule &ms = sched[Modality::kCoords];
  const double a_t = ms.alpha[t];
  const double sb_t2 = ms.sigma_bar[t] * ms.sigma_bar[t];
  const double sb_s2 = ms.sigma_bar[t - 1] * ms.sigma_bar[t - 1];
  const double s_ts2 = std::max(0.0, sb_t2 - a_t * a_t * sb_s2);
  Coords mu = (a_t * sb_s2 / sb_t2) * z_t
              + (ms.alpha_bar[t - 1] * s_ts2 / sb_t2) * pred_r;
  mu = centered(mu);
  if (t == 1)
    return mu;
  const double sd = std::sqrt(s_ts2 * sb_s2 / sb_t2);
  return centered(mu + sd * sample_com_noise(static_cast<int>(z_t.rows()), rng));
}

inline Coords gaussian_posterior_step(const Coords &z_t, const Coords &pred_r, int t,
                                      const NoiseSchedule &sched, std::uint64_t seed) {
  Rng rng = make_rng(seed, static_cast<std::uint64_t>(t));
  return gaussian_posterior_step(z_t, pred_r, t, sched, rng);
}

}  // namespace phdiff

#endif  // PHDIFF_DIFFUSION_PROCESS_HPP_
