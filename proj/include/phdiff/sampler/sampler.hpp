//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_SAMPLER_SAMPLER_HPP_
#define PHDIFF_SAMPLER_SAMPLER_HPP_

#include <algorithm>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "phdiff/core.hpp"
#include "phdiff/denoiser/autodiff.hpp"
#include "phdiff/denoiser/conditioning.hpp"
#include "phdiff/denoiser/model.hpp"
#include "phdiff/diffusion/process.hpp"
#include "phdiff/diffusion/schedule.hpp"
#include "phdiff/diffusion/transitions.hpp"
#include "phdiff/molio/molgraph.hpp"
#include "phdiff/pharmakit/features.hpp"
#include "phdiff/trainer/checkpoint.hpp"

namespace phdiff {

// Atoms `kept` of m (in the given order) with the bonds among them.
inline MolGraph induced_subgraph(const MolGraph &m, const std::vector<int> &kept) {
  const int n = m.num_atoms();
  std::vector<int> where(n, -1);
  std::vector<Element> elements;
  std::vector<int> charges;
  Coords coords(static_cast<Eigen::Index>(kept.size()), 3);
  for (size_t k = 0; k < kept.size(); ++k) {
    where[kept[k]] = static_cast<int>(k);
    elements.push_back(m.element(kept[k]));
    charges.push_back(m.charge(kept[k]));
    coords.row(static_cast<Eigen::Index>(k)) = m.coords.row(kept[k]);
  }
  std::vector<BondRecord> bonds;
  for (const BondRecord &b: m.bond_list())
    if (where[b.a] >= 0 && where[b.b] >= 0)
      bonds.push_back({ where[b.a], where[b.b], b.type });
  return MolGraph::create(elements, charges, coords, bonds, m.name);
}

struct Fragment {
  MolGraph mol;
  int dropped_mask_atoms = 0;
  std::vector<int> kept;  // indices into the input, ascending
};

// Largest connected component. Ties prefer the component holding more of
// the `masked` atoms, then the one containing the lowest atom index.
inline Fragment largest_fragment(const MolGraph &m, const std::vector<int> &masked = {}) {
  int nc = 0;
  const std::vector<int> comp = connected_components(m, &nc);
  std::vector<int> size(nc, 0), hits(nc, 0);
  for (int c: comp)
    ++size[c];
  for (int i: masked)
    ++hits[comp[i]];
  int best = 0;
  for (int c = 1; c < nc; ++c)
    if (size[c] > size[best] || (size[c] == size[best] && hits[c] > hits[best]))
      best = c;
  Fragment f;
  for (int i = 0; i < m.num_atoms(); ++i)
    if (comp[i] == best)
      f.kept.push_back(i);
  f.dropped_mask_atoms = static_cast<int>(masked.size()) - hits[best];
  f.mol = nc == 1 ? m : induced_subgraph(m, f.kept);
  return f;
}

struct GeneratedMolecule {
  MolGraph raw;                      // decoded, before fragment filtering
  MolGraph mol;                      // largest fragment of raw
  int dropped_mask_atoms = 0;
  std::vector<int> kept;             // raw indices retained in mol
  PharmacophoreGraph conditioning;   // hosted in raw, final frame
};

struct SampleOptions {
  std::optional<int> n_atoms;  // nullopt draws from the size histogram
  int count = 1;
  std::uint64_t seed = 0;
  int threads = 1;
  // Invoked with (sample, t, state) for the initial state and after every
  // reverse step; calls are serialized.
  std::function<void(int, int, const NoisyGraph &)> on_step;
};

namespace sampler_internal {

inline Matrix softmax(const Matrix &logits) { return ad::internal::softmax_rows(logits); }

inline Matrix replicate(const RowVector &p, Eigen::Index rows) {
  return p.replicate(rows, 1);
}

inline int draw_size(const std::vector<std::int64_t> &hist, int floor, Rng &rng) {
  RowVector p = RowVector::Zero(static_cast<Eigen::Index>(hist.size()));
  for (size_t n = 1; n < hist.size(); ++n)
    p(static_cast<Eigen::Index>(n)) = static_cast<double>(hist[n]);
  if (!(p.sum() > 0))
    throw Error(ErrorKind::kCheckpointMismatch, "checkpoint holds no size histogram");
  return std::max(sample_categorical(p, rng), floor);
}

}  // namespace sampler_internal

// Reverse diffusion from the limit distribution. When `gp` is given its
// masked atoms are relabeled to the first |M| positions, and every step
// starts by aligning, inpainting and re-centering the state; a final
// conditioning pass makes the masked entries exact in the output.
inline std::vector<GeneratedMolecule> sample(const Checkpoint &ck, const PharmacophoreGraph *gp,
                                             const SampleOptions &opts) {
  using namespace sampler_internal;
  if (opts.count < 0)
    throw Error(ErrorKind::kInvalidArgument, "count must be nonnegative");
  const int m = gp ? gp->mask_size() : 0;
  if (gp)
    check_mask(*gp, gp->num_atoms);
  if (opts.n_atoms) {
    if (*opts.n_atoms < 1)
      throw Error(ErrorKind::kTooFewAtoms, "n_atoms must be positive");
    if (*opts.n_atoms < m)
      throw Error(ErrorKind::kTooFewAtoms,
                  std::to_string(*opts.n_atoms) + " atoms cannot hold "
                      + std::to_string(m) + " pharmacophore atoms");
  }
  if (ck.model.config().timesteps != ck.config.schedule.T)
    throw Error(ErrorKind::kCheckpointMismatch, "model and schedule disagree on T");
  const NoiseSchedule sched = ck.schedule();
  const TransitionKit kit(sched, ck.marginals);
  const Marginals &mg = ck.marginals;
  const Denoiser &model = ck.model;
  const int T = sched.T();

  std::vector<GeneratedMolecule> out(static_cast<size_t>(opts.count));
  std::mutex observe;

  auto run_one = [&](int k) {
    Rng rng = make_rng(hash_combine(opts.seed, static_cast<std::uint64_t>(k)), 0x73616d70);
    const int n = opts.n_atoms ? *opts.n_atoms
                               : draw_size(ck.size_histogram, m > 0 ? m + 1 : 1, rng);
    PharmacophoreGraph cond = gp ? gp->compacted(n) : PharmacophoreGraph::empty_for(n);

    NoisyGraph z;
    z.t = T;
    z.coords = sample_com_noise(n, rng);
    z.atom_types = diffusion_internal::sample_rows(replicate(mg.atom_types, n), rng);
    z.charges = diffusion_internal::sample_rows(replicate(mg.charges, n), rng);
    z.bonds = diffusion_internal::sample_bond_rows(
        replicate(mg.bonds, static_cast<Eigen::Index>(n) * n), n, rng);
    auto notify = [&](const NoisyGraph &g) {
      if (opts.on_step) {
        std::lock_guard<std::mutex> lock(observe);
        opts.on_step(k, g.t, g);
      }
    };
    notify(z);

    for (int t = T; t >= 1; --t) {
      condition_in_place(z, cond);
      const DenoiserOutput pred = model.predict(z, cond, t);
      NoisyGraph next;
      next.t = t - 1;
      next.coords = gaussian_posterior_step(z.coords, pred.coords, t, sched, rng);
      next.atom_types = diffusion_internal::sample_rows(
          discrete_posterior_rows(z.atom_types, softmax(pred.atom_logits), t,
                                  kit[Modality::kAtomTypes]),
          rng);
      next.charges = diffusion_internal::sample_rows(
          discrete_posterior_rows(z.charges, softmax(pred.charge_logits), t,
                                  kit[Modality::kCharges]),
          rng);
      next.bonds = diffusion_internal::sample_bond_rows(
          discrete_posterior_rows(z.bonds, softmax(pred.bond_logits), t, kit[Modality::kBonds]),
          n, rng);
      z = std::move(next);
      notify(z);
    }
    condition_in_place(z, cond);

    GeneratedMolecule g;
    g.raw = decode(z, "sample_" + std::to_string(k));
    std::vector<int> masked(static_cast<size_t>(m));
    for (int q = 0; q < m; ++q)
      masked[q] = q;
    Fragment f = largest_fragment(g.raw, masked);
    g.mol = std::move(f.mol);
    g.dropped_mask_atoms = f.dropped_mask_atoms;
    g.kept = std::move(f.kept);
    g.conditioning = std::move(cond);
    out[static_cast<size_t>(k)] = std::move(g);
  };

  parallel_for(opts.count, opts.threads, run_one);
  return out;
}

}  // namespace phdiff

#endif  // PHDIFF_SAMPLER_SAMPLER_HPP_
