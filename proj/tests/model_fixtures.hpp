//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_TESTS_MODEL_FIXTURES_HPP_
#define PHDIFF_TESTS_MODEL_FIXTURES_HPP_

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

#include "phdiff/denoiser/autodiff.hpp"
#include "phdiff/denoiser/conditioning.hpp"
#include "phdiff/denoiser/model.hpp"
#include "phdiff/diffusion/process.hpp"
#include "phdiff/molio/synthetic.hpp"
#include "phdiff/pharmakit/features.hpp"

namespace phdiff::test {

struct Instance {
  MolGraph mol;
  PharmacophoreGraph gp;  // clean-frame pharmacophore
  NoisyGraph noisy;       // conditioned input
  PharmacophoreGraph cond_gp;  // pharmacophore in the input frame
  int t = 1;
};

inline DenoiserConfig small_config() {
  DenoiserConfig cfg;
  cfg.layers = 2;
  cfg.width = 16;
  cfg.heads = 2;
  cfg.edge_width = 8;
  cfg.time_dim = 8;
  cfg.dropout = 0.0;
  return cfg;
}

// Noised and conditioned instance; `conditioned` = false gives an empty mask.
inline Instance make_instance(std::uint64_t seed, bool conditioned = true,
                              int min_atoms = 5, int max_atoms = 12) {
  static const NoiseSchedule sched = build_schedule(ScheduleConfig {});
  static const TransitionKit kit(sched, Marginals {});
  Instance in;
  for (std::uint64_t k = 0;; ++k) {
    in.mol = gen_synthetic(seed * 131 + k, 1, min_atoms, max_atoms)[0];
    in.mol.center();
    if (!conditioned) {
      in.gp = PharmacophoreGraph::empty_for(in.mol.num_atoms());
      break;
    }
    try {
      in.gp = sample_hypothesis(in.mol, seed).second;
      break;
    } catch (const Error &) {
    }
  }
  Rng rng = make_rng(seed, 77);
  in.t = static_cast<int>(uniform_int(rng, 1, sched.T()));
  in.noisy = forward_noise(as_noisy(in.mol), in.t, sched, kit, rng);
  in.cond_gp = in.gp;
  condition_in_place(in.noisy, in.cond_gp);
  return in;
}

// Relative deviation of two gradients with a magnitude floor.
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({ std::abs(a), std::abs(b), 1e-6 });
}

using LossBuilder = std::function<Var(Tape &, const std::vector<Var> &)>;

// Compares reverse-mode gradients with a fourth-order central difference on
// `count` randomly chosen parameter entries. Returns the worst relative error.
inline double gradcheck(Denoiser &model, const LossBuilder &loss, int count, Rng &rng) {
  Tape tape;
  std::vector<Var> p = model.bind(tape, true);
  Var l = loss(tape, p);
  tape.backward(l);

  auto eval = [&] {
    Tape t2;
    return loss(t2, model.bind(t2, false)).value()(0, 0);
  };
  const Eigen::Index total = model.parameter_count();
  double worst = 0;
  for (int c = 0; c < count; ++c) {
    Eigen::Index flat = uniform_int(rng, 0, total - 1);
    int slot = 0;
    while (flat >= model.params().value(slot).size())
      flat -= model.params().value(slot++).size();
    double &x = model.params().value(slot).data()[flat];
    const double analytic = tape.grad(p[slot]).data()[flat];
    const double x0 = x;
    const double h = 1e-4 * std::max(1.0, std::abs(x0));
    x = x0 + 2 * h;
    const double f2 = eval();
    x = x0 + h;
    const double f1 = eval();
    x = x0 - h;
    const double fm1 = eval();
    x = x0 - 2 * h;
    const double fm2 = eval();
    x = x0;
    const double numeric = (-f2 + 8 * f1 - 8 * fm1 + fm2) / (12 * h);
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

// Relabel atoms: old atom i becomes perm[i]. Works for MolGraph and NoisyGraph.
template <class G>
G permute_graph(const G &in, const std::vector<int> &perm) {
  const int n = in.num_atoms();
  G g = in;
  for (int i = 0; i < n; ++i) {
    g.atom_types.row(perm[i]) = in.atom_types.row(i);
    g.charges.row(perm[i]) = in.charges.row(i);
    g.coords.row(perm[i]) = in.coords.row(i);
    for (int j = 0; j < n; ++j)
      g.bonds.row(pair_index(n, perm[i], perm[j])) = in.bonds.row(pair_index(n, i, j));
  }
  return g;
}

inline PharmacophoreGraph permute_pharmacophore(const PharmacophoreGraph &src,
                                                const std::vector<int> &perm) {
  const int n = src.num_atoms;
  const int m = src.mask_size();
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return perm[src.mask_indices[a]] < perm[src.mask_indices[b]];
  });
  PharmacophoreGraph gp = src;
  for (int i = 0; i < n; ++i)
    gp.feature_labels.row(perm[i]) = src.feature_labels.row(i);
  for (int k = 0; k < m; ++k) {
    const int o = order[k];
    gp.mask_indices[k] = perm[src.mask_indices[o]];
    gp.atom_types.row(k) = src.atom_types.row(o);
    gp.charges.row(k) = src.charges.row(o);
    gp.coords.row(k) = src.coords.row(o);
    for (int q = 0; q < m; ++q)
      gp.bonds.row(pair_index(m, k, q)) = src.bonds.row(pair_index(m, o, order[q]));
  }
  return gp;
}

}  // namespace phdiff::test

#endif  // PHDIFF_TESTS_MODEL_FIXTURES_HPP_
