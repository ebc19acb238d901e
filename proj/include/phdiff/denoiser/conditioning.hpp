//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_DENOISER_CONDITIONING_HPP_
#define PHDIFF_DENOISER_CONDITIONING_HPP_

#include <string>

#include "phdiff/core.hpp"
#include "phdiff/diffusion/process.hpp"
#include "phdiff/molio/molgraph.hpp"
#include "phdiff/pharmakit/features.hpp"

namespace phdiff {

inline void check_mask(const PharmacophoreGraph &gp, int n) {
  if (gp.num_atoms != n)
    throw Error(ErrorKind::kMaskOutOfRange,
                "pharmacophore is hosted in " + std::to_string(gp.num_atoms)
                    + " atoms, graph has " + std::to_string(n));
  const int m = gp.mask_size();
  for (int k = 0; k < m; ++k)
    if (gp.mask_indices[k] < 0 || gp.mask_indices[k] >= n
        || (k > 0 && gp.mask_indices[k] <= gp.mask_indices[k - 1]))
      throw Error(ErrorKind::kMaskOutOfRange, "mask indices must be sorted and in range");
  if (gp.atom_types.rows() != m || gp.charges.rows() != m || gp.coords.rows() != m
      || gp.bonds.rows() != static_cast<Eigen::Index>(m) * m
      || gp.feature_labels.rows() != n)
    throw Error(ErrorKind::kShapeMismatch, "pharmacophore tensors disagree with mask");
}

// Masked atoms, their positions and their mutual edges take the
// pharmacophore values; everything else is copied untouched.
inline NoisyGraph inpaint_input(const NoisyGraph &g, const PharmacophoreGraph &gp) {
  const int n = g.num_atoms();
  check_mask(gp, n);
  NoisyGraph out = g;
  const int m = gp.mask_size();
  for (int k = 0; k < m; ++k) {
    const int i = gp.mask_indices[k];
    out.atom_types.row(i) = gp.atom_types.row(k);
    out.charges.row(i) = gp.charges.row(k);
    out.coords.row(i) = gp.coords.row(k);
    for (int q = 0; q < m; ++q)
      out.bonds.row(pair_index(n, i, gp.mask_indices[q])) =
          gp.bonds.row(pair_index(m, k, q));
  }
  return out;
}

// Translation moving the masked atoms' mean onto the pharmacophore mean.
inline Vec3 com_shift(const Coords &r, const PharmacophoreGraph &gp) {
  if (gp.empty())
    throw Error(ErrorKind::kEmptyMask, "center-of-mass adjustment needs a mask");
  Vec3 cur = Vec3::Zero();
  for (int i: gp.mask_indices)
    cur += r.row(i);
  cur /= gp.mask_size();
  return gp.coords.colwise().mean() - cur;
}

inline NoisyGraph com_adjust(const NoisyGraph &g, const PharmacophoreGraph &gp) {
  check_mask(gp, g.num_atoms());
  NoisyGraph out = g;
  out.coords.rowwise() += com_shift(g.coords, gp);
  return out;
}

// Per-step conditioning: align, inpaint and re-center. The pharmacophore
// positions follow the same re-centering so both stay in one frame.
// Without a mask only the centering applies.
inline void condition_in_place(NoisyGraph &g, PharmacophoreGraph &gp) {
  if (gp.empty()) {
    g.coords = centered(g.coords);
    return;
  }
  g = inpaint_input(com_adjust(g, gp), gp);
  const Vec3 c = g.coords.colwise().mean();
  g.coords.rowwise() -= c;
  gp.coords.rowwise() -= c;
}

}  // namespace phdiff

#endif  // PHDIFF_DENOISER_CONDITIONING_HPP_
