//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_MOLIO_SYNTHETIC_HPP_
#define PHDIFF_MOLIO_SYNTHETIC_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "phdiff/core.hpp"
#include "phdiff/molio/chem.hpp"
#include "phdiff/molio/molgraph.hpp"

namespace phdiff {

// Equilibrium bond length from covalent radii; reproduces C-C 1.54,
// C=C 1.34, C-N 1.47, C-O 1.43 and aromatic C:C 1.39.
inline double bond_length(Element a, Element b, BondType type) {
  const auto &table = ElementTable::instance();
  const double single =
      table.info(a).covalent_radius + table.info(b).covalent_radius;
  switch (type) {
  case BondType::kDouble: return single * (1.34 / 1.54);
  case BondType::kTriple: return single * (1.20 / 1.54);
  case BondType::kAromatic: return single * (1.39 / 1.54);
  default: return single;
  }
}

namespace synth_internal {
struct Draft {
  std::vector<Element> elements;
  std::vector<int> charges;
  std::vector<BondRecord> bonds;
  std::vector<double> used;  // bond-order sum per atom
  int ring_size = 0;         // seed ring occupies atoms [0, ring_size)

  int add_atom(Element e) {
    elements.push_back(e);
    charges.push_back(0);
    used.push_back(0.0);
    return static_cast<int>(elements.size()) - 1;
  }

  void add_bond(int a, int b, BondType t) {
    bonds.push_back({ a, b, t });
    used[a] += bond_order(t);
    used[b] += bond_order(t);
  }

  double capacity(int i) const {
    return ElementTable::instance().max_valence(elements[i], charges[i])
           - used[i];
  }
};

inline Element draw_element(Rng &rng) {
  // Rough heavy-atom frequencies of drug-like molecules.
  static constexpr std::array<std::pair<Element, double>, kNumElements>
      kWeights { { { Element::C, 0.62 },
                   { Element::N, 0.12 },
                   { Element::O, 0.12 },
                   { Element::F, 0.04 },
                   { Element::S, 0.04 },
                   { Element::Cl, 0.03 },
                   { Element::Br, 0.015 },
                   { Element::P, 0.015 } } };
  double u = uniform_real(rng);
  for (auto [e, w]: kWeights) {
    if (u < w)
      return e;
    u -= w;
  }
  return Element::C;
}

inline bool build_topology(Rng &rng, int n, Draft &d) {
  const double r = uniform_real(rng);
  if (n >= 6 && r < 0.45) {
    // Benzene/pyridine-like aromatic ring.
    for (int i = 0; i < 6; ++i)
      d.add_atom(Element::C);
    if (uniform_real(rng) < 0.25)
      d.elements[uniform_int(rng, 0, 5)] = Element::N;
    for (int i = 0; i < 6; ++i)
      d.add_bond(i, (i + 1) % 6, BondType::kAromatic);
    d.ring_size = 6;
  } else if (n >= 5 && r < 0.65) {
    const int size = n >= 6 && uniform_real(rng) < 0.5 ? 6 : 5;
    for (int i = 0; i < size; ++i)
      d.add_atom(Element::C);
    if (uniform_real(rng) < 0.3)
      d.elements[uniform_int(rng, 0, size - 1)] =
          uniform_real(rng) < 0.5 ? Element::O : Element::N;
    for (int i = 0; i < size; ++i)
      d.add_bond(i, (i + 1) % size, BondType::kSingle);
    d.ring_size = size;
  } else {
    d.add_atom(Element::C);
  }

  while (static_cast<int>(d.elements.size()) < n) {
    std::vector<int> open;
    for (int i = 0; i < static_cast<int>(d.elements.size()); ++i)
      if (d.capacity(i) >= 1.0 - 1e-9)
        open.push_back(i);
    if (open.empty())
      return false;
    const int parent = open[uniform_int(rng, 0, open.size() - 1)];
    Element e = draw_element(rng);
    const int remaining = n - static_cast<int>(d.elements.size());
    // Keep the tree growable: a terminal halogen may not take the last slot.
    if (open.size() == 1 && d.capacity(parent) < 2.0 - 1e-9 && remaining > 1
        && ElementTable::instance().info(e).max_valence == 1)
      e = Element::C;
    const int child = d.add_atom(e);
    const double cap = std::min(d.capacity(parent), d.capacity(child));
    BondType type = BondType::kSingle;
    const double u = uniform_real(rng);
    if (cap >= 3.0 - 1e-9 && u < 0.03)
      type = BondType::kTriple;
    else if (cap >= 2.0 - 1e-9 && u < 0.15)
      type = BondType::kDouble;
    d.add_bond(parent, child, type);
  }

  // Sprinkle formal charges where the charged valence still holds.
  for (int i = 0; i < n; ++i) {
    const double u = uniform_real(rng);
    if (d.elements[i] == Element::N && d.used[i] <= 3.0 + 1e-9
        && d.used[i] == std::floor(d.used[i]) && u < 0.12)
      d.charges[i] = 1;
    else if (d.elements[i] == Element::O && d.used[i] <= 1.0 + 1e-9
             && u < 0.12)
      d.charges[i] = -1;
  }
  return true;
}

inline double ideal_angle(const Draft &d, int center) {
  int multiple = 0;
  for (const BondRecord &b: d.bonds)
    if (b.a == center || b.b == center) {
      if (b.type == BondType::kTriple)
        return std::numbers::pi;
      if (b.type != BondType::kSingle)
        ++multiple;
    }
  return multiple > 0 ? 2.0 * std::numbers::pi / 3.0 : 109.47 * std::numbers::pi / 180.0;
}

inline Vec3 random_unit(Rng &rng) {
  Vec3 v;
  do {
    v = Vec3(standard_normal(rng), standard_normal(rng), standard_normal(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

inline Coords layout(Rng &rng, const Draft &d) {
  const int n = static_cast<int>(d.elements.size());
  std::vector<std::vector<std::pair<int, BondType>>> adj(n);
  for (const BondRecord &b: d.bonds) {
    adj[b.a].emplace_back(b.b, b.type);
    adj[b.b].emplace_back(b.a, b.type);
  }

  Coords pos = Coords::Zero(n, 3);
  std::vector<bool> placed(n, false);

  // Seed ring (atoms 0..k-1 bonded cyclically) as a regular polygon.
  const int ring = d.ring_size;
  if (ring > 0) {
    const double len =
        bond_length(d.elements[0], d.elements[1], d.bonds.front().type);
    const double radius = len / (2.0 * std::sin(std::numbers::pi / ring));
    for (int i = 0; i < ring; ++i) {
      const double a = 2.0 * std::numbers::pi * i / ring;
      pos.row(i) = Vec3(radius * std::cos(a), radius * std::sin(a), 0.0);
      placed[i] = true;
    }
  } else {
    placed[0] = true;
  }

  // Breadth-first placement pointing away from placed neighbors.
  std::vector<int> queue;
  for (int i = 0; i < n; ++i)
    if (placed[i])
      queue.push_back(i);
  for (size_t q = 0; q < queue.size(); ++q) {
    const int u = queue[q];
    for (const auto &[v, t]: adj[u]) {
      if (placed[v])
        continue;
      Vec3 away = Vec3::Zero();
      for (const auto &[w, tw]: adj[u])
        if (placed[w] && w != v)
          away -= (pos.row(w) - pos.row(u)).normalized();
      Vec3 dir = random_unit(rng);
      if (away.norm() > 1e-6)
        dir = (away.normalized() + 0.35 * dir).normalized();
      pos.row(v) = pos.row(u) + bond_length(d.elements[u], d.elements[v], t) * dir;
      placed[v] = true;
      queue.push_back(v);
    }
  }

  // Restraint targets: bonds, 1-3 pairs from ideal angles, soft repulsion.
  struct Target {
    int a;
    int b;
    double dist;
    double k;
  };
  std::vector<Target> targets;
  std::vector<std::vector<bool>> near(n, std::vector<bool>(n, false));
  for (const BondRecord &b: d.bonds) {
    targets.push_back({ b.a, b.b,
                        bond_length(d.elements[b.a], d.elements[b.b], b.type),
                        1.0 });
    near[b.a][b.b] = near[b.b][b.a] = true;
  }
  for (int c = 0; c < n; ++c) {
    const double theta = ideal_angle(d, c);
    for (size_t x = 0; x < adj[c].size(); ++x)
      for (size_t y = x + 1; y < adj[c].size(); ++y) {
        auto [a, ta] = adj[c][x];
        auto [b, tb] = adj[c][y];
        if (near[a][b])
          continue;
        const double la = bond_length(d.elements[a], d.elements[c], ta);
        const double lb = bond_length(d.elements[b], d.elements[c], tb);
        targets.push_back(
            { a, b, std::sqrt(la * la + lb * lb - 2 * la * lb * std::cos(theta)),
              0.5 });
        near[a][b] = near[b][a] = true;
      }
  }

  constexpr double kRepulsion = 2.6;
  constexpr double kStep = 0.05;
  for (int iter = 0; iter < 400; ++iter) {
    Coords grad = Coords::Zero(n, 3);
    for (const Target &t: targets) {
      Vec3 diff = pos.row(t.a) - pos.row(t.b);
      const double dist = std::max(diff.norm(), 1e-9);
      const Vec3 g = (2.0 * t.k * (dist - t.dist) / dist) * diff;
      grad.row(t.a) += g;
      grad.row(t.b) -= g;
    }
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) {
        if (near[a][b])
          continue;
        Vec3 diff = pos.row(a) - pos.row(b);
        double dist = diff.norm();
        if (dist >= kRepulsion)
          continue;
        if (dist < 1e-6) {
          diff = Vec3(1e-3 * (a + 1), 1e-3 * (b + 1), 1e-3);
          dist = diff.norm();
        }
        const Vec3 g = (-0.6 * (kRepulsion - dist) / dist) * diff;
        grad.row(a) += g;
        grad.row(b) -= g;
      }
    for (int i = 0; i < n; ++i) {
      Vec3 step = kStep * grad.row(i);
      if (const double len = step.norm(); len > 0.2)
        step *= 0.2 / len;
      pos.row(i) -= step;
    }
  }
  pos.rowwise() -= pos.colwise().mean();
  return pos;
}
}  // namespace synth_internal

/// Deterministic desk-scale dataset of valence-respecting molecules with
/// relaxed 3D coordinates. Record k depends only on (seed, k).
inline std::vector<MolGraph> gen_synthetic(std::uint64_t seed, int count,
                                           int min_atoms, int max_atoms) {
  if (min_atoms < 3 || min_atoms > max_atoms || max_atoms > 32)
    throw Error(ErrorKind::kInvalidRange,
                "size range must satisfy 3 <= min <= max <= 32");
  if (count < 0)
    throw Error(ErrorKind::kInvalidRange, "count must be non-negative");

  using namespace synth_internal;
  std::vector<MolGraph> mols;
  mols.reserve(count);
  for (int k = 0; k < count; ++k) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      Rng rng = make_rng(seed, (static_cast<std::uint64_t>(k) << 16) | attempt);
      const int n = static_cast<int>(uniform_int(rng, min_atoms, max_atoms));
      Draft d;
      if (!build_topology(rng, n, d))
        continue;
      Coords pos = layout(rng, d);
      MolGraph m = MolGraph::create(d.elements, d.charges, pos, d.bonds,
                                    "synth_" + std::to_string(seed) + "_"
                                        + std::to_string(k));
      if (!check_validity(m))
        continue;
      mols.push_back(std::move(m));
      break;
    }
  }
  return mols;
}

}  // namespace phdiff

#endif  // PHDIFF_MOLIO_SYNTHETIC_HPP_
