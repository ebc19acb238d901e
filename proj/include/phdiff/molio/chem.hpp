//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_MOLIO_CHEM_HPP_
#define PHDIFF_MOLIO_CHEM_HPP_

#include <algorithm>
#include <bitset>
#include <cmath>
#include <cstdint>
#include <deque>
#include <set>
#include <utility>
#include <vector>

#include "phdiff/core.hpp"
#include "phdiff/molio/molgraph.hpp"

namespace phdiff {

/// Valence-rule validity: every atom's bond-order sum (aromatic = 1.5) stays
/// within its charge-adjusted maximum valence, and the bond tensor is
/// symmetric with an empty diagonal.
inline bool check_validity(const MolGraph &m) {
  const auto &table = ElementTable::instance();
  const int n = m.num_atoms();
  if (n < 1)
    return false;
  for (int i = 0; i < n; ++i) {
    if (m.bond(i, i) != BondType::kNone)
      return false;
    for (int j = i + 1; j < n; ++j)
      if (m.bond(i, j) != m.bond(j, i))
        return false;
  }
  for (int i = 0; i < n; ++i) {
    const double limit = table.max_valence(m.element(i), m.charge(i));
    if (m.bond_order_sum(i) > limit + 1e-9)
      return false;
  }
  return true;
}

inline int implicit_hydrogens(const MolGraph &m, int i) {
  const auto &table = ElementTable::instance();
  const int target = table.default_valence(m.element(i), m.charge(i));
  const int used = static_cast<int>(std::ceil(m.bond_order_sum(i) - 1e-9));
  return std::max(0, target - used);
}

/// Per-bond flag: true when the bond lies on a cycle (i.e. is not a bridge).
/// Indexed like MolGraph::bond_list().
inline std::vector<bool> ring_bond_flags(const MolGraph &m) {
  const int n = m.num_atoms();
  std::vector<BondRecord> bonds = m.bond_list();
  std::vector<std::vector<std::pair<int, int>>> adj(n);
  for (int k = 0; k < static_cast<int>(bonds.size()); ++k) {
    adj[bonds[k].a].emplace_back(bonds[k].b, k);
    adj[bonds[k].b].emplace_back(bonds[k].a, k);
  }
  std::vector<int> disc(n, -1), low(n, 0);
  std::vector<bool> ring(bonds.size(), true);
  int timer = 0;
  // Iterative Tarjan bridge finding.
  struct Frame {
    int v;
    int parent_edge;
    size_t next;
  };
  for (int s = 0; s < n; ++s) {
    if (disc[s] >= 0)
      continue;
    std::vector<Frame> stack { { s, -1, 0 } };
    disc[s] = low[s] = timer++;
    while (!stack.empty()) {
      Frame &f = stack.back();
      if (f.next < adj[f.v].size()) {
        auto [w, e] = adj[f.v][f.next++];
        if (e == f.parent_edge)
          continue;
        if (disc[w] < 0) {
          disc[w] = low[w] = timer++;
          stack.push_back({ w, e, 0 });
        } else {
          low[f.v] = std::min(low[f.v], disc[w]);
        }
      } else {
        Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          int p = stack.back().v;
          low[p] = std::min(low[p], low[done.v]);
          if (low[done.v] > disc[p])
            ring[done.parent_edge] = false;
        }
      }
    }
  }
  return ring;
}

inline std::vector<int> ring_bond_counts(const MolGraph &m) {
  std::vector<BondRecord> bonds = m.bond_list();
  std::vector<bool> ring = ring_bond_flags(m);
  std::vector<int> counts(m.num_atoms(), 0);
  for (size_t k = 0; k < bonds.size(); ++k)
    if (ring[k]) {
      ++counts[bonds[k].a];
      ++counts[bonds[k].b];
    }
  return counts;
}

/// Smallest set of smallest cycles of the subgraph formed by the bonds that
/// satisfy `keep`. Each ring is returned as its sorted atom list; rings are
/// ordered by size, then lexicographically.
template <class Pred>
std::vector<std::vector<int>> smallest_rings(const MolGraph &m, Pred keep) {
  const int n = m.num_atoms();
  std::vector<BondRecord> all = m.bond_list();
  std::vector<BondRecord> edges;
  for (const BondRecord &b: all)
    if (keep(b))
      edges.push_back(b);
  const int ne = static_cast<int>(edges.size());
  if (ne == 0)
    return {};

  std::vector<std::vector<std::pair<int, int>>> adj(n);
  for (int k = 0; k < ne; ++k) {
    adj[edges[k].a].emplace_back(edges[k].b, k);
    adj[edges[k].b].emplace_back(edges[k].a, k);
  }

  using EdgeSet = std::vector<bool>;
  std::vector<EdgeSet> candidates;
  for (int k = 0; k < ne; ++k) {
    // Shortest u -> v path avoiding edge k closes the smallest cycle on k.
    const int u = edges[k].a, v = edges[k].b;
    std::vector<int> prev_edge(n, -2);
    std::deque<int> queue { u };
    prev_edge[u] = -1;
    while (!queue.empty() && prev_edge[v] == -2) {
      int x = queue.front();
      queue.pop_front();
      for (auto [y, e]: adj[x]) {
        if (e == k || prev_edge[y] != -2)
          continue;
        prev_edge[y] = e;
        queue.push_back(y);
      }
    }
    if (prev_edge[v] == -2)
      continue;
    EdgeSet cycle(ne, false);
    cycle[k] = true;
    for (int x = v; x != u;) {
      int e = prev_edge[x];
      cycle[e] = true;
      x = edges[e].a == x ? edges[e].b : edges[e].a;
    }
    candidates.push_back(std::move(cycle));
  }

  auto size_of = [](const EdgeSet &s) {
    return std::count(s.begin(), s.end(), true);
  };
  std::sort(candidates.begin(), candidates.end(),
            [&](const EdgeSet &a, const EdgeSet &b) {
              auto sa = size_of(a), sb = size_of(b);
              return sa != sb ? sa < sb : a > b;
            });
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  // Greedy GF(2)-independent selection yields a minimum cycle basis over
  // this candidate pool.
  std::vector<EdgeSet> basis;
  std::vector<int> pivots;
  std::vector<std::vector<int>> rings;
  for (const EdgeSet &cand: candidates) {
    EdgeSet reduced = cand;
    for (size_t b = 0; b < basis.size(); ++b)
      if (reduced[pivots[b]])
        for (int e = 0; e < ne; ++e)
          reduced[e] = reduced[e] != basis[b][e];
    auto it = std::find(reduced.begin(), reduced.end(), true);
    if (it == reduced.end())
      continue;
    pivots.push_back(static_cast<int>(it - reduced.begin()));
    basis.push_back(std::move(reduced));

    std::set<int> atoms;
    for (int e = 0; e < ne; ++e)
      if (cand[e]) {
        atoms.insert(edges[e].a);
        atoms.insert(edges[e].b);
      }
    rings.emplace_back(atoms.begin(), atoms.end());
  }
  std::stable_sort(rings.begin(), rings.end(),
                   [](const auto &a, const auto &b) {
                     return a.size() != b.size() ? a.size() < b.size() : a < b;
                   });
  return rings;
}

inline std::vector<std::vector<int>> aromatic_rings(const MolGraph &m) {
  return smallest_rings(
      m, [](const BondRecord &b) { return b.type == BondType::kAromatic; });
}

/// Permutation-invariant 64-bit digest of the labeled graph (coordinates
/// excluded), via 1-WL color refinement to a stable partition.
///
/// Graphs that 1-WL cannot tell apart (e.g. some regular graphs) collide.
inline std::uint64_t canonical_hash(const MolGraph &m) {
  const int n = m.num_atoms();
  std::vector<std::vector<std::pair<int, int>>> adj(n);
  for (const BondRecord &b: m.bond_list()) {
    adj[b.a].emplace_back(b.b, static_cast<int>(b.type));
    adj[b.b].emplace_back(b.a, static_cast<int>(b.type));
  }
  std::vector<std::uint64_t> label(n);
  for (int i = 0; i < n; ++i) {
    std::uint64_t h = hash_combine(0x5eedULL, static_cast<int>(m.element(i)));
    h = hash_combine(h, static_cast<std::uint64_t>(m.charge(i) + 8));
    label[i] = hash_combine(h, adj[i].size());
  }
  auto count_classes = [](std::vector<std::uint64_t> v) {
    std::sort(v.begin(), v.end());
    return std::unique(v.begin(), v.end()) - v.begin();
  };
  auto classes = count_classes(label);
  for (int round = 0; round < n; ++round) {
    std::vector<std::uint64_t> next(n);
    for (int i = 0; i < n; ++i) {
      std::vector<std::uint64_t> env;
      env.reserve(adj[i].size());
      for (auto [j, type]: adj[i])
        env.push_back(hash_combine(static_cast<std::uint64_t>(type), label[j]));
      std::sort(env.begin(), env.end());
      std::uint64_t h = hash_combine(label[i], env.size());
      for (std::uint64_t e: env)
        h = hash_combine(h, e);
      next[i] = h;
    }
    auto next_classes = count_classes(next);
    label = std::move(next);
    if (next_classes == classes)
      break;
    classes = next_classes;
  }

  std::vector<std::uint64_t> sorted = label;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::uint64_t> edge_keys;
  for (int i = 0; i < n; ++i)
    for (auto [j, type]: adj[i])
      if (i < j) {
        auto lo = std::min(label[i], label[j]), hi = std::max(label[i], label[j]);
        edge_keys.push_back(
            hash_combine(hash_combine(lo, hi), static_cast<std::uint64_t>(type)));
      }
  std::sort(edge_keys.begin(), edge_keys.end());

  std::uint64_t digest = hash_combine(0xc0ffeeULL, static_cast<std::uint64_t>(n));
  for (std::uint64_t l: sorted)
    digest = hash_combine(digest, l);
  digest = hash_combine(digest, edge_keys.size());
  for (std::uint64_t e: edge_keys)
    digest = hash_combine(digest, e);
  return digest;
}

inline constexpr int kFingerprintBits = 2048;
using Fingerprint = std::bitset<kFingerprintBits>;

/// Circular (Morgan-style) fingerprint: atom environments of radius 0, 1 and
/// 2 hashed and folded to 2048 bits.
inline Fingerprint fingerprint(const MolGraph &m, int radius = 2) {
  const int n = m.num_atoms();
  std::vector<BondRecord> bonds = m.bond_list();
  std::vector<bool> ring = ring_bond_flags(m);
  std::vector<bool> in_ring(n, false);
  std::vector<std::vector<std::pair<int, int>>> adj(n);
  for (size_t k = 0; k < bonds.size(); ++k) {
    const auto &b = bonds[k];
    adj[b.a].emplace_back(b.b, static_cast<int>(b.type));
    adj[b.b].emplace_back(b.a, static_cast<int>(b.type));
    if (ring[k])
      in_ring[b.a] = in_ring[b.b] = true;
  }

  Fingerprint fp;
  std::vector<std::uint64_t> ids(n);
  for (int i = 0; i < n; ++i) {
    std::uint64_t h = hash_combine(0x3c5ULL, static_cast<int>(m.element(i)));
    h = hash_combine(h, adj[i].size());
    h = hash_combine(h, static_cast<std::uint64_t>(m.charge(i) + 8));
    h = hash_combine(h, static_cast<std::uint64_t>(implicit_hydrogens(m, i)));
    ids[i] = hash_combine(h, in_ring[i] ? 1 : 0);
    fp.set(ids[i] % kFingerprintBits);
  }
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(n);
    for (int i = 0; i < n; ++i) {
      std::vector<std::uint64_t> env;
      for (auto [j, type]: adj[i])
        env.push_back(hash_combine(static_cast<std::uint64_t>(type), ids[j]));
      std::sort(env.begin(), env.end());
      std::uint64_t h = hash_combine(static_cast<std::uint64_t>(r), ids[i]);
      for (std::uint64_t e: env)
        h = hash_combine(h, e);
      next[i] = h;
      fp.set(h % kFingerprintBits);
    }
    ids = std::move(next);
  }
  return fp;
}

inline double tanimoto(const Fingerprint &a, const Fingerprint &b) {
  const auto uni = (a | b).count();
  if (uni == 0)
    return 1.0;
  return static_cast<double>((a & b).count()) / static_cast<double>(uni);
}

}  // namespace phdiff

#endif  // PHDIFF_MOLIO_CHEM_HPP_
