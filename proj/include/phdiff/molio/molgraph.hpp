//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_MOLIO_MOLGRAPH_HPP_
#define PHDIFF_MOLIO_MOLGRAPH_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "phdiff/core.hpp"

namespace phdiff {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using Vec3 = Eigen::RowVector3d;

// Heavy-atom vocabulary; hydrogens are implicit throughout.
enum class Element : int { C = 0, N, O, F, S, Cl, Br, P };

inline constexpr int kNumElements = 8;
inline constexpr int kNumCharges = 3;    // {-1, 0, +1}
inline constexpr int kNumBondTypes = 5;  // {none, single, double, triple, aromatic}

enum class BondType : int {
  kNone = 0,
  kSingle = 1,
  kDouble = 2,
  kTriple = 3,
  kAromatic = 4,
};

inline constexpr int charge_to_class(int charge) { return charge + 1; }
inline constexpr int class_to_charge(int cls) { return cls - 1; }

inline double bond_order(BondType type) {
  switch (type) {
  case BondType::kSingle: return 1.0;
  case BondType::kDouble: return 2.0;
  case BondType::kTriple: return 3.0;
  case BondType::kAromatic: return 1.5;
  case BondType::kNone: break;
  }
  return 0.0;
}

struct ElementInfo {
  std::string_view symbol;
  double mass;
  int max_valence;
  int default_valence;
  double covalent_radius;
  int group;  // periodic group, drives charge adjustment
};

class ElementTable {
public:
  static const ElementTable &instance() {
    static const ElementTable table;
    return table;
  }

  const ElementInfo &info(Element e) const {
    return infos_[static_cast<int>(e)];
  }

  std::optional<Element> find(std::string_view symbol) const {
    for (int i = 0; i < kNumElements; ++i)
      if (infos_[i].symbol == symbol)
        return static_cast<Element>(i);
    return std::nullopt;
  }

  std::string_view symbol(Element e) const { return info(e).symbol; }

  const std::array<int, kNumCharges> &charge_classes() const {
    return charges_;
  }

  // Valence ceiling after formal charge: isoelectronic shift for
  // pnictogens/chalcogens, carbocation/carbanion for C, halonium for X.
  int max_valence(Element e, int charge) const {
    const ElementInfo &ei = info(e);
    if (charge == 0)
      return ei.max_valence;
    switch (ei.group) {
    case 14: return ei.max_valence - std::abs(charge);
    case 15:
    case 16: return std::max(0, ei.max_valence + charge);
    case 17: return std::max(0, 1 + charge);
    default: return ei.max_valence;
    }
  }

  int default_valence(Element e, int charge) const {
    const ElementInfo &ei = info(e);
    if (charge == 0)
      return ei.default_valence;
    switch (ei.group) {
    case 14: return ei.default_valence - std::abs(charge);
    case 15:
    case 16: return std::max(0, ei.default_valence + charge);
    case 17: return std::max(0, 1 + charge);
    default: return ei.default_valence;
    }
  }

  static constexpr double kHydrogenMass = 1.008;

private:
  ElementTable()
      : infos_ { {
          { "C", 12.011, 4, 4, 0.77, 14 },
          { "N", 14.007, 3, 3, 0.70, 15 },
          { "O", 15.999, 2, 2, 0.66, 16 },
          { "F", 18.998, 1, 1, 0.64, 17 },
          { "S", 32.06, 6, 2, 1.04, 16 },
          { "Cl", 35.45, 1, 1, 0.99, 17 },
          { "Br", 79.904, 1, 1, 1.14, 17 },
          { "P", 30.974, 5, 3, 1.10, 15 },
        } },
        charges_ { -1, 0, 1 } { }

  std::array<ElementInfo, kNumElements> infos_;
  std::array<int, kNumCharges> charges_;
};

inline int argmax_row(const Eigen::Ref<const RowVector> &row) {
  Eigen::Index idx;
  row.maxCoeff(&idx);
  return static_cast<int>(idx);
}

// Pair (i, j) of an n-atom graph lives in row i * n + j of every edge matrix.
inline Eigen::Index pair_index(int n, int i, int j) {
  return static_cast<Eigen::Index>(i) * n + j;
}

struct BondRecord {
  int a;
  int b;
  BondType type;

  friend bool operator==(const BondRecord &, const BondRecord &) = default;
};

/// A molecule as one-hot atom types (n x d), charges (n x a), coordinates
/// (n x 3, Angstrom) and bond types (n*n x b, pair-row layout).
struct MolGraph {
  Matrix atom_types;
  Matrix charges;
  Coords coords;
  Matrix bonds;
  std::string name;

  int num_atoms() const { return static_cast<int>(atom_types.rows()); }

  Element element(int i) const {
    return static_cast<Element>(argmax_row(atom_types.row(i)));
  }

  int charge(int i) const { return class_to_charge(argmax_row(charges.row(i))); }

  BondType bond(int i, int j) const {
    return static_cast<BondType>(
        argmax_row(bonds.row(pair_index(num_atoms(), i, j))));
  }

  Vec3 position(int i) const { return coords.row(i); }

  void set_bond(int i, int j, BondType type) {
    const int n = num_atoms();
    bonds.row(pair_index(n, i, j)).setZero();
    bonds.row(pair_index(n, j, i)).setZero();
    bonds(pair_index(n, i, j), static_cast<int>(type)) = 1.0;
    bonds(pair_index(n, j, i), static_cast<int>(type)) = 1.0;
  }

  std::vector<int> neighbors(int i) const {
    std::vector<int> ret;
    for (int j = 0; j < num_atoms(); ++j)
      if (j != i && bond(i, j) != BondType::kNone)
        ret.push_back(j);
    return ret;
  }

  std::vector<BondRecord> bond_list() const {
    std::vector<BondRecord> ret;
    for (int i = 0; i < num_atoms(); ++i)
      for (int j = i + 1; j < num_atoms(); ++j)
        if (BondType t = bond(i, j); t != BondType::kNone)
          ret.push_back({ i, j, t });
    return ret;
  }

  double bond_order_sum(int i) const {
    double sum = 0;
    for (int j = 0; j < num_atoms(); ++j)
      if (j != i)
        sum += bond_order(bond(i, j));
    return sum;
  }

  static MolGraph create(const std::vector<Element> &elements,
                         const std::vector<int> &charges, const Coords &coords,
                         const std::vector<BondRecord> &bonds,
                         std::string name = {}) {
    const int n = static_cast<int>(elements.size());
    if (n < 1 || static_cast<int>(charges.size()) != n || coords.rows() != n)
      throw Error(ErrorKind::kShapeMismatch,
                  "molecule needs n >= 1 atoms with matching charges/coords");

    MolGraph m;
    m.atom_types = Matrix::Zero(n, kNumElements);
    m.charges = Matrix::Zero(n, kNumCharges);
    m.coords = coords;
    m.bonds = Matrix::Zero(static_cast<Eigen::Index>(n) * n, kNumBondTypes);
    m.bonds.col(static_cast<int>(BondType::kNone)).setOnes();
    m.name = std::move(name);
    for (int i = 0; i < n; ++i) {
      m.atom_types(i, static_cast<int>(elements[i])) = 1.0;
      if (charges[i] < -1 || charges[i] > 1)
        throw Error(ErrorKind::kInvalidArgument,
                    "formal charge out of range: " + std::to_string(charges[i]));
      m.charges(i, charge_to_class(charges[i])) = 1.0;
    }
    for (const BondRecord &b: bonds) {
      if (b.a < 0 || b.b < 0 || b.a >= n || b.b >= n || b.a == b.b)
        throw Error(ErrorKind::kInvalidArgument, "bond endpoint out of range");
      m.set_bond(b.a, b.b, b.type);
    }
    return m;
  }

  // Simultaneous relabeling: atom perm[i] of the result is atom i of this.
  MolGraph permuted(const std::vector<int> &perm) const {
    const int n = num_atoms();
    MolGraph m;
    m.atom_types.resize(n, kNumElements);
    m.charges.resize(n, kNumCharges);
    m.coords.resize(n, 3);
    m.bonds.resize(static_cast<Eigen::Index>(n) * n, kNumBondTypes);
    m.name = name;
    for (int i = 0; i < n; ++i) {
      m.atom_types.row(perm[i]) = atom_types.row(i);
      m.charges.row(perm[i]) = charges.row(i);
      m.coords.row(perm[i]) = coords.row(i);
      for (int j = 0; j < n; ++j)
        m.bonds.row(pair_index(n, perm[i], perm[j])) =
            bonds.row(pair_index(n, i, j));
    }
    return m;
  }

  Vec3 centroid() const { return coords.colwise().mean(); }

  void center() { coords.rowwise() -= centroid(); }
};

// Categorical rows are soft during diffusion; coordinates are zero-CoM.
struct NoisyGraph {
  Matrix atom_types;
  Matrix charges;
  Coords coords;
  Matrix bonds;
  int t = 0;

  int num_atoms() const { return static_cast<int>(atom_types.rows()); }
};

inline NoisyGraph as_noisy(const MolGraph &m, int t = 0) {
  return { m.atom_types, m.charges, m.coords, m.bonds, t };
}

// Argmax decode of every categorical row. The diagonal is forced to
// "no bond" and the bond tensor is symmetrized from the upper triangle.
inline MolGraph decode(const NoisyGraph &g, std::string name = {}) {
  const int n = g.num_atoms();
  std::vector<Element> elements(n);
  std::vector<int> charges(n);
  for (int i = 0; i < n; ++i) {
    elements[i] = static_cast<Element>(argmax_row(g.atom_types.row(i)));
    charges[i] = class_to_charge(argmax_row(g.charges.row(i)));
  }
  std::vector<BondRecord> bonds;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      auto t = static_cast<BondType>(argmax_row(g.bonds.row(pair_index(n, i, j))));
      if (t != BondType::kNone)
        bonds.push_back({ i, j, t });
    }
  return MolGraph::create(elements, charges, g.coords, bonds, std::move(name));
}

inline std::vector<int> connected_components(const MolGraph &m,
                                             int *num_components = nullptr) {
  const int n = m.num_atoms();
  std::vector<int> comp(n, -1);
  int nc = 0;
  std::vector<int> stack;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0)
      continue;
    comp[s] = nc;
    stack.push_back(s);
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int v: m.neighbors(u))
        if (comp[v] < 0) {
          comp[v] = nc;
          stack.push_back(v);
        }
    }
    ++nc;
  }
  if (num_components != nullptr)
    *num_components = nc;
  return comp;
}

}  // namespace phdiff

#endif  // PHDIFF_MOLIO_MOLGRAPH_HPP_
