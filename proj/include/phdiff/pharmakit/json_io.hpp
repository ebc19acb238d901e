//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_PHARMAKIT_JSON_IO_HPP_
#define PHDIFF_PHARMAKIT_JSON_IO_HPP_

#include <string>

#include <json.hpp>

#include "phdiff/core.hpp"
#include "phdiff/molio/molgraph.hpp"
#include "phdiff/pharmakit/features.hpp"

// Wire formats documented in schemas/hypothesis.schema.json and
// schemas/pharmacophore.schema.json.

namespace phdiff {

using Json = nlohmann::json;

namespace json_internal {
inline FeatureType feature_from_json(const Json &j) {
  auto t = parse_feature(j.get<std::string>());
  if (!t)
    throw Error(ErrorKind::kInvalidArgument,
                "unknown feature type '" + j.get<std::string>() + "'");
  return *t;
}

inline Vec3 vec3_from_json(const Json &j) {
  if (!j.is_array() || j.size() != 3)
    throw Error(ErrorKind::kInvalidArgument, "position must be [x, y, z]");
  Vec3 v(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  if (!v.allFinite())
    throw Error(ErrorKind::kInvalidArgument, "non-finite position");
  return v;
}

inline Json vec3_to_json(const Vec3 &v) { return Json::array({ v[0], v[1], v[2] }); }
}  // namespace json_internal

inline Json to_json(const PharmacophoreGraph &gp) {
  using namespace json_internal;
  const auto &table = ElementTable::instance();
  Json atoms = Json::array();
  for (int k = 0; k < gp.mask_size(); ++k) {
    const int i = gp.mask_indices[k];
    atoms.push_back({
        { "index", i },
        { "element",
          std::string(table.symbol(
              static_cast<Element>(argmax_row(gp.atom_types.row(k))))) },
        { "charge", class_to_charge(argmax_row(gp.charges.row(k))) },
        { "feature", std::string(feature_name(static_cast<FeatureType>(
                         argmax_row(gp.feature_labels.row(i))))) },
        { "pos", vec3_to_json(gp.coords.row(k)) },
    });
  }
  Json bonds = Json::array();
  const int m = gp.mask_size();
  for (int p = 0; p < m; ++p)
    for (int q = p + 1; q < m; ++q) {
      const int type = argmax_row(gp.bonds.row(pair_index(m, p, q)));
      if (type != 0)
        bonds.push_back({ { "a", gp.mask_indices[p] },
                          { "b", gp.mask_indices[q] },
                          { "type", type } });
    }
  Json groups = Json::array();
  for (const FeatureGroup &g: gp.feature_groups)
    groups.push_back({ { "type", std::string(feature_name(g.type)) },
                       { "atoms", g.atoms } });
  return {
    { "num_atoms", gp.num_atoms },
    { "mask_indices", gp.mask_indices },
    { "atoms", atoms },
    { "bonds", bonds },
    { "feature_groups", groups },
  };
}

inline PharmacophoreGraph pharmacophore_from_json(const Json &j) {
  using namespace json_internal;
  const auto &table = ElementTable::instance();
  try {
    PharmacophoreGraph gp =
        PharmacophoreGraph::empty_for(j.at("num_atoms").get<int>());
    gp.mask_indices = j.at("mask_indices").get<std::vector<int>>();
    const int m = gp.mask_size();
    for (int k = 0; k < m; ++k) {
      if (gp.mask_indices[k] < 0 || gp.mask_indices[k] >= gp.num_atoms
          || (k > 0 && gp.mask_indices[k] <= gp.mask_indices[k - 1]))
        throw Error(ErrorKind::kMaskOutOfRange,
                    "mask indices must be sorted, unique and < num_atoms");
    }
    const Json &atoms = j.at("atoms");
    if (static_cast<int>(atoms.size()) != m)
      throw Error(ErrorKind::kShapeMismatch, "one atom record per mask index");
    gp.atom_types = Matrix::Zero(m, kNumElements);
    gp.charges = Matrix::Zero(m, kNumCharges);
    gp.coords.resize(m, 3);
    gp.bonds = Matrix::Zero(static_cast<Eigen::Index>(m) * m, kNumBondTypes);
    gp.bonds.col(0).setOnes();
    for (int k = 0; k < m; ++k) {
      const Json &a = atoms[k];
      if (a.at("index").get<int>() != gp.mask_indices[k])
        throw Error(ErrorKind::kShapeMismatch,
                    "atom records must follow mask order");
      auto elem = table.find(a.at("element").get<std::string>());
      if (!elem)
        throw Error(ErrorKind::kUnknownElement, a.at("element").get<std::string>());
      gp.atom_types(k, static_cast<int>(*elem)) = 1.0;
      const int charge = a.value("charge", 0);
      if (charge < -1 || charge > 1)
        throw Error(ErrorKind::kInvalidArgument, "charge outside {-1,0,+1}");
      gp.charges(k, charge_to_class(charge)) = 1.0;
      const int i = gp.mask_indices[k];
      gp.feature_labels.row(i).setZero();
      gp.feature_labels(i, static_cast<int>(feature_from_json(a.at("feature")))) = 1.0;
      gp.coords.row(k) = vec3_from_json(a.at("pos"));
    }
    std::vector<int> local(gp.num_atoms, -1);
    for (int k = 0; k < m; ++k)
      local[gp.mask_indices[k]] = k;
    for (const Json &b: j.value("bonds", Json::array())) {
      const int a = b.at("a").get<int>(), c = b.at("b").get<int>();
      const int type = b.at("type").get<int>();
      if (a < 0 || c < 0 || a >= gp.num_atoms || c >= gp.num_atoms
          || local[a] < 0 || local[c] < 0 || a == c)
        throw Error(ErrorKind::kMaskOutOfRange, "bond outside the mask");
      if (type < 1 || type >= kNumBondTypes)
        throw Error(ErrorKind::kUnknownBondOrder, std::to_string(type));
      for (auto [p, q]: { std::pair { local[a], local[c] },
                          std::pair { local[c], local[a] } }) {
        gp.bonds.row(pair_index(m, p, q)).setZero();
        gp.bonds(pair_index(m, p, q), type) = 1.0;
      }
    }
    for (const Json &g: j.value("feature_groups", Json::array())) {
      FeatureGroup fg { feature_from_json(g.at("type")),
                        g.at("atoms").get<std::vector<int>>() };
      for (int a: fg.atoms)
        if (a < 0 || a >= gp.num_atoms || local[a] < 0)
          throw Error(ErrorKind::kMaskOutOfRange,
                      "feature group atom outside the mask");
      if (fg.atoms.empty())
        throw Error(ErrorKind::kInvalidArgument, "empty feature group");
      gp.feature_groups.push_back(std::move(fg));
    }
    return gp;
  } catch (const Json::exception &e) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string("bad pharmacophore JSON: ") + e.what());
  }
}

inline Json to_json(const Hypothesis &h) {
  Json feats = Json::array();
  for (const HypothesisFeature &f: h.features)
    feats.push_back({ { "type", std::string(feature_name(f.type)) },
                      { "pos", json_internal::vec3_to_json(f.pos) } });
  Json j = { { "features", feats }, { "tol", h.tol } };
  if (h.source)
    j["pharmacophore"] = to_json(*h.source);
  return j;
}

inline Hypothesis hypothesis_from_json(const Json &j) {
  using namespace json_internal;
  try {
    Hypothesis h;
    for (const Json &f: j.at("features"))
      h.features.push_back(
          { feature_from_json(f.at("type")), vec3_from_json(f.at("pos")) });
    h.tol = j.value("tol", 1.0);
    if (j.contains("pharmacophore"))
      h.source = pharmacophore_from_json(j.at("pharmacophore"));
    return h;
  } catch (const Json::exception &e) {
    throw Error(ErrorKind::kInvalidArgument,
                std::string("bad hypothesis JSON: ") + e.what());
  }
}

inline Json to_json(const MatchResult &r) {
  Json mapping = Json::array();
  for (const auto &m: r.mapping)
    mapping.push_back(m ? Json(*m) : Json(nullptr));
  return { { "ms", r.score.value() },
           { "matched_pairs", r.score.matched_pairs },
           { "total_pairs", r.score.total_pairs },
           { "mapping", mapping } };
}

}  // namespace phdiff

#endif  // PHDIFF_PHARMAKIT_JSON_IO_HPP_
