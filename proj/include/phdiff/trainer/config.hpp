//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_TRAINER_CONFIG_HPP_
#define PHDIFF_TRAINER_CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "phdiff/core.hpp"
#include "phdiff/denoiser/model.hpp"
#include "phdiff/diffusion/schedule.hpp"
#include "phdiff/diffusion/transitions.hpp"
#include "phdiff/trainer/loss.hpp"

namespace phdiff {

using Json = nlohmann::json;

struct TrainConfig {
  int epochs = 30;
  int batch_size = 8;
  double learning_rate = 3e-4;
  std::uint64_t seed = 0;
  std::string dataset;  // SDF path, informational when a dataset is passed directly
  LossWeights weights;
  ScheduleConfig schedule;
  DenoiserConfig model;

  void validate() const {
    if (epochs < 1 || batch_size < 1)
      throw Error(ErrorKind::kInvalidArgument, "epochs and batch_size must be positive");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
      throw Error(ErrorKind::kInvalidArgument, "learning_rate must be finite and nonnegative");
    if (schedule.T < 1)
      throw Error(ErrorKind::kInvalidT, "T must be positive");
    weights.validate();
    model.validate();
  }
};

namespace config_internal {

inline void reject_unknown(const Json &j, const std::set<std::string> &known, const char *what) {
  if (!j.is_object())
    throw Error(ErrorKind::kInvalidArgument, std::string(what) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw Error(ErrorKind::kInvalidArgument,
                  "unknown key '" + it.key() + "' in " + what);
}

template <class T>
void read_if(const Json &j, const char *key, T &dst) {
  if (j.contains(key))
    dst = j.at(key).get<T>();
}

}  // namespace config_internal

inline Json to_json(const LossWeights &w) {
  Json j = Json::object();
  for (int k = 0; k < kNumLossTerms; ++k)
    j[std::string(loss_term_name(LossTerm(k)))] = w.w[k];
  return j;
}

inline LossWeights loss_weights_from_json(const Json &j) {
  LossWeights w;
  std::set<std::string> known;
  for (int k = 0; k < kNumLossTerms; ++k)
    known.insert(std::string(loss_term_name(LossTerm(k))));
  config_internal::reject_unknown(j, known, "weights");
  for (int k = 0; k < kNumLossTerms; ++k)
    config_internal::read_if(j, std::string(loss_term_name(LossTerm(k))).c_str(), w.w[k]);
  return w;
}

inline Json to_json(const ScheduleConfig &c) {
  Json nu = Json::object();
  for (int k = 0; k < kNumModalities; ++k)
    nu[std::string(modality_name(Modality(k)))] = c.nu[k];
  return { { "T", c.T }, { "nu", nu }, { "s", c.s } };
}

inline ScheduleConfig schedule_config_from_json(const Json &j) {
  using namespace config_internal;
  reject_unknown(j, { "T", "nu", "s" }, "schedule");
  ScheduleConfig c;
  read_if(j, "T", c.T);
  read_if(j, "s", c.s);
  if (j.contains("nu")) {
    std::set<std::string> known;
    for (int k = 0; k < kNumModalities; ++k)
      known.insert(std::string(modality_name(Modality(k))));
    reject_unknown(j.at("nu"), known, "schedule.nu");
    for (int k = 0; k < kNumModalities; ++k)
      read_if(j.at("nu"), std::string(modality_name(Modality(k))).c_str(), c.nu[k]);
  }
  return c;
}

inline Json to_json(const DenoiserConfig &c) {
  return { { "layers", c.layers },         { "width", c.width },
           { "heads", c.heads },           { "edge_width", c.edge_width },
           { "time_dim", c.time_dim },     { "ffn_mult", c.ffn_mult },
           { "timesteps", c.timesteps },   { "dropout", c.dropout } };
}

inline DenoiserConfig denoiser_config_from_json(const Json &j) {
  using namespace config_internal;
  reject_unknown(j, { "layers", "width", "heads", "edge_width", "time_dim", "ffn_mult",
                      "timesteps", "dropout" },
                 "model");
  DenoiserConfig c;
  read_if(j, "layers", c.layers);
  read_if(j, "width", c.width);
  read_if(j, "heads", c.heads);
  read_if(j, "edge_width", c.edge_width);
  read_if(j, "time_dim", c.time_dim);
  read_if(j, "ffn_mult", c.ffn_mult);
  read_if(j, "timesteps", c.timesteps);
  read_if(j, "dropout", c.dropout);
  return c;
}

inline Json to_json(const Marginals &m) {
  auto row = [](const RowVector &r) { return std::vector<double>(r.data(), r.data() + r.size()); };
  return { { "atom_types", row(m.atom_types) },
           { "charges", row(m.charges) },
           { "bonds", row(m.bonds) } };
}

inline Marginals marginals_from_json(const Json &j) {
  config_internal::reject_unknown(j, { "atom_types", "charges", "bonds" }, "marginals");
  Marginals m;
  auto read = [&](const char *key, RowVector &dst) {
    const auto v = j.at(key).get<std::vector<double>>();
    if (static_cast<Eigen::Index>(v.size()) != dst.size())
      throw Error(ErrorKind::kCheckpointMismatch, std::string("marginal size of ") + key);
    for (size_t k = 0; k < v.size(); ++k)
      dst(static_cast<Eigen::Index>(k)) = v[k];
  };
  read("atom_types", m.atom_types);
  read("charges", m.charges);
  read("bonds", m.bonds);
  return m;
}

inline Json to_json(const TrainConfig &c) {
  return { { "epochs", c.epochs },
           { "batch_size", c.batch_size },
           { "learning_rate", c.learning_rate },
           { "seed", c.seed },
           { "dataset", c.dataset },
           { "weights", to_json(c.weights) },
           { "schedule", to_json(c.schedule) },
           { "model", to_json(c.model) } };
}

// Missing keys keep their defaults; unknown keys are rejected. The model's
// timestep count follows the schedule.
inline TrainConfig train_config_from_json(const Json &j) {
  using namespace config_internal;
  reject_unknown(j, { "epochs", "batch_size", "learning_rate", "seed", "dataset", "weights",
                      "schedule", "model" },
                 "train config");
  TrainConfig c;
  try {
    read_if(j, "epochs", c.epochs);
    read_if(j, "batch_size", c.batch_size);
    read_if(j, "learning_rate", c.learning_rate);
    read_if(j, "seed", c.seed);
    read_if(j, "dataset", c.dataset);
    if (j.contains("weights"))
      c.weights = loss_weights_from_json(j.at("weights"));
    if (j.contains("schedule"))
      c.schedule = schedule_config_from_json(j.at("schedule"));
    if (j.contains("model"))
      c.model = denoiser_config_from_json(j.at("model"));
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::kInvalidArgument, std::string("train config: ") + e.what());
  }
  c.model.timesteps = c.schedule.T;
  c.validate();
  return c;
}

inline TrainConfig load_train_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::kIo, "cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::kInvalidArgument, path + ": " + e.what());
  }
  return train_config_from_json(j);
}

}  // namespace phdiff

#endif  // PHDIFF_TRAINER_CONFIG_HPP_
