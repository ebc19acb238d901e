//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_TRAINER_TRAIN_HPP_
#define PHDIFF_TRAINER_TRAIN_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <vector>

#include "phdiff/core.hpp"
#include "phdiff/denoiser/autodiff.hpp"
#include "phdiff/denoiser/conditioning.hpp"
#include "phdiff/denoiser/model.hpp"
#include "phdiff/diffusion/process.hpp"
#include "phdiff/diffusion/schedule.hpp"
#include "phdiff/diffusion/transitions.hpp"
#include "phdiff/pharmakit/features.hpp"
#include "phdiff/trainer/checkpoint.hpp"
#include "phdiff/trainer/config.hpp"
#include "phdiff/trainer/loss.hpp"

namespace phdiff {

// Uniform timesteps in [1, T].
inline std::vector<int> t_sample(int batch, int T, std::uint64_t seed) {
  if (batch < 0)
    throw Error(ErrorKind::kInvalidArgument, "batch must be nonnegative");
  if (T < 1)
    throw Error(ErrorKind::kInvalidT, "T must be positive");
  Rng rng = make_rng(seed, 0x74696d65);
  std::vector<int> ts(static_cast<size_t>(batch));
  for (int &t: ts)
    t = static_cast<int>(uniform_int(rng, 1, T));
  return ts;
}

// Bias-corrected first/second-moment optimizer.
class Adam {
public:
  explicit Adam(double lr = 3e-4, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) { }

  void step(ParamStore &params, const std::vector<Matrix> &grads) {
    if (static_cast<int>(grads.size()) != params.size())
      throw Error(ErrorKind::kShapeMismatch, "one gradient per parameter tensor expected");
    if (m_.empty()) {
      for (int i = 0; i < params.size(); ++i) {
        m_.push_back(Matrix::Zero(params.value(i).rows(), params.value(i).cols()));
        v_.push_back(m_.back());
      }
    }
    ++steps_;
    const double c1 = 1.0 - std::pow(b1_, steps_);
    const double c2 = 1.0 - std::pow(b2_, steps_);
    for (int i = 0; i < params.size(); ++i) {
      m_[i] = b1_ * m_[i] + (1 - b1_) * grads[i];
      v_[i] = b2_ * v_[i] + (1 - b2_) * grads[i].cwiseAbs2();
      params.value(i).array() -=
          lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
    }
  }

  int steps() const { return steps_; }

private:
  double lr_, b1_, b2_, eps_;
  int steps_ = 0;
  std::vector<Matrix> m_, v_;
};

struct TrainItem {
  MolGraph mol;           // centered
  PharmacophoreGraph gp;  // in the molecule's frame; may be empty
};

// Centers each molecule and attaches a sampled hypothesis. Molecules with
// too few distinct features train the unconditional path (empty mask).
inline std::vector<TrainItem> make_training_set(const std::vector<MolGraph> &mols,
                                                std::uint64_t seed) {
  std::vector<TrainItem> items;
  items.reserve(mols.size());
  for (size_t k = 0; k < mols.size(); ++k) {
    TrainItem it { mols[k], {} };
    it.mol.center();
    try {
      it.gp = sample_hypothesis(it.mol, hash_combine(seed, k)).second;
    } catch (const Error &e) {
      if (e.kind() != ErrorKind::kTooFewFeatures && e.kind() != ErrorKind::kDegenerateHypothesis)
        throw;
      it.gp = PharmacophoreGraph::empty_for(it.mol.num_atoms());
    }
    items.push_back(std::move(it));
  }
  return items;
}

struct EpochStats {
  int epoch = 0;
  double total = 0.0;                      // fixed-draw monitor loss
  std::array<double, kNumLossTerms> terms {};
  double batch_mean = std::nan("");        // mean minibatch loss while training
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochStats> history;
};

inline void write_loss_csv(std::ostream &out, const std::vector<EpochStats> &history) {
  out << "epoch,total";
  for (int k = 0; k < kNumLossTerms; ++k)
    out << ',' << loss_term_name(LossTerm(k));
  out << ",batch_mean\n";
  out << std::setprecision(12);
  for (const EpochStats &s: history) {
    out << s.epoch << ',' << s.total;
    for (double v: s.terms)
      out << ',' << v;
    out << ',';
    if (!std::isnan(s.batch_mean))
      out << s.batch_mean;
    out << '\n';
  }
}

namespace train_internal {

// One noised, conditioned training example.
struct Draw {
  NoisyGraph input;
  PharmacophoreGraph cond;
  int t = 1;
};

inline Draw make_draw(const TrainItem &item, int t, const NoiseSchedule &sched,
                      const TransitionKit &kit, std::uint64_t seed) {
  Draw d;
  d.t = t;
  Rng rng = make_rng(seed, 0x6e6f6973);
  d.input = forward_noise(as_noisy(item.mol), t, sched, kit, rng);
  d.cond = item.gp;
  condition_in_place(d.input, d.cond);
  return d;
}

inline void check_finite(double v, int epoch) {
  if (!std::isfinite(v))
    throw Error(ErrorKind::kDivergedLoss,
                "non-finite loss in epoch " + std::to_string(epoch));
}

// Blown-up parameters surface as non-finite activations; report them as
// divergence.
template <class F>
auto guarded(int epoch, F &&f) {
  try {
    return f();
  } catch (const Error &e) {
    if (e.kind() != ErrorKind::kNonFiniteActivation)
      throw;
    throw Error(ErrorKind::kDivergedLoss,
                "non-finite activation in epoch " + std::to_string(epoch));
  }
}

}  // namespace train_internal

struct TrainOptions {
  // Called after every epoch (including the initial evaluation as epoch 0).
  std::function<void(const EpochStats &)> on_epoch;
};

// Minibatch training. Each epoch visits the items in a seeded shuffle with
// fresh timesteps and noise. Progress is tracked by a fixed-draw monitor:
// every item with one timestep and noise draw chosen once per run,
// evaluated without dropout, so a frozen model yields a constant curve.
// Epoch 0 is the monitor on the initial parameters.
inline TrainResult train(const TrainConfig &config, const std::vector<TrainItem> &items,
                         const TrainOptions &opts = {}) {
  using namespace train_internal;
  if (items.empty())
    throw Error(ErrorKind::kEmptyDataset, "training needs at least one molecule");
  // Loss targets live in the centered frame; the pharmacophore follows.
  std::vector<TrainItem> dataset = items;
  for (TrainItem &it: dataset) {
    if (it.gp.num_atoms != it.mol.num_atoms())
      throw Error(ErrorKind::kShapeMismatch, "pharmacophore is hosted in a different graph");
    const Vec3 c = it.mol.coords.colwise().mean();
    it.mol.coords.rowwise() -= c;
    it.gp.coords.rowwise() -= c;
  }
  TrainConfig cfg = config;
  cfg.model.timesteps = cfg.schedule.T;
  cfg.validate();

  std::vector<MolGraph> mols;
  mols.reserve(dataset.size());
  for (const TrainItem &it: dataset)
    mols.push_back(it.mol);

  TrainResult res;
  Checkpoint &ck = res.checkpoint;
  ck.config = cfg;
  ck.marginals = estimate_marginals(mols);
  for (const MolGraph &m: mols) {
    const auto n = static_cast<size_t>(m.num_atoms());
    if (ck.size_histogram.size() <= n)
      ck.size_histogram.resize(n + 1, 0);
    ++ck.size_histogram[n];
  }
  ck.model = Denoiser(cfg.model, hash_combine(cfg.seed, 0x6d6f64656c));
  Denoiser &model = ck.model;

  const NoiseSchedule sched = build_schedule(cfg.schedule);
  const TransitionKit kit(sched, ck.marginals);
  const int N = static_cast<int>(dataset.size());

  std::vector<Draw> monitor;
  monitor.reserve(dataset.size());
  {
    const std::vector<int> ts = t_sample(N, sched.T(), hash_combine(cfg.seed, 0x6d6f6e));
    for (int i = 0; i < N; ++i)
      monitor.push_back(make_draw(dataset[i], ts[i], sched, kit,
                                  hash_combine(cfg.seed, 0x6d000000ULL + i)));
  }

  auto evaluate = [&](int epoch) {
    EpochStats s;
    s.epoch = epoch;
    for (int i = 0; i < N; ++i) {
      const Draw &d = monitor[i];
      Tape tape;
      const DenoiserVars v =
          guarded(epoch, [&] { return model.forward(tape, model.bind(tape, false), d.input, d.cond, d.t); });
      const LossResult l = loss(v, dataset[i].mol, dataset[i].gp, cfg.weights);
      check_finite(l.value(), epoch);
      s.total += l.value();
      for (int k = 0; k < kNumLossTerms; ++k)
        s.terms[k] += l.terms[k];
    }
    s.total /= N;
    for (double &v: s.terms)
      v /= N;
    return s;
  };

  auto record = [&](const EpochStats &s) {
    res.history.push_back(s);
    ck.history.push_back(s.total);
    if (opts.on_epoch)
      opts.on_epoch(s);
  };
  record(evaluate(0));

  Adam adam(cfg.learning_rate);
  std::vector<int> order(static_cast<size_t>(N));
  std::vector<Matrix> grads(static_cast<size_t>(model.params().size()));
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::uint64_t eseed = hash_combine(cfg.seed, 0x65706f6368ULL + epoch);
    for (int i = 0; i < N; ++i)
      order[i] = i;
    Rng shuffle = make_rng(eseed, 1);
    for (int i = N - 1; i > 0; --i)
      std::swap(order[i], order[uniform_int(shuffle, 0, i)]);
    const std::vector<int> ts = t_sample(N, sched.T(), hash_combine(eseed, 2));
    Rng dropout = make_rng(eseed, 3);

    double batch_sum = 0.0;
    for (int start = 0; start < N; start += cfg.batch_size) {
      const int stop = std::min(N, start + cfg.batch_size);
      const double inv = 1.0 / (stop - start);
      for (int s = 0; s < model.params().size(); ++s)
        grads[s].setZero(model.params().value(s).rows(), model.params().value(s).cols());
      for (int pos = start; pos < stop; ++pos) {
        const int i = order[pos];
        const Draw d = make_draw(dataset[i], ts[pos], sched, kit, hash_combine(eseed, 0x100 + pos));
        Tape tape;
        const std::vector<Var> p = model.bind(tape, true);
        const DenoiserVars v = guarded(epoch, [&] {
          return model.forward(tape, p, d.input, d.cond, d.t,
                               cfg.model.dropout > 0 ? &dropout : nullptr);
        });
        const LossResult l = loss(v, dataset[i].mol, dataset[i].gp, cfg.weights);
        check_finite(l.value(), epoch);
        batch_sum += l.value();
        tape.backward(l.total);
        for (int s = 0; s < static_cast<int>(p.size()); ++s)
          grads[s] += inv * tape.grad(p[s]);
      }
      adam.step(model.params(), grads);
    }
    EpochStats s = evaluate(epoch);
    s.batch_mean = batch_sum / N;
    record(s);
  }
  return res;
}

}  // namespace phdiff

#endif  // PHDIFF_TRAINER_TRAIN_HPP_
