//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_DENOISER_MODEL_HPP_
#define PHDIFF_DENOISER_MODEL_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "phdiff/core.hpp"
#include "phdiff/denoiser/autodiff.hpp"
#include "phdiff/denoiser/conditioning.hpp"
#include "phdiff/molio/molgraph.hpp"
#include "phdiff/pharmakit/features.hpp"

namespace phdiff {

struct DenoiserConfig {
  int layers = 4;
  int width = 64;
  int heads = 4;
  int edge_width = 16;
  int time_dim = 32;
  int ffn_mult = 2;
  int timesteps = 500;  // t is embedded as a fraction of this
  double dropout = 0.1;

  void validate() const {
    if (layers < 1 || width < 1 || heads < 1 || edge_width < 1 || time_dim < 2
        || ffn_mult < 1 || timesteps < 1)
      throw Error(ErrorKind::kInvalidArgument, "denoiser sizes must be positive");
    if (width % heads != 0)
      throw Error(ErrorKind::kInvalidArgument, "width must be divisible by heads");
    if (time_dim % 2 != 0)
      throw Error(ErrorKind::kInvalidArgument, "time_dim must be even");
    if (dropout < 0 || dropout >= 1)
      throw Error(ErrorKind::kInvalidArgument, "dropout must lie in [0, 1)");
  }
};

inline constexpr int kNodeInputWidth = kNumElements + kNumCharges + kNumFeatureTypes;
inline constexpr int kDistanceFeatures = 3;

// Named parameter tensors in a fixed registration order.
class ParamStore {
public:
  int add(std::string name, Matrix value) {
    if (index_.count(name))
      throw Error(ErrorKind::kInvalidArgument, "duplicate parameter " + name);
    index_[name] = size();
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return size() - 1;
  }

  int size() const { return static_cast<int>(values_.size()); }
  const std::string &name(int i) const { return names_[i]; }
  Matrix &value(int i) { return values_[i]; }
  const Matrix &value(int i) const { return values_[i]; }
  std::vector<Matrix> &values() { return values_; }
  const std::vector<Matrix> &values() const { return values_; }

  std::optional<int> find(const std::string &name) const {
    auto it = index_.find(name);
    if (it == index_.end())
      return std::nullopt;
    return it->second;
  }

  Eigen::Index count() const {
    Eigen::Index c = 0;
    for (const Matrix &v: values_)
      c += v.size();
    return c;
  }

private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
  std::unordered_map<std::string, int> index_;
};

struct DenoiserOutput {
  Matrix atom_logits;    // n x d
  Matrix charge_logits;  // n x a
  Coords coords;         // n x 3, zero CoM
  Matrix bond_logits;    // n*n x b, symmetric
};

struct DenoiserVars {
  Var atom_logits;
  Var charge_logits;
  Var coords;
  Var bond_logits;
};

class Denoiser {
public:
  struct Mlp {
    int w1, b1, w2, b2;
  };

  struct Layer {
    int e_w, e_u, e_d, e_b, e_w2, e_b2, e_ln_g, e_ln_b;
    int q, k, v, bias, o, o_b, ln1_g, ln1_b;
    int c_q, c_k, c_v, c_a, c_o;
    int f1, f1_b, f2, f2_b, ln2_g, ln2_b;
    int p1, p1_b, p2, p2_b;
  };

  Denoiser() = default;

  Denoiser(const DenoiserConfig &cfg, std::uint64_t seed): cfg_(cfg) {
    cfg_.validate();
    Rng rng = make_rng(seed, 0x696e6974);
    layout(&rng);
  }

  // Adopt stored tensors (e.g. from a checkpoint); names and shapes must
  // match the layout implied by cfg.
  Denoiser(const DenoiserConfig &cfg, const ParamStore &stored): cfg_(cfg) {
    cfg_.validate();
    layout(nullptr);
    if (stored.size() != params_.size())
      throw Error(ErrorKind::kCheckpointMismatch,
                  "expected " + std::to_string(params_.size()) + " tensors, found "
                      + std::to_string(stored.size()));
    for (int i = 0; i < params_.size(); ++i) {
      auto j = stored.find(params_.name(i));
      if (!j)
        throw Error(ErrorKind::kCheckpointMismatch, "missing tensor " + params_.name(i));
      const Matrix &v = stored.value(*j);
      if (v.rows() != params_.value(i).rows() || v.cols() != params_.value(i).cols())
        throw Error(ErrorKind::kCheckpointMismatch, "shape of " + params_.name(i));
      params_.value(i) = v;
    }
  }

  const DenoiserConfig &config() const { return cfg_; }
  ParamStore &params() { return params_; }
  const ParamStore &params() const { return params_; }
  Eigen::Index parameter_count() const { return params_.count(); }

  // Parameters as tape leaves (trainable) or borrowed constants.
  std::vector<Var> bind(Tape &tape, bool trainable) const {
    std::vector<Var> p;
    p.reserve(params_.size());
    for (int i = 0; i < params_.size(); ++i)
      p.push_back(trainable ? tape.leaf_ref(params_.value(i), i)
                            : tape.constant_ref(params_.value(i)));
    return p;
  }

  // Node input h = [X, C, F_p] for every atom. The NONE label encodes as a
  // zero feature block, so an unconstrained atom reads [X, C, 0].
  static Matrix node_inputs(const NoisyGraph &g, const PharmacophoreGraph &gp) {
    const int n = g.num_atoms();
    Matrix h(n, kNodeInputWidth);
    h << g.atom_types, g.charges, gp.feature_labels;
    h.col(kNumElements + kNumCharges).setZero();
    return h;
  }

  // h_p = [X_p, C_p, F_p] for the masked atoms.
  static Matrix pharm_inputs(const PharmacophoreGraph &gp) {
    Matrix h(gp.mask_size(), kNodeInputWidth);
    h << gp.atom_types, gp.charges, gp.masked_features();
    h.col(kNumElements + kNumCharges).setZero();
    return h;
  }

  Var encode_nodes(Tape &tape, const std::vector<Var> &p, const Matrix &h) const {
    if (h.cols() != kNodeInputWidth)
      throw Error(ErrorKind::kShapeMismatch, "node input width");
    return mlp(tape.constant(h), p, enc_h_);
  }

  Var encode_pharm(Tape &tape, const std::vector<Var> &p, const Matrix &hp) const {
    if (hp.cols() != kNodeInputWidth)
      throw Error(ErrorKind::kShapeMismatch, "pharmacophore input width");
    return mlp(tape.constant(hp), p, enc_hp_);
  }

  // Bilinear-scored attention of molecule nodes over pharmacophore nodes,
  // added back residually. An empty pharmacophore leaves h untouched.
  Var cross_attend(const std::vector<Var> &p, int layer, Var h, Var hp,
                   Matrix *weights = nullptr) const {
    using namespace ad;
    if (hp.rows() == 0)
      return h;
    if (h.cols() != cfg_.width || hp.cols() != cfg_.width)
      throw Error(ErrorKind::kShapeMismatch, "cross-attention widths");
    const Layer &L = layers_[layer];
    Var q = matmul(h, p[L.c_q]);
    Var k = matmul(hp, p[L.c_k]);
    Var v = matmul(hp, p[L.c_v]);
    Var scores = scale(matmul_nt(matmul(q, p[L.c_a]), k), 1.0 / std::sqrt(cfg_.width));
    Var attn = softmax_rows(scores);
    if (weights)
      *weights = attn.value();
    return add(h, matmul(matmul(attn, v), p[L.c_o]));
  }

  // Full pass on a tape. `dropout_rng` enables dropout (training mode).
  DenoiserVars forward(Tape &tape, const std::vector<Var> &p, const NoisyGraph &g_in,
                       const PharmacophoreGraph &gp, int t,
                       Rng *dropout_rng = nullptr) const {
    using namespace ad;
    const int n = g_in.num_atoms();
    if (n < 1 || g_in.charges.rows() != n || g_in.coords.rows() != n
        || g_in.bonds.rows() != static_cast<Eigen::Index>(n) * n
        || g_in.atom_types.cols() != kNumElements || g_in.charges.cols() != kNumCharges
        || g_in.bonds.cols() != kNumBondTypes)
      throw Error(ErrorKind::kShapeMismatch, "noisy graph tensors are inconsistent");
    if (static_cast<int>(p.size()) != params_.size())
      throw Error(ErrorKind::kShapeMismatch, "parameter binding has the wrong size");
    check_mask(gp, n);
    const int m = gp.mask_size();
    const bool cond = m > 0;
    NoisyGraph g = cond ? inpaint_input(com_adjust(g_in, gp), gp) : g_in;

    // Node embeddings: MLP_h everywhere, MLP_hp on masked rows, plus time.
    Var h = encode_nodes(tape, p, node_inputs(g, gp));
    Var hp;
    if (cond) {
      hp = encode_pharm(tape, p, pharm_inputs(gp));
      h = replace_rows(h, gp.mask_indices, hp);
    } else {
      hp = tape.constant(Matrix::Zero(0, cfg_.width));
    }
    Var temb = silu(add_row(matmul(tape.constant(time_features(t)), p[time_w_]),
                            p[time_b_]));
    h = add_row(h, temb);

    Var pos = tape.constant(g.coords);
    Var rp = tape.constant(gp.coords);

    Var e = mlp(concat_cols({ tape.constant(g.bonds), distance_features(pos) }), p,
                enc_e_);

    for (int l = 0; l < cfg_.layers; ++l) {
      const Layer &L = layers_[l];
      Var dfeat = distance_features(pos);

      // Edge update from both endpoints (shared projection keeps symmetry).
      Var u = matmul(h, p[L.e_u]);
      Var msg = add(matmul(e, p[L.e_w]), add(pair_rows_i(u), pair_rows_j(u)));
      msg = silu(add_row(add(msg, matmul(dfeat, p[L.e_d])), p[L.e_b]));
      e = layer_norm(add(e, add_row(matmul(msg, p[L.e_w2]), p[L.e_b2])), p[L.e_ln_g],
                     p[L.e_ln_b]);

      // Multi-head self-attention with an additive per-head edge bias.
      const int heads = cfg_.heads;
      const int dh = cfg_.width / heads;
      Var q = matmul(h, p[L.q]);
      Var k = matmul(h, p[L.k]);
      Var v = matmul(h, p[L.v]);
      Var bias = matmul(e, p[L.bias]);
      std::vector<Var> outs;
      for (int hd = 0; hd < heads; ++hd) {
        Var s = scale(matmul_nt(slice_cols(q, hd * dh, dh), slice_cols(k, hd * dh, dh)),
                      1.0 / std::sqrt(dh));
        s = add(s, pair_to_square(bias, n, hd));
        outs.push_back(matmul(softmax_rows(s), slice_cols(v, hd * dh, dh)));
      }
      Var att = add_row(matmul(concat_cols(outs), p[L.o]), p[L.o_b]);
      att = dropout(tape, att, dropout_rng);
      h = layer_norm(add(h, att), p[L.ln1_g], p[L.ln1_b]);

      h = cross_attend(p, l, h, hp);

      Var ff = silu(add_row(matmul(h, p[L.f1]), p[L.f1_b]));
      ff = dropout(tape, ff, dropout_rng);
      ff = add_row(matmul(ff, p[L.f2]), p[L.f2_b]);
      h = layer_norm(add(h, ff), p[L.ln2_g], p[L.ln2_b]);

      pos = position_update(p, pos, e, distance_features(pos), L.p1, L.p1_b, L.p2,
                            L.p2_b);
      if (cond)
        pos = reinject(pos, rp, gp.mask_indices);
    }

    Var x_hat = mlp(h, p, head_x_);
    Var c_hat = mlp(h, p, head_c_);
    Var e_hat = symmetrize_pairs(mlp(e, p, head_e_), n);
    Var r_hat = center_rows(position_update(p, pos, e, distance_features(pos),
                                            final_pos_.w1, final_pos_.b1, final_pos_.w2,
                                            final_pos_.b2));
    for (Var out: { x_hat, c_hat, e_hat, r_hat })
      if (!out.value().allFinite())
        throw Error(ErrorKind::kNonFiniteActivation, "denoiser produced non-finite output");
    return { x_hat, c_hat, r_hat, e_hat };
  }

  // Inference pass without gradients or dropout.
  DenoiserOutput predict(const NoisyGraph &g, const PharmacophoreGraph &gp, int t) const {
    Tape tape;
    std::vector<Var> p = bind(tape, false);
    DenoiserVars v = forward(tape, p, g, gp, t);
    return { v.atom_logits.value(), v.charge_logits.value(), v.coords.value(),
             v.bond_logits.value() };
  }

  DenoiserOutput predict(const NoisyGraph &g, int t) const {
    return predict(g, PharmacophoreGraph::empty_for(g.num_atoms()), t);
  }

  // Sinusoids of t/T with angular frequencies from pi/2 to 32 pi, so every
  // component varies smoothly over the whole trajectory.
  Matrix time_features(int t) const {
    const int half = cfg_.time_dim / 2;
    Matrix f(1, cfg_.time_dim);
    const double x = static_cast<double>(t) / cfg_.timesteps;
    for (int k = 0; k < half; ++k) {
      const double freq =
          0.5 * std::numbers::pi * std::pow(64.0, half > 1 ? double(k) / (half - 1) : 0.0);
      f(0, k) = std::sin(x * freq);
      f(0, half + k) = std::cos(x * freq);
    }
    return f;
  }

private:
  Var mlp(Var x, const std::vector<Var> &p, const Mlp &m) const {
    using namespace ad;
    return add_row(matmul(silu(add_row(matmul(x, p[m.w1]), p[m.b1])), p[m.w2]), p[m.b2]);
  }

  // Invariant pair features of squared distances.
  static Var distance_features(Var pos) {
    using namespace ad;
    Var rel = sub(pair_rows_i(pos), pair_rows_j(pos));
    Var d2 = row_sum(mul(rel, rel));
    return concat_cols({ scale(d2, 0.1), exp(scale(d2, -0.5)), exp(scale(d2, -0.125)) });
  }

  // p_i + (1/n) sum_j (p_i - p_j) phi_ij with phi_ij invariant in (-1, 1).
  Var position_update(const std::vector<Var> &p, Var pos, Var e, Var dfeat, int w1,
                      int b1, int w2, int b2) const {
    using namespace ad;
    const Eigen::Index n = pos.rows();
    Var hid = silu(add_row(matmul(concat_cols({ e, dfeat }), p[w1]), p[b1]));
    Var phi = tanh(add_row(matmul(hid, p[w2]), p[b2]));
    Var rel = sub(pair_rows_i(pos), pair_rows_j(pos));
    Var delta = scale(sum_over_j(mul_col(rel, phi), n), 1.0 / static_cast<double>(n));
    return add(pos, delta);
  }

  // Align the masked mean to the pharmacophore mean, then pin masked rows.
  static Var reinject(Var pos, Var rp, const std::vector<int> &mask) {
    using namespace ad;
    Var shift = sub(mean_rows(rp), mean_rows(gather_rows(pos, mask)));
    return replace_rows(add_row(pos, shift), mask, rp);
  }

  Var dropout(Tape &tape, Var x, Rng *rng) const {
    if (!rng || cfg_.dropout <= 0)
      return x;
    const double keep = 1.0 - cfg_.dropout;
    Matrix mask(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < mask.size(); ++i)
      mask.data()[i] = uniform_real(*rng) < keep ? 1.0 / keep : 0.0;
    return ad::mul(x, tape.constant(std::move(mask)));
  }

  Matrix glorot(Rng *rng, int rows, int cols, double gain = 1.0) {
    Matrix w = Matrix::Zero(rows, cols);
    if (!rng)
      return w;
    const double limit = gain * std::sqrt(6.0 / (rows + cols));
    for (Eigen::Index i = 0; i < w.size(); ++i)
      w.data()[i] = limit * (2.0 * uniform_real(*rng) - 1.0);
    return w;
  }

  int weight(Rng *rng, const std::string &name, int rows, int cols, double gain = 1.0) {
    return params_.add(name, glorot(rng, rows, cols, gain));
  }

  int zeros(const std::string &name, int cols) {
    return params_.add(name, Matrix::Zero(1, cols));
  }

  int ones(const std::string &name, int cols) {
    return params_.add(name, Matrix::Ones(1, cols));
  }

  Mlp make_mlp(Rng *rng, const std::string &name, int in, int hidden, int out,
               double out_gain = 1.0) {
    Mlp m;
    m.w1 = weight(rng, name + ".w1", in, hidden);
    m.b1 = zeros(name + ".b1", hidden);
    m.w2 = weight(rng, name + ".w2", hidden, out, out_gain);
    m.b2 = zeros(name + ".b2", out);
    return m;
  }

  void layout(Rng *rng) {
    const int w = cfg_.width, we = cfg_.edge_width;
    enc_h_ = make_mlp(rng, "enc_h", kNodeInputWidth, w, w);
    enc_hp_ = make_mlp(rng, "enc_hp", kNodeInputWidth, w, w);
    time_w_ = weight(rng, "time.w", cfg_.time_dim, w);
    time_b_ = zeros("time.b", w);
    enc_e_ = make_mlp(rng, "enc_e", kNumBondTypes + kDistanceFeatures, we, we);
    layers_.clear();
    for (int l = 0; l < cfg_.layers; ++l) {
      const std::string pre = "layer" + std::to_string(l) + ".";
      Layer L;
      L.e_w = weight(rng, pre + "edge.w", we, we);
      L.e_u = weight(rng, pre + "edge.u", w, we);
      L.e_d = weight(rng, pre + "edge.d", kDistanceFeatures, we);
      L.e_b = zeros(pre + "edge.b", we);
      L.e_w2 = weight(rng, pre + "edge.w2", we, we);
      L.e_b2 = zeros(pre + "edge.b2", we);
      L.e_ln_g = ones(pre + "edge.ln.g", we);
      L.e_ln_b = zeros(pre + "edge.ln.b", we);
      L.q = weight(rng, pre + "attn.q", w, w);
      L.k = weight(rng, pre + "attn.k", w, w);
      L.v = weight(rng, pre + "attn.v", w, w);
      L.bias = weight(rng, pre + "attn.edge_bias", we, cfg_.heads);
      L.o = weight(rng, pre + "attn.o", w, w);
      L.o_b = zeros(pre + "attn.o.b", w);
      L.ln1_g = ones(pre + "ln1.g", w);
      L.ln1_b = zeros(pre + "ln1.b", w);
      L.c_q = weight(rng, pre + "cross.q", w, w);
      L.c_k = weight(rng, pre + "cross.k", w, w);
      L.c_v = weight(rng, pre + "cross.v", w, w);
      L.c_a = weight(rng, pre + "cross.a", w, w);
      L.c_o = weight(rng, pre + "cross.out", w, w, 0.5);
      L.f1 = weight(rng, pre + "ffn.w1", w, cfg_.ffn_mult * w);
      L.f1_b = zeros(pre + "ffn.b1", cfg_.ffn_mult * w);
      L.f2 = weight(rng, pre + "ffn.w2", cfg_.ffn_mult * w, w);
      L.f2_b = zeros(pre + "ffn.b2", w);
      L.ln2_g = ones(pre + "ln2.g", w);
      L.ln2_b = zeros(pre + "ln2.b", w);
      L.p1 = weight(rng, pre + "pos.w1", we + kDistanceFeatures, we);
      L.p1_b = zeros(pre + "pos.b1", we);
      L.p2 = weight(rng, pre + "pos.w2", we, 1, 0.1);
      L.p2_b = zeros(pre + "pos.b2", 1);
      layers_.push_back(L);
    }
    head_x_ = make_mlp(rng, "head.atoms", w, w, kNumElements);
    head_c_ = make_mlp(rng, "head.charges", w, w, kNumCharges);
    head_e_ = make_mlp(rng, "head.bonds", we, we, kNumBondTypes);
    final_pos_.w1 = weight(rng, "head.pos.w1", we + kDistanceFeatures, we);
    final_pos_.b1 = zeros("head.pos.b1", we);
    final_pos_.w2 = weight(rng, "head.pos.w2", we, 1, 0.1);
    final_pos_.b2 = zeros("head.pos.b2", 1);
  }

  DenoiserConfig cfg_;
  ParamStore params_;
  Mlp enc_h_ {}, enc_hp_ {}, enc_e_ {};
  int time_w_ = -1, time_b_ = -1;
  std::vector<Layer> layers_;
  Mlp head_x_ {}, head_c_ {}, head_e_ {}, final_pos_ {};
};

}  // namespace phdiff

#endif  // PHDIFF_DENOISER_MODEL_HPP_
