//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_CLI_HPP_
#define PHDIFF_CLI_HPP_

#include <cstdint>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "phdiff/core.hpp"
#include "phdiff/diffusion/process.hpp"
#include "phdiff/diffusion/schedule.hpp"
#include "phdiff/diffusion/transitions.hpp"
#include "phdiff/evalsuite/metrics.hpp"
#include "phdiff/molio/molgraph.hpp"
#include "phdiff/molio/sdf.hpp"
#include "phdiff/molio/synthetic.hpp"
#include "phdiff/pharmakit/features.hpp"
#include "phdiff/pharmakit/json_io.hpp"
#include "phdiff/sampler/report.hpp"
#include "phdiff/sampler/sampler.hpp"
#include "phdiff/trainer/checkpoint.hpp"
#include "phdiff/trainer/config.hpp"
#include "phdiff/trainer/train.hpp"

// Command-line front end. Every subcommand is a thin adapter over the
// library. Exit codes: 0 success, 1 usage error, 2 data error.

namespace phdiff::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

inline std::string version_string() {
  return std::string("phdiff ") + PHDIFF_VERSION + " (checkpoint format "
         + std::to_string(kCheckpointVersion) + ")";
}

namespace cli_internal {

struct Streams {
  std::istream &in;
  std::ostream &out;
  std::ostream &err;
};

inline std::vector<MolGraph> read_molecules(const std::string &path, std::istream &in) {
  if (path == "-")
    return parse_sdf(std::string(std::istreambuf_iterator<char>(in), {}));
  return read_sdf_file(path);
}

inline Json read_json_file(const std::string &path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::exception &e) {
    throw Error(ErrorKind::kInvalidArgument, "'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void write_json_file(const std::string &path, const Json &j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline Json vec3(const Vec3 &v) { return Json::array({ v[0], v[1], v[2] }); }

inline Json manifest(const std::string &command, const std::vector<std::string> &args) {
  return { { "command", command }, { "args", args }, { "version", PHDIFF_VERSION },
           { "checkpoint_format", kCheckpointVersion } };
}

// ---- gen-data ------------------------------------------------------------

struct GenDataArgs {
  std::uint64_t seed = 0;
  int count = 200;
  int min_atoms = 6;
  int max_atoms = 16;
  std::string out;
  bool json = false;
};

inline int gen_data(const GenDataArgs &a, const std::vector<std::string> &args, Streams io) {
  const std::vector<MolGraph> mols = gen_synthetic(a.seed, a.count, a.min_atoms, a.max_atoms);
  write_text_file(a.out, serialize_sdf(mols));
  Json m = manifest("gen-data", args);
  m["seed"] = a.seed;
  m["count"] = a.count;
  m["size_range"] = { a.min_atoms, a.max_atoms };
  m["output"] = a.out;
  write_json_file(a.out + ".manifest.json", m);
  if (a.json)
    io.out << m.dump(2) << '\n';
  else
    io.out << "wrote " << mols.size() << " molecules to " << a.out << '\n';
  return kExitOk;
}

// ---- featurize -----------------------------------------------------------

struct FeaturizeArgs {
  std::string mol;
  int record = -1;  // all records
  std::string hyp_out;
  std::uint64_t seed = 0;
  bool json = false;
};

inline int featurize(const FeaturizeArgs &a, Streams io) {
  std::vector<MolGraph> mols = read_molecules(a.mol, io.in);
  if (a.record >= 0) {
    if (a.record >= static_cast<int>(mols.size()))
      throw Error(ErrorKind::kInvalidArgument, "record " + std::to_string(a.record)
                                                   + " out of range (" + std::to_string(mols.size())
                                                   + " records)");
    mols = { mols[a.record] };
  }
  Json all = Json::array();
  for (const MolGraph &m: mols) {
    Json feats = Json::array();
    for (const FeatureGroup &g: perceive_features(m))
      feats.push_back({ { "type", std::string(feature_name(g.type)) },
                        { "atoms", g.atoms },
                        { "centroid", vec3(group_centroid(m, g)) } });
    all.push_back({ { "name", m.name }, { "atoms", m.num_atoms() }, { "features", feats } });
  }
  if (!a.hyp_out.empty()) {
    if (mols.size() != 1)
      throw Error(ErrorKind::kInvalidArgument, "--hyp-out needs exactly one molecule; use --record");
    const Hypothesis h = sample_hypothesis(mols[0], a.seed).first;
    write_json_file(a.hyp_out, to_json(h));
  }
  if (a.json) {
    io.out << (all.size() == 1 ? all[0] : all).dump(2) << '\n';
    return kExitOk;
  }
  for (const Json &m: all) {
    io.out << m["name"].get<std::string>() << ": " << m["features"].size() << " features\n";
    for (const Json &f: m["features"]) {
      io.out << "  " << f["type"].get<std::string>() << " atoms";
      for (int i: f["atoms"])
        io.out << ' ' << i;
      io.out << '\n';
    }
  }
  return kExitOk;
}

// ---- noise-demo ----------------------------------------------------------

struct NoiseDemoArgs {
  std::string mol;
  int record = 0;
  std::vector<int> ts;
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
  bool json = false;
};

inline int noise_demo(const NoiseDemoArgs &a, Streams io) {
  const std::vector<MolGraph> mols = read_molecules(a.mol, io.in);
  if (a.record < 0 || a.record >= static_cast<int>(mols.size()))
    throw Error(ErrorKind::kInvalidArgument, "record out of range");
  ScheduleConfig sc;
  if (!a.config.empty())
    sc = load_train_config(a.config).schedule;
  const NoiseSchedule sched = build_schedule(sc);
  const TransitionKit kit(sched, estimate_marginals(mols));
  MolGraph clean = mols[a.record];
  clean.center();
  const int T = sched.T();
  std::vector<int> ts = a.ts;
  if (ts.empty())
    ts = { 1, std::max(1, T / 10), std::max(1, T / 4), std::max(1, T / 2), T };

  Json rows = Json::array();
  std::vector<MolGraph> decoded;
  const int n = clean.num_atoms();
  for (int t: ts) {
    const NoisyGraph z =
        forward_noise(clean, t, sched, kit, hash_combine(a.seed, static_cast<std::uint64_t>(t)));
    const MolGraph d = decode(z, clean.name + "_t" + std::to_string(t));
    int types = 0, charges = 0, bonds = 0, pairs = 0;
    for (int i = 0; i < n; ++i) {
      types += d.element(i) == clean.element(i) ? 1 : 0;
      charges += d.charge(i) == clean.charge(i) ? 1 : 0;
      for (int j = i + 1; j < n; ++j, ++pairs)
        bonds += d.bond(i, j) == clean.bond(i, j) ? 1 : 0;
    }
    const double rmsd = std::sqrt((z.coords - clean.coords).squaredNorm() / n);
    rows.push_back({ { "t", t },
                     { "alpha_bar_coords", sched.alpha_bar(Modality::kCoords, t) },
                     { "sigma_bar_coords", sched.sigma_bar(Modality::kCoords, t) },
                     { "coord_rmsd", rmsd },
                     { "atom_types_kept", static_cast<double>(types) / n },
                     { "charges_kept", static_cast<double>(charges) / n },
                     { "bonds_kept", pairs ? static_cast<double>(bonds) / pairs : 1.0 } });
    decoded.push_back(d);
  }
  if (!a.out.empty())
    write_text_file(a.out, serialize_sdf(decoded));
  if (a.json) {
    io.out << Json { { "name", clean.name }, { "T", T }, { "steps", rows } }.dump(2) << '\n';
    return kExitOk;
  }
  io.out << "t,alpha_bar_coords,coord_rmsd,atom_types_kept,charges_kept,bonds_kept\n";
  for (const Json &r: rows)
    io.out << r["t"].get<int>() << ',' << r["alpha_bar_coords"].get<double>() << ','
           << r["coord_rmsd"].get<double>() << ',' << r["atom_types_kept"].get<double>() << ','
           << r["charges_kept"].get<double>() << ',' << r["bonds_kept"].get<double>() << '\n';
  return kExitOk;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  std::string config;
  std::optional<int> epochs, batch_size;
  std::optional<double> lr;
  std::optional<std::uint64_t> seed;
  std::string log;
  bool quiet = false;
  bool json = false;
};

// Config file first, explicit flags on top.
inline TrainConfig resolve_train_config(const TrainArgs &a) {
  TrainConfig cfg = a.config.empty() ? TrainConfig {} : load_train_config(a.config);
  if (a.epochs)
    cfg.epochs = *a.epochs;
  if (a.batch_size)
    cfg.batch_size = *a.batch_size;
  if (a.lr)
    cfg.learning_rate = *a.lr;
  if (a.seed)
    cfg.seed = *a.seed;
  cfg.dataset = a.data;
  cfg.model.timesteps = cfg.schedule.T;
  cfg.validate();
  return cfg;
}

inline int train_cmd(const TrainArgs &a, const std::vector<std::string> &args, Streams io) {
  const TrainConfig cfg = resolve_train_config(a);
  const std::vector<MolGraph> mols = read_sdf_file(a.data);
  TrainOptions opts;
  if (!a.quiet)
    opts.on_epoch = [&](const EpochStats &s) {
      io.err << "epoch " << s.epoch << " loss " << s.total << '\n';
    };
  const TrainResult r = train(cfg, make_training_set(mols, cfg.seed), opts);
  save_checkpoint(a.out, r.checkpoint);
  const std::string log = a.log.empty() ? a.out + ".loss.csv" : a.log;
  {
    std::ostringstream csv;
    write_loss_csv(csv, r.history);
    write_text_file(log, csv.str());
  }
  Json m = manifest("train", args);
  m["data"] = a.data;
  m["molecules"] = mols.size();
  m["seed"] = cfg.seed;
  m["config"] = to_json(cfg);
  m["initial_loss"] = r.history.front().total;
  m["final_loss"] = r.history.back().total;
  m["checkpoint"] = a.out;
  m["loss_log"] = log;
  write_json_file(a.out + ".manifest.json", m);
  if (a.json)
    io.out << Json { { "initial_loss", m["initial_loss"] },
                     { "final_loss", m["final_loss"] },
                     { "epochs", cfg.epochs },
                     { "checkpoint", a.out } }
                  .dump(2)
           << '\n';
  else
    io.out << "trained " << cfg.epochs << " epochs: loss " << r.history.front().total << " -> "
           << r.history.back().total << "; checkpoint " << a.out << '\n';
  return kExitOk;
}

// ---- sample --------------------------------------------------------------

struct SampleArgs {
  std::string ckpt;
  std::string hyp;
  std::string pharm;
  int count = 1;
  std::string n_atoms = "auto";
  std::uint64_t seed = 0;
  int threads = 1;
  std::optional<double> tol;
  std::string out;
  std::string raw_out;
  std::string report;
  std::string csv;
  std::string train;
  bool json = false;
};

inline std::optional<int> parse_n_atoms(const std::string &s) {
  if (s == "auto")
    return std::nullopt;
  try {
    size_t used = 0;
    const int n = std::stoi(s, &used);
    if (used == s.size())
      return n;
  } catch (const std::exception &) {
  }
  throw CLI::ValidationError("--n-atoms", "expected a positive integer or 'auto'");
}

inline int sample_cmd(const SampleArgs &a, const std::vector<std::string> &args, Streams io) {
  SampleOptions opts;
  opts.n_atoms = parse_n_atoms(a.n_atoms);
  opts.count = a.count;
  opts.seed = a.seed;
  opts.threads = a.threads;
  const Checkpoint ck = load_checkpoint(a.ckpt);

  std::optional<Hypothesis> h;
  std::optional<PharmacophoreGraph> gp;
  if (!a.hyp.empty()) {
    h = hypothesis_from_json(read_json_file(a.hyp));
    if (!h->source)
      throw Error(ErrorKind::kInvalidArgument,
                  "hypothesis has no pharmacophore graph to condition on; "
                  "create one with 'featurize --hyp-out'");
    gp = *h->source;
  } else if (!a.pharm.empty()) {
    gp = pharmacophore_from_json(read_json_file(a.pharm));
  }
  const double tol = a.tol ? *a.tol : (h ? h->tol : 1.0);

  const std::vector<GeneratedMolecule> out = sample(ck, gp ? &*gp : nullptr, opts);
  std::vector<MolGraph> mols, raw;
  for (const GeneratedMolecule &g: out) {
    mols.push_back(g.mol);
    raw.push_back(g.raw);
  }
  write_text_file(a.out, serialize_sdf(mols));
  if (!a.raw_out.empty())
    write_text_file(a.raw_out, serialize_sdf(raw));

  std::optional<HashIndex> train_idx;
  if (!a.train.empty())
    train_idx = build_hash_index(read_sdf_file(a.train));
  Json report;
  if (!out.empty()) {
    const GenerationReport r =
        batch_report(out, h ? &*h : nullptr, tol, train_idx ? &*train_idx : nullptr, a.threads);
    report = to_json(r);
    if (!a.csv.empty()) {
      std::ostringstream csv;
      write_report_csv(csv, r);
      write_text_file(a.csv, csv.str());
    }
  }
  const std::string report_path = a.report.empty() ? a.out + ".report.json" : a.report;
  write_json_file(report_path, report);

  Json m = manifest("sample", args);
  m["checkpoint"] = a.ckpt;
  m["seed"] = a.seed;
  m["count"] = a.count;
  m["n_atoms"] = a.n_atoms;
  m["conditioned"] = gp.has_value();
  m["output"] = a.out;
  m["report"] = report_path;
  write_json_file(a.out + ".manifest.json", m);
  if (a.json) {
    io.out << report.dump(2) << '\n';
    return kExitOk;
  }
  io.out << "wrote " << out.size() << " molecules to " << a.out << '\n';
  if (!report.is_null())
    for (auto it = report.begin(); it != report.end(); ++it)
      if (!it->is_object())
        io.out << "  " << it.key() << ": " << it->dump() << '\n';
  return kExitOk;
}

// ---- match ---------------------------------------------------------------

struct MatchArgs {
  std::string mol;
  std::string hyp;
  std::optional<double> tol;
  int threads = 1;
  bool json = false;
};

inline int match_cmd(const MatchArgs &a, Streams io) {
  const std::vector<MolGraph> mols = read_molecules(a.mol, io.in);
  const Hypothesis h = hypothesis_from_json(read_json_file(a.hyp));
  const double tol = a.tol ? *a.tol : h.tol;
  std::vector<MatchResult> res(mols.size());
  parallel_for(static_cast<int>(mols.size()), a.threads,
               [&](int k) { res[k] = match_score(mols[k], h, tol); });
  if (a.json) {
    Json all = Json::array();
    for (size_t k = 0; k < mols.size(); ++k) {
      Json j = to_json(res[k]);
      j["name"] = mols[k].name;
      all.push_back(j);
    }
    io.out << (all.size() == 1 ? all[0] : all).dump(2) << '\n';
    return kExitOk;
  }
  for (size_t k = 0; k < mols.size(); ++k)
    io.out << mols[k].name << '\t' << res[k].score.value() << '\t' << res[k].score.matched_pairs
           << '/' << res[k].score.total_pairs << '\n';
  return kExitOk;
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string mol;
  std::string hyp;
  std::optional<double> tol;
  std::string train;
  std::string out;
  std::string csv;
  int threads = 1;
  bool json = false;
};

inline int eval_cmd(const EvalArgs &a, Streams io) {
  const std::vector<MolGraph> mols = read_molecules(a.mol, io.in);
  std::optional<Hypothesis> h;
  if (!a.hyp.empty())
    h = hypothesis_from_json(read_json_file(a.hyp));
  const double tol = a.tol ? *a.tol : (h ? h->tol : 1.0);
  std::optional<HashIndex> train_idx;
  if (!a.train.empty())
    train_idx = build_hash_index(read_sdf_file(a.train));
  const GenerationReport r =
      batch_report(mols, h ? &*h : nullptr, tol, train_idx ? &*train_idx : nullptr, a.threads);
  const Json report = to_json(r);
  if (!a.out.empty())
    write_json_file(a.out, report);
  if (!a.csv.empty()) {
    std::ostringstream csv;
    write_report_csv(csv, r);
    write_text_file(a.csv, csv.str());
  }
  if (a.json) {
    io.out << report.dump(2) << '\n';
    return kExitOk;
  }
  for (auto it = report.begin(); it != report.end(); ++it)
    io.out << it.key() << ": " << it->dump() << '\n';
  return kExitOk;
}

}  // namespace cli_internal

// Runs one command line (arguments without the program name).
inline int run(const std::vector<std::string> &args, std::istream &in, std::ostream &out,
               std::ostream &err) {
  using namespace cli_internal;
  Streams io { in, out, err };
  CLI::App app { "phdiff - pharmacophore-conditioned molecular diffusion", "phdiff" };
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version, "Print version and checkpoint format");
  const int cores = default_threads();

  GenDataArgs gd;
  CLI::App *gen = app.add_subcommand("gen-data", "Generate a synthetic molecule set as SDF");
  gen->add_option("--seed", gd.seed, "Random seed")->capture_default_str();
  gen->add_option("--count", gd.count, "Number of molecules")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  gen->add_option("--min", gd.min_atoms, "Minimum heavy atoms")->capture_default_str();
  gen->add_option("--max", gd.max_atoms, "Maximum heavy atoms")->capture_default_str();
  gen->add_option("--out", gd.out, "Output SDF path")->required();
  gen->add_flag("--json", gd.json, "Print the manifest as JSON");

  FeaturizeArgs fz;
  CLI::App *feat = app.add_subcommand("featurize", "Perceive pharmacophore features");
  feat->add_option("--mol", fz.mol, "Input SDF ('-' for stdin)")->required();
  feat->add_option("--record", fz.record, "Record index (default: all)");
  feat->add_option("--hyp-out", fz.hyp_out, "Write a sampled hypothesis JSON for the record");
  feat->add_option("--seed", fz.seed, "Seed for hypothesis sampling")->capture_default_str();
  feat->add_flag("--json", fz.json, "JSON output");

  NoiseDemoArgs nd;
  CLI::App *noise = app.add_subcommand("noise-demo", "Show the forward process on one molecule");
  noise->add_option("--mol", nd.mol, "Input SDF ('-' for stdin)")->required();
  noise->add_option("--record", nd.record, "Record index")->capture_default_str();
  noise->add_option("--t", nd.ts, "Timesteps (repeatable)");
  noise->add_option("--seed", nd.seed, "Random seed")->capture_default_str();
  noise->add_option("--config", nd.config, "Training config JSON (schedule section is used)");
  noise->add_option("--out", nd.out, "Write decoded noisy graphs as SDF");
  noise->add_flag("--json", nd.json, "JSON output");

  TrainArgs tr;
  CLI::App *trn = app.add_subcommand("train", "Train a denoiser and write a checkpoint");
  trn->add_option("--data", tr.data, "Training SDF")->required();
  trn->add_option("--out", tr.out, "Checkpoint path")->required();
  trn->add_option("--config", tr.config, "Training config JSON; flags override it");
  trn->add_option("--epochs", tr.epochs, "Epochs");
  trn->add_option("--batch-size", tr.batch_size, "Minibatch size");
  trn->add_option("--lr", tr.lr, "Learning rate");
  trn->add_option("--seed", tr.seed, "Random seed");
  trn->add_option("--log", tr.log, "Loss CSV path (default: <out>.loss.csv)");
  trn->add_flag("--quiet", tr.quiet, "No per-epoch progress on stderr");
  trn->add_flag("--json", tr.json, "JSON summary");

  SampleArgs sa;
  sa.threads = cores;
  CLI::App *smp = app.add_subcommand("sample", "Generate molecules from a checkpoint");
  smp->add_option("--ckpt", sa.ckpt, "Checkpoint")->required();
  CLI::Option *hyp_opt = smp->add_option("--hyp", sa.hyp, "Hypothesis JSON with pharmacophore");
  smp->add_option("--pharm", sa.pharm, "Pharmacophore graph JSON")->excludes(hyp_opt);
  smp->add_option("--count", sa.count, "Number of samples")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  smp->add_option("--n-atoms", sa.n_atoms, "Atoms per sample, or 'auto'")->capture_default_str();
  smp->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
  smp->add_option("--threads", sa.threads, "Worker threads")->check(CLI::PositiveNumber);
  smp->add_option("--tol", sa.tol, "Match tolerance in angstrom (default: hypothesis tol)");
  smp->add_option("--out", sa.out, "Output SDF")->required();
  smp->add_option("--raw-out", sa.raw_out, "SDF of decoded graphs before fragment filtering");
  smp->add_option("--report", sa.report, "Report JSON (default: <out>.report.json)");
  smp->add_option("--csv", sa.csv, "Per-sample CSV");
  smp->add_option("--train", sa.train, "Training SDF for novelty");
  smp->add_flag("--json", sa.json, "Print the report as JSON");

  MatchArgs ma;
  ma.threads = cores;
  CLI::App *mat = app.add_subcommand("match", "Score molecules against a hypothesis");
  mat->add_option("--mol", ma.mol, "Input SDF ('-' for stdin)")->required();
  mat->add_option("--hyp", ma.hyp, "Hypothesis JSON")->required();
  mat->add_option("--tol", ma.tol, "Tolerance in angstrom (default: hypothesis tol)");
  mat->add_option("--threads", ma.threads, "Worker threads")->check(CLI::PositiveNumber);
  mat->add_flag("--json", ma.json, "JSON output");

  EvalArgs ev;
  ev.threads = cores;
  CLI::App *evl = app.add_subcommand("eval", "Generation metrics for a molecule set");
  evl->add_option("--mol", ev.mol, "Input SDF ('-' for stdin)")->required();
  evl->add_option("--hyp", ev.hyp, "Hypothesis JSON for match statistics");
  evl->add_option("--tol", ev.tol, "Tolerance in angstrom (default: hypothesis tol)");
  evl->add_option("--train", ev.train, "Training SDF for novelty");
  evl->add_option("--out", ev.out, "Report JSON path");
  evl->add_option("--csv", ev.csv, "Per-sample CSV");
  evl->add_option("--threads", ev.threads, "Worker threads")->check(CLI::PositiveNumber);
  evl->add_flag("--json", ev.json, "JSON output");

  auto active = [&]() -> CLI::App * {
    for (CLI::App *s: app.get_subcommands({}))
      if (s->parsed())
        return s;
    return &app;
  };

  std::vector<const char *> argv { "phdiff" };
  for (const std::string &s: args)
    argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (gen->parsed() && gd.min_atoms > gd.max_atoms)
      throw CLI::ValidationError("--min", "must not exceed --max");
  } catch (const CLI::CallForHelp &) {
    out << active()->help();
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n\n" << active()->help();
    return kExitUsage;
  }
  if (show_version) {
    out << version_string() << '\n';
    return kExitOk;
  }

  try {
    if (gen->parsed())
      return gen_data(gd, args, io);
    if (feat->parsed())
      return featurize(fz, io);
    if (noise->parsed())
      return noise_demo(nd, io);
    if (trn->parsed())
      return train_cmd(tr, args, io);
    if (smp->parsed())
      return sample_cmd(sa, args, io);
    if (mat->parsed())
      return match_cmd(ma, io);
    if (evl->parsed())
      return eval_cmd(ev, io);
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << "\n\n" << active()->help();
    return kExitUsage;
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  err << app.help();
  return kExitUsage;
}

inline int run(int argc, char **argv) {
  return run(std::vector<std::string>(argv + 1, argv + argc), std::cin, std::cout, std::cerr);
}

}  // namespace phdiff::cli

#endif  // PHDIFF_CLI_HPP_
