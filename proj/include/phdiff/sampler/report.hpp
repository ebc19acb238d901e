//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_SAMPLER_REPORT_HPP_
#define PHDIFF_SAMPLER_REPORT_HPP_

#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "phdiff/core.hpp"
#include "phdiff/evalsuite/metrics.hpp"
#include "phdiff/molio/chem.hpp"
#include "phdiff/pharmakit/features.hpp"
#include "phdiff/sampler/sampler.hpp"

namespace phdiff {

struct SampleRow {
  std::string name;
  int atoms = 0;
  bool valid = false;
  std::uint64_t hash = 0;
  std::optional<MatchScore> score;      // against the hypothesis, when given
  std::optional<MatchScore> raw_score;  // same, before fragment filtering
  int dropped_mask_atoms = 0;
  Physchem physchem;
};

struct MatchSummary {
  double ms_mean = 0.0;
  double pmr = 0.0;
  double ms_ge_08 = 0.0;
};

struct GenerationReport {
  int count = 0;
  Ratio validity, uniqueness;
  std::optional<Ratio> novelty;         // needs a training index
  std::optional<double> diversity;      // needs two valid molecules
  std::optional<MatchSummary> match;    // needs a hypothesis
  std::optional<MatchSummary> raw_match;
  int dropped_mask_atoms = 0;
  int samples_with_drops = 0;
  std::vector<SampleRow> rows;
};

namespace report_internal {

inline MatchSummary summarize_scores(const std::vector<MatchScore> &s) {
  return { ms_mean(s), pmr(s), ms_at_least(s, 0.8) };
}

inline GenerationReport build(const std::vector<MolGraph> &mols, const std::vector<MolGraph> *raw,
                              const std::vector<int> *dropped, const Hypothesis *h, double tol,
                              const HashIndex *train, int threads) {
  if (mols.empty())
    throw Error(ErrorKind::kEmptyBatch, "no samples to report on");
  GenerationReport r;
  r.count = static_cast<int>(mols.size());
  r.validity = validity(mols);
  r.uniqueness = uniqueness(mols);
  if (train)
    r.novelty = novelty(mols, *train);
  try {
    r.diversity = diversity(mols);
  } catch (const Error &e) {
    if (e.kind() != ErrorKind::kTooFewMolecules)
      throw;
  }
  r.rows.resize(mols.size());
  parallel_for(r.count, threads, [&](int k) {
    const MolGraph &m = mols[k];
    SampleRow &row = r.rows[k];
    row.name = m.name;
    row.atoms = m.num_atoms();
    row.valid = check_validity(m);
    row.hash = canonical_hash(m);
    row.physchem = physchem(m);
    if (h) {
      row.score = match_score(m, *h, tol).score;
      if (raw)
        row.raw_score = match_score((*raw)[k], *h, tol).score;
    }
    if (dropped)
      row.dropped_mask_atoms = (*dropped)[k];
  });
  std::vector<MatchScore> scores, raw_scores;
  for (const SampleRow &row: r.rows) {
    if (row.score)
      scores.push_back(*row.score);
    if (row.raw_score)
      raw_scores.push_back(*row.raw_score);
    r.dropped_mask_atoms += row.dropped_mask_atoms;
    r.samples_with_drops += row.dropped_mask_atoms > 0 ? 1 : 0;
  }
  if (h) {
    r.match = summarize_scores(scores);
    if (raw)
      r.raw_match = summarize_scores(raw_scores);
  }
  return r;
}

}  // namespace report_internal

// Metrics over final molecules (e.g. read back from an SDF).
inline GenerationReport batch_report(const std::vector<MolGraph> &samples, const Hypothesis *h,
                                     double tol, const HashIndex *train = nullptr,
                                     int threads = 1) {
  return report_internal::build(samples, nullptr, nullptr, h, tol, train, threads);
}

// Metrics over sampler output. Match statistics are reported both for the
// returned molecules and for the decoded graphs before fragment filtering.
inline GenerationReport batch_report(const std::vector<GeneratedMolecule> &samples,
                                     const Hypothesis *h, double tol,
                                     const HashIndex *train = nullptr, int threads = 1) {
  std::vector<MolGraph> mols, raw;
  std::vector<int> dropped;
  for (const GeneratedMolecule &g: samples) {
    mols.push_back(g.mol);
    raw.push_back(g.raw);
    dropped.push_back(g.dropped_mask_atoms);
  }
  return report_internal::build(mols, &raw, &dropped, h, tol, train, threads);
}

inline Json to_json(const MatchSummary &m) {
  return { { "ms_mean", m.ms_mean }, { "pmr", m.pmr }, { "ms_ge_0.8", m.ms_ge_08 } };
}

// Absent quantities are written as null.
inline Json to_json(const GenerationReport &r) {
  auto opt = [](const auto &v) { return v ? Json(*v) : Json(nullptr); };
  Json j = { { "count", r.count },
             { "validity", r.validity.value() },
             { "uniqueness", r.uniqueness.value() },
             { "novelty", r.novelty ? Json(r.novelty->value()) : Json(nullptr) },
             { "diversity", opt(r.diversity) },
             { "ms_mean", r.match ? Json(r.match->ms_mean) : Json(nullptr) },
             { "pmr", r.match ? Json(r.match->pmr) : Json(nullptr) },
             { "ms_ge_0.8", r.match ? Json(r.match->ms_ge_08) : Json(nullptr) },
             { "dropped_mask_atoms", r.dropped_mask_atoms },
             { "samples_with_drops", r.samples_with_drops } };
  if (r.raw_match)
    j["prefilter"] = to_json(*r.raw_match);
  return j;
}

inline void write_report_csv(std::ostream &out, const GenerationReport &r) {
  out << "index,name,atoms,valid,hash,ms,matched_pairs,total_pairs,raw_ms,dropped_mask_atoms,mw,"
         "ring_count\n";
  out << std::setprecision(10);
  for (size_t k = 0; k < r.rows.size(); ++k) {
    const SampleRow &s = r.rows[k];
    out << k << ',' << s.name << ',' << s.atoms << ',' << (s.valid ? 1 : 0) << ',' << std::hex
        << std::setw(16) << std::setfill('0') << s.hash << std::dec << std::setfill(' ') << ',';
    if (s.score)
      out << s.score->value() << ',' << s.score->matched_pairs << ',' << s.score->total_pairs;
    else
      out << ",,";
    out << ',';
    if (s.raw_score)
      out << s.raw_score->value();
    out << ',' << s.dropped_mask_atoms << ',' << s.physchem.mw << ',' << s.physchem.ring_count
        << '\n';
  }
}

}  // namespace phdiff

#endif  // PHDIFF_SAMPLER_REPORT_HPP_
