//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_DIFFUSION_SCHEDULE_HPP_
#define PHDIFF_DIFFUSION_SCHEDULE_HPP_

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "phdiff/core.hpp"

namespace phdiff {

enum class Modality : int { kCoords = 0, kAtomTypes, kCharges, kBonds };

inline constexpr int kNumModalities = 4;

inline std::string_view modality_name(Modality m) {
  switch (m) {
  case Modality::kCoords: return "coords";
  case Modality::kAtomTypes: return "atom_types";
  case Modality::kCharges: return "charges";
  case Modality::kBonds: return "bonds";
  }
  return "?";
}

struct ScheduleConfig {
  int T = 500;
  std::array<double, kNumModalities> nu { 2.5, 1.0, 1.0, 1.5 };
  double s = 0.008;

  double &nu_of(Modality m) { return nu[static_cast<int>(m)]; }
  double nu_of(Modality m) const { return nu[static_cast<int>(m)]; }
};

// Per-step and cumulative signal/noise scales, indexed 0..T.
// Variance preserving: sigma^2 = 1 - alpha^2 for both.
struct ModalitySchedule {
  double nu = 1.0;
  std::vector<double> alpha;
  std::vector<double> sigma;
  std::vector<double> alpha_bar;
  std::vector<double> sigma_bar;
};

class NoiseSchedule {
public:
  NoiseSchedule() = default;

  NoiseSchedule(const ScheduleConfig &cfg): cfg_(cfg) {
    if (cfg.T < 2)
      throw Error(ErrorKind::kInvalidT,
                  "T must be at least 2, got " + std::to_string(cfg.T));
    if (!(cfg.s > 0) || !std::isfinite(cfg.s))
      throw Error(ErrorKind::kInvalidArgument, "schedule offset s must be positive");
    for (int k = 0; k < kNumModalities; ++k) {
      const double nu = cfg.nu[k];
      if (!(nu > 0) || !std::isfinite(nu))
        throw Error(ErrorKind::kInvalidNu,
                    "nu for " + std::string(modality_name(static_cast<Modality>(k)))
                        + " must be positive");
      mods_[k] = build(cfg.T, nu, cfg.s);
    }
  }

  int T() const { return cfg_.T; }

  const ScheduleConfig &config() const { return cfg_; }

  const ModalitySchedule &operator[](Modality m) const {
    return mods_[static_cast<int>(m)];
  }

  double alpha(Modality m, int t) const { return (*this)[m].alpha[t]; }
  double alpha_bar(Modality m, int t) const { return (*this)[m].alpha_bar[t]; }
  double sigma_bar(Modality m, int t) const { return (*this)[m].sigma_bar[t]; }

  void check_timestep(int t, int lo = 1) const {
    if (t < lo || t > cfg_.T)
      throw Error(ErrorKind::kTimestepOutOfRange,
                  "timestep " + std::to_string(t) + " outside ["
                      + std::to_string(lo) + ", " + std::to_string(cfg_.T) + "]");
  }

private:
  static ModalitySchedule build(int T, double nu, double s) {
    auto f = [&](int t) {
      const double u = (static_cast<double>(t) / T + s) / (1.0 + s);
      const double c = std::cos(0.5 * std::numbers::pi * std::pow(u, nu));
      return c * c;
    };
    ModalitySchedule ms;
    ms.nu = nu;
    ms.alpha.assign(T + 1, 1.0);
    ms.alpha_bar.assign(T + 1, 1.0);
    ms.sigma.assign(T + 1, 0.0);
    ms.sigma_bar.assign(T + 1, 0.0);
    // Per-step ratios first; the cumulative product is then exact.
    double prev = f(0);
    for (int t = 1; t <= T; ++t) {
      const double cur = f(t);
      ms.alpha[t] = cur / prev;
      prev = cur;
      ms.alpha_bar[t] = ms.alpha_bar[t - 1] * ms.alpha[t];
      ms.sigma[t] = std::sqrt(std::max(0.0, 1.0 - ms.alpha[t] * ms.alpha[t]));
      ms.sigma_bar[t] =
          std::sqrt(std::max(0.0, 1.0 - ms.alpha_bar[t] * ms.alpha_bar[t]));
    }
    return ms;
  }

  ScheduleConfig cfg_;
  std::array<ModalitySchedule, kNumModalities> mods_;
};

inline NoiseSchedule build_schedule(int T, double nu_coords, double nu_atom_types,
                                    double nu_charges, double nu_bonds,
                                    double s = 0.008) {
  ScheduleConfig cfg;
  cfg.T = T;
  cfg.nu = { nu_coords, nu_atom_types, nu_charges, nu_bonds };
  cfg.s = s;
  return NoiseSchedule(cfg);
}

inline NoiseSchedule build_schedule(const ScheduleConfig &cfg) {
  return NoiseSchedule(cfg);
}

}  // namespace phdiff

#endif  // PHDIFF_DIFFUSION_SCHEDULE_HPP_
