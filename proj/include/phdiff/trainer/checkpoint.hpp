//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_TRAINER_CHECKPOINT_HPP_
#define PHDIFF_TRAINER_CHECKPOINT_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "phdiff/core.hpp"
#include "phdiff/denoiser/model.hpp"
#include "phdiff/diffusion/schedule.hpp"
#include "phdiff/diffusion/transitions.hpp"
#include "phdiff/molio/molgraph.hpp"
#include "phdiff/trainer/config.hpp"

// Container layout:
//   "PHDF" | u32 version | u64 header length | JSON header | float64 blob
// Integers and doubles are little-endian. The header indexes every tensor
// by name, shape and element offset into the blob (row-major).

namespace phdiff {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  Marginals marginals;
  std::vector<std::int64_t> size_histogram;  // [n] = molecules with n atoms
  Json history = Json::array();              // per-epoch losses, informational
  Denoiser model;

  NoiseSchedule schedule() const { return build_schedule(config.schedule); }
};

namespace checkpoint_internal {

inline void put_u64(std::ostream &out, std::uint64_t v) {
  unsigned char b[8];
  for (int k = 0; k < 8; ++k)
    b[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char *>(b), 8);
}

inline void put_u32(std::ostream &out, std::uint32_t v) {
  unsigned char b[4];
  for (int k = 0; k < 4; ++k)
    b[k] = static_cast<unsigned char>(v >> (8 * k));
  out.write(reinterpret_cast<const char *>(b), 4);
}

inline std::uint64_t get_uint(std::istream &in, int bytes) {
  unsigned char b[8] = {};
  if (!in.read(reinterpret_cast<char *>(b), bytes))
    throw Error(ErrorKind::kCheckpointMismatch, "truncated checkpoint");
  std::uint64_t v = 0;
  for (int k = 0; k < bytes; ++k)
    v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return v;
}

inline void put_f64(std::ostream &out, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  put_u64(out, bits);
}

inline double get_f64(std::istream &in) {
  const std::uint64_t bits = get_uint(in, 8);
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}

inline Json element_table_json() {
  const ElementTable &et = ElementTable::instance();
  Json j = Json::array();
  for (int k = 0; k < kNumElements; ++k) {
    const ElementInfo &ei = et.info(Element(k));
    j.push_back({ { "symbol", std::string(ei.symbol) }, { "mass", ei.mass } });
  }
  return j;
}

}  // namespace checkpoint_internal

inline void write_checkpoint(std::ostream &out, const Checkpoint &ck) {
  using namespace checkpoint_internal;
  const ParamStore &ps = ck.model.params();
  Json tensors = Json::array();
  std::uint64_t offset = 0;
  for (int i = 0; i < ps.size(); ++i) {
    const Matrix &v = ps.value(i);
    tensors.push_back({ { "name", ps.name(i) },
                        { "rows", v.rows() },
                        { "cols", v.cols() },
                        { "offset", offset } });
    offset += static_cast<std::uint64_t>(v.size());
  }
  Json header = { { "config", to_json(ck.config) },
                  { "model", to_json(ck.model.config()) },
                  { "schedule", to_json(ck.config.schedule) },
                  { "marginals", to_json(ck.marginals) },
                  { "size_histogram", ck.size_histogram },
                  { "elements", element_table_json() },
                  { "charges", { -1, 0, 1 } },
                  { "history", ck.history },
                  { "tensors", tensors },
                  { "blob_doubles", offset } };
  const std::string text = header.dump();
  out.write("PHDF", 4);
  put_u32(out, kCheckpointVersion);
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (int i = 0; i < ps.size(); ++i) {
    const Matrix &v = ps.value(i);
    for (Eigen::Index r = 0; r < v.rows(); ++r)
      for (Eigen::Index c = 0; c < v.cols(); ++c)
        put_f64(out, v(r, c));
  }
  if (!out)
    throw Error(ErrorKind::kIo, "failed to write checkpoint");
}

inline Checkpoint read_checkpoint(std::istream &in) {
  using namespace checkpoint_internal;
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "PHDF", 4) != 0)
    throw Error(ErrorKind::kCheckpointMismatch, "not a checkpoint (bad magic)");
  const auto version = static_cast<std::uint32_t>(get_uint(in, 4));
  if (version != kCheckpointVersion)
    throw Error(ErrorKind::kCheckpointMismatch,
                "unsupported checkpoint version " + std::to_string(version));
  const std::uint64_t len = get_uint(in, 8);
  if (len > (std::uint64_t { 1 } << 30))
    throw Error(ErrorKind::kCheckpointMismatch, "implausible header length");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len)))
    throw Error(ErrorKind::kCheckpointMismatch, "truncated checkpoint header");

  Checkpoint ck;
  ParamStore stored;
  try {
    const Json header = Json::parse(text);
    if (header.at("elements") != element_table_json())
      throw Error(ErrorKind::kCheckpointMismatch, "element table differs from this build");
    ck.config = train_config_from_json(header.at("config"));
    ck.config.model = denoiser_config_from_json(header.at("model"));
    ck.config.schedule = schedule_config_from_json(header.at("schedule"));
    ck.marginals = marginals_from_json(header.at("marginals"));
    ck.size_histogram = header.at("size_histogram").get<std::vector<std::int64_t>>();
    ck.history = header.value("history", Json::array());
    std::uint64_t expect = 0;
    for (const Json &t: header.at("tensors")) {
      const auto rows = t.at("rows").get<Eigen::Index>();
      const auto cols = t.at("cols").get<Eigen::Index>();
      if (rows < 0 || cols < 0 || t.at("offset").get<std::uint64_t>() != expect)
        throw Error(ErrorKind::kCheckpointMismatch, "inconsistent tensor index");
      Matrix v(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
          v(r, c) = get_f64(in);
      expect += static_cast<std::uint64_t>(v.size());
      stored.add(t.at("name").get<std::string>(), std::move(v));
    }
    if (header.at("blob_doubles").get<std::uint64_t>() != expect)
      throw Error(ErrorKind::kCheckpointMismatch, "blob size disagrees with tensor index");
  } catch (const nlohmann::json::exception &e) {
    throw Error(ErrorKind::kCheckpointMismatch, std::string("bad checkpoint header: ") + e.what());
  } catch (const Error &e) {
    if (e.kind() == ErrorKind::kCheckpointMismatch)
      throw;
    throw Error(ErrorKind::kCheckpointMismatch, e.what());
  }
  ck.model = Denoiser(ck.config.model, stored);
  return ck;
}

inline void save_checkpoint(const std::string &path, const Checkpoint &ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorKind::kIo, "cannot write " + path);
  write_checkpoint(out, ck);
}

inline Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::kIo, "cannot open " + path);
  return read_checkpoint(in);
}

}  // namespace phdiff

#endif  // PHDIFF_TRAINER_CHECKPOINT_HPP_
