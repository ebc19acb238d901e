//
// phdiff - pharmacophore-conditioned molecular diffusion
// SPDX-License-Identifier: Apache-2.0
//

#ifndef PHDIFF_MOLIO_SDF_HPP_
#define PHDIFF_MOLIO_SDF_HPP_

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "phdiff/core.hpp"
#include "phdiff/molio/molgraph.hpp"

namespace phdiff {
namespace sdf_internal {
inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  return s;
}

inline std::string_view column(std::string_view line, size_t pos, size_t len) {
  if (pos >= line.size())
    return {};
  return trim(line.substr(pos, len));
}

template <class T>
bool parse_number(std::string_view s, T &out) {
  if (s.empty())
    return false;
  if (s.front() == '+')
    s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r')
      line.remove_suffix(1);
    lines.emplace_back(line);
    if (end == text.size())
      break;
    start = end + 1;
  }
  // A terminating newline does not open another line.
  if (!lines.empty() && lines.back().empty())
    lines.pop_back();
  return lines;
}

inline bool is_terminator(std::string_view line) {
  return line.substr(0, 4) == "$$$$";
}

inline bool is_end(std::string_view line) {
  return line.substr(0, 6) == "M  END";
}

// Parses one molfile whose header starts at lines[begin]; returns the index
// one past the record's "$$$$" (or the end of input).
inline size_t parse_record(const std::vector<std::string> &lines, size_t begin,
                           int record, std::vector<MolGraph> &out) {
  auto fail = [&](ErrorKind kind, size_t idx, const std::string &what) {
    throw ParseError(kind, record, static_cast<int>(idx) + 1, what);
  };
  auto line_at = [&](size_t idx) -> const std::string & {
    if (idx >= lines.size() || is_terminator(lines[idx]))
      fail(ErrorKind::kMalformedRecord, std::min(idx, lines.size()),
           "unexpected end of record");
    return lines[idx];
  };

  std::string name = line_at(begin);
  line_at(begin + 1);
  line_at(begin + 2);
  const size_t counts_idx = begin + 3;
  std::string_view counts = line_at(counts_idx);
  int natoms = 0, nbonds = 0;
  if (!parse_number(column(counts, 0, 3), natoms)
      || !parse_number(column(counts, 3, 3), nbonds) || natoms < 1
      || nbonds < 0)
    fail(ErrorKind::kMalformedRecord, counts_idx, "bad counts line");
  if (counts.find("V3000") != std::string_view::npos)
    fail(ErrorKind::kMalformedRecord, counts_idx, "V3000 is not supported");

  const auto &table = ElementTable::instance();
  std::vector<Element> elements(natoms);
  std::vector<int> charges(natoms, 0);
  std::vector<int> block_charges(natoms, 0);
  Coords coords(natoms, 3);

  size_t idx = counts_idx + 1;
  for (int i = 0; i < natoms; ++i, ++idx) {
    std::string_view line = line_at(idx);
    if (is_end(line))
      fail(ErrorKind::kMalformedRecord, idx,
           "counts line declares " + std::to_string(natoms) + " atoms, found "
               + std::to_string(i));
    for (int k = 0; k < 3; ++k)
      if (!parse_number(column(line, 10 * k, 10), coords(i, k)))
        fail(ErrorKind::kMalformedRecord, idx, "bad atom coordinate");
    std::string_view symbol = column(line, 31, 3);
    if (symbol.empty())
      fail(ErrorKind::kMalformedRecord, idx, "missing element symbol");
    auto elem = table.find(symbol);
    if (!elem)
      fail(ErrorKind::kUnknownElement, idx,
           "unsupported element '" + std::string(symbol) + "'");
    elements[i] = *elem;
    int code = 0;
    if (std::string_view cc = column(line, 36, 3); !cc.empty()
                                                   && !parse_number(cc, code))
      fail(ErrorKind::kMalformedRecord, idx, "bad charge field");
    // Atom-block charge code: 3 -> +1, 5 -> -1.
    block_charges[i] = code == 3 ? 1 : code == 5 ? -1 : 0;
  }

  std::vector<BondRecord> bonds;
  for (int k = 0; k < nbonds; ++k, ++idx) {
    std::string_view line = line_at(idx);
    if (is_end(line))
      fail(ErrorKind::kMalformedRecord, idx,
           "counts line declares " + std::to_string(nbonds) + " bonds, found "
               + std::to_string(k));
    int a = 0, b = 0, order = 0;
    if (!parse_number(column(line, 0, 3), a)
        || !parse_number(column(line, 3, 3), b)
        || !parse_number(column(line, 6, 3), order))
      fail(ErrorKind::kMalformedRecord, idx, "bad bond line");
    if (a < 1 || b < 1 || a > natoms || b > natoms || a == b)
      fail(ErrorKind::kMalformedRecord, idx, "bond atom index out of range");
    if (order < 1 || order > 4)
      fail(ErrorKind::kUnknownBondOrder, idx,
           "unsupported bond order " + std::to_string(order));
    bonds.push_back({ a - 1, b - 1, static_cast<BondType>(order) });
  }

  bool have_chg = false;
  for (;; ++idx) {
    if (idx >= lines.size())
      fail(ErrorKind::kMalformedRecord, idx, "missing 'M  END'");
    std::string_view line = lines[idx];
    if (is_terminator(line))
      fail(ErrorKind::kMalformedRecord, idx, "missing 'M  END'");
    if (is_end(line))
      break;
    if (line.substr(0, 6) != "M  CHG")
      continue;
    if (!have_chg) {
      // M CHG supersedes every atom-block charge.
      std::fill(charges.begin(), charges.end(), 0);
      have_chg = true;
    }
    int count = 0;
    if (!parse_number(column(line, 6, 3), count) || count < 1 || count > 8)
      fail(ErrorKind::kMalformedRecord, idx, "bad M  CHG count");
    for (int k = 0; k < count; ++k) {
      int atom = 0, chg = 0;
      if (!parse_number(column(line, 9 + 8 * k, 4), atom)
          || !parse_number(column(line, 13 + 8 * k, 4), chg))
        fail(ErrorKind::kMalformedRecord, idx, "bad M  CHG entry");
      if (atom < 1 || atom > natoms)
        fail(ErrorKind::kMalformedRecord, idx, "M  CHG atom out of range");
      if (chg < -1 || chg > 1)
        fail(ErrorKind::kMalformedRecord, idx,
             "formal charge " + std::to_string(chg) + " outside {-1,0,+1}");
      charges[atom - 1] = chg;
    }
  }
  if (!have_chg)
    charges = block_charges;

  out.push_back(
      MolGraph::create(elements, charges, coords, bonds, std::move(name)));

  // Skip data items up to the record separator.
  for (++idx; idx < lines.size(); ++idx)
    if (is_terminator(lines[idx]))
      return idx + 1;
  return idx;
}
}  // namespace sdf_internal

/// Parses V2000 molfile/SDF text into one MolGraph per record.
inline std::vector<MolGraph> parse_sdf(std::string_view text) {
  using namespace sdf_internal;
  std::vector<std::string> lines = split_lines(text);
  std::vector<MolGraph> mols;
  size_t idx = 0;
  int record = 0;
  while (idx < lines.size()) {
    // Tolerate blank padding between/after records.
    size_t probe = idx;
    while (probe < lines.size() && trim(lines[probe]).empty())
      ++probe;
    if (probe == lines.size())
      break;
    idx = parse_record(lines, idx, record++, mols);
  }
  return mols;
}

inline std::string serialize_sdf(const MolGraph &m) {
  const auto &table = ElementTable::instance();
  const int n = m.num_atoms();
  std::vector<BondRecord> bonds = m.bond_list();
  std::string out;
  char buf[128];

  out += m.name;
  out += "\n  phdiff          3D\n\n";
  std::snprintf(buf, sizeof(buf), "%3d%3d  0  0  0  0  0  0  0  0999 V2000\n",
                n, static_cast<int>(bonds.size()));
  out += buf;
  for (int i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf),
                  "%10.4f%10.4f%10.4f %-3s 0  0  0  0  0  0  0  0  0  0  0  0\n",
                  m.coords(i, 0), m.coords(i, 1), m.coords(i, 2),
                  std::string(table.symbol(m.element(i))).c_str());
    out += buf;
  }
  for (const BondRecord &b: bonds) {
    std::snprintf(buf, sizeof(buf), "%3d%3d%3d  0  0  0  0\n", b.a + 1, b.b + 1,
                  static_cast<int>(b.type));
    out += buf;
  }
  std::vector<std::pair<int, int>> charged;
  for (int i = 0; i < n; ++i)
    if (m.charge(i) != 0)
      charged.emplace_back(i + 1, m.charge(i));
  for (size_t k = 0; k < charged.size(); k += 8) {
    size_t cnt = std::min<size_t>(8, charged.size() - k);
    std::snprintf(buf, sizeof(buf), "M  CHG%3d", static_cast<int>(cnt));
    out += buf;
    for (size_t q = 0; q < cnt; ++q) {
      std::snprintf(buf, sizeof(buf), " %3d %3d", charged[k + q].first,
                    charged[k + q].second);
      out += buf;
    }
    out += '\n';
  }
  out += "M  END\n$$$$\n";
  return out;
}

inline std::string serialize_sdf(const std::vector<MolGraph> &mols) {
  std::string out;
  for (const MolGraph &m: mols)
    out += serialize_sdf(m);
  return out;
}

inline std::string read_text_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string &path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

inline std::vector<MolGraph> read_sdf_file(const std::string &path) {
  return parse_sdf(read_text_file(path));
}

}  // namespace phdiff

#endif  // PHDIFF_MOLIO_SDF_HPP_
