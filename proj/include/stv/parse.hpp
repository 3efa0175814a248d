// Copyright 2026 the stv-margin authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef STV_PARSE_HPP
#define STV_PARSE_HPP

#include <charconv>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stv/core.hpp"

namespace stv {

struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line_) + ": " + msg),
        line(line_) {}
};

namespace detail {

inline std::string trim(std::string_view v) {
  size_t a = v.find_first_not_of(" \t\r\n");
  if (a == std::string_view::npos) return "";
  size_t b = v.find_last_not_of(" \t\r\n");
  return std::string(v.substr(a, b - a + 1));
}

inline std::vector<std::string> split(std::string_view v, char sep) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (true) {
    size_t nxt = v.find(sep, pos);
    if (nxt == std::string_view::npos) {
      out.push_back(trim(v.substr(pos)));
      break;
    }
    out.push_back(trim(v.substr(pos, nxt - pos)));
    pos = nxt + 1;
  }
  return out;
}

inline long parse_long(const std::string& s, int line, const char* what) {
  long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ParseError(line, std::string("bad ") + what + ": '" + s + "'");
  return v;
}

}  // namespace detail

// Native ballot file:
//   # comment
//   seats: 2
//   candidates: c1,c2,c3,c4
//   quota: 21            (optional override)
//   4: c2,c3             (count: ranking)
inline Election parse_profile(const std::string& text) {
  Election e;
  e.seats = -1;
  long quota_override = -1;
  bool have_candidates = false;

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#') continue;

    size_t colon = line.find(':');
    if (colon == std::string::npos)
      throw ParseError(lineno, "expected '<key>: <value>' or '<count>: <ranking>'");
    std::string key = detail::trim(line.substr(0, colon));
    std::string value = detail::trim(line.substr(colon + 1));

    if (key == "seats") {
      e.seats = (int)detail::parse_long(value, lineno, "seat count");
      if (e.seats < 1) throw ParseError(lineno, "seats must be >= 1");
    } else if (key == "candidates") {
      if (have_candidates) throw ParseError(lineno, "duplicate candidates line");
      for (const auto& name : detail::split(value, ',')) {
        if (name.empty()) throw ParseError(lineno, "empty candidate name");
        e.candidates.push_back({(int)e.candidates.size(), name});
      }
      have_candidates = true;
    } else if (key == "quota") {
      quota_override = detail::parse_long(value, lineno, "quota");
    } else {
      // ballot line
      if (!have_candidates || e.seats < 0)
        throw ParseError(lineno,
                         "seats/candidates headers must precede ballots");
      long count = detail::parse_long(key, lineno, "ballot count");
      if (count <= 0) throw ParseError(lineno, "ballot count must be positive");
      Signature sig;
      std::set<int> seen;
      for (const auto& name : detail::split(value, ',')) {
        int idx;
        try {
          idx = e.index_of(name);
        } catch (const ValidationError&) {
          throw ParseError(lineno, "unknown candidate name: '" + name + "'");
        }
        if (!seen.insert(idx).second)
          throw ParseError(lineno, "duplicate candidate in ranking: " + name);
        sig.push_back(idx);
      }
      if (sig.empty()) throw ParseError(lineno, "empty ranking");
      e.profile.add(sig, count);
    }
  }

  if (!have_candidates) throw ParseError(lineno, "missing candidates header");
  if (e.seats < 0) throw ParseError(lineno, "missing seats header");
  if (e.seats >= e.num_candidates())
    throw ParseError(lineno, "seats must be less than the candidate count");
  e.quota = quota_override >= 0 ? quota_override
                                : droop_quota(e.profile.total, e.seats);
  e.validate();
  return e;
}

inline std::string serialize_profile(const Election& e) {
  std::ostringstream out;
  out << "seats: " << e.seats << "\n";
  out << "candidates: ";
  for (int i = 0; i < e.num_candidates(); ++i) {
    if (i) out << ",";
    out << e.candidates[i].name;
  }
  out << "\n";
  if (e.quota != droop_quota(e.profile.total, e.seats))
    out << "quota: " << e.quota << "\n";
  for (const auto& [sig, n] : e.profile.counts) {
    out << n << ": ";
    for (size_t i = 0; i < sig.size(); ++i) {
      if (i) out << ",";
      out << e.name_of(sig[i]);
    }
    out << "\n";
  }
  return out.str();
}

// PrefLib-style ranking files (.soi/.soc data lines, '# ALTERNATIVE NAME k:'
// metadata honoured when present).  Strict orders only: a '{...}' tie group
// is rejected.  Seats are not part of the format and are supplied by the
// caller.
inline Election parse_preflib(const std::string& text, int seats) {
  Election e;
  e.seats = seats;
  std::map<int, std::string> alt_names;
  std::vector<std::pair<long, std::vector<int>>> raw_ballots;
  int max_alt = 0;

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = detail::trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# ALTERNATIVE NAME ";
      if (line.rfind(tag, 0) == 0) {
        size_t colon = line.find(':', tag.size());
        if (colon != std::string::npos) {
          int id = (int)detail::parse_long(
              detail::trim(line.substr(tag.size(), colon - tag.size())),
              lineno, "alternative id");
          alt_names[id] = detail::trim(line.substr(colon + 1));
        }
      }
      continue;
    }
    if (line.find('{') != std::string::npos ||
        line.find('}') != std::string::npos)
      throw ParseError(lineno, "tied rank groups are not supported");
    size_t colon = line.find(':');
    if (colon == std::string::npos)
      throw ParseError(lineno, "expected '<count>: <ranking>'");
    long count = detail::parse_long(detail::trim(line.substr(0, colon)),
                                    lineno, "ballot count");
    if (count <= 0) throw ParseError(lineno, "ballot count must be positive");
    std::vector<int> ids;
    for (const auto& tok : detail::split(line.substr(colon + 1), ',')) {
      if (tok.empty()) continue;
      int id = (int)detail::parse_long(tok, lineno, "alternative id");
      if (id < 1) throw ParseError(lineno, "alternative ids are 1-based");
      max_alt = std::max(max_alt, id);
      ids.push_back(id);
    }
    if (ids.empty()) throw ParseError(lineno, "empty ranking");
    raw_ballots.emplace_back(count, std::move(ids));
  }

  for (const auto& [id, name] : alt_names) max_alt = std::max(max_alt, id);
  if (max_alt == 0) throw ParseError(lineno, "no ballots found");
  for (int id = 1; id <= max_alt; ++id) {
    auto it = alt_names.find(id);
    e.candidates.push_back(
        {id - 1, it != alt_names.end() ? it->second : "c" + std::to_string(id)});
  }

  for (auto& [count, ids] : raw_ballots) {
    Signature sig;
    std::set<int> seen;
    for (int id : ids) {
      if (!seen.insert(id).second)
        throw ValidationError("duplicate candidate in ranking");
      sig.push_back(id - 1);
    }
    e.profile.add(sig, count);
  }

  if (seats < 1 || seats >= e.num_candidates())
    throw ValidationError("seats must satisfy 1 <= seats < #candidates");
  e.quota = droop_quota(e.profile.total, e.seats);
  e.validate();
  return e;
}

}  // namespace stv

#endif  // STV_PARSE_HPP
