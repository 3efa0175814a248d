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

#ifndef STV_CORE_HPP
#define STV_CORE_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace stv {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Candidate {
  int index = 0;
  std::string name;
};

// A ballot's (possibly partial) strict ranking, as dense candidate indices.
using Signature = std::vector<int>;

inline void check_signature(const Signature& s, int ncand) {
  if (s.empty()) throw ValidationError("empty ballot ranking");
  std::set<int> seen;
  for (int c : s) {
    if (c < 0 || c >= ncand)
      throw ValidationError("candidate index out of range in ranking");
    if (!seen.insert(c).second)
      throw ValidationError("duplicate candidate in ranking");
  }
}

// Ballots aggregated by signature.  Nothing downstream ever looks at an
// individual ballot.
struct Profile {
  std::map<Signature, long> counts;
  long total = 0;

  void add(const Signature& s, long n) {
    if (n <= 0) throw ValidationError("ballot count must be positive");
    counts[s] += n;
    total += n;
  }

  long count(const Signature& s) const {
    auto it = counts.find(s);
    return it == counts.end() ? 0 : it->second;
  }
};

inline long droop_quota(long total_votes, int seats) {
  if (total_votes < 0 || seats < 1)
    throw ValidationError("droop_quota: bad arguments");
  return total_votes / (seats + 1) + 1;
}

struct Election {
  std::vector<Candidate> candidates;
  Profile profile;
  int seats = 1;
  long quota = 0;
  std::optional<std::set<int>> winners;

  int num_candidates() const { return (int)candidates.size(); }

  const std::string& name_of(int c) const { return candidates.at(c).name; }

  int index_of(const std::string& name) const {
    for (const auto& c : candidates)
      if (c.name == name) return c.index;
    throw ValidationError("unknown candidate name: " + name);
  }

  void validate() const {
    if (seats < 1 || seats >= num_candidates())
      throw ValidationError("seats must satisfy 1 <= seats < #candidates");
    std::set<std::string> names;
    for (int i = 0; i < num_candidates(); ++i) {
      if (candidates[i].index != i)
        throw ValidationError("candidate indices must be dense 0..n-1");
      if (!names.insert(candidates[i].name).second)
        throw ValidationError("duplicate candidate name");
    }
    long tot = 0;
    for (const auto& [sig, n] : profile.counts) {
      check_signature(sig, num_candidates());
      if (n <= 0) throw ValidationError("non-positive signature count");
      tot += n;
    }
    if (tot != profile.total) throw ValidationError("profile total mismatch");
    if (winners && (int)winners->size() != seats)
      throw ValidationError("winner set size != seats");
  }
};

inline std::vector<long> primary_votes(const Profile& p, int ncand) {
  std::vector<long> f(ncand, 0);
  for (const auto& [sig, n] : p.counts) f.at(sig.front()) += n;
  return f;
}

enum class Action { Eliminated = 0, Elected = 1 };

struct Step {
  int candidate = -1;
  Action action = Action::Eliminated;
  bool operator==(const Step&) const = default;
  bool operator<(const Step& o) const {
    if (candidate != o.candidate) return candidate < o.candidate;
    return (int)action < (int)o.action;
  }
};

// A (possibly partial) sequence of elections and eliminations.
struct CandidateOrder {
  std::vector<Step> steps;

  CandidateOrder() = default;
  explicit CandidateOrder(std::vector<Step> s) : steps(std::move(s)) {}

  size_t size() const { return steps.size(); }
  bool empty() const { return steps.empty(); }

  bool mentions(int c) const {
    return std::any_of(steps.begin(), steps.end(),
                       [&](const Step& s) { return s.candidate == c; });
  }

  std::set<int> elected_set() const {
    std::set<int> e;
    for (const auto& s : steps)
      if (s.action == Action::Elected) e.insert(s.candidate);
    return e;
  }

  std::set<int> eliminated_set() const {
    std::set<int> e;
    for (const auto& s : steps)
      if (s.action == Action::Eliminated) e.insert(s.candidate);
    return e;
  }

  CandidateOrder extended(Step s) const {
    CandidateOrder o = *this;
    o.steps.push_back(s);
    return o;
  }

  bool starts_with(const CandidateOrder& prefix) const {
    if (prefix.size() > size()) return false;
    return std::equal(prefix.steps.begin(), prefix.steps.end(), steps.begin());
  }

  void check(int ncand) const {
    std::set<int> seen;
    for (const auto& s : steps) {
      if (s.candidate < 0 || s.candidate >= ncand)
        throw ValidationError("order mentions unknown candidate");
      if (!seen.insert(s.candidate).second)
        throw ValidationError("candidate appears twice in order");
    }
  }

  bool operator==(const CandidateOrder&) const = default;
  bool operator<(const CandidateOrder& o) const { return steps < o.steps; }

  std::string str() const {
    std::string out = "[";
    for (size_t i = 0; i < steps.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(steps[i].candidate);
      out += steps[i].action == Action::Elected ? "+" : "-";
    }
    return out + "]";
  }
};

inline CandidateOrder order_of(
    std::initializer_list<std::pair<int, int>> items) {
  CandidateOrder o;
  for (auto [c, a] : items)
    o.steps.push_back({c, a ? Action::Elected : Action::Eliminated});
  return o;
}

}  // namespace stv

#endif  // STV_CORE_HPP
