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

#ifndef STV_COUNT_HPP
#define STV_COUNT_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "stv/core.hpp"
#include "stv/rational.hpp"

namespace stv {

enum class TieBreak { LowestIndex, HighestIndex };

inline const char* tie_break_name(TieBreak t) {
  return t == TieBreak::LowestIndex ? "lowest-index" : "highest-index";
}

// A bundle of identical-signature votes sitting in some tally at a common
// per-vote value.
struct Parcel {
  Signature sig;
  long count = 0;
  Rat value_per_vote = 1;

  Rat value() const { return value_per_vote * count; }
};

struct RoundRecord {
  int round = 0;  // 1-based
  int candidate = -1;
  Action action = Action::Eliminated;
  bool forced = false;  // elected because #standing == #unfilled seats
  std::map<int, Rat> tallies;  // standing candidates at the start of the round
  Rat transfer_value = 0;      // tau_j, election rounds only
  Rat transferable = 0;        // rho_j, election rounds only
  Rat exhausted_delta = 0;
};

struct CountResult {
  CandidateOrder order;
  std::vector<RoundRecord> rounds;
  std::set<int> elected;
  std::map<int, Rat> retained;  // value kept by each elected candidate
  Rat exhausted_total = 0;
  std::string tie_policy;
  int forced_from = -1;  // index into order.steps, -1 when nothing was forced
};

namespace detail {

// Next preference of a parcel that may still receive votes.  `blocked`
// holds candidates that are elected, eliminated, or sitting at/above the
// quota in the current surpluses list.
inline int next_eligible(const Signature& sig, int holder,
                         const std::vector<bool>& blocked) {
  size_t pos = 0;
  while (pos < sig.size() && sig[pos] != holder) ++pos;
  for (++pos; pos < sig.size(); ++pos)
    if (!blocked[sig[pos]]) return sig[pos];
  return -1;
}

inline bool better_tie(int a, int b, TieBreak t) {
  return t == TieBreak::LowestIndex ? a < b : a > b;
}

}  // namespace detail

// Inclusive Gregory count.  One candidate is elected or eliminated per
// round; candidates at/above quota receive no further votes; surplus
// transfers reduce vote values by tau = min(1, surplus / transferable).
inline CountResult run_count(const Election& e,
                             TieBreak tie = TieBreak::LowestIndex) {
  const int n = e.num_candidates();
  if (e.seats < 1 || e.seats >= n)
    throw ValidationError("run_count: bad seat count");

  std::vector<std::vector<Parcel>> piles(n);
  for (const auto& [sig, cnt] : e.profile.counts)
    piles[sig.front()].push_back({sig, cnt, Rat(1)});

  std::vector<bool> standing(n, true), elected_or_gone(n, false);
  int seats_left = e.seats;
  CountResult res;
  res.tie_policy = tie_break_name(tie);

  auto tally_of = [&](int c) {
    Rat t = 0;
    for (const auto& p : piles[c]) t += p.value();
    return t;
  };

  for (int round = 1;; ++round) {
    std::vector<int> live;
    for (int c = 0; c < n; ++c)
      if (standing[c]) live.push_back(c);
    if (live.empty() || seats_left <= 0) break;

    std::map<int, Rat> tallies;
    for (int c : live) tallies[c] = tally_of(c);

    // Steps 14-15: as many candidates remain as seats; elect them all.
    if ((int)live.size() == seats_left) {
      if (res.forced_from < 0) res.forced_from = (int)res.order.size();
      std::vector<int> by_tally = live;
      std::sort(by_tally.begin(), by_tally.end(), [&](int a, int b) {
        if (tallies[a] != tallies[b]) return tallies[a] > tallies[b];
        return detail::better_tie(a, b, tie);
      });
      for (int c : by_tally) {
        RoundRecord rec;
        rec.round = round++;
        rec.candidate = c;
        rec.action = Action::Elected;
        rec.forced = true;
        rec.tallies = tallies;
        res.rounds.push_back(rec);
        res.order.steps.push_back({c, Action::Elected});
        res.elected.insert(c);
        res.retained[c] = tallies[c];
        standing[c] = false;
      }
      break;
    }

    std::vector<int> surpluses;
    for (int c : live)
      if (tallies[c] >= e.quota) surpluses.push_back(c);
    std::sort(surpluses.begin(), surpluses.end(), [&](int a, int b) {
      if (tallies[a] != tallies[b]) return tallies[a] > tallies[b];
      return detail::better_tie(a, b, tie);
    });

    RoundRecord rec;
    rec.round = round;
    rec.tallies = tallies;

    if (!surpluses.empty()) {
      const int c = surpluses.front();
      rec.candidate = c;
      rec.action = Action::Elected;
      res.order.steps.push_back({c, Action::Elected});
      res.elected.insert(c);
      standing[c] = false;
      --seats_left;

      if (seats_left == 0) {
        res.retained[c] = tallies[c];
        res.rounds.push_back(rec);
        break;
      }

      // Ineligible to receive: the elected, the eliminated, and everyone
      // still in the surpluses list.
      std::vector<bool> blocked = elected_or_gone;
      blocked[c] = true;
      for (int s : surpluses) blocked[s] = true;
      elected_or_gone[c] = true;

      Rat rho = 0;
      std::vector<std::pair<Parcel, int>> moving;
      for (const auto& p : piles[c]) {
        int dst = detail::next_eligible(p.sig, c, blocked);
        if (dst >= 0) {
          rho += p.value();
          moving.emplace_back(p, dst);
        }
      }
      const Rat surplus = tallies[c] - e.quota;
      const Rat tau = (rho <= surplus) ? Rat(1) : surplus / rho;
      rec.transfer_value = tau;
      rec.transferable = rho;
      for (auto& [p, dst] : moving) {
        p.value_per_vote *= tau;
        if (p.value_per_vote > 0) piles[dst].push_back(p);
      }
      rec.exhausted_delta = surplus - tau * rho;
      res.retained[c] = e.quota;
      res.exhausted_total += rec.exhausted_delta;
      piles[c].clear();
    } else {
      int c = live.front();
      for (int k : live)
        if (tallies[k] < tallies[c] ||
            (tallies[k] == tallies[c] && detail::better_tie(k, c, tie)))
          c = k;
      rec.candidate = c;
      rec.action = Action::Eliminated;
      res.order.steps.push_back({c, Action::Eliminated});
      standing[c] = false;
      elected_or_gone[c] = true;

      // No standing candidate holds a quota here, so only the elected and
      // eliminated are skipped.
      for (const auto& p : piles[c]) {
        int dst = detail::next_eligible(p.sig, c, elected_or_gone);
        if (dst >= 0) {
          piles[dst].push_back(p);
        } else {
          rec.exhausted_delta += p.value();
        }
      }
      res.exhausted_total += rec.exhausted_delta;
      piles[c].clear();
    }
    res.rounds.push_back(rec);
  }

  return res;
}

// Removals and additions over aggregated signatures; totals are preserved.
struct ManipulationDelta {
  std::map<Signature, long> removals;
  std::map<Signature, long> additions;

  long size() const {
    long k = 0;
    for (const auto& [s, n] : additions) k += n;
    return k;
  }
};

inline Profile apply_manipulation(const Profile& p,
                                  const std::map<Signature, long>& removals,
                                  const std::map<Signature, long>& additions) {
  long rem = 0, add = 0;
  for (const auto& [s, n] : removals) rem += n;
  for (const auto& [s, n] : additions) add += n;
  if (rem != add)
    throw ValidationError("manipulation must remove and add equal counts");

  Profile out = p;
  for (const auto& [s, n] : removals) {
    if (n < 0) throw ValidationError("negative removal");
    auto it = out.counts.find(s);
    long have = it == out.counts.end() ? 0 : it->second;
    if (n > have)
      throw ValidationError("removal exceeds available count for signature");
    if (n == 0) continue;
    if ((it->second -= n) == 0) out.counts.erase(it);
    out.total -= n;
  }
  for (const auto& [s, n] : additions) {
    if (n < 0) throw ValidationError("negative addition");
    if (n > 0) out.add(s, n);
  }
  return out;
}

inline Profile apply_manipulation(const Profile& p,
                                  const ManipulationDelta& d) {
  return apply_manipulation(p, d.removals, d.additions);
}

}  // namespace stv

#endif  // STV_COUNT_HPP
