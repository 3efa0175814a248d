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

#ifndef STV_ORDER_ANALYSIS_HPP
#define STV_ORDER_ANALYSIS_HPP

#include <map>
#include <set>
#include <vector>

#include "stv/core.hpp"

namespace stv {

// One modeled counting round: a single election, a single elimination, or a
// block of candidates eliminated together (relative order relaxed away).
struct RoundSpec {
  Action kind = Action::Eliminated;
  std::vector<int> members;
};

// Structural rewrite: collapse maximal runs of consecutive eliminations.
inline std::vector<RoundSpec> group_eliminations(const CandidateOrder& o) {
  std::vector<RoundSpec> out;
  std::vector<int> run;
  for (const auto& s : o.steps) {
    if (s.action == Action::Eliminated) {
      run.push_back(s.candidate);
    } else {
      if (!run.empty()) {
        out.push_back({Action::Eliminated, run});
        run.clear();
      }
      out.push_back({Action::Elected, {s.candidate}});
    }
  }
  if (!run.empty()) out.push_back({Action::Eliminated, run});
  return out;
}

// The per-round structure of a (possibly partial) candidate order, after
// two normalisations: rounds once all seats are filled are dropped, and a
// tail in which as many candidates remain standing as there are unfilled
// seats is dropped too (those elections happen regardless of tallies).
struct RoundPlan {
  int ncand = 0;
  int seats = 0;
  long quota = 0;
  long total_votes = 0;
  bool grouped = false;
  std::vector<RoundSpec> rounds;
  // Derived tables; event/action entries are -1 for candidates without a
  // modeled event (unmentioned, or mentioned only in the dropped tail).
  std::vector<int> event_round;
  std::vector<int> event_action;
  bool complete = false;           // outcome fully determined by the order
  std::set<int> final_elected;     // meaningful when complete
  std::set<int> order_elected;     // elected per the raw order steps

  int num_rounds() const { return (int)rounds.size(); }
  bool is_elim(int j) const { return rounds[j].kind == Action::Eliminated; }
  int electee(int j) const { return rounds[j].members.front(); }

  bool standing_at(int c, int j) const {
    return event_round[c] < 0 || event_round[c] >= j;
  }
  bool standing_after(int c, int j) const {
    return event_round[c] < 0 || event_round[c] > j;
  }
  std::vector<int> standing_set(int j) const {
    std::vector<int> out;
    for (int c = 0; c < ncand; ++c)
      if (standing_at(c, j)) out.push_back(c);
    return out;
  }

  // Whether q_{c,j} = 1 is admissible.  A candidate eliminated in a modeled
  // round can never hold a quota while standing; one elected in round r may
  // hold it from the round after the last elimination preceding r; an
  // unmentioned candidate may hold it only once no modeled elimination
  // remains ahead.
  bool quota_possible(int c, int j) const {
    if (!standing_at(c, j)) return false;
    int r = event_round[c];
    if (r >= 0 && event_action[c] == 0) return false;
    int horizon = (r >= 0) ? r : num_rounds();
    for (int k = j; k < horizon; ++k)
      if (is_elim(k)) return false;
    return true;
  }
};

inline RoundPlan make_round_plan(const Election& e, const CandidateOrder& o,
                                 bool group = false) {
  o.check(e.num_candidates());
  RoundPlan plan;
  plan.ncand = e.num_candidates();
  plan.seats = e.seats;
  plan.quota = e.quota;
  plan.total_votes = e.profile.total;
  plan.grouped = group;
  plan.order_elected = o.elected_set();

  int standing = plan.ncand;
  int seats_rem = plan.seats;
  std::set<int> elected;
  std::vector<Step> modeled;
  bool forced = false;
  for (const auto& s : o.steps) {
    if (seats_rem == 0) break;  // seats filled; tail is irrelevant
    if (standing == seats_rem) {
      // forced completion: everyone left takes a seat
      forced = true;
      break;
    }
    if (s.action == Action::Elected) {
      if ((int)elected.size() + 1 > plan.seats)
        throw ValidationError("order elects more than the seat count");
      elected.insert(s.candidate);
      --seats_rem;
    }
    modeled.push_back(s);
    --standing;
  }
  if (!forced && seats_rem > 0 && standing == seats_rem) forced = true;

  plan.complete = (seats_rem == 0) || forced;
  if (plan.complete) {
    plan.final_elected = elected;
    if (forced) {
      std::set<int> mentioned;
      for (const auto& s : modeled) mentioned.insert(s.candidate);
      for (int c = 0; c < plan.ncand; ++c)
        if (!mentioned.count(c)) plan.final_elected.insert(c);
    }
  }

  // Rounds, optionally with elimination runs collapsed.
  plan.event_round.assign(plan.ncand, -1);
  plan.event_action.assign(plan.ncand, -1);
  std::vector<int> run;
  auto flush_run = [&] {
    if (run.empty()) return;
    if (group) {
      plan.rounds.push_back({Action::Eliminated, run});
    } else {
      for (int c : run) plan.rounds.push_back({Action::Eliminated, {c}});
    }
    run.clear();
  };
  for (const auto& s : modeled) {
    if (s.action == Action::Eliminated) {
      run.push_back(s.candidate);
    } else {
      flush_run();
      plan.rounds.push_back({Action::Elected, {s.candidate}});
    }
  }
  flush_run();
  for (int j = 0; j < plan.num_rounds(); ++j)
    for (int c : plan.rounds[j].members) {
      plan.event_round[c] = j;
      plan.event_action[c] = plan.rounds[j].kind == Action::Elected ? 1 : 0;
    }
  return plan;
}

// Possible-holder analysis of one signature under a plan.  holder_at[j]
// lists positions of `s` that may hold the vote at the start of round j
// (0-based); index num_rounds() is the state after the last modeled round.
inline std::vector<std::set<int>> possible_holders(const RoundPlan& plan,
                                                   const Signature& s) {
  const int R = plan.num_rounds();
  std::vector<std::set<int>> holder_at(R + 1);
  holder_at[0].insert(0);
  for (int j = 0; j < R; ++j) {
    for (int pos : holder_at[j]) {
      int c = s[pos];
      if (plan.event_round[c] != j) {
        holder_at[j + 1].insert(pos);
        continue;
      }
      if (plan.event_action[c] == 0) {
        // eliminated: the first still-standing later preference receives
        for (size_t q = pos + 1; q < s.size(); ++q) {
          if (plan.standing_after(s[q], j)) {
            holder_at[j + 1].insert((int)q);
            break;
          }
        }
      } else {
        // elected: scan later preferences; a candidate that may hold a
        // quota can be skipped, anyone else stops the scan
        for (size_t q = pos + 1; q < s.size(); ++q) {
          if (!plan.standing_after(s[q], j)) continue;
          holder_at[j + 1].insert((int)q);
          if (!plan.quota_possible(s[q], j)) break;
        }
      }
    }
  }
  return holder_at;
}

// Signatures that route identically under `plan` share a reduced form: the
// subsequence of positions that can ever hold the vote.
inline Signature reduce_signature(const RoundPlan& plan, const Signature& s) {
  auto holder_at = possible_holders(plan, s);
  std::set<int> keep;
  for (const auto& hs : holder_at) keep.insert(hs.begin(), hs.end());
  Signature out;
  for (int pos : keep) out.push_back(s[pos]);
  return out;
}

struct EquivalenceClasses {
  std::vector<Signature> repr;   // canonical representative per class
  std::vector<long> counts;      // profile votes carried by each class
  std::map<Signature, int> index_of_repr;
  bool raw = false;  // one class per signature, no reduction

  int size() const { return (int)repr.size(); }
  int class_of(const RoundPlan& plan, const Signature& s) const {
    auto it = index_of_repr.find(raw ? s : reduce_signature(plan, s));
    if (it == index_of_repr.end())
      throw ValidationError("signature reduces to an unknown class");
    return it->second;
  }
};

// Enumerate every route-equivalence class for `plan` (candidates for the
// modified profile include rankings absent from the cast votes).  A
// sequence is canonical exactly when all of its entries are possible
// holders; extensions only ever append candidates whose event lies after
// the first entry's event.
inline EquivalenceClasses equivalence_classes(const RoundPlan& plan,
                                              const Profile& profile) {
  EquivalenceClasses eq;
  auto event_of = [&](int c) {
    return plan.event_round[c] < 0 ? plan.num_rounds() + 1
                                   : plan.event_round[c];
  };

  std::vector<Signature> stack;
  for (int c = 0; c < plan.ncand; ++c) stack.push_back({c});
  while (!stack.empty()) {
    Signature seq = std::move(stack.back());
    stack.pop_back();
    eq.index_of_repr.emplace(seq, (int)eq.repr.size());
    eq.repr.push_back(seq);
    const int first_event = event_of(seq.front());
    for (int d = 0; d < plan.ncand; ++d) {
      if (event_of(d) <= first_event) continue;
      if (std::find(seq.begin(), seq.end(), d) != seq.end()) continue;
      Signature ext = seq;
      ext.push_back(d);
      if (reduce_signature(plan, ext) == ext) stack.push_back(ext);
    }
  }

  eq.counts.assign(eq.size(), 0);
  for (const auto& [sig, n] : profile.counts)
    eq.counts[eq.class_of(plan, sig)] += n;
  return eq;
}

// Every partial ranking as its own singleton class; exponential in the
// candidate count and useful only to cross-check the reduction.
inline EquivalenceClasses raw_signature_classes(int ncand,
                                                const Profile& profile) {
  EquivalenceClasses eq;
  eq.raw = true;
  std::vector<int> cur;
  std::vector<bool> used(ncand, false);
  std::function<void()> rec = [&] {
    for (int c = 0; c < ncand; ++c) {
      if (used[c]) continue;
      used[c] = true;
      cur.push_back(c);
      eq.index_of_repr.emplace(Signature(cur), (int)eq.repr.size());
      eq.repr.emplace_back(cur);
      rec();
      cur.pop_back();
      used[c] = false;
    }
  };
  rec();
  eq.counts.assign(eq.size(), 0);
  for (const auto& [sig, n] : profile.counts)
    eq.counts[eq.index_of_repr.at(sig)] += n;
  return eq;
}

}  // namespace stv

#endif  // STV_ORDER_ANALYSIS_HPP
