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

#ifndef STV_BOUNDS_HPP
#define STV_BOUNDS_HPP

#include <map>
#include <set>
#include <vector>

#include "stv/core.hpp"
#include "stv/count.hpp"
#include "stv/order_analysis.hpp"
#include "stv/rational.hpp"

namespace stv {

// Winner elimination upper bound: the cheapest way, over the elimination
// rounds of the recorded count, of making some eventual winner lose that
// round instead.  Moving ceil((w_j - v_j)/2) votes from the winner w to the
// round's loser c_j suffices when w's reduced tally does not exceed any
// other standing candidate's tally (the tie with c_j goes our way).  The
// as-published variant uses ceil(w_j - v_j/2) compared against the standing
// tallies directly; it is kept behind `published_rule` for comparison but
// does not reproduce the worked example.
inline long winner_elimination_ub(const Election& e, const CountResult& count,
                                  bool published_rule = false) {
  long weub = e.profile.total;
  for (const auto& rec : count.rounds) {
    if (rec.action != Action::Eliminated) continue;
    const int cj = rec.candidate;
    const Rat vj = rec.tallies.at(cj);
    for (int w : count.elected) {
      auto it = rec.tallies.find(w);
      if (it == rec.tallies.end()) continue;  // already elected by round j
      const Rat wj = it->second;
      long delta = rat_ceil(wj - vj);
      if (delta < weub) weub = std::max(delta, 0L);
      if (published_rule) {
        long half = rat_ceil(wj - vj / 2);
        bool ok = true;
        for (const auto& [k, t] : rec.tallies)
          if (k != cj && Rat(half) > t) ok = false;
        if (ok && half < weub) weub = std::max(half, 0L);
      } else {
        long half = rat_ceil((wj - vj) / 2);
        bool ok = true;
        for (const auto& [k, t] : rec.tallies)
          if (k != cj && k != w && wj - half > t) ok = false;
        if (ok && half < weub) weub = std::max(half, 0L);
      }
    }
  }
  return weub;
}

// Simple-STV upper bound: lift the best-placed loser to a quota on first
// preferences.
inline long simple_stv_ub(const Election& e, const std::set<int>& elected) {
  auto fp = primary_votes(e.profile, e.num_candidates());
  long best = e.profile.total;
  for (int c = 0; c < e.num_candidates(); ++c) {
    if (elected.count(c)) continue;
    best = std::min(best, std::max(0L, e.quota - fp[c]));
  }
  return best;
}

inline long initial_upper_bound(const Election& e, const CountResult& count) {
  return std::min(winner_elimination_ub(e, count),
                  simple_stv_ub(e, count.elected));
}

// For each modeled round and standing candidate, the cast-vote signatures
// that could possibly sit in that candidate's tally, and their total count.
struct PossibleTallies {
  std::vector<std::map<int, std::set<Signature>>> sigs;  // [round][cand]
  std::vector<std::map<int, long>> vmax;                 // [round][cand]
};

inline PossibleTallies possible_signatures(const Election& e,
                                           const RoundPlan& plan) {
  PossibleTallies out;
  const int R = plan.num_rounds();
  out.sigs.resize(R);
  out.vmax.resize(R);
  for (int j = 0; j < R; ++j)
    for (int c : plan.standing_set(j)) out.vmax[j][c] = 0;
  for (const auto& [sig, n] : e.profile.counts) {
    auto holder_at = possible_holders(plan, sig);
    for (int j = 0; j < R; ++j) {
      for (int pos : holder_at[j]) {
        int c = sig[pos];
        out.sigs[j][c].insert(sig);
        out.vmax[j][c] += n;
      }
    }
  }
  return out;
}

inline PossibleTallies possible_signatures(const Election& e,
                                           const CandidateOrder& order) {
  return possible_signatures(e, make_round_plan(e, order));
}

struct LowerBoundComponent {
  int round = 0;  // 0-based modeled round
  Action kind = Action::Eliminated;
  std::vector<int> members;
  long l_q = 0;
  long l_e1 = 0;
  long l_e2 = 0;
  long value = 0;
};

struct LowerBoundBreakdown {
  std::vector<std::map<int, long>> vmax;
  std::vector<long> vmin;
  std::vector<LowerBoundComponent> components;
  long lb = 0;
};

// Closed-form lower bound on the manipulation needed to realise any
// complete order starting with this prefix.  Elected rounds need the
// electee to reach a quota against the most it could possibly hold;
// elimination rounds need the loser below everyone and everyone below the
// quota.  The epsilon refinement of the strict quota comparison is ignored.
inline LowerBoundBreakdown prefix_lower_bound(const Election& e,
                                              const RoundPlan& plan) {
  LowerBoundBreakdown out;
  PossibleTallies pt = possible_signatures(e, plan);
  out.vmax = pt.vmax;
  {
    auto fp = primary_votes(e.profile, e.num_candidates());
    out.vmin.assign(fp.begin(), fp.end());
  }

  for (int j = 0; j < plan.num_rounds(); ++j) {
    LowerBoundComponent comp;
    comp.round = j;
    comp.kind = plan.rounds[j].kind;
    comp.members = plan.rounds[j].members;
    auto standing = plan.standing_set(j);
    if (comp.kind == Action::Elected) {
      int c = plan.electee(j);
      comp.l_q = std::max(0L, e.quota - pt.vmax[j].at(c));
      comp.value = comp.l_q;
    } else {
      // First eliminated member must trail every survivor.  One changed
      // ballot can both strip a vote from the loser and hand one to the
      // rival, so a gap of g needs ceil(g/2) changes.
      long best_member = -1;
      for (int b : comp.members) {
        long need = 0;
        for (int k : standing) {
          if (k == b) continue;
          if (std::find(comp.members.begin(), comp.members.end(), k) !=
              comp.members.end())
            continue;
          long gap = out.vmin[b] - pt.vmax[j].at(k);
          need = std::max(need, (gap + 1) / 2);
        }
        need = std::max(need, 0L);
        best_member = best_member < 0 ? need : std::min(best_member, need);
      }
      comp.l_e1 = std::max(best_member, 0L);
      for (int k : standing)
        comp.l_e2 = std::max(comp.l_e2, out.vmin[k] - e.quota);
      comp.l_e2 = std::max(comp.l_e2, 0L);
      comp.value = std::max(comp.l_e1, comp.l_e2);
    }
    out.lb = std::max(out.lb, comp.value);
    out.components.push_back(comp);
  }
  return out;
}

inline LowerBoundBreakdown prefix_lower_bound(const Election& e,
                                              const CandidateOrder& order) {
  return prefix_lower_bound(e, make_round_plan(e, order));
}

}  // namespace stv

#endif  // STV_BOUNDS_HPP
