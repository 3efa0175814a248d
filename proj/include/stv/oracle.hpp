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

#ifndef STV_ORACLE_HPP
#define STV_ORACLE_HPP

#include <functional>
#include <optional>
#include <vector>

#include "stv/core.hpp"
#include "stv/count.hpp"

namespace stv {

// How ties are resolved when deciding whether a manipulation succeeds.
//  Adversarial  - succeeds if ANY admissible tie resolution realises the
//                 target (matches the weak inequalities of the distance
//                 model).
//  EnginePolicy - the count is run with the fixed engine tie-break.
enum class TieSemantics { Adversarial, EnginePolicy };

struct OracleConfig {
  long k_max = 3;
  TieSemantics ties = TieSemantics::Adversarial;
  TieBreak policy = TieBreak::LowestIndex;
  bool force = false;  // lift the tiny-instance guard
  // Signature pool for additions; all partial rankings when empty.
  std::vector<Signature> addition_pool;
};

struct OracleOutcome {
  bool exceeded = false;  // no delta of size <= k_max worked
  long value = -1;
  std::optional<ManipulationDelta> witness;
};

inline std::vector<Signature> all_signatures(int ncand) {
  std::vector<Signature> out;
  std::vector<int> cur;
  std::vector<bool> used(ncand, false);
  std::function<void()> rec = [&] {
    for (int c = 0; c < ncand; ++c) {
      if (used[c]) continue;
      used[c] = true;
      cur.push_back(c);
      out.emplace_back(cur);
      rec();
      cur.pop_back();
      used[c] = false;
    }
  };
  rec();
  return out;
}

namespace detail {

// Exhaustive count explorer.  Recurses over every admissible tie
// resolution; `visit` sees each realised (order, elected, forced_from) and
// returns true to stop the whole exploration (goal found).
class CountExplorer {
 public:
  using Visitor = std::function<bool(const CandidateOrder&,
                                     const std::set<int>&, int forced_from)>;
  // `prefix_filter`, when set, prunes branches that already deviate.
  CountExplorer(const Election& e, const Profile& profile, Visitor visit,
                const CandidateOrder* target_prefix = nullptr)
      : e_(e), visit_(std::move(visit)), target_(target_prefix) {
    piles_.resize(e.num_candidates());
    for (const auto& [sig, cnt] : profile.counts)
      piles_[sig.front()].push_back({sig, cnt, Rat(1)});
  }

  bool run() {
    std::vector<bool> standing(e_.num_candidates(), true);
    std::vector<bool> gone(e_.num_candidates(), false);
    CandidateOrder order;
    std::set<int> elected;
    return step(standing, gone, order, elected, e_.seats);
  }

 private:
  bool prefix_ok(const CandidateOrder& order, int forced_from) const {
    if (!target_) return true;
    size_t n = std::min(order.size(), target_->size());
    size_t fz = forced_from < 0 ? order.size() : (size_t)forced_from;
    for (size_t i = 0; i < n && i < fz; ++i)
      if (!(order.steps[i] == target_->steps[i])) return false;
    // Inside a forced block the realised elections are simultaneous: match
    // the target's remaining steps as an unordered subset of elections.
    if (n > fz) {
      std::set<int> forced;
      for (size_t i = fz; i < order.size(); ++i)
        forced.insert(order.steps[i].candidate);
      for (size_t i = fz; i < n; ++i) {
        const Step& t = target_->steps[i];
        if (t.action != Action::Elected || !forced.count(t.candidate))
          return false;
      }
    }
    return true;
  }

  bool step(std::vector<bool>& standing, std::vector<bool>& gone,
            CandidateOrder& order, std::set<int>& elected, int seats_left) {
    const int n = e_.num_candidates();
    std::vector<int> live;
    for (int c = 0; c < n; ++c)
      if (standing[c]) live.push_back(c);

    if (seats_left <= 0 || live.empty())
      return visit_(order, elected, -1);

    std::map<int, Rat> tallies;
    for (int c : live) {
      Rat t = 0;
      for (const auto& p : piles_[c]) t += p.value();
      tallies[c] = t;
    }

    if ((int)live.size() == seats_left) {
      CandidateOrder full = order;
      std::set<int> el = elected;
      int fz = (int)order.size();
      for (int c : live) {
        full.steps.push_back({c, Action::Elected});
        el.insert(c);
      }
      if (!prefix_ok(full, fz)) return false;
      return visit_(full, el, fz);
    }

    std::vector<int> surpluses;
    for (int c : live)
      if (tallies[c] >= e_.quota) surpluses.push_back(c);

    std::vector<int> choices;
    bool electing = !surpluses.empty();
    if (electing) {
      Rat best = tallies[surpluses.front()];
      for (int c : surpluses) best = std::max(best, tallies[c]);
      for (int c : surpluses)
        if (tallies[c] == best) choices.push_back(c);
    } else {
      Rat best = tallies[live.front()];
      for (int c : live) best = std::min(best, tallies[c]);
      for (int c : live)
        if (tallies[c] == best) choices.push_back(c);
    }
    if (choices.size() > 1 && ties_single_) choices.resize(1);

    for (int c : choices) {
      order.steps.push_back(
          {c, electing ? Action::Elected : Action::Eliminated});
      if (!prefix_ok(order, -1)) {
        order.steps.pop_back();
        continue;
      }
      std::vector<std::vector<Parcel>> saved_piles = piles_;
      standing[c] = false;
      bool done = false;

      if (electing) {
        elected.insert(c);
        if (seats_left == 1) {
          done = visit_(order, elected, -1);
        } else {
          std::vector<bool> blocked = gone;
          blocked[c] = true;
          for (int s : surpluses) blocked[s] = true;
          gone[c] = true;
          Rat rho = 0;
          std::vector<std::pair<Parcel, int>> moving;
          for (const auto& p : piles_[c]) {
            int dst = next_eligible(p.sig, c, blocked);
            if (dst >= 0) {
              rho += p.value();
              moving.emplace_back(p, dst);
            }
          }
          Rat surplus = tallies[c] - e_.quota;
          Rat tau = (rho <= surplus) ? Rat(1) : surplus / rho;
          piles_[c].clear();
          for (auto& [p, dst] : moving) {
            p.value_per_vote *= tau;
            if (p.value_per_vote > 0) piles_[dst].push_back(p);
          }
          done = step(standing, gone, order, elected, seats_left - 1);
          gone[c] = false;
        }
        if (!done) elected.erase(c);
      } else {
        gone[c] = true;
        auto pile = std::move(piles_[c]);
        piles_[c].clear();
        for (const auto& p : pile) {
          int dst = next_eligible(p.sig, c, gone);
          if (dst >= 0) piles_[dst].push_back(p);
        }
        done = step(standing, gone, order, elected, seats_left);
        gone[c] = false;
      }

      if (done) return true;
      piles_ = std::move(saved_piles);
      standing[c] = true;
      order.steps.pop_back();
    }
    return false;
  }

  const Election& e_;
  Visitor visit_;
  const CandidateOrder* target_;
  std::vector<std::vector<Parcel>> piles_;

 public:
  bool ties_single_ = false;  // restrict to the first (policy) choice
};

// Drop the steps of `o` that come after all seats are filled.
inline CandidateOrder truncate_at_fill(const CandidateOrder& o, int seats) {
  CandidateOrder out;
  int el = 0;
  for (const auto& s : o.steps) {
    out.steps.push_back(s);
    if (s.action == Action::Elected && ++el == seats) break;
  }
  return out;
}

}  // namespace detail

// Does any admissible resolution elect a set different from `original`?
inline bool outcome_can_change(const Election& e, const Profile& manipulated,
                               const std::set<int>& original,
                               TieSemantics ties, TieBreak policy) {
  if (ties == TieSemantics::EnginePolicy) {
    Election m = e;
    m.profile = manipulated;
    CountResult r = run_count(m, policy);
    return r.elected != original;
  }
  detail::CountExplorer ex(
      e, manipulated,
      [&](const CandidateOrder&, const std::set<int>& el, int) {
        return el != original;
      });
  return ex.run();
}

// Does any admissible resolution realise a count whose order starts with
// `prefix`?
inline bool can_realize_prefix(const Election& e, const Profile& manipulated,
                               const CandidateOrder& prefix,
                               TieSemantics ties, TieBreak policy) {
  CandidateOrder want = detail::truncate_at_fill(prefix, e.seats);
  if (ties == TieSemantics::EnginePolicy) {
    Election m = e;
    m.profile = manipulated;
    CountResult r = run_count(m, policy);
    // positional match with forced-block laxity
    size_t fz = r.forced_from < 0 ? r.order.size() : (size_t)r.forced_from;
    if (want.size() > r.order.size()) return false;
    for (size_t i = 0; i < want.size() && i < fz; ++i)
      if (!(want.steps[i] == r.order.steps[i])) return false;
    if (want.size() > fz) {
      std::set<int> forced;
      for (size_t i = fz; i < r.order.size(); ++i)
        forced.insert(r.order.steps[i].candidate);
      for (size_t i = fz; i < want.size(); ++i)
        if (want.steps[i].action != Action::Elected ||
            !forced.count(want.steps[i].candidate))
          return false;
    }
    return true;
  }
  // Deviating branches are pruned inside the explorer, so any terminal
  // count at least as long as the target realises it.
  detail::CountExplorer ex(
      e, manipulated,
      [&](const CandidateOrder& order, const std::set<int>&, int) {
        return order.size() >= want.size();
      },
      &want);
  return ex.run();
}

namespace detail {

// Enumerates multisets of total size k over `items`, where items[i] can be
// used at most cap[i] times.  `fn` returns true to stop.
inline bool for_each_multiset(const std::vector<long>& cap, long k,
                              std::vector<long>& take, size_t idx,
                              const std::function<bool()>& fn) {
  if (k == 0) {
    return fn();
  }
  if (idx >= cap.size()) return false;
  long most = std::min(cap[idx], k);
  for (long t = most; t >= 0; --t) {
    take[idx] = t;
    if (for_each_multiset(cap, k - t, take, idx + 1, fn)) return true;
  }
  take[idx] = 0;
  return false;
}

struct DeltaSpace {
  std::vector<Signature> rem_sigs;
  std::vector<long> rem_caps;
  std::vector<Signature> add_sigs;
  std::vector<long> add_caps;
};

inline DeltaSpace delta_space(const Election& e, const OracleConfig& cfg) {
  DeltaSpace sp;
  for (const auto& [sig, n] : e.profile.counts) {
    sp.rem_sigs.push_back(sig);
    sp.rem_caps.push_back(n);
  }
  sp.add_sigs = cfg.addition_pool.empty() ? all_signatures(e.num_candidates())
                                          : cfg.addition_pool;
  sp.add_caps.assign(sp.add_sigs.size(), cfg.k_max);
  return sp;
}

// Enumerate deltas of exactly size k; `test` decides success for a profile.
inline std::optional<ManipulationDelta> search_size(
    const Election& e, const DeltaSpace& sp, long k,
    const std::function<bool(const Profile&)>& test) {
  std::vector<long> rem(sp.rem_sigs.size(), 0), add(sp.add_sigs.size(), 0);
  std::optional<ManipulationDelta> hit;
  std::function<bool()> try_adds = [&]() {
    ManipulationDelta d;
    for (size_t i = 0; i < rem.size(); ++i)
      if (rem[i]) d.removals[sp.rem_sigs[i]] = rem[i];
    for (size_t i = 0; i < add.size(); ++i)
      if (add[i]) d.additions[sp.add_sigs[i]] = add[i];
    // adding back what was removed is never minimal; skip identical pairs
    if (d.removals == d.additions) return false;
    Profile p = apply_manipulation(e.profile, d);
    if (test(p)) {
      hit = std::move(d);
      return true;
    }
    return false;
  };
  std::function<bool()> try_rems = [&]() {
    return for_each_multiset(sp.add_caps, k, add, 0, try_adds);
  };
  for_each_multiset(sp.rem_caps, k, rem, 0, try_rems);
  return hit;
}

inline void guard_size(const Election& e, const OracleConfig& cfg) {
  if (cfg.force) return;
  if (e.num_candidates() > 5 || e.profile.total > 60 || cfg.k_max > 6)
    throw ValidationError(
        "oracle: instance above configured size limits (use force)");
}

}  // namespace detail

// Smallest k <= k_max for which some size-k manipulation changes the
// elected set.  Exhaustive over signature-count vectors.
inline OracleOutcome brute_force_mov(const Election& e, OracleConfig cfg) {
  detail::guard_size(e, cfg);
  std::set<int> original =
      e.winners ? *e.winners : run_count(e, cfg.policy).elected;
  detail::DeltaSpace sp = detail::delta_space(e, cfg);
  auto test = [&](const Profile& p) {
    return outcome_can_change(e, p, original, cfg.ties, cfg.policy);
  };
  if (test(e.profile)) return {false, 0, ManipulationDelta{}};
  for (long k = 1; k <= cfg.k_max; ++k) {
    auto w = detail::search_size(e, sp, k, test);
    if (w) return {false, k, std::move(w)};
  }
  return {true, cfg.k_max, std::nullopt};
}

// Smallest k <= k_max for which some size-k manipulation makes the realised
// count start with `order`.
inline OracleOutcome brute_force_distance_to(const Election& e,
                                             const CandidateOrder& order,
                                             OracleConfig cfg) {
  detail::guard_size(e, cfg);
  order.check(e.num_candidates());
  detail::DeltaSpace sp = detail::delta_space(e, cfg);
  auto test = [&](const Profile& p) {
    return can_realize_prefix(e, p, order, cfg.ties, cfg.policy);
  };
  if (test(e.profile)) return {false, 0, ManipulationDelta{}};
  for (long k = 1; k <= cfg.k_max; ++k) {
    auto w = detail::search_size(e, sp, k, test);
    if (w) return {false, k, std::move(w)};
  }
  return {true, cfg.k_max, std::nullopt};
}

}  // namespace stv

#endif  // STV_ORACLE_HPP
