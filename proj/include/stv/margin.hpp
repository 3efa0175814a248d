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

#ifndef STV_MARGIN_HPP
#define STV_MARGIN_HPP

#include <atomic>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

#include "stv/bounds.hpp"
#include "stv/model.hpp"

namespace stv {

// A partial order waiting in the search frontier, keyed by its assigned
// lower bound (the larger of the rule bound and the model bound).
struct FrontierEntry {
  CandidateOrder order;
  long lb = 0;
  bool blocked = false;  // complete order whose solve stalled
};

struct MarginConfig {
  ModelMode mode = ModelMode::Exact;
  int piecewise_k = 5;
  bool use_rule_lb = true;
  int frontier_width = 1;  // N_F: orders expanded in parallel
  int fix_rounds = 0;      // R: prefix of the real count taken as given
  bool group_eliminations = false;
  double solve_stall_seconds = 30.0;
  double solve_wall_seconds = 300.0;
  double wall_seconds = std::numeric_limits<double>::infinity();
  TieBreak tie = TieBreak::LowestIndex;
};

struct EvaluationRecord {
  CandidateOrder order;
  long rule_lb = 0;
  bool solved = false;
  milp::SolveStatus status = milp::SolveStatus::Infeasible;
  long assigned_lb = 0;
  bool complete = false;
};

struct MarginResult {
  long lower_bound = 0;
  long upper_bound = 0;
  bool exact = false;
  bool conditional = false;  // fixed-prefix runs do not certify globally
  std::optional<ManipulationDelta> certificate;
  std::set<int> original_winners;
  long initial_upper_bound = 0;
  long weub = 0;
  long simple_ub = 0;
  long models_solved = 0;
  long orders_expanded = 0;
  long nodes = 0;
  double wall_seconds = 0;
  std::vector<EvaluationRecord> evaluations;
  std::vector<std::pair<double, long>> ub_history;  // (time, new UB)
};

// A partial order is worth exploring only if it can still end somewhere
// other than the recorded outcome: rejected when it already elects more
// than the seat count, or when its elections plus any forced completion
// reproduce the original winner set exactly.
inline bool is_valid_order(const CandidateOrder& order, const std::set<int>& E,
                           int seats, int ncand) {
  if ((int)order.elected_set().size() > seats) return false;
  std::set<int> elected;
  int standing = ncand;
  int seats_rem = seats;
  std::set<int> mentioned;
  for (const auto& s : order.steps) {
    if (seats_rem == 0) break;
    if (standing == seats_rem) break;
    if (s.action == Action::Elected) {
      elected.insert(s.candidate);
      if ((int)elected.size() > seats) return false;
      --seats_rem;
    }
    mentioned.insert(s.candidate);
    --standing;
  }
  if (seats_rem > 0 && standing == seats_rem) {
    for (int c = 0; c < ncand; ++c)
      if (!mentioned.count(c)) elected.insert(c);
    seats_rem = 0;
  }
  if (seats_rem == 0) return elected != E;
  // outcome still open: only a full re-election of E is hopeless, and that
  // is exactly the |elected| == seats case handled above
  return true;
}

// Applies a solved model's manipulation and reruns the count.  A changed
// outcome certifies Sum(p_s) as an upper bound on the MOV.
struct VerifyOutcome {
  CandidateOrder realized;
  bool outcome_changed = false;
  long certified_ub = -1;
};

inline VerifyOutcome verify_manipulation(const Election& e,
                                         const ManipulationDelta& delta,
                                         TieBreak tie = TieBreak::LowestIndex) {
  VerifyOutcome out;
  Election m = e;
  m.profile = apply_manipulation(e.profile, delta);
  m.winners.reset();
  CountResult r = run_count(m, tie);
  out.realized = r.order;
  std::set<int> original =
      e.winners ? *e.winners : run_count(e, tie).elected;
  out.outcome_changed = r.elected != original;
  if (!out.outcome_changed) {
    // a favourable tie resolution may still overturn the outcome
    out.outcome_changed = outcome_can_change(
        e, m.profile, original, TieSemantics::Adversarial, tie);
  }
  if (out.outcome_changed) out.certified_ub = delta.size();
  return out;
}

namespace margin_detail {

// Completion rules: append the forced ending when only one candidate
// remains or all seats are filled; returns whether the order now decides
// the outcome.
inline bool complete_order(const Election& e, CandidateOrder& order) {
  std::set<int> mentioned;
  int elected = 0;
  for (const auto& s : order.steps) {
    mentioned.insert(s.candidate);
    if (s.action == Action::Elected) ++elected;
  }
  if (elected >= e.seats) return true;
  int standing = e.num_candidates() - (int)order.size();
  if (standing == e.seats - elected) {
    for (int c = 0; c < e.num_candidates(); ++c)
      if (!mentioned.count(c)) order.steps.push_back({c, Action::Elected});
    return true;
  }
  if (standing == 1) {
    // one candidate left with seats still open is impossible for valid
    // orders; covered by the forced case above
    return true;
  }
  return false;
}

// Allowed actions at each position under a fixed prefix of the original
// count: electees keep their rounds, eliminated candidates stay inside
// their original elimination window in any order.
struct FixedPrefix {
  int rounds = 0;
  std::vector<std::optional<int>> electee_at;   // per position < rounds
  std::vector<std::set<int>> elim_window_at;    // per position < rounds
};

inline FixedPrefix fixed_prefix(const CountResult& original, int R) {
  FixedPrefix fp;
  fp.rounds = R;
  if (R <= 0) return fp;
  if (R > (int)original.order.size())
    throw ValidationError("fix_rounds exceeds the rounds of the count");
  fp.electee_at.resize(R);
  fp.elim_window_at.resize(R);
  // windows are maximal runs of consecutive eliminations
  int pos = 0;
  while (pos < R) {
    const Step& s = original.order.steps[pos];
    if (s.action == Action::Elected) {
      fp.electee_at[pos] = s.candidate;
      ++pos;
      continue;
    }
    int end = pos;
    std::set<int> window;
    while (end < R &&
           original.order.steps[end].action == Action::Eliminated) {
      window.insert(original.order.steps[end].candidate);
      ++end;
    }
    for (int k = pos; k < end; ++k) fp.elim_window_at[k] = window;
    pos = end;
  }
  return fp;
}

inline bool prefix_allows(const FixedPrefix& fp, size_t position,
                          const CandidateOrder& sofar, Step next) {
  if ((int)position >= fp.rounds) return true;
  if (fp.electee_at[position])
    return next.action == Action::Elected &&
           next.candidate == *fp.electee_at[position];
  if (next.action != Action::Eliminated) return false;
  if (!fp.elim_window_at[position].count(next.candidate)) return false;
  return true;
}

// Concrete manipulations behind the two closed-form upper bounds, verified
// by simulation so the search can report a certificate even when no
// complete order improves on the initial bound.
inline std::optional<ManipulationDelta> initial_certificate(
    const Election& e, const CountResult& counted, long ub, TieBreak tie) {
  std::vector<ManipulationDelta> candidates;
  auto fp = primary_votes(e.profile, e.num_candidates());

  // Simple-STV: put `quota - f_p(c)` extra first preferences on the best
  // placed loser, taken from other candidates' piles.
  for (int c = 0; c < e.num_candidates(); ++c) {
    if (counted.elected.count(c)) continue;
    long need = std::max(0L, e.quota - fp[c]);
    if (need != ub) continue;
    ManipulationDelta d;
    long remaining = need;
    for (const auto& [sig, n] : e.profile.counts) {
      if (remaining == 0) break;
      if (sig.front() == c) continue;
      long take = std::min(remaining, n);
      d.removals[sig] += take;
      remaining -= take;
    }
    if (remaining > 0) continue;
    if (need > 0) d.additions[{c}] += need;
    candidates.push_back(std::move(d));
  }

  // Winner elimination: move ballots from an eventual winner's primaries to
  // the candidate the count eliminated that round.
  for (const auto& rec : counted.rounds) {
    if (rec.action != Action::Eliminated) continue;
    const int cj = rec.candidate;
    const Rat vj = rec.tallies.at(cj);
    for (int w : counted.elected) {
      auto it = rec.tallies.find(w);
      if (it == rec.tallies.end()) continue;
      for (long moved : {rat_ceil((it->second - vj) / 2),
                         rat_ceil(it->second - vj)}) {
        if (moved != ub || moved > fp[w]) continue;
        ManipulationDelta d;
        long remaining = moved;
        for (const auto& [sig, n] : e.profile.counts) {
          if (remaining == 0) break;
          if (sig.front() != w) continue;
          long take = std::min(remaining, n);
          d.removals[sig] += take;
          remaining -= take;
        }
        if (remaining > 0) continue;
        if (moved > 0) d.additions[{cj}] += moved;
        candidates.push_back(std::move(d));
      }
    }
  }

  for (auto& d : candidates) {
    VerifyOutcome v = verify_manipulation(e, d, tie);
    if (v.outcome_changed && v.certified_ub == ub) return d;
  }
  return std::nullopt;
}

}  // namespace margin_detail

// Branch-and-bound over candidate orders: seed with every single-step
// order, expand the smallest lower bound first, prune against the running
// upper bound.  In exact mode verified complete orders lower the upper
// bound; in relaxed modes complete-order values only tighten the pruning
// threshold and the result is reported as a lower bound.
inline MarginResult margin_stv(const Election& e, const MarginConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
  };

  CountResult counted = run_count(e, cfg.tie);
  const std::set<int> E = counted.elected;
  const int n = e.num_candidates();

  MarginResult res;
  res.original_winners = E;
  res.weub = winner_elimination_ub(e, counted);
  res.simple_ub = simple_stv_ub(e, E);
  res.initial_upper_bound = std::min(res.weub, res.simple_ub);
  res.conditional = cfg.fix_rounds > 0;

  long UB = res.initial_upper_bound;          // certified upper bound
  long threshold = res.initial_upper_bound;   // pruning threshold
  res.ub_history.push_back({elapsed(), UB});
  res.certificate =
      margin_detail::initial_certificate(e, counted, UB, cfg.tie);

  margin_detail::FixedPrefix fp =
      margin_detail::fixed_prefix(counted, cfg.fix_rounds);

  ModelOptions mopt;
  mopt.mode = cfg.mode;
  mopt.piecewise_k = cfg.piecewise_k;
  mopt.group_eliminations = cfg.group_eliminations;

  std::vector<FrontierEntry> frontier;
  std::vector<FrontierEntry> blocked;
  bool all_optimal = true;
  std::mutex mu;

  // Evaluate one candidate child order; returns its frontier entry (or
  // nothing when pruned/invalid).  Thread-safe under `mu` for shared state.
  auto evaluate = [&](CandidateOrder child) -> std::optional<FrontierEntry> {
    bool complete = margin_detail::complete_order(e, child);
    if (!is_valid_order(child, E, e.seats, n)) return std::nullopt;

    EvaluationRecord rec;
    rec.order = child;
    rec.complete = complete;

    long rule = 0;
    if (cfg.use_rule_lb) {
      rule = prefix_lower_bound(
                 e, make_round_plan(e, child, cfg.group_eliminations))
                 .lb;
      rec.rule_lb = rule;
    }
    long local_threshold;
    {
      std::lock_guard<std::mutex> g(mu);
      local_threshold = threshold;
    }
    if (rule >= local_threshold) {
      std::lock_guard<std::mutex> g(mu);
      res.evaluations.push_back(rec);
      return std::nullopt;  // rule bound already prunes this subtree
    }

    milp::SolveLimits lim;
    lim.stall_seconds = cfg.solve_stall_seconds;
    lim.wall_seconds = cfg.solve_wall_seconds;
    lim.objective_cutoff = (double)local_threshold;
    ModelOptions opt = mopt;
    opt.upper_bound = local_threshold;
    DistanceEvaluation ev = evaluate_distance(e, child, opt, lim);

    std::lock_guard<std::mutex> g(mu);
    ++res.models_solved;
    res.nodes += ev.nodes;
    rec.solved = true;
    rec.status = ev.status;

    long model_lb;
    if (ev.status == milp::SolveStatus::Infeasible) {
      model_lb = ev.bound == std::numeric_limits<double>::infinity()
                     ? std::numeric_limits<long>::max() / 4
                     : (long)std::ceil(ev.bound - 1e-6);
      model_lb = std::max(model_lb, local_threshold);
    } else {
      model_lb = (long)std::ceil(ev.bound - 1e-6);
    }
    rec.assigned_lb = std::max(rule, model_lb);
    res.evaluations.push_back(rec);

    long lb = rec.assigned_lb;
    if (complete) {
      if (ev.status == milp::SolveStatus::Optimal && ev.value) {
        if (*ev.value < threshold) threshold = *ev.value;
        if (cfg.mode == ModelMode::Exact && ev.verified && ev.delta &&
            *ev.value < UB) {
          UB = *ev.value;
          res.certificate = ev.delta;
          res.ub_history.push_back({elapsed(), UB});
        }
        return std::nullopt;  // fully evaluated
      }
      if (ev.status == milp::SolveStatus::StalledWithBound ||
          ev.status == milp::SolveStatus::TimeLimit) {
        // re-enters as a blocked entry carrying its proven bound
        all_optimal = false;
        if (lb < threshold) return FrontierEntry{child, lb, true};
        return std::nullopt;
      }
      return std::nullopt;  // infeasible
    }
    if (ev.status == milp::SolveStatus::StalledWithBound ||
        ev.status == milp::SolveStatus::TimeLimit)
      all_optimal = false;
    if (lb < threshold) return FrontierEntry{child, lb, false};
    return std::nullopt;
  };

  auto children_of = [&](const CandidateOrder& parent) {
    std::vector<CandidateOrder> out;
    for (int c = 0; c < n; ++c) {
      if (parent.mentions(c)) continue;
      for (Action a : {Action::Elected, Action::Eliminated}) {
        Step next{c, a};
        if (!margin_detail::prefix_allows(fp, parent.size(), parent, next))
          continue;
        out.push_back(parent.extended(next));
      }
    }
    return out;
  };

  // Seeding: size-one orders, or the fixed prefix's forced first step.
  {
    std::vector<CandidateOrder> seeds = children_of(CandidateOrder{});
    for (auto& s : seeds) {
      auto entry = evaluate(std::move(s));
      if (entry) frontier.push_back(std::move(*entry));
    }
  }

  auto pop_best = [&]() -> std::optional<FrontierEntry> {
    // smallest lb; ties prefer shorter orders then lexicographic steps
    int best = -1;
    for (int i = 0; i < (int)frontier.size(); ++i) {
      if (frontier[i].blocked) continue;
      if (best < 0) {
        best = i;
        continue;
      }
      const FrontierEntry& a = frontier[i];
      const FrontierEntry& b = frontier[best];
      if (a.lb != b.lb ? a.lb < b.lb
                       : (a.order.size() != b.order.size()
                              ? a.order.size() < b.order.size()
                              : a.order.steps < b.order.steps))
        best = i;
    }
    if (best < 0) return std::nullopt;
    FrontierEntry out = std::move(frontier[best]);
    frontier.erase(frontier.begin() + best);
    return out;
  };

  bool hit_limit = false;
  while (true) {
    if (elapsed() > cfg.wall_seconds) {
      hit_limit = true;
      break;
    }
    // prune (threshold may have moved), then pop up to N_F entries
    std::vector<FrontierEntry> keep;
    for (auto& f : frontier) {
      if (f.lb >= threshold) continue;
      if (f.blocked) {
        blocked.push_back(std::move(f));
      } else {
        keep.push_back(std::move(f));
      }
    }
    frontier = std::move(keep);

    std::vector<FrontierEntry> batch;
    for (int i = 0; i < std::max(1, cfg.frontier_width); ++i) {
      auto nxt = pop_best();
      if (!nxt) break;
      batch.push_back(std::move(*nxt));
    }
    if (batch.empty()) break;

    std::vector<CandidateOrder> work;
    for (const auto& entry : batch) {
      ++res.orders_expanded;
      for (auto& child : children_of(entry.order)) work.push_back(child);
    }

    std::vector<std::optional<FrontierEntry>> results(work.size());
    if (cfg.frontier_width > 1 && work.size() > 1) {
      std::atomic<size_t> next{0};
      auto worker = [&] {
        while (true) {
          size_t i = next.fetch_add(1);
          if (i >= work.size()) break;
          results[i] = evaluate(work[i]);
        }
      };
      unsigned nt = std::min<size_t>(work.size(),
                                     std::max(2, cfg.frontier_width));
      std::vector<std::thread> pool;
      for (unsigned t = 0; t < nt; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    } else {
      for (size_t i = 0; i < work.size(); ++i) results[i] = evaluate(work[i]);
    }
    for (auto& r : results)
      if (r) frontier.push_back(std::move(*r));
  }

  // L = min over the threshold and everything never closed out
  long L = threshold;
  for (const auto& f : frontier) {
    L = std::min(L, f.lb);
    if (!f.blocked) hit_limit = true;  // only a wall limit leaves these
  }
  for (const auto& f : blocked) L = std::min(L, f.lb);
  if (hit_limit) all_optimal = false;

  res.lower_bound = std::max(0L, L);
  res.upper_bound = UB;
  res.exact = cfg.mode == ModelMode::Exact && !res.conditional &&
              all_optimal && res.lower_bound == res.upper_bound &&
              res.certificate.has_value();
  // a zero-threshold start means everything prunes immediately
  if (res.initial_upper_bound == 0) {
    res.lower_bound = 0;
    res.upper_bound = 0;
  }
  res.wall_seconds = elapsed();
  return res;
}

}  // namespace stv

#endif  // STV_MARGIN_HPP
