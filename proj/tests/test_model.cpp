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

#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "stv/lp_format.hpp"
#include "stv/model.hpp"
#include "stv/oracle.hpp"

using namespace stv;

static milp::SolveLimits loose() {
  milp::SolveLimits l;
  l.stall_seconds = 120;
  l.wall_seconds = 120;
  return l;
}

static long exact_value(const Election& e, const CandidateOrder& pi) {
  ModelOptions opt;
  opt.mode = ModelMode::Exact;
  DistanceEvaluation ev = evaluate_distance(e, pi, opt, loose());
  REQUIRE(ev.status == milp::SolveStatus::Optimal);
  REQUIRE(ev.value);
  return *ev.value;
}

TEST_CASE("equivalence classes split on divergent routes") {
  Election e = fixtures::table1();
  RoundPlan plan =
      make_round_plan(e, order_of({{0, 1}, {1, 0}, {2, 0}, {3, 1}}));
  EquivalenceClasses eq = equivalence_classes(plan, e.profile);
  // [c2,c3] and [c2,c3,c4] diverge when c3 is eliminated
  int a = eq.class_of(plan, {1, 2});
  int b = eq.class_of(plan, {1, 2, 3});
  CHECK(a != b);
  // [c1] and [c1,c3] differ (exhaust vs transfer at c1's election)
  CHECK(eq.class_of(plan, {0}) != eq.class_of(plan, {0, 2}));
  // route-irrelevant later preferences collapse
  CHECK(eq.class_of(plan, {3, 0, 1}) == eq.class_of(plan, {3}));
}

TEST_CASE("size one orders group by first preference behaviour") {
  Election e = fixtures::table1();
  RoundPlan plan = make_round_plan(e, order_of({{1, 0}}));
  EquivalenceClasses eq = equivalence_classes(plan, e.profile);
  // non-event first preferences collapse entirely
  CHECK(eq.class_of(plan, {0, 2}) == eq.class_of(plan, {0, 3}));
  CHECK(eq.class_of(plan, {0}) == eq.class_of(plan, {0, 1}));
  // the eliminated candidate's pile splits by its round-1 destination
  CHECK(eq.class_of(plan, {1, 2}) != eq.class_of(plan, {1, 3}));
  CHECK(eq.class_of(plan, {1, 2}) != eq.class_of(plan, {1}));
}

TEST_CASE("group eliminations structural rewrite") {
  CandidateOrder pi = order_of({{0, 1}, {2, 0}, {1, 0}, {3, 1}});
  auto rounds = group_eliminations(pi);
  REQUIRE(rounds.size() == 3);
  CHECK(rounds[0].kind == Action::Elected);
  CHECK(rounds[1].members == std::vector<int>{2, 1});
  CHECK(rounds[2].kind == Action::Elected);

  CandidateOrder flat = order_of({{0, 1}, {1, 1}, {2, 0}});
  CHECK(group_eliminations(flat).size() == 3);

  // long synthetic order: elect, 24 eliminations, elect -> 3 blocks
  CandidateOrder act;
  act.steps.push_back({0, Action::Elected});
  for (int c = 1; c <= 24; ++c) act.steps.push_back({c, Action::Eliminated});
  act.steps.push_back({25, Action::Elected});
  CHECK(group_eliminations(act).size() == 3);
}

TEST_CASE("distance values for size-one orders on table 1") {
  Election e = fixtures::table1();
  CHECK(exact_value(e, order_of({{0, 0}})) == 11);
  CHECK(exact_value(e, order_of({{0, 1}})) == 0);
  CHECK(exact_value(e, order_of({{1, 0}})) == 6);
  CHECK(exact_value(e, order_of({{1, 1}})) == 11);
  CHECK(exact_value(e, order_of({{2, 0}})) == 6);
  CHECK(exact_value(e, order_of({{2, 1}})) == 12);
  CHECK(exact_value(e, order_of({{3, 0}})) == 8);
  CHECK(exact_value(e, order_of({{3, 1}})) == 6);
}

TEST_CASE("distance values for deeper orders on table 1") {
  Election e = fixtures::table1();
  CHECK(exact_value(e, order_of({{0, 1}, {1, 0}})) == 0);
  CHECK(exact_value(e, order_of({{0, 1}, {2, 0}})) == 2);
  CHECK(exact_value(e, order_of({{0, 1}, {3, 0}})) == 3);
  // published prose says 7 and 12 for the next two; exhaustive checking
  // puts them at 6 and 11 (see the oracle suite)
  CHECK(exact_value(e, order_of({{0, 1}, {3, 1}})) == 6);
  CHECK(exact_value(e, order_of({{0, 1}, {1, 1}})) == 11);
  // complete orders: published prose says 3 for the first; true value is 5
  CHECK(exact_value(e, order_of({{0, 1}, {1, 0}, {2, 0}, {3, 1}})) == 5);
  CHECK(exact_value(e, order_of({{0, 1}, {1, 0}, {3, 1}, {2, 0}})) == 6);
}

TEST_CASE("exact incumbents verify by simulation") {
  Election e = fixtures::table1();
  ModelOptions opt;
  opt.mode = ModelMode::Exact;
  for (const CandidateOrder& pi :
       {order_of({{0, 1}, {2, 0}}), order_of({{0, 1}, {1, 0}, {2, 0}, {3, 1}}),
        order_of({{3, 1}})}) {
    DistanceEvaluation ev = evaluate_distance(e, pi, opt, loose());
    REQUIRE(ev.status == milp::SolveStatus::Optimal);
    CHECK(ev.verified);
    REQUIRE(ev.delta);
    CHECK(ev.delta->size() == *ev.value);
  }
}

TEST_CASE("mccormick mode lower-bounds the exact value") {
  Election e = fixtures::table1();
  ModelOptions mc;
  mc.mode = ModelMode::McCormick;
  DistanceEvaluation ev =
      evaluate_distance(e, order_of({{3, 1}}), mc, loose());
  REQUIRE(ev.status == milp::SolveStatus::Optimal);
  CHECK(*ev.value <= 6);
}

TEST_CASE("relaxation ordering across modes") {
  std::vector<Election> elections{fixtures::table1(), fixtures::table2()};
  std::vector<CandidateOrder> orders{
      order_of({{3, 1}}),
      order_of({{0, 1}, {2, 0}}),
      order_of({{0, 1}, {1, 0}, {2, 0}, {3, 1}}),
      order_of({{1, 1}}),
  };
  for (const auto& e : elections) {
    for (const auto& pi : orders) {
      auto value_at = [&](ModelMode mode, int k) {
        ModelOptions o;
        o.mode = mode;
        o.piecewise_k = k;
        DistanceEvaluation ev = evaluate_distance(e, pi, o, loose());
        REQUIRE(ev.status == milp::SolveStatus::Optimal);
        return *ev.value;
      };
      long mc = value_at(ModelMode::McCormick, 1);
      long p5 = value_at(ModelMode::Piecewise, 5);
      long p10 = value_at(ModelMode::Piecewise, 10);
      long ex = value_at(ModelMode::Exact, 1);
      CHECK(mc <= p5);
      CHECK(p5 <= p10);
      CHECK(p10 <= ex);
    }
  }
}

TEST_CASE("class and raw-signature models agree") {
  std::mt19937 rng(61);
  int done = 0;
  for (int it = 0; it < 24; ++it) {
    Election e = fixtures::random_election(rng, 3, 1, 12);
    CandidateOrder pi;
    // random 2-step prefix
    int a = (int)(rng() % 3), b = (a + 1 + (int)(rng() % 2)) % 3;
    pi.steps.push_back({a, Action::Eliminated});
    pi.steps.push_back({b, rng() % 2 ? Action::Elected : Action::Eliminated});
    ModelOptions cls;
    cls.mode = ModelMode::Exact;
    ModelOptions raw = cls;
    raw.raw_signatures = true;
    DistanceEvaluation ec = evaluate_distance(e, pi, cls, loose());
    DistanceEvaluation er = evaluate_distance(e, pi, raw, loose());
    if (ec.status == milp::SolveStatus::Optimal ||
        er.status == milp::SolveStatus::Optimal) {
      REQUIRE(ec.status == er.status);
      CHECK(*ec.value == *er.value);
      ++done;
    } else {
      CHECK(ec.status == er.status);
    }
  }
  CHECK(done >= 10);
}

TEST_CASE("prefix property per mode") {
  std::mt19937 rng(62);
  for (int it = 0; it < 10; ++it) {
    Election e = fixtures::random_election(rng, 3, 1, 12);
    for (ModelMode mode :
         {ModelMode::Exact, ModelMode::McCormick, ModelMode::Piecewise}) {
      ModelOptions o;
      o.mode = mode;
      o.piecewise_k = 3;
      CandidateOrder prefix = order_of({{(int)(rng() % 3), 0}});
      DistanceEvaluation base = evaluate_distance(e, prefix, o, loose());
      if (base.status != milp::SolveStatus::Optimal) continue;
      for (int c = 0; c < 3; ++c) {
        if (prefix.mentions(c)) continue;
        for (int act = 0; act < 2; ++act) {
          CandidateOrder ext = prefix.extended(
              {c, act ? Action::Elected : Action::Eliminated});
          try {
            make_round_plan(e, ext);
          } catch (const ValidationError&) {
            continue;
          }
          DistanceEvaluation ev = evaluate_distance(e, ext, o, loose());
          if (ev.status == milp::SolveStatus::Optimal)
            CHECK(*base.value <= *ev.value);
          else if (ev.status == milp::SolveStatus::Infeasible)
            CHECK(true);  // infinite extension cost
        }
      }
    }
  }
}

TEST_CASE("objective symmetry") {
  Election e = fixtures::table1();
  ModelOptions o;
  o.mode = ModelMode::Exact;
  DistanceEvaluation ev =
      evaluate_distance(e, order_of({{0, 1}, {2, 0}}), o, loose());
  REQUIRE(ev.delta);
  long rem = 0, add = 0;
  for (auto& [s, n] : ev.delta->removals) rem += n;
  for (auto& [s, n] : ev.delta->additions) add += n;
  CHECK(rem == add);
}

TEST_CASE("model distance agrees with oracle on tiny elections") {
  std::mt19937 rng(63);
  OracleConfig cfg;
  cfg.k_max = 3;
  int checked = 0;
  for (int it = 0; it < 14; ++it) {
    Election e = fixtures::random_election(rng, 3, 1, 12);
    int perm[3] = {0, 1, 2};
    do {
      for (int mask = 0; mask < 4; ++mask) {
        CandidateOrder pi;
        int elected = 0;
        for (int i = 0; i < 3 && elected < 1; ++i) {
          bool el = mask & (1 << i);
          pi.steps.push_back(
              {perm[i], el ? Action::Elected : Action::Eliminated});
          if (el) ++elected;
        }
        if (elected != 1) continue;
        OracleOutcome d = brute_force_distance_to(e, pi, cfg);
        if (d.exceeded) continue;
        ModelOptions o;
        o.mode = ModelMode::Exact;
        DistanceEvaluation ev = evaluate_distance(e, pi, o, loose());
        REQUIRE(ev.status == milp::SolveStatus::Optimal);
        CHECK(*ev.value == d.value);
        ++checked;
      }
    } while (std::next_permutation(perm, perm + 3));
  }
  CHECK(checked > 40);
}

TEST_CASE("grouped elimination model relaxes the order") {
  Election e = fixtures::table1();
  CandidateOrder pi = order_of({{0, 1}, {1, 0}, {2, 0}, {3, 1}});
  ModelOptions plain;
  plain.mode = ModelMode::Exact;
  ModelOptions grouped = plain;
  grouped.group_eliminations = true;
  DistanceEvaluation a = evaluate_distance(e, pi, plain, loose());
  DistanceEvaluation b = evaluate_distance(e, pi, grouped, loose());
  REQUIRE(a.status == milp::SolveStatus::Optimal);
  REQUIRE(b.status == milp::SolveStatus::Optimal);
  CHECK(*b.value <= *a.value);
}

TEST_CASE("distance model exports and reimports") {
  Election e = fixtures::table1();
  ModelOptions o;
  o.mode = ModelMode::McCormick;
  DistanceModel dm = build_distance_model(e, order_of({{0, 1}}), o);
  std::string text = milp::export_lp(dm.lp);
  milp::LinearModel back = milp::parse_lp(text);
  CHECK(milp::export_lp(back) == text);
  milp::SolveLimits lim;
  milp::SolveResult r1 = milp::solve(dm.lp, lim);
  milp::SolveResult r2 = milp::solve(back, lim);
  REQUIRE(r1.status == milp::SolveStatus::Optimal);
  REQUIRE(r2.status == milp::SolveStatus::Optimal);
  CHECK(*r1.objective == *r2.objective);
}

TEST_CASE("order errors") {
  Election e = fixtures::table1();
  CHECK_THROWS_AS(
      build_distance_model(e, order_of({{0, 1}, {1, 1}, {2, 1}}), {}),
      ValidationError);
  CandidateOrder unknown;
  unknown.steps.push_back({9, Action::Elected});
  CHECK_THROWS_AS(build_distance_model(e, unknown, {}), ValidationError);
}
