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
#include <random>

#include "stv/lp_format.hpp"
#include "stv/milp.hpp"

using namespace stv::milp;

static SolveLimits loose() {
  SolveLimits l;
  l.stall_seconds = 60;
  l.wall_seconds = 60;
  return l;
}

TEST_CASE("lp basics") {
  LinearModel m;
  int x = m.add_var("x", 0, 10);
  int y = m.add_var("y", 0, 10);
  m.objective = {{x, 1}, {y, 2}};
  m.add_con("r1", {{x, 1}, {y, 1}}, Sense::GE, 4);
  SolveResult r = solve(m, loose());
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(*r.objective == Catch::Approx(4.0));
  CHECK(r.assignment[x] == Catch::Approx(4.0));
}

TEST_CASE("integer program") {
  LinearModel m;
  int p1 = m.add_var("p1", 0, 100, VarKind::Integer);
  int p2 = m.add_var("p2", 0, 100, VarKind::Integer);
  m.objective = {{p1, 1}, {p2, 1}};
  m.add_con("r", {{p1, 1}, {p2, 1}}, Sense::GE, 3);
  SolveResult r = solve(m, loose());
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(*r.objective == Catch::Approx(3.0));
}

TEST_CASE("infeasible") {
  LinearModel m;
  int x = m.add_var("x", 0, 10);
  m.objective = {{x, 1}};
  m.add_con("a", {{x, 1}}, Sense::GE, 2);
  m.add_con("b", {{x, 1}}, Sense::LE, 1);
  SolveResult r = solve(m, loose());
  CHECK(r.status == SolveStatus::Infeasible);
  CHECK(r.bound == std::numeric_limits<double>::infinity());
}

TEST_CASE("fractional lp vs milp bound") {
  LinearModel m;
  int a = m.add_var("a", 0, 5, VarKind::Integer);
  int b = m.add_var("b", 0, 5, VarKind::Integer);
  m.objective = {{a, 1}, {b, 1}};
  m.add_con("r", {{a, 2}, {b, 2}}, Sense::GE, 3);
  SolveResult r = solve(m, loose());
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(*r.objective == Catch::Approx(2.0));
  CHECK(r.root_bound == Catch::Approx(1.5));
  CHECK(r.root_bound <= *r.objective);
}

TEST_CASE("objective cutoff prunes") {
  LinearModel m;
  int a = m.add_var("a", 0, 5, VarKind::Integer);
  m.objective = {{a, 1}};
  m.add_con("r", {{a, 1}}, Sense::GE, 3);
  SolveLimits lim = loose();
  lim.objective_cutoff = 3;  // optimum is exactly 3 -> nothing below cutoff
  SolveResult r = solve(m, lim);
  CHECK(r.status == SolveStatus::Infeasible);
  CHECK(r.bound == Catch::Approx(3.0));
}

TEST_CASE("equality and negative coefficients") {
  LinearModel m;
  int x = m.add_var("x", -10, 10);
  int y = m.add_var("y", -10, 10);
  m.objective = {{x, 1}};
  m.add_con("e", {{x, 1}, {y, -1}}, Sense::EQ, 2);
  m.add_con("g", {{y, 1}}, Sense::GE, 1);
  SolveResult r = solve(m, loose());
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(*r.objective == Catch::Approx(3.0));
}

TEST_CASE("deterministic across runs") {
  std::mt19937 rng(7);
  for (int it = 0; it < 20; ++it) {
    LinearModel m;
    std::uniform_int_distribution<int> nd(2, 6), cd(1, 5);
    int n = nd(rng);
    for (int i = 0; i < n; ++i)
      m.add_var("v" + std::to_string(i), 0, 7,
                i % 2 ? VarKind::Integer : VarKind::Continuous);
    for (int i = 0; i < n; ++i) m.objective.push_back({i, (double)cd(rng)});
    for (int r = 0; r < n; ++r) {
      std::vector<std::pair<int, double>> terms;
      for (int i = 0; i < n; ++i)
        terms.push_back({i, (double)(cd(rng) - 2)});
      m.add_con("c" + std::to_string(r), terms, Sense::GE, (double)(cd(rng)));
    }
    SolveResult r1 = solve(m, loose());
    SolveResult r2 = solve(m, loose());
    CHECK(r1.status == r2.status);
    if (r1.status == SolveStatus::Optimal) {
      CHECK(*r1.objective == *r2.objective);
      CHECK(r1.assignment == r2.assignment);
      CHECK(r1.nodes == r2.nodes);
    }
  }
}

TEST_CASE("mccormick envelope basics") {
  // x fixed -> envelope forces z = a*y
  LinearModel m;
  int x = m.add_var("x", 0.5, 0.5);
  int y = m.add_var("y", 0, 10);
  int z = m.add_var("z", -100, 100);
  append_mccormick(m, "t", x, y, z);
  m.add_con("fix_y", {{y, 1}}, Sense::EQ, 6);
  m.objective = {{z, 1}};
  SolveResult lo = solve(m, loose());
  REQUIRE(lo.status == SolveStatus::Optimal);
  CHECK(*lo.objective == Catch::Approx(3.0));
  m.objective = {{z, -1}};
  SolveResult hi = solve(m, loose());
  CHECK(*hi.objective == Catch::Approx(-3.0));  // z <= 3 as well
}

TEST_CASE("mccormick envelope interval at interior point") {
  // x in [0,1], y in [0,10], at (0.5, 5): feasible z spans [0, 5]
  for (double obj_sign : {1.0, -1.0}) {
    LinearModel m;
    int x = m.add_var("x", 0, 1);
    int y = m.add_var("y", 0, 10);
    int z = m.add_var("z", -100, 100);
    append_mccormick(m, "t", x, y, z);
    m.add_con("fx", {{x, 1}}, Sense::EQ, 0.5);
    m.add_con("fy", {{y, 1}}, Sense::EQ, 5);
    m.objective = {{z, obj_sign}};
    SolveResult r = solve(m, loose());
    REQUIRE(r.status == SolveStatus::Optimal);
    CHECK(*r.objective == Catch::Approx(obj_sign > 0 ? 0.0 : -5.0));
  }
}

TEST_CASE("piecewise K=1 equals mccormick") {
  for (double xp : {0.0, 0.3, 0.7, 1.0}) {
    for (double yp : {0.0, 4.0, 10.0}) {
      auto build = [&](bool mc) {
        LinearModel m;
        int x = m.add_var("x", 0, 1);
        int y = m.add_var("y", 0, 10);
        int z = m.add_var("z", -100, 100);
        if (mc) {
          append_mccormick(m, "t", x, y, z);
        } else {
          PiecewiseX pw = make_piecewise_x(m, x, {0, 1}, "t");
          append_piecewise_product(m, pw, x, y, z, "t");
        }
        m.add_con("fx", {{x, 1}}, Sense::EQ, xp);
        m.add_con("fy", {{y, 1}}, Sense::EQ, yp);
        m.objective = {{z, 1}};
        SolveResult lo = solve(m, loose());
        m.objective = {{z, -1}};
        SolveResult hi = solve(m, loose());
        return std::pair(*lo.objective, -*hi.objective);
      };
      auto [mcl, mch] = build(true);
      auto [pwl, pwh] = build(false);
      CHECK(mcl == Catch::Approx(pwl).margin(1e-7));
      CHECK(mch == Catch::Approx(pwh).margin(1e-7));
    }
  }
}

TEST_CASE("piecewise K=2 tightens the interval") {
  auto feasible_z = [&](int segments) {
    LinearModel m;
    int x = m.add_var("x", 0, 1);
    int y = m.add_var("y", 0, 10);
    int z = m.add_var("z", -100, 100);
    PiecewiseX pw = make_piecewise_x(m, x, uniform_grid(0, 1, segments), "t");
    append_piecewise_product(m, pw, x, y, z, "t");
    m.add_con("fx", {{x, 1}}, Sense::EQ, 0.5);
    m.add_con("fy", {{y, 1}}, Sense::EQ, 5);
    m.objective = {{z, 1}};
    SolveResult lo = solve(m, loose());
    m.objective = {{z, -1}};
    SolveResult hi = solve(m, loose());
    return std::pair(*lo.objective, -*hi.objective);
  };
  auto [l1, h1] = feasible_z(1);
  auto [l2, h2] = feasible_z(2);
  CHECK(l1 <= l2 + 1e-9);
  CHECK(h2 <= h1 + 1e-9);
  CHECK(h2 - l2 < h1 - l1 - 1e-6);  // strictly tighter at the midpoint

  // exactly one segment indicator active
  LinearModel m;
  int x = m.add_var("x", 0, 1);
  int y = m.add_var("y", 0, 10);
  int z = m.add_var("z", -100, 100);
  PiecewiseX pw = make_piecewise_x(m, x, uniform_grid(0, 1, 2), "t");
  append_piecewise_product(m, pw, x, y, z, "t");
  m.add_con("fx", {{x, 1}}, Sense::EQ, 0.25);
  m.objective = {{z, 1}};
  SolveResult r = solve(m, loose());
  REQUIRE(r.status == SolveStatus::Optimal);
  double active = 0;
  for (int l : pw.lambda) active += r.assignment[l];
  CHECK(active == Catch::Approx(1.0));
}

TEST_CASE("piecewise rejects non monotone breakpoints") {
  LinearModel m;
  int x = m.add_var("x", 0, 1);
  CHECK_THROWS_AS(make_piecewise_x(m, x, {0.0, 0.6, 0.5, 1.0}, "t"),
                  std::invalid_argument);
}

TEST_CASE("bilinear exact solve via refinement") {
  // p >= 10 z with z = x*y pinned to at least 0.2 forces p = 2.
  LinearModel m;
  int x = m.add_var("x", 0, 1);
  int y = m.add_var("y", 0, 1);
  int z = m.add_var("z", 0, 1);
  int p = m.add_var("p", 0, 100, VarKind::Integer);
  m.bilinear.push_back({x, y, z});
  m.objective = {{p, 1}};
  m.add_con("pz", {{p, 1}, {z, -10}}, Sense::GE, 0);
  m.add_con("xy", {{x, 1}, {y, 1}}, Sense::GE, 1.2);
  m.add_con("zmin", {{z, 1}}, Sense::GE, 0.2);
  SolveResult r = solve(m, loose());
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(*r.objective == Catch::Approx(2.0));
}

TEST_CASE("lp export round trip") {
  LinearModel m;
  int x = m.add_var("x", 0, 5, VarKind::Integer);
  int y = m.add_var("y", 0.5, 2.5);
  int q = m.add_var("q", 0, 1, VarKind::Binary);
  int z = m.add_var("z", 0, 10);
  m.objective = {{x, 1}, {y, 3}};
  m.add_con("c0", {{x, 1}, {y, -2}}, Sense::LE, 4);
  m.add_con("c1", {{x, 1}, {q, 5}}, Sense::GE, 1);
  m.add_con("c2", {{y, 1}}, Sense::EQ, 1.5);
  m.bilinear.push_back({y, z, x});

  std::string text = export_lp(m);
  CHECK(export_lp(m) == text);  // deterministic

  LinearModel back = parse_lp(text);
  REQUIRE(back.vars.size() == m.vars.size());
  for (size_t i = 0; i < m.vars.size(); ++i) {
    CHECK(back.vars[i].name == m.vars[i].name);
    CHECK(back.vars[i].lower == m.vars[i].lower);
    CHECK(back.vars[i].upper == m.vars[i].upper);
    CHECK(back.vars[i].kind == m.vars[i].kind);
  }
  REQUIRE(back.cons.size() == m.cons.size());
  for (size_t i = 0; i < m.cons.size(); ++i) {
    CHECK(back.cons[i].terms == m.cons[i].terms);
    CHECK(back.cons[i].sense == m.cons[i].sense);
    CHECK(back.cons[i].rhs == m.cons[i].rhs);
  }
  CHECK(back.objective == m.objective);
  REQUIRE(back.bilinear.size() == 1);
  CHECK(back.bilinear[0].x == y);
  CHECK(back.bilinear[0].product == x);

  // reparse emits identical bytes
  CHECK(export_lp(back) == text);
}

TEST_CASE("empty model export") {
  LinearModel m;
  std::string text = export_lp(m);
  CHECK(text.find("Minimize") != std::string::npos);
  CHECK(text.find("End") != std::string::npos);
  LinearModel back = parse_lp(text);
  CHECK(back.cons.empty());
}

TEST_CASE("external solver escape hatch") {
  LinearModel m;
  int x = m.add_var("x", 0, 9);
  m.objective = {{x, 1}};
  m.add_con("c0", {{x, 1}}, Sense::GE, 1);

  std::string script = "/tmp/stvm_fake_solver.sh";
  {
    std::ofstream f(script);
    f << "#!/bin/sh\necho x 1\n";
  }
  REQUIRE(std::system(("chmod +x " + script).c_str()) == 0);
  auto sol = run_external_solver(m, script);
  REQUIRE(sol);
  CHECK((*sol)[x] == Catch::Approx(1.0));
  auto bad = run_external_solver(m, "/bin/false");
  CHECK(!bad);
}

TEST_CASE("random milp agrees with brute force") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> cd(-3, 3), rd(-4, 8);
  for (int it = 0; it < 30; ++it) {
    LinearModel m;
    const int n = 4;
    for (int i = 0; i < n; ++i)
      m.add_var("v" + std::to_string(i), 0, 3, VarKind::Integer);
    for (int i = 0; i < n; ++i)
      m.objective.push_back({i, (double)(1 + std::abs(cd(rng)))});
    std::vector<std::vector<int>> rows;
    for (int r = 0; r < 4; ++r) {
      std::vector<std::pair<int, double>> terms;
      std::vector<int> row;
      for (int i = 0; i < n; ++i) {
        int c = cd(rng);
        row.push_back(c);
        terms.push_back({i, (double)c});
      }
      int rhs = rd(rng);
      row.push_back(rhs);
      rows.push_back(row);
      m.add_con("c" + std::to_string(r), terms, Sense::GE, (double)rhs);
    }
    SolveResult r = solve(m, loose());

    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 4; ++c)
          for (int d = 0; d < 4; ++d) {
            int v[4] = {a, b, c, d};
            bool ok = true;
            for (auto& row : rows) {
              int lhs = 0;
              for (int i = 0; i < 4; ++i) lhs += row[i] * v[i];
              if (lhs < row[4]) ok = false;
            }
            if (!ok) continue;
            double obj = 0;
            for (size_t i = 0; i < m.objective.size(); ++i)
              obj += m.objective[i].second * v[i];
            best = std::min(best, obj);
          }
    if (best == std::numeric_limits<double>::infinity()) {
      CHECK(r.status == SolveStatus::Infeasible);
    } else {
      REQUIRE(r.status == SolveStatus::Optimal);
      CHECK(*r.objective == Catch::Approx(best));
    }
  }
}
