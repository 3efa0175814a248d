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

#ifndef STV_MILP_HPP
#define STV_MILP_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "stv/milp_simplex.hpp"
#include "stv/rational.hpp"

namespace stv::milp {

// product = x * y, both continuous.  Kept symbolic; solve() relaxes them
// piecewise over the x domain and refines until products are exact.
struct BilinearTerm {
  int x = -1;
  int y = -1;
  int product = -1;
};

struct LinearModel {
  std::vector<Variable> vars;
  std::vector<Constraint> cons;
  std::vector<std::pair<int, double>> objective;  // minimise
  std::vector<BilinearTerm> bilinear;

  int add_var(const std::string& name, double lo, double hi,
              VarKind kind = VarKind::Continuous) {
    if (!(lo <= hi)) throw std::invalid_argument("bad bounds for " + name);
    vars.push_back({name, lo, hi, kind});
    return (int)vars.size() - 1;
  }
  void add_con(const std::string& name,
               std::vector<std::pair<int, double>> terms, Sense s,
               double rhs) {
    cons.push_back({name, std::move(terms), s, rhs});
  }
  void check() const {
    for (const auto& c : cons) {
      for (auto [v, coef] : c.terms) {
        if (v < 0 || v >= (int)vars.size())
          throw std::invalid_argument("constraint references unknown var");
        if (!std::isfinite(coef))
          throw std::invalid_argument("non-finite coefficient");
      }
      if (!std::isfinite(c.rhs)) throw std::invalid_argument("bad rhs");
    }
    for (auto [v, coef] : objective) {
      (void)coef;
      if (v < 0 || v >= (int)vars.size())
        throw std::invalid_argument("objective references unknown var");
    }
    for (const auto& bt : bilinear)
      if (bt.x < 0 || bt.y < 0 || bt.product < 0 ||
          bt.x >= (int)vars.size() || bt.y >= (int)vars.size() ||
          bt.product >= (int)vars.size())
        throw std::invalid_argument("bilinear term references unknown var");
  }
};

enum class SolveStatus { Optimal, Infeasible, StalledWithBound, TimeLimit };

inline const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::StalledWithBound: return "stalled";
    case SolveStatus::TimeLimit: return "time-limit";
  }
  return "?";
}

// `bound` is the proven lower bound on the objective; for Infeasible it is
// +infinity when the model itself is infeasible and the smallest pruned
// node bound when only the objective cutoff excluded every solution.
struct SolveResult {
  SolveStatus status = SolveStatus::Infeasible;
  std::optional<double> objective;
  double bound = 0.0;
  std::vector<double> assignment;
  long nodes = 0;
  long lp_iterations = 0;
  double root_bound = 0.0;
  int refinement_rounds = 0;
};

struct SolveLimits {
  double wall_seconds = std::numeric_limits<double>::infinity();
  double stall_seconds = 30.0;
  double objective_cutoff = std::numeric_limits<double>::infinity();
};

namespace detail {

constexpr double kIntTol = 1e-7;

struct LpAnswer {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

inline LpAnswer solve_lp(const LinearModel& model,
                         const std::vector<double>& lo,
                         const std::vector<double>& hi, long& iterations,
                         const std::vector<Constraint>& extra = {}) {
  Simplex<double> sx;
  std::vector<double> cost(model.vars.size(), 0.0);
  for (auto [v, c] : model.objective) cost[v] += c;
  std::vector<Constraint> cons = model.cons;
  cons.insert(cons.end(), extra.begin(), extra.end());
  std::vector<double> rhs;
  rhs.reserve(cons.size());
  for (const auto& c : cons) rhs.push_back(c.rhs);
  LpAnswer ans;
  double obj = 0;
  ans.status = sx.solve(lo, hi, cost, cons, rhs, ans.x, obj, iterations);
  ans.objective = obj;
  if (ans.status == LpStatus::IterLimit) {
    // exact arithmetic fallback: slower but immune to cycling and to
    // epsilon-scale numerical trouble
    Simplex<Rat> rx;
    std::vector<Rat> rlo(lo.size()), rhi(hi.size()), rcost(cost.size()),
        rrhs(rhs.size()), x;
    for (size_t i = 0; i < lo.size(); ++i) {
      rlo[i] = lo[i] < -1e29 ? Rat(mpz_class("-1000000000000")) : Rat(mpq_class(lo[i]));
      rhi[i] = hi[i] > 1e29 ? Rat(mpz_class("1000000000000")) : Rat(mpq_class(hi[i]));
    }
    for (size_t i = 0; i < cost.size(); ++i) rcost[i] = Rat(mpq_class(cost[i]));
    for (size_t i = 0; i < rhs.size(); ++i) rrhs[i] = Rat(mpq_class(rhs[i]));
    Rat robj(0);
    LpStatus st = rx.solve(rlo, rhi, rcost, cons, rrhs, x, robj, iterations);
    ans.status = st;
    if (st == LpStatus::Optimal) {
      ans.objective = rat_double(robj);
      ans.x.resize(x.size());
      for (size_t i = 0; i < x.size(); ++i) ans.x[i] = rat_double(x[i]);
    }
  }
  return ans;
}

}  // namespace detail

// Verified-incumbent hook: maps a relaxation assignment to a genuinely
// feasible objective value (simulate-and-verify), or nothing.
using IncumbentCallback =
    std::function<std::optional<double>(const std::vector<double>&)>;

// ---------------------------------------------------------------------------
// Branch and bound over the integer variables of a LinearModel, with
// spatial branching on the x variables of bilinear terms.  Each node's LP
// adds McCormick envelope rows built from the node's current x/y bounds, so
// shrinking an x interval tightens the product relaxation.  Node selection
// is best-bound; branching picks the most fractional integer variable
// first, then the most violated product; ties go to the lowest index.
// Exploration is deterministic.
// ---------------------------------------------------------------------------

class BranchAndBound {
 public:
  using Clock = std::chrono::steady_clock;

  explicit BranchAndBound(IncumbentCallback incumbent = nullptr,
                          double product_tol = 1e-6)
      : incumbent_(std::move(incumbent)), product_tol_(product_tol) {}

  SolveResult run(const LinearModel& model, const SolveLimits& limits) {
    model.check();
    start_ = Clock::now();
    last_improve_ = start_;
    SolveResult res;

    struct Node {
      double bound;
      long seq;
      std::vector<double> lo, hi;
      std::vector<double> x;
    };
    struct NodeOrder {
      bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.seq > b.seq;
      }
    };

    std::vector<double> lo0(model.vars.size()), hi0(model.vars.size());
    for (size_t i = 0; i < model.vars.size(); ++i) {
      lo0[i] = model.vars[i].lower;
      hi0[i] = model.vars[i].upper;
    }

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    long seq = 0;
    double best_obj = std::numeric_limits<double>::infinity();
    std::vector<double> best_x;
    double pruned_bound = std::numeric_limits<double>::infinity();
    bool root_seen = false;
    const bool int_obj = objective_is_integral(model);

    auto cutoff = [&](double node_bound) {
      if (node_bound >= limits.objective_cutoff - detail::kIntTol) return true;
      if (node_bound >= best_obj - detail::kIntTol) return true;
      if (int_obj && node_bound > best_obj - 1.0 + detail::kIntTol)
        return true;
      return false;
    };

    auto envelopes = [&](const std::vector<double>& lo,
                         const std::vector<double>& hi) {
      std::vector<Constraint> rows;
      for (const auto& bt : model.bilinear) {
        double xl = lo[bt.x], xu = hi[bt.x];
        double yl = lo[bt.y], yu = hi[bt.y];
        rows.push_back({"", {{bt.product, 1}, {bt.x, -yl}, {bt.y, -xl}},
                        Sense::GE, -xl * yl});
        rows.push_back({"", {{bt.product, 1}, {bt.x, -yu}, {bt.y, -xu}},
                        Sense::GE, -xu * yu});
        rows.push_back({"", {{bt.product, 1}, {bt.x, -yu}, {bt.y, -xl}},
                        Sense::LE, -xl * yu});
        rows.push_back({"", {{bt.product, 1}, {bt.x, -yl}, {bt.y, -xu}},
                        Sense::LE, -xu * yl});
      }
      return rows;
    };

    auto expand = [&](std::vector<double> lo, std::vector<double> hi) {
      long iters = 0;
      detail::LpAnswer lp =
          detail::solve_lp(model, lo, hi, iters, envelopes(lo, hi));
      res.lp_iterations += iters;
      ++res.nodes;
      if (!root_seen) {
        root_seen = true;
        res.root_bound = lp.status == detail::LpStatus::Optimal
                             ? lp.objective
                             : std::numeric_limits<double>::infinity();
      }
      if (lp.status == detail::LpStatus::Infeasible) return;
      if (lp.status == detail::LpStatus::Unbounded)
        throw std::runtime_error("LP relaxation unbounded");
      if (lp.status == detail::LpStatus::IterLimit)
        throw std::runtime_error("LP iteration limit in both precisions");
      if (cutoff(lp.objective)) {
        pruned_bound = std::min(pruned_bound, lp.objective);
        return;
      }
      open.push(Node{lp.objective, seq++, std::move(lo), std::move(hi),
                     std::move(lp.x)});
    };

    expand(lo0, hi0);

    while (!open.empty()) {
      auto now = Clock::now();
      double elapsed = std::chrono::duration<double>(now - start_).count();
      double stalled =
          std::chrono::duration<double>(now - last_improve_).count();
      if (elapsed > limits.wall_seconds || stalled > limits.stall_seconds) {
        res.status = elapsed > limits.wall_seconds
                         ? SolveStatus::TimeLimit
                         : SolveStatus::StalledWithBound;
        res.bound = std::min(open.top().bound, pruned_bound);
        if (best_obj < std::numeric_limits<double>::infinity()) {
          res.objective = best_obj;
          res.assignment = best_x;
          res.bound = std::min(res.bound, best_obj);
        }
        return res;
      }

      Node nd = open.top();
      open.pop();
      if (cutoff(nd.bound)) {
        pruned_bound = std::min(pruned_bound, nd.bound);
        continue;
      }

      // integer branching first
      int frac_var = -1;
      double frac_dist = 0;
      for (size_t v = 0; v < model.vars.size(); ++v) {
        if (model.vars[v].kind == VarKind::Continuous) continue;
        double f = nd.x[v] - std::floor(nd.x[v]);
        double d = std::min(f, 1.0 - f);
        if (d > detail::kIntTol && d > frac_dist + 1e-12) {
          frac_dist = d;
          frac_var = (int)v;
        }
      }
      if (frac_var >= 0) {
        double split = std::floor(nd.x[frac_var]);
        for (int side = 0; side < 2; ++side) {
          auto lo = nd.lo;
          auto hi = nd.hi;
          if (side == 0) {
            hi[frac_var] = split;
          } else {
            lo[frac_var] = split + 1;
          }
          if (lo[frac_var] <= hi[frac_var])
            expand(std::move(lo), std::move(hi));
        }
        continue;
      }

      // spatial branching on the most violated product
      int worst = -1;
      double worst_viol = product_tol_;
      for (size_t t = 0; t < model.bilinear.size(); ++t) {
        const auto& bt = model.bilinear[t];
        if (nd.hi[bt.x] - nd.lo[bt.x] < 1e-8) continue;  // interval closed
        double viol = std::abs(nd.x[bt.product] - nd.x[bt.x] * nd.x[bt.y]);
        if (viol > worst_viol + 1e-12) {
          worst_viol = viol;
          worst = (int)t;
        }
      }

      if (worst < 0) {
        // integral and product-consistent: candidate incumbent
        double obj = 0;
        for (auto [v, c] : model.objective) obj += c * nd.x[v];
        std::optional<double> val = obj;
        if (incumbent_) {
          // exact feasibility is certified by the caller
          bool exact_products = true;
          for (const auto& bt : model.bilinear)
            if (std::abs(nd.x[bt.product] - nd.x[bt.x] * nd.x[bt.y]) >
                product_tol_)
              exact_products = false;
          if (!exact_products) val = incumbent_(nd.x);
        }
        if (val && *val < best_obj - detail::kIntTol) {
          best_obj = *val;
          best_x = nd.x;
          for (size_t v = 0; v < model.vars.size(); ++v)
            if (model.vars[v].kind != VarKind::Continuous)
              best_x[v] = std::round(best_x[v]);
          last_improve_ = Clock::now();
        }
        continue;
      }

      // a verified incumbent from the relaxation point speeds up closing
      if (incumbent_) {
        std::optional<double> val = incumbent_(nd.x);
        if (val && *val < best_obj - detail::kIntTol) {
          best_obj = *val;
          best_x = nd.x;
          last_improve_ = Clock::now();
        }
        if (cutoff(nd.bound)) {
          pruned_bound = std::min(pruned_bound, nd.bound);
          continue;
        }
      }

      const auto& bt = model.bilinear[worst];
      double xl = nd.lo[bt.x], xu = nd.hi[bt.x];
      double split = nd.x[bt.x];
      double margin = 0.1 * (xu - xl);
      split = std::min(std::max(split, xl + margin), xu - margin);
      for (int side = 0; side < 2; ++side) {
        auto lo = nd.lo;
        auto hi = nd.hi;
        if (side == 0) {
          hi[bt.x] = split;
        } else {
          lo[bt.x] = split;
        }
        expand(std::move(lo), std::move(hi));
      }
    }

    if (best_obj < std::numeric_limits<double>::infinity()) {
      res.status = SolveStatus::Optimal;
      res.objective = best_obj;
      res.assignment = best_x;
      res.bound = best_obj;
    } else {
      res.status = SolveStatus::Infeasible;
      res.bound = pruned_bound;
    }
    return res;
  }

 private:
  static bool objective_is_integral(const LinearModel& m) {
    for (auto [v, c] : m.objective) {
      if (m.vars[v].kind == VarKind::Continuous) return false;
      if (c != std::round(c)) return false;
    }
    return true;
  }

  IncumbentCallback incumbent_;
  double product_tol_;
  Clock::time_point start_, last_improve_;
};

// ---------------------------------------------------------------------------
// McCormick envelope and the segment-indexed piecewise relaxation.
// ---------------------------------------------------------------------------

inline void append_mccormick(LinearModel& m, const std::string& tag, int xv,
                             int yv, int zv) {
  double xl = m.vars[xv].lower, xu = m.vars[xv].upper;
  double yl = m.vars[yv].lower, yu = m.vars[yv].upper;
  m.add_con(tag + "_mc1", {{zv, 1}, {xv, -yl}, {yv, -xl}}, Sense::GE,
            -xl * yl);
  m.add_con(tag + "_mc2", {{zv, 1}, {xv, -yu}, {yv, -xu}}, Sense::GE,
            -xu * yu);
  m.add_con(tag + "_mc3", {{zv, 1}, {xv, -yu}, {yv, -xl}}, Sense::LE,
            -xl * yu);
  m.add_con(tag + "_mc4", {{zv, 1}, {xv, -yl}, {yv, -xu}}, Sense::LE,
            -xu * yl);
}

// Shared segment indicators for one x variable.
struct PiecewiseX {
  std::vector<int> lambda;
  std::vector<double> breakpoints;
};

inline PiecewiseX make_piecewise_x(LinearModel& m, int xv,
                                   const std::vector<double>& pts,
                                   const std::string& tag) {
  if (pts.size() < 2)
    throw std::invalid_argument("piecewise needs >= 2 breakpoints");
  for (size_t i = 1; i < pts.size(); ++i)
    if (!(pts[i - 1] < pts[i]))
      throw std::invalid_argument("breakpoints must strictly increase");
  PiecewiseX pw;
  pw.breakpoints = pts;
  const int K = (int)pts.size() - 1;
  if (K == 1) return pw;  // single segment degenerates to McCormick
  std::vector<std::pair<int, double>> sum, lo_x, hi_x;
  for (int k = 0; k < K; ++k) {
    int l = m.add_var(tag + "_lam" + std::to_string(k), 0, 1, VarKind::Binary);
    pw.lambda.push_back(l);
    sum.push_back({l, 1});
    lo_x.push_back({l, pts[k]});
    hi_x.push_back({l, pts[k + 1]});
  }
  m.add_con(tag + "_one", sum, Sense::EQ, 1);
  lo_x.push_back({xv, -1});
  m.add_con(tag + "_xlo", lo_x, Sense::LE, 0);  // sum x_{k-1} lam <= x
  hi_x.push_back({xv, -1});
  m.add_con(tag + "_xhi", hi_x, Sense::GE, 0);  // x <= sum x_k lam
  return pw;
}

inline void append_piecewise_product(LinearModel& m, const PiecewiseX& pw,
                                     int xv, int yv, int zv,
                                     const std::string& tag) {
  const int K = (int)pw.breakpoints.size() - 1;
  if (K == 1) {
    append_mccormick(m, tag, xv, yv, zv);
    return;
  }
  const double yl = m.vars[yv].lower, yu = m.vars[yv].upper;
  std::vector<int> dy(K);
  std::vector<std::pair<int, double>> ysum{{yv, 1}};
  for (int k = 0; k < K; ++k) {
    dy[k] = m.add_var(tag + "_dy" + std::to_string(k), 0,
                      std::max(0.0, yu - yl), VarKind::Continuous);
    m.add_con(tag + "_dycap" + std::to_string(k),
              {{dy[k], 1}, {pw.lambda[k], -(yu - yl)}}, Sense::LE, 0);
    ysum.push_back({dy[k], -1});
  }
  m.add_con(tag + "_ydef", ysum, Sense::EQ, yl);  // y = yL + sum dy_k

  // z >= yU x + sum x_k dy_k - (yU - yL) sum x_k lam_k
  {
    std::vector<std::pair<int, double>> t{{zv, 1}, {xv, -yu}};
    for (int k = 0; k < K; ++k) {
      t.push_back({dy[k], -pw.breakpoints[k + 1]});
      t.push_back({pw.lambda[k], (yu - yl) * pw.breakpoints[k + 1]});
    }
    m.add_con(tag + "_pz1", t, Sense::GE, 0);
  }
  // z <= yU x + sum x_{k-1} dy_k - (yU - yL) sum x_{k-1} lam_k
  {
    std::vector<std::pair<int, double>> t{{zv, 1}, {xv, -yu}};
    for (int k = 0; k < K; ++k) {
      t.push_back({dy[k], -pw.breakpoints[k]});
      t.push_back({pw.lambda[k], (yu - yl) * pw.breakpoints[k]});
    }
    m.add_con(tag + "_pz2", t, Sense::LE, 0);
  }
  // z <= yL x + sum x_k dy_k
  {
    std::vector<std::pair<int, double>> t{{zv, 1}, {xv, -yl}};
    for (int k = 0; k < K; ++k) t.push_back({dy[k], -pw.breakpoints[k + 1]});
    m.add_con(tag + "_pz3", t, Sense::LE, 0);
  }
  // z >= yL x + sum x_{k-1} dy_k  (lower envelope; text truncates here)
  {
    std::vector<std::pair<int, double>> t{{zv, 1}, {xv, -yl}};
    for (int k = 0; k < K; ++k) t.push_back({dy[k], -pw.breakpoints[k]});
    m.add_con(tag + "_pz4", t, Sense::GE, 0);
  }
}

// Replace every bilinear term with its piecewise relaxation over the given
// per-x breakpoint grids.
inline LinearModel relax_bilinear(
    const LinearModel& model,
    const std::map<int, std::vector<double>>& grids) {
  LinearModel out = model;
  out.bilinear.clear();
  std::map<int, PiecewiseX> shared;
  for (const auto& bt : model.bilinear) {
    auto it = shared.find(bt.x);
    if (it == shared.end()) {
      auto grid_it = grids.find(bt.x);
      if (grid_it == grids.end())
        throw std::invalid_argument("no breakpoint grid for bilinear x");
      it = shared
               .emplace(bt.x, make_piecewise_x(out, bt.x, grid_it->second,
                                               "pw_" + model.vars[bt.x].name))
               .first;
    }
    append_piecewise_product(out, it->second, bt.x, bt.y, bt.product,
                             "pw_" + model.vars[bt.product].name);
  }
  return out;
}

inline std::vector<double> uniform_grid(double lo, double hi, int segments) {
  std::vector<double> g;
  for (int k = 0; k <= segments; ++k)
    g.push_back(lo + (hi - lo) * k / segments);
  return g;
}

// ---------------------------------------------------------------------------
// solve(): branch and bound, spatially refining any bilinear terms.  The
// optional callback turns relaxation assignments into genuinely feasible
// objective values (the caller's simulate-and-verify hook).
// ---------------------------------------------------------------------------

inline SolveResult solve(const LinearModel& model, const SolveLimits& limits,
                         const IncumbentCallback& incumbent = nullptr) {
  BranchAndBound bnb(incumbent);
  return bnb.run(model, limits);
}

}  // namespace stv::milp

#endif  // STV_MILP_HPP
