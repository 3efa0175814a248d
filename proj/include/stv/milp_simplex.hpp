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

#ifndef STV_MILP_SIMPLEX_HPP
#define STV_MILP_SIMPLEX_HPP

#include <string>
#include <type_traits>
#include <vector>

#include "stv/rational.hpp"

namespace stv::milp {

enum class VarKind { Continuous, Integer, Binary };
enum class Sense { LE, GE, EQ };

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  VarKind kind = VarKind::Continuous;
};

struct Constraint {
  std::string name;
  std::vector<std::pair<int, double>> terms;  // (variable, coefficient)
  Sense sense = Sense::LE;
  double rhs = 0.0;
};

namespace detail {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

// Dense bounded-variable primal simplex, two phases with artificial
// variables and a maintained objective row.  Scalar is double for speed or
// Rat for exact arithmetic (the anti-cycling / borderline fallback).
template <class Scalar>
class Simplex {
 public:
  LpStatus solve(const std::vector<Scalar>& lo, const std::vector<Scalar>& hi,
                 const std::vector<Scalar>& cost,
                 const std::vector<Constraint>& cons,
                 const std::vector<Scalar>& rhs, std::vector<Scalar>& x,
                 Scalar& obj, long& iterations) {
    n_ = (int)lo.size();
    m_ = (int)cons.size();
    total_ = n_ + 2 * m_;  // structurals | slacks | artificials
    lo_ = lo;
    hi_ = hi;
    lo_.resize(total_, Scalar(0));
    hi_.resize(total_, Scalar(0));

    tab_.assign(m_, std::vector<Scalar>(total_, Scalar(0)));
    b_ = rhs;
    for (int r = 0; r < m_; ++r) {
      for (auto [v, c] : cons[r].terms) tab_[r][v] += to_scalar(c);
      int s = n_ + r;
      if (cons[r].sense == Sense::LE) {
        tab_[r][s] = Scalar(1);
        lo_[s] = Scalar(0);
        hi_[s] = huge();
      } else if (cons[r].sense == Sense::GE) {
        tab_[r][s] = Scalar(1);
        lo_[s] = -huge();
        hi_[s] = Scalar(0);
      } else {
        lo_[s] = Scalar(0);
        hi_[s] = Scalar(0);
      }
    }

    at_upper_.assign(total_, false);
    basic_.assign(m_, -1);
    in_basis_.assign(total_, -1);
    xval_.assign(total_, Scalar(0));
    for (int v = 0; v < n_ + m_; ++v) {
      xval_[v] = (lo_[v] > -huge()) ? lo_[v]
                                    : (hi_[v] < huge() ? hi_[v] : Scalar(0));
      at_upper_[v] = lo_[v] <= -huge() && hi_[v] < huge();
    }

    // artificials absorb row residuals; rows normalised to +1 coefficient
    for (int r = 0; r < m_; ++r) {
      Scalar act(0);
      for (int v = 0; v < n_ + m_; ++v)
        if (tab_[r][v] != Scalar(0) && xval_[v] != Scalar(0))
          act += tab_[r][v] * xval_[v];
      Scalar resid = b_[r] - act;
      if (resid < Scalar(0)) {
        for (int v = 0; v < n_ + m_; ++v)
          if (tab_[r][v] != Scalar(0)) tab_[r][v] = -tab_[r][v];
        b_[r] = -b_[r];
        resid = -resid;
      }
      int a = n_ + m_ + r;
      tab_[r][a] = Scalar(1);
      lo_[a] = Scalar(0);
      hi_[a] = huge();
      xval_[a] = resid;
      basic_[r] = a;
      in_basis_[a] = r;
    }

    // phase 1: minimise the artificial total
    cost_.assign(total_, Scalar(0));
    for (int r = 0; r < m_; ++r) cost_[n_ + m_ + r] = Scalar(1);
    rebuild_z();
    LpStatus st = iterate(iterations);
    if (st != LpStatus::Optimal) return st;
    Scalar infeas(0);
    for (int r = 0; r < m_; ++r) infeas += xval_[n_ + m_ + r];
    if (infeas > feas_eps()) return LpStatus::Infeasible;

    for (int r = 0; r < m_; ++r) {
      int a = n_ + m_ + r;
      hi_[a] = Scalar(0);
      if (in_basis_[a] >= 0) {
        int row = in_basis_[a];
        for (int v = 0; v < n_ + m_; ++v) {
          if (in_basis_[v] >= 0 || lo_[v] == hi_[v]) continue;
          if (abs_val(tab_[row][v]) > pivot_eps()) {
            pivot(row, v);
            xval_[v] = b_value(row);
            break;
          }
        }
      }
    }

    // phase 2
    cost_.assign(total_, Scalar(0));
    for (int v = 0; v < n_; ++v) cost_[v] = cost[v];
    rebuild_z();
    refresh_values();
    st = iterate(iterations);
    if (st != LpStatus::Optimal) return st;

    x.assign(n_, Scalar(0));
    obj = Scalar(0);
    for (int v = 0; v < n_; ++v) {
      x[v] = xval_[v];
      obj += cost[v] * xval_[v];
    }
    return LpStatus::Optimal;
  }

 private:
  static Scalar to_scalar(double d) {
    if constexpr (std::is_same_v<Scalar, double>) {
      return d;
    } else {
      return Scalar(mpq_class(d));
    }
  }
  static Scalar abs_val(const Scalar& v) { return v < Scalar(0) ? -v : v; }
  static Scalar huge() {
    if constexpr (std::is_same_v<Scalar, double>) {
      return 1e30;
    } else {
      return Scalar(mpz_class("1000000000000"));
    }
  }
  static Scalar feas_eps() {
    if constexpr (std::is_same_v<Scalar, double>) {
      return 1e-7;
    } else {
      return Scalar(0);
    }
  }
  static Scalar pivot_eps() {
    if constexpr (std::is_same_v<Scalar, double>) {
      return 1e-9;
    } else {
      return Scalar(0);
    }
  }

  void rebuild_z() {
    z_ = cost_;
    for (int r = 0; r < m_; ++r) {
      Scalar cb = cost_[basic_[r]];
      if (cb == Scalar(0)) continue;
      const auto& row = tab_[r];
      for (int v = 0; v < total_; ++v)
        if (row[v] != Scalar(0)) z_[v] -= cb * row[v];
    }
  }

  Scalar b_value(int r) const {
    Scalar act(0);
    for (int v = 0; v < total_; ++v)
      if (in_basis_[v] < 0 && tab_[r][v] != Scalar(0) &&
          xval_[v] != Scalar(0))
        act += tab_[r][v] * xval_[v];
    return b_[r] - act;
  }

  void refresh_values() {
    for (int r = 0; r < m_; ++r) xval_[basic_[r]] = b_value(r);
  }

  void pivot(int row, int enter) {
    Scalar piv = tab_[row][enter];
    auto& prow = tab_[row];
    for (int v = 0; v < total_; ++v)
      if (prow[v] != Scalar(0)) prow[v] /= piv;
    b_[row] /= piv;
    for (int r = 0; r < m_; ++r) {
      if (r == row) continue;
      Scalar f = tab_[r][enter];
      if (f == Scalar(0)) continue;
      auto& trow = tab_[r];
      for (int v = 0; v < total_; ++v)
        if (prow[v] != Scalar(0)) trow[v] -= f * prow[v];
      b_[r] -= f * b_[row];
    }
    Scalar zf = z_[enter];
    if (zf != Scalar(0))
      for (int v = 0; v < total_; ++v)
        if (prow[v] != Scalar(0)) z_[v] -= zf * prow[v];
    int leave = basic_[row];
    if (leave >= 0) in_basis_[leave] = -1;
    basic_[row] = enter;
    in_basis_[enter] = row;
  }

  LpStatus iterate(long& iterations) {
    long degenerate = 0;
    bool bland = false;
    const long iter_cap = 300L * (m_ + total_) + 20000;
    for (long it = 0;; ++it) {
      if (it > iter_cap) return LpStatus::IterLimit;
      ++iterations;
      if ((it & 127) == 127) refresh_values();

      int enter = -1, dir = 0;
      Scalar best(0);
      for (int v = 0; v < total_; ++v) {
        if (in_basis_[v] >= 0 || lo_[v] == hi_[v]) continue;
        const Scalar& rc = z_[v];
        int d = 0;
        Scalar gain(0);
        if (!at_upper_[v] && rc < -pivot_eps()) {
          d = +1;
          gain = -rc;
        } else if (at_upper_[v] && rc > pivot_eps()) {
          d = -1;
          gain = rc;
        } else {
          continue;
        }
        if (enter < 0 || gain > best) {
          enter = v;
          dir = d;
          best = gain;
        }
        if (bland) break;
      }
      if (enter < 0) return LpStatus::Optimal;

      Scalar limit = hi_[enter] >= huge() || lo_[enter] <= -huge()
                         ? huge()
                         : hi_[enter] - lo_[enter];
      bool flip = true;
      int leave_row = -1;
      bool leave_upper = false;
      for (int r = 0; r < m_; ++r) {
        const Scalar& col = tab_[r][enter];
        if (abs_val(col) <= pivot_eps()) continue;
        int bv = basic_[r];
        Scalar delta = dir > 0 ? -col : col;  // d(basic)/dt
        if (delta > Scalar(0)) {
          if (hi_[bv] >= huge()) continue;
          Scalar t = (hi_[bv] - xval_[bv]) / delta;
          if (t < Scalar(0)) t = Scalar(0);
          if (t < limit || (t == limit && flip)) {
            limit = t;
            flip = false;
            leave_row = r;
            leave_upper = true;
          }
        } else {
          if (lo_[bv] <= -huge()) continue;
          Scalar t = (xval_[bv] - lo_[bv]) / (-delta);
          if (t < Scalar(0)) t = Scalar(0);
          if (t < limit || (t == limit && flip)) {
            limit = t;
            flip = false;
            leave_row = r;
            leave_upper = false;
          }
        }
      }

      if (flip) {
        if (limit >= huge()) return LpStatus::Unbounded;
        for (int r = 0; r < m_; ++r) {
          const Scalar& col = tab_[r][enter];
          if (col != Scalar(0))
            xval_[basic_[r]] -= to_scalar(dir) * limit * col;
        }
        xval_[enter] = at_upper_[enter] ? lo_[enter] : hi_[enter];
        at_upper_[enter] = !at_upper_[enter];
        continue;
      }

      if (limit <= Scalar(0)) {
        if (++degenerate > 2L * (m_ + total_)) bland = true;
      } else {
        degenerate = 0;
      }

      Scalar enter_new = xval_[enter] + to_scalar(dir) * limit;
      for (int r = 0; r < m_; ++r) {
        const Scalar& col = tab_[r][enter];
        if (col != Scalar(0))
          xval_[basic_[r]] -= to_scalar(dir) * limit * col;
      }
      int leave_var = basic_[leave_row];
      pivot(leave_row, enter);
      xval_[enter] = enter_new;
      at_upper_[leave_var] = leave_upper;
      xval_[leave_var] = leave_upper ? hi_[leave_var] : lo_[leave_var];
    }
  }

  int n_ = 0, m_ = 0, total_ = 0;
  std::vector<std::vector<Scalar>> tab_;
  std::vector<Scalar> b_, lo_, hi_, cost_, xval_, z_;
  std::vector<int> basic_, in_basis_;
  std::vector<bool> at_upper_;
};

}  // namespace detail
}  // namespace stv::milp

#endif  // STV_MILP_SIMPLEX_HPP
