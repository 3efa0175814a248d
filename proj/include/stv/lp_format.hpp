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

#ifndef STV_LP_FORMAT_HPP
#define STV_LP_FORMAT_HPP

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "stv/milp.hpp"

namespace stv::milp {

namespace detail {

inline std::string num(double v) {
  if (v == (long long)v && std::abs(v) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld", (long long)v);
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_terms(std::ostream& out,
                        const std::vector<std::pair<int, double>>& terms,
                        const LinearModel& m) {
  bool first = true;
  for (auto [v, c] : terms) {
    if (c == 0) continue;
    if (first) {
      out << (c < 0 ? "- " : "");
      first = false;
    } else {
      out << (c < 0 ? " - " : " + ");
    }
    double a = std::abs(c);
    out << num(a) << " " << m.vars[v].name;
  }
  if (first) out << "0 zero";
}

}  // namespace detail

// CPLEX-style LP text.  Identical models produce byte-identical output;
// bilinear terms (exact mode) travel as comment lines external solvers
// ignore.
inline std::string export_lp(const LinearModel& model) {
  model.check();
  std::ostringstream out;
  out << "\\ stv-margin model export, lp format v1\n";
  for (const auto& bt : model.bilinear)
    out << "\\ bilinear " << model.vars[bt.product].name << " = "
        << model.vars[bt.x].name << " * " << model.vars[bt.y].name << "\n";
  out << "Minimize\n obj: ";
  detail::write_terms(out, model.objective, model);
  out << "\nSubject To\n";
  for (size_t i = 0; i < model.cons.size(); ++i) {
    const auto& c = model.cons[i];
    out << " " << (c.name.empty() ? "c" + std::to_string(i) : c.name) << ": ";
    detail::write_terms(out, c.terms, model);
    out << (c.sense == Sense::LE ? " <= "
                                 : (c.sense == Sense::GE ? " >= " : " = "))
        << detail::num(c.rhs) << "\n";
  }
  out << "Bounds\n";
  for (const auto& v : model.vars)
    out << " " << detail::num(v.lower) << " <= " << v.name
        << " <= " << detail::num(v.upper) << "\n";
  bool any_int = false, any_bin = false;
  for (const auto& v : model.vars) {
    any_int |= v.kind == VarKind::Integer;
    any_bin |= v.kind == VarKind::Binary;
  }
  if (any_int) {
    out << "General\n";
    for (const auto& v : model.vars)
      if (v.kind == VarKind::Integer) out << " " << v.name << "\n";
  }
  if (any_bin) {
    out << "Binary\n";
    for (const auto& v : model.vars)
      if (v.kind == VarKind::Binary) out << " " << v.name << "\n";
  }
  out << "End\n";
  return out.str();
}

// Reader for the exporter's own output (round-trip checks and the external
// solver escape hatch).
inline LinearModel parse_lp(const std::string& text) {
  LinearModel m;
  std::map<std::string, int> byname;
  std::vector<std::array<std::string, 2>> bilinear_names;

  auto intern = [&](const std::string& name) {
    auto it = byname.find(name);
    if (it != byname.end()) return it->second;
    int id = m.add_var(name, 0, 0);
    byname[name] = id;
    return id;
  };

  enum Section { None, Obj, Cons, Bounds, General, Binary } sec = None;
  std::istringstream in(text);
  std::string line;
  std::string pending;
  auto parse_terms = [&](const std::string& body)
      -> std::vector<std::pair<int, double>> {
    std::vector<std::pair<int, double>> terms;
    std::istringstream ts(body);
    std::string tok;
    double sign = 1, coef = 1;
    bool have_coef = false;
    while (ts >> tok) {
      if (tok == "+") {
        sign = 1;
        coef = 1;
        have_coef = false;
      } else if (tok == "-") {
        sign = -1;
        coef = 1;
        have_coef = false;
      } else {
        char* end = nullptr;
        double v = std::strtod(tok.c_str(), &end);
        if (end && *end == '\0' && !have_coef) {
          coef = v;
          have_coef = true;
        } else {
          if (tok == "zero" && have_coef && coef == 0) {
            sign = 1;
            coef = 1;
            have_coef = false;
            continue;
          }
          terms.push_back({intern(tok), sign * coef});
          sign = 1;
          coef = 1;
          have_coef = false;
        }
      }
    }
    return terms;
  };

  while (std::getline(in, line)) {
    // comments: recover bilinear annotations
    if (!line.empty() && line[0] == '\\') {
      std::istringstream cs(line.substr(1));
      std::string kw, prod, eq, x, star, y;
      if (cs >> kw && kw == "bilinear" && cs >> prod >> eq >> x >> star >> y)
        bilinear_names.push_back({prod, x + " " + y});
      continue;
    }
    std::string t = line;
    while (!t.empty() && (t.back() == '\r' || t.back() == ' ')) t.pop_back();
    size_t p = t.find_first_not_of(' ');
    if (p == std::string::npos) continue;
    std::string body = t.substr(p);
    if (body == "Minimize") {
      sec = Obj;
      continue;
    }
    if (body == "Subject To") {
      sec = Cons;
      continue;
    }
    if (body == "Bounds") {
      sec = Bounds;
      continue;
    }
    if (body == "General") {
      sec = General;
      continue;
    }
    if (body == "Binary") {
      sec = Binary;
      continue;
    }
    if (body == "End") break;

    switch (sec) {
      case Obj: {
        size_t colon = body.find(':');
        m.objective = parse_terms(body.substr(colon + 1));
        break;
      }
      case Cons: {
        size_t colon = body.find(':');
        std::string name = body.substr(0, colon);
        std::string rest = body.substr(colon + 1);
        Sense s;
        size_t op;
        if ((op = rest.find("<=")) != std::string::npos) {
          s = Sense::LE;
        } else if ((op = rest.find(">=")) != std::string::npos) {
          s = Sense::GE;
        } else {
          op = rest.find(" = ");
          s = Sense::EQ;
        }
        std::string lhs = rest.substr(0, op);
        std::string rhs = rest.substr(op + (s == Sense::EQ ? 3 : 2));
        m.add_con(name, parse_terms(lhs), s, std::strtod(rhs.c_str(), nullptr));
        break;
      }
      case Bounds: {
        std::istringstream bs(body);
        std::string lo, le1, name, le2, hi;
        bs >> lo >> le1 >> name >> le2 >> hi;
        int v = intern(name);
        m.vars[v].lower = std::strtod(lo.c_str(), nullptr);
        m.vars[v].upper = std::strtod(hi.c_str(), nullptr);
        break;
      }
      case General: {
        m.vars[intern(body)].kind = VarKind::Integer;
        break;
      }
      case Binary: {
        m.vars[intern(body)].kind = VarKind::Binary;
        break;
      }
      case None:
        break;
    }
    (void)pending;
  }

  for (const auto& bn : bilinear_names) {
    std::istringstream xs(bn[1]);
    std::string x, y;
    xs >> x >> y;
    m.bilinear.push_back({byname.at(x), byname.at(y), byname.at(bn[0])});
  }
  return m;
}

// Runs `<command> <lp-file>` and reads "name value" lines from its stdout
// as a solution; names absent from the model are ignored.
inline std::optional<std::vector<double>> run_external_solver(
    const LinearModel& model, const std::string& command,
    const std::string& workdir = "/tmp") {
  std::string path = workdir + "/stvmargin_model.lp";
  {
    std::ofstream f(path);
    f << export_lp(model);
  }
  std::string cmd = command + " " + path;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return std::nullopt;
  std::map<std::string, int> byname;
  for (size_t i = 0; i < model.vars.size(); ++i)
    byname[model.vars[i].name] = (int)i;
  std::vector<double> x(model.vars.size(), 0.0);
  char buf[512];
  bool any = false;
  while (fgets(buf, sizeof buf, pipe)) {
    std::istringstream ls(buf);
    std::string name;
    double val;
    if (ls >> name >> val) {
      auto it = byname.find(name);
      if (it != byname.end()) {
        x[it->second] = val;
        any = true;
      }
    }
  }
  int rc = pclose(pipe);
  if (rc != 0 || !any) return std::nullopt;
  return x;
}

}  // namespace stv::milp

#endif  // STV_LP_FORMAT_HPP
