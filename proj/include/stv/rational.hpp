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

#ifndef STV_RATIONAL_HPP
#define STV_RATIONAL_HPP

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stv {

// All vote arithmetic in the counting engine is exact rational.
using Rat = mpq_class;

inline Rat rat(long num, long den = 1) {
  Rat r(num, den);
  r.canonicalize();
  return r;
}

inline long rat_ceil(const Rat& r) {
  mpz_class q;
  mpz_cdiv_q(q.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
  if (!q.fits_slong_p()) throw std::overflow_error("rat_ceil overflow");
  return q.get_si();
}

inline long rat_floor(const Rat& r) {
  mpz_class q;
  mpz_fdiv_q(q.get_mpz_t(), r.get_num_mpz_t(), r.get_den_mpz_t());
  if (!q.fits_slong_p()) throw std::overflow_error("rat_floor overflow");
  return q.get_si();
}

inline double rat_double(const Rat& r) { return r.get_d(); }

// "5/6" or "14" when the denominator is one.
inline std::string rat_string(const Rat& r) {
  Rat c = r;
  c.canonicalize();
  if (c.get_den() == 1) return c.get_num().get_str();
  return c.get_num().get_str() + "/" + c.get_den().get_str();
}

// Fixed-point rendering with banker's rounding, e.g. 266/13 -> "20.46".
// Matches how the round tallies are displayed in reports.
inline std::string rat_decimal(const Rat& r, int places = 2) {
  mpz_class scale = 1;
  for (int i = 0; i < places; ++i) scale *= 10;
  Rat scaled = r * Rat(scale);
  scaled.canonicalize();
  mpz_class q, rem;
  mpz_fdiv_qr(q.get_mpz_t(), rem.get_mpz_t(), scaled.get_num_mpz_t(),
              scaled.get_den_mpz_t());
  // q + rem/den with 0 <= rem < den; round to nearest, ties to even.
  mpz_class twice = rem * 2;
  int cmp = mpz_cmp(twice.get_mpz_t(), scaled.get_den_mpz_t());
  if (cmp > 0 || (cmp == 0 && mpz_odd_p(q.get_mpz_t()))) q += 1;
  bool neg = q < 0;
  mpz_class a = abs(q);
  std::string digits = a.get_str();
  while ((int)digits.size() <= places) digits.insert(digits.begin(), '0');
  std::string out = digits.substr(0, digits.size() - places);
  if (places > 0) out += "." + digits.substr(digits.size() - places);
  if (neg) out.insert(out.begin(), '-');
  return out;
}

}  // namespace stv

#endif  // STV_RATIONAL_HPP
