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

#ifndef STV_TESTS_FIXTURES_HPP
#define STV_TESTS_FIXTURES_HPP

#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "stv/core.hpp"
#include "stv/parse.hpp"

namespace fixtures {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline stv::Election table1() {
  return stv::parse_profile(read_file(std::string(STV_DATA_DIR) + "/table1.stv"));
}

inline stv::Election table2() {
  return stv::parse_profile(read_file(std::string(STV_DATA_DIR) + "/table2.stv"));
}

// Small random election for property tests: n candidates, up to max_total
// ballots over random strict partial rankings.
inline stv::Election random_election(std::mt19937& rng, int ncand, int seats,
                                     int max_total) {
  stv::Election e;
  for (int i = 0; i < ncand; ++i)
    e.candidates.push_back({i, "c" + std::to_string(i + 1)});
  e.seats = seats;
  std::uniform_int_distribution<int> total_d(ncand + 1, max_total);
  int total = total_d(rng);
  std::uniform_int_distribution<int> len_d(1, ncand);
  std::vector<int> perm(ncand);
  for (int i = 0; i < ncand; ++i) perm[i] = i;
  int placed = 0;
  while (placed < total) {
    std::shuffle(perm.begin(), perm.end(), rng);
    int len = len_d(rng);
    stv::Signature sig(perm.begin(), perm.begin() + len);
    std::uniform_int_distribution<int> cnt_d(1, std::max(1, (total - placed) / 2));
    int cnt = std::min(total - placed, cnt_d(rng));
    e.profile.add(sig, cnt);
    placed += cnt;
  }
  e.quota = stv::droop_quota(e.profile.total, e.seats);
  e.validate();
  return e;
}

}  // namespace fixtures

#endif  // STV_TESTS_FIXTURES_HPP
