// Copyright 2026 The fergrad Authors.
//
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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fergrad {

struct GradcheckResult {
  std::string op;
  int seeds = 0;
  double max_rel_error = 0;  // worst over seeds and inputs
  bool pass = false;
};

// Finite-difference checks of every differentiable kernel at 64-bit, with
// inputs placed away from non-differentiable points. Seeds run 1..seeds.
std::vector<GradcheckResult> run_gradcheck_suite(int seeds = 20, double tolerance = 1e-4);

}  // namespace fergrad
