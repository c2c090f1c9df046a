// Copyright 2026 The AWE Toolkit Authors.
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

#ifndef AWE_TESTS_GRADCHECK_H_
#define AWE_TESTS_GRADCHECK_H_

// Central finite-difference oracle shared by the unit and acceptance suites.
// It only ever calls forward functions, never the backward code it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>

namespace awe::testing {

inline constexpr double kFdStep = 1e-5;

// Gradients smaller than this are compared absolutely: the finite-difference
// quotient of a double-precision loss carries up to ~1e-10 of rounding noise,
// so a purely relative comparison of a (near-)zero gradient is meaningless.
// The attention key bias, for one, has an identically zero gradient.
inline constexpr double kRelErrFloor = 1e-3;

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), kRelErrFloor});
}

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst;  // "<tensor>[<index>]" of the worst element
  size_t checked = 0;
};

// Perturbs every element of `values` in place, evaluating `loss` at x +- step,
// and compares against `analytic` (same length).
inline void check_tensor(const std::string& name, std::span<double> values,
                         std::span<const double> analytic,
                         const std::function<double()>& loss, GradCheckResult& result,
                         double step = kFdStep) {
  for (size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + step;
    const double up = loss();
    values[i] = saved - step;
    const double down = loss();
    values[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double err = relative_error(analytic[i], numeric);
    ++result.checked;
    if (err > result.max_rel_err || result.worst.empty()) {
      if (err >= result.max_rel_err) {
        result.max_rel_err = err;
        result.worst = name + "[" + std::to_string(i) + "]";
      }
    }
  }
}

}  // namespace awe::testing

#endif  // AWE_TESTS_GRADCHECK_H_
