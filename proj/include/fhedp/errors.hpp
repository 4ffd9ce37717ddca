// Copyright 2026 The fhedp Authors
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

#ifndef FHEDP_ERRORS_HPP_
#define FHEDP_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace fhedp {

// A fitting routine failed to converge or hit a singular system.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameters violate a constraint that the caller cannot recover from.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fhedp

#endif  // FHEDP_ERRORS_HPP_
