// Copyright 2026 The qoverlap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <vector>

#include "qoverlap/dense.hpp"
#include "qoverlap/estimator.hpp"
#include "qoverlap/rng.hpp"
#include "qoverlap/tensornet.hpp"

namespace qoverlap {

/// Local random measurement settings shared by both states.
struct RandomMeasSettings {
    int n = 0;
    std::size_t n_u = 0;  ///< number of unitary settings
    std::size_t n_m = 0;  ///< shots per setting and per state
    std::vector<std::vector<Mat2>> unitaries;  ///< [setting][qubit]
    std::uint64_t seed = 0;

    void validate() const;
    bool operator==(const RandomMeasSettings&) const = default;
};

/// Haar-random single-qubit unitary (QR of a complex Ginibre matrix with the
/// phases of R's diagonal removed).
Mat2 haar_unitary(Rng& rng);

RandomMeasSettings generate_settings(int n, std::size_t n_u, std::uint64_t seed, std::size_t n_m = 100);

/// sum_{s,s'} (-2)^{-D(s,s')} p(s) q(s') for distributions over n bits, D the
/// Hamming distance.
double hamming_kernel(const std::vector<double>& p, const std::vector<double>& q, int n);

/// Overlap from N_M shots per setting on each state; the two shot records use
/// independent streams derived from the settings seed. std_error is the spread
/// over settings.
EstimateResult estimate_overlap_rm(const DenseState& rho, const DenseState& sigma, const RandomMeasSettings& settings);
EstimateResult estimate_overlap_rm(const Mps& rho, const Mps& sigma, const RandomMeasSettings& settings);

/// Same estimator with the empirical distributions replaced by the exact
/// rotated Born distributions; isolates the error due to finite N_U.
EstimateResult estimate_overlap_rm_exact(const DenseState& rho, const DenseState& sigma,
                                         const RandomMeasSettings& settings);

}  // namespace qoverlap
