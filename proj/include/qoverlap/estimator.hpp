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
#include <optional>

#include "qoverlap/dense.hpp"
#include "qoverlap/povm.hpp"
#include "qoverlap/povm_types.hpp"
#include "qoverlap/samples.hpp"
#include "qoverlap/tensornet.hpp"

namespace qoverlap {

/// How rho shots are combined with sigma shots.
enum class Pairing {
    pooled,  ///< every rho shot against every sigma shot (empirical distributions contracted)
    paired,  ///< shot i of rho against shot i of sigma only
};

struct EstimateOptions {
    Pairing pairing = Pairing::pooled;
};

struct EstimateResult {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t shots = 0;  ///< copies of each state consumed
    Pairing pairing = Pairing::pooled;
};

struct SamplePlan {
    double nu = 0.0;
    int n = 0;
    double epsilon = 0.0;
    double delta = 0.0;
    std::uint64_t shots = 0;  ///< smallest N with N > nu^n ln(2/delta) / (2 eps^2)
    /// Range of the n-qubit tensor and the Hoeffding count it implies, when
    /// the single-qubit tensor is known.
    std::optional<double> range_n;
    std::optional<std::uint64_t> range_shots;
};

SampleRecord sample_outcomes(const DenseState& state, const ProductPOVM& povm, std::size_t shots,
                             std::uint64_t seed);
SampleRecord sample_outcomes(const Mps& state, const ProductPOVM& povm, std::size_t shots, std::uint64_t seed);
SampleRecord sample_outcomes(const Lpdo& state, const ProductPOVM& povm, std::size_t shots, std::uint64_t seed);
SampleRecord sample_outcomes(const TnState& state, const ProductPOVM& povm, std::size_t shots, std::uint64_t seed);
/// Draws from a precomputed outcome distribution; povm_id is left empty.
SampleRecord sample_from_distribution(const OutcomeDistribution& dist, std::size_t shots, std::uint64_t seed);

/// Monte-Carlo estimate of Tr(rho sigma) from the two records.
EstimateResult estimate_overlap(const SampleRecord& rho, const SampleRecord& sigma, const EstimatorTensor& tau_hat,
                                const EstimateOptions& options = {});

/// Full bilinear contraction over Born distributions; n <= 4.
double exact_expectation(const DenseState& rho, const DenseState& sigma, const EstimatorTensor& tau_hat,
                         const ProductPOVM& povm);

/// Contraction sum_{a,b} p(a) tau_hat^{(x)n}(a, b) q(b) of two outcome distributions.
double contract_distributions(const OutcomeDistribution& p, const OutcomeDistribution& q,
                              const EstimatorTensor& tau_hat);

/// Largest minus smallest entry of the n-fold tensor power.
double tensor_power_range(const EstimatorTensor& tau_hat, int n);

SamplePlan hoeffding_plan(double nu, int n, double epsilon, double delta);
SamplePlan hoeffding_plan(const EstimatorTensor& tau_hat, int n, double epsilon, double delta);

}  // namespace qoverlap
