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
#include <filesystem>
#include <string>

#include "qoverlap/dense.hpp"
#include "qoverlap/povm_types.hpp"

namespace qoverlap {

/// Gram matrix [T]_ab = Tr(M_a M_b) of a single-qubit POVM. The n-qubit
/// matrix is its n-fold Kronecker power and is never formed explicitly.
struct TMatrix {
    RMatrix entries;
};

/// Any tau with T tau T = T.
struct GeneralizedInverse {
    RMatrix entries;
};

/// Single-qubit factor of the estimator tensor tau1 T tau2^t and its range.
struct EstimatorTensor {
    RMatrix entries;
    double negativity = 0.0;
};

/// Outcome order (z+, z-, x+, x-, y+, y-); each element is |a><a| / 3.
QubitPOVM pauli6();
/// {|0><0|, |1><1|}. Not informationally complete; used for circuit readout.
QubitPOVM computational_basis();
/// Tetrahedral SIC, weights 1/2.
QubitPOVM sic4();

TMatrix compute_t_matrix(const QubitPOVM& povm);

/// Moore-Penrose pseudoinverse from the spectral decomposition of T.
GeneralizedInverse pseudoinverse(const TMatrix& t);

/// max |T tau T - T|.
double generalized_inverse_residual(const TMatrix& t, const RMatrix& tau);
bool is_generalized_inverse(const TMatrix& t, const RMatrix& tau);

/// tau = T+ + W - T+ T W T T+, the general solution of T tau T = T.
GeneralizedInverse generalized_inverse_from(const TMatrix& t, const RMatrix& w);
/// W with i.i.d. N(0, scale^2) entries drawn from `seed`.
GeneralizedInverse random_generalized_inverse(const TMatrix& t, std::uint64_t seed, double scale = 1.0);

/// sum_{a,a'} P(a) tau_{aa'} M_{a'} with tau applied per qubit.
DenseState reconstruct_state(const OutcomeDistribution& p, const GeneralizedInverse& tau, const ProductPOVM& povm);
/// Same contraction without positivity or trace validation; returns the raw operator.
CMatrix reconstruct_operator(const OutcomeDistribution& p, const GeneralizedInverse& tau, const ProductPOVM& povm);

/// max entry - min entry.
double negativity(const RMatrix& m);

EstimatorTensor estimator_tensor(const GeneralizedInverse& tau1, const GeneralizedInverse& tau2, const TMatrix& t);

/// The 6x6 block matrix with blocks [[2, -1], [-1, 2]] that turns the
/// local-Clifford shadow reconstruction into a Pauli-6 representation.
RMatrix shadow_tensor();

struct ShadowEquivalenceReport {
    double raw_deviation = 0.0;            ///< max |tilde T - T+ T|, unscaled
    double rescaled_deviation = 0.0;       ///< max |3 tilde T - T+ T|
    double rescaled_inverse_residual = 0.0;///< max |T (3 tilde) T - T|
    double estimator_deviation = 0.0;      ///< max |tau_hat(3 tilde, 3 tilde) - tau_hat(T+, T+)|
    double mixed_estimator_deviation = 0.0;///< max |tau_hat(3 tilde, T+) - tau_hat(T+, T+)|
    bool rescaled_is_generalized_inverse = false;
    [[nodiscard]] bool passed() const {
        return rescaled_is_generalized_inverse && rescaled_deviation < 1e-12 && estimator_deviation < 1e-10 &&
               mixed_estimator_deviation < 1e-10;
    }
};

ShadowEquivalenceReport verify_shadow_equivalence();

struct GridSearchOptions {
    int outcomes = 6;               ///< 4, 6 or 8
    double resolution_deg = 15.0;
    double refine_deg = 5.0;        ///< <= 0 disables the refinement pass
    double refine_window_deg = 15.0;
};

struct GridSearchResult {
    QubitPOVM povm;
    double nu = 0.0;
    std::uint64_t evaluated = 0;
    std::uint64_t skipped = 0;  ///< non-IC or invalid (negative weight) candidates
};

/// Bloch-angle scan for the POVM whose pseudoinverse has the smallest range.
/// 6 and 8 outcomes: equal-weight antipodal pairs on 3 or 4 axes. 4 outcomes:
/// four free directions with the completeness weights solved for.
GridSearchResult grid_search_povm(const GridSearchOptions& options);

/// nu of T+ for one candidate, or nullopt when it is not IC.
std::optional<double> pseudoinverse_negativity(const QubitPOVM& povm);

struct McmcOptions {
    int steps = 10000;        ///< chain states including the start point
    double temperature = 0.05;
    double proposal_scale = 0.05;
    std::uint64_t seed = 0;
};

struct McmcResult {
    GeneralizedInverse tau;
    double nu_best = 0.0;
    double nu_start = 0.0;
    int accepted = 0;
};

/// Metropolis-Hastings walk on W in the generalized-inverse family, minimizing
/// the range of tau T tau^t. Starts at T+.
McmcResult mcmc_tau_search(const TMatrix& t, const McmcOptions& options);

void save_povm(const QubitPOVM& povm, const std::filesystem::path& path);
QubitPOVM load_povm(const std::filesystem::path& path);
std::string povm_to_json(const QubitPOVM& povm);
QubitPOVM povm_from_json(const std::string& text);

}  // namespace qoverlap
