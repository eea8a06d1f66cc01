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

#include <optional>
#include <string>
#include <vector>

#include "qoverlap/types.hpp"

namespace qoverlap {

/// Bloch parameterization of one POVM element: M = weight * (I + r.sigma) / 2.
struct BlochElement {
    double weight = 0.0;
    Eigen::Vector3d r = Eigen::Vector3d::UnitZ();
};

/// Single-qubit POVM: m positive 2x2 operators summing to the identity.
class QubitPOVM {
public:
    QubitPOVM() = default;
    /// Validates positivity and completeness (tolerance 1e-10).
    QubitPOVM(std::string name, std::vector<Mat2> elements);
    static QubitPOVM from_bloch(std::string name, const std::vector<BlochElement>& elements);

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] int size() const { return static_cast<int>(elements_.size()); }
    [[nodiscard]] const Mat2& operator[](int a) const { return elements_[static_cast<std::size_t>(a)]; }
    [[nodiscard]] const std::vector<Mat2>& elements() const { return elements_; }
    [[nodiscard]] const std::optional<std::vector<BlochElement>>& bloch() const { return bloch_; }

    /// Dimension of the real span of the elements inside the Hermitian 2x2 space.
    [[nodiscard]] int span_rank(double tol = 1e-8) const;
    [[nodiscard]] bool informationally_complete(double tol = 1e-8) const { return span_rank(tol) == 4; }

private:
    std::string name_;
    std::vector<Mat2> elements_;
    std::optional<std::vector<BlochElement>> bloch_;
};

/// n-fold product of a single-qubit POVM. Outcome tuples are flattened with
/// qubit 0 as the most significant digit (base m).
class ProductPOVM {
public:
    ProductPOVM(QubitPOVM factor, int n);

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] int outcomes_per_qubit() const { return factor_.size(); }
    [[nodiscard]] std::uint64_t outcome_count() const;
    [[nodiscard]] const QubitPOVM& factor() const { return factor_; }

private:
    QubitPOVM factor_;
    int n_;
};

/// Full distribution over flattened outcome tuples.
struct OutcomeDistribution {
    int n = 0;
    int m = 0;
    std::vector<double> p;
};

/// Kraus operators of a single-qubit channel.
struct KrausSet {
    std::vector<Mat2> ops;

    /// K1 = sqrt((4 - 3 lambda)/4) I, K2..4 = sqrt(lambda/4) X, Y, Z.
    static KrausSet depolarizing(double lambda);
    [[nodiscard]] double completeness_error() const;
};

}  // namespace qoverlap
