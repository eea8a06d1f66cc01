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
#include <variant>
#include <vector>

#include "qoverlap/povm_types.hpp"
#include "qoverlap/types.hpp"

namespace qoverlap {

inline constexpr int kDenseQubitCap = 12;

/// Exact n-qubit state, either a normalized amplitude vector or a density
/// matrix. Immutable after construction.
class DenseState {
public:
    static DenseState pure(CVector amplitudes);
    static DenseState mixed(CMatrix rho);
    /// |0...0>.
    static DenseState zero(int n);

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] std::uint64_t dim() const { return std::uint64_t{1} << n_; }
    [[nodiscard]] bool is_pure() const { return std::holds_alternative<CVector>(data_); }
    [[nodiscard]] const CVector& vector() const { return std::get<CVector>(data_); }
    /// Density matrix; pure states are promoted.
    [[nodiscard]] CMatrix density() const;
    [[nodiscard]] DenseState as_mixed() const { return mixed(density()); }

private:
    DenseState(int n, std::variant<CVector, CMatrix> data) : n_(n), data_(std::move(data)) {}
    int n_ = 0;
    std::variant<CVector, CMatrix> data_;
};

enum class StateFamily { product, entangled };
enum class EntryDistribution {
    gaussian,      ///< i.i.d. standard complex Gaussian entries.
    uniform_real,  ///< i.i.d. real entries uniform on [0, 1).
};

struct RandomStateSpec {
    int n = 1;
    StateFamily family = StateFamily::product;
    int bond_dim = 1;
    std::uint64_t seed = 0;
    EntryDistribution entries = EntryDistribution::gaussian;

    static RandomStateSpec product(int n, std::uint64_t seed) { return {n, StateFamily::product, 1, seed}; }
    static RandomStateSpec entangled(int n, std::uint64_t seed, int bond_dim = 2) {
        return {n, StateFamily::entangled, bond_dim, seed};
    }
    void validate() const;
};

/// Site tensor of a random chain state, indexed (left, physical, right).
struct LocalTensor {
    int left = 1;
    int right = 1;
    std::vector<cplx> data;
    [[nodiscard]] cplx& at(int l, int p, int r) { return data[static_cast<std::size_t>((l * 2 + p) * right + r)]; }
    [[nodiscard]] cplx at(int l, int p, int r) const {
        return data[static_cast<std::size_t>((l * 2 + p) * right + r)];
    }
};

/// Unnormalized local tensors shared by the dense and tensor-network
/// generators, so both produce the same state for the same spec.
std::vector<LocalTensor> draw_local_tensors(const RandomStateSpec& spec);

DenseState random_pure_state(const RandomStateSpec& spec);

/// Tr(rho sigma).
double exact_overlap(const DenseState& rho, const DenseState& sigma);

OutcomeDistribution born_probabilities(const DenseState& rho, const ProductPOVM& povm);

/// sum_m K_m rho K_m^dagger on one qubit.
DenseState apply_channel_dense(const DenseState& rho, const KrausSet& kraus, int qubit);

DenseState apply_single_qubit_dense(const DenseState& state, const Mat2& u, int qubit);
/// `u` acts on the ordered pair (q1, q2) with basis |b_q1 b_q2>.
DenseState apply_two_qubit_dense(const DenseState& state, const Eigen::Matrix4cd& u, int q1, int q2);

/// Reduced density matrix of a single qubit.
Mat2 reduced_single_qubit(const DenseState& state, int qubit);

double trace_distance(const DenseState& a, const DenseState& b);
/// Uhlmann fidelity Tr sqrt(sqrt(a) b sqrt(a)).
double uhlmann_fidelity(const DenseState& a, const DenseState& b);

/// Concatenates registers: |a> (x) |b>.
DenseState tensor_product(const DenseState& a, const DenseState& b);

}  // namespace qoverlap
