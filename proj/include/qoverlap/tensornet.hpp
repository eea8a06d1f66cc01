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

#include <climits>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "qoverlap/dense.hpp"
#include "qoverlap/povm_types.hpp"
#include "qoverlap/samples.hpp"
#include "qoverlap/types.hpp"

namespace qoverlap {

enum class TruncationKind { bond, kraus };

struct TruncationEntry {
    double delta = 0.0;
    TruncationKind kind = TruncationKind::bond;
    int site = 0;
};

/// Discarded weights, in the order the truncations happened.
class TruncationLog {
public:
    void append(double delta, TruncationKind kind, int site);
    [[nodiscard]] const std::vector<TruncationEntry>& entries() const { return entries_; }
    [[nodiscard]] std::size_t size() const { return entries_.size(); }
    [[nodiscard]] bool empty() const { return entries_.empty(); }

private:
    std::vector<TruncationEntry> entries_;
};

/// F >= 1 - (sum_d sqrt(2 (1 - sqrt(1 - delta_d^2))))^2 / 2, clamped at 0.
double fidelity_lower_bound(std::span<const double> deltas);
double fidelity_lower_bound(const TruncationLog& log);

/// Caps on bond (D) and Kraus (K) dimensions.
struct Caps {
    int max_bond = 16;
    int max_kraus = 8;
    static Caps unbounded() { return {INT_MAX, INT_MAX}; }
};

struct SvdSplit {
    CMatrix u;      ///< rows x kept, orthonormal columns
    RVector s;      ///< kept singular values, renormalized to unit 2-norm
    CMatrix vh;     ///< kept x cols
    double delta = 0.0;  ///< sqrt(discarded weight / total weight)
    int discarded = 0;
};

/// SVD keeping at most `max_dim` singular values. Values below 1e-14 of the
/// largest are dropped as numerical zeros and still count toward delta.
SvdSplit truncated_svd(const CMatrix& m, int max_dim);

/// Local tensor A[l][p][k][r] with physical dimension 2.
struct SiteTensor {
    int left = 1;
    int kraus = 1;
    int right = 1;
    std::vector<cplx> data;

    SiteTensor() = default;
    SiteTensor(int l, int k, int r) : left(l), kraus(k), right(r), data(static_cast<std::size_t>(l * 2 * k * r)) {}
    [[nodiscard]] std::size_t index(int l, int p, int k, int r) const {
        return static_cast<std::size_t>(((l * 2 + p) * kraus + k) * right + r);
    }
    cplx& operator()(int l, int p, int k, int r) { return data[index(l, p, k, r)]; }
    cplx operator()(int l, int p, int k, int r) const { return data[index(l, p, k, r)]; }
};

namespace detail {

/// Chain of site tensors X with rho = X X^dagger (Kraus index contracted).
/// Keeps a single orthogonality center; all sites left of it are left
/// orthonormal and all sites right of it right orthonormal.
class Chain {
public:
    Chain() = default;
    explicit Chain(std::vector<SiteTensor> sites);

    [[nodiscard]] int n() const { return static_cast<int>(sites_.size()); }
    [[nodiscard]] int center() const { return center_; }
    [[nodiscard]] const SiteTensor& site(int i) const { return sites_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] const std::vector<SiteTensor>& sites() const { return sites_; }
    [[nodiscard]] int max_bond() const;
    [[nodiscard]] int max_kraus() const;

    void move_center(int site);
    void apply_one(const Mat2& u, int site);
    /// Gate on (site, site + 1), basis |p_site p_site+1>.
    void apply_two(const Eigen::Matrix4cd& g, int site, TruncationLog& log, const Caps& caps);
    void apply_kraus(const KrausSet& k, int site, TruncationLog& log, const Caps& caps);
    /// Tr(X X^dagger) by full contraction.
    [[nodiscard]] double norm_squared() const;
    void normalize();

    [[nodiscard]] CMatrix dense_density() const;
    [[nodiscard]] CVector dense_vector() const;  ///< only valid when every Kraus dim is 1
    [[nodiscard]] SampleRecord sample(const QubitPOVM& povm, std::size_t shots, std::uint64_t seed) const;

    static Chain concatenate(const Chain& a, const Chain& b);

private:
    void left_orthonormalize(int site);
    void right_orthonormalize(int site);

    std::vector<SiteTensor> sites_;
    int center_ = 0;
};

}  // namespace detail

/// Pure state as a matrix product state (Kraus dimension 1 everywhere).
class Mps {
public:
    static Mps zero(int n);
    static Mps random(const RandomStateSpec& spec);
    static Mps from_local_tensors(const std::vector<LocalTensor>& tensors);
    /// Exact decomposition of a dense pure state by successive SVDs.
    static Mps from_dense(const DenseState& state);
    /// Registers side by side: sites of `a` then sites of `b`.
    static Mps concatenate(const Mps& a, const Mps& b);

    [[nodiscard]] int n() const { return chain_.n(); }
    [[nodiscard]] int max_bond() const { return chain_.max_bond(); }
    [[nodiscard]] const detail::Chain& chain() const { return chain_; }

    void apply_single_qubit_gate(const Mat2& u, int site);
    void apply_two_qubit_gate(const Eigen::Matrix4cd& g, int site, TruncationLog& log, const Caps& caps);

private:
    explicit Mps(detail::Chain c) : chain_(std::move(c)) {}
    detail::Chain chain_;
    friend class Lpdo;
};

/// Locally purified density operator; positive by construction.
class Lpdo {
public:
    static Lpdo zero(int n);
    static Lpdo from_mps(const Mps& mps);

    [[nodiscard]] int n() const { return chain_.n(); }
    [[nodiscard]] int max_bond() const { return chain_.max_bond(); }
    [[nodiscard]] int max_kraus() const { return chain_.max_kraus(); }
    [[nodiscard]] double trace() const { return chain_.norm_squared(); }
    [[nodiscard]] const detail::Chain& chain() const { return chain_; }

    void apply_single_qubit_gate(const Mat2& u, int site);
    void apply_two_qubit_gate(const Eigen::Matrix4cd& g, int site, TruncationLog& log, const Caps& caps);
    void apply_channel(const KrausSet& kraus, int site, TruncationLog& log, const Caps& caps);

private:
    explicit Lpdo(detail::Chain c) : chain_(std::move(c)) {}
    detail::Chain chain_;
};

using TnState = std::variant<Mps, Lpdo>;

/// Which CNOT qubits receive a depolarizing channel.
enum class NoiseTarget { both, target_only };

Eigen::Matrix4cd cnot_matrix(bool control_first);

TnState apply_single_qubit_gate(TnState state, const Mat2& u, int site);

/// Nearest-neighbour CNOT followed, when lambda > 0, by depolarizing channels.
/// An MPS is promoted to an LPDO before noise is applied.
TnState apply_cnot(TnState state, int control, int target, double lambda, TruncationLog& log,
                   const Caps& caps = Caps{}, NoiseTarget noise_on = NoiseTarget::both);

DenseState to_dense(const Mps& state);
DenseState to_dense(const Lpdo& state);
DenseState to_dense(const TnState& state);

/// Exact ancestral sampling, one qubit at a time, of a product POVM.
SampleRecord sample_from_tn(const Mps& state, const QubitPOVM& povm, std::size_t shots, std::uint64_t seed);
SampleRecord sample_from_tn(const Lpdo& state, const QubitPOVM& povm, std::size_t shots, std::uint64_t seed);
SampleRecord sample_from_tn(const TnState& state, const QubitPOVM& povm, std::size_t shots, std::uint64_t seed);

}  // namespace qoverlap
