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

#include "qoverlap/dense.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qoverlap/rng.hpp"

namespace qoverlap {
namespace {

int qubits_for_dim(std::uint64_t dim) {
    int n = 0;
    while ((std::uint64_t{1} << n) < dim) {
        ++n;
    }
    if ((std::uint64_t{1} << n) != dim) {
        throw DimensionError("state dimension " + std::to_string(dim) + " is not a power of two");
    }
    return n;
}

void check_cap(int n) {
    if (n < 0 || n > kDenseQubitCap) {
        throw DimensionError("dense states support at most " + std::to_string(kDenseQubitCap) +
                                " qubits, got " + std::to_string(n));
    }
}

void check_qubit(int n, int q) {
    if (q < 0 || q >= n) {
        throw PreconditionError("qubit index " + std::to_string(q) + " outside 0.." + std::to_string(n - 1));
    }
}

// Applies `u` to the axis of `qubit` of every column of `m` (rows are the
// state index).
void left_apply(CMatrix& m, const Mat2& u, int n, int qubit) {
    const Eigen::Index stride = Eigen::Index{1} << (n - 1 - qubit);
    const Eigen::Index dim = m.rows();
    for (Eigen::Index base = 0; base < dim; base += 2 * stride) {
        for (Eigen::Index off = 0; off < stride; ++off) {
            const Eigen::Index i0 = base + off;
            const Eigen::Index i1 = i0 + stride;
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                const cplx a = m(i0, c);
                const cplx b = m(i1, c);
                m(i0, c) = u(0, 0) * a + u(0, 1) * b;
                m(i1, c) = u(1, 0) * a + u(1, 1) * b;
            }
        }
    }
}

void left_apply2(CMatrix& m, const Eigen::Matrix4cd& u, int n, int q1, int q2) {
    const Eigen::Index s1 = Eigen::Index{1} << (n - 1 - q1);
    const Eigen::Index s2 = Eigen::Index{1} << (n - 1 - q2);
    const Eigen::Index dim = m.rows();
    for (Eigen::Index x = 0; x < dim; ++x) {
        if ((x & s1) || (x & s2)) {
            continue;
        }
        const Eigen::Index idx[4] = {x, x | s2, x | s1, x | s1 | s2};
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            cplx v[4];
            for (int k = 0; k < 4; ++k) {
                v[k] = m(idx[k], c);
            }
            for (int r = 0; r < 4; ++r) {
                cplx acc = 0;
                for (int k = 0; k < 4; ++k) {
                    acc += u(r, k) * v[k];
                }
                m(idx[r], c) = acc;
            }
        }
    }
}

}  // namespace

DenseState DenseState::pure(CVector amplitudes) {
    const int n = qubits_for_dim(static_cast<std::uint64_t>(amplitudes.size()));
    check_cap(n);
    if (std::abs(amplitudes.squaredNorm() - 1.0) > 1e-12) {
        throw PreconditionError("pure state is not normalized: |psi|^2 = " +
                                std::to_string(amplitudes.squaredNorm()));
    }
    return DenseState(n, std::move(amplitudes));
}

DenseState DenseState::mixed(CMatrix rho) {
    if (rho.rows() != rho.cols()) {
        throw DimensionError("density matrix must be square");
    }
    const int n = qubits_for_dim(static_cast<std::uint64_t>(rho.rows()));
    check_cap(n);
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
        throw PreconditionError("density matrix is not Hermitian");
    }
    if (std::abs(rho.trace() - cplx(1.0)) > 1e-12) {
        throw PreconditionError("density matrix trace is " + std::to_string(rho.trace().real()));
    }
    if (n <= 8) {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(rho, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10) {
            throw PreconditionError("density matrix has a negative eigenvalue");
        }
    }
    return DenseState(n, std::move(rho));
}

DenseState DenseState::zero(int n) {
    check_cap(n);
    CVector v = CVector::Zero(static_cast<Eigen::Index>(pow2(n)));
    v(0) = 1.0;
    return DenseState(n, std::move(v));
}

CMatrix DenseState::density() const {
    if (is_pure()) {
        const CVector& v = vector();
        return v * v.adjoint();
    }
    return std::get<CMatrix>(data_);
}

void RandomStateSpec::validate() const {
    if (n < 1) {
        throw PreconditionError("random state needs n >= 1");
    }
    if (bond_dim < 1) {
        throw PreconditionError("bond_dim must be >= 1");
    }
    if ((family == StateFamily::product) != (bond_dim == 1)) {
        throw PreconditionError("product family requires bond_dim = 1 and entangled requires bond_dim >= 2");
    }
}

std::vector<LocalTensor> draw_local_tensors(const RandomStateSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::vector<LocalTensor> sites(static_cast<std::size_t>(spec.n));
    for (int k = 0; k < spec.n; ++k) {
        LocalTensor& t = sites[static_cast<std::size_t>(k)];
        t.left = k == 0 ? 1 : spec.bond_dim;
        t.right = k == spec.n - 1 ? 1 : spec.bond_dim;
        t.data.resize(static_cast<std::size_t>(t.left * 2 * t.right));
        for (cplx& x : t.data) {
            x = spec.entries == EntryDistribution::gaussian ? rng.complex_normal() : cplx(rng.uniform(), 0.0);
        }
    }
    return sites;
}

DenseState random_pure_state(const RandomStateSpec& spec) {
    spec.validate();
    check_cap(spec.n);
    const auto sites = draw_local_tensors(spec);
    // psi(prefix, bond)
    CMatrix psi = CMatrix::Ones(1, 1);
    for (const LocalTensor& t : sites) {
        CMatrix next = CMatrix::Zero(psi.rows() * 2, t.right);
        for (Eigen::Index x = 0; x < psi.rows(); ++x) {
            for (int p = 0; p < 2; ++p) {
                for (int r = 0; r < t.right; ++r) {
                    cplx acc = 0;
                    for (int l = 0; l < t.left; ++l) {
                        acc += psi(x, l) * t.at(l, p, r);
                    }
                    next(x * 2 + p, r) = acc;
                }
            }
        }
        psi = std::move(next);
    }
    CVector v = psi.col(0);
    v /= v.norm();
    return DenseState::pure(std::move(v));
}

double exact_overlap(const DenseState& rho, const DenseState& sigma) {
    if (rho.n() != sigma.n()) {
        throw DimensionError("overlap of states with different qubit counts");
    }
    if (rho.is_pure() && sigma.is_pure()) {
        return std::norm(rho.vector().dot(sigma.vector()));
    }
    if (rho.is_pure() || sigma.is_pure()) {
        const DenseState& p = rho.is_pure() ? rho : sigma;
        const CMatrix m = (rho.is_pure() ? sigma : rho).density();
        return (p.vector().adjoint() * m * p.vector())(0, 0).real();
    }
    const CMatrix a = rho.density();
    const CMatrix b = sigma.density();
    // Tr(ab) = sum_ij a_ij b_ji
    return (a.cwiseProduct(b.transpose())).sum().real();
}

OutcomeDistribution born_probabilities(const DenseState& rho, const ProductPOVM& povm) {
    if (rho.n() != povm.n()) {
        throw DimensionError("POVM acts on " + std::to_string(povm.n()) + " qubits, state has " +
                             std::to_string(rho.n()));
    }
    const int n = rho.n();
    const int m = povm.outcomes_per_qubit();
    if (povm.outcome_count() > (std::uint64_t{1} << 24)) {
        throw PreconditionError("full outcome distribution too large to materialize");
    }
    // work[o][r][c], r and c over the not-yet-measured qubits.
    std::vector<cplx> work;
    {
        const CMatrix d = rho.density();
        const auto dim = static_cast<std::size_t>(d.rows());
        work.resize(dim * dim);
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = 0; c < dim; ++c) {
                work[r * dim + c] = d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
            }
        }
    }
    std::size_t outcomes = 1;
    for (int k = 0; k < n; ++k) {
        const std::size_t rest = std::size_t{1} << (n - k - 1);
        const std::size_t dim = 2 * rest;
        std::vector<cplx> next(outcomes * static_cast<std::size_t>(m) * rest * rest);
        for (std::size_t o = 0; o < outcomes; ++o) {
            const cplx* w = work.data() + o * dim * dim;
            for (int a = 0; a < m; ++a) {
                const Mat2& el = povm.factor()[a];
                cplx* out = next.data() + (o * static_cast<std::size_t>(m) + static_cast<std::size_t>(a)) * rest * rest;
                for (std::size_t rr = 0; rr < rest; ++rr) {
                    for (std::size_t cc = 0; cc < rest; ++cc) {
                        cplx acc = 0;
                        for (int r0 = 0; r0 < 2; ++r0) {
                            for (int c0 = 0; c0 < 2; ++c0) {
                                acc += w[(static_cast<std::size_t>(r0) * rest + rr) * dim +
                                         static_cast<std::size_t>(c0) * rest + cc] *
                                       el(c0, r0);
                            }
                        }
                        out[rr * rest + cc] = acc;
                    }
                }
            }
        }
        work = std::move(next);
        outcomes *= static_cast<std::size_t>(m);
    }
    OutcomeDistribution dist{n, m, std::vector<double>(outcomes)};
    for (std::size_t o = 0; o < outcomes; ++o) {
        dist.p[o] = work[o].real();
    }
    return dist;
}

DenseState apply_channel_dense(const DenseState& rho, const KrausSet& kraus, int qubit) {
    check_qubit(rho.n(), qubit);
    if (kraus.completeness_error() > 1e-12) {
        throw PreconditionError("Kraus set is not trace preserving");
    }
    const CMatrix in = rho.density();
    CMatrix out = CMatrix::Zero(in.rows(), in.cols());
    for (const Mat2& k : kraus.ops) {
        CMatrix t = in;
        left_apply(t, k, rho.n(), qubit);
        CMatrix ta = t.adjoint();
        left_apply(ta, k, rho.n(), qubit);
        out += ta.adjoint();
    }
    out = 0.5 * (out + out.adjoint()).eval();
    return DenseState::mixed(std::move(out));
}

DenseState apply_single_qubit_dense(const DenseState& state, const Mat2& u, int qubit) {
    check_qubit(state.n(), qubit);
    if (state.is_pure()) {
        CMatrix v = state.vector();
        left_apply(v, u, state.n(), qubit);
        CVector out = v.col(0);
        out.normalize();
        return DenseState::pure(std::move(out));
    }
    CMatrix t = state.density();
    left_apply(t, u, state.n(), qubit);
    CMatrix ta = t.adjoint();
    left_apply(ta, u, state.n(), qubit);
    CMatrix out = ta.adjoint();
    out = 0.5 * (out + out.adjoint()).eval();
    return DenseState::mixed(std::move(out));
}

DenseState apply_two_qubit_dense(const DenseState& state, const Eigen::Matrix4cd& u, int q1, int q2) {
    check_qubit(state.n(), q1);
    check_qubit(state.n(), q2);
    if (q1 == q2) {
        throw PreconditionError("two-qubit gate needs distinct qubits");
    }
    if (state.is_pure()) {
        CMatrix v = state.vector();
        left_apply2(v, u, state.n(), q1, q2);
        CVector out = v.col(0);
        out.normalize();
        return DenseState::pure(std::move(out));
    }
    CMatrix t = state.density();
    left_apply2(t, u, state.n(), q1, q2);
    CMatrix ta = t.adjoint();
    left_apply2(ta, u, state.n(), q1, q2);
    CMatrix out = ta.adjoint();
    out = 0.5 * (out + out.adjoint()).eval();
    return DenseState::mixed(std::move(out));
}

Mat2 reduced_single_qubit(const DenseState& state, int qubit) {
    check_qubit(state.n(), qubit);
    const CMatrix d = state.density();
    const Eigen::Index stride = Eigen::Index{1} << (state.n() - 1 - qubit);
    Mat2 out = Mat2::Zero();
    for (Eigen::Index x = 0; x < d.rows(); ++x) {
        if (x & stride) {
            continue;
        }
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                out(a, b) += d(x | (a ? stride : 0), x | (b ? stride : 0));
            }
        }
    }
    return out;
}

double trace_distance(const DenseState& a, const DenseState& b) {
    if (a.n() != b.n()) {
        throw DimensionError("trace distance of states with different qubit counts");
    }
    const CMatrix diff = a.density() - b.density();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(diff, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double uhlmann_fidelity(const DenseState& a, const DenseState& b) {
    if (a.n() != b.n()) {
        throw DimensionError("fidelity of states with different qubit counts");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(a.density());
    const RVector vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    const CMatrix sqrt_a = es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
    CMatrix inner = sqrt_a * b.density() * sqrt_a;
    inner = 0.5 * (inner + inner.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMatrix> es2(inner, Eigen::EigenvaluesOnly);
    return es2.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
}

DenseState tensor_product(const DenseState& a, const DenseState& b) {
    check_cap(a.n() + b.n());
    if (a.is_pure() && b.is_pure()) {
        CVector v(static_cast<Eigen::Index>(a.dim() * b.dim()));
        for (Eigen::Index i = 0; i < a.vector().size(); ++i) {
            v.segment(i * b.vector().size(), b.vector().size()) = a.vector()(i) * b.vector();
        }
        v.normalize();
        return DenseState::pure(std::move(v));
    }
    const CMatrix da = a.density();
    const CMatrix db = b.density();
    CMatrix out(da.rows() * db.rows(), da.cols() * db.cols());
    for (Eigen::Index i = 0; i < da.rows(); ++i) {
        for (Eigen::Index j = 0; j < da.cols(); ++j) {
            out.block(i * db.rows(), j * db.cols(), db.rows(), db.cols()) = da(i, j) * db;
        }
    }
    return DenseState::mixed(std::move(out));
}

}  // namespace qoverlap
