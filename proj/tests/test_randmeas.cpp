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

#include <gtest/gtest.h>

#include <cmath>

#include "oracles/oracle.hpp"
#include "qoverlap/randmeas.hpp"
#include "qoverlap/rng.hpp"

using namespace qoverlap;

namespace {

// Direct double sum over all bitstring pairs.
double kernel_brute_force(const std::vector<double>& p, const std::vector<double>& q, int n) {
    double acc = 0.0;
    for (std::size_t s = 0; s < p.size(); ++s) {
        for (std::size_t t = 0; t < q.size(); ++t) {
            int d = 0;
            for (int k = 0; k < n; ++k) {
                d += static_cast<int>(((s ^ t) >> k) & 1u);
            }
            acc += p[s] * q[t] / std::pow(-2.0, d);
        }
    }
    return acc;
}

DenseState basis_state(int n, std::uint64_t idx) { return DenseState::pure(oracle::basis(n, idx)); }

}  // namespace

TEST(RandMeasSettings, DeterministicAndValid) {
    const auto a = generate_settings(3, 20, 7, 50);
    const auto b = generate_settings(3, 20, 7, 50);
    EXPECT_EQ(a, b);
    EXPECT_NO_THROW(a.validate());
    EXPECT_EQ(a.unitaries.size(), 20u);
    EXPECT_EQ(a.unitaries[0].size(), 3u);
    EXPECT_NE(generate_settings(3, 20, 8, 50).unitaries[0][0], a.unitaries[0][0]);
    EXPECT_THROW(generate_settings(0, 5, 1), PreconditionError);
    EXPECT_THROW(generate_settings(2, 0, 1), PreconditionError);
    EXPECT_THROW(generate_settings(2, 5, 1, 0), PreconditionError);
}

TEST(RandMeasSettings, ValidationCatchesBadUnitaries) {
    auto s = generate_settings(2, 3, 1);
    s.unitaries[1][0] *= 2.0;
    EXPECT_THROW(s.validate(), PreconditionError);
    s = generate_settings(2, 3, 1);
    s.unitaries.pop_back();
    EXPECT_THROW(s.validate(), DimensionError);
}

TEST(Haar, OneDesignAverage) {
    Rng rng(11);
    Mat2 acc = Mat2::Zero();
    constexpr int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        const Mat2 u = haar_unitary(rng);
        ASSERT_LT((u.adjoint() * u - Mat2::Identity()).cwiseAbs().maxCoeff(), 1e-12);
        acc += u.col(0) * u.col(0).adjoint();
    }
    acc /= draws;
    EXPECT_LT((acc - 0.5 * Mat2::Identity()).cwiseAbs().maxCoeff(), 0.02);
}

TEST(Haar, TwoDesignFourthMoment) {
    Rng rng(12);
    double acc = 0.0;
    constexpr int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        acc += std::pow(std::norm(haar_unitary(rng)(0, 0)), 2);
    }
    EXPECT_NEAR(acc / draws, 1.0 / 3.0, 0.02);
}

TEST(HammingKernel, MatchesBruteForce) {
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n = 1; n <= 5; ++n) {
        std::vector<double> p(std::size_t{1} << n), q(std::size_t{1} << n);
        for (auto& x : p) {
            x = u(gen);
        }
        for (auto& x : q) {
            x = u(gen);
        }
        EXPECT_NEAR(hamming_kernel(p, q, n), kernel_brute_force(p, q, n), 1e-12);
    }
    EXPECT_THROW(hamming_kernel({1.0}, {1.0, 0.0}, 1), DimensionError);
}

TEST(RandMeasEstimate, PureStatePurity) {
    const auto s = generate_settings(1, 200, 21, 200);
    const DenseState zero = basis_state(1, 0);
    EXPECT_NEAR(estimate_overlap_rm(zero, zero, s).mean, 1.0, 0.05);
}

TEST(RandMeasEstimate, OrthogonalStates) {
    const auto s = generate_settings(1, 200, 22, 200);
    EXPECT_NEAR(estimate_overlap_rm(basis_state(1, 0), basis_state(1, 1), s).mean, 0.0, 0.05);
}

TEST(RandMeasEstimate, WidthMismatch) {
    const auto s = generate_settings(2, 3, 1);
    EXPECT_THROW(estimate_overlap_rm(basis_state(2, 0), basis_state(3, 0), s), DimensionError);
    EXPECT_THROW(estimate_overlap_rm(Mps::zero(3), Mps::zero(3), s), DimensionError);
}

TEST(RandMeasEstimate, ExactDistributionsConvergeInSettings) {
    for (int n = 1; n <= 3; ++n) {
        double err = 0.0;
        for (int pair = 0; pair < 10; ++pair) {
            const auto seed = static_cast<std::uint64_t>(100 * n + pair);
            const DenseState rho = DenseState::pure(oracle::random_chain_state(n, 2, seed));
            const DenseState sigma = DenseState::pure(oracle::random_chain_state(n, 2, seed + 50));
            const auto s = generate_settings(n, 2000, seed, 1);
            const double truth = std::norm(rho.vector().dot(sigma.vector()));
            err += std::abs(estimate_overlap_rm_exact(rho, sigma, s).mean - truth) / 10.0;
        }
        EXPECT_LT(err, 0.02) << "n=" << n;
    }
}

TEST(RandMeasEstimate, ExactMixedStateOverlap) {
    const oracle::M a = oracle::depolarize(oracle::ket_bra(oracle::random_chain_state(2, 2, 3)), 0, 2, 0.4);
    const oracle::M b = oracle::ket_bra(oracle::random_chain_state(2, 2, 4));
    const auto s = generate_settings(2, 4000, 9, 1);
    const double truth = (a * b).trace().real();
    const auto r = estimate_overlap_rm_exact(DenseState::mixed(a), DenseState::mixed(b), s);
    EXPECT_LT(std::abs(r.mean - truth), 4.0 * r.std_error + 1e-3);
}

TEST(RandMeasEstimate, DenseAndMpsPathsAgreeStatistically) {
    const DenseState rho = DenseState::pure(oracle::random_chain_state(3, 2, 61));
    const DenseState sigma = DenseState::pure(oracle::random_chain_state(3, 2, 62));
    const double truth = std::norm(rho.vector().dot(sigma.vector()));
    const auto s = generate_settings(3, 400, 63, 200);
    const auto d = estimate_overlap_rm(rho, sigma, s);
    const auto m = estimate_overlap_rm(Mps::from_dense(rho), Mps::from_dense(sigma), s);
    EXPECT_EQ(d.shots, 400u * 200u);
    EXPECT_LT(std::abs(d.mean - truth), 4.0 * d.std_error);
    EXPECT_LT(std::abs(m.mean - truth), 4.0 * m.std_error);
    // Same settings and seeds: runs are reproducible.
    EXPECT_EQ(estimate_overlap_rm(rho, sigma, s).mean, d.mean);
}
