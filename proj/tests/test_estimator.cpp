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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles/oracle.hpp"
#include "qoverlap/estimator.hpp"
#include "qoverlap/rng.hpp"

using namespace qoverlap;

namespace {

struct Fixture {
    TMatrix t = compute_t_matrix(pauli6());
    GeneralizedInverse tp = pseudoinverse(t);
    EstimatorTensor th = estimator_tensor(tp, tp, t);
};

std::vector<double> empirical(const SampleRecord& r, std::size_t size) {
    std::vector<double> h(size, 0.0);
    for (std::size_t i = 0; i < r.shots(); ++i) {
        h[r.flat_index(i)] += 1.0 / static_cast<double>(r.shots());
    }
    return h;
}

// Pooled estimate by brute force over all shot pairs.
double pooled_bruteforce(const SampleRecord& a, const SampleRecord& b, const RMatrix& t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.shots(); ++i) {
        for (std::size_t j = 0; j < b.shots(); ++j) {
            double p = 1.0;
            for (int k = 0; k < a.n; ++k) {
                p *= t(a.shot(i)[static_cast<std::size_t>(k)], b.shot(j)[static_cast<std::size_t>(k)]);
            }
            acc += p;
        }
    }
    return acc / static_cast<double>(a.shots() * b.shots());
}

}  // namespace

TEST(SampleOutcomes, MaximallyMixedIsUniform) {
    const DenseState mm = DenseState::mixed(CMatrix::Identity(2, 2) / 2.0);
    const auto rec = sample_outcomes(mm, ProductPOVM(pauli6(), 1), 60000, 3);
    ASSERT_EQ(rec.shots(), 60000u);
    for (double f : empirical(rec, 6)) {
        EXPECT_NEAR(f, 1.0 / 6.0, 0.01);
    }
}

TEST(SampleOutcomes, ZeroStateNeverGivesZMinus) {
    const auto rec = sample_outcomes(DenseState::zero(1), ProductPOVM(pauli6(), 1), 20000, 5);
    EXPECT_EQ(std::count(rec.outcomes.begin(), rec.outcomes.end(), std::uint8_t{1}), 0);
    EXPECT_EQ(rec.povm_id, "pauli6");
}

TEST(SampleOutcomes, MpsMatchesDenseSampler) {
    const auto spec = RandomStateSpec::product(3, 21);
    const ProductPOVM povm(pauli6(), 3);
    const auto dense = sample_outcomes(random_pure_state(spec), povm, 50000, 1);
    const auto tn = sample_outcomes(Mps::random(spec), povm, 50000, 2);
    EXPECT_LT(oracle::tv_distance(empirical(dense, 216), empirical(tn, 216)), 0.02 + 0.03);
    const auto exact = born_probabilities(random_pure_state(spec), povm).p;
    EXPECT_LT(oracle::tv_distance(empirical(tn, 216), exact), 0.03);
}

TEST(SampleOutcomes, Errors) {
    EXPECT_THROW(sample_outcomes(DenseState::zero(1), ProductPOVM(pauli6(), 1), 0, 1), PreconditionError);
    EXPECT_THROW(sample_outcomes(DenseState::zero(2), ProductPOVM(pauli6(), 1), 10, 1), DimensionError);
}

TEST(SampleOutcomes, DeterministicUnderSeed) {
    const DenseState s = random_pure_state(RandomStateSpec::entangled(3, 1));
    const ProductPOVM povm(pauli6(), 3);
    EXPECT_EQ(sample_outcomes(s, povm, 100, 9), sample_outcomes(s, povm, 100, 9));
    EXPECT_NE(sample_outcomes(s, povm, 100, 9).outcomes, sample_outcomes(s, povm, 100, 10).outcomes);
}

TEST(ExactExpectation, Examples) {
    Fixture f;
    const ProductPOVM p1(pauli6(), 1);
    CVector one(2);
    one << 0, 1;
    EXPECT_NEAR(exact_expectation(DenseState::zero(1), DenseState::zero(1), f.th, p1), 1.0, 1e-12);
    EXPECT_NEAR(exact_expectation(DenseState::zero(1), DenseState::pure(one), f.th, p1), 0.0, 1e-12);
    const DenseState mm = DenseState::mixed(CMatrix::Identity(2, 2) / 2.0);
    EXPECT_NEAR(exact_expectation(mm, mm, f.th, p1), 0.5, 1e-12);
    CVector bell = CVector::Zero(4);
    bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
    const DenseState b = DenseState::pure(bell);
    EXPECT_NEAR(exact_expectation(b, b, f.th, ProductPOVM(pauli6(), 2)), 1.0, 1e-12);
}

TEST(ExactExpectation, MatchesOverlapOnRandomPairs) {
    Fixture f;
    for (int k = 0; k < 50; ++k) {
        const int n = 1 + k % 4;
        const auto fam = n == 1 ? RandomStateSpec::product(n, 2u * k) : RandomStateSpec::entangled(n, 2u * k);
        const auto fam2 = n == 1 ? RandomStateSpec::product(n, 2u * k + 1) : RandomStateSpec::entangled(n, 2u * k + 1);
        const DenseState a = random_pure_state(fam);
        const DenseState b = random_pure_state(fam2);
        const auto tau = random_generalized_inverse(f.t, 1000u + k);
        const auto th = estimator_tensor(tau, f.tp, f.t);
        EXPECT_NEAR(exact_expectation(a, b, th, ProductPOVM(pauli6(), n)), exact_overlap(a, b), 1e-9);
    }
}

TEST(ExactExpectation, RejectsLargeN) {
    Fixture f;
    EXPECT_THROW(exact_expectation(DenseState::zero(5), DenseState::zero(5), f.th, ProductPOVM(pauli6(), 5)),
                 DimensionError);
}

TEST(EstimateOverlap, PairedFormulaOnHandRecords) {
    Fixture f;
    SampleRecord a{2, 6, "pauli6", "rho", 0, {0, 2, 1, 1, 4, 5}};
    SampleRecord b{2, 6, "pauli6", "sigma", 0, {0, 3, 0, 1}};
    const auto r = estimate_overlap(a, b, f.th, {Pairing::paired});
    const double v0 = f.th.entries(0, 0) * f.th.entries(2, 3);
    const double v1 = f.th.entries(1, 0) * f.th.entries(1, 1);
    EXPECT_EQ(r.shots, 2u);
    EXPECT_NEAR(r.mean, 0.5 * (v0 + v1), 1e-12);
    EXPECT_NEAR(r.std_error, std::abs(v0 - v1) / std::sqrt(2.0) / std::sqrt(2.0), 1e-12);
}

TEST(EstimateOverlap, PooledMatchesBruteForce) {
    Fixture f;
    for (int n : {1, 2, 9}) {
        const DenseState s = random_pure_state(RandomStateSpec::product(n, 3));
        const DenseState r = random_pure_state(RandomStateSpec::product(n, 4));
        const ProductPOVM povm(pauli6(), n);
        const auto a = sample_outcomes(r, povm, 300, 1);
        const auto b = sample_outcomes(s, povm, 250, 2);
        const auto est = estimate_overlap(a, b, f.th);
        EXPECT_EQ(est.pairing, Pairing::pooled);
        EXPECT_NEAR(est.mean, pooled_bruteforce(a, b, f.th.entries), 1e-9 * std::pow(9.0, n));
        EXPECT_GT(est.std_error, 0.0);
    }
}

TEST(EstimateOverlap, Errors) {
    Fixture f;
    SampleRecord a{1, 6, "pauli6", "", 0, {0}};
    SampleRecord other{1, 6, "other", "", 0, {0}};
    SampleRecord wide{2, 6, "pauli6", "", 0, {0, 0}};
    SampleRecord empty{1, 6, "pauli6", "", 0, {}};
    EXPECT_THROW(estimate_overlap(a, other, f.th), PreconditionError);
    EXPECT_THROW(estimate_overlap(a, wide, f.th), DimensionError);
    EXPECT_THROW(estimate_overlap(a, empty, f.th), PreconditionError);
    SampleRecord bad{1, 6, "pauli6", "", 0, {7}};
    EXPECT_THROW(estimate_overlap(a, bad, f.th), DimensionError);
}

TEST(EstimateOverlap, CoverageOnThreeQubits) {
    // 100 repetitions at N = 100000; |mean - truth| < 4 stderr in >= 95 of them.
    Fixture f;
    const DenseState r = random_pure_state(RandomStateSpec::entangled(3, 71));
    const DenseState s = random_pure_state(RandomStateSpec::entangled(3, 72));
    const double truth = exact_overlap(r, s);
    const ProductPOVM povm(pauli6(), 3);
    for (Pairing mode : {Pairing::pooled, Pairing::paired}) {
        int covered = 0;
        for (std::uint64_t rep = 0; rep < 100; ++rep) {
            const auto a = sample_outcomes(r, povm, 100000, derive_seed(rep, 1));
            const auto b = sample_outcomes(s, povm, 100000, derive_seed(rep, 2));
            const auto est = estimate_overlap(a, b, f.th, {mode});
            covered += std::abs(est.mean - truth) < 4.0 * est.std_error ? 1 : 0;
        }
        EXPECT_GE(covered, 95) << (mode == Pairing::pooled ? "pooled" : "paired");
    }
}

TEST(EstimateOverlap, SingleShotEstimatesAreUnbiased) {
    Fixture f;
    for (int n = 1; n <= 3; ++n) {
        const ProductPOVM povm(pauli6(), n);
        for (std::uint64_t k = 0; k < 10; ++k) {
            const auto fam = n == 1 ? RandomStateSpec::product(n, k) : RandomStateSpec::entangled(n, k);
            const auto fam2 = n == 1 ? RandomStateSpec::product(n, k + 99) : RandomStateSpec::entangled(n, k + 99);
            const DenseState r = random_pure_state(fam);
            const DenseState s = random_pure_state(fam2);
            const auto a = sample_outcomes(r, povm, 1000, 7 * k + n);
            const auto b = sample_outcomes(s, povm, 1000, 7 * k + n + 1000);
            // Paired over 1000 shots is 1000 independent N=1 estimates.
            const auto est = estimate_overlap(a, b, f.th, {Pairing::paired});
            EXPECT_LT(std::abs(est.mean - exact_overlap(r, s)), 5.0 * est.std_error) << n << " " << k;
        }
    }
}

TEST(EstimateOverlap, PairingShuffleInvariance) {
    Fixture f;
    const ProductPOVM povm(pauli6(), 2);
    const DenseState r = random_pure_state(RandomStateSpec::entangled(2, 5));
    const DenseState s = random_pure_state(RandomStateSpec::entangled(2, 6));
    const auto a = sample_outcomes(r, povm, 2000, 1);
    SampleRecord b = sample_outcomes(s, povm, 2000, 2);
    const double base = estimate_overlap(a, b, f.th, {Pairing::paired}).mean;
    std::vector<std::size_t> order(b.shots());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 gen(11);
    double sum = 0.0, sum2 = 0.0;
    const int reps = 50;
    for (int i = 0; i < reps; ++i) {
        std::shuffle(order.begin(), order.end(), gen);
        SampleRecord c = b;
        for (std::size_t j = 0; j < order.size(); ++j) {
            c.outcomes[2 * j] = b.outcomes[2 * order[j]];
            c.outcomes[2 * j + 1] = b.outcomes[2 * order[j] + 1];
        }
        const double m = estimate_overlap(a, c, f.th, {Pairing::paired}).mean;
        sum += m;
        sum2 += m * m;
    }
    const double mean = sum / reps;
    const double sd = std::sqrt(std::max(0.0, sum2 / reps - mean * mean));
    EXPECT_LT(std::abs(mean - base), 5.0 * std::max(sd, 1e-12));
    // The pooled estimate uses every pairing, so it is exactly shuffle invariant.
    EXPECT_NEAR(estimate_overlap(a, b, f.th).mean, pooled_bruteforce(a, b, f.th.entries), 1e-10);
}

TEST(HoeffdingPlan, Examples) {
    for (int n : {1, 3, 7}) {
        EXPECT_EQ(hoeffding_plan(1.0, n, 0.05, 0.05).shots, 738u);
    }
    EXPECT_EQ(hoeffding_plan(9.0, 1, 0.05, 0.05).shots, 6640u);  // 1800 ln 40 = 6639.98
    EXPECT_THROW(hoeffding_plan(9.0, 1, 0.05, 2.0), PreconditionError);
    EXPECT_THROW(hoeffding_plan(0.0, 1, 0.05, 0.05), PreconditionError);
    EXPECT_THROW(hoeffding_plan(9.0, 1, 1.5, 0.05), PreconditionError);
}

TEST(HoeffdingPlan, RangeBound) {
    Fixture f;
    const auto p1 = hoeffding_plan(f.th, 1, 0.1, 0.05);
    ASSERT_TRUE(p1.range_n.has_value());
    EXPECT_NEAR(*p1.range_n, 9.0, 1e-9);
    EXPECT_EQ(*p1.range_shots, static_cast<std::uint64_t>(std::floor(81.0 * std::log(40.0) / 0.02)) + 1);
    // Two qubits: entries range over products, max 25, min -20.
    EXPECT_NEAR(tensor_power_range(f.th, 2), 45.0, 1e-9);
}

TEST(HoeffdingPlan, CoverageWithPooledEstimates) {
    // Failure rate |estimate - truth| >= eps over 200 trials stays below delta + 0.03.
    Fixture f;
    for (int n : {1, 2}) {
        const auto plan = hoeffding_plan(9.0, n, 0.1, 0.05);
        const ProductPOVM povm(pauli6(), n);
        int failures = 0;
        for (std::uint64_t trial = 0; trial < 200; ++trial) {
            const auto fam = n == 1 ? RandomStateSpec::product(n, trial) : RandomStateSpec::entangled(n, trial);
            const auto fam2 =
                n == 1 ? RandomStateSpec::product(n, trial + 500) : RandomStateSpec::entangled(n, trial + 500);
            const DenseState r = random_pure_state(fam);
            const DenseState s = random_pure_state(fam2);
            const auto a = sample_outcomes(r, povm, plan.shots, derive_seed(trial, 11));
            const auto b = sample_outcomes(s, povm, plan.shots, derive_seed(trial, 12));
            const double e = estimate_overlap(a, b, f.th).mean;
            failures += std::abs(e - exact_overlap(r, s)) >= 0.1 ? 1 : 0;
        }
        EXPECT_LE(failures / 200.0, 0.08) << "n=" << n;
    }
}
