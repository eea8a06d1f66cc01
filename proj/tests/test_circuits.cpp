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
#include <array>
#include <sstream>

#include "oracles/oracle.hpp"
#include "qoverlap/circuits.hpp"

using namespace qoverlap;

namespace {

oracle::M oracle_circuit_unitary(const Circuit& c) {
    const int w = c.width();
    oracle::M u = oracle::eye(1 << w);
    for (const auto& layer : c.layers()) {
        for (const Gate& g : layer) {
            oracle::M step;
            if (g.two_qubit()) {
                step = oracle::cnot(g.q0, g.q1, w);
            } else {
                step = oracle::embed(oracle::M(gate_matrix(g)), g.q0, w);
            }
            u = (step * u).eval();
        }
    }
    return u;
}

// Classical reversible evaluation of a CNOT sequence on a basis index.
std::uint64_t apply_cnots(const std::vector<Gate>& gates, std::uint64_t x, int w) {
    for (const Gate& g : gates) {
        const auto cb = std::uint64_t{1} << (w - 1 - g.q0);
        const auto tb = std::uint64_t{1} << (w - 1 - g.q1);
        if (x & cb) {
            x ^= tb;
        }
    }
    return x;
}

DenseState random_state(int n, std::uint64_t seed, bool product = false) {
    return product ? random_pure_state(RandomStateSpec::product(n, seed))
                   : random_pure_state(RandomStateSpec::entangled(n, seed));
}

}  // namespace

TEST(Routing, CountLawAndNearestNeighbourForAllDistances) {
    for (int d = 1; d <= 10; ++d) {
        const int w = d + 1;
        for (bool forward : {true, false}) {
            const int c = forward ? 0 : d;
            const int t = forward ? d : 0;
            const auto seq = route_long_range_cnot(c, t, w);
            EXPECT_EQ(seq.size(), static_cast<std::size_t>(4 * (d - 1) + 1));
            for (const Gate& g : seq) {
                EXPECT_EQ(std::abs(g.q0 - g.q1), 1);
            }
            const auto cb = std::uint64_t{1} << (w - 1 - c);
            const auto tb = std::uint64_t{1} << (w - 1 - t);
            for (std::uint64_t x = 0; x < (std::uint64_t{1} << w); ++x) {
                const std::uint64_t want = (x & cb) ? (x ^ tb) : x;
                ASSERT_EQ(apply_cnots(seq, x, w), want) << "d=" << d << " x=" << x;
            }
        }
    }
}

TEST(Routing, DenseUnitaryMatchesIdealCnot) {
    for (int d = 1; d <= 10; ++d) {
        const int w = d + 1;
        for (bool forward : {true, false}) {
            const int c = forward ? 0 : d;
            const int t = forward ? d : 0;
            Circuit circ(w);
            circ.add(route_long_range_cnot(c, t, w));
            if (w <= 7) {
                EXPECT_LT(oracle::max_abs(circuit_unitary(circ) - oracle::cnot(c, t, w)), 1e-9);
            } else {
                // Wide lines: check on a random superposition instead of the full matrix.
                const DenseState in = random_state(w, 100 + static_cast<std::uint64_t>(d), true);
                const CVector out = run_circuit_dense(circ, in, NoiseModel::noiseless()).vector();
                const CVector want = oracle::cnot(c, t, w) * in.vector();
                EXPECT_LT((out - want).cwiseAbs().maxCoeff(), 1e-9);
            }
        }
    }
}

TEST(Routing, InteriorPositionsAndErrors) {
    const auto seq = route_long_range_cnot(2, 5, 8);
    Circuit circ(8);
    circ.add(seq);
    EXPECT_EQ(seq.size(), 9u);
    EXPECT_LT(oracle::max_abs(circuit_unitary(circ) - oracle::cnot(2, 5, 8)), 1e-9);
    EXPECT_THROW(route_long_range_cnot(0, 8, 8), DimensionError);
    EXPECT_THROW(route_long_range_cnot(-1, 2, 8), DimensionError);
    EXPECT_THROW(route_long_range_cnot(3, 3, 8), PreconditionError);
}

TEST(Gates, MatricesAreUnitaryAndMatchDefinitions) {
    for (GateKind k : {GateKind::h, GateKind::x, GateKind::y, GateKind::z, GateKind::s, GateKind::sdg, GateKind::t,
                       GateKind::tdg, GateKind::rx, GateKind::ry, GateKind::rz}) {
        const Mat2 u = gate_matrix(Gate::one(k, 0, 0.7));
        EXPECT_LT((u * u.adjoint() - Mat2::Identity()).cwiseAbs().maxCoeff(), 1e-14) << gate_name(k);
    }
    const Mat2 t = gate_matrix(Gate::one(GateKind::t, 0));
    const Mat2 s = gate_matrix(Gate::one(GateKind::s, 0));
    EXPECT_LT((t * t - s).cwiseAbs().maxCoeff(), 1e-14);
    // RX(pi) = -i X
    const Mat2 rx = gate_matrix(Gate::one(GateKind::rx, 0, M_PI));
    EXPECT_LT((rx - cplx(0, -1) * pauli::x()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_THROW(gate_matrix(Gate::cx(0, 1)), PreconditionError);
    EXPECT_EQ(parse_gate_name("cx"), GateKind::cnot);
    EXPECT_EQ(parse_gate_name("Tdg"), GateKind::tdg);
    EXPECT_FALSE(parse_gate_name("swap").has_value());
}

TEST(Circuit, GreedyLayering) {
    Circuit c(3);
    c.add(Gate::one(GateKind::h, 0));
    c.add(Gate::one(GateKind::h, 2));
    c.add(Gate::cx(0, 1));
    c.add(Gate::one(GateKind::x, 2));
    ASSERT_EQ(c.layers().size(), 2u);
    EXPECT_EQ(c.layers()[0].size(), 2u);
    EXPECT_EQ(c.layers()[1].size(), 2u);
    EXPECT_THROW(c.add(Gate::cx(1, 1)), PreconditionError);
    EXPECT_THROW(c.add(Gate::one(GateKind::h, 3)), DimensionError);
    EXPECT_THROW(c.add_layer({Gate::one(GateKind::h, 0), Gate::cx(1, 0)}), PreconditionError);
}

TEST(Resources, EmptyCircuit) {
    const auto r = count_resources(Circuit(4));
    EXPECT_EQ(r.cnots, 0u);
    EXPECT_EQ(r.layers, 0u);
}

TEST(Resources, BellCountsMatchTable) {
    EXPECT_EQ(count_resources(build_bell_circuit(1)).cnots, 1u);
    EXPECT_EQ(count_resources(build_bell_circuit(2)).cnots, 10u);
    EXPECT_EQ(count_resources(build_bell_circuit(3)).cnots, 27u);
    EXPECT_EQ(count_resources(build_bell_circuit(8)).cnots, 232u);
    for (int n = 1; n <= 8; ++n) {
        const Circuit c = build_bell_circuit(n);
        EXPECT_EQ(c.cnot_count(), static_cast<std::size_t>(n * (4 * n - 3)));
        EXPECT_TRUE(c.nearest_neighbour());
    }
}

TEST(Resources, InterleavedBellUsesOneCnotPerPair) {
    for (int n = 1; n <= 5; ++n) {
        EXPECT_EQ(build_bell_circuit(n, LayoutKind::interleaved).cnot_count(), static_cast<std::size_t>(n));
    }
}

TEST(Resources, ImprovedSwapCounts) {
    EXPECT_EQ(improved_swap_cnot_count(1), 12u);
    EXPECT_EQ(improved_swap_cnot_count(2), 60u);
    EXPECT_EQ(improved_swap_cnot_count(3), 144u);
    EXPECT_EQ(improved_swap_cnot_count(8), 1104u);
    EXPECT_THROW(improved_swap_cnot_count(0), PreconditionError);
}

TEST(SwapTest, StandardCircuitStructure) {
    const Circuit c = build_standard_swap_test(2);
    EXPECT_EQ(c.width(), 5);
    EXPECT_EQ(c.cnot_count(), 96u);
    EXPECT_TRUE(c.nearest_neighbour());
    EXPECT_EQ(c.role, CircuitRole::swap_test);
    ASSERT_TRUE(c.layout && c.layout->ancilla);
    EXPECT_EQ(*c.layout->ancilla, 0);
}

TEST(SwapTest, SingleQubitUnitaryIsHadamardControlledSwap) {
    const Circuit c = build_standard_swap_test(1);
    oracle::M cswap = oracle::M::Zero(8, 8);
    for (int x = 0; x < 8; ++x) {
        int y = x;
        if (x & 4) {
            y = (x & 4) | ((x & 1) << 1) | ((x & 2) >> 1);
        }
        cswap(y, x) = 1.0;
    }
    const oracle::M h = oracle::embed(oracle::hadamard(), 0, 3);
    EXPECT_LT(oracle::max_abs(circuit_unitary(c) - h * cswap * h), 1e-9);
}

TEST(Circuit, UnitaryAgreesWithOracleProduct) {
    for (const Circuit& c : {build_bell_circuit(2), build_bell_circuit(2, LayoutKind::interleaved),
                             build_standard_swap_test(1, LayoutKind::interleaved)}) {
        EXPECT_LT(oracle::max_abs(circuit_unitary(c) - oracle_circuit_unitary(c)), 1e-9);
    }
}

TEST(CircuitText, HadamardThenCnotGivesTwoLayers) {
    const Circuit c = parse_circuit("WIDTH 2\nH 0\nCNOT 0 1\n");
    EXPECT_EQ(c.layers().size(), 2u);
    EXPECT_EQ(c.gate_count(), 2u);
}

TEST(CircuitText, CommentsCaseAndParams) {
    const Circuit c = parse_circuit("# header\nwidth 3  # trailing\n\nrz 1 0.25\ncx 2 1\n");
    ASSERT_EQ(c.layers().size(), 2u);
    EXPECT_EQ(c.layers()[0][0].kind, GateKind::rz);
    EXPECT_DOUBLE_EQ(c.layers()[0][0].param, 0.25);
    EXPECT_EQ(c.layers()[1][0], Gate::cx(2, 1));
}

TEST(CircuitText, OverlappingGatesInLayerRejectedWithPosition) {
    try {
        parse_circuit("WIDTH 2\nLAYER\nH 0\nX 0\n");
        FAIL() << "expected an error";
    } catch (const CircuitParseError& e) {
        EXPECT_EQ(e.line, 4);
        EXPECT_EQ(e.column, 1);
    }
    EXPECT_THROW(parse_circuit("WIDTH 3\nLAYER\nCNOT 0 1\nH 1\n"), CircuitParseError);
}

TEST(CircuitText, MalformedInputReportsLineAndColumn) {
    struct Case {
        const char* text;
        int line;
        int column;
    };
    const Case cases[] = {
        {"WIDTH 2\nFOO 0\n", 2, 1},        {"WIDTH 2\nH 5\n", 2, 3},
        {"WIDTH 2\n  CNOT 0\n", 2, 8},     {"WIDTH 2\nRX 0 abc\n", 2, 6},
        {"H 0\n", 1, 1},                   {"WIDTH 2\nWIDTH 3\n", 2, 1},
        {"WIDTH 2\nCNOT 1 1\n", 2, 8},     {"WIDTH 2\nH 0 1\n", 2, 5},
        {"WIDTH x\n", 1, 7},               {"WIDTH 2\nROLE maybe\n", 2, 6},
    };
    for (const Case& k : cases) {
        try {
            parse_circuit(std::string(k.text));
            ADD_FAILURE() << "no error for: " << k.text;
        } catch (const CircuitParseError& e) {
            EXPECT_EQ(e.line, k.line) << k.text;
            EXPECT_EQ(e.column, k.column) << k.text;
        }
    }
    EXPECT_THROW(parse_circuit(std::string("# nothing\n")), CircuitParseError);
}

TEST(CircuitText, RoundTripIsIdentity) {
    Circuit custom(3);
    custom.add(Gate::one(GateKind::ry, 1, 0.1234567890123456789));
    custom.add(Gate::cx(0, 1));
    custom.add_layer({Gate::one(GateKind::s, 2)});
    for (const Circuit& c : {build_bell_circuit(3), build_standard_swap_test(2),
                             build_standard_swap_test(2, LayoutKind::interleaved), custom}) {
        const Circuit back = parse_circuit(circuit_to_text(c));
        EXPECT_EQ(back, c);
    }
    const auto path = std::filesystem::temp_directory_path() / "qoverlap_circuit_roundtrip.txt";
    save_circuit(build_bell_circuit(2), path);
    EXPECT_EQ(load_circuit(path), build_bell_circuit(2));
    std::filesystem::remove(path);
}

TEST(CircuitText, LayoutHeadersValidated) {
    EXPECT_THROW(parse_circuit("WIDTH 2\nREGISTER_A 0\n"), CircuitParseError);
    EXPECT_THROW(parse_circuit("WIDTH 2\nREGISTER_A 0\nREGISTER_B 0\n"), CircuitParseError);
    const Circuit c = parse_circuit("WIDTH 3\nROLE swap_test\nANCILLA 2\nREGISTER_A 0\nREGISTER_B 1\n");
    EXPECT_EQ(c.layout->ancilla, 2);
}

TEST(NoiseModel, Validation) {
    EXPECT_NO_THROW(NoiseModel{}.validate());
    EXPECT_THROW((NoiseModel{1.5, 0.0, NoiseTarget::both}.validate()), PreconditionError);
    EXPECT_THROW((NoiseModel{0.0, -0.1, NoiseTarget::both}.validate()), PreconditionError);
}

TEST(CircuitEstimate, NoiselessDenseExpectationEqualsExactOverlap) {
    for (int pair = 0; pair < 20; ++pair) {
        const int n = 1 + pair % 3;
        const auto s1 = 1000 + static_cast<std::uint64_t>(pair);
        const DenseState rho = random_state(n, s1, pair % 2 == 0);
        const DenseState sigma = random_state(n, s1 + 500);
        const double exact = exact_overlap(rho, sigma);
        for (LayoutKind kind : {LayoutKind::stacked, LayoutKind::interleaved}) {
            EXPECT_NEAR(circuit_expectation_dense(build_bell_circuit(n, kind), rho, sigma, NoiseModel::noiseless()),
                        exact, 1e-9);
            if (n <= 2) {
                EXPECT_NEAR(circuit_expectation_dense(build_standard_swap_test(n, kind), rho, sigma,
                                                      NoiseModel::noiseless()),
                            exact, 1e-9);
            }
        }
    }
    // n = 3 SWAP test (7 qubits) on a few pairs.
    for (int pair = 0; pair < 3; ++pair) {
        const DenseState rho = random_state(3, 70 + static_cast<std::uint64_t>(pair));
        const DenseState sigma = random_state(3, 90 + static_cast<std::uint64_t>(pair));
        EXPECT_NEAR(circuit_expectation_dense(build_standard_swap_test(3), rho, sigma, NoiseModel::noiseless()),
                    exact_overlap(rho, sigma), 1e-9);
    }
}

TEST(CircuitEstimate, BellMeasurementHandlesMixedInputs) {
    const DenseState rho = random_state(2, 5).as_mixed();
    const KrausSet dep = KrausSet::depolarizing(0.3);
    const DenseState sigma = apply_channel_dense(random_state(2, 6), dep, 1);
    EXPECT_NEAR(circuit_expectation_dense(build_bell_circuit(2), rho, sigma, NoiseModel::noiseless()),
                exact_overlap(rho, sigma), 1e-9);
}

TEST(CircuitEstimate, FullDepolarizationCollapsesToMaximallyMixedPrediction) {
    const NoiseModel full{1.0, 0.0, NoiseTarget::both};
    for (int pair = 0; pair < 5; ++pair) {
        const DenseState rho = random_state(2, 300 + static_cast<std::uint64_t>(pair));
        const DenseState sigma = random_state(2, 400 + static_cast<std::uint64_t>(pair));
        EXPECT_NEAR(circuit_expectation_dense(build_standard_swap_test(2), rho, sigma, full), 0.0, 1e-9);
        EXPECT_NEAR(circuit_expectation_dense(build_bell_circuit(2), rho, sigma, full), 0.25, 1e-9);
    }
    const Mps a = Mps::from_dense(random_state(2, 1));
    const Mps b = Mps::from_dense(random_state(2, 2));
    const auto est = estimate_overlap_via_circuit(build_standard_swap_test(2), a, b, full, 20000, 9);
    EXPECT_LT(std::abs(est.result.mean), 5.0 * 2.0 * std::sqrt(0.25 / 20000.0));
}

TEST(CircuitEstimate, ReadoutFlipsMatchAnalyticDistortion) {
    // Bell n = 1 on |0>,|0>: p = q = 0 ideally; a flip on the ancilla-free
    // pair only matters when both bits end up 1.
    const DenseState zero = DenseState::zero(1);
    const NoiseModel ro{0.0, 0.1, NoiseTarget::both};
    // Output bits before flips: CX then H on |00> gives (|0>+|1>)|0>/sqrt2.
    // P(p=1,q=1) after flips = 0.5 * 0.1.
    EXPECT_NEAR(circuit_expectation_dense(build_bell_circuit(1), zero, zero, ro), 1.0 - 2.0 * 0.05, 1e-12);
}

TEST(CircuitEstimate, TensorNetworkEvolutionMatchesDense) {
    const NoiseModel noise{0.02, 0.0, NoiseTarget::both};
    for (int n : {1, 2}) {
        const Circuit c = build_bell_circuit(n);
        const DenseState rho = random_state(n, 11);
        const DenseState sigma = random_state(n, 12);
        TruncationLog log;
        const TnState out = run_circuit(c, joint_input(c, Mps::from_dense(rho), Mps::from_dense(sigma)), noise, log,
                                        Caps::unbounded());
        const DenseState want = run_circuit_dense(c, joint_input_dense(c, rho, sigma), noise);
        EXPECT_LT(trace_distance(to_dense(out), want), 1e-9);
        EXPECT_TRUE(log.empty());
    }
}

TEST(CircuitEstimate, CappedSimulationRespectsCertifiedBound) {
    const NoiseModel noise{0.01, 0.0, NoiseTarget::both};
    const Circuit c = build_standard_swap_test(1);
    for (std::uint64_t seed : {41u, 42u, 43u}) {
        const DenseState rho = random_state(1, seed);
        const DenseState sigma = random_state(1, seed + 10);
        for (const Caps caps : {Caps{2, 2}, Caps{4, 2}, Caps{16, 8}}) {
            TruncationLog log;
            const TnState out = run_circuit(c, joint_input(c, Mps::from_dense(rho), Mps::from_dense(sigma)), noise,
                                            log, caps);
            const DenseState want = run_circuit_dense(c, joint_input_dense(c, rho, sigma), noise);
            EXPECT_GE(uhlmann_fidelity(to_dense(out), want), fidelity_lower_bound(log) - 1e-9);
        }
    }
}

TEST(CircuitEstimate, JointInputLayouts) {
    const DenseState rho = random_state(2, 21);
    const DenseState sigma = random_state(2, 22);
    for (const Circuit& c : {build_standard_swap_test(2), build_standard_swap_test(2, LayoutKind::interleaved),
                             build_bell_circuit(2, LayoutKind::interleaved)}) {
        const DenseState joint = joint_input_dense(c, rho, sigma);
        const DenseState via_tn = to_dense(joint_input(c, Mps::from_dense(rho), Mps::from_dense(sigma)));
        EXPECT_LT(oracle::max_abs(joint.density() - via_tn.density()), 1e-10);
        // Reduced state of register A equals rho on each qubit.
        for (int k = 0; k < 2; ++k) {
            const Mat2 got = reduced_single_qubit(joint, c.layout->reg_a[static_cast<std::size_t>(k)]);
            EXPECT_LT((got - reduced_single_qubit(rho, k)).cwiseAbs().maxCoeff(), 1e-10);
        }
    }
    EXPECT_THROW(joint_input_dense(build_bell_circuit(3), rho, sigma), DimensionError);
}

TEST(CircuitEstimate, SampledEstimatesAreConsistent) {
    const Mps a = Mps::from_dense(random_state(2, 31));
    const Mps b = Mps::from_dense(random_state(2, 32));
    const double exact = exact_overlap(to_dense(a), to_dense(b));
    for (const Circuit& c : {build_bell_circuit(2), build_standard_swap_test(2)}) {
        const auto est = estimate_overlap_via_circuit(c, a, b, NoiseModel::noiseless(), 40000, 77);
        EXPECT_EQ(est.result.shots, 40000u);
        EXPECT_GT(est.result.std_error, 0.0);
        EXPECT_LT(std::abs(est.result.mean - exact), 5.0 * est.result.std_error);
        EXPECT_DOUBLE_EQ(est.fidelity_bound, 1.0);
        // Same seed, same answer.
        EXPECT_EQ(estimate_overlap_via_circuit(c, a, b, NoiseModel::noiseless(), 40000, 77).result.mean,
                  est.result.mean);
    }
}

TEST(CircuitEstimate, DenseSamplerMatchesNoisyExpectation) {
    const DenseState a = random_state(2, 41);
    const DenseState b = random_state(2, 42);
    const NoiseModel noise{0.01, 0.02, NoiseTarget::both};
    for (const Circuit& c : {build_bell_circuit(2), build_standard_swap_test(2)}) {
        const double expect = circuit_expectation_dense(c, a, b, noise);
        const auto est = estimate_overlap_via_circuit_dense(c, a, b, noise, 40000, 5);
        EXPECT_LT(std::abs(est.result.mean - expect), 5.0 * est.result.std_error);
        EXPECT_DOUBLE_EQ(est.fidelity_bound, 1.0);
    }
    // Bell stays small enough for an untruncated tensor-network run.
    const Circuit bell = build_bell_circuit(2);
    const auto dense = estimate_overlap_via_circuit_dense(bell, a, b, noise, 40000, 5);
    const auto tn = estimate_overlap_via_circuit(bell, Mps::from_dense(a), Mps::from_dense(b), noise, 40000, 5,
                                                 Caps::unbounded());
    EXPECT_LT(std::abs(tn.result.mean - dense.result.mean),
              5.0 * std::hypot(tn.result.std_error, dense.result.std_error));
}

TEST(CircuitEstimate, UnrecognizedRoleRejected) {
    Circuit c(4);
    const Mps a = Mps::zero(2);
    EXPECT_THROW(estimate_overlap_via_circuit(c, a, a, NoiseModel{}, 10, 1), PreconditionError);
    Circuit tagged = build_bell_circuit(2);
    tagged.layout.reset();
    EXPECT_THROW(estimate_overlap_via_circuit(tagged, a, a, NoiseModel{}, 10, 1), PreconditionError);
    EXPECT_THROW(estimate_overlap_via_circuit(build_bell_circuit(2), a, a, NoiseModel{}, 0, 1), PreconditionError);
}

TEST(CircuitEstimate, PostprocessFormulas) {
    Circuit bell = build_bell_circuit(2);
    SampleRecord rec;
    rec.n = 4;
    rec.outcomes_per_qubit = 2;
    // (p0 p1 q0 q1): parities 0, 1 (p0 q0), 0 (both pairs), 0
    rec.outcomes = {0, 0, 0, 0, 1, 0, 1, 0, 1, 1, 1, 1, 0, 1, 1, 0};
    const auto r = postprocess_overlap(bell, rec);
    EXPECT_DOUBLE_EQ(r.mean, 0.5);
    EXPECT_NEAR(r.std_error, std::sqrt(1.0 / 4.0), 1e-12);  // sample var 1, N = 4

    Circuit swap = build_standard_swap_test(1);
    SampleRecord s;
    s.n = 3;
    s.outcomes_per_qubit = 2;
    s.outcomes = {0, 1, 1, 0, 0, 0, 1, 0, 1, 1, 1, 1};
    const auto q = postprocess_overlap(swap, s);
    EXPECT_DOUBLE_EQ(q.mean, 0.0);
    EXPECT_NEAR(q.std_error, 2.0 * std::sqrt(0.25 / 4.0), 1e-12);
}

TEST(CircuitEstimate, NoiseMonotonicity) {
    const std::array<double, 4> lambdas = {0.0, 0.002, 0.005, 0.01};
    std::array<double, 4> mae{};
    std::array<double, 4> bell_bias{};
    std::array<double, 4> swap_bias{};
    const Circuit bell = build_bell_circuit(2);
    const Circuit swap = build_standard_swap_test(2);
    constexpr int pairs = 50;
    for (int pair = 0; pair < pairs; ++pair) {
        const DenseState rho = random_state(2, 2000 + static_cast<std::uint64_t>(pair));
        const DenseState sigma = random_state(2, 3000 + static_cast<std::uint64_t>(pair));
        const Mps a = Mps::from_dense(rho);
        const Mps b = Mps::from_dense(sigma);
        const double exact = exact_overlap(rho, sigma);
        for (std::size_t i = 0; i < lambdas.size(); ++i) {
            const NoiseModel noise{lambdas[i], 0.01, NoiseTarget::both};
            // Same seed across noise levels so shot noise is shared.
            const auto est =
                estimate_overlap_via_circuit(bell, a, b, noise, 20000, 500 + static_cast<std::uint64_t>(pair));
            mae[i] += std::abs(est.result.mean - exact) / pairs;
            bell_bias[i] += std::abs(circuit_expectation_dense(bell, rho, sigma, noise) - exact) / pairs;
            swap_bias[i] += std::abs(circuit_expectation_dense(swap, rho, sigma, noise) - exact) / pairs;
        }
    }
    for (std::size_t i = 1; i < lambdas.size(); ++i) {
        EXPECT_GE(mae[i], mae[i - 1]) << "lambda " << lambdas[i];
        EXPECT_GT(bell_bias[i], bell_bias[i - 1]) << "lambda " << lambdas[i];
        EXPECT_GT(swap_bias[i], swap_bias[i - 1]) << "lambda " << lambdas[i];
    }
}
