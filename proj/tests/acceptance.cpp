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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "oracles/oracle.hpp"
#include "qoverlap/circuits.hpp"
#include "qoverlap/estimator.hpp"
#include "qoverlap/experiments.hpp"
#include "qoverlap/povm.hpp"
#include "qoverlap/rng.hpp"
#include "qoverlap/tensornet.hpp"

using namespace qoverlap;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

EstimatorTensor pauli6_tau_hat() {
    const TMatrix t = compute_t_matrix(pauli6());
    const GeneralizedInverse tp = pseudoinverse(t);
    return estimator_tensor(tp, tp, t);
}

Outcome exact_identity() {
    const EstimatorTensor th = pauli6_tau_hat();
    double worst = 0.0;
    for (int n = 1; n <= 4; ++n) {
        const ProductPOVM povm(pauli6(), n);
        for (std::uint64_t k = 0; k < 50; ++k) {
            const auto spec_a = n == 1 ? RandomStateSpec::product(n, k) : RandomStateSpec::entangled(n, k);
            auto spec_b = spec_a;
            spec_b.seed = k + 1000;
            const DenseState a = random_pure_state(spec_a);
            const DenseState b = random_pure_state(spec_b);
            // Truth from explicit density matrices.
            const double truth = (a.density() * b.density()).trace().real();
            worst = std::max(worst, std::abs(exact_expectation(a, b, th, povm) - truth));
        }
    }
    return {worst < 1e-9, fmt("max deviation %.3g over 200 pairs", worst)};
}

Outcome reconstruction_round_trip() {
    const TMatrix t = compute_t_matrix(pauli6());
    double worst = 0.0;
    std::vector<GeneralizedInverse> taus;
    for (std::uint64_t s = 1; s <= 5; ++s) {
        taus.push_back(random_generalized_inverse(t, s));
    }
    for (int n = 1; n <= 3; ++n) {
        const ProductPOVM povm(pauli6(), n);
        for (const auto& tau : taus) {
            for (std::uint64_t k = 0; k < 50; ++k) {
                const DenseState s = random_pure_state(RandomStateSpec::entangled(n, 300 + k));
                const CMatrix back = reconstruct_operator(born_probabilities(s, povm), tau, povm);
                worst = std::max(worst, oracle::max_abs(back - s.density()));
            }
        }
    }
    // Perturbed inverses must be detected on at least one state.
    std::mt19937_64 gen(99);
    std::normal_distribution<double> g(0.0, 1.0);
    int bad_total = 0, bad_detected = 0;
    const ProductPOVM povm1(pauli6(), 1);
    for (int trial = 0; trial < 20; ++trial) {
        RMatrix tau = pseudoinverse(t).entries;
        for (Eigen::Index i = 0; i < tau.size(); ++i) {
            tau.data()[i] += 0.01 * g(gen);
        }
        if (generalized_inverse_residual(t, tau) <= 1e-4) {
            continue;
        }
        ++bad_total;
        double err = 0.0;
        for (std::uint64_t k = 0; k < 50; ++k) {
            const DenseState s = random_pure_state(RandomStateSpec::product(1, 700 + k));
            err = std::max(err, oracle::max_abs(reconstruct_operator(born_probabilities(s, povm1), {tau}, povm1) -
                                                s.density()));
        }
        bad_detected += err > 1e-6 ? 1 : 0;
    }
    const bool pass = worst < 1e-9 && bad_total > 0 && bad_detected == bad_total;
    return {pass, fmt("max round-trip error %.3g; ", worst) + std::to_string(bad_detected) + "/" +
                      std::to_string(bad_total) + " perturbed inverses detected"};
}

Outcome pauli6_structure() {
    // Oracle: T from explicit projectors, pseudoinverse by complete orthogonal decomposition.
    const auto elems = oracle::pauli6_elements();
    RMatrix t(6, 6);
    for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) {
            t(a, b) = (elems[a] * elems[b]).trace().real();
        }
    }
    const RMatrix tp = t.completeOrthogonalDecomposition().pseudoInverse();
    double pattern = 0.0;
    for (int a = 0; a < 6; ++a) {
        for (int b = 0; b < 6; ++b) {
            const double want = a == b ? 5.0 : (a / 2 == b / 2 ? -4.0 : 0.5);
            pattern = std::max(pattern, std::abs(tp(a, b) - want));
        }
    }
    const double lib = (pseudoinverse(compute_t_matrix(pauli6())).entries - tp).cwiseAbs().maxCoeff();
    const double nu = pauli6_tau_hat().negativity;
    const bool pass = pattern < 1e-9 && lib < 1e-9 && std::abs(nu - 9.0) < 1e-9;
    return {pass, fmt("pattern deviation %.3g, ", pattern) + fmt("library vs oracle %.3g, ", lib) + fmt("nu = %.12g", nu)};
}

Outcome shadow_equivalence() {
    const auto r = verify_shadow_equivalence();
    const bool pass = r.rescaled_deviation < 1e-12 && r.estimator_deviation < 1e-10;
    return {pass, fmt("|3 tilde T - T+ T| = %.3g, ", r.rescaled_deviation) +
                      fmt("estimator tensors differ by %.3g", r.estimator_deviation)};
}

Outcome table_counts() {
    const std::vector<int> ns{1, 2, 3, 8};
    const std::vector<std::size_t> bell{1, 10, 27, 232};
    const std::vector<std::uint64_t> improved{12, 60, 144, 1104};
    std::string got;
    bool pass = true;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const std::size_t b = build_bell_circuit(ns[i]).cnot_count();
        const std::uint64_t s = improved_swap_cnot_count(ns[i]);
        pass = pass && b == bell[i] && s == improved[i];
        got += "n=" + std::to_string(ns[i]) + ":" + std::to_string(b) + "/" + std::to_string(s) + " ";
    }
    return {pass, "bell/improved " + got};
}

Outcome routing_law() {
    double worst = 0.0;
    bool counts = true;
    for (int d = 1; d <= 10; ++d) {
        const int w = d + 1;
        for (bool reverse : {false, true}) {
            const int c = reverse ? d : 0;
            const int t = reverse ? 0 : d;
            const auto seq = route_long_range_cnot(c, t, w);
            counts = counts && seq.size() == static_cast<std::size_t>(4 * (d - 1) + 1);
            // Generic amplitudes distinguish every basis permutation.
            std::mt19937_64 gen(static_cast<std::uint64_t>(d * 2 + (reverse ? 1 : 0)));
            std::normal_distribution<double> g(0.0, 1.0);
            oracle::V v(std::int64_t{1} << w);
            for (auto& x : v) {
                x = oracle::C(g(gen), g(gen));
            }
            oracle::V routed = v;
            for (const Gate& gate : seq) {
                counts = counts && std::abs(gate.q0 - gate.q1) == 1;
                routed = oracle::cnot(gate.q0, gate.q1, w) * routed;
            }
            const oracle::V want = oracle::cnot(c, t, w) * v;
            worst = std::max(worst, (routed - want).cwiseAbs().maxCoeff());
        }
    }
    return {counts && worst < 1e-9, fmt("d = 1..10 both directions, max deviation %.3g", worst)};
}

Mat2 random_su2(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI);
    const double a = u(gen), b = u(gen) / 2.0, c = u(gen);
    Mat2 rz1, ry, rz2;
    rz1 << std::polar(1.0, -a / 2), 0, 0, std::polar(1.0, a / 2);
    ry << std::cos(b), -std::sin(b), std::sin(b), std::cos(b);
    rz2 << std::polar(1.0, -c / 2), 0, 0, std::polar(1.0, c / 2);
    return rz2 * ry * rz1;
}

struct NoisyRun {
    TnState tn;
    oracle::M exact;
    TruncationLog log;
};

NoisyRun random_noisy_circuit(int n, int layers, std::uint64_t seed, const Caps& caps) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> lam(0.01, 0.1);
    NoisyRun run{Mps::zero(n), oracle::ket_bra(oracle::basis(n, 0)), {}};
    for (int layer = 0; layer < layers; ++layer) {
        for (int q = 0; q < n; ++q) {
            const Mat2 u = random_su2(gen);
            run.tn = apply_single_qubit_gate(std::move(run.tn), u, q);
            const oracle::M e = oracle::embed(u, q, n);
            run.exact = e * run.exact * e.adjoint();
        }
        const int l = static_cast<int>(gen() % static_cast<std::uint64_t>(n - 1));
        const double lambda = lam(gen);
        run.tn = apply_cnot(std::move(run.tn), l, l + 1, lambda, run.log, caps);
        const oracle::M cx = oracle::cnot(l, l + 1, n);
        run.exact = cx * run.exact * cx.adjoint();
        run.exact = oracle::depolarize(run.exact, l, n, lambda);
        run.exact = oracle::depolarize(run.exact, l + 1, n, lambda);
    }
    return run;
}

Outcome lpdo_certification() {
    int forced = 0, violations = 0;
    double min_margin = 1e300;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const int n = 2 + static_cast<int>(s % 2);
        const Caps caps{1 + static_cast<int>(s % 2), 1 + static_cast<int>(s % 3)};
        const NoisyRun run = random_noisy_circuit(n, 4, 500 + s, caps);
        forced += run.log.empty() ? 0 : 1;
        const double f = oracle::root_fidelity(run.exact, to_dense(run.tn).density());
        const double bound = fidelity_lower_bound(run.log);
        min_margin = std::min(min_margin, f - bound);
        violations += f >= bound - 1e-9 ? 0 : 1;
    }
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const int n = 2 + static_cast<int>(s % 2);
        const NoisyRun run = random_noisy_circuit(n, 5, 900 + s, Caps::unbounded());
        worst = std::max(worst, oracle::trace_distance(to_dense(run.tn).density(), run.exact));
    }
    const bool pass = forced == 20 && violations == 0 && worst < 1e-9;
    return {pass, std::to_string(forced) + "/20 runs truncated, " + fmt("min fidelity - bound %.3g, ", min_margin) +
                      fmt("unbounded trace distance %.3g", worst)};
}

Outcome coverage() {
    const EstimatorTensor th = pauli6_tau_hat();
    std::string detail;
    bool pass = true;
    for (int n : {1, 2}) {
        const auto plan = hoeffding_plan(9.0, n, 0.1, 0.05);
        const ProductPOVM povm(pauli6(), n);
        int failures = 0;
        for (std::uint64_t trial = 0; trial < 200; ++trial) {
            const auto spec_a =
                n == 1 ? RandomStateSpec::product(n, 4000 + trial) : RandomStateSpec::entangled(n, 4000 + trial);
            auto spec_b = spec_a;
            spec_b.seed += 10000;
            const DenseState r = random_pure_state(spec_a);
            const DenseState s = random_pure_state(spec_b);
            const auto a = sample_outcomes(r, povm, plan.shots, derive_seed(trial, 21));
            const auto b = sample_outcomes(s, povm, plan.shots, derive_seed(trial, 22));
            failures += std::abs(estimate_overlap(a, b, th).mean - exact_overlap(r, s)) >= 0.1 ? 1 : 0;
        }
        const double rate = failures / 200.0;
        pass = pass && rate <= 0.08;
        detail += "n=" + std::to_string(n) + " N=" + std::to_string(plan.shots) + fmt(" failure %.3f; ", rate);
    }
    return {pass, detail};
}

Outcome circuit_comparison() {
    ExperimentConfig cfg = ExperimentConfig::defaults(ExperimentKind::circuit_compare);
    cfg.seed = 3;
    const auto res = run_circuit_compare(cfg);
    bool pass = true;
    std::string detail;
    for (int n : {2, 3}) {
        const std::string s = "_n" + std::to_string(n);
        const double q = res.metrics.at("mae_qpr" + s);
        const double c = res.metrics.at("mae_circuit" + s);
        const double gap = res.metrics.at("gap_sigma" + s);
        pass = pass && q < c && gap > 2.0;
        detail += "n=" + std::to_string(n) + (n == 2 ? " swap" : " bell") + fmt(" qpr %.4f", q) +
                  fmt(" circuit %.4f", c) + fmt(" gap %.2f sigma", gap) +
                  fmt(" overlap %.2f; ", res.metrics.at("mean_true_overlap" + s));
    }
    return {pass, detail};
}

Outcome randmeas_comparison() {
    ExperimentConfig cfg = ExperimentConfig::defaults(ExperimentKind::randmeas_compare);
    cfg.seed = 4;
    const auto res = run_randmeas_compare(cfg);
    bool pass = true;
    std::string detail;
    for (int n = 2; n <= 4; ++n) {
        for (StateFamily f : cfg.families) {
            const std::string k = to_string(f) + "_n" + std::to_string(n);
            const double q = res.metrics.at("mae_qpr_" + k);
            const double r = res.metrics.at("mae_rm_" + k);
            pass = pass && q < r;
            detail += k + fmt(" %.4f", q) + fmt("<%.4f ", r);
        }
    }
    return {pass, detail};
}

Outcome scaling_exponent() {
    ExperimentConfig cfg = ExperimentConfig::defaults(ExperimentKind::scaling);
    cfg.batches = 100;
    cfg.seed = 2;
    const auto res = run_scaling(cfg);
    const double e = res.metrics.at("exponent");
    const bool pass = e >= 0.8 && e <= 1.4 && res.metrics.at("capped_batches") == 0.0;
    return {pass, fmt("exponent %.3f", e) + fmt(" (product %.3f,", res.metrics.at("exponent_product")) +
                      fmt(" entangled %.3f), 100 batches", res.metrics.at("exponent_entangled"))};
}

Outcome povm_search() {
    GridSearchOptions g;
    g.outcomes = 6;
    const auto grid = grid_search_povm(g);
    McmcOptions m;
    m.steps = 10000;
    m.seed = 12;
    const auto mc = mcmc_tau_search(compute_t_matrix(pauli6()), m);
    const bool pass = grid.nu >= 9.0 - 1e-9 && mc.nu_best >= 9.0 - 1e-9;
    return {pass, fmt("grid6 nu %.9f", grid.nu) + fmt(", mcmc nu %.9f", mc.nu_best) + ", " +
                      std::to_string(mc.accepted) + " accepted moves"};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"exact-representation-identity", exact_identity},
        {"reconstruction-round-trip", reconstruction_round_trip},
        {"pauli6-pseudoinverse-structure", pauli6_structure},
        {"shadow-equivalence", shadow_equivalence},
        {"cnot-count-table", table_counts},
        {"routing-law", routing_law},
        {"lpdo-certification", lpdo_certification},
        {"hoeffding-coverage", coverage},
        {"circuit-comparison", circuit_comparison},
        {"randomized-measurement-comparison", randmeas_comparison},
        {"sample-scaling-exponent", scaling_exponent},
        {"povm-search", povm_search},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
