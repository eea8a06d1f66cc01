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

#include "qoverlap/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include "qoverlap/rng.hpp"

namespace qoverlap {

namespace {

// Dense histograms are used while m^n stays below this size.
constexpr std::uint64_t kDenseOutcomeCap = std::uint64_t{1} << 24;

void check_tensor(const EstimatorTensor& t, int m) {
    if (t.entries.rows() != m || t.entries.cols() != m) {
        throw DimensionError("estimator tensor is " + std::to_string(t.entries.rows()) + "x" +
                             std::to_string(t.entries.cols()) + " but the POVM has " + std::to_string(m) +
                             " outcomes");
    }
}

// v <- (M (x) ... (x) M) v, qubit 0 being the slowest axis.
void apply_each_axis(std::vector<double>& v, const RMatrix& mat, int n, int m) {
    std::vector<double> buf(static_cast<std::size_t>(m));
    std::uint64_t stride = 1;
    for (int k = n - 1; k >= 0; --k) {
        const std::uint64_t block = stride * static_cast<std::uint64_t>(m);
        for (std::uint64_t outer = 0; outer < v.size(); outer += block) {
            for (std::uint64_t inner = 0; inner < stride; ++inner) {
                for (int b = 0; b < m; ++b) {
                    buf[static_cast<std::size_t>(b)] = v[outer + inner + static_cast<std::uint64_t>(b) * stride];
                }
                for (int a = 0; a < m; ++a) {
                    double acc = 0.0;
                    for (int b = 0; b < m; ++b) {
                        acc += mat(a, b) * buf[static_cast<std::size_t>(b)];
                    }
                    v[outer + inner + static_cast<std::uint64_t>(a) * stride] = acc;
                }
            }
        }
        stride = block;
    }
}

double sample_variance(const std::vector<double>& x) {
    if (x.size() < 2) {
        return 0.0;
    }
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) {
        ss += (v - mean) * (v - mean);
    }
    return ss / static_cast<double>(x.size() - 1);
}

void check_records(const SampleRecord& rho, const SampleRecord& sigma) {
    rho.validate();
    sigma.validate();
    if (rho.n != sigma.n) {
        throw DimensionError("records cover different qubit counts");
    }
    if (rho.outcomes_per_qubit != sigma.outcomes_per_qubit || rho.povm_id != sigma.povm_id) {
        throw PreconditionError("records come from different POVMs");
    }
    if (rho.shots() == 0 || sigma.shots() == 0) {
        throw PreconditionError("empty sample record");
    }
}

EstimateResult estimate_paired(const SampleRecord& rho, const SampleRecord& sigma, const RMatrix& t) {
    const std::size_t shots = std::min(rho.shots(), sigma.shots());
    std::vector<double> values(shots);
    for (std::size_t i = 0; i < shots; ++i) {
        const auto a = rho.shot(i);
        const auto b = sigma.shot(i);
        double prod = 1.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            prod *= t(a[k], b[k]);
        }
        values[i] = prod;
    }
    EstimateResult r;
    r.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(shots);
    r.std_error = std::sqrt(sample_variance(values) / static_cast<double>(shots));
    r.shots = shots;
    r.pairing = Pairing::paired;
    return r;
}

std::vector<double> histogram(const SampleRecord& rec, std::uint64_t size) {
    std::vector<double> h(size, 0.0);
    const double w = 1.0 / static_cast<double>(rec.shots());
    for (std::size_t i = 0; i < rec.shots(); ++i) {
        h[rec.flat_index(i)] += w;
    }
    return h;
}

struct Distinct {
    std::vector<std::uint64_t> keys;
    std::vector<double> weight;
    std::vector<std::size_t> first_shot;
};

Distinct distinct_outcomes(const SampleRecord& rec) {
    Distinct d;
    std::unordered_map<std::uint64_t, std::size_t> slot;
    const double w = 1.0 / static_cast<double>(rec.shots());
    for (std::size_t i = 0; i < rec.shots(); ++i) {
        const auto key = rec.flat_index(i);
        auto [it, inserted] = slot.try_emplace(key, d.keys.size());
        if (inserted) {
            d.keys.push_back(key);
            d.weight.push_back(0.0);
            d.first_shot.push_back(i);
        }
        d.weight[it->second] += w;
    }
    return d;
}

EstimateResult estimate_pooled(const SampleRecord& rho, const SampleRecord& sigma, const RMatrix& t) {
    const int n = rho.n;
    const int m = rho.outcomes_per_qubit;
    // g_sigma(a) = sum_b tau^(x)n(a, b) q(b); g_rho(b) = sum_a p(a) tau^(x)n(a, b)
    std::vector<double> g_sigma_at(rho.shots());
    std::vector<double> g_rho_at(sigma.shots());
    double mean = 0.0;
    const double total_outcomes = std::pow(static_cast<double>(m), n);
    if (total_outcomes <= static_cast<double>(kDenseOutcomeCap)) {
        const auto size = static_cast<std::uint64_t>(std::llround(total_outcomes));
        std::vector<double> gs = histogram(sigma, size);
        std::vector<double> gr = histogram(rho, size);
        apply_each_axis(gs, t, n, m);
        const RMatrix tt = t.transpose();
        apply_each_axis(gr, tt, n, m);
        for (std::size_t i = 0; i < rho.shots(); ++i) {
            g_sigma_at[i] = gs[rho.flat_index(i)];
        }
        for (std::size_t j = 0; j < sigma.shots(); ++j) {
            g_rho_at[j] = gr[sigma.flat_index(j)];
        }
    } else {
        const Distinct dr = distinct_outcomes(rho);
        const Distinct ds = distinct_outcomes(sigma);
        std::vector<double> gs(dr.keys.size(), 0.0);
        std::vector<double> gr(ds.keys.size(), 0.0);
        for (std::size_t i = 0; i < dr.keys.size(); ++i) {
            const auto a = rho.shot(dr.first_shot[i]);
            for (std::size_t j = 0; j < ds.keys.size(); ++j) {
                const auto b = sigma.shot(ds.first_shot[j]);
                double prod = 1.0;
                for (int k = 0; k < n && prod != 0.0; ++k) {
                    prod *= t(a[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(k)]);
                }
                gs[i] += prod * ds.weight[j];
                gr[j] += prod * dr.weight[i];
            }
        }
        std::unordered_map<std::uint64_t, double> gs_by_key;
        std::unordered_map<std::uint64_t, double> gr_by_key;
        for (std::size_t i = 0; i < dr.keys.size(); ++i) {
            gs_by_key[dr.keys[i]] = gs[i];
        }
        for (std::size_t j = 0; j < ds.keys.size(); ++j) {
            gr_by_key[ds.keys[j]] = gr[j];
        }
        for (std::size_t i = 0; i < rho.shots(); ++i) {
            g_sigma_at[i] = gs_by_key[rho.flat_index(i)];
        }
        for (std::size_t j = 0; j < sigma.shots(); ++j) {
            g_rho_at[j] = gr_by_key[sigma.flat_index(j)];
        }
    }
    mean = std::accumulate(g_sigma_at.begin(), g_sigma_at.end(), 0.0) / static_cast<double>(rho.shots());
    EstimateResult r;
    r.mean = mean;
    r.std_error = std::sqrt(sample_variance(g_sigma_at) / static_cast<double>(rho.shots()) +
                            sample_variance(g_rho_at) / static_cast<double>(sigma.shots()));
    r.shots = std::max(rho.shots(), sigma.shots());
    r.pairing = Pairing::pooled;
    return r;
}

SampleRecord from_flat(const std::vector<std::uint64_t>& flat, int n, int m) {
    SampleRecord rec;
    rec.n = n;
    rec.outcomes_per_qubit = m;
    rec.outcomes.resize(flat.size() * static_cast<std::size_t>(n));
    for (std::size_t s = 0; s < flat.size(); ++s) {
        std::uint64_t x = flat[s];
        for (int k = n - 1; k >= 0; --k) {
            rec.outcomes[s * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)] =
                static_cast<std::uint8_t>(x % static_cast<std::uint64_t>(m));
            x /= static_cast<std::uint64_t>(m);
        }
    }
    return rec;
}

void check_sampling(int state_n, const ProductPOVM& povm, std::size_t shots) {
    if (shots == 0) {
        throw PreconditionError("at least one shot is required");
    }
    if (state_n != povm.n()) {
        throw DimensionError("state has " + std::to_string(state_n) + " qubits but the POVM acts on " +
                             std::to_string(povm.n()));
    }
}

}  // namespace

SampleRecord sample_outcomes(const DenseState& state, const ProductPOVM& povm, std::size_t shots,
                             std::uint64_t seed) {
    check_sampling(state.n(), povm, shots);
    SampleRecord rec = sample_from_distribution(born_probabilities(state, povm), shots, seed);
    rec.povm_id = povm.factor().name();
    return rec;
}

SampleRecord sample_from_distribution(const OutcomeDistribution& dist, std::size_t shots, std::uint64_t seed) {
    if (shots == 0) {
        throw PreconditionError("at least one shot is required");
    }
    if (dist.p.empty() || dist.p.size() != ipow(static_cast<std::uint64_t>(dist.m), dist.n)) {
        throw DimensionError("distribution length must be m^n");
    }
    std::vector<double> cdf(dist.p.size());
    std::partial_sum(dist.p.begin(), dist.p.end(), cdf.begin());
    const double total = cdf.back();
    if (!(total > 0.0)) {
        throw PreconditionError("distribution has no mass");
    }
    Rng rng(seed);
    std::vector<std::uint64_t> flat(shots);
    for (auto& f : flat) {
        const double u = rng.uniform() * total;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end()) {
            --it;
        }
        // Skip zero-probability outcomes that share a cumulative value.
        auto idx = static_cast<std::uint64_t>(it - cdf.begin());
        while (dist.p[idx] <= 0.0 && idx > 0) {
            --idx;
        }
        f = idx;
    }
    SampleRecord rec = from_flat(flat, dist.n, dist.m);
    rec.seed = seed;
    return rec;
}

SampleRecord sample_outcomes(const Mps& state, const ProductPOVM& povm, std::size_t shots, std::uint64_t seed) {
    check_sampling(state.n(), povm, shots);
    return sample_from_tn(state, povm.factor(), shots, seed);
}

SampleRecord sample_outcomes(const Lpdo& state, const ProductPOVM& povm, std::size_t shots, std::uint64_t seed) {
    check_sampling(state.n(), povm, shots);
    return sample_from_tn(state, povm.factor(), shots, seed);
}

SampleRecord sample_outcomes(const TnState& state, const ProductPOVM& povm, std::size_t shots, std::uint64_t seed) {
    return std::visit([&](const auto& s) { return sample_outcomes(s, povm, shots, seed); }, state);
}

EstimateResult estimate_overlap(const SampleRecord& rho, const SampleRecord& sigma, const EstimatorTensor& tau_hat,
                                const EstimateOptions& options) {
    check_records(rho, sigma);
    check_tensor(tau_hat, rho.outcomes_per_qubit);
    return options.pairing == Pairing::paired ? estimate_paired(rho, sigma, tau_hat.entries)
                                              : estimate_pooled(rho, sigma, tau_hat.entries);
}

double contract_distributions(const OutcomeDistribution& p, const OutcomeDistribution& q,
                              const EstimatorTensor& tau_hat) {
    if (p.n != q.n || p.m != q.m || p.p.size() != q.p.size()) {
        throw DimensionError("outcome distributions disagree in shape");
    }
    check_tensor(tau_hat, p.m);
    std::vector<double> g = q.p;
    apply_each_axis(g, tau_hat.entries, q.n, q.m);
    return std::inner_product(p.p.begin(), p.p.end(), g.begin(), 0.0);
}

double exact_expectation(const DenseState& rho, const DenseState& sigma, const EstimatorTensor& tau_hat,
                         const ProductPOVM& povm) {
    if (povm.n() > 4) {
        throw DimensionError("exact expectation enumerates all outcomes and is limited to 4 qubits");
    }
    if (rho.n() != povm.n() || sigma.n() != povm.n()) {
        throw DimensionError("state and POVM qubit counts differ");
    }
    return contract_distributions(born_probabilities(rho, povm), born_probabilities(sigma, povm), tau_hat);
}

double tensor_power_range(const EstimatorTensor& tau_hat, int n) {
    if (n < 1) {
        throw DimensionError("tensor power needs n >= 1");
    }
    const double emax = tau_hat.entries.maxCoeff();
    const double emin = tau_hat.entries.minCoeff();
    double hi = emax;
    double lo = emin;
    for (int k = 1; k < n; ++k) {
        const double c[4] = {hi * emax, hi * emin, lo * emax, lo * emin};
        hi = *std::max_element(c, c + 4);
        lo = *std::min_element(c, c + 4);
    }
    return hi - lo;
}

namespace {

std::uint64_t strict_count(double bound) {
    if (!(bound < 4.0e18)) {
        throw PreconditionError("planned shot count does not fit in 64 bits");
    }
    return static_cast<std::uint64_t>(std::floor(bound)) + 1;
}

}  // namespace

SamplePlan hoeffding_plan(double nu, int n, double epsilon, double delta) {
    if (!(nu > 0.0) || !std::isfinite(nu)) {
        throw PreconditionError("negativity must be positive");
    }
    if (n < 1) {
        throw PreconditionError("qubit count must be at least 1");
    }
    if (!(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0)) {
        throw PreconditionError("epsilon and delta must lie in (0, 1)");
    }
    SamplePlan plan;
    plan.nu = nu;
    plan.n = n;
    plan.epsilon = epsilon;
    plan.delta = delta;
    plan.shots = strict_count(std::pow(nu, n) / (2.0 * epsilon * epsilon) * std::log(2.0 / delta));
    return plan;
}

SamplePlan hoeffding_plan(const EstimatorTensor& tau_hat, int n, double epsilon, double delta) {
    SamplePlan plan = hoeffding_plan(tau_hat.negativity, n, epsilon, delta);
    const double range = tensor_power_range(tau_hat, n);
    plan.range_n = range;
    plan.range_shots = strict_count(range * range * std::log(2.0 / delta) / (2.0 * epsilon * epsilon));
    return plan;
}

}  // namespace qoverlap
