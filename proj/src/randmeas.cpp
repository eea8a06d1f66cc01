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

#include "qoverlap/randmeas.hpp"

#include <cmath>
#include <map>

#include "qoverlap/povm.hpp"
#include "qoverlap/rng.hpp"

namespace qoverlap {

namespace {

constexpr int kDenseKernelLimit = 22;

EstimateResult summarize(const std::vector<double>& per_setting, std::size_t shots) {
    const auto k = static_cast<double>(per_setting.size());
    double mean = 0.0;
    for (double x : per_setting) {
        mean += x;
    }
    mean /= k;
    double var = 0.0;
    for (double x : per_setting) {
        var += (x - mean) * (x - mean);
    }
    var = per_setting.size() > 1 ? var / (k - 1.0) : 0.0;
    EstimateResult r;
    r.mean = mean;
    r.std_error = std::sqrt(var / k);
    r.shots = shots;
    r.pairing = Pairing::pooled;
    return r;
}

std::vector<double> histogram(const SampleRecord& rec) {
    std::vector<double> h(static_cast<std::size_t>(pow2(rec.n)), 0.0);
    const double w = 1.0 / static_cast<double>(rec.shots());
    for (std::size_t i = 0; i < rec.shots(); ++i) {
        h[rec.flat_index(i)] += w;
    }
    return h;
}

// Kernel over observed outcomes only; used when 2^n arrays are too large.
double sparse_kernel(const SampleRecord& a, const SampleRecord& b) {
    std::map<std::vector<std::uint8_t>, double> pa, pb;
    for (std::size_t i = 0; i < a.shots(); ++i) {
        const auto s = a.shot(i);
        pa[std::vector<std::uint8_t>(s.begin(), s.end())] += 1.0 / static_cast<double>(a.shots());
    }
    for (std::size_t i = 0; i < b.shots(); ++i) {
        const auto s = b.shot(i);
        pb[std::vector<std::uint8_t>(s.begin(), s.end())] += 1.0 / static_cast<double>(b.shots());
    }
    double acc = 0.0;
    for (const auto& [sa, wa] : pa) {
        for (const auto& [sb, wb] : pb) {
            int d = 0;
            for (std::size_t q = 0; q < sa.size(); ++q) {
                d += sa[q] != sb[q] ? 1 : 0;
            }
            acc += wa * wb * std::pow(-0.5, d);
        }
    }
    return acc;
}

double setting_value(const SampleRecord& a, const SampleRecord& b) {
    const int n = a.n;
    const double scale = std::ldexp(1.0, n);
    if (n <= kDenseKernelLimit) {
        return scale * hamming_kernel(histogram(a), histogram(b), n);
    }
    return scale * sparse_kernel(a, b);
}

void check_widths(int n_rho, int n_sigma, const RandomMeasSettings& s) {
    s.validate();
    if (n_rho != s.n || n_sigma != s.n) {
        throw DimensionError("settings width does not match the states");
    }
}

DenseState rotate(const DenseState& state, const std::vector<Mat2>& us) {
    DenseState out = state;
    for (int q = 0; q < state.n(); ++q) {
        out = apply_single_qubit_dense(out, us[static_cast<std::size_t>(q)], q);
    }
    return out;
}

std::vector<double> diagonal(const DenseState& s) {
    std::vector<double> p(static_cast<std::size_t>(s.dim()));
    for (std::size_t x = 0; x < p.size(); ++x) {
        const auto i = static_cast<Eigen::Index>(x);
        p[x] = s.is_pure() ? std::norm(s.vector()(i)) : s.density()(i, i).real();
    }
    return p;
}

template <class Sampler>
EstimateResult run_settings(const RandomMeasSettings& s, Sampler&& sample) {
    std::vector<double> values;
    values.reserve(s.n_u);
    for (std::size_t r = 0; r < s.n_u; ++r) {
        const SampleRecord a = sample(0, r, derive_seed(s.seed, 2 * r + 1));
        const SampleRecord b = sample(1, r, derive_seed(s.seed, 2 * r + 2));
        values.push_back(setting_value(a, b));
    }
    return summarize(values, s.n_u * s.n_m);
}

}  // namespace

void RandomMeasSettings::validate() const {
    if (n < 1 || n_u < 1 || n_m < 1) {
        throw PreconditionError("random measurement settings need n, N_U, N_M >= 1");
    }
    if (unitaries.size() != n_u) {
        throw DimensionError("one unitary list per setting is required");
    }
    for (const auto& row : unitaries) {
        if (row.size() != static_cast<std::size_t>(n)) {
            throw DimensionError("one unitary per qubit is required");
        }
        for (const Mat2& u : row) {
            if ((u.adjoint() * u - Mat2::Identity()).cwiseAbs().maxCoeff() > 1e-10) {
                throw PreconditionError("setting contains a non-unitary matrix");
            }
        }
    }
}

Mat2 haar_unitary(Rng& rng) {
    Mat2 z;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            z(i, j) = rng.complex_normal();
        }
    }
    Eigen::HouseholderQR<Mat2> qr(z);
    const Mat2 q = qr.householderQ();
    const Mat2 r = qr.matrixQR().triangularView<Eigen::Upper>();
    Mat2 phase = Mat2::Zero();
    for (int i = 0; i < 2; ++i) {
        const double a = std::abs(r(i, i));
        phase(i, i) = a > 0.0 ? r(i, i) / a : cplx(1.0);
    }
    return q * phase;
}

RandomMeasSettings generate_settings(int n, std::size_t n_u, std::uint64_t seed, std::size_t n_m) {
    RandomMeasSettings s;
    s.n = n;
    s.n_u = n_u;
    s.n_m = n_m;
    s.seed = seed;
    if (n < 1 || n_u < 1 || n_m < 1) {
        throw PreconditionError("random measurement settings need n, N_U, N_M >= 1");
    }
    Rng rng(derive_seed(seed, 0));
    s.unitaries.assign(n_u, std::vector<Mat2>(static_cast<std::size_t>(n)));
    for (auto& row : s.unitaries) {
        for (Mat2& u : row) {
            u = haar_unitary(rng);
        }
    }
    return s;
}

double hamming_kernel(const std::vector<double>& p, const std::vector<double>& q, int n) {
    const std::uint64_t dim = pow2(n);
    if (p.size() != dim || q.size() != dim) {
        throw DimensionError("distribution length must be 2^n");
    }
    // Apply [[1, -1/2], [-1/2, 1]] along every qubit axis of q.
    std::vector<double> t = q;
    for (int k = 0; k < n; ++k) {
        const std::uint64_t b = std::uint64_t{1} << (n - 1 - k);
        for (std::uint64_t x = 0; x < dim; ++x) {
            if (!(x & b)) {
                const double a0 = t[x];
                const double a1 = t[x | b];
                t[x] = a0 - 0.5 * a1;
                t[x | b] = a1 - 0.5 * a0;
            }
        }
    }
    double acc = 0.0;
    for (std::uint64_t x = 0; x < dim; ++x) {
        acc += p[x] * t[x];
    }
    return acc;
}

EstimateResult estimate_overlap_rm(const DenseState& rho, const DenseState& sigma, const RandomMeasSettings& s) {
    check_widths(rho.n(), sigma.n(), s);
    const ProductPOVM basis(computational_basis(), s.n);
    return run_settings(s, [&](int which, std::size_t r, std::uint64_t seed) {
        return sample_outcomes(rotate(which == 0 ? rho : sigma, s.unitaries[r]), basis, s.n_m, seed);
    });
}

EstimateResult estimate_overlap_rm(const Mps& rho, const Mps& sigma, const RandomMeasSettings& s) {
    check_widths(rho.n(), sigma.n(), s);
    const QubitPOVM basis = computational_basis();
    return run_settings(s, [&](int which, std::size_t r, std::uint64_t seed) {
        TnState state = which == 0 ? rho : sigma;
        for (int q = 0; q < s.n; ++q) {
            state = apply_single_qubit_gate(std::move(state), s.unitaries[r][static_cast<std::size_t>(q)], q);
        }
        return sample_from_tn(state, basis, s.n_m, seed);
    });
}

EstimateResult estimate_overlap_rm_exact(const DenseState& rho, const DenseState& sigma,
                                         const RandomMeasSettings& s) {
    check_widths(rho.n(), sigma.n(), s);
    std::vector<double> values;
    values.reserve(s.n_u);
    const double scale = std::ldexp(1.0, s.n);
    for (std::size_t r = 0; r < s.n_u; ++r) {
        values.push_back(scale * hamming_kernel(diagonal(rotate(rho, s.unitaries[r])),
                                                diagonal(rotate(sigma, s.unitaries[r])), s.n));
    }
    EstimateResult out = summarize(values, 0);
    return out;
}

}  // namespace qoverlap
