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

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "qoverlap/povm.hpp"
#include "qoverlap/rng.hpp"

namespace qoverlap {
namespace {

constexpr double kDeg = M_PI / 180.0;

Eigen::Vector3d direction(double theta_deg, double phi_deg) {
    const double t = theta_deg * kDeg;
    const double p = phi_deg * kDeg;
    return {std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t)};
}

// Range of T+ for Bloch elements, with Tr(M_a M_b) = w_a w_b (1 + r_a.r_b) / 2.
std::optional<double> bloch_negativity(const std::vector<BlochElement>& els) {
    const auto m = static_cast<Eigen::Index>(els.size());
    RMatrix t(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = a; b < m; ++b) {
            const auto& ea = els[static_cast<std::size_t>(a)];
            const auto& eb = els[static_cast<std::size_t>(b)];
            t(a, b) = t(b, a) = 0.5 * ea.weight * eb.weight * (1.0 + ea.r.dot(eb.r));
        }
    }
    Eigen::SelfAdjointEigenSolver<RMatrix> es(t);
    const RVector& vals = es.eigenvalues();
    const double cutoff = 1e-8 * std::max(1e-300, vals.cwiseAbs().maxCoeff());
    int rank = 0;
    RMatrix tp = RMatrix::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::abs(vals(i)) > cutoff) {
            ++rank;
            tp += es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose() / vals(i);
        }
    }
    if (rank != 4) {
        return std::nullopt;
    }
    return negativity(tp);
}

// One scanned angle: its grid of values.
struct Axis {
    double lo;
    double hi;
    bool periodic;
};

using Angles = std::vector<double>;

// Candidate builder for each family; returns nullopt for invalid candidates.
std::optional<std::vector<BlochElement>> build_candidate(int outcomes, const Angles& ang) {
    std::vector<Eigen::Vector3d> dirs = {Eigen::Vector3d::UnitZ(), direction(ang[0], 0.0)};
    for (std::size_t i = 1; i + 1 < ang.size(); i += 2) {
        dirs.push_back(direction(ang[i], ang[i + 1]));
    }
    std::vector<BlochElement> els;
    if (outcomes == 6 || outcomes == 8) {
        const double w = 2.0 / outcomes;
        for (const auto& d : dirs) {
            els.push_back({w, d});
            els.push_back({w, -d});
        }
        return els;
    }
    // Four free directions; completeness fixes the weights up to existence.
    Eigen::Matrix4d a;
    for (int k = 0; k < 4; ++k) {
        a.block<3, 1>(0, k) = dirs[static_cast<std::size_t>(k)];
        a(3, k) = 1.0;
    }
    Eigen::FullPivLU<Eigen::Matrix4d> lu(a);
    if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-9) {
        return std::nullopt;
    }
    const Eigen::Vector4d w = lu.solve(Eigen::Vector4d(0, 0, 0, 2));
    for (int k = 0; k < 4; ++k) {
        if (w(k) < -1e-12) {
            return std::nullopt;
        }
        els.push_back({std::max(0.0, w(k)), dirs[static_cast<std::size_t>(k)]});
    }
    return els;
}

std::vector<Axis> axes_for(int outcomes) {
    // Antipodal families only need one hemisphere per axis.
    const double theta_hi = outcomes == 4 ? 180.0 : 90.0;
    std::vector<Axis> axes = {{0.0, theta_hi, false}};
    const int free_dirs = outcomes == 6 ? 1 : 2;
    for (int i = 0; i < free_dirs; ++i) {
        axes.push_back({0.0, theta_hi, false});
        axes.push_back({0.0, 360.0, true});
    }
    return axes;
}

std::vector<double> grid_values(double lo, double hi, double step, bool exclude_hi) {
    std::vector<double> vals;
    const int count = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
    for (int i = 0; i <= count; ++i) {
        const double v = lo + step * i;
        if (exclude_hi && v >= hi - 1e-9) {
            break;
        }
        vals.push_back(v);
    }
    return vals;
}

struct ScanState {
    double best = std::numeric_limits<double>::infinity();
    Angles best_angles;
    std::vector<BlochElement> best_elements;
    std::uint64_t evaluated = 0;
    std::uint64_t skipped = 0;
};

void scan(int outcomes, const std::vector<std::vector<double>>& grids, Angles& current, std::size_t depth,
          ScanState& st) {
    if (depth == grids.size()) {
        const auto cand = build_candidate(outcomes, current);
        if (!cand) {
            ++st.skipped;
            return;
        }
        const auto nu = bloch_negativity(*cand);
        if (!nu) {
            ++st.skipped;
            return;
        }
        ++st.evaluated;
        if (*nu < st.best - 1e-12) {
            st.best = *nu;
            st.best_angles = current;
            st.best_elements = *cand;
        }
        return;
    }
    for (double v : grids[depth]) {
        current[depth] = v;
        scan(outcomes, grids, current, depth + 1, st);
    }
}

}  // namespace

std::optional<double> pseudoinverse_negativity(const QubitPOVM& povm) {
    if (!povm.informationally_complete()) {
        return std::nullopt;
    }
    return negativity(pseudoinverse(compute_t_matrix(povm)).entries);
}

GridSearchResult grid_search_povm(const GridSearchOptions& options) {
    if (options.outcomes != 4 && options.outcomes != 6 && options.outcomes != 8) {
        throw PreconditionError("grid search supports 4, 6 or 8 outcomes");
    }
    if (!(options.resolution_deg > 0.0)) {
        throw PreconditionError("grid resolution must be positive");
    }
    const auto axes = axes_for(options.outcomes);
    std::vector<std::vector<double>> grids;
    for (const Axis& ax : axes) {
        grids.push_back(grid_values(ax.lo, ax.hi, options.resolution_deg, ax.periodic));
    }
    ScanState st;
    Angles current(axes.size());
    scan(options.outcomes, grids, current, 0, st);

    if (options.refine_deg > 0.0 && !st.best_angles.empty()) {
        std::vector<std::vector<double>> fine;
        for (std::size_t i = 0; i < axes.size(); ++i) {
            const Axis& ax = axes[i];
            const double c = st.best_angles[i];
            double lo = c - options.refine_window_deg;
            double hi = c + options.refine_window_deg;
            if (!ax.periodic) {
                lo = std::max(lo, ax.lo);
                hi = std::min(hi, ax.hi);
            }
            fine.push_back(grid_values(lo, hi, options.refine_deg, false));
        }
        scan(options.outcomes, fine, current, 0, st);
    }

    GridSearchResult result;
    result.evaluated = st.evaluated;
    result.skipped = st.skipped;
    if (st.best_elements.empty()) {
        result.povm = pauli6();
        result.nu = *pseudoinverse_negativity(result.povm);
        return result;
    }
    result.povm = QubitPOVM::from_bloch("grid" + std::to_string(options.outcomes), st.best_elements);
    result.nu = st.best;
    return result;
}

McmcResult mcmc_tau_search(const TMatrix& t, const McmcOptions& options) {
    if (options.steps < 1) {
        throw PreconditionError("MCMC needs at least one step");
    }
    if (!(options.temperature > 0.0)) {
        throw PreconditionError("MCMC temperature must be positive");
    }
    const auto m = t.entries.rows();
    const RMatrix tp = pseudoinverse(t).entries;
    const RMatrix& tm = t.entries;
    auto tau_of = [&](const RMatrix& w) -> RMatrix { return tp + w - tp * tm * w * tm * tp; };
    auto objective = [&](const RMatrix& tau) { return negativity(tau * tm * tau.transpose()); };

    Rng rng(options.seed);
    RMatrix w = RMatrix::Zero(m, m);
    RMatrix tau = tau_of(w);
    double current = objective(tau);

    McmcResult result{{tau}, current, current, 0};
    for (int step = 1; step < options.steps; ++step) {
        RMatrix proposal = w;
        for (Eigen::Index j = 0; j < m; ++j) {
            for (Eigen::Index i = 0; i < m; ++i) {
                proposal(i, j) += options.proposal_scale * rng.normal();
            }
        }
        const RMatrix cand_tau = tau_of(proposal);
        const double cand = objective(cand_tau);
        const double accept = std::min(1.0, std::exp(-(cand - current) / options.temperature));
        if (rng.uniform() < accept) {
            w = std::move(proposal);
            current = cand;
            ++result.accepted;
            if (current < result.nu_best) {
                result.nu_best = current;
                result.tau = {cand_tau};
            }
        }
    }
    return result;
}

}  // namespace qoverlap
