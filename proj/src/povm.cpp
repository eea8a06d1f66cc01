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

#include "qoverlap/povm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qoverlap/rng.hpp"

namespace qoverlap {
namespace {

constexpr double kPovmTol = 1e-10;

Eigen::Vector4d pauli_coefficients(const Mat2& m) {
    return {(m.trace()).real(), (m * pauli::x()).trace().real(), (m * pauli::y()).trace().real(),
            (m * pauli::z()).trace().real()};
}

}  // namespace

QubitPOVM::QubitPOVM(std::string name, std::vector<Mat2> elements)
    : name_(std::move(name)), elements_(std::move(elements)) {
    if (elements_.empty()) {
        throw PreconditionError("POVM needs at least one element");
    }
    if (elements_.size() > 255) {
        throw PreconditionError("POVM outcome index must fit in one byte");
    }
    Mat2 sum = Mat2::Zero();
    for (const Mat2& m : elements_) {
        if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kPovmTol) {
            throw PreconditionError("POVM element is not Hermitian");
        }
        Eigen::SelfAdjointEigenSolver<Mat2> es(m, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -kPovmTol) {
            throw PreconditionError("POVM element is not positive semidefinite");
        }
        sum += m;
    }
    if ((sum - Mat2::Identity()).cwiseAbs().maxCoeff() > kPovmTol) {
        throw PreconditionError("POVM elements do not sum to the identity");
    }
}

QubitPOVM QubitPOVM::from_bloch(std::string name, const std::vector<BlochElement>& elements) {
    std::vector<Mat2> ops;
    ops.reserve(elements.size());
    for (const BlochElement& e : elements) {
        if (e.weight < 0) {
            throw PreconditionError("negative Bloch weight");
        }
        const Eigen::Vector3d r = e.r;
        ops.push_back(0.5 * e.weight * (pauli::identity() + r.x() * pauli::x() + r.y() * pauli::y() + r.z() * pauli::z()));
    }
    QubitPOVM povm(std::move(name), std::move(ops));
    povm.bloch_ = elements;
    return povm;
}

int QubitPOVM::span_rank(double tol) const {
    Eigen::MatrixXd coeffs(4, size());
    for (int a = 0; a < size(); ++a) {
        coeffs.col(a) = pauli_coefficients(elements_[static_cast<std::size_t>(a)]);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(coeffs);
    int rank = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        if (svd.singularValues()(i) > tol) {
            ++rank;
        }
    }
    return rank;
}

ProductPOVM::ProductPOVM(QubitPOVM factor, int n) : factor_(std::move(factor)), n_(n) {
    if (n < 1) {
        throw PreconditionError("product POVM needs n >= 1");
    }
}

std::uint64_t ProductPOVM::outcome_count() const {
    return ipow(static_cast<std::uint64_t>(factor_.size()), n_);
}

KrausSet KrausSet::depolarizing(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw PreconditionError("depolarizing factor must lie in [0, 1]");
    }
    const double k0 = std::sqrt((4.0 - 3.0 * lambda) / 4.0);
    const double k1 = std::sqrt(lambda / 4.0);
    return KrausSet{{k0 * pauli::identity(), k1 * pauli::x(), k1 * pauli::y(), k1 * pauli::z()}};
}

double KrausSet::completeness_error() const {
    Mat2 sum = Mat2::Zero();
    for (const Mat2& k : ops) {
        sum += k.adjoint() * k;
    }
    return (sum - Mat2::Identity()).cwiseAbs().maxCoeff();
}

QubitPOVM pauli6() {
    const double s = 1.0 / std::sqrt(2.0);
    const std::vector<Eigen::Vector2cd> kets = {
        Eigen::Vector2cd(1, 0),          Eigen::Vector2cd(0, 1),           Eigen::Vector2cd(s, s),
        Eigen::Vector2cd(s, -s),         Eigen::Vector2cd(s, cplx(0, s)),  Eigen::Vector2cd(s, cplx(0, -s)),
    };
    std::vector<Mat2> ops;
    std::vector<BlochElement> bloch;
    const Eigen::Vector3d axes[3] = {Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY()};
    for (std::size_t i = 0; i < kets.size(); ++i) {
        ops.push_back(kets[i] * kets[i].adjoint() / 3.0);
        bloch.push_back({1.0 / 3.0, (i % 2 == 0 ? 1.0 : -1.0) * axes[i / 2]});
    }
    // Built from the kets directly; the Bloch form is kept for search and I/O.
    QubitPOVM p = QubitPOVM::from_bloch("pauli6", bloch);
    for (std::size_t i = 0; i < ops.size(); ++i) {
        if ((ops[i] - p[static_cast<int>(i)]).cwiseAbs().maxCoeff() > 1e-15) {
            throw std::logic_error("pauli6 Bloch form disagrees with projectors");
        }
    }
    return p;
}

QubitPOVM computational_basis() {
    return QubitPOVM::from_bloch("computational", {{1.0, Eigen::Vector3d::UnitZ()}, {1.0, -Eigen::Vector3d::UnitZ()}});
}

QubitPOVM sic4() {
    const double a = std::sqrt(8.0 / 9.0);
    std::vector<BlochElement> els = {{0.5, Eigen::Vector3d::UnitZ()}};
    for (int k = 0; k < 3; ++k) {
        const double phi = 2.0 * M_PI * k / 3.0;
        els.push_back({0.5, Eigen::Vector3d(a * std::cos(phi), a * std::sin(phi), -1.0 / 3.0)});
    }
    return QubitPOVM::from_bloch("sic4", els);
}

TMatrix compute_t_matrix(const QubitPOVM& povm) {
    const int m = povm.size();
    RMatrix t(m, m);
    for (int a = 0; a < m; ++a) {
        for (int b = a; b < m; ++b) {
            t(a, b) = t(b, a) = (povm[a] * povm[b]).trace().real();
        }
    }
    return {t};
}

GeneralizedInverse pseudoinverse(const TMatrix& t) {
    Eigen::SelfAdjointEigenSolver<RMatrix> es(t.entries);
    const RVector& vals = es.eigenvalues();
    const double cutoff = 1e-12 * std::max(1.0, vals.cwiseAbs().maxCoeff()) * static_cast<double>(vals.size());
    RMatrix out = RMatrix::Zero(t.entries.rows(), t.entries.cols());
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (std::abs(vals(i)) > cutoff) {
            out += es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose() / vals(i);
        }
    }
    return {out};
}

double generalized_inverse_residual(const TMatrix& t, const RMatrix& tau) {
    if (tau.rows() != t.entries.rows() || tau.cols() != t.entries.cols()) {
        throw DimensionError("tau shape does not match T");
    }
    return (t.entries * tau * t.entries - t.entries).cwiseAbs().maxCoeff();
}

bool is_generalized_inverse(const TMatrix& t, const RMatrix& tau) {
    return generalized_inverse_residual(t, tau) < 1e-8;
}

GeneralizedInverse generalized_inverse_from(const TMatrix& t, const RMatrix& w) {
    if (w.rows() != t.entries.rows() || w.cols() != t.entries.cols()) {
        throw DimensionError("W shape does not match T");
    }
    const RMatrix tp = pseudoinverse(t).entries;
    const RMatrix& tm = t.entries;
    return {tp + w - tp * tm * w * tm * tp};
}

GeneralizedInverse random_generalized_inverse(const TMatrix& t, std::uint64_t seed, double scale) {
    Rng rng(seed);
    RMatrix w(t.entries.rows(), t.entries.cols());
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            w(i, j) = scale * rng.normal();
        }
    }
    return generalized_inverse_from(t, w);
}

CMatrix reconstruct_operator(const OutcomeDistribution& p, const GeneralizedInverse& tau, const ProductPOVM& povm) {
    const int n = povm.n();
    const int m = povm.outcomes_per_qubit();
    if (p.n != n || p.m != m || p.p.size() != povm.outcome_count()) {
        throw DimensionError("distribution does not match the POVM outcome space");
    }
    if (tau.entries.rows() != m || tau.entries.cols() != m) {
        throw DimensionError("tau does not match the POVM outcome count");
    }
    if (n > kDenseQubitCap) {
        throw PreconditionError("reconstruction output too large");
    }
    // coefficients c(a') = sum_a P(a) tau_{a a'}, applied one qubit axis at a time.
    std::vector<double> c = p.p;
    std::vector<double> tmp(c.size());
    for (int k = 0; k < n; ++k) {
        const std::size_t inner = static_cast<std::size_t>(ipow(static_cast<std::uint64_t>(m), n - 1 - k));
        const std::size_t outer = c.size() / (inner * static_cast<std::size_t>(m));
        for (std::size_t o = 0; o < outer; ++o) {
            for (int b = 0; b < m; ++b) {
                for (std::size_t i = 0; i < inner; ++i) {
                    double acc = 0;
                    for (int a = 0; a < m; ++a) {
                        acc += c[(o * static_cast<std::size_t>(m) + static_cast<std::size_t>(a)) * inner + i] * tau.entries(a, b);
                    }
                    tmp[(o * static_cast<std::size_t>(m) + static_cast<std::size_t>(b)) * inner + i] = acc;
                }
            }
        }
        std::swap(c, tmp);
    }
    // Fold outcome digits into operators, last qubit first.
    // work[o][r][col] with r, col over the already-expanded trailing qubits.
    std::vector<cplx> work(c.begin(), c.end());
    std::size_t outcomes = c.size();
    std::size_t dim = 1;
    for (int k = n - 1; k >= 0; --k) {
        const std::size_t next_outcomes = outcomes / static_cast<std::size_t>(m);
        const std::size_t next_dim = dim * 2;
        std::vector<cplx> next(next_outcomes * next_dim * next_dim, cplx(0));
        for (std::size_t o = 0; o < next_outcomes; ++o) {
            for (int a = 0; a < m; ++a) {
                const Mat2& el = povm.factor()[a];
                const cplx* src = work.data() + (o * static_cast<std::size_t>(m) + static_cast<std::size_t>(a)) * dim * dim;
                cplx* dst = next.data() + o * next_dim * next_dim;
                for (int r0 = 0; r0 < 2; ++r0) {
                    for (int c0 = 0; c0 < 2; ++c0) {
                        const cplx e = el(r0, c0);
                        if (e == cplx(0)) {
                            continue;
                        }
                        for (std::size_t r = 0; r < dim; ++r) {
                            for (std::size_t cc = 0; cc < dim; ++cc) {
                                dst[(static_cast<std::size_t>(r0) * dim + r) * next_dim + static_cast<std::size_t>(c0) * dim + cc] +=
                                    e * src[r * dim + cc];
                            }
                        }
                    }
                }
            }
        }
        work = std::move(next);
        outcomes = next_outcomes;
        dim = next_dim;
    }
    CMatrix rho(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t cc = 0; cc < dim; ++cc) {
            rho(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(cc)) = work[r * dim + cc];
        }
    }
    return rho;
}

DenseState reconstruct_state(const OutcomeDistribution& p, const GeneralizedInverse& tau, const ProductPOVM& povm) {
    CMatrix rho = reconstruct_operator(p, tau, povm);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return DenseState::mixed(std::move(rho));
}

double negativity(const RMatrix& m) { return m.maxCoeff() - m.minCoeff(); }

EstimatorTensor estimator_tensor(const GeneralizedInverse& tau1, const GeneralizedInverse& tau2, const TMatrix& t) {
    if (!is_generalized_inverse(t, tau1.entries) || !is_generalized_inverse(t, tau2.entries)) {
        throw PreconditionError("estimator tensor needs generalized inverses of T");
    }
    RMatrix hat = tau1.entries * t.entries * tau2.entries.transpose();
    const double nu = negativity(hat);
    return {std::move(hat), nu};
}

RMatrix shadow_tensor() {
    RMatrix tilde = RMatrix::Zero(6, 6);
    for (int b = 0; b < 3; ++b) {
        tilde(2 * b, 2 * b) = 2;
        tilde(2 * b + 1, 2 * b + 1) = 2;
        tilde(2 * b, 2 * b + 1) = -1;
        tilde(2 * b + 1, 2 * b) = -1;
    }
    return tilde;
}

ShadowEquivalenceReport verify_shadow_equivalence() {
    const TMatrix t = compute_t_matrix(pauli6());
    const GeneralizedInverse tp = pseudoinverse(t);
    const RMatrix tilde = shadow_tensor();
    const RMatrix rescaled = 3.0 * tilde;
    const RMatrix target = tp.entries * t.entries;

    ShadowEquivalenceReport r;
    r.raw_deviation = (tilde * t.entries - target).cwiseAbs().maxCoeff();
    r.rescaled_deviation = (rescaled * t.entries - target).cwiseAbs().maxCoeff();
    r.rescaled_inverse_residual = generalized_inverse_residual(t, rescaled);
    r.rescaled_is_generalized_inverse = is_generalized_inverse(t, rescaled);
    if (r.rescaled_is_generalized_inverse) {
        const GeneralizedInverse shadow{rescaled};
        const RMatrix base = estimator_tensor(tp, tp, t).entries;
        r.estimator_deviation = (estimator_tensor(shadow, shadow, t).entries - base).cwiseAbs().maxCoeff();
        r.mixed_estimator_deviation = (estimator_tensor(shadow, tp, t).entries - base).cwiseAbs().maxCoeff();
    } else {
        r.estimator_deviation = r.mixed_estimator_deviation = std::numeric_limits<double>::infinity();
    }
    return r;
}

std::string povm_to_json(const QubitPOVM& povm) {
    nlohmann::json j;
    j["name"] = povm.name();
    j["outcomes"] = povm.size();
    for (const Mat2& m : povm.elements()) {
        nlohmann::json e;
        e["re"] = {{m(0, 0).real(), m(0, 1).real()}, {m(1, 0).real(), m(1, 1).real()}};
        e["im"] = {{m(0, 0).imag(), m(0, 1).imag()}, {m(1, 0).imag(), m(1, 1).imag()}};
        j["elements"].push_back(e);
    }
    return j.dump(2);
}

QubitPOVM povm_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed POVM file: ") + e.what());
    }
    std::vector<Mat2> ops;
    for (const auto& e : j.at("elements")) {
        Mat2 m;
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) {
                m(r, c) = cplx(e.at("re").at(r).at(c).get<double>(), e.at("im").at(r).at(c).get<double>());
            }
        }
        ops.push_back(m);
    }
    return QubitPOVM(j.value("name", std::string("povm")), std::move(ops));
}

void save_povm(const QubitPOVM& povm, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << povm_to_json(povm) << '\n';
}

QubitPOVM load_povm(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return povm_from_json(ss.str());
}

}  // namespace qoverlap
