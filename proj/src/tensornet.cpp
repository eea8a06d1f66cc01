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

#include "qoverlap/tensornet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "qoverlap/rng.hpp"

namespace qoverlap {

namespace {

constexpr double kNumericalZero = 1e-14;

void check_site(int site, int n) {
    if (site < 0 || site >= n) {
        throw DimensionError("site " + std::to_string(site) + " outside chain of length " + std::to_string(n));
    }
}

void check_caps(const Caps& caps) {
    if (caps.max_bond < 1 || caps.max_kraus < 1) {
        throw PreconditionError("bond and Kraus caps must be at least 1");
    }
}

// Rows (l, p, k), columns r.
CMatrix as_left_matrix(const SiteTensor& t) {
    CMatrix m(t.left * 2 * t.kraus, t.right);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (int r = 0; r < t.right; ++r) {
            m(i, r) = t.data[static_cast<std::size_t>(i * t.right + r)];
        }
    }
    return m;
}

// Rows l, columns (p, k, r).
CMatrix as_right_matrix(const SiteTensor& t) {
    const int cols = 2 * t.kraus * t.right;
    CMatrix m(t.left, cols);
    for (int l = 0; l < t.left; ++l) {
        for (int c = 0; c < cols; ++c) {
            m(l, c) = t.data[static_cast<std::size_t>(l * cols + c)];
        }
    }
    return m;
}

SiteTensor from_left_matrix(const CMatrix& m, int left, int kraus) {
    SiteTensor t(left, kraus, static_cast<int>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index r = 0; r < m.cols(); ++r) {
            t.data[static_cast<std::size_t>(i * m.cols() + r)] = m(i, r);
        }
    }
    return t;
}

SiteTensor from_right_matrix(const CMatrix& m, int kraus, int right) {
    SiteTensor t(static_cast<int>(m.rows()), kraus, right);
    for (Eigen::Index l = 0; l < m.rows(); ++l) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            t.data[static_cast<std::size_t>(l * m.cols() + c)] = m(l, c);
        }
    }
    return t;
}

}  // namespace

void TruncationLog::append(double delta, TruncationKind kind, int site) {
    if (!(delta >= 0.0) || delta > 1.0 + 1e-12) {
        throw PreconditionError("truncation weight must lie in [0, 1]");
    }
    entries_.push_back({std::min(delta, 1.0), kind, site});
}

double fidelity_lower_bound(std::span<const double> deltas) {
    double sum = 0.0;
    for (double d : deltas) {
        if (!(d >= 0.0) || d > 1.0) {
            throw PreconditionError("truncation weight must lie in [0, 1]");
        }
        sum += std::sqrt(2.0 * (1.0 - std::sqrt(1.0 - d * d)));
    }
    return std::max(0.0, 1.0 - 0.5 * sum * sum);
}

double fidelity_lower_bound(const TruncationLog& log) {
    std::vector<double> d;
    d.reserve(log.size());
    for (const auto& e : log.entries()) {
        d.push_back(e.delta);
    }
    return fidelity_lower_bound(d);
}

SvdSplit truncated_svd(const CMatrix& m, int max_dim) {
    if (max_dim < 1) {
        throw PreconditionError("truncation dimension must be at least 1");
    }
    if (!m.allFinite()) {
        throw PreconditionError("tensor has non-finite entries");
    }
    RVector s;
    CMatrix u, v;
    {
        Eigen::BDCSVD<CMatrix> bdc(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (bdc.singularValues().allFinite() && bdc.matrixU().allFinite() && bdc.matrixV().allFinite()) {
            s = bdc.singularValues();
            u = bdc.matrixU();
            v = bdc.matrixV();
        } else {
            // BDCSVD can lose the singular vectors on strongly degenerate spectra.
            Eigen::JacobiSVD<CMatrix> jac(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
            s = jac.singularValues();
            u = jac.matrixU();
            v = jac.matrixV();
        }
    }
    const double total = s.squaredNorm();
    if (!(total > 0.0)) {
        throw PreconditionError("cannot truncate a zero tensor");
    }
    Eigen::Index keep = 0;
    while (keep < s.size() && keep < max_dim && s(keep) > kNumericalZero * s(0)) {
        ++keep;
    }
    keep = std::max<Eigen::Index>(keep, 1);
    const double kept = s.head(keep).squaredNorm();
    SvdSplit out;
    out.u = u.leftCols(keep);
    out.s = s.head(keep) / std::sqrt(kept);
    out.vh = v.leftCols(keep).adjoint();
    out.delta = std::sqrt(std::max(0.0, total - kept) / total);
    out.discarded = static_cast<int>(s.size() - keep);
    return out;
}

namespace detail {

Chain::Chain(std::vector<SiteTensor> sites) : sites_(std::move(sites)) {
    if (sites_.empty()) {
        throw DimensionError("chain needs at least one site");
    }
    for (std::size_t i = 0; i < sites_.size(); ++i) {
        const SiteTensor& t = sites_[i];
        if (t.data.size() != static_cast<std::size_t>(t.left * 2 * t.kraus * t.right)) {
            throw DimensionError("site tensor storage does not match its dimensions");
        }
        if (i > 0 && sites_[i - 1].right != t.left) {
            throw DimensionError("bond dimensions of neighbouring sites disagree");
        }
    }
    if (sites_.front().left != 1 || sites_.back().right != 1) {
        throw DimensionError("open chain must have unit boundary bonds");
    }
    // Bring into canonical form with the center on site 0.
    center_ = n() - 1;
    for (int i = n() - 1; i > 0; --i) {
        right_orthonormalize(i);
    }
    normalize();
}

int Chain::max_bond() const {
    int d = 1;
    for (const auto& t : sites_) {
        d = std::max(d, t.right);
    }
    return d;
}

int Chain::max_kraus() const {
    int k = 1;
    for (const auto& t : sites_) {
        k = std::max(k, t.kraus);
    }
    return k;
}

void Chain::left_orthonormalize(int site) {
    SiteTensor& a = sites_[static_cast<std::size_t>(site)];
    SiteTensor& b = sites_[static_cast<std::size_t>(site + 1)];
    const CMatrix m = as_left_matrix(a);
    const Eigen::Index kk = std::min(m.rows(), m.cols());
    Eigen::HouseholderQR<CMatrix> qr(m);
    const CMatrix q = qr.householderQ() * CMatrix::Identity(m.rows(), kk);
    const CMatrix r = qr.matrixQR().topRows(kk).triangularView<Eigen::Upper>();
    const int left = a.left;
    const int kraus = a.kraus;
    a = from_left_matrix(q, left, kraus);
    const CMatrix next = r * as_right_matrix(b);
    b = from_right_matrix(next, b.kraus, b.right);
    center_ = site + 1;
}

void Chain::right_orthonormalize(int site) {
    SiteTensor& a = sites_[static_cast<std::size_t>(site - 1)];
    SiteTensor& b = sites_[static_cast<std::size_t>(site)];
    const CMatrix m = as_right_matrix(b);
    const CMatrix mh = m.adjoint();
    const Eigen::Index kk = std::min(mh.rows(), mh.cols());
    Eigen::HouseholderQR<CMatrix> qr(mh);
    const CMatrix q = qr.householderQ() * CMatrix::Identity(mh.rows(), kk);
    const CMatrix r = qr.matrixQR().topRows(kk).triangularView<Eigen::Upper>();
    const int kraus = b.kraus;
    const int right = b.right;
    b = from_right_matrix(q.adjoint(), kraus, right);
    const CMatrix prev = as_left_matrix(a) * r.adjoint();
    a = from_left_matrix(prev, a.left, a.kraus);
    center_ = site - 1;
}

void Chain::move_center(int site) {
    check_site(site, n());
    while (center_ < site) {
        left_orthonormalize(center_);
    }
    while (center_ > site) {
        right_orthonormalize(center_);
    }
}

void Chain::apply_one(const Mat2& u, int site) {
    check_site(site, n());
    if ((u.adjoint() * u - Mat2::Identity()).cwiseAbs().maxCoeff() > 1e-10) {
        throw PreconditionError("single-qubit gate is not unitary");
    }
    SiteTensor& t = sites_[static_cast<std::size_t>(site)];
    for (int l = 0; l < t.left; ++l) {
        for (int k = 0; k < t.kraus; ++k) {
            for (int r = 0; r < t.right; ++r) {
                const cplx a0 = t(l, 0, k, r);
                const cplx a1 = t(l, 1, k, r);
                t(l, 0, k, r) = u(0, 0) * a0 + u(0, 1) * a1;
                t(l, 1, k, r) = u(1, 0) * a0 + u(1, 1) * a1;
            }
        }
    }
}

void Chain::apply_two(const Eigen::Matrix4cd& g, int site, TruncationLog& log, const Caps& caps) {
    check_caps(caps);
    if (site < 0 || site + 1 >= n()) {
        throw DimensionError("two-qubit gate needs neighbouring sites inside the chain");
    }
    move_center(site);
    const SiteTensor& a = sites_[static_cast<std::size_t>(site)];
    const SiteTensor& b = sites_[static_cast<std::size_t>(site + 1)];
    const int L = a.left, K1 = a.kraus, K2 = b.kraus, R = b.right;
    // theta rows (l, p1, k1), columns (p2, k2, r).
    CMatrix theta = as_left_matrix(a) * as_right_matrix(b);
    CMatrix out = CMatrix::Zero(theta.rows(), theta.cols());
    for (int l = 0; l < L; ++l) {
        for (int k1 = 0; k1 < K1; ++k1) {
            for (int k2 = 0; k2 < K2; ++k2) {
                for (int r = 0; r < R; ++r) {
                    cplx in[4];
                    for (int p1 = 0; p1 < 2; ++p1) {
                        for (int p2 = 0; p2 < 2; ++p2) {
                            in[p1 * 2 + p2] = theta((l * 2 + p1) * K1 + k1, (p2 * K2 + k2) * R + r);
                        }
                    }
                    for (int p1 = 0; p1 < 2; ++p1) {
                        for (int p2 = 0; p2 < 2; ++p2) {
                            cplx acc = 0;
                            for (int j = 0; j < 4; ++j) {
                                acc += g(p1 * 2 + p2, j) * in[j];
                            }
                            out((l * 2 + p1) * K1 + k1, (p2 * K2 + k2) * R + r) = acc;
                        }
                    }
                }
            }
        }
    }
    SvdSplit split = truncated_svd(out, caps.max_bond);
    if (split.delta > 0.0 && split.discarded > 0) {
        const bool capped = split.u.cols() == caps.max_bond;
        if (capped) {
            log.append(split.delta, TruncationKind::bond, site);
        }
    }
    sites_[static_cast<std::size_t>(site)] = from_left_matrix(split.u, L, K1);
    const CMatrix right = split.s.asDiagonal() * split.vh;
    sites_[static_cast<std::size_t>(site + 1)] = from_right_matrix(right, K2, R);
    center_ = site + 1;
}

void Chain::apply_kraus(const KrausSet& k, int site, TruncationLog& log, const Caps& caps) {
    check_caps(caps);
    check_site(site, n());
    if (k.ops.empty()) {
        throw PreconditionError("empty Kraus set");
    }
    if (k.completeness_error() > 1e-12) {
        throw PreconditionError("Kraus operators are not trace preserving");
    }
    move_center(site);
    const SiteTensor& t = sites_[static_cast<std::size_t>(site)];
    const int L = t.left, K = t.kraus, R = t.right;
    const int M = static_cast<int>(k.ops.size());
    const int KM = K * M;
    // rows (l, p, r), columns (m, k).
    CMatrix grown = CMatrix::Zero(L * 2 * R, KM);
    for (int m = 0; m < M; ++m) {
        const Mat2& op = k.ops[static_cast<std::size_t>(m)];
        for (int l = 0; l < L; ++l) {
            for (int kk = 0; kk < K; ++kk) {
                for (int r = 0; r < R; ++r) {
                    const cplx a0 = t(l, 0, kk, r);
                    const cplx a1 = t(l, 1, kk, r);
                    grown((l * 2 + 0) * R + r, m * K + kk) = op(0, 0) * a0 + op(0, 1) * a1;
                    grown((l * 2 + 1) * R + r, m * K + kk) = op(1, 0) * a0 + op(1, 1) * a1;
                }
            }
        }
    }
    SvdSplit split = truncated_svd(grown, caps.max_kraus);
    if (split.delta > 0.0 && split.discarded > 0 && split.u.cols() == caps.max_kraus) {
        log.append(split.delta, TruncationKind::kraus, site);
    }
    const int chi = static_cast<int>(split.u.cols());
    SiteTensor nt(L, chi, R);
    for (int l = 0; l < L; ++l) {
        for (int p = 0; p < 2; ++p) {
            for (int r = 0; r < R; ++r) {
                for (int c = 0; c < chi; ++c) {
                    nt(l, p, c, r) = split.u((l * 2 + p) * R + r, c) * split.s(c);
                }
            }
        }
    }
    sites_[static_cast<std::size_t>(site)] = std::move(nt);
}

double Chain::norm_squared() const {
    CMatrix env = CMatrix::Ones(1, 1);
    for (const SiteTensor& t : sites_) {
        CMatrix next = CMatrix::Zero(t.right, t.right);
        // next(r, r') = sum env(l, l') A(l, p, k, r) conj(A(l', p, k, r'))
        const CMatrix a = as_left_matrix(t);  // rows (l, p, k)
        const int pk = 2 * t.kraus;
        for (int l = 0; l < t.left; ++l) {
            for (int lp = 0; lp < t.left; ++lp) {
                const cplx e = env(l, lp);
                if (e == cplx(0.0)) {
                    continue;
                }
                next.noalias() += e * a.middleRows(l * pk, pk).transpose() * a.middleRows(lp * pk, pk).conjugate();
            }
        }
        env = std::move(next);
    }
    return env(0, 0).real();
}

void Chain::normalize() {
    const double nrm = norm_squared();
    if (!(nrm > 0.0)) {
        throw PreconditionError("cannot normalize a zero state");
    }
    const double s = 1.0 / std::sqrt(nrm);
    for (cplx& x : sites_[static_cast<std::size_t>(center_)].data) {
        x *= s;
    }
}

CMatrix Chain::dense_density() const {
    if (n() > kDenseQubitCap) {
        throw DimensionError("dense conversion limited to " + std::to_string(kDenseQubitCap) + " qubits");
    }
    // f rows (x, l), columns (x', l'), x a physical prefix and l the open bond.
    CMatrix f = CMatrix::Ones(1, 1);
    Eigen::Index prefix = 1;
    int bond = 1;
    for (const SiteTensor& t : sites_) {
        const int w = 2 * t.right;
        // ak[k] rows l, columns (p, r)
        std::vector<CMatrix> ak(static_cast<std::size_t>(t.kraus), CMatrix(t.left, w));
        for (int k = 0; k < t.kraus; ++k) {
            for (int l = 0; l < t.left; ++l) {
                for (int p = 0; p < 2; ++p) {
                    for (int r = 0; r < t.right; ++r) {
                        ak[static_cast<std::size_t>(k)](l, p * t.right + r) = t(l, p, k, r);
                    }
                }
            }
        }
        CMatrix g = CMatrix::Zero(prefix * w, prefix * w);
        for (Eigen::Index x = 0; x < prefix; ++x) {
            for (Eigen::Index xp = 0; xp < prefix; ++xp) {
                const CMatrix blk = f.block(x * bond, xp * bond, bond, bond);
                for (const CMatrix& a : ak) {
                    g.block(x * w, xp * w, w, w).noalias() += a.transpose() * blk * a.conjugate();
                }
            }
        }
        f = std::move(g);
        prefix *= 2;
        bond = t.right;
    }
    return f;
}

CVector Chain::dense_vector() const {
    if (n() > kDenseQubitCap) {
        throw DimensionError("dense conversion limited to " + std::to_string(kDenseQubitCap) + " qubits");
    }
    CMatrix psi = CMatrix::Ones(1, 1);
    for (const SiteTensor& t : sites_) {
        if (t.kraus != 1) {
            throw PreconditionError("state is mixed");
        }
        CMatrix next = CMatrix::Zero(psi.rows() * 2, t.right);
        for (Eigen::Index x = 0; x < psi.rows(); ++x) {
            for (int p = 0; p < 2; ++p) {
                for (int r = 0; r < t.right; ++r) {
                    cplx acc = 0;
                    for (int l = 0; l < t.left; ++l) {
                        acc += psi(x, l) * t(l, p, 0, r);
                    }
                    next(x * 2 + p, r) = acc;
                }
            }
        }
        psi = std::move(next);
    }
    return psi.col(0);
}

namespace {

struct SamplingFrame {
    const std::vector<SiteTensor>* sites;
    const QubitPOVM* povm;
    Rng* rng;
    SampleRecord* rec;
    std::vector<std::uint8_t> prefix;
    std::size_t written = 0;
};

// Shots sharing a prefix share its environment; counts are split over the
// outcomes with sequential binomial draws.
void sample_branch(SamplingFrame& f, int site, const CMatrix& env, std::size_t count) {
    const int n = static_cast<int>(f.sites->size());
    if (site == n) {
        for (std::size_t i = 0; i < count; ++i) {
            std::copy(f.prefix.begin(), f.prefix.end(),
                      f.rec->outcomes.begin() + static_cast<std::ptrdiff_t>(f.written * f.prefix.size()));
            ++f.written;
        }
        return;
    }
    const SiteTensor& t = (*f.sites)[static_cast<std::size_t>(site)];
    const int L = t.left, K = t.kraus, R = t.right;
    const int m = f.povm->size();
    // C(l', p, k, r) = sum_l env(l, l') A(l, p, k, r); rows l', columns (p, k, r).
    const CMatrix a = as_right_matrix(t);
    const CMatrix cm = env.transpose() * a;
    // rho_site(p, p') = sum_{l', k, r} C(l', p, k, r) conj(A(l', p', k, r))
    Mat2 rho = Mat2::Zero();
    const int kr = K * R;
    for (int lp = 0; lp < L; ++lp) {
        for (int p = 0; p < 2; ++p) {
            for (int pp = 0; pp < 2; ++pp) {
                rho(p, pp) +=
                    (cm.row(lp).segment(p * kr, kr).array() * a.row(lp).segment(pp * kr, kr).conjugate().array())
                        .sum();
            }
        }
    }
    std::vector<double> q(static_cast<std::size_t>(m));
    double total = 0.0;
    for (int o = 0; o < m; ++o) {
        const double v = std::max(0.0, (rho * (*f.povm)[o]).trace().real());
        q[static_cast<std::size_t>(o)] = v;
        total += v;
    }
    if (!(total > 0.0)) {
        throw PreconditionError("sampling reached a zero-probability branch");
    }
    std::size_t remaining = count;
    double mass = total;
    for (int o = 0; o < m && remaining > 0; ++o) {
        const double qo = q[static_cast<std::size_t>(o)];
        std::size_t c = 0;
        if (o == m - 1 || qo >= mass) {
            c = remaining;
        } else if (qo > 0.0) {
            c = std::binomial_distribution<std::size_t>(remaining, std::min(1.0, qo / mass))(*f.rng);
        }
        mass -= qo;
        if (c == 0) {
            continue;
        }
        if (qo <= 0.0) {
            throw PreconditionError("sampling reached a zero-probability branch");
        }
        remaining -= c;
        // env'(r, r') = sum C(l', p, k, r) M(p', p) conj(A(l', p', k, r')) / q
        const Mat2& mo = (*f.povm)[o];
        CMatrix next = CMatrix::Zero(R, R);
        for (int lp = 0; lp < L; ++lp) {
            for (int k = 0; k < K; ++k) {
                for (int p = 0; p < 2; ++p) {
                    for (int pp = 0; pp < 2; ++pp) {
                        const cplx w = mo(pp, p);
                        if (w == cplx(0.0)) {
                            continue;
                        }
                        const auto left = cm.row(lp).segment((p * K + k) * R, R);
                        const auto right = a.row(lp).segment((pp * K + k) * R, R);
                        next.noalias() += w * left.transpose() * right.conjugate();
                    }
                }
            }
        }
        f.prefix[static_cast<std::size_t>(site)] = static_cast<std::uint8_t>(o);
        sample_branch(f, site + 1, next / qo, c);
    }
}

}  // namespace

SampleRecord Chain::sample(const QubitPOVM& povm, std::size_t shots, std::uint64_t seed) const {
    if (povm.size() < 1 || povm.size() > 255) {
        throw PreconditionError("POVM outcome count must be in [1, 255]");
    }
    Chain c = *this;
    c.move_center(0);
    c.normalize();
    SampleRecord rec;
    rec.n = n();
    rec.outcomes_per_qubit = povm.size();
    rec.povm_id = povm.name();
    rec.seed = seed;
    rec.outcomes.resize(shots * static_cast<std::size_t>(n()));
    Rng rng(seed);
    SamplingFrame f{&c.sites_, &povm, &rng, &rec, std::vector<std::uint8_t>(static_cast<std::size_t>(n())), 0};
    if (shots > 0) {
        sample_branch(f, 0, CMatrix::Ones(1, 1), shots);
    }
    // Shots come out grouped by prefix; restore exchangeability.
    const auto w = static_cast<std::size_t>(n());
    for (std::size_t i = shots; i > 1; --i) {
        const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
        if (j != i - 1) {
            std::swap_ranges(rec.outcomes.begin() + static_cast<std::ptrdiff_t>((i - 1) * w),
                             rec.outcomes.begin() + static_cast<std::ptrdiff_t>(i * w),
                             rec.outcomes.begin() + static_cast<std::ptrdiff_t>(j * w));
        }
    }
    return rec;
}

Chain Chain::concatenate(const Chain& a, const Chain& b) {
    std::vector<SiteTensor> sites = a.sites_;
    sites.insert(sites.end(), b.sites_.begin(), b.sites_.end());
    return Chain(std::move(sites));
}

}  // namespace detail

Mps Mps::zero(int n) {
    if (n < 1) {
        throw DimensionError("state needs at least one qubit");
    }
    std::vector<SiteTensor> sites(static_cast<std::size_t>(n), SiteTensor(1, 1, 1));
    for (auto& t : sites) {
        t(0, 0, 0, 0) = 1.0;
    }
    return Mps(detail::Chain(std::move(sites)));
}

Mps Mps::from_local_tensors(const std::vector<LocalTensor>& tensors) {
    std::vector<SiteTensor> sites;
    sites.reserve(tensors.size());
    for (const LocalTensor& lt : tensors) {
        SiteTensor t(lt.left, 1, lt.right);
        for (int l = 0; l < lt.left; ++l) {
            for (int p = 0; p < 2; ++p) {
                for (int r = 0; r < lt.right; ++r) {
                    t(l, p, 0, r) = lt.at(l, p, r);
                }
            }
        }
        sites.push_back(std::move(t));
    }
    return Mps(detail::Chain(std::move(sites)));
}

Mps Mps::random(const RandomStateSpec& spec) { return from_local_tensors(draw_local_tensors(spec)); }

Mps Mps::from_dense(const DenseState& state) {
    if (!state.is_pure()) {
        throw PreconditionError("matrix product state needs a pure input");
    }
    const int n = state.n();
    std::vector<SiteTensor> sites;
    CMatrix rest = state.vector().transpose();  // 1 x 2^n
    int bond = 1;
    for (int k = 0; k < n - 1; ++k) {
        const Eigen::Index cols = rest.cols() / 2;
        CMatrix m(bond * 2, cols);
        for (int l = 0; l < bond; ++l) {
            for (int p = 0; p < 2; ++p) {
                m.row(l * 2 + p) = rest.row(l).segment(p * cols, cols);
            }
        }
        SvdSplit split = truncated_svd(m, INT_MAX);
        sites.push_back(from_left_matrix(split.u, bond, 1));
        rest = split.s.asDiagonal() * split.vh;
        bond = static_cast<int>(split.u.cols());
    }
    SiteTensor last(bond, 1, 1);
    for (int l = 0; l < bond; ++l) {
        for (int p = 0; p < 2; ++p) {
            last(l, p, 0, 0) = rest(l, p);
        }
    }
    sites.push_back(std::move(last));
    return Mps(detail::Chain(std::move(sites)));
}

Mps Mps::concatenate(const Mps& a, const Mps& b) { return Mps(detail::Chain::concatenate(a.chain_, b.chain_)); }

void Mps::apply_single_qubit_gate(const Mat2& u, int site) { chain_.apply_one(u, site); }

void Mps::apply_two_qubit_gate(const Eigen::Matrix4cd& g, int site, TruncationLog& log, const Caps& caps) {
    chain_.apply_two(g, site, log, caps);
}

Lpdo Lpdo::zero(int n) { return from_mps(Mps::zero(n)); }

Lpdo Lpdo::from_mps(const Mps& mps) { return Lpdo(mps.chain_); }

void Lpdo::apply_single_qubit_gate(const Mat2& u, int site) { chain_.apply_one(u, site); }

void Lpdo::apply_two_qubit_gate(const Eigen::Matrix4cd& g, int site, TruncationLog& log, const Caps& caps) {
    chain_.apply_two(g, site, log, caps);
}

void Lpdo::apply_channel(const KrausSet& kraus, int site, TruncationLog& log, const Caps& caps) {
    chain_.apply_kraus(kraus, site, log, caps);
}

Eigen::Matrix4cd cnot_matrix(bool control_first) {
    Eigen::Matrix4cd g = Eigen::Matrix4cd::Zero();
    if (control_first) {
        g(0, 0) = g(1, 1) = g(2, 3) = g(3, 2) = 1.0;
    } else {
        g(0, 0) = g(2, 2) = g(1, 3) = g(3, 1) = 1.0;
    }
    return g;
}

TnState apply_single_qubit_gate(TnState state, const Mat2& u, int site) {
    std::visit([&](auto& s) { s.apply_single_qubit_gate(u, site); }, state);
    return state;
}

TnState apply_cnot(TnState state, int control, int target, double lambda, TruncationLog& log, const Caps& caps,
                   NoiseTarget noise_on) {
    if (std::abs(control - target) != 1) {
        throw PreconditionError("CNOT qubits must be nearest neighbours");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw PreconditionError("depolarizing factor must lie in [0, 1]");
    }
    const int site = std::min(control, target);
    const Eigen::Matrix4cd g = cnot_matrix(control < target);
    std::visit([&](auto& s) { s.apply_two_qubit_gate(g, site, log, caps); }, state);
    if (lambda == 0.0) {
        return state;
    }
    if (auto* mps = std::get_if<Mps>(&state)) {
        state = Lpdo::from_mps(*mps);
    }
    Lpdo& rho = std::get<Lpdo>(state);
    const KrausSet ch = KrausSet::depolarizing(lambda);
    if (noise_on == NoiseTarget::both) {
        rho.apply_channel(ch, control, log, caps);
    }
    rho.apply_channel(ch, target, log, caps);
    return state;
}

DenseState to_dense(const Mps& state) {
    CVector v = state.chain().dense_vector();
    v /= v.norm();
    return DenseState::pure(std::move(v));
}

DenseState to_dense(const Lpdo& state) {
    CMatrix rho = state.chain().dense_density();
    rho /= rho.trace().real();
    rho = (0.5 * (rho + rho.adjoint())).eval();
    return DenseState::mixed(std::move(rho));
}

DenseState to_dense(const TnState& state) {
    return std::visit([](const auto& s) { return to_dense(s); }, state);
}

SampleRecord sample_from_tn(const Mps& state, const QubitPOVM& povm, std::size_t shots, std::uint64_t seed) {
    return state.chain().sample(povm, shots, seed);
}

SampleRecord sample_from_tn(const Lpdo& state, const QubitPOVM& povm, std::size_t shots, std::uint64_t seed) {
    return state.chain().sample(povm, shots, seed);
}

SampleRecord sample_from_tn(const TnState& state, const QubitPOVM& povm, std::size_t shots, std::uint64_t seed) {
    return std::visit([&](const auto& s) { return sample_from_tn(s, povm, shots, seed); }, state);
}

}  // namespace qoverlap
