// SPDX-License-Identifier: Apache-2.0
//
// rfi-scrub: covariance-domain RFI detection and removal for antenna arrays
// Copyright (C) 2026 the rfi-scrub authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef RFISCRUB_LINALG_HPP
#define RFISCRUB_LINALG_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "rfiscrub/errors.hpp"

namespace rfiscrub {

using cdouble = std::complex<double>;
using CVector = std::vector<cdouble>;

namespace instrument {
// Counts every full dense eigendecomposition. The fast detection path is
// required to leave this untouched; reports expose the per-run delta.
inline std::atomic<std::uint64_t> eigh_calls{0};
} // namespace instrument

/// Dense row-major complex matrix, value type.
struct CMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    CVector data;

    CMatrix() = default;
    CMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

    cdouble& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const cdouble& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static CMatrix identity(std::size_t n) {
        CMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    /// Copy of column j.
    CVector column(std::size_t j) const {
        CVector c(rows);
        for (std::size_t i = 0; i < rows; ++i) c[i] = (*this)(i, j);
        return c;
    }
};

inline bool all_finite(std::span<const cdouble> v) {
    for (const auto& z : v)
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    return true;
}

// M x M Hermitian covariance with band metadata. The constructor symmetrizes
// via (A + A^H)/2, which is bit-stable for inputs that are already Hermitian.
class CovarianceMatrix {
  public:
    CovarianceMatrix(std::size_t dim, CVector entries, double freq_hz = 0.0,
                     std::uint64_t sample_count = 0, double lst_seconds = 0.0)
        : dim_(dim), entries_(std::move(entries)), freq_hz_(freq_hz),
          sample_count_(sample_count), lst_seconds_(lst_seconds) {
        if (dim_ == 0 || entries_.size() != dim_ * dim_)
            throw DimensionMismatchError("covariance entries do not match dim*dim");
        symmetrize();
    }

    static CovarianceMatrix identity(std::size_t dim, double freq_hz = 0.0) {
        CVector e(dim * dim);
        for (std::size_t i = 0; i < dim; ++i) e[i * dim + i] = 1.0;
        return CovarianceMatrix(dim, std::move(e), freq_hz);
    }

    static CovarianceMatrix diagonal(std::span<const double> d, double freq_hz = 0.0) {
        const std::size_t n = d.size();
        CVector e(n * n);
        for (std::size_t i = 0; i < n; ++i) e[i * n + i] = d[i];
        return CovarianceMatrix(n, std::move(e), freq_hz);
    }

    std::size_t dim() const { return dim_; }
    double freq_hz() const { return freq_hz_; }
    std::uint64_t sample_count() const { return sample_count_; }
    double lst_seconds() const { return lst_seconds_; }

    const cdouble& operator()(std::size_t i, std::size_t j) const { return entries_[i * dim_ + j]; }
    std::span<const cdouble> entries() const { return entries_; }

    /// y = R x
    void matvec(std::span<const cdouble> x, std::span<cdouble> y) const {
        if (x.size() != dim_ || y.size() != dim_)
            throw DimensionMismatchError("matvec operand size");
        for (std::size_t i = 0; i < dim_; ++i) {
            const cdouble* row = entries_.data() + i * dim_;
            double acc_re = 0.0, acc_im = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) {
                const double a = row[j].real(), b = row[j].imag();
                const double c = x[j].real(), d = x[j].imag();
                acc_re += a * c - b * d;
                acc_im += a * d + b * c;
            }
            y[i] = {acc_re, acc_im};
        }
    }

    /// Same value-semantics matrix with replaced metadata.
    CovarianceMatrix with_metadata(double freq_hz, std::uint64_t n, double lst) const {
        CovarianceMatrix r = *this;
        r.freq_hz_ = freq_hz;
        r.sample_count_ = n;
        r.lst_seconds_ = lst;
        return r;
    }

  private:
    void symmetrize() {
        for (std::size_t i = 0; i < dim_; ++i) {
            entries_[i * dim_ + i] = cdouble(entries_[i * dim_ + i].real(), 0.0);
            for (std::size_t j = i + 1; j < dim_; ++j) {
                const cdouble a = entries_[i * dim_ + j];
                const cdouble b = entries_[j * dim_ + i];
                const cdouble avg = 0.5 * (a + std::conj(b));
                entries_[i * dim_ + j] = avg;
                entries_[j * dim_ + i] = std::conj(avg);
            }
        }
    }

    std::size_t dim_;
    CVector entries_;
    double freq_hz_;
    std::uint64_t sample_count_;
    double lst_seconds_;
};

/// Sum of the (real) diagonal.
inline double trace(const CovarianceMatrix& r) {
    double t = 0.0;
    for (std::size_t i = 0; i < r.dim(); ++i) t += r(i, i).real();
    return t;
}

/// Squared Frobenius norm, sum |R_ij|^2.
inline double frobenius_norm_sq(const CovarianceMatrix& r) {
    double s = 0.0;
    for (const auto& z : r.entries()) s += z.real() * z.real() + z.imag() * z.imag();
    return s;
}

/// Real symmetric tridiagonal: diagonal alpha (m), off-diagonal beta (m-1, >= 0).
struct Tridiagonal {
    std::vector<double> alpha;
    std::vector<double> beta;

    Tridiagonal(std::vector<double> a, std::vector<double> b)
        : alpha(std::move(a)), beta(std::move(b)) {
        if (alpha.empty() || beta.size() + 1 != alpha.size())
            throw DimensionMismatchError("tridiagonal alpha/beta sizes");
        for (double x : beta)
            if (x < 0.0) throw Error("tridiagonal beta entries must be nonnegative");
    }

    std::size_t size() const { return alpha.size(); }
};

struct EigenDecomposition {
    std::vector<double> values; // descending
    CMatrix vectors;            // column k pairs with values[k]
};

struct TridiagEigen {
    std::vector<double> values;           // descending
    std::vector<std::vector<double>> vectors; // vectors[k] is the eigenvector for values[k]
};

namespace detail {

// QL with implicit Wilkinson shifts on (d, e). If z is non-null it must hold
// n*n doubles (row-major) and is updated by the applied rotations; pass the
// identity to obtain eigenvectors as columns of z.
inline void ql_implicit(std::vector<double>& d, std::vector<double>& e, double* z, std::size_t n) {
    if (n == 0) return;
    e.resize(n, 0.0); // e[n-1] is workspace, zero
    for (std::size_t l = 0; l < n; ++l) {
        std::size_t iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= 1e-300 || std::abs(e[m]) <= 2.3e-16 * dd) break;
            }
            if (m != l) {
                if (iter++ == 80) throw Error("tridiagonal QL failed to converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                std::size_t i = m;
                bool underflow = false;
                while (i-- > l) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    if (z != nullptr) {
                        for (std::size_t k = 0; k < n; ++k) {
                            f = z[k * n + i + 1];
                            z[k * n + i + 1] = s * z[k * n + i] + c * f;
                            z[k * n + i] = c * z[k * n + i] - s * f;
                        }
                    }
                }
                if (underflow) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

/// Descending order with ties broken by original (ascending) position.
inline std::vector<std::size_t> descending_order(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    return idx;
}

} // namespace detail

/// Eigenvalues of a symmetric tridiagonal, descending. O(m^2).
inline std::vector<double> tridiag_eigenvalues(const Tridiagonal& t) {
    std::vector<double> d = t.alpha;
    std::vector<double> e = t.beta;
    if (!std::all_of(d.begin(), d.end(), [](double x) { return std::isfinite(x); }) ||
        !std::all_of(e.begin(), e.end(), [](double x) { return std::isfinite(x); }))
        throw NonFiniteError("tridiagonal has non-finite entries");
    detail::ql_implicit(d, e, nullptr, t.size());
    std::sort(d.begin(), d.end(), std::greater<double>());
    return d;
}

/// Full eigensolve of a symmetric tridiagonal; values descending,
/// vectors[k] is the unit eigenvector paired with values[k].
inline TridiagEigen tridiag_eigh(const Tridiagonal& t) {
    const std::size_t n = t.size();
    std::vector<double> d = t.alpha;
    std::vector<double> e = t.beta;
    if (!std::all_of(d.begin(), d.end(), [](double x) { return std::isfinite(x); }) ||
        !std::all_of(e.begin(), e.end(), [](double x) { return std::isfinite(x); }))
        throw NonFiniteError("tridiagonal has non-finite entries");
    std::vector<double> z(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) z[i * n + i] = 1.0;
    detail::ql_implicit(d, e, z.data(), n);

    const auto order = detail::descending_order(d);
    TridiagEigen out;
    out.values.resize(n);
    out.vectors.assign(n, std::vector<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = d[order[k]];
        for (std::size_t i = 0; i < n; ++i) out.vectors[k][i] = z[i * n + order[k]];
    }
    return out;
}

// Full Hermitian eigendecomposition: Householder reduction to a real
// symmetric tridiagonal followed by implicit-shift QL, O(M^3). Values are
// returned descending with eigenvectors as matching columns.
inline EigenDecomposition eigh(const CovarianceMatrix& r) {
    instrument::eigh_calls.fetch_add(1, std::memory_order_relaxed);

    const std::size_t n = r.dim();
    if (!all_finite(r.entries())) throw NonFiniteError("covariance has NaN/Inf entries");

    CMatrix w(n, n);
    std::copy(r.entries().begin(), r.entries().end(), w.data.begin());
    CMatrix u = CMatrix::identity(n);

    CVector v(n), p(n);
    for (std::size_t k = 0; k + 2 < n; ++k) {
        const std::size_t nb = n - k - 1; // trailing block size
        double xnorm2 = 0.0;
        for (std::size_t i = k + 1; i < n; ++i) xnorm2 += std::norm(w(i, k));
        const double xnorm = std::sqrt(xnorm2);
        if (xnorm == 0.0) continue;

        const cdouble alpha = w(k + 1, k);
        const double aab = std::abs(alpha);
        const cdouble phase = (aab > 0.0) ? alpha / aab : cdouble(1.0, 0.0);

        // v = x + phase*|x| e1 reflects x onto -phase*|x| e1
        for (std::size_t i = 0; i < nb; ++i) v[i] = w(k + 1 + i, k);
        v[0] += phase * xnorm;
        const double vnorm2 = 2.0 * xnorm * (xnorm + aab);
        if (vnorm2 == 0.0) continue;
        const double tau = 2.0 / vnorm2;

        // p = tau * B v on the trailing Hermitian block B
        for (std::size_t i = 0; i < nb; ++i) {
            cdouble acc = 0.0;
            const cdouble* row = &w(k + 1 + i, k + 1);
            for (std::size_t j = 0; j < nb; ++j) acc += row[j] * v[j];
            p[i] = tau * acc;
        }
        cdouble vhp = 0.0;
        for (std::size_t i = 0; i < nb; ++i) vhp += std::conj(v[i]) * p[i];
        const cdouble kk = 0.5 * tau * vhp;
        for (std::size_t i = 0; i < nb; ++i) p[i] -= kk * v[i]; // q

        // B <- B - q v^H - v q^H
        for (std::size_t i = 0; i < nb; ++i) {
            cdouble* row = &w(k + 1 + i, k + 1);
            const cdouble qi = p[i], vi = v[i];
            for (std::size_t j = 0; j < nb; ++j)
                row[j] -= qi * std::conj(v[j]) + vi * std::conj(p[j]);
        }

        w(k + 1, k) = -phase * xnorm;
        w(k, k + 1) = std::conj(w(k + 1, k));
        for (std::size_t i = k + 2; i < n; ++i) {
            w(i, k) = 0.0;
            w(k, i) = 0.0;
        }

        // U <- U (I - tau v v^H) on columns k+1..n-1
        for (std::size_t rrow = 0; rrow < n; ++rrow) {
            cdouble acc = 0.0;
            cdouble* urow = &u(rrow, k + 1);
            for (std::size_t j = 0; j < nb; ++j) acc += urow[j] * v[j];
            acc *= tau;
            for (std::size_t j = 0; j < nb; ++j) urow[j] -= acc * std::conj(v[j]);
        }
    }

    // Phase-normalize the subdiagonal to real nonnegative values.
    std::vector<double> d(n), e(n > 1 ? n - 1 : 0);
    std::vector<cdouble> s(n, cdouble(1.0, 0.0));
    for (std::size_t i = 0; i < n; ++i) d[i] = w(i, i).real();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const cdouble sub = w(i + 1, i);
        const double m = std::abs(sub);
        e[i] = m;
        s[i + 1] = (m > 0.0) ? std::conj(sub) * s[i] / m : s[i];
    }
    // Fold phases into U: column i scaled by conj(s_i).
    for (std::size_t j = 0; j < n; ++j) {
        const cdouble scale = std::conj(s[j]);
        for (std::size_t i = 0; i < n; ++i) u(i, j) *= scale;
    }

    std::vector<double> z(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) z[i * n + i] = 1.0;
    detail::ql_implicit(d, e, z.data(), n);

    const auto order = detail::descending_order(d);

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = CMatrix(n, n);
    for (std::size_t k = 0; k < n; ++k) out.values[k] = d[order[k]];
    // vectors = U * Z (complex * real), with Z columns permuted into order
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t src = order[k];
            double acc_re = 0.0, acc_im = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double zz = z[j * n + src];
                acc_re += u(i, j).real() * zz;
                acc_im += u(i, j).imag() * zz;
            }
            out.vectors(i, k) = {acc_re, acc_im};
        }
    }
    return out;
}

} // namespace rfiscrub

#endif // RFISCRUB_LINALG_HPP
