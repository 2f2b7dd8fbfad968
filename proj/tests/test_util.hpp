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

#ifndef RFISCRUB_TEST_UTIL_HPP
#define RFISCRUB_TEST_UTIL_HPP

#include <complex>
#include <cstdint>
#include <vector>

#include "rfiscrub/linalg.hpp"
#include "rfiscrub/rng.hpp"

namespace testutil {

using rfiscrub::cdouble;
using rfiscrub::CMatrix;
using rfiscrub::CovarianceMatrix;
using rfiscrub::CVector;

/// Random orthonormal complex basis via Gram-Schmidt on a Gaussian matrix.
inline CMatrix random_unitary(std::size_t n, std::uint64_t seed) {
    rfiscrub::GaussianSource g(seed);
    CMatrix q(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        CVector col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = g.complex_normal();
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t jj = 0; jj < j; ++jj) {
                cdouble dot = 0.0;
                for (std::size_t i = 0; i < n; ++i) dot += std::conj(q(i, jj)) * col[i];
                for (std::size_t i = 0; i < n; ++i) col[i] -= dot * q(i, jj);
            }
        }
        double nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i) nrm += std::norm(col[i]);
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < n; ++i) q(i, j) = col[i] / nrm;
    }
    return q;
}

/// Hermitian PSD matrix with a prescribed (descending not required) spectrum.
inline CovarianceMatrix matrix_with_spectrum(const std::vector<double>& lambda,
                                             std::uint64_t seed, double freq_hz = 0.0,
                                             std::uint64_t sample_count = 0) {
    const std::size_t n = lambda.size();
    CMatrix q = random_unitary(n, seed);
    CVector e(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            cdouble acc = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                acc += q(i, k) * lambda[k] * std::conj(q(j, k));
            e[i * n + j] = acc;
        }
    return CovarianceMatrix(n, std::move(e), freq_hz, sample_count);
}

/// Random PSD matrix with eigenvalues uniform in [lo, hi].
inline CovarianceMatrix random_psd(std::size_t n, std::uint64_t seed, double lo = 0.5,
                                   double hi = 2.0) {
    rfiscrub::GaussianSource g(seed ^ 0x5a5a5a5aULL);
    std::vector<double> lam(n);
    for (auto& x : lam) x = lo + (hi - lo) * g.uniform01();
    return matrix_with_spectrum(lam, seed);
}

inline double rel_err(double got, double want) {
    const double denom = std::max(std::abs(want), 1e-300);
    return std::abs(got - want) / denom;
}

/// Columns spanning the orthogonal complement of the given directions,
/// built by Gram-Schmidt over the identity.
inline CMatrix orthonormal_complement(const CMatrix& dirs) {
    const std::size_t m = dirs.rows;
    std::vector<CVector> basis;
    for (std::size_t j = 0; j < dirs.cols; ++j) basis.push_back(dirs.column(j));
    CMatrix out(m, m - dirs.cols);
    std::size_t col = 0;
    for (std::size_t cand = 0; cand < m && col < out.cols; ++cand) {
        CVector v(m, 0.0);
        v[cand] = 1.0;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : basis) {
                cdouble dot = 0.0;
                for (std::size_t i = 0; i < m; ++i) dot += std::conj(b[i]) * v[i];
                for (std::size_t i = 0; i < m; ++i) v[i] -= dot * b[i];
            }
        double nrm = 0.0;
        for (const auto& z : v) nrm += std::norm(z);
        nrm = std::sqrt(nrm);
        if (nrm < 1e-7) continue; // candidate inside the span already
        for (auto& z : v) z /= nrm;
        for (std::size_t i = 0; i < m; ++i) out(i, col) = v[i];
        basis.push_back(v);
        ++col;
    }
    if (col != out.cols) throw std::runtime_error("complement construction failed");
    return out;
}

/// ||A - B||_F over complex spans.
inline double frob_diff(std::span<const cdouble> a, std::span<const cdouble> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
    return std::sqrt(s);
}

} // namespace testutil

#endif // RFISCRUB_TEST_UTIL_HPP
