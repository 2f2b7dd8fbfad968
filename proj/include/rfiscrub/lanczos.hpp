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

#ifndef RFISCRUB_LANCZOS_HPP
#define RFISCRUB_LANCZOS_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "rfiscrub/errors.hpp"
#include "rfiscrub/linalg.hpp"
#include "rfiscrub/rng.hpp"

namespace rfiscrub {

struct LanczosOptions {
    // Full reorthogonalization against all previous basis vectors (two
    // classical Gram-Schmidt passes). Set false for the plain three-term
    // recurrence.
    bool full_reorth = true;
    std::uint64_t start_seed = 0x5eedf00dULL;
    double breakdown_rel_tol = 1e-12; // tau_b = tol * ||R||_F
};

/// Cap on iterations: min(M, max(32, 4 * d_expected)).
inline std::size_t max_lanczos_steps(std::size_t dim, std::size_t d_expected) {
    return std::min<std::size_t>(dim, std::max<std::size_t>(32, 4 * d_expected));
}

// Krylov iteration state. A value type: each step consumes the previous
// state; independent runs share nothing.
class LanczosState {
  public:
    std::size_t dim() const { return dim_; }
    std::size_t steps() const { return basis_.size(); } // m
    bool breakdown() const { return breakdown_; }
    std::uint64_t start_seed() const { return start_seed_; }

    const std::vector<CVector>& basis() const { return basis_; }
    const std::vector<double>& alpha() const { return alpha_; }
    /// beta[0] = ||f||; beta[j] = residual norm after step j (length m+1).
    const std::vector<double>& beta() const { return beta_; }
    const CVector& residual() const { return residual_; }

    /// T_m as built so far; requires at least one step.
    Tridiagonal tridiagonal() const {
        if (alpha_.empty()) throw Error("no Lanczos steps taken yet");
        std::vector<double> off(beta_.begin() + 1, beta_.end() - 1);
        return Tridiagonal(alpha_, std::move(off));
    }

  private:
    friend LanczosState lanczos_init(const CovarianceMatrix&, std::optional<CVector>,
                                     const LanczosOptions&);
    friend LanczosState lanczos_step(LanczosState, const CovarianceMatrix&);

    std::size_t dim_ = 0;
    std::vector<CVector> basis_;  // p_1..p_m
    std::vector<double> alpha_;   // alpha_1..alpha_m
    std::vector<double> beta_;    // beta_0..beta_m
    CVector residual_;            // r_m
    bool breakdown_ = false;
    double breakdown_tol_ = 0.0;
    bool full_reorth_ = true;
    std::uint64_t start_seed_ = 0;
};

/// Rayleigh-Ritz extraction from a Lanczos state.
struct RitzPairs {
    std::vector<double> theta;       // descending
    CMatrix y;                       // M x m, column k pairs with theta[k]
    std::vector<double> residuals;   // |beta_m * z_last| estimate per pair
};

inline LanczosState lanczos_init(const CovarianceMatrix& r, std::optional<CVector> f,
                                 const LanczosOptions& opts = {}) {
    LanczosState st;
    st.dim_ = r.dim();
    st.full_reorth_ = opts.full_reorth;
    st.start_seed_ = opts.start_seed;
    st.breakdown_tol_ = opts.breakdown_rel_tol * std::sqrt(frobenius_norm_sq(r));

    if (f.has_value()) {
        if (f->size() != st.dim_) throw DimensionMismatchError("start vector length != M");
        st.residual_ = std::move(*f);
    } else {
        GaussianSource g(opts.start_seed);
        st.residual_.resize(st.dim_);
        for (auto& z : st.residual_) z = g.complex_normal();
        double nrm = 0.0;
        for (const auto& z : st.residual_) nrm += std::norm(z);
        nrm = std::sqrt(nrm);
        for (auto& z : st.residual_) z /= nrm;
    }

    double b0 = 0.0;
    for (const auto& z : st.residual_) b0 += std::norm(z);
    b0 = std::sqrt(b0);
    if (b0 == 0.0) throw ZeroStartVectorError("start vector has zero norm");
    st.beta_.push_back(b0);
    return st;
}

inline LanczosState lanczos_step(LanczosState st, const CovarianceMatrix& r) {
    if (st.breakdown_)
        throw BreakdownError("invariant subspace already found; Ritz values are exact");
    if (st.steps() >= st.dim_) throw Error("Lanczos step count would exceed dimension");
    if (r.dim() != st.dim_) throw DimensionMismatchError("matrix dim != state dim");

    const std::size_t n = st.dim_;
    const double beta_prev = st.beta_.back();

    CVector pj(n);
    for (std::size_t i = 0; i < n; ++i) pj[i] = st.residual_[i] / beta_prev;

    CVector v(n);
    r.matvec(pj, v);

    if (!st.basis_.empty()) {
        const CVector& pm1 = st.basis_.back();
        for (std::size_t i = 0; i < n; ++i) v[i] -= beta_prev * pm1[i];
    }

    double alpha = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        alpha += pj[i].real() * v[i].real() + pj[i].imag() * v[i].imag(); // Re(p^H v)
    for (std::size_t i = 0; i < n; ++i) v[i] -= alpha * pj[i];

    st.basis_.push_back(std::move(pj));

    if (st.full_reorth_) {
        // Two classical Gram-Schmidt passes against the whole basis; the
        // component along p_j from the first pass is folded into alpha.
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t b = 0; b < st.basis_.size(); ++b) {
                const CVector& pb = st.basis_[b];
                cdouble c = 0.0;
                for (std::size_t i = 0; i < n; ++i) c += std::conj(pb[i]) * v[i];
                for (std::size_t i = 0; i < n; ++i) v[i] -= c * pb[i];
                if (pass == 0 && b + 1 == st.basis_.size()) alpha += c.real();
            }
        }
    }

    double beta = 0.0;
    for (const auto& z : v) beta += std::norm(z);
    beta = std::sqrt(beta);

    st.alpha_.push_back(alpha);
    st.beta_.push_back(beta);
    st.residual_ = std::move(v);
    if (beta <= st.breakdown_tol_) st.breakdown_ = true;
    return st;
}

/// Descending Rayleigh-Ritz values only; O(m^2).
inline std::vector<double> ritz_values(const LanczosState& st) {
    if (st.steps() == 0) throw Error("ritz_values requires at least one step");
    return tridiag_eigenvalues(st.tridiagonal());
}

inline RitzPairs ritz_pairs(const LanczosState& st) {
    const std::size_t m = st.steps();
    if (m == 0) throw Error("ritz_pairs requires at least one step");
    const std::size_t n = st.dim();

    const TridiagEigen te = tridiag_eigh(st.tridiagonal());
    const double beta_m = st.beta().back();

    RitzPairs out;
    out.theta = te.values;
    out.y = CMatrix(n, m);
    out.residuals.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        out.residuals[k] = beta_m * std::abs(te.vectors[k][m - 1]);
        for (std::size_t i = 0; i < n; ++i) {
            cdouble acc = 0.0;
            for (std::size_t j = 0; j < m; ++j) acc += st.basis()[j][i] * te.vectors[k][j];
            out.y(i, k) = acc;
        }
    }
    return out;
}

} // namespace rfiscrub

#endif // RFISCRUB_LANCZOS_HPP
