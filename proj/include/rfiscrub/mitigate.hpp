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

#ifndef RFISCRUB_MITIGATE_HPP
#define RFISCRUB_MITIGATE_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rfiscrub/detect.hpp"
#include "rfiscrub/errors.hpp"
#include "rfiscrub/lanczos.hpp"
#include "rfiscrub/linalg.hpp"

namespace rfiscrub {

struct MitigationReport {
    std::size_t d_hat = 0;
    Method method = Method::None;
    double removed_power = 0.0;   // sum of removed eigen/Ritz values
    double residual_trace = 0.0;
    std::size_t lanczos_steps = 0;
    std::int64_t wall_time_ns = 0;
    std::uint64_t eigh_calls = 0; // full decompositions on the math path
    std::uint64_t start_seed = 0;
    bool no_acceptance = false;
    std::vector<std::pair<std::size_t, double>> sinr_curve; // iterative-SINR only
};

namespace detail {

class ScopedTimer {
  public:
    explicit ScopedTimer(std::int64_t& out)
        : out_(out), start_(std::chrono::steady_clock::now()) {}
    ~ScopedTimer() {
        out_ = std::chrono::duration_cast<std::chrono::nanoseconds>(
                   std::chrono::steady_clock::now() - start_)
                   .count();
    }

  private:
    std::int64_t& out_;
    std::chrono::steady_clock::time_point start_;
};

} // namespace detail

// R_d = R - V diag(values) V^H. The raw subtracted matrix is returned
// (re-symmetrized); PSD repair is left to clamp_psd so Eq-style subtraction
// stays literal.
inline std::pair<CovarianceMatrix, MitigationReport>
subtract_subspace(const CovarianceMatrix& r, const CMatrix& vectors,
                  std::span<const double> values) {
    const std::size_t m = r.dim();
    const std::size_t d = values.size();
    if (vectors.cols != d || (d > 0 && vectors.rows != m))
        throw DimensionMismatchError("subspace basis does not match matrix/values");

    if (d > 0) {
        double orth = 0.0;
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) {
                cdouble dot = 0.0;
                for (std::size_t i = 0; i < m; ++i)
                    dot += std::conj(vectors(i, a)) * vectors(i, b);
                if (a == b) dot -= 1.0;
                orth += std::norm(dot);
            }
        if (std::sqrt(orth) > 1e-6 * static_cast<double>(d))
            throw NonOrthonormalBasisError("subspace basis is not orthonormal");
    }

    CVector e(r.entries().begin(), r.entries().end());
    double removed = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        removed += values[k];
        for (std::size_t i = 0; i < m; ++i) {
            const cdouble vik = values[k] * vectors(i, k);
            for (std::size_t j = 0; j < m; ++j)
                e[i * m + j] -= vik * std::conj(vectors(j, k));
        }
    }
    CovarianceMatrix out(m, std::move(e), r.freq_hz(), r.sample_count(), r.lst_seconds());

    MitigationReport rep;
    rep.d_hat = d;
    rep.removed_power = removed;
    rep.residual_trace = trace(out);
    return {std::move(out), rep};
}

/// PSD repair: negative eigenvalues clamped to zero, matrix reconstructed.
/// Costs a full eigendecomposition; never used on the fast detection path.
inline CovarianceMatrix clamp_psd(const CovarianceMatrix& r) {
    auto ed = eigh(r);
    const std::size_t m = r.dim();
    bool any = false;
    for (auto& v : ed.values)
        if (v < 0.0) {
            v = 0.0;
            any = true;
        }
    if (!any) return r;
    CVector e(m * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            cdouble acc = 0.0;
            for (std::size_t k = 0; k < m; ++k)
                acc += ed.vectors(i, k) * ed.values[k] * std::conj(ed.vectors(j, k));
            e[i * m + j] = acc;
        }
    return CovarianceMatrix(m, std::move(e), r.freq_hz(), r.sample_count(), r.lst_seconds());
}

// Three-step fast removal: Lanczos steps, the QMAM detection loop, and
// Ritz-vector subtraction of the accepted subspace. No full
// eigendecomposition anywhere on this path.
inline std::pair<CovarianceMatrix, MitigationReport>
clean_qmam(const CovarianceMatrix& r, const EpsilonCalibration& cal,
           const DetectConfig& cfg = {}) {
    MitigationReport rep;
    rep.method = cal.constituents.size() > 1 ? Method::CombinedQmam : Method::Qmam;
    rep.start_seed = cfg.start_seed;

    const std::uint64_t eigh_before = instrument::eigh_calls.load();
    QmamDetection det;
    CovarianceMatrix out = r;
    {
        detail::ScopedTimer timer(rep.wall_time_ns);
        det = detect_qmam_with_state(r, cal, cfg);
        if (!det.result.accepted) {
            rep.no_acceptance = true;
            rep.lanczos_steps = det.result.lanczos_steps_used;
            throw NoAcceptanceError("QMAM sweep exhausted without accepting a subspace size");
        }
        const std::size_t d = det.result.d_hat;
        if (d > 0) {
            auto rp = ritz_pairs(det.state);
            CMatrix top(r.dim(), d);
            for (std::size_t k = 0; k < d; ++k)
                for (std::size_t i = 0; i < r.dim(); ++i) top(i, k) = rp.y(i, k);
            auto [cleaned, sub_rep] = subtract_subspace(r, top, {rp.theta.data(), d});
            out = std::move(cleaned);
            rep.removed_power = sub_rep.removed_power;
        }
    }
    rep.d_hat = det.result.d_hat;
    rep.lanczos_steps = det.result.lanczos_steps_used;
    rep.residual_trace = trace(out);
    rep.eigh_calls = instrument::eigh_calls.load() - eigh_before;
    return {std::move(out), rep};
}

namespace detail {

inline std::pair<CovarianceMatrix, MitigationReport>
subtract_top_eigenpairs(const CovarianceMatrix& r, const EigenDecomposition& ed,
                        std::size_t d_hat) {
    const std::size_t m = r.dim();
    CMatrix top(m, d_hat);
    for (std::size_t k = 0; k < d_hat; ++k)
        for (std::size_t i = 0; i < m; ++i) top(i, k) = ed.vectors(i, k);
    return subtract_subspace(r, top, {ed.values.data(), d_hat});
}

} // namespace detail

/// Baseline removal: one full eigendecomposition, subtract the top d_hat
/// exact eigenpairs.
inline std::pair<CovarianceMatrix, MitigationReport>
clean_with_eigh(const CovarianceMatrix& r, std::size_t d_hat) {
    if (d_hat > r.dim()) throw DimensionMismatchError("d_hat exceeds dimension");
    MitigationReport rep;
    rep.method = Method::EighDirect;
    const std::uint64_t eigh_before = instrument::eigh_calls.load();
    CovarianceMatrix out = r;
    {
        detail::ScopedTimer timer(rep.wall_time_ns);
        auto ed = eigh(r);
        auto [cleaned, sub_rep] = detail::subtract_top_eigenpairs(r, ed, d_hat);
        out = std::move(cleaned);
        rep.removed_power = sub_rep.removed_power;
    }
    rep.d_hat = d_hat;
    rep.residual_trace = trace(out);
    rep.eigh_calls = instrument::eigh_calls.load() - eigh_before;
    return {std::move(out), rep};
}

/// Full-ED baseline with the detector in the loop; only MDL is supported as
/// a detector tag. The decomposition is shared between detection and
/// subtraction.
inline std::pair<CovarianceMatrix, MitigationReport>
clean_with_eigh(const CovarianceMatrix& r, Method detector) {
    if (detector != Method::Mdl)
        throw Error("only the MDL detector is supported on the full-ED path");
    if (r.sample_count() == 0) throw Error("MDL requires a finite sample count (N > 0)");

    MitigationReport rep;
    rep.method = Method::Mdl;
    const std::uint64_t eigh_before = instrument::eigh_calls.load();
    CovarianceMatrix out = r;
    {
        detail::ScopedTimer timer(rep.wall_time_ns);
        auto ed = eigh(r);
        const double n = static_cast<double>(r.sample_count());
        const std::size_t m = r.dim();
        double best = std::numeric_limits<double>::infinity();
        std::size_t d_hat = 0;
        for (std::size_t k = 0; k < m; ++k) {
            const double l = gmam(ed.values, k);
            const double crit = -n * static_cast<double>(m - k) * std::log(l) +
                                0.5 * static_cast<double>(k) *
                                    static_cast<double>(2 * m - k) * std::log(n);
            if (crit < best) {
                best = crit;
                d_hat = k;
            }
        }
        auto [cleaned, sub_rep] = detail::subtract_top_eigenpairs(r, ed, d_hat);
        out = std::move(cleaned);
        rep.d_hat = d_hat;
        rep.removed_power = sub_rep.removed_power;
    }
    rep.residual_trace = trace(out);
    rep.eigh_calls = instrument::eigh_calls.load() - eigh_before;
    return {std::move(out), rep};
}

} // namespace rfiscrub

#endif // RFISCRUB_MITIGATE_HPP
