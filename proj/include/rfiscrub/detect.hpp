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

#ifndef RFISCRUB_DETECT_HPP
#define RFISCRUB_DETECT_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rfiscrub/errors.hpp"
#include "rfiscrub/lanczos.hpp"
#include "rfiscrub/linalg.hpp"

namespace rfiscrub {

enum class Method { Qmam, CombinedQmam, Mdl, GmamThreshold, IterativeSinr, EighDirect, None };

inline const char* to_string(Method m) {
    switch (m) {
        case Method::Qmam: return "qmam";
        case Method::CombinedQmam: return "combined-qmam";
        case Method::Mdl: return "mdl";
        case Method::GmamThreshold: return "gmam-threshold";
        case Method::IterativeSinr: return "iterative-sinr";
        case Method::EighDirect: return "eigh";
        case Method::None: return "none";
    }
    return "unknown";
}

inline std::optional<Method> method_from_string(const std::string& s) {
    if (s == "qmam") return Method::Qmam;
    if (s == "combined-qmam") return Method::CombinedQmam;
    if (s == "mdl") return Method::Mdl;
    if (s == "gmam-threshold") return Method::GmamThreshold;
    if (s == "iterative-sinr") return Method::IterativeSinr;
    if (s == "eigh") return Method::EighDirect;
    if (s == "none") return Method::None;
    return std::nullopt;
}

// Per-band correction factor derived from reference-sky eigenvalue weights.
struct EpsilonCalibration {
    double epsilon = 1.0;
    std::vector<std::pair<double, double>> constituents; // (lst_seconds, eps at that LST)
    double freq_hz = 0.0;
    std::size_t source_d_ref = 0;
    std::vector<double> weights; // tail weights w_k = lambda_k / lambda_M (optional)
};

struct DetectionResult {
    std::size_t d_hat = 0;
    std::vector<std::pair<std::size_t, double>> statistic_trail; // (candidate, statistic)
    Method method = Method::Qmam;
    std::size_t lanczos_steps_used = 0;
    bool accepted = true;   // false: no candidate satisfied the test
    bool degenerate = false;
    bool clamped = false;   // nonpositive eigenvalues were clamped
    std::uint64_t start_seed = 0;
};

struct DetectConfig {
    std::size_t m_max = 0;      // 0: use min(M, max(32, 4*d_expected))
    std::size_t d_expected = 8;
    std::size_t guard = 2;      // require m >= d_hat + guard before trusting phi
    double tau_phi = 0.0;
    // Absorbs floating-point noise in the phi <= tau_phi comparison so the
    // exact-calibration case (phi == 0 up to rounding) is accepted.
    double phi_slack = 1e-12;
    bool paper_literal_start = false; // start candidate sweep at d_hat = 1
    bool full_reorth = true;
    std::uint64_t start_seed = 0x5eedf00dULL;
    std::optional<CVector> start_vector;
};

/// Geometric mean over arithmetic mean of the eigenvalue tail after d_hat.
/// Nonpositive tail values are clamped to 1e-15 * lambda_1 (sets *clamped).
inline double gmam(std::span<const double> eigenvalues, std::size_t d_hat,
                   bool* clamped = nullptr) {
    const std::size_t m = eigenvalues.size();
    if (d_hat >= m) throw EmptyTailError("gmam tail is empty");
    const double lead = eigenvalues.front();
    if (!(lead > 0.0)) throw NonPositiveEigenvalueError("leading eigenvalue not positive");
    const double floor = 1e-15 * lead;

    double log_sum = 0.0, sum = 0.0;
    for (std::size_t k = d_hat; k < m; ++k) {
        double v = eigenvalues[k];
        if (v < floor) {
            v = floor;
            if (clamped != nullptr) *clamped = true;
        }
        log_sum += std::log(v);
        sum += v;
    }
    const double tail = static_cast<double>(m - d_hat);
    return std::exp(log_sum / tail) / (sum / tail);
}

/// Quadratic mean over arithmetic mean of the tail; >= 1 by the power-mean
/// inequality, equal to 1 iff the tail is constant.
inline double qmam_from_eigenvalues(std::span<const double> eigenvalues, std::size_t d_hat) {
    const std::size_t m = eigenvalues.size();
    if (d_hat >= m) throw EmptyTailError("qmam tail is empty");
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t k = d_hat; k < m; ++k) {
        sum += eigenvalues[k];
        sum_sq += eigenvalues[k] * eigenvalues[k];
    }
    const double tail = static_cast<double>(m - d_hat);
    return std::sqrt(sum_sq / tail) / (sum / tail);
}

// QMAM from trace, squared Frobenius norm, and the top d_hat Rayleigh-Ritz
// values only; no eigendecomposition. Equals the eigenvalue form when the
// Ritz values have converged.
inline double qmam_from_ritz(double trace_r, double frob_sq_r, std::span<const double> theta,
                             std::size_t d_hat, std::size_t dim) {
    if (d_hat > theta.size()) throw DimensionMismatchError("d_hat exceeds available Ritz values");
    if (d_hat >= dim) throw EmptyTailError("qmam tail is empty");
    double sum_theta = 0.0, sum_theta_sq = 0.0;
    for (std::size_t k = 0; k < d_hat; ++k) {
        sum_theta += theta[k];
        sum_theta_sq += theta[k] * theta[k];
    }
    const double radicand = frob_sq_r - sum_theta_sq;
    if (radicand < 0.0)
        throw NegativeRadicandError("Ritz values overshoot the Frobenius norm; unconverged");
    const double denom = trace_r - sum_theta;
    if (!(denom > 0.0))
        throw NegativeRadicandError("Ritz values overshoot the trace; unconverged");
    const double tail = static_cast<double>(dim - d_hat);
    return std::sqrt(radicand / tail) / (denom / tail);
}

/// Test statistic phi = log(epsilon * eta), natural log.
inline double phi_statistic(double epsilon, double eta) {
    if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
    return std::log(epsilon * eta);
}

// Calibration from an RFI-free (or already cleaned) reference covariance:
// tail weights w_k = lambda_k / lambda_M for k > d_ref, and
// epsilon = AM(w) / QM(w), the reciprocal of the reference-tail QMAM.
inline EpsilonCalibration calibrate_epsilon(const CovarianceMatrix& reference,
                                            std::size_t d_ref) {
    const std::size_t m = reference.dim();
    if (d_ref >= m) throw EmptyTailError("d_ref leaves no reference tail");
    auto ed = eigh(reference);

    // PSD repair of numerically-negative values before forming weights.
    const double psd_floor = -1e-10 * trace(reference) / static_cast<double>(m);
    for (auto& v : ed.values)
        if (v < 0.0 && v >= psd_floor) v = 0.0;
    const double lambda_min = ed.values.back();
    if (!(lambda_min > 0.0))
        throw ZeroMinEigenvalueError("reference smallest eigenvalue is not positive");

    EpsilonCalibration cal;
    cal.freq_hz = reference.freq_hz();
    cal.source_d_ref = d_ref;
    cal.weights.reserve(m - d_ref);
    for (std::size_t k = d_ref; k < m; ++k) cal.weights.push_back(ed.values[k] / lambda_min);
    cal.epsilon = 1.0 / qmam_from_eigenvalues(cal.weights, 0);
    cal.constituents = {{reference.lst_seconds(), cal.epsilon}};
    return cal;
}

/// Combined calibration across same-sky references: eps_f = mean of the
/// per-LST constituents.
inline EpsilonCalibration combine_calibrations(std::span<const EpsilonCalibration> cals) {
    if (cals.empty()) throw Error("no calibrations to combine");
    EpsilonCalibration out;
    out.freq_hz = cals.front().freq_hz;
    out.source_d_ref = cals.front().source_d_ref;
    double sum = 0.0;
    for (const auto& c : cals) {
        if (std::abs(c.freq_hz - out.freq_hz) > 1e-6 * std::max(1.0, std::abs(out.freq_hz)))
            throw Error("cannot combine calibrations from different bands");
        for (const auto& [lst, eps] : c.constituents) {
            out.constituents.emplace_back(lst, eps);
            sum += eps;
        }
    }
    out.epsilon = sum / static_cast<double>(out.constituents.size());
    return out;
}

/// Detection result together with the Lanczos state that produced it, so the
/// removal step can reuse the Krylov basis.
struct QmamDetection {
    DetectionResult result;
    LanczosState state;
};

// Coupled detection loop: Lanczos steps supply Rayleigh-Ritz values, the
// candidate count sweeps upward, and the first candidate with
// phi <= tau_phi is accepted. Never touches the full eigendecomposition.
inline QmamDetection detect_qmam_with_state(const CovarianceMatrix& r,
                                            const EpsilonCalibration& cal,
                                            const DetectConfig& cfg = {}) {
    if (cal.freq_hz != 0.0 && r.freq_hz() != 0.0 &&
        std::abs(cal.freq_hz - r.freq_hz()) > 1e-6 * std::abs(cal.freq_hz))
        throw Error("calibration band does not match covariance band");

    const std::size_t dim = r.dim();
    const double tr = trace(r);
    const double fr2 = frobenius_norm_sq(r);
    const std::size_t m_max =
        cfg.m_max > 0 ? std::min(cfg.m_max, dim) : max_lanczos_steps(dim, cfg.d_expected);

    LanczosOptions lopts;
    lopts.full_reorth = cfg.full_reorth;
    lopts.start_seed = cfg.start_seed;
    LanczosState st = lanczos_init(r, cfg.start_vector, lopts);

    DetectionResult res;
    res.method = Method::Qmam;
    res.start_seed = cfg.start_seed;

    std::size_t d_hat = cfg.paper_literal_start ? 1 : 0;
    std::vector<double> theta;
    std::size_t theta_at_m = std::numeric_limits<std::size_t>::max();
    bool accepted = false;

    while (d_hat < dim) {
        // Convergence margin: grow the Krylov space until m >= d_hat + guard
        // (breakdown makes the available Ritz values exact, waiving the
        // margin).
        while (!st.breakdown() && st.steps() < m_max && st.steps() < d_hat + cfg.guard)
            st = lanczos_step(std::move(st), r);
        const bool margin_ok = st.breakdown() || st.steps() >= d_hat + cfg.guard;
        if (!margin_ok) break;               // m_max exhausted
        if (d_hat > st.steps()) break;       // breakdown left too few Ritz values

        if (d_hat > 0 && theta_at_m != st.steps()) {
            theta = ritz_values(st);
            theta_at_m = st.steps();
        }

        double phi;
        try {
            const double eta = qmam_from_ritz(tr, fr2, theta, d_hat, dim);
            phi = phi_statistic(cal.epsilon, eta);
        } catch (const NegativeRadicandError&) {
            // Ritz overshoot; take one more step and re-evaluate, or give up
            // on this candidate if the iteration cannot grow.
            if (!st.breakdown() && st.steps() < m_max) {
                st = lanczos_step(std::move(st), r);
                continue;
            }
            res.statistic_trail.emplace_back(d_hat, std::numeric_limits<double>::infinity());
            ++d_hat;
            continue;
        }

        res.statistic_trail.emplace_back(d_hat, phi);
        if (phi <= cfg.tau_phi + cfg.phi_slack) {
            accepted = true;
            break;
        }
        ++d_hat;
    }

    res.d_hat = d_hat;
    res.accepted = accepted;
    res.lanczos_steps_used = st.steps();
    if (!accepted && !res.statistic_trail.empty())
        res.d_hat = res.statistic_trail.back().first;
    return {std::move(res), std::move(st)};
}

inline DetectionResult detect_qmam(const CovarianceMatrix& r, const EpsilonCalibration& cal,
                                   const DetectConfig& cfg = {}) {
    return detect_qmam_with_state(r, cal, cfg).result;
}

// Wax-Kailath minimum description length over the full spectrum:
// MDL(k) = -N (M-k) log L(lambda_{k+1..M}) + 0.5 k (2M-k) log N.
inline DetectionResult detect_mdl(const CovarianceMatrix& r) {
    if (r.sample_count() == 0)
        throw Error("MDL requires a finite sample count (N > 0)");
    const std::size_t m = r.dim();
    const double n = static_cast<double>(r.sample_count());

    auto ed = eigh(r);

    DetectionResult res;
    res.method = Method::Mdl;
    res.degenerate = (r.sample_count() == 1);

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) {
        bool clamped = false;
        const double l = gmam(ed.values, k, &clamped);
        res.clamped = res.clamped || clamped;
        const double crit = -n * static_cast<double>(m - k) * std::log(l) +
                            0.5 * static_cast<double>(k) * static_cast<double>(2 * m - k) *
                                std::log(n);
        res.statistic_trail.emplace_back(k, crit);
        if (crit < best) {
            best = crit;
            res.d_hat = k;
        }
    }
    return res;
}

} // namespace rfiscrub

#endif // RFISCRUB_DETECT_HPP
