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

#ifndef RFISCRUB_SKYSIM_HPP
#define RFISCRUB_SKYSIM_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rfiscrub/beamform.hpp"
#include "rfiscrub/errors.hpp"
#include "rfiscrub/linalg.hpp"
#include "rfiscrub/rng.hpp"

namespace rfiscrub {

struct SourceSpec {
    double declination = 0.0;     // radians
    double right_ascension = 0.0; // radians
    double power = 0.0;
};

// Terrestrial interferer: a near-horizon arrival direction, or an explicit
// unit-modulus steering override for constructed test cases.
struct RfiEmitter {
    double azimuth = 0.0;   // radians, from north toward east
    double elevation = 0.0; // radians
    double power = 0.0;
    std::optional<CVector> steering_override;
};

struct SkyScenario {
    ArrayGeometry geometry;
    std::vector<SourceSpec> sources;
    std::vector<RfiEmitter> rfi;
    double noise_power = 1.0;
    double freq_hz = 0.0;
    double lst_seconds = 0.0;
    std::uint64_t seed = 0;
    bool rfi_sinusoid = false; // deterministic-sinusoid interferer signals

    void validate() const {
        geometry.validate();
        if (sources.empty() && rfi.empty() && !(noise_power > 0.0))
            throw Error("scenario needs sources, interferers, or noise");
        for (const auto& s : sources)
            if (!(s.power >= 0.0) || !std::isfinite(s.power))
                throw Error("source power must be finite and nonnegative");
        for (const auto& r : rfi)
            if (!(r.power >= 0.0) || !std::isfinite(r.power))
                throw Error("interferer power must be finite and nonnegative");
    }
};

struct ScenarioTruth {
    std::size_t d_true = 0;
    CMatrix b; // M x d mixing matrix, column i = sqrt(p_i) a_i
    CovarianceMatrix r_exact;
};

namespace detail {

inline CVector rfi_steering(const SkyScenario& sc, const RfiEmitter& e) {
    if (e.steering_override.has_value()) {
        if (e.steering_override->size() != sc.geometry.size())
            throw DimensionMismatchError("steering override length != antenna count");
        return *e.steering_override;
    }
    return steering_for_azel(sc.geometry, e.azimuth, e.elevation, sc.freq_hz).entries;
}

inline CVector source_steering(const SkyScenario& sc, const SourceSpec& s) {
    SkyDirection dir{s.declination, s.right_ascension, sc.lst_seconds};
    return steering_vector(sc.geometry, dir, sc.freq_hz).entries;
}

} // namespace detail

/// Closed-form covariance R = B B^H + sum_j q_j a_j a_j^H + sigma^2 I.
inline ScenarioTruth exact_covariance(const SkyScenario& sc) {
    sc.validate();
    const std::size_t m = sc.geometry.size();

    std::vector<CVector> rfi_cols;
    for (const auto& e : sc.rfi)
        if (e.power > 0.0) rfi_cols.push_back(detail::rfi_steering(sc, e));

    CMatrix b(m, rfi_cols.size());
    CVector entries(m * m, 0.0);
    std::size_t col = 0;
    for (const auto& e : sc.rfi) {
        if (!(e.power > 0.0)) continue;
        const CVector& a = rfi_cols[col];
        const double amp = std::sqrt(e.power);
        for (std::size_t i = 0; i < m; ++i) b(i, col) = amp * a[i];
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                entries[i * m + j] += e.power * a[i] * std::conj(a[j]);
        ++col;
    }
    for (const auto& s : sc.sources) {
        if (!(s.power > 0.0)) continue;
        const CVector a = detail::source_steering(sc, s);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                entries[i * m + j] += s.power * a[i] * std::conj(a[j]);
    }
    for (std::size_t i = 0; i < m; ++i) entries[i * m + i] += sc.noise_power;

    return ScenarioTruth{
        rfi_cols.size(), std::move(b),
        CovarianceMatrix(m, std::move(entries), sc.freq_hz, 0, sc.lst_seconds)};
}

// Finite-N estimate (1/N) sum_t x(t) x(t)^H with unit-variance circular
// Gaussian drive signals. The draw order per sample is fixed (interferers,
// then sources, then noise), so a seed pins the result bit for bit.
inline CovarianceMatrix sample_covariance(const SkyScenario& sc, std::size_t n,
                                          std::uint64_t seed) {
    sc.validate();
    if (n == 0) throw Error("sample count must be positive");
    const std::size_t m = sc.geometry.size();

    std::vector<CVector> rfi_dirs;
    std::vector<double> rfi_amp;
    for (const auto& e : sc.rfi)
        if (e.power > 0.0) {
            rfi_dirs.push_back(detail::rfi_steering(sc, e));
            rfi_amp.push_back(std::sqrt(e.power));
        }
    std::vector<CVector> src_dirs;
    std::vector<double> src_amp;
    for (const auto& s : sc.sources)
        if (s.power > 0.0) {
            src_dirs.push_back(detail::source_steering(sc, s));
            src_amp.push_back(std::sqrt(s.power));
        }

    GaussianSource g(seed);
    // deterministic sinusoid parameters, drawn up front
    std::vector<double> omega(rfi_dirs.size(), 0.0), phase0(rfi_dirs.size(), 0.0);
    if (sc.rfi_sinusoid)
        for (std::size_t k = 0; k < rfi_dirs.size(); ++k) {
            omega[k] = kTwoPi * g.uniform01();
            phase0[k] = kTwoPi * g.uniform01();
        }

    const double sigma = std::sqrt(sc.noise_power);
    CVector acc(m * m, 0.0);
    CVector x(m);
    for (std::size_t t = 0; t < n; ++t) {
        std::fill(x.begin(), x.end(), cdouble(0.0));
        for (std::size_t k = 0; k < rfi_dirs.size(); ++k) {
            cdouble s;
            if (sc.rfi_sinusoid) {
                const double ph = omega[k] * static_cast<double>(t) + phase0[k];
                s = cdouble(std::cos(ph), std::sin(ph));
            } else {
                s = g.complex_normal();
            }
            s *= rfi_amp[k];
            const CVector& a = rfi_dirs[k];
            for (std::size_t i = 0; i < m; ++i) x[i] += s * a[i];
        }
        for (std::size_t k = 0; k < src_dirs.size(); ++k) {
            const cdouble s = src_amp[k] * g.complex_normal();
            const CVector& a = src_dirs[k];
            for (std::size_t i = 0; i < m; ++i) x[i] += s * a[i];
        }
        if (sigma > 0.0)
            for (std::size_t i = 0; i < m; ++i) x[i] += sigma * g.complex_normal();

        for (std::size_t i = 0; i < m; ++i) {
            const cdouble xi = x[i];
            cdouble* row = acc.data() + i * m;
            for (std::size_t j = i; j < m; ++j) row[j] += xi * std::conj(x[j]);
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j) {
            acc[i * m + j] *= inv_n;
            acc[j * m + i] = std::conj(acc[i * m + j]);
        }
    return CovarianceMatrix(m, std::move(acc), sc.freq_hz, n, sc.lst_seconds);
}

inline CovarianceMatrix sample_covariance(const SkyScenario& sc, std::size_t n) {
    return sample_covariance(sc, n, sc.seed);
}

/// Scenario with every interferer silenced; sources and noise untouched.
inline SkyScenario strip_rfi(SkyScenario sc) {
    sc.rfi.clear();
    return sc;
}

// Same-sky pair: realization `a` is the RFI-free previous-LST reference,
// realization `b` the observation to clean (interferers included).
inline std::pair<CovarianceMatrix, CovarianceMatrix>
reference_pair(const SkyScenario& sc, std::size_t n, std::uint64_t seed_a,
               std::uint64_t seed_b) {
    auto ref = sample_covariance(strip_rfi(sc), n, seed_a);
    auto obs = sample_covariance(sc, n, seed_b);
    return {std::move(ref), std::move(obs)};
}

// Stand-in array layout: stations scattered in a 100 m-diameter disk plus a
// distant outrigger used as the phase reference; cable delays grow with the
// run back to the hub.
inline ArrayGeometry lwa_like_geometry(std::size_t m, std::uint64_t seed) {
    if (m < 2) throw Error("geometry needs at least two antennas");
    GaussianSource g(mix_seed(seed, 0x67656f6dULL));
    ArrayGeometry geom;
    geom.site_latitude = deg_to_rad(34.07);
    geom.site_longitude = deg_to_rad(-107.63);
    geom.positions.resize(m);
    geom.cable_delays.resize(m);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double rr = 50.0 * std::sqrt(g.uniform01());
        const double th = kTwoPi * g.uniform01();
        geom.positions[i] = {rr * std::cos(th), rr * std::sin(th), 0.0};
    }
    const double th_out = kTwoPi * g.uniform01();
    geom.positions[m - 1] = {300.0 * std::cos(th_out), 300.0 * std::sin(th_out), 0.0};
    const double cable_speed = 0.66 * kSpeedOfLight;
    for (std::size_t i = 0; i < m; ++i) {
        const auto& p = geom.positions[i];
        geom.cable_delays[i] = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) / cable_speed;
    }
    geom.reference_index = m - 1; // outrigger as phase reference
    return geom;
}

} // namespace rfiscrub

#endif // RFISCRUB_SKYSIM_HPP
