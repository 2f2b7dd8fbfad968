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

#ifndef RFISCRUB_BEAMFORM_HPP
#define RFISCRUB_BEAMFORM_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "rfiscrub/errors.hpp"
#include "rfiscrub/linalg.hpp"
#include "rfiscrub/mitigate.hpp"

namespace rfiscrub {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s, exact
inline constexpr double kTwoPi = 6.283185307179586476925286766559;
// LST is a sidereal clock reading: one full turn per 86400 LST seconds.
inline constexpr double kLstSecondsPerTurn = 86400.0;
inline constexpr double kSinrFloorDb = -300.0; // sentinel for nonpositive numerator

inline double deg_to_rad(double deg) { return deg * (kTwoPi / 360.0); }
inline double rad_to_deg(double rad) { return rad * (360.0 / kTwoPi); }
inline double hours_to_rad(double hours) { return hours * (kTwoPi / 24.0); }

/// Antenna positions in a local east-north-up frame plus per-antenna cable
/// delays; delays only matter relative to the reference antenna.
struct ArrayGeometry {
    std::vector<std::array<double, 3>> positions; // meters, ENU
    std::vector<double> cable_delays;             // seconds
    double site_latitude = 0.0;                   // radians
    double site_longitude = 0.0;                  // radians
    std::size_t reference_index = 0;

    std::size_t size() const { return positions.size(); }

    void validate() const {
        if (positions.size() < 2) throw Error("geometry needs at least two antennas");
        if (cable_delays.size() != positions.size())
            throw DimensionMismatchError("cable delay count != antenna count");
        if (reference_index >= positions.size())
            throw DimensionMismatchError("reference index out of range");
    }
};

struct SkyDirection {
    double declination = 0.0;     // radians
    double right_ascension = 0.0; // radians
    double lst_seconds = 0.0;
};

struct SteeringVector {
    CVector entries;
    double freq_hz = 0.0;
    SkyDirection direction;
    bool below_horizon = false;
};

/// Drift scan: beamformed power over a declination grid at one right
/// ascension.
struct DriftScan {
    std::vector<double> declinations_deg; // strictly increasing
    std::vector<double> powers;
    double freq_hz = 0.0;
    double right_ascension = 0.0; // radians
};

struct SkyImage {
    std::vector<double> decl_grid_deg;
    std::vector<double> ra_grid_hours;
    std::vector<double> values; // row-major, one row per declination
    double freq_hz = 0.0;
    bool normalized = false;

    double& at(std::size_t k, std::size_t l) { return values[k * ra_grid_hours.size() + l]; }
    double at(std::size_t k, std::size_t l) const {
        return values[k * ra_grid_hours.size() + l];
    }
};

/// Inclusive linear grid start, start+step, ... up to stop.
inline std::vector<double> linear_grid(double start, double stop, double step) {
    if (!(step > 0.0) || stop < start) throw Error("bad grid specification");
    std::vector<double> g;
    const std::size_t n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    g.reserve(n);
    for (std::size_t i = 0; i < n; ++i) g.push_back(start + step * static_cast<double>(i));
    return g;
}

// Topocentric unit vector (ENU) toward a sky direction via hour angle
// H = LST - RA and the standard equatorial-to-horizon transformation.
inline std::array<double, 3> direction_unit_enu(const SkyDirection& dir, double site_latitude) {
    const double h = dir.lst_seconds * (kTwoPi / kLstSecondsPerTurn) - dir.right_ascension;
    const double sd = std::sin(dir.declination), cd = std::cos(dir.declination);
    const double sl = std::sin(site_latitude), cl = std::cos(site_latitude);
    const double e = -cd * std::sin(h);
    const double n = sd * cl - cd * std::cos(h) * sl;
    const double u = sd * sl + cd * std::cos(h) * cl;
    return {e, n, u};
}

namespace detail {

inline CVector phase_vector(const ArrayGeometry& geom, const std::array<double, 3>& s_enu,
                            double freq_hz) {
    geom.validate();
    const std::size_t m = geom.size();
    const auto& ref = geom.positions[geom.reference_index];
    const double ref_cable = geom.cable_delays[geom.reference_index];
    CVector a(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double bx = geom.positions[i][0] - ref[0];
        const double by = geom.positions[i][1] - ref[1];
        const double bz = geom.positions[i][2] - ref[2];
        const double tau_g = -(bx * s_enu[0] + by * s_enu[1] + bz * s_enu[2]) / kSpeedOfLight;
        const double tau = tau_g + (geom.cable_delays[i] - ref_cable);
        const double ph = -kTwoPi * freq_hz * tau;
        a[i] = {std::cos(ph), std::sin(ph)};
    }
    a[geom.reference_index] = {1.0, 0.0};
    return a;
}

} // namespace detail

/// Unit-modulus steering vector toward a celestial direction.
inline SteeringVector steering_vector(const ArrayGeometry& geom, const SkyDirection& dir,
                                      double freq_hz) {
    const auto s = direction_unit_enu(dir, geom.site_latitude);
    SteeringVector sv;
    sv.entries = detail::phase_vector(geom, s, freq_hz);
    sv.freq_hz = freq_hz;
    sv.direction = dir;
    sv.below_horizon = s[2] < 0.0;
    return sv;
}

/// Steering vector for a terrestrial arrival direction given as azimuth
/// (from north, toward east) and elevation.
inline SteeringVector steering_for_azel(const ArrayGeometry& geom, double azimuth_rad,
                                        double elevation_rad, double freq_hz) {
    const double ce = std::cos(elevation_rad);
    const std::array<double, 3> s = {ce * std::sin(azimuth_rad), ce * std::cos(azimuth_rad),
                                     std::sin(elevation_rad)};
    SteeringVector sv;
    sv.entries = detail::phase_vector(geom, s, freq_hz);
    sv.freq_hz = freq_hz;
    sv.below_horizon = s[2] < 0.0;
    return sv;
}

/// Re(a^H R a), clamped at zero.
inline double beam_power(const SteeringVector& a, const CovarianceMatrix& r) {
    if (a.entries.size() != r.dim()) throw DimensionMismatchError("steering length != dim");
    CVector tmp(r.dim());
    r.matvec(a.entries, tmp);
    double p = 0.0;
    for (std::size_t i = 0; i < r.dim(); ++i)
        p += a.entries[i].real() * tmp[i].real() + a.entries[i].imag() * tmp[i].imag();
    return p < 0.0 ? 0.0 : p;
}

/// PSF of an ideal source over a declination scan: |a_delta^H a_src|^2.
inline DriftScan point_spread_function(const ArrayGeometry& geom, const SkyDirection& src,
                                       std::span<const double> decl_grid_deg, double freq_hz) {
    const auto a_src = steering_vector(geom, src, freq_hz);
    DriftScan scan;
    scan.declinations_deg.assign(decl_grid_deg.begin(), decl_grid_deg.end());
    scan.freq_hz = freq_hz;
    scan.right_ascension = src.right_ascension;
    scan.powers.reserve(decl_grid_deg.size());
    for (double dec_deg : decl_grid_deg) {
        SkyDirection dir{deg_to_rad(dec_deg), src.right_ascension, src.lst_seconds};
        const auto a = steering_vector(geom, dir, freq_hz);
        cdouble dot = 0.0;
        for (std::size_t i = 0; i < a.entries.size(); ++i)
            dot += std::conj(a.entries[i]) * a_src.entries[i];
        scan.powers.push_back(std::norm(dot));
    }
    return scan;
}

/// Above-mean mask h: 1 where the scan exceeds its mean, 0 elsewhere
/// (values exactly at the mean count as background).
inline std::vector<std::uint8_t> source_range(const DriftScan& scan) {
    if (scan.powers.empty()) throw Error("empty drift scan");
    double mean = 0.0;
    for (double p : scan.powers) mean += p;
    mean /= static_cast<double>(scan.powers.size());
    std::vector<std::uint8_t> mask(scan.powers.size(), 0);
    for (std::size_t i = 0; i < scan.powers.size(); ++i)
        if (scan.powers[i] > mean) mask[i] = 1;
    return mask;
}

/// Half width at half maximum of the scan's main lobe, in degrees.
inline double main_lobe_half_width_deg(const DriftScan& scan) {
    const std::size_t n = scan.powers.size();
    if (n < 3) throw Error("scan too short");
    std::size_t peak = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (scan.powers[i] > scan.powers[peak]) peak = i;
    const double half = 0.5 * scan.powers[peak];
    double left = scan.declinations_deg.front();
    for (std::size_t i = peak; i-- > 0;)
        if (scan.powers[i] < half) {
            left = scan.declinations_deg[i + 1];
            break;
        }
    double right = scan.declinations_deg.back();
    for (std::size_t i = peak + 1; i < n; ++i)
        if (scan.powers[i] < half) {
            right = scan.declinations_deg[i - 1];
            break;
        }
    return 0.5 * (right - left);
}

// SINR (dB): mean beamformed power over the source range minus the trace,
// against the same quantity over the whole scan. Nonpositive numerator
// returns the -300 dB sentinel; a vanishing or negative denominator with a
// positive numerator is an error.
inline double sinr(const CovarianceMatrix& r_d, const ArrayGeometry& geom,
                   double right_ascension, std::span<const double> decl_grid_deg,
                   std::span<const std::uint8_t> delta_s, double freq_hz) {
    const std::size_t l = decl_grid_deg.size();
    if (delta_s.size() != l) throw DimensionMismatchError("mask length != grid length");
    std::size_t n_mask = 0;
    for (auto m : delta_s) n_mask += (m != 0);
    if (n_mask == 0 || n_mask == l)
        throw Error("source range must be a nonempty strict subset of the scan");

    const double tr = trace(r_d);
    double sum_all = 0.0, sum_mask = 0.0;
    CVector tmp(r_d.dim());
    for (std::size_t i = 0; i < l; ++i) {
        SkyDirection dir{deg_to_rad(decl_grid_deg[i]), right_ascension, r_d.lst_seconds()};
        const auto a = steering_vector(geom, dir, freq_hz);
        r_d.matvec(a.entries, tmp);
        double p = 0.0;
        for (std::size_t k = 0; k < r_d.dim(); ++k)
            p += a.entries[k].real() * tmp[k].real() + a.entries[k].imag() * tmp[k].imag();
        sum_all += p;
        if (delta_s[i]) sum_mask += p;
    }
    const double num = sum_mask / static_cast<double>(n_mask) - tr;
    const double den = sum_all / static_cast<double>(l) - tr;
    if (num <= 0.0) return kSinrFloorDb;
    if (den <= 0.0 || std::abs(den) <= 1e-12 * std::abs(tr))
        throw DegenerateDenominatorError("background denominator vanished");
    return 10.0 * std::log10(num / den);
}

// Brute-force reference method: one full eigendecomposition, then SINR for
// every candidate subtraction depth with incremental rank-one updates; the
// depth with the maximal SINR wins (ties to the smallest depth).
inline std::pair<CovarianceMatrix, MitigationReport>
iterative_sinr_clean(const CovarianceMatrix& r, const ArrayGeometry& geom,
                     const SkyDirection& src, std::span<const double> decl_grid_deg,
                     double freq_hz, std::size_t d_max = 0) {
    MitigationReport rep;
    rep.method = Method::IterativeSinr;
    const std::uint64_t eigh_before = instrument::eigh_calls.load();

    std::size_t best_d = 0;
    EigenDecomposition ed;
    {
        detail::ScopedTimer timer(rep.wall_time_ns);
        const std::size_t m = r.dim();
        const std::size_t l = decl_grid_deg.size();
        if (d_max == 0) d_max = std::min<std::size_t>(m - 1, 32);
        d_max = std::min(d_max, m);

        // delta_s from the ideal PSF at the data's LST
        SkyDirection src_at_lst{src.declination, src.right_ascension, r.lst_seconds()};
        const auto psf = point_spread_function(geom, src_at_lst, decl_grid_deg, freq_hz);
        const auto mask = source_range(psf);
        std::size_t n_mask = 0;
        for (auto v : mask) n_mask += (v != 0);
        if (n_mask == 0 || n_mask == l)
            throw Error("reference source is not detectable on this grid");

        ed = eigh(r);

        // beam powers of the raw matrix and per-eigenvector pattern energies
        std::vector<double> p0(l), tmp_pattern(l);
        std::vector<std::vector<double>> pat(d_max, std::vector<double>(l));
        {
            CVector tmp(m);
            for (std::size_t i = 0; i < l; ++i) {
                SkyDirection dir{deg_to_rad(decl_grid_deg[i]), src.right_ascension,
                                 r.lst_seconds()};
                const auto a = steering_vector(geom, dir, freq_hz);
                r.matvec(a.entries, tmp);
                double p = 0.0;
                for (std::size_t k = 0; k < m; ++k)
                    p += a.entries[k].real() * tmp[k].real() +
                         a.entries[k].imag() * tmp[k].imag();
                p0[i] = p;
                for (std::size_t k = 0; k < d_max; ++k) {
                    cdouble dot = 0.0;
                    for (std::size_t t = 0; t < m; ++t)
                        dot += std::conj(ed.vectors(t, k)) * a.entries[t];
                    pat[k][i] = std::norm(dot);
                }
            }
        }

        double tr = trace(r);
        std::vector<double> p = p0;
        double best_sinr = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (std::size_t d = 0; d <= d_max; ++d) {
            if (d > 0) {
                const double lam = ed.values[d - 1];
                for (std::size_t i = 0; i < l; ++i) p[i] -= lam * pat[d - 1][i];
                tr -= lam;
            }
            double sum_all = 0.0, sum_mask = 0.0;
            for (std::size_t i = 0; i < l; ++i) {
                sum_all += p[i];
                if (mask[i]) sum_mask += p[i];
            }
            const double num = sum_mask / static_cast<double>(n_mask) - tr;
            const double den = sum_all / static_cast<double>(l) - tr;
            double value;
            if (num <= 0.0) {
                value = kSinrFloorDb;
            } else if (den <= 0.0 || std::abs(den) <= 1e-12 * std::abs(tr)) {
                // degenerate candidate: skipped, recorded as NaN
                rep.sinr_curve.emplace_back(d, std::numeric_limits<double>::quiet_NaN());
                continue;
            } else {
                value = 10.0 * std::log10(num / den);
            }
            rep.sinr_curve.emplace_back(d, value);
            if (value > best_sinr) {
                best_sinr = value;
                best_d = d;
                any = true;
            }
        }
        if (!any) throw DegenerateDenominatorError("every candidate denominator vanished");
    }

    auto [out, sub_rep] = detail::subtract_top_eigenpairs(r, ed, best_d);
    rep.d_hat = best_d;
    rep.removed_power = sub_rep.removed_power;
    rep.residual_trace = trace(out);
    rep.eigh_calls = instrument::eigh_calls.load() - eigh_before;
    return {std::move(out), rep};
}

/// Beamformed power over a declination x right-ascension grid.
inline SkyImage sky_image(const CovarianceMatrix& r_d, const ArrayGeometry& geom,
                          std::span<const double> ra_grid_hours,
                          std::span<const double> decl_grid_deg, double freq_hz,
                          bool normalize = false) {
    if (ra_grid_hours.empty() || decl_grid_deg.empty()) throw Error("empty image grid");
    SkyImage img;
    img.decl_grid_deg.assign(decl_grid_deg.begin(), decl_grid_deg.end());
    img.ra_grid_hours.assign(ra_grid_hours.begin(), ra_grid_hours.end());
    img.freq_hz = freq_hz;
    img.values.resize(decl_grid_deg.size() * ra_grid_hours.size());
    for (std::size_t k = 0; k < decl_grid_deg.size(); ++k) {
        for (std::size_t l = 0; l < ra_grid_hours.size(); ++l) {
            SkyDirection dir{deg_to_rad(decl_grid_deg[k]), hours_to_rad(ra_grid_hours[l]),
                             r_d.lst_seconds()};
            img.at(k, l) = beam_power(steering_vector(geom, dir, freq_hz), r_d);
        }
    }
    if (normalize) {
        double mx = 0.0;
        for (double v : img.values) mx = std::max(mx, v);
        if (mx > 0.0)
            for (double& v : img.values) v /= mx;
        img.normalized = true;
    }
    return img;
}

struct SdrResult {
    double mse = 0.0;
    double sdr = 0.0;
    bool infinite = false; // identity projector / sub-1e-300 MSE sentinel
};

// Distortion figure of merit: project the ideal-source PSF through the kept
// subspace and compare with the unprojected PSF over a probe grid. SDR is
// the reciprocal MSE.
inline SdrResult image_projection_and_sdr(const CMatrix& u_kept, const ArrayGeometry& geom,
                                          const SkyDirection& src,
                                          std::span<const SkyDirection> probe,
                                          double freq_hz) {
    const std::size_t m = u_kept.rows;
    if (m != geom.size()) throw DimensionMismatchError("basis rows != antenna count");
    if (probe.empty()) throw Error("empty probe grid");

    double orth = 0.0;
    for (std::size_t a = 0; a < u_kept.cols; ++a)
        for (std::size_t b = 0; b < u_kept.cols; ++b) {
            cdouble dot = 0.0;
            for (std::size_t i = 0; i < m; ++i) dot += std::conj(u_kept(i, a)) * u_kept(i, b);
            if (a == b) dot -= 1.0;
            orth += std::norm(dot);
        }
    if (std::sqrt(orth) > 1e-6 * std::max<double>(1.0, static_cast<double>(u_kept.cols)))
        throw NonOrthonormalBasisError("kept basis is not orthonormal");

    const auto a_src = steering_vector(geom, src, freq_hz);
    // coordinates of a_src in the kept basis
    CVector c_src(u_kept.cols, 0.0);
    for (std::size_t k = 0; k < u_kept.cols; ++k)
        for (std::size_t i = 0; i < m; ++i) c_src[k] += std::conj(u_kept(i, k)) * a_src.entries[i];

    const double norm_scale =
        static_cast<double>(m) * static_cast<double>(m); // Tr(a a^H) * Tr(R_A)
    double mse = 0.0;
    for (const auto& dir : probe) {
        const auto a = steering_vector(geom, dir, freq_hz);
        CVector c(u_kept.cols, 0.0);
        for (std::size_t k = 0; k < u_kept.cols; ++k)
            for (std::size_t i = 0; i < m; ++i) c[k] += std::conj(u_kept(i, k)) * a.entries[i];
        cdouble proj_dot = 0.0;
        for (std::size_t k = 0; k < u_kept.cols; ++k) proj_dot += std::conj(c[k]) * c_src[k];
        cdouble raw_dot = 0.0;
        for (std::size_t i = 0; i < m; ++i) raw_dot += std::conj(a.entries[i]) * a_src.entries[i];
        const double projected = std::norm(proj_dot) / norm_scale;
        const double unprojected = std::norm(raw_dot) / norm_scale;
        const double diff = projected - unprojected;
        mse += diff * diff;
    }
    mse /= static_cast<double>(probe.size());

    SdrResult out;
    out.mse = mse;
    if (mse < 1e-300) {
        out.infinite = true;
        out.sdr = std::numeric_limits<double>::infinity();
    } else {
        out.sdr = 1.0 / mse;
    }
    return out;
}

} // namespace rfiscrub

#endif // RFISCRUB_BEAMFORM_HPP
