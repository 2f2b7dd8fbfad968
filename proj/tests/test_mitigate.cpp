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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "rfiscrub/mitigate.hpp"
#include "test_util.hpp"

using namespace rfiscrub;
using testutil::frob_diff;
using testutil::matrix_with_spectrum;
using testutil::random_psd;
using testutil::rel_err;

TEST(SubtractSubspace, ExactEigenpairRemoval) {
    std::vector<double> d = {5.0, 1.0, 1.0};
    auto r = CovarianceMatrix::diagonal(d);
    CMatrix v(3, 1);
    v(0, 0) = 1.0;
    std::vector<double> vals = {5.0};
    auto [out, rep] = subtract_subspace(r, v, vals);
    EXPECT_NEAR(std::abs(out(0, 0)), 0.0, 1e-15);
    EXPECT_NEAR(out(1, 1).real(), 1.0, 1e-15);
    EXPECT_NEAR(out(2, 2).real(), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(rep.removed_power, 5.0);
    EXPECT_NEAR(rep.residual_trace, 2.0, 1e-12);
}

TEST(SubtractSubspace, ZeroDepthIsIdentity) {
    auto r = random_psd(6, 10);
    auto [out, rep] = subtract_subspace(r, CMatrix(6, 0), {});
    EXPECT_EQ(frob_diff(out.entries(), r.entries()), 0.0);
    EXPECT_DOUBLE_EQ(rep.removed_power, 0.0);
}

TEST(SubtractSubspace, RankTwoRemovalLeavesNoiseFloor) {
    // R = B B^H + I with rank-2 B; removing the top-2 exact eigenpairs must
    // leave lambda_1(R_d) at the old third eigenvalue.
    const std::size_t m = 12;
    GaussianSource g(55);
    CVector b1(m), b2(m);
    for (auto& z : b1) z = 4.0 * g.complex_normal();
    for (auto& z : b2) z = 3.0 * g.complex_normal();
    CVector e(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            cdouble acc = (i == j) ? cdouble(1.0) : cdouble(0.0);
            acc += b1[i] * std::conj(b1[j]) + b2[i] * std::conj(b2[j]);
            e[i * m + j] = acc;
        }
    CovarianceMatrix r(m, std::move(e));
    auto ed = eigh(r);

    CMatrix top(m, 2);
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < m; ++i) top(i, k) = ed.vectors(i, k);
    auto [out, rep] = subtract_subspace(r, top, {ed.values.data(), 2});

    auto ed_out = eigh(out);
    EXPECT_LE(ed_out.values[0], ed.values[2] + 1e-9);
}

TEST(SubtractSubspace, ErrorPaths) {
    auto r = random_psd(6, 2);
    CMatrix bad(6, 2);
    for (std::size_t i = 0; i < 6; ++i) {
        bad(i, 0) = 0.5; // not unit norm
        bad(i, 1) = 0.1;
    }
    std::vector<double> vals = {1.0, 1.0};
    EXPECT_THROW(subtract_subspace(r, bad, vals), NonOrthonormalBasisError);

    CMatrix wrong(5, 2);
    EXPECT_THROW(subtract_subspace(r, wrong, vals), DimensionMismatchError);
}

TEST(SubtractSubspace, TraceAndEnergyBookkeeping) {
    const std::size_t m = 16;
    auto r = matrix_with_spectrum(
        [] {
            std::vector<double> lam(16, 1.0);
            lam[0] = 300.0;
            lam[1] = 80.0;
            return lam;
        }(),
        321);
    auto ed = eigh(r);
    CMatrix top(m, 2);
    for (std::size_t k = 0; k < 2; ++k)
        for (std::size_t i = 0; i < m; ++i) top(i, k) = ed.vectors(i, k);
    auto [out, rep] = subtract_subspace(r, top, {ed.values.data(), 2});

    EXPECT_LT(rel_err(rep.residual_trace, trace(r) - rep.removed_power), 1e-9);
    auto repaired = clamp_psd(out);
    EXPECT_LE(std::sqrt(frobenius_norm_sq(repaired)), std::sqrt(frobenius_norm_sq(r)));
}

// |a^H R_d a - a^H R a| <= 2 theta_1 delta ||a||^2 + theta_1 delta^2 ||a||^2
// for steering vectors nearly orthogonal to the removed subspace.
TEST(SubtractSubspace, DistortionBoundOffSubspace) {
    const std::size_t m = 24;
    auto r = matrix_with_spectrum(
        [] {
            std::vector<double> lam(24, 1.0);
            lam[0] = 500.0;
            return lam;
        }(),
        99);
    auto ed = eigh(r);
    CMatrix top(m, 1);
    for (std::size_t i = 0; i < m; ++i) top(i, 0) = ed.vectors(i, 0);
    auto [out, rep] = subtract_subspace(r, top, {ed.values.data(), 1});

    GaussianSource g(123);
    for (int trial = 0; trial < 10; ++trial) {
        CVector a(m);
        for (auto& z : a) z = g.complex_normal();
        // project out most of the removed direction, keep a small leak
        cdouble leak = 0.0;
        for (std::size_t i = 0; i < m; ++i) leak += std::conj(ed.vectors(i, 0)) * a[i];
        for (std::size_t i = 0; i < m; ++i) a[i] -= 0.999 * leak * ed.vectors(i, 0);

        double anorm2 = 0.0;
        cdouble va = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            anorm2 += std::norm(a[i]);
            va += std::conj(ed.vectors(i, 0)) * a[i];
        }
        const double delta = std::abs(va) / std::sqrt(anorm2);

        CVector tmp(m);
        r.matvec(a, tmp);
        cdouble before = 0.0;
        for (std::size_t i = 0; i < m; ++i) before += std::conj(a[i]) * tmp[i];
        out.matvec(a, tmp);
        cdouble after = 0.0;
        for (std::size_t i = 0; i < m; ++i) after += std::conj(a[i]) * tmp[i];

        const double theta1 = ed.values[0];
        const double bound =
            2.0 * theta1 * delta * anorm2 + theta1 * delta * delta * anorm2 + 1e-9;
        EXPECT_LE(std::abs(before.real() - after.real()), bound);
    }
}

TEST(CleanWithEigh, FullAndZeroDepth) {
    auto r = random_psd(10, 31);
    auto [all_removed, rep_all] = clean_with_eigh(r, 10);
    EXPECT_LE(trace(all_removed), 1e-9 * trace(r));

    auto [untouched, rep_none] = clean_with_eigh(r, 0);
    EXPECT_EQ(frob_diff(untouched.entries(), r.entries()), 0.0);
    EXPECT_EQ(rep_none.d_hat, 0u);
    EXPECT_GE(rep_none.eigh_calls, 1u);
}

TEST(CleanWithEigh, MatchesSubtractSubspace) {
    auto r = random_psd(12, 77, 0.5, 4.0);
    auto ed = eigh(r);
    CMatrix top(12, 3);
    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t i = 0; i < 12; ++i) top(i, k) = ed.vectors(i, k);
    auto [a, rep_a] = subtract_subspace(r, top, {ed.values.data(), 3});
    auto [b, rep_b] = clean_with_eigh(r, 3);
    EXPECT_LT(frob_diff(a.entries(), b.entries()),
              1e-10 * std::sqrt(frobenius_norm_sq(r)));
}

TEST(CleanWithEigh, MdlDetectorPath) {
    // 2 strong spikes over a unit tail; the MDL path picks them up
    std::vector<double> lam(24);
    GaussianSource g(4);
    for (auto& x : lam) x = 0.9 + 0.2 * g.uniform01();
    lam[0] = 2000.0;
    lam[1] = 900.0;
    auto r = matrix_with_spectrum(lam, 3).with_metadata(0.0, 4096, 0.0);
    auto [out, rep] = clean_with_eigh(r, Method::Mdl);
    EXPECT_EQ(rep.method, Method::Mdl);
    EXPECT_EQ(rep.d_hat, 2u);
    auto ed_out = eigh(out);
    EXPECT_LT(ed_out.values[0], 2.0);
    EXPECT_THROW(clean_with_eigh(r, Method::Qmam), Error);
}

TEST(CleanQmam, RfiFreeFixedPoint) {
    auto r = random_psd(24, 9000, 0.5, 3.0);
    auto cal = calibrate_epsilon(r, 0);
    auto [out, rep] = clean_qmam(r, cal);
    EXPECT_EQ(rep.d_hat, 0u);
    EXPECT_LT(frob_diff(out.entries(), r.entries()),
              1e-9 * std::sqrt(frobenius_norm_sq(r)));
    EXPECT_EQ(rep.eigh_calls, 0u);
    EXPECT_GT(rep.wall_time_ns, 0);
}

TEST(CleanQmam, RemovesDominantSubspaceLikeEighPath) {
    // observation: 3 spikes with the reference's spectral tail
    std::vector<double> ref_lam(32);
    GaussianSource g(64);
    for (auto& x : ref_lam) x = 0.8 + 0.6 * g.uniform01();
    std::sort(ref_lam.rbegin(), ref_lam.rend());
    auto ref = matrix_with_spectrum(ref_lam, 8);

    std::vector<double> obs_lam = {1500.0, 700.0, 300.0};
    obs_lam.insert(obs_lam.end(), ref_lam.begin(), ref_lam.end());
    obs_lam.resize(32);
    auto obs = matrix_with_spectrum(obs_lam, 9);

    auto cal = calibrate_epsilon(ref, 0);
    DetectConfig cfg;
    cfg.tau_phi = 0.05;

    const auto eigh_before = instrument::eigh_calls.load();
    auto [cleaned, rep] = clean_qmam(obs, cal, cfg);
    EXPECT_EQ(instrument::eigh_calls.load(), eigh_before);
    EXPECT_EQ(rep.d_hat, 3u);
    EXPECT_EQ(rep.eigh_calls, 0u);
    EXPECT_GE(rep.lanczos_steps, 5u);
    EXPECT_LT(rel_err(rep.residual_trace, trace(obs) - rep.removed_power), 1e-9);

    // with converged Ritz pairs the fast path matches the exact-ED path
    auto [cleaned_ed, rep_ed] = clean_with_eigh(obs, 3);
    EXPECT_LT(frob_diff(cleaned.entries(), cleaned_ed.entries()),
              1e-4 * std::sqrt(frobenius_norm_sq(obs)));

    // removal never adds energy
    auto repaired = clamp_psd(cleaned);
    EXPECT_LE(std::sqrt(frobenius_norm_sq(repaired)),
              std::sqrt(frobenius_norm_sq(obs)));
}

TEST(CleanQmam, NoAcceptancePropagates) {
    auto r = CovarianceMatrix::identity(12);
    EpsilonCalibration cal;
    cal.epsilon = 1e6;
    EXPECT_THROW(clean_qmam(r, cal), NoAcceptanceError);
}
