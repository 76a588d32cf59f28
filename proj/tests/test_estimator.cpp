#include <doctest.h>

#include <cmath>
#include <numbers>

#include "twinbeam/channels.hpp"
#include "twinbeam/fockmath.hpp"
#include "twinbeam/estimate_io.hpp"
#include "twinbeam/estimator.hpp"
#include "twinbeam/nopa_model.hpp"
#include "twinbeam/sampler.hpp"

using namespace twinbeam;
using estimator::AnalysisMode;
using estimator::DensityMatrixEstimate;
using estimator::EstimateScope;
using estimator::ReconstructOptions;
using sampler::PhaseModel;
using sampler::SimChunkSource;

namespace {

ReconstructOptions fast_opts(int nmax, EstimateScope scope = EstimateScope::Full) {
    ReconstructOptions o;
    o.nmax = nmax;
    o.scope = scope;
    o.quadrature_nodes = 2048;
    o.panels = 16;
    o.table_dx = 1.0 / 256.0;
    o.threads = 2;
    return o;
}

}  // namespace

TEST_CASE("deterministic quadrature average reproduces the twin-beam matrix") {
    // No Monte Carlo anywhere: averaging the kernels against the exact joint
    // density must give <n1,m1|R|n2,m2> = c_{n1} c_{n2} delta_{n1 m1}
    // delta_{n2 m2} with c_n = sqrt(1 - tau^2) tau^n. This pins both the
    // estimator algebra and the kernel phase convention.
    const nopa::TwinBeamParams params = nopa::params_from_nbar(3.0);
    const int nmax = 6;
    const int N = nmax + 1;
    ReconstructOptions kopts;
    kopts.quadrature_nodes = 2048;
    estimator::QuadratureOracleOptions qopts;
    qopts.sum_phase_nodes = 128;
    qopts.threads = 2;
    const auto tensor = estimator::quadrature_joint_tensor(
        params, AnalysisMode::bare(1.0), nmax, kopts, qopts);

    const double om = 1.0 - params.tau * params.tau;
    auto cn = [&](int n) { return std::sqrt(om) * std::pow(params.tau, n); };
    double worst = 0.0;
    for (int n1 = 0; n1 < N; ++n1)
        for (int m1 = 0; m1 < N; ++m1)
            for (int n2 = 0; n2 < N; ++n2)
                for (int m2 = 0; m2 < N; ++m2) {
                    const double expected =
                        (n1 == m1 && n2 == m2) ? cn(n1) * cn(n2) : 0.0;
                    const auto got =
                        tensor[((static_cast<std::size_t>(n1) * N + m1) * N + n2) * N +
                               m2];
                    worst = std::max(worst, std::abs(got - expected));
                }
    CHECK(worst < 1e-5);
}

TEST_CASE("vacuum tomography from simulated records") {
    SimChunkSource source(nopa::params_from_tau(0.0), 1, PhaseModel::IdealUniform,
                          100000, 21);
    const auto est =
        estimator::reconstruct_single(source, AnalysisMode::bare(1.0), fast_opts(6));
    CHECK(est.n_records == 100000);
    CHECK(est.mean_weight == 1.0);
    CHECK(std::abs(est.value[est.index1(0, 0)].real() - 1.0) <
          3.0 * est.sigma[est.index1(0, 0)]);
    for (int n = 0; n <= 6; ++n)
        for (int m = 0; m <= 6; ++m) {
            if (n == 0 && m == 0) continue;
            CHECK(std::abs(est.value[est.index1(n, m)]) <
                  4.0 * std::max(est.sigma[est.index1(n, m)], 1e-12));
        }
}

TEST_CASE("thermal state reconstruction matches the geometric distribution") {
    const nopa::TwinBeamParams params = nopa::params_from_nbar(10.0);
    SimChunkSource source(params, 1, PhaseModel::IdealUniform, 1000000, 22);
    const auto est =
        estimator::reconstruct_single(source, AnalysisMode::bare(1.0), fast_opts(10));
    for (int n = 0; n <= 10; ++n) {
        const double expect = nopa::marginal_thermal_pdf(params, n);
        const double got = est.value[est.index1(n, n)].real();
        const double sd = est.sigma[est.index1(n, n)];
        INFO("n=", n, " got=", got, " expect=", expect, " sd=", sd);
        CHECK(std::abs(got - expect) < 3.0 * sd);
    }
    // Hermiticity is exact by construction; diagonals are real.
    for (int n = 0; n <= 10; ++n)
        for (int m = 0; m <= 10; ++m)
            CHECK(est.value[est.index1(n, m)] ==
                  std::conj(est.value[est.index1(m, n)]));
}

TEST_CASE("loss-dressed analysis reconstructs the attenuated thermal state") {
    const double eta = 0.8;
    const nopa::TwinBeamParams params = nopa::params_from_nbar(10.0, eta);
    SimChunkSource source(params, 1, PhaseModel::IdealUniform, 400000, 23);
    const auto est = estimator::reconstruct_single(
        source, AnalysisMode::dressed_loss(eta), fast_opts(8));
    // Oracle: loss channel applied to thermal(10) = thermal(8).
    const auto oracle = channels::loss_dress(
        channels::FockDensityMatrix::thermal(10.0, 60), eta);
    for (int n = 0; n <= 8; ++n) {
        const double got = est.value[est.index1(n, n)].real();
        const double sd = est.sigma[est.index1(n, n)];
        INFO("n=", n);
        CHECK(std::abs(got - oracle.at1(n, n).real()) < 3.5 * sd);
    }
}

TEST_CASE("gaussian-dressed joint reconstruction matches the channel oracle") {
    const double eta = 0.8;
    const nopa::TwinBeamParams params = nopa::params_from_nbar(2.0, eta);
    SimChunkSource source(params, 2, PhaseModel::IdealUniform, 200000, 24);
    const auto est = estimator::reconstruct_joint(
        source, AnalysisMode::dressed_gaussian(), fast_opts(4));
    const auto oracle = channels::apply_per_mode(
        channels::FockDensityMatrix::twin_beam(params.tau, 24),
        channels::DressChannel::Gaussian, eta);
    double worst_pull = 0.0;
    for (int n1 = 0; n1 <= 4; ++n1)
        for (int m1 = 0; m1 <= 4; ++m1)
            for (int n2 = 0; n2 <= 4; ++n2)
                for (int m2 = 0; m2 <= 4; ++m2) {
                    const auto got = est.value[est.index2(n1, m1, n2, m2)];
                    const auto ref = oracle.at2(n1, m1, n2, m2);
                    const double sd = std::max(est.sigma[est.index2(n1, m1, n2, m2)],
                                               1e-12);
                    worst_pull = std::max(worst_pull, std::abs(got - ref) / sd);
                }
    CHECK(worst_pull < 4.0);
}

TEST_CASE("self-homodyne weighting agrees with ideal uniform phases") {
    const nopa::TwinBeamParams params = nopa::params_from_nbar(10.0);
    SimChunkSource ideal(params, 2, PhaseModel::IdealUniform, 150000, 25);
    SimChunkSource shd(params, 2, PhaseModel::SelfHomodyne, 150000, 26);
    const auto opts = fast_opts(6);
    const auto ei = estimator::reconstruct_joint(ideal, AnalysisMode::bare(1.0), opts);
    const auto es = estimator::reconstruct_joint(shd, AnalysisMode::bare(1.0), opts);
    CHECK(ei.mean_weight == 1.0);
    CHECK(std::abs(es.mean_weight - 1.0) < 3.0 * es.mean_weight_stderr);
    CHECK(es.weight_recompute_defect < 1e-12);
    double worst_pull = 0.0;
    for (std::size_t i = 0; i < ei.value.size(); ++i) {
        const double sd = std::hypot(ei.sigma[i], es.sigma[i]);
        if (sd < 1e-12) continue;
        worst_pull = std::max(worst_pull, std::abs(ei.value[i] - es.value[i]) / sd);
    }
    CHECK(worst_pull < 4.5);
}

TEST_CASE("joint-diagonal scope agrees with the full scope") {
    const nopa::TwinBeamParams params = nopa::params_from_nbar(4.0);
    SimChunkSource a(params, 2, PhaseModel::IdealUniform, 80000, 27);
    SimChunkSource b(params, 2, PhaseModel::IdealUniform, 80000, 27);
    const auto full = estimator::reconstruct_joint(a, AnalysisMode::bare(1.0),
                                                   fast_opts(5));
    const auto diag = estimator::reconstruct_joint(
        b, AnalysisMode::bare(1.0), fast_opts(5, EstimateScope::JointDiagonal));
    for (int n = 0; n <= 5; ++n)
        for (int m = 0; m <= 5; ++m) {
            CHECK(full.joint_prob(n, m) ==
                  doctest::Approx(diag.joint_prob(n, m)).epsilon(1e-12));
            CHECK(full.joint_prob_sigma(n, m) ==
                  doctest::Approx(diag.joint_prob_sigma(n, m)).epsilon(1e-12));
        }
}

TEST_CASE("normalization of the reconstructed joint probabilities") {
    const nopa::TwinBeamParams params = nopa::params_from_nbar(4.0);
    const int nmax = 12;
    SimChunkSource source(params, 2, PhaseModel::IdealUniform, 400000, 28);
    const auto est = estimator::reconstruct_joint(
        source, AnalysisMode::bare(1.0), fast_opts(nmax, EstimateScope::JointDiagonal));
    double total = 0.0, var = 0.0;
    for (int n = 0; n <= nmax; ++n)
        for (int m = 0; m <= nmax; ++m) {
            total += est.joint_prob(n, m);
            var += est.joint_prob_sigma(n, m) * est.joint_prob_sigma(n, m);
        }
    const double sd = std::sqrt(var);
    const double tail = std::pow(params.tau, 2.0 * nmax);
    CHECK(total > 1.0 - tail - 5.0 * sd);
    CHECK(total < 1.0 + 5.0 * sd);
}

TEST_CASE("derived statistics from an exact theory matrix") {
    // Build a zero-error estimate holding the analytic twin-beam p(n, m).
    const nopa::TwinBeamParams params = nopa::params_from_nbar(10.0);
    DensityMatrixEstimate est;
    est.arity = 2;
    est.nmax = 20;
    est.scope = EstimateScope::JointDiagonal;
    est.n_records = 1;
    est.n_effective = 1;
    est.value.resize(21 * 21);
    est.sigma.assign(21 * 21, 0.0);
    for (int n = 0; n <= 20; ++n)
        for (int m = 0; m <= 20; ++m)
            est.value[est.index1(n, m)] = nopa::joint_photon_pdf(params, n, m);

    const auto s = estimator::total_number_dist(est);
    CHECK(s[1].value == 0.0);
    CHECK(s[0].value == doctest::Approx(1.0 / 11.0).epsilon(1e-13));
    CHECK(s[2].value ==
          doctest::Approx(nopa::total_photon_pdf_theory(params, 2)).epsilon(1e-13));

    const auto d = estimator::number_correlation(est, 10);
    REQUIRE(d.size() == 21);
    for (const auto& pt : d) {
        if (pt.n == 0)
            CHECK(pt.value ==
                  doctest::Approx(1.0 - std::pow(10.0 / 11.0, 11)).epsilon(1e-12));
        else
            CHECK(pt.value == 0.0);
    }
    CHECK_THROWS_AS(estimator::number_correlation(est, 11), std::out_of_range);

    const auto diag = estimator::joint_diagonal(est);
    CHECK(diag[3].value ==
          doctest::Approx(nopa::joint_photon_pdf(params, 3, 3)).epsilon(1e-13));
}

TEST_CASE("twin-beam correlation stays sharper than the coherent-state baseline") {
    // Two independent coherent states with nbar photons each set the
    // standard quantum limit: their number-difference distribution is broad,
    // while the gaussian-dressed twin beam at eta = 0.8 keeps a sharp peak.
    const double nbar = 10.0, eta = 0.8;
    const int N = 10;

    // Poisson-product correlation for the coherent baseline.
    auto poisson = [&](int k) {
        return std::exp(k * std::log(nbar) - nbar - fock::log_factorial(k));
    };
    auto coherent_d = [&](int n) {
        double acc = 0.0;
        for (int l = std::max(-n, 0); l <= N; ++l) acc += poisson(l) * poisson(n + l);
        return acc;
    };

    // Dressed twin-beam correlation from the channel oracle.
    const double tau = nopa::params_from_nbar(nbar).tau;
    const int nmax = 2 * N;
    const auto pnm = channels::dressed_twin_beam_pnm(
        tau, eta, channels::DressChannel::Gaussian, nmax, 1e-10);
    auto dressed_d = [&](int n) {
        double acc = 0.0;
        for (int l = std::max(-n, 0); l <= N; ++l)
            acc += pnm[static_cast<std::size_t>(l) * (nmax + 1) + (n + l)];
        return acc;
    };

    // Width at half maximum, counted on the integer grid.
    auto half_width = [&](auto d) {
        const double half = d(0) / 2.0;
        int count = 0;
        for (int n = -N; n <= N; ++n)
            if (d(n) >= half) ++count;
        return count;
    };
    CHECK(dressed_d(0) > coherent_d(0));
    CHECK(half_width(coherent_d) > half_width(dressed_d));
}

TEST_CASE("statistical errors saturate at sqrt(2/N) for large photon number") {
    SimChunkSource source(nopa::params_from_tau(0.0), 1, PhaseModel::IdealUniform,
                          100000, 29);
    const auto est =
        estimator::reconstruct_single(source, AnalysisMode::bare(1.0), fast_opts(14));
    const auto probe = estimator::stderr_saturation_probe(est);
    for (int n = 10; n <= 14; ++n) {
        INFO("n=", n, " probe=", probe[n]);
        CHECK(probe[n] > 1.3);
        CHECK(probe[n] < 1.6);
    }
}

TEST_CASE("estimate json round-trip") {
    SimChunkSource source(nopa::params_from_nbar(1.0), 2, PhaseModel::SelfHomodyne,
                          70000, 30);
    const auto est = estimator::reconstruct_joint(
        source, AnalysisMode::bare(1.0), fast_opts(3));
    const std::string text = estimate_io::to_json(est, "{\"note\":\"test\"}");
    const auto back = estimate_io::from_json(text);
    CHECK(back.arity == est.arity);
    CHECK(back.nmax == est.nmax);
    CHECK(back.scope == est.scope);
    CHECK(back.n_records == est.n_records);
    CHECK(back.mean_weight == est.mean_weight);
    REQUIRE(back.value.size() == est.value.size());
    bool same = true;
    for (std::size_t i = 0; i < est.value.size(); ++i)
        same = same && back.value[i] == est.value[i] && back.sigma[i] == est.sigma[i];
    CHECK(same);
    // Serialization is deterministic.
    CHECK(estimate_io::to_json(est, "{\"note\":\"test\"}") == text);
}

TEST_CASE("estimator input validation") {
    SimChunkSource two_mode(nopa::params_from_nbar(1.0), 2, PhaseModel::IdealUniform,
                            1000, 31);
    CHECK_THROWS_AS(estimator::reconstruct_single(two_mode, AnalysisMode::bare(1.0),
                                                  fast_opts(3)),
                    std::invalid_argument);
    SimChunkSource one_mode(nopa::params_from_nbar(1.0), 1, PhaseModel::IdealUniform,
                            1000, 31);
    CHECK_THROWS_AS(estimator::reconstruct_joint(one_mode, AnalysisMode::bare(1.0),
                                                 fast_opts(3)),
                    std::invalid_argument);
    // Bare-mode eta must match the dataset.
    SimChunkSource degraded(nopa::params_from_nbar(1.0, 0.8), 1,
                            PhaseModel::IdealUniform, 1000, 31);
    CHECK_THROWS_AS(estimator::reconstruct_single(degraded, AnalysisMode::bare(0.9),
                                                  fast_opts(3)),
                    std::invalid_argument);
    // Bare mode below the reconstruction bound.
    SimChunkSource dark(nopa::params_from_nbar(1.0, 0.4), 1, PhaseModel::IdealUniform,
                        1000, 31);
    CHECK_THROWS_AS(estimator::reconstruct_single(dark, AnalysisMode::bare(0.4),
                                                  fast_opts(3)),
                    kernel::PhysicsBoundError);
    // Full scope at an infeasible nmax/record combination is rejected.
    SimChunkSource big(nopa::params_from_nbar(10.0), 2, PhaseModel::IdealUniform,
                       100000000ULL, 32);
    CHECK_THROWS_AS(estimator::reconstruct_joint(big, AnalysisMode::bare(1.0),
                                                 fast_opts(20)),
                    std::invalid_argument);
}
