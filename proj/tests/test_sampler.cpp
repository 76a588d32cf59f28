#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "twinbeam/nopa_model.hpp"
#include "twinbeam/quadrature.hpp"
#include "twinbeam/sampler.hpp"

using namespace twinbeam;
using sampler::HomodyneRecord;
using sampler::PhaseModel;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<HomodyneRecord> make_two_mode(double nbar, double eta, PhaseModel model,
                                          std::uint64_t n, std::uint64_t seed,
                                          int threads = 2) {
    sampler::VectorSink sink;
    sampler::generate_dataset(nopa::params_from_nbar(nbar, eta), model, n, seed, sink,
                              threads);
    return sink.take();
}

double wrap_pi(double a) {
    a = std::fmod(a, kTwoPi);
    if (a > std::numbers::pi) a -= kTwoPi;
    if (a < -std::numbers::pi) a += kTwoPi;
    return a;
}

}  // namespace

TEST_CASE("vacuum records are quarter-variance gaussians with unit weight") {
    const auto recs = make_two_mode(0.0, 1.0, PhaseModel::IdealUniform, 200000, 1);
    double sx = 0.0, sx2 = 0.0, sy2 = 0.0;
    bool unit_weights = true;
    for (const auto& r : recs) {
        unit_weights = unit_weights && r.weight == 1.0;
        sx += r.x;
        sx2 += r.x * r.x;
        sy2 += r.xp * r.xp;
    }
    CHECK(unit_weights);
    const double n = static_cast<double>(recs.size());
    CHECK(std::abs(sx / n) < 0.005);
    CHECK(sx2 / n == doctest::Approx(0.25).epsilon(0.02));
    CHECK(sy2 / n == doctest::Approx(0.25).epsilon(0.02));
}

TEST_CASE("strong twin beam reproduces the marginal variance") {
    const auto recs = make_two_mode(10.0, 1.0, PhaseModel::IdealUniform, 1000000, 42);
    double sx2 = 0.0, sy2 = 0.0;
    for (const auto& r : recs) {
        sx2 += r.x * r.x;
        sy2 += r.xp * r.xp;
    }
    const double n = static_cast<double>(recs.size());
    CHECK(sx2 / n == doctest::Approx(5.25).epsilon(0.03 / 5.25));
    CHECK(sy2 / n == doctest::Approx(5.25).epsilon(0.03 / 5.25));
}

TEST_CASE("difference quadrature squeezes near zero phase sum") {
    const auto recs = make_two_mode(10.0, 1.0, PhaseModel::IdealUniform, 1000000, 7);
    double acc = 0.0, acc2 = 0.0;
    std::size_t count = 0;
    for (const auto& r : recs) {
        if (std::abs(wrap_pi(r.phi + r.psi)) > 0.01) continue;
        const double d = r.x - r.xp;
        acc += d;
        acc2 += d * d;
        ++count;
    }
    REQUIRE(count > 1000);
    const double var = acc2 / count - (acc / count) * (acc / count);
    // d^2_{-kappa}/2 = 0.011911 at the exact phase, slightly inflated by the
    // finite conditioning band.
    CHECK(var > 0.010);
    CHECK(var < 0.0145);
}

TEST_CASE("fixed-phase conditional decomposition matches the joint density") {
    // Draw (x', x) by the documented two-step decomposition at pinned phases
    // and compare the 2-D histogram to the analytic density (chi-square).
    const nopa::TwinBeamParams params = nopa::params_from_nbar(6.0, 0.9);
    const double phi = 0.8, psi = -0.3;
    const auto co = nopa::quad_pdf_coeffs(params, phi, psi);
    rng::Xoshiro256pp gen(123, 0);
    const std::size_t n = 100000;
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        double g0, g1;
        gen.normal_pair(g0, g1);
        ys[i] = g0 / std::sqrt(2.0 * co.b2);
        xs[i] = co.c * ys[i] + g1 / std::sqrt(2.0 * co.a2);
    }
    const double sig = std::sqrt(nopa::single_quad_variance(params));
    const double lo = -4.5 * sig, hi = 4.5 * sig;
    const int nb = 20;
    const double h = (hi - lo) / nb;
    std::vector<double> observed(static_cast<std::size_t>(nb) * nb + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const int bx = static_cast<int>(std::floor((xs[i] - lo) / h));
        const int by = static_cast<int>(std::floor((ys[i] - lo) / h));
        if (bx < 0 || bx >= nb || by < 0 || by >= nb)
            observed.back() += 1.0;
        else
            observed[static_cast<std::size_t>(bx) * nb + by] += 1.0;
    }
    const quad::Rule cell = quad::gauss_legendre(8);
    std::vector<double> expected(observed.size(), 0.0);
    double covered = 0.0;
    for (int bx = 0; bx < nb; ++bx)
        for (int by = 0; by < nb; ++by) {
            double p = 0.0;
            for (std::size_t i = 0; i < cell.size(); ++i)
                for (std::size_t j = 0; j < cell.size(); ++j) {
                    const double x = lo + h * (bx + 0.5 + 0.5 * cell.x[i]);
                    const double y = lo + h * (by + 0.5 + 0.5 * cell.x[j]);
                    p += 0.25 * h * h * cell.w[i] * cell.w[j] *
                         nopa::joint_quad_pdf(params, x, y, phi, psi);
                }
            expected[static_cast<std::size_t>(bx) * nb + by] = p * n;
            covered += p;
        }
    expected.back() = (1.0 - covered) * n;
    double chi2 = 0.0;
    int dof = -1;
    for (std::size_t c = 0; c < expected.size(); ++c) {
        if (expected[c] < 5.0) continue;  // standard sparse-cell exclusion
        chi2 += (observed[c] - expected[c]) * (observed[c] - expected[c]) / expected[c];
        ++dof;
    }
    REQUIRE(dof > 100);
    // Wilson-Hilferty critical value at alpha = 0.01.
    const double z = 2.326347874;
    const double crit =
        dof * std::pow(1.0 - 2.0 / (9.0 * dof) + z * std::sqrt(2.0 / (9.0 * dof)), 3.0);
    CHECK(chi2 < crit);
}

TEST_CASE("self-homodyne phases obey the amplified-phase identity") {
    const auto recs = make_two_mode(10.0, 1.0, PhaseModel::SelfHomodyne, 20000, 3);
    const nopa::TwinBeamParams params = nopa::params_from_nbar(10.0);
    double worst_phase = 0.0, worst_weight = 0.0;
    for (const auto& r : recs) {
        const double lhs = wrap_pi(r.phi + r.psi - r.sum_phase);
        const double rhs =
            wrap_pi(2.0 * std::arg(1.0 + params.tau * std::polar(1.0, -r.sum_phase)));
        worst_phase = std::max(worst_phase, std::abs(wrap_pi(lhs - rhs)));
        const double w = 1.0 / nopa::gain(params, r.sum_phase);
        worst_weight = std::max(worst_weight, std::abs(r.weight - w));
    }
    CHECK(worst_phase < 1e-12);
    CHECK(worst_weight < 1e-14);
}

TEST_CASE("self-homodyne weights average to one and unbias the phases") {
    const auto recs = make_two_mode(10.0, 1.0, PhaseModel::SelfHomodyne, 1000000, 11);
    double sw = 0.0, sw2 = 0.0;
    double wre = 0.0, wim = 0.0, wre2 = 0.0, wim2 = 0.0;
    for (const auto& r : recs) {
        sw += r.weight;
        sw2 += r.weight * r.weight;
        const double c = std::cos(r.phi + r.psi), s = std::sin(r.phi + r.psi);
        wre += r.weight * c;
        wim += r.weight * s;
        wre2 += r.weight * r.weight * c * c;
        wim2 += r.weight * r.weight * s * s;
    }
    const double n = static_cast<double>(recs.size());
    const double mean_w = sw / n;
    const double se_w = std::sqrt((sw2 / n - mean_w * mean_w) / n);
    CHECK(std::abs(mean_w - 1.0) < 3.0 * se_w);

    // Weighted mean of e^{i(phi+psi)} estimates the uniform-phase mean 0.
    const double mre = wre / sw, mim = wim / sw;
    const double se_re = std::sqrt(wre2) / sw;
    const double se_im = std::sqrt(wim2) / sw;
    CHECK(std::abs(mre) < 4.0 * se_re);
    CHECK(std::abs(mim) < 4.0 * se_im);
}

TEST_CASE("single-mode records pass a KS test against the thermal gaussian") {
    sampler::VectorSink sink;
    sampler::generate_dataset_single(nopa::params_from_tau(0.0), 100000, 5, sink, 2);
    auto recs = sink.take();
    std::vector<double> xs(recs.size());
    bool unit_weights = true;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        xs[i] = recs[i].x;
        unit_weights = unit_weights && recs[i].weight == 1.0;
    }
    CHECK(unit_weights);
    std::sort(xs.begin(), xs.end());
    const double sigma = 0.5;  // vacuum: variance 1/4
    double d = 0.0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double cdf = 0.5 * std::erfc(-xs[i] / (sigma * std::numbers::sqrt2));
        d = std::max(d, std::abs(cdf - (i + 1) / n));
        d = std::max(d, std::abs(cdf - i / n));
    }
    // Stephens' modified statistic, alpha = 0.01.
    const double stat = d * (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n));
    CHECK(stat < 1.628);
}

TEST_CASE("single-mode variance tracks nbar and eta") {
    for (auto [nbar, eta, var] :
         {std::tuple{10.0, 1.0, 5.25}, {10.0, 0.8, 5.3125}, {0.0, 1.0, 0.25}}) {
        sampler::VectorSink sink;
        sampler::generate_dataset_single(nopa::params_from_nbar(nbar, eta), 400000, 17,
                                         sink, 2);
        double s2 = 0.0;
        for (const auto& r : sink.records()) s2 += r.x * r.x;
        const double got = s2 / static_cast<double>(sink.records().size());
        CHECK(got == doctest::Approx(var).epsilon(0.01));
    }
}

TEST_CASE("generation is deterministic and thread-count independent") {
    const auto a = make_two_mode(4.0, 0.9, PhaseModel::SelfHomodyne, 150000, 99, 1);
    const auto b = make_two_mode(4.0, 0.9, PhaseModel::SelfHomodyne, 150000, 99, 3);
    REQUIRE(a.size() == b.size());
    bool identical = true;
    for (std::size_t i = 0; i < a.size() && identical; ++i)
        identical = a[i].x == b[i].x && a[i].xp == b[i].xp && a[i].phi == b[i].phi &&
                    a[i].psi == b[i].psi && a[i].weight == b[i].weight &&
                    a[i].sum_phase == b[i].sum_phase;
    CHECK(identical);
    // Different seed, different stream.
    const auto c = make_two_mode(4.0, 0.9, PhaseModel::SelfHomodyne, 1000, 100, 1);
    CHECK(c[0].x != a[0].x);
}

TEST_CASE("records stay finite across the parameter range") {
    for (double nbar : {0.0, 0.3, 25.0})
        for (double eta : {1.0, 0.6}) {
            const auto recs = make_two_mode(
                nbar, eta, nbar > 1.0 ? PhaseModel::SelfHomodyne : PhaseModel::IdealUniform,
                5000, 23);
            bool ok = true;
            for (const auto& r : recs)
                ok = ok && std::isfinite(r.x) && std::isfinite(r.xp) &&
                     std::isfinite(r.phi) && std::isfinite(r.psi) && r.weight > 0.0;
            CHECK(ok);
        }
}
