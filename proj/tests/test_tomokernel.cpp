#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "twinbeam/estimator.hpp"
#include "twinbeam/fockmath.hpp"
#include "twinbeam/nopa_model.hpp"
#include "twinbeam/quadrature.hpp"
#include "twinbeam/rng.hpp"
#include "twinbeam/tomokernel.hpp"

using namespace twinbeam;
using kernel::KernelEvaluator;
using kernel::KernelSpec;
using kernel::KernelTable;

TEST_CASE("kernel closed forms at the origin") {
    KernelSpec spec;
    spec.nmax = 4;
    spec.eta = 1.0;
    const KernelEvaluator k1(spec);
    CHECK(k1.base(0, 0, 0.0) == doctest::Approx(2.0).epsilon(1e-10));
    spec.eta = 0.9;
    const KernelEvaluator k09(spec);
    CHECK(k09.base(0, 0, 0.0) == doctest::Approx(2.25).epsilon(1e-10));
    spec.eta = 0.75;
    const KernelEvaluator k075(spec);
    CHECK(k075.base(0, 0, 0.0) ==
          doctest::Approx(2.0 * 0.75 / (2.0 * 0.75 - 1.0)).epsilon(1e-10));
}

TEST_CASE("efficiencies at or below one half are rejected") {
    KernelSpec spec;
    spec.eta = 0.5;
    CHECK_THROWS_AS(spec.resolved(), kernel::PhysicsBoundError);
    spec.eta = 0.3;
    CHECK_THROWS_AS(spec.resolved(), kernel::PhysicsBoundError);
    spec.eta = 0.501;
    CHECK_NOTHROW(spec.resolved());
}

TEST_CASE("default cutoff keeps the quadrature tail negligible") {
    for (double eta : {1.0, 0.9, 0.8, 0.7, 0.55}) {
        KernelSpec spec;
        spec.eta = eta;
        spec.nmax = 20;
        const KernelSpec r = spec.resolved();
        CHECK(r.tail_bound() < 1e-12);
    }
}

TEST_CASE("vacuum tomography identity of the base kernel") {
    // The x-integral of the base against the vacuum density gives
    // delta_{n0} on the diagonal and vanishes by parity for odd n - m; the
    // off-diagonal even-difference entries are killed only by the phase
    // average (covered by the full-identity test below). E.g. the (2,0)
    // x-integral alone is exactly -1/sqrt(2).
    KernelSpec spec;
    spec.nmax = 6;
    spec.eta = 1.0;
    const KernelEvaluator eval(spec);
    const quad::Rule rule = quad::panel_rule(-8.0, 8.0, 32, 12);
    std::vector<double> row(eval.pair_count());
    std::vector<double> acc(eval.pair_count(), 0.0);
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double psi0 = fock::quad_wavefunction(0, rule.x[i]);
        eval.base_row(rule.x[i], row);
        for (int p = 0; p < eval.pair_count(); ++p)
            acc[p] += rule.w[i] * psi0 * psi0 * row[p];
    }
    for (int n = 0; n <= 6; ++n) {
        const double expected = n == 0 ? 1.0 : 0.0;
        CHECK(std::abs(acc[KernelEvaluator::pair_index(n, n)] - expected) < 1e-6);
        for (int m = (n % 2 == 0) ? 1 : 0; m <= n; m += 2)
            CHECK(std::abs(acc[KernelEvaluator::pair_index(n, m)]) < 1e-6);
    }
    CHECK(acc[KernelEvaluator::pair_index(2, 0)] ==
          doctest::Approx(-1.0 / std::numbers::sqrt2).epsilon(1e-8));
}

TEST_CASE("kernel element phase behavior") {
    KernelSpec spec;
    spec.nmax = 5;
    spec.eta = 0.85;
    const KernelEvaluator eval(spec);
    rng::Xoshiro256pp gen(4, 0);
    for (int trial = 0; trial < 30; ++trial) {
        const double x = 10.0 * (gen.uniform() - 0.5);
        const double phi = 6.28 * gen.uniform();
        const int n = static_cast<int>(gen.uniform() * 5.99);
        // Diagonal elements are real and phase-free.
        const auto diag = eval.element(n, n, x, phi);
        CHECK(diag.imag() == 0.0);
        CHECK(diag.real() == eval.base(n, n, x));
        // e^{i pi} flips the (1,0) element.
        const auto flipped = eval.element(1, 0, x, std::numbers::pi);
        CHECK(flipped.real() ==
              doctest::Approx(-eval.base(1, 0, x)).epsilon(1e-12));
        // Hermiticity.
        const auto up = eval.element(2, 0, x, phi);
        const auto down = eval.element(0, 2, x, phi);
        CHECK(std::abs(up - std::conj(down)) < 1e-14);
    }
}

TEST_CASE("single-mode tomography identities via quadrature") {
    // eta = 1 on vacuum, |1>, thermal(3); eta < 1 with the matching
    // convolved densities.
    const quad::Rule rule = quad::panel_rule(-11.0, 11.0, 44, 10);
    auto run_check = [&](double eta, int nmax, double tol) {
        KernelSpec spec;
        spec.nmax = nmax;
        spec.eta = eta;
        const KernelEvaluator eval(spec);
        const double d2 = (1.0 - eta) / (4.0 * eta);

        auto check_state = [&](auto pdf, auto rho_nm, const char* label) {
            INFO(label, " eta=", eta);
            std::vector<double> pv(rule.size());
            for (std::size_t i = 0; i < rule.size(); ++i) pv[i] = pdf(rule.x[i]);
            const auto rho =
                estimator::quadrature_single_matrix(rule.x, rule.w, pv, eval);
            double worst = 0.0;
            for (int n = 0; n <= nmax; ++n)
                for (int m = 0; m <= nmax; ++m)
                    worst = std::max(worst, std::abs(rho[n * (nmax + 1) + m] -
                                                     rho_nm(n, m)));
            CHECK(worst < tol);
        };

        // Vacuum: gaussian with variance 1/4 + Delta^2.
        const double var0 = 0.25 + d2;
        check_state(
            [&](double x) {
                return std::exp(-0.5 * x * x / var0) /
                       std::sqrt(2.0 * std::numbers::pi * var0);
            },
            [](int n, int m) { return (n == 0 && m == 0) ? 1.0 : 0.0; }, "vacuum");

        // Thermal nbar = 3.
        const double var3 = (2.0 * 3.0 + 1.0) / 4.0 + d2;
        check_state(
            [&](double x) {
                return std::exp(-0.5 * x * x / var3) /
                       std::sqrt(2.0 * std::numbers::pi * var3);
            },
            [](int n, int m) {
                if (n != m) return 0.0;
                return std::pow(0.75, n) / 4.0;
            },
            "thermal3");

        // |1>: psi_1^2 convolved with the efficiency gaussian.
        const quad::Rule conv = quad::gauss_legendre(40);
        check_state(
            [&](double x) {
                if (eta >= 1.0) {
                    const double p1 = fock::quad_wavefunction(1, x);
                    return p1 * p1;
                }
                const double half = 9.0 * std::sqrt(d2);
                double acc = 0.0;
                for (std::size_t q = 0; q < conv.size(); ++q) {
                    const double u = x + half * conv.x[q];
                    const double p1 = fock::quad_wavefunction(1, u);
                    acc += half * conv.w[q] * p1 * p1 *
                           std::exp(-0.5 * (u - x) * (u - x) / d2) /
                           std::sqrt(2.0 * std::numbers::pi * d2);
                }
                return acc;
            },
            [](int n, int m) { return (n == 1 && m == 1) ? 1.0 : 0.0; }, "one-photon");
    };

    run_check(1.0, 6, 1e-5);
    run_check(0.9, 6, 1e-4);
    run_check(0.8, 6, 1e-4);
}

TEST_CASE("kernel magnitudes grow as eta decreases") {
    for (int n : {4, 8}) {
        double last = 0.0;
        for (double eta : {1.0, 0.9, 0.8, 0.7}) {
            KernelSpec spec;
            spec.nmax = n;
            spec.eta = eta;
            const KernelEvaluator eval(spec);
            double peak = 0.0;
            for (double x = 0.0; x <= 8.0; x += 0.05)
                peak = std::max(peak, std::abs(eval.base(n, n, x)));
            CHECK(peak >= last);
            last = peak;
        }
    }
}

TEST_CASE("table interpolation is faithful and falls back outside the grid") {
    KernelSpec spec;
    spec.nmax = 12;
    spec.eta = 0.8;
    const KernelEvaluator eval(spec);
    const auto grid = KernelTable::uniform_grid(10.0, 1.0 / 512.0);
    const KernelTable table(eval, grid, 2);
    CHECK(table.tabulated());
    CHECK(table.value_count() == grid.size() * static_cast<std::size_t>(eval.pair_count()));

    rng::Xoshiro256pp gen(8, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = static_cast<int>(gen.uniform() * 12.99);
        const int m = static_cast<int>(gen.uniform() * 12.99);
        const double x = 19.0 * (gen.uniform() - 0.5);  // some beyond the grid
        const double direct = eval.base(n, m, x);
        const double interp = table.base(n, m, x);
        worst = std::max(worst,
                         std::abs(interp - direct) / std::max(1.0, std::abs(direct)));
    }
    CHECK(worst < 1e-6);

    // Degenerate grid: direct evaluation everywhere.
    const KernelTable empty(eval, std::vector<double>{}, 1);
    CHECK(!empty.tabulated());
    CHECK(empty.base(3, 1, 0.7) == eval.base(3, 1, 0.7));
}

TEST_CASE("kernel table cache round-trips and survives corruption") {
    const auto dir = std::filesystem::temp_directory_path() / "twinbeam_kernel_cache";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "k.tbl").string();
    std::filesystem::remove(path);

    KernelSpec spec;
    spec.nmax = 6;
    spec.eta = 0.9;
    const KernelEvaluator eval(spec);
    const auto grid = KernelTable::uniform_grid(6.0, 1.0 / 256.0);

    const KernelTable fresh = KernelTable::cached(eval, grid, path, 1);
    CHECK(std::filesystem::exists(path));
    const KernelTable loaded = KernelTable::cached(eval, grid, path, 1);
    rng::Xoshiro256pp gen(15, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const double x = 10.0 * (gen.uniform() - 0.5);
        CHECK(loaded.base(4, 2, x) == fresh.base(4, 2, x));
    }

    // Corrupt the payload; the cache must be rejected and rebuilt.
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(200);
        const char garbage[8] = {char(0xDE), char(0xAD), char(0xBE), char(0xEF),
                                 char(0x01), char(0x02), char(0x03), char(0x04)};
        f.write(garbage, 8);
    }
    CHECK(!KernelTable::load_values(path, eval.spec(),
                                    grid.front(),
                                    (grid.back() - grid.front()) / (grid.size() - 1),
                                    static_cast<int>(grid.size()))
               .has_value());
    const KernelTable rebuilt = KernelTable::cached(eval, grid, path, 1);
    CHECK(rebuilt.base(4, 2, 0.33) == fresh.base(4, 2, 0.33));
}
