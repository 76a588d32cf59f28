#include <doctest.h>

#include <cmath>
#include <numbers>

#include "twinbeam/quadrature.hpp"

using twinbeam::quad::Rule;

namespace {
double integrate(const Rule& r, double (*f)(double)) {
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) acc += r.w[i] * f(r.x[i]);
    return acc;
}
}  // namespace

TEST_CASE("gauss-legendre integrates polynomials of degree 2n-1 exactly") {
    const Rule r = twinbeam::quad::gauss_legendre(8, 0.0, 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) acc += r.w[i] * std::pow(r.x[i], 15);
    CHECK(acc == doctest::Approx(1.0 / 16.0).epsilon(1e-13));
}

TEST_CASE("gauss-legendre weights sum to the interval length") {
    for (int n : {1, 2, 7, 64, 256}) {
        const Rule r = twinbeam::quad::gauss_legendre(n, -2.0, 3.0);
        double acc = 0.0;
        for (double w : r.w) acc += w;
        CHECK(acc == doctest::Approx(5.0).epsilon(1e-13));
    }
}

TEST_CASE("panel rule handles oscillatory integrands") {
    // int_0^10 sin(7x) dx = (1 - cos 70)/7
    const Rule r = twinbeam::quad::panel_rule(0.0, 10.0, 16, 16);
    const double got = integrate(r, [](double x) { return std::sin(7.0 * x); });
    CHECK(got == doctest::Approx((1.0 - std::cos(70.0)) / 7.0).epsilon(1e-12));
}

TEST_CASE("gauss-laguerre reproduces factorial moments") {
    const Rule r = twinbeam::quad::gauss_laguerre(96);
    double wsum = 0.0;
    for (double w : r.w) wsum += w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-12));

    double fact = 1.0;
    for (int k = 1; k <= 12; ++k) {
        fact *= k;
        double acc = 0.0;
        for (std::size_t i = 0; i < r.size(); ++i)
            acc += r.w[i] * std::pow(r.x[i], k);
        CHECK(acc == doctest::Approx(fact).epsilon(1e-11));
    }
}

TEST_CASE("gauss-laguerre handles a decaying smooth integrand") {
    // int_0^inf e^{-u} cos(u) du = 1/2
    const Rule r = twinbeam::quad::gauss_laguerre(96);
    const double got = integrate(r, [](double u) { return std::cos(u); });
    CHECK(got == doctest::Approx(0.5).epsilon(1e-9));
}
