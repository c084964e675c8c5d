#include "dcform/polynomial.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

using namespace dcform;
using Catch::Approx;

TEST_CASE("polynomial normalization strips exact zero tail") {
    Polynomial p{1.0, 2.0, 0.0, 0.0};
    CHECK(p.degree() == 1);
    Polynomial z{0.0, 0.0};
    CHECK(z.is_zero());
    CHECK(z.degree() == 0);
}

TEST_CASE("polynomial keeps legitimately tiny leading coefficients") {
    Polynomial p{1.0, 0.0, 1e-18};
    CHECK(p.degree() == 2);
}

TEST_CASE("polynomial arithmetic") {
    Polynomial a{1.0, 1.0};        // 1 + s
    Polynomial b{2.0, 0.0, 3.0};   // 2 + 3 s^2
    CHECK((a + b).coeffs() == std::vector<double>{3.0, 1.0, 3.0});
    CHECK((b - a).coeffs() == std::vector<double>{1.0, -1.0, 3.0});
    CHECK((a * b).coeffs() == std::vector<double>{2.0, 2.0, 3.0, 3.0});
    CHECK((a - a).is_zero());
    CHECK((Polynomial::monomial(2.5, 3)).coeffs() == std::vector<double>{0.0, 0.0, 0.0, 2.5});
}

TEST_CASE("polynomial evaluation") {
    Polynomial p{2.0, -1.0, 1.0};  // 2 - s + s^2
    CHECK(p.eval(2.0) == Approx(4.0));
    Complex v = p.eval(Complex(0.0, 1.0));  // 2 - j + (j)^2 = 1 - j
    CHECK(v.real() == Approx(1.0));
    CHECK(v.imag() == Approx(-1.0));
}

TEST_CASE("roots of factorable quadratic") {
    Polynomial p{2.0, 3.0, 1.0};  // (s+1)(s+2)
    auto r = p.roots();
    REQUIRE(r.size() == 2);
    std::sort(r.begin(), r.end(), [](Complex a, Complex b) { return a.real() < b.real(); });
    CHECK(r[0].real() == Approx(-2.0));
    CHECK(r[1].real() == Approx(-1.0));
    CHECK(std::abs(r[0].imag()) < 1e-9);
}

TEST_CASE("roots of pure oscillator") {
    Polynomial p{1.0, 0.0, 1.0};  // s^2 + 1
    auto r = p.roots();
    REQUIRE(r.size() == 2);
    double im_sum = std::abs(r[0].imag()) + std::abs(r[1].imag());
    CHECK(im_sum == Approx(2.0));
    CHECK(std::abs(r[0].real()) < 1e-9);
}

TEST_CASE("double root preserved with multiplicity") {
    Polynomial p = Polynomial{1.0, 1.0} * Polynomial{1.0, 1.0};  // (s+1)^2
    auto r = p.roots();
    REQUIRE(r.size() == 2);
    CHECK(r[0].real() == Approx(-1.0).margin(1e-6));
    CHECK(r[1].real() == Approx(-1.0).margin(1e-6));
}

TEST_CASE("constant polynomial has no roots") {
    CHECK(Polynomial{4.2}.roots().empty());
}

TEST_CASE("roots survive wide coefficient scaling") {
    // widely separated time constants, as in composed loop polynomials
    Polynomial p = Polynomial{1.0, 1e-5} * Polynomial{1.0, 1e-2} * Polynomial{1.0, 13.0};
    auto r = p.roots();
    REQUIRE(r.size() == 3);
    std::sort(r.begin(), r.end(), [](Complex a, Complex b) { return a.real() < b.real(); });
    CHECK(r[0].real() == Approx(-1e5).epsilon(1e-8));
    CHECK(r[1].real() == Approx(-1e2).epsilon(1e-8));
    CHECK(r[2].real() == Approx(-1.0 / 13.0).epsilon(1e-8));
}

TEST_CASE("from_roots reconstructs real polynomial") {
    std::vector<Complex> roots{{-1.0, 2.0}, {-1.0, -2.0}, {-3.0, 0.0}};
    Polynomial p = Polynomial::from_roots(roots, 2.0);
    // 2 (s^2 + 2s + 5)(s + 3)
    CHECK(p.coeffs().size() == 4);
    CHECK(p[0] == Approx(30.0));
    CHECK(p[1] == Approx(22.0));
    CHECK(p[2] == Approx(10.0));
    CHECK(p[3] == Approx(2.0));
}
