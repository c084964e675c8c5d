#pragma once

// Rational transfer functions num(s)/den(s) with exact coefficient arithmetic.
// Operations do not cancel common roots; cancellation is the explicit job of
// reduce(). Each result is rescaled by a common power of two so the largest
// coefficient stays near one.

#include "dcform/polynomial.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace dcform {

/// One frequency-response sample at s = j*omega.
struct ComplexSample {
    double omega;   // angular frequency [rad/s]
    Complex value;  // units per context: Ohm, S, or dimensionless
};

class RationalTF {
public:
    RationalTF() : num_(Polynomial::zero()), den_(Polynomial::one()) {}
    RationalTF(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
        if (den_.is_zero()) throw std::invalid_argument("RationalTF: zero denominator");
        normalize();
    }
    /// Constant gain.
    static RationalTF constant(double k) { return RationalTF(Polynomial::constant(k), Polynomial::one()); }
    static RationalTF zero() { return constant(0.0); }
    static RationalTF one() { return constant(1.0); }
    /// The Laplace variable itself.
    static RationalTF s() { return RationalTF(Polynomial::monomial(1.0, 1), Polynomial::one()); }

    const Polynomial& num() const { return num_; }
    const Polynomial& den() const { return den_; }
    bool is_zero() const { return num_.is_zero(); }
    bool is_proper() const { return num_.degree() <= den_.degree(); }

    RationalTF operator+(const RationalTF& o) const {
        return RationalTF(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
    }
    RationalTF operator-(const RationalTF& o) const {
        return RationalTF(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
    }
    RationalTF operator*(const RationalTF& o) const {
        return RationalTF(num_ * o.num_, den_ * o.den_);
    }
    RationalTF operator/(const RationalTF& o) const {
        if (o.is_zero()) throw std::domain_error("RationalTF: division by zero rational");
        return RationalTF(num_ * o.den_, den_ * o.num_);
    }
    RationalTF operator*(double k) const { return RationalTF(num_ * k, den_); }
    RationalTF operator-() const { return RationalTF(-num_, den_); }
    friend RationalTF operator*(double k, const RationalTF& tf) { return tf * k; }

    Complex eval(Complex s) const {
        Complex d = den_.eval(s);
        if (d == Complex(0.0, 0.0)) throw std::domain_error("RationalTF: pole at evaluation point");
        return num_.eval(s) / d;
    }
    /// Value at s = j*omega.
    Complex eval_jw(double omega) const { return eval(Complex(0.0, omega)); }

    /// Roots of the denominator (multiplicity preserved). Constant
    /// denominators have no poles.
    std::vector<Complex> poles() const { return den_.roots(); }
    std::vector<Complex> zeros() const { return num_.roots(); }

    /// Cancel numerator/denominator root pairs closer than tol (scaled by the
    /// root magnitude). The frequency response moves only by the tiny actual
    /// distance of each cancelled pair.
    RationalTF reduce(double tol) const {
        if (tol < 0.0) throw std::invalid_argument("reduce: tol must be >= 0");
        if (num_.is_zero() || num_.degree() == 0 || den_.degree() == 0) return *this;
        std::vector<Complex> zs = num_.roots();
        std::vector<Complex> ps = den_.roots();
        std::vector<bool> z_used(zs.size(), false), p_used(ps.size(), false);
        for (std::size_t i = 0; i < zs.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t bj = 0;
            for (std::size_t j = 0; j < ps.size(); ++j) {
                if (p_used[j]) continue;
                double d = std::abs(zs[i] - ps[j]);
                if (d < best) {
                    best = d;
                    bj = j;
                }
            }
            double scale = std::max({1.0, std::abs(zs[i]), best < 1e300 ? std::abs(ps[bj]) : 0.0});
            if (best <= tol * scale) {
                z_used[i] = true;
                p_used[bj] = true;
            }
        }
        std::vector<Complex> zr, pr;
        for (std::size_t i = 0; i < zs.size(); ++i)
            if (!z_used[i]) zr.push_back(zs[i]);
        for (std::size_t j = 0; j < ps.size(); ++j)
            if (!p_used[j]) pr.push_back(ps[j]);
        if (zr.size() == zs.size() && pr.size() == ps.size()) return *this;
        double num_lead = num_.coeffs().back();
        double den_lead = den_.coeffs().back();
        return RationalTF(Polynomial::from_roots(zr, num_lead), Polynomial::from_roots(pr, den_lead));
    }

private:
    void normalize() {
        double m = std::max(num_.max_abs_coeff(), den_.max_abs_coeff());
        if (m > 0.0 && std::isfinite(m)) {
            int e = 0;
            std::frexp(m, &e);
            if (e != 0) {
                num_.scale_pow2(-e);
                den_.scale_pow2(-e);
            }
        }
    }

    Polynomial num_, den_;
};

/// a*b/(a+b); throws when a+b is identically zero.
inline RationalTF parallel(const RationalTF& a, const RationalTF& b) {
    RationalTF sum = a + b;
    if (sum.is_zero()) throw std::domain_error("parallel: a + b identically zero");
    return (a * b) / sum;
}

/// Closed loop G/(1 + G*H); throws when 1 + G*H is identically zero.
inline RationalTF feedback(const RationalTF& G, const RationalTF& H) {
    RationalTF d = RationalTF::one() + G * H;
    if (d.is_zero()) throw std::domain_error("feedback: 1 + G*H identically zero");
    return G / d;
}

}  // namespace dcform
