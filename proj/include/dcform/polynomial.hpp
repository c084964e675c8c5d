#pragma once

// Real polynomials in the Laplace variable s, coefficients stored in
// ascending powers. Root finding goes through a balanced companion matrix.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace dcform {

using Complex = std::complex<double>;

class Polynomial {
public:
    Polynomial() : c_{0.0} {}
    Polynomial(std::initializer_list<double> coeffs) : c_(coeffs) { trim(); }
    explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim(); }

    static Polynomial zero() { return Polynomial(); }
    static Polynomial one() { return Polynomial{1.0}; }
    static Polynomial constant(double k) { return Polynomial{k}; }
    /// k * s^n
    static Polynomial monomial(double k, int n) {
        std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
        v.back() = k;
        return Polynomial(std::move(v));
    }

    const std::vector<double>& coeffs() const { return c_; }
    double operator[](std::size_t i) const { return i < c_.size() ? c_[i] : 0.0; }
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const { return c_.size() == 1 && c_[0] == 0.0; }

    double max_abs_coeff() const {
        double m = 0.0;
        for (double v : c_) m = std::max(m, std::abs(v));
        return m;
    }

    Complex eval(Complex s) const {
        Complex acc = c_.back();
        for (std::size_t i = c_.size() - 1; i-- > 0;) acc = acc * s + c_[i];
        return acc;
    }
    double eval(double x) const {
        double acc = c_.back();
        for (std::size_t i = c_.size() - 1; i-- > 0;) acc = acc * x + c_[i];
        return acc;
    }

    Polynomial operator+(const Polynomial& o) const {
        std::vector<double> v(std::max(c_.size(), o.c_.size()), 0.0);
        for (std::size_t i = 0; i < c_.size(); ++i) v[i] += c_[i];
        for (std::size_t i = 0; i < o.c_.size(); ++i) v[i] += o.c_[i];
        return Polynomial(std::move(v));
    }
    Polynomial operator-(const Polynomial& o) const {
        std::vector<double> v(std::max(c_.size(), o.c_.size()), 0.0);
        for (std::size_t i = 0; i < c_.size(); ++i) v[i] += c_[i];
        for (std::size_t i = 0; i < o.c_.size(); ++i) v[i] -= o.c_[i];
        return Polynomial(std::move(v));
    }
    Polynomial operator*(const Polynomial& o) const {
        if (is_zero() || o.is_zero()) return zero();
        std::vector<double> v(c_.size() + o.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < c_.size(); ++i)
            for (std::size_t j = 0; j < o.c_.size(); ++j) v[i + j] += c_[i] * o.c_[j];
        return Polynomial(std::move(v));
    }
    Polynomial operator*(double k) const {
        std::vector<double> v = c_;
        for (double& x : v) x *= k;
        return Polynomial(std::move(v));
    }
    Polynomial operator-() const { return (*this) * -1.0; }

    friend Polynomial operator*(double k, const Polynomial& p) { return p * k; }

    /// Lossless rescale by a power of two (keeps ratios bit-exact).
    void scale_pow2(int e) {
        for (double& x : c_) x = std::ldexp(x, e);
    }

    /// All complex roots via companion-matrix eigenvalues with balancing.
    /// Constant polynomials have no roots.
    std::vector<Complex> roots() const {
        int n = degree();
        if (n < 1) return {};
        // normalize to monic, ascending c0..c_{n-1}
        Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) comp(i, n - 1) = -c_[static_cast<std::size_t>(i)] / c_.back();
        for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
        balance(comp);
        Eigen::EigenSolver<Eigen::MatrixXd> es(comp, /*computeEigenvectors=*/false);
        std::vector<Complex> r(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
        return r;
    }

    /// Reconstruct a real polynomial `lead * prod(s - r_i)` from (conjugate-
    /// closed) roots; small imaginary residue from rounding is dropped.
    static Polynomial from_roots(const std::vector<Complex>& roots, double lead) {
        std::vector<Complex> acc{Complex(lead, 0.0)};
        for (const Complex& r : roots) {
            std::vector<Complex> next(acc.size() + 1, Complex(0.0, 0.0));
            for (std::size_t i = 0; i < acc.size(); ++i) {
                next[i] += acc[i] * (-r);
                next[i + 1] += acc[i];
            }
            acc = std::move(next);
        }
        std::vector<double> v(acc.size());
        for (std::size_t i = 0; i < acc.size(); ++i) v[i] = acc[i].real();
        return Polynomial(std::move(v));
    }

private:
    // Drop exactly-zero trailing coefficients. Only exact zeros: composite
    // polynomials here legitimately carry leading coefficients many orders of
    // magnitude below the largest one (widely separated time constants), so a
    // magnitude threshold would silently change the degree.
    void trim() {
        if (c_.empty()) {
            c_ = {0.0};
            return;
        }
        while (c_.size() > 1 && c_.back() == 0.0) c_.pop_back();
        if (c_.size() == 1 && c_[0] == 0.0) c_[0] = 0.0;  // normalize -0.0
    }

    // Parlett-Reinsch style row/column balancing of the companion matrix.
    static void balance(Eigen::MatrixXd& m) {
        const int n = static_cast<int>(m.rows());
        const double gamma = 0.9;
        bool changed = true;
        int guard = 0;
        while (changed && guard++ < 16) {
            changed = false;
            for (int i = 0; i < n; ++i) {
                double rn = m.row(i).lpNorm<1>();
                double cn = m.col(i).lpNorm<1>();
                if (rn == 0.0 || cn == 0.0) continue;
                int e = 0;
                std::frexp(rn / cn, &e);
                e /= 2;
                if (e != 0) {
                    double sc = std::ldexp(cn, e);
                    double sr = std::ldexp(rn, -e);
                    if (sc + sr < gamma * (cn + rn)) {
                        m.row(i) *= std::ldexp(1.0, -e);
                        m.col(i) *= std::ldexp(1.0, e);
                        changed = true;
                    }
                }
            }
        }
    }

    std::vector<double> c_;
};

}  // namespace dcform
