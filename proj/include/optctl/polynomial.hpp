#pragma once

#include <complex>
#include <initializer_list>
#include <vector>

namespace optctl::tf {

using Complex = std::complex<double>;

// Real-coefficient polynomial in the Laplace variable s, stored ascending:
// coeffs[k] multiplies s^k. Trailing (highest-power) zeros are trimmed on
// construction, so the leading coefficient is nonzero unless the polynomial
// is the zero polynomial.
class Polynomial {
  public:
    Polynomial() = default;
    Polynomial(std::initializer_list<double> coeffs);
    explicit Polynomial(std::vector<double> coeffs);

    static Polynomial constant(double c) { return Polynomial{c}; }

    const std::vector<double>& coeffs() const { return coeffs_; }
    bool is_zero() const { return coeffs_.empty(); }
    // Degree of the zero polynomial is reported as -1.
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    double leading() const { return coeffs_.empty() ? 0.0 : coeffs_.back(); }

    double operator[](std::size_t k) const { return k < coeffs_.size() ? coeffs_[k] : 0.0; }

    Complex eval(Complex s) const;
    double eval(double s) const;

    Polynomial operator*(const Polynomial& rhs) const;
    Polynomial operator+(const Polynomial& rhs) const;
    Polynomial operator-(const Polynomial& rhs) const;
    Polynomial scaled(double factor) const;
    Polynomial derivative() const;

    bool operator==(const Polynomial& rhs) const { return coeffs_ == rhs.coeffs_; }

  private:
    void trim();

    std::vector<double> coeffs_;
};

// Roots with multiplicity, computed as eigenvalues of the balanced companion
// matrix (QR iteration). Exact zero low-order coefficients are factored out
// first so structural roots at s = 0 come back exact. Conjugate symmetry is
// enforced by pairing within tolerance.
//
// Throws ZeroPolynomialError for the zero polynomial and DegreeZeroError for
// a nonzero constant.
std::vector<Complex> poly_roots(const Polynomial& p);

}  // namespace optctl::tf
