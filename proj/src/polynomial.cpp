#include "optctl/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace optctl::tf {

Polynomial::Polynomial(std::initializer_list<double> coeffs) : coeffs_(coeffs) { trim(); }

Polynomial::Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) { trim(); }

void Polynomial::trim() {
    while (!coeffs_.empty() && coeffs_.back() == 0.0) {
        coeffs_.pop_back();
    }
}

Complex Polynomial::eval(Complex s) const {
    Complex acc = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 0;) {
        acc = acc * s + coeffs_[k];
    }
    return acc;
}

double Polynomial::eval(double s) const {
    double acc = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 0;) {
        acc = acc * s + coeffs_[k];
    }
    return acc;
}

Polynomial Polynomial::operator*(const Polynomial& rhs) const {
    if (is_zero() || rhs.is_zero()) {
        return Polynomial{};
    }
    std::vector<double> out(coeffs_.size() + rhs.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        for (std::size_t j = 0; j < rhs.coeffs_.size(); ++j) {
            out[i + j] += coeffs_[i] * rhs.coeffs_[j];
        }
    }
    return Polynomial(std::move(out));
}

Polynomial Polynomial::operator+(const Polynomial& rhs) const {
    std::vector<double> out(std::max(coeffs_.size(), rhs.coeffs_.size()), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (*this)[i] + rhs[i];
    }
    return Polynomial(std::move(out));
}

Polynomial Polynomial::operator-(const Polynomial& rhs) const {
    std::vector<double> out(std::max(coeffs_.size(), rhs.coeffs_.size()), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = (*this)[i] - rhs[i];
    }
    return Polynomial(std::move(out));
}

Polynomial Polynomial::scaled(double factor) const {
    std::vector<double> out = coeffs_;
    for (double& c : out) {
        c *= factor;
    }
    return Polynomial(std::move(out));
}

Polynomial Polynomial::derivative() const {
    if (coeffs_.size() <= 1) {
        return Polynomial{};
    }
    std::vector<double> out(coeffs_.size() - 1);
    for (std::size_t k = 1; k < coeffs_.size(); ++k) {
        out[k - 1] = coeffs_[k] * static_cast<double>(k);
    }
    return Polynomial(std::move(out));
}

}  // namespace optctl::tf
