#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "optctl/errors.hpp"
#include "optctl/polynomial.hpp"

namespace optctl::tf {

namespace {

using Matrix = std::vector<std::vector<double>>;

double sign_of(double magnitude, double sign_source) {
    return sign_source >= 0.0 ? std::fabs(magnitude) : -std::fabs(magnitude);
}

// Companion matrix of a monic polynomial (ascending coefficients, leading 1
// dropped). Ones on the subdiagonal, negated coefficients in the last
// column; upper Hessenberg by construction.
Matrix companion(const std::vector<double>& monic_coeffs) {
    const std::size_t n = monic_coeffs.size();
    Matrix a(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 1; i < n; ++i) {
        a[i][i - 1] = 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        a[i][n - 1] = -monic_coeffs[i];
    }
    return a;
}

// Parlett–Reinsch style balancing with powers of two, so no rounding is
// introduced. Greedy row/column scaling until stable.
void balance(Matrix& a) {
    const std::size_t n = a.size();
    const double gamma = 0.95;
    bool changed = true;
    int guard = 0;
    while (changed && ++guard < 100) {
        changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            double row_norm = 0.0;
            double col_norm = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                row_norm += std::fabs(a[i][j]);
                col_norm += std::fabs(a[j][i]);
            }
            if (row_norm == 0.0 || col_norm == 0.0) {
                continue;
            }
            int exponent = 0;
            std::frexp(row_norm / col_norm, &exponent);
            exponent /= 2;
            if (exponent != 0) {
                const double scaled_col = std::ldexp(col_norm, exponent);
                const double scaled_row = std::ldexp(row_norm, -exponent);
                if (scaled_col + scaled_row < gamma * (col_norm + row_norm)) {
                    changed = true;
                    const double up = std::ldexp(1.0, exponent);
                    const double down = std::ldexp(1.0, -exponent);
                    for (std::size_t j = 0; j < n; ++j) {
                        a[i][j] *= down;
                        a[j][i] *= up;
                    }
                }
            }
        }
    }
}

// Eigenvalues of a real upper Hessenberg matrix by Francis double-shift QR
// iteration with the classic exceptional shifts. The matrix is destroyed.
std::vector<Complex> hessenberg_eigenvalues(Matrix& a) {
    const int n = static_cast<int>(a.size());
    std::vector<Complex> out(n);
    const double eps = std::numeric_limits<double>::epsilon();

    double anorm = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = std::max(i - 1, 0); j < n; ++j) {
            anorm += std::fabs(a[i][j]);
        }
    }
    if (anorm == 0.0) {
        anorm = 1.0;
    }

    int nn = n - 1;
    double t = 0.0;
    double p = 0.0, q = 0.0, r = 0.0, x = 0.0, y = 0.0, z = 0.0, w = 0.0, s = 0.0;
    while (nn >= 0) {
        int its = 0;
        int l;
        do {
            for (l = nn; l >= 1; --l) {
                s = std::fabs(a[l - 1][l - 1]) + std::fabs(a[l][l]);
                if (s == 0.0) {
                    s = anorm;
                }
                if (std::fabs(a[l][l - 1]) <= eps * s) {
                    a[l][l - 1] = 0.0;
                    break;
                }
            }
            x = a[nn][nn];
            if (l == nn) {
                out[nn--] = Complex(x + t, 0.0);
            } else {
                y = a[nn - 1][nn - 1];
                w = a[nn][nn - 1] * a[nn - 1][nn];
                if (l == nn - 1) {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = std::sqrt(std::fabs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + sign_of(z, p);
                        double r1 = x + z;
                        double r2 = (z != 0.0) ? x - w / z : x + z;
                        out[nn - 1] = Complex(r1, 0.0);
                        out[nn] = Complex(r2, 0.0);
                    } else {
                        out[nn - 1] = Complex(x + p, z);
                        out[nn] = Complex(x + p, -z);
                    }
                    nn -= 2;
                } else {
                    if (its == 60) {
                        throw Error("polynomial root iteration failed to converge");
                    }
                    if (its == 10 || its == 20 || its == 30 || its == 40 || its == 50) {
                        t += x;
                        for (int i = 0; i <= nn; ++i) {
                            a[i][i] -= x;
                        }
                        s = std::fabs(a[nn][nn - 1]) + std::fabs(a[nn - 1][nn - 2]);
                        y = x = 0.75 * s;
                        w = -0.4375 * s * s;
                    }
                    ++its;
                    int m;
                    for (m = nn - 2; m >= l; --m) {
                        z = a[m][m];
                        r = x - z;
                        s = y - z;
                        p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - r - s;
                        r = a[m + 2][m + 1];
                        s = std::fabs(p) + std::fabs(q) + std::fabs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) {
                            break;
                        }
                        const double u = std::fabs(a[m][m - 1]) * (std::fabs(q) + std::fabs(r));
                        const double v =
                            std::fabs(p) *
                            (std::fabs(a[m - 1][m - 1]) + std::fabs(z) + std::fabs(a[m + 1][m + 1]));
                        if (u <= eps * v) {
                            break;
                        }
                    }
                    for (int i = m + 2; i <= nn; ++i) {
                        a[i][i - 2] = 0.0;
                        if (i != m + 2) {
                            a[i][i - 3] = 0.0;
                        }
                    }
                    for (int k = m; k <= nn - 1; ++k) {
                        if (k != m) {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = (k != nn - 1) ? a[k + 2][k - 1] : 0.0;
                            x = std::fabs(p) + std::fabs(q) + std::fabs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        s = sign_of(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) {
                            continue;
                        }
                        if (k == m) {
                            if (l != m) {
                                a[k][k - 1] = -a[k][k - 1];
                            }
                        } else {
                            a[k][k - 1] = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            p = a[k][j] + q * a[k + 1][j];
                            if (k != nn - 1) {
                                p += r * a[k + 2][j];
                                a[k + 2][j] -= p * z;
                            }
                            a[k + 1][j] -= p * y;
                            a[k][j] -= p * x;
                        }
                        const int mmin = (nn < k + 3) ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) {
                            p = x * a[i][k] + y * a[i][k + 1];
                            if (k != nn - 1) {
                                p += z * a[i][k + 2];
                                a[i][k + 2] -= p * r;
                            }
                            a[i][k + 1] -= p * q;
                            a[i][k] -= p;
                        }
                    }
                }
            }
        } while (l < nn - 1);
    }
    return out;
}

// A couple of guarded Newton steps against the monic polynomial sharpen the
// eigenvalue estimates; a step is kept only when it reduces |p(z)|.
Complex polish_root(const Polynomial& monic, const Polynomial& deriv, Complex z) {
    double best = std::abs(monic.eval(z));
    for (int pass = 0; pass < 3; ++pass) {
        const Complex d = deriv.eval(z);
        if (std::abs(d) == 0.0) {
            break;
        }
        const Complex candidate = z - monic.eval(z) / d;
        const double value = std::abs(monic.eval(candidate));
        if (value < best) {
            best = value;
            z = candidate;
        } else {
            break;
        }
    }
    return z;
}

// Real coefficients imply conjugate-symmetric roots; the QR sweep delivers
// them pairwise up to rounding. Flatten near-real roots and average each
// conjugate pair so the symmetry is exact in the output.
void enforce_conjugate_symmetry(std::vector<Complex>& roots) {
    for (Complex& z : roots) {
        const double tol = 1e-7 * (1.0 + std::abs(z));
        if (std::fabs(z.imag()) <= tol) {
            z = Complex(z.real(), 0.0);
        }
    }
    std::vector<std::size_t> upper;
    std::vector<std::size_t> lower;
    for (std::size_t i = 0; i < roots.size(); ++i) {
        if (roots[i].imag() > 0.0) {
            upper.push_back(i);
        } else if (roots[i].imag() < 0.0) {
            lower.push_back(i);
        }
    }
    std::vector<bool> used(lower.size(), false);
    for (const std::size_t ui : upper) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_k = lower.size();
        for (std::size_t k = 0; k < lower.size(); ++k) {
            if (used[k]) {
                continue;
            }
            const double d = std::abs(roots[ui] - std::conj(roots[lower[k]]));
            if (d < best) {
                best = d;
                best_k = k;
            }
        }
        if (best_k == lower.size()) {
            roots[ui] = Complex(roots[ui].real(), 0.0);
            continue;
        }
        used[best_k] = true;
        const Complex mean = 0.5 * (roots[ui] + std::conj(roots[lower[best_k]]));
        roots[ui] = mean;
        roots[lower[best_k]] = std::conj(mean);
    }
    for (std::size_t k = 0; k < lower.size(); ++k) {
        if (!used[k]) {
            roots[lower[k]] = Complex(roots[lower[k]].real(), 0.0);
        }
    }
}

}  // namespace

std::vector<Complex> poly_roots(const Polynomial& p) {
    if (p.is_zero()) {
        throw ZeroPolynomialError();
    }
    if (p.degree() == 0) {
        throw DegreeZeroError();
    }

    std::vector<double> coeffs = p.coeffs();

    // Exact zero low-order coefficients are structural roots at the origin;
    // factor them out so they come back as exact zeros.
    std::vector<Complex> roots;
    std::size_t origin = 0;
    while (origin < coeffs.size() - 1 && coeffs[origin] == 0.0) {
        ++origin;
    }
    roots.assign(origin, Complex(0.0, 0.0));
    coeffs.erase(coeffs.begin(), coeffs.begin() + static_cast<std::ptrdiff_t>(origin));

    const double lead = coeffs.back();
    for (double& c : coeffs) {
        c /= lead;
    }
    coeffs.pop_back();  // monic; leading 1 is implicit from here on

    if (coeffs.empty()) {
        return roots;
    }
    if (coeffs.size() == 1) {
        roots.emplace_back(-coeffs[0], 0.0);
        return roots;
    }
    if (coeffs.size() == 2) {
        // x^2 + b x + c, solved with the cancellation-free variant.
        const double b = coeffs[1];
        const double c = coeffs[0];
        const double disc = b * b - 4.0 * c;
        if (disc >= 0.0) {
            const double q = -0.5 * (b + sign_of(std::sqrt(disc), b));
            const double r1 = q;
            const double r2 = (q != 0.0) ? c / q : -b - q;
            roots.emplace_back(r1, 0.0);
            roots.emplace_back(r2, 0.0);
        } else {
            const double re = -0.5 * b;
            const double im = 0.5 * std::sqrt(-disc);
            roots.emplace_back(re, im);
            roots.emplace_back(re, -im);
        }
        return roots;
    }

    Matrix a = companion(coeffs);
    balance(a);
    std::vector<Complex> eig = hessenberg_eigenvalues(a);

    std::vector<double> monic_coeffs = coeffs;
    monic_coeffs.push_back(1.0);
    const Polynomial monic(std::move(monic_coeffs));
    const Polynomial deriv = monic.derivative();
    for (Complex& z : eig) {
        z = polish_root(monic, deriv, z);
    }
    enforce_conjugate_symmetry(eig);

    roots.insert(roots.end(), eig.begin(), eig.end());
    return roots;
}

}  // namespace optctl::tf
