#pragma once

// Conversion algebra for three-phase phasors.
//
// Phase order is (a, b, c). The rotation constant is alpha = exp(-i 2 pi / 3),
// so the positive-sequence set is (1, alpha, alpha^2) with phase b lagging a by
// 120 degrees. Some textbooks use the opposite sign; every formula in this
// library assumes this one.

#include <complex>

#include <Eigen/Dense>

namespace triphase {

using Complex = std::complex<double>;
using C3 = Eigen::Vector3cd;
using C3x3 = Eigen::Matrix3cd;

Complex alpha();
C3 ones();
C3 alpha_plus();
C3 alpha_minus();

/// Delta conversion matrix: maps terminal voltages to line-to-line voltages.
C3x3 gamma_matrix();
C3x3 gamma_t_matrix();
/// Moore-Penrose pseudo-inverses, (1/3) gamma_t_matrix() and (1/3) gamma_matrix().
C3x3 gamma_dagger();
C3x3 gamma_t_dagger();

/// Solves gamma_matrix() * x = b for the member of the solution line with zero-sequence `free`.
/// Throws NotInRange when sum(b) is not zero to tolerance.
C3 solve_gamma(const C3& b, Complex free);
/// Same for the transpose.
C3 solve_gamma_t(const C3& b, Complex free);

/// Tolerance used when a vector must be orthogonal to ones(): 1e-9 * max(1, |b|_inf).
double range_tolerance(const C3& b);

/// Projection coefficients onto ones(), alpha_plus(), alpha_minus(), each divided by 3,
/// so x == zero * ones() + positive * alpha_plus() + negative * alpha_minus().
struct SequenceComponents {
    Complex zero;
    Complex positive;
    Complex negative;

    C3 reconstruct() const;
};

SequenceComponents sequence_components(const C3& x);

/// diag(v * i^H), the per-phase complex power of a voltage/current pair.
C3 diag_power(const C3& v, const C3& i);

/// diag of a 3x3 matrix as a vector.
C3 diagonal(const C3x3& m);

bool all_finite(const C3& x);
bool all_finite(const C3x3& m);

}  // namespace triphase
