#include "triphase/phasor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "triphase/errors.hpp"

namespace triphase {

Complex alpha() { return std::polar(1.0, -2.0 * std::numbers::pi / 3.0); }

C3 ones() { return C3::Ones(); }

C3 alpha_plus() {
    const Complex a = alpha();
    return C3(1.0, a, a * a);
}

C3 alpha_minus() {
    const Complex a = alpha();
    return C3(1.0, a * a, a);
}

C3x3 gamma_matrix() {
    C3x3 g;
    g << 1, -1, 0,
         0, 1, -1,
        -1, 0, 1;
    return g;
}

C3x3 gamma_t_matrix() { return gamma_matrix().transpose(); }

C3x3 gamma_dagger() { return gamma_t_matrix() / 3.0; }

C3x3 gamma_t_dagger() { return gamma_matrix() / 3.0; }

double range_tolerance(const C3& b) { return 1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff()); }

namespace {

void require_in_range(const C3& b, const char* op) {
    const Complex total = b.sum();
    if (std::abs(total) > range_tolerance(b)) {
        std::ostringstream msg;
        msg << op << ": right-hand side has nonzero sum " << total
            << " and is not in the range of the conversion matrix";
        throw Error(ErrorCode::NotInRange, msg.str());
    }
}

}  // namespace

C3 solve_gamma(const C3& b, Complex free) {
    require_in_range(b, "solve_gamma");
    return gamma_dagger() * b + free * ones();
}

C3 solve_gamma_t(const C3& b, Complex free) {
    require_in_range(b, "solve_gamma_t");
    return gamma_t_dagger() * b + free * ones();
}

C3 SequenceComponents::reconstruct() const {
    return zero * ones() + positive * alpha_plus() + negative * alpha_minus();
}

SequenceComponents sequence_components(const C3& x) {
    // Eigen dot() conjugates its left operand: u.dot(x) == u^H x.
    return {ones().dot(x) / 3.0, alpha_plus().dot(x) / 3.0, alpha_minus().dot(x) / 3.0};
}

C3 diag_power(const C3& v, const C3& i) { return v.cwiseProduct(i.conjugate()); }

C3 diagonal(const C3x3& m) { return m.diagonal(); }

bool all_finite(const C3& x) { return x.allFinite(); }

bool all_finite(const C3x3& m) { return m.allFinite(); }

}  // namespace triphase
