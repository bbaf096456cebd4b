#pragma once

// Per-phase analysis of balanced networks.
//
// A network is balanced when every source lies in span(alpha_plus), every
// impedance and line block is a scalar multiple of the identity. Then the block
// admittance matrix is Y1phi (x) I and the three-phase problem reduces to an
// (N+1)-bus scalar problem whose solution lifts back by (x) alpha_plus.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "triphase/solver.hpp"

namespace triphase {

struct BalancedBus {
    std::string id;
    DeviceClass device_class = DeviceClass::VoltageSource;
    Configuration configuration = Configuration::Wye;
    Complex lambda{};   // voltage sources: internal voltage = lambda * alpha_plus
    Complex mu{};       // current sources: internal current = mu * alpha_plus
    Complex epsilon{};  // impedances: z = I / epsilon
    Complex hat_alpha{1.0, 0.0};
    Complex gamma{};
    std::optional<Complex> beta;
    Complex shunt{};  // nodal shunt admittance, scalar
};

struct BalancedLine {
    std::size_t from = 0;
    std::size_t to = 0;
    Complex eta_series{};
    Complex eta_shunt_from{};
    Complex eta_shunt_to{};
};

struct BalancedSpec {
    std::vector<BalancedBus> buses;
    std::vector<BalancedLine> lines;
    std::shared_ptr<const Network> network;  // source network, for diagnostics after lifting

    /// True when every Y device has zero neutral voltage and every Delta voltage
    /// source has zero zero-sequence voltage, so the lift needs no zero-sequence part.
    bool zero_reference() const;
};

struct BalanceIssue {
    std::string element;    // "bus '3'" or "line 1-2"
    std::string component;  // which quantity broke balance
    double magnitude = 0.0;  // relative size of the offending component
};

struct BalanceReport {
    double tolerance = 1e-9;
    std::optional<BalancedSpec> spec;
    std::vector<BalanceIssue> issues;

    bool balanced() const { return spec.has_value(); }
};

inline constexpr double kDefaultBalanceTolerance = 1e-9;

/// Coefficient relating a balanced device's internal parameter to its per-phase terminal quantity.
Complex hat_alpha(DeviceClass device_class, Configuration configuration);

BalanceReport check_balanced(const Network& network, double tol = kDefaultBalanceTolerance);

struct PerPhaseModel {
    Eigen::MatrixXcd y_1phi;
    std::vector<std::size_t> n_v;
    std::vector<std::size_t> n_c;
    std::vector<std::size_t> n_i;
    std::vector<std::size_t> order;  // n_v, then n_c, then n_i
    Eigen::MatrixXcd a11;
    Eigen::MatrixXcd a21;
    Eigen::MatrixXcd a22;
    Eigen::MatrixXcd a22_prime;
    Eigen::MatrixXcd y_minus_c;  // rows n_v then n_i; columns in `order`
    Eigen::VectorXcd y_i_diag;   // hat_alpha * epsilon over n_i
};

PerPhaseModel build_per_phase(const BalancedSpec& spec);

struct ZeroSequence {
    std::vector<Complex> gamma_tilde;
    std::vector<Complex> beta_tilde;
};

struct PerPhaseSolution {
    Eigen::VectorXcd v;  // per bus, network order
    Eigen::VectorXcd i;
    double residual = 0.0;  // |i - Y1phi v|_inf
    std::optional<ZeroSequence> zero_seq;
};

/// Throws SingularReducedSystem when A22' has reciprocal condition below 1e-10.
PerPhaseSolution solve_per_phase(const PerPhaseModel& model, const BalancedSpec& spec);

/// Three-phase solution from a per-phase one. With `assume_zero_reference` the
/// zero-sequence part is taken as zero; otherwise `pp.zero_seq` must be present
/// (MissingZeroSequence).
Solution lift(const PerPhaseSolution& pp, const BalancedSpec& spec, bool assume_zero_reference);

struct ExtendedDecomposition {
    std::vector<Complex> gamma_tilde;  // zero-sequence of V_j
    std::vector<Complex> beta_tilde;   // zero-sequence of I_j
    double max_negative = 0.0;          // largest negative-sequence magnitude of any V_j, I_j
    double max_positive_mismatch = 0.0;  // largest |pos(V_j) - v_j|, |pos(I_j) - i_j|
    double residual = 0.0;               // max of the two above
};

/// Splits a full three-phase solution of a balanced network into per-phase
/// positive-sequence and zero-sequence parts and measures what is left over.
ExtendedDecomposition decompose_extended(const Solution& full, const PerPhaseSolution& pp);

/// Zero-sequence voltages of the non-voltage-source buses (ordered n_c then n_i)
/// implied by the source zero-sequence voltages: -A22^{-1} A21 gamma_v.
/// Holds when no bus carries a Y impedance: a Y impedance draws zero-sequence
/// current epsilon_j (gamma_tilde_j - gamma_j) and so adds a grounded branch
/// that this relation leaves out.
Eigen::VectorXcd propagate_zero_sequence(const PerPhaseModel& model, const BalancedSpec& spec);

}  // namespace triphase
