#pragma once

#include <optional>
#include <string>
#include <vector>

#include "triphase/network.hpp"

namespace triphase {

struct BusPartition {
    std::vector<std::size_t> voltage;    // FixedVoltage buses
    std::vector<std::size_t> current;    // FixedCurrent buses
    std::vector<std::size_t> impedance;  // Admittance buses
};

BusPartition partition(const Network& network);

struct BusSolution {
    std::string id;
    TerminalState terminal;
    InternalState internal;
};

struct LineSolution {
    std::string from;
    std::string to;
    C3 i_from_to = C3::Zero();
    C3 i_to_from = C3::Zero();
    C3x3 s_from_to = C3x3::Zero();
    C3x3 s_to_from = C3x3::Zero();
};

struct DeltaSourceResidual {
    std::string bus;
    double residual = 0.0;  // |sum(I_j)|
    bool warning = false;   // residual above tolerance
};

struct DiagnosticReport {
    double network_residual = 0.0;   // |I - Y V|_inf
    double current_scale = 0.0;      // |I|_inf
    double voltage_scale = 0.0;      // |V|_inf
    std::vector<double> kcl_residuals;  // per bus |I_j - shunt_j V_j - sum_k I_jk|_inf
    double max_kcl_residual = 0.0;
    std::vector<DeltaSourceResidual> delta_source_kcl;
    Complex total_injection{};  // sum_j 1^T s_j
    Complex total_losses{};     // lines plus nodal shunts
    double power_mismatch = 0.0;  // |total_injection - total_losses|
};

struct Solution {
    std::vector<BusSolution> buses;
    std::vector<LineSolution> lines;
    DiagnosticReport diagnostics;
};

/// Full three-phase analysis: eliminate known terminal quantities, solve the
/// reduced block system for the unknown voltages, back-substitute currents and
/// recover every device's internal variables.
///
/// Throws NoVoltageSource when no bus fixes a voltage and SingularSystem when
/// the reduced matrix has reciprocal condition below 1e-10.
Solution solve(const Network& network);

/// Recomputes the diagnostic block for `solution` against `network`.
DiagnosticReport residuals(const Network& network, const Solution& solution);

/// Internal-variable recovery shared by the full and per-phase paths.
InternalState recover_internal(const DeviceSpec& device, const C3& v, const C3& i);

/// Fills per-line flows from the bus voltages already stored in `solution`.
void compute_line_flows(const Network& network, Solution& solution);

}  // namespace triphase
