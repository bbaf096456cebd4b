#pragma once

// Single-terminal three-phase devices: ideal voltage sources, ideal current
// sources and impedances, each in Y or Delta configuration.
//
// Sign conventions: internal current and power are measured in the direction
// of the current through each single-phase element; terminal current and power
// are injections out of the device into the network.

#include <optional>
#include <string_view>
#include <variant>

#include "triphase/phasor.hpp"

namespace triphase {

struct VoltageSourceY {
    C3 e;            // line-to-neutral internal voltage
    Complex gamma{};  // neutral voltage
};

struct VoltageSourceDelta {
    C3 e;             // line-to-line internal voltage (ab, bc, ca); must sum to zero
    Complex gamma{};  // zero-sequence terminal voltage, (1/3) sum(V)
    Complex beta{};   // loop current, (1/3) sum(I_delta)
};

struct CurrentSourceY {
    C3 j;
    Complex gamma{};
};

struct CurrentSourceDelta {
    C3 j;
};

struct ImpedanceY {
    C3x3 z;
    Complex gamma{};
};

struct ImpedanceDelta {
    C3x3 z;
    Complex beta{};
};

using DeviceSpec = std::variant<VoltageSourceY, VoltageSourceDelta, CurrentSourceY, CurrentSourceDelta,
                                ImpedanceY, ImpedanceDelta>;

enum class Configuration { Wye, Delta };
enum class DeviceClass { VoltageSource, CurrentSource, Impedance };

Configuration configuration_of(const DeviceSpec& spec);
DeviceClass class_of(const DeviceSpec& spec);
std::string_view kind_name(const DeviceSpec& spec);

/// Checks finiteness, the KVL constraint of Delta voltage sources and impedance invertibility.
void validate(const DeviceSpec& spec);

struct TerminalState {
    C3 v = C3::Zero();
    C3 i = C3::Zero();
    C3 s = C3::Zero();
};

struct InternalState {
    C3 v_int = C3::Zero();
    C3 i_int = C3::Zero();
    C3 s_int = C3::Zero();
    Complex gamma{};
    std::optional<Complex> beta;  // Delta devices only
};

InternalState y_internal_from_terminal(const C3& v, const C3& i, Complex gamma);

/// Throws KclViolation unless sum(i) vanishes to tolerance.
InternalState delta_internal_from_terminal(const C3& v, const C3& i, Complex beta);

/// Terminal power of a Delta device from its internal variables. Requires sum(v_int) == 0.
C3 delta_terminal_power(const C3& v_int, const C3& i_int, Complex gamma);

/// Internal power of a Delta device from its terminal variables. Requires sum(i) == 0.
C3 delta_internal_power(const C3& v, const C3& i, Complex beta);

// Canonical external relations consumed by the solver.
struct FixedVoltage {
    C3 v;
};
struct FixedCurrent {
    C3 i;
};
/// i = -y_eff * v + i_offset
struct Admittance {
    C3x3 y_eff;
    C3 i_offset;
};
using ExternalRelation = std::variant<FixedVoltage, FixedCurrent, Admittance>;

ExternalRelation external_model(const DeviceSpec& spec);

/// Effective terminal admittance Gamma^T y Gamma of a Delta-connected admittance matrix.
C3x3 delta_laplacian(const C3x3& y_delta);

/// Inverse of an impedance matrix; SingularImpedance if the reciprocal condition is below 1e-12.
C3x3 invert_impedance(const C3x3& z);

/// Y equivalent of a Delta voltage or current source with identical external model.
DeviceSpec delta_to_y(const DeviceSpec& spec);

}  // namespace triphase
