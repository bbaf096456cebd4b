#include "triphase/devices.hpp"

#include <sstream>

#include "triphase/errors.hpp"

namespace triphase {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void require_kcl(const C3& i, const char* op) {
    if (std::abs(i.sum()) > range_tolerance(i)) {
        std::ostringstream msg;
        msg << op << ": terminal currents sum to " << i.sum() << ", a Delta device cannot inject zero-sequence current";
        throw Error(ErrorCode::KclViolation, msg.str());
    }
}

void require_finite(bool ok, std::string_view what) {
    if (!ok) throw Error(ErrorCode::NonFinite, std::string(what) + " has non-finite entries");
}

}  // namespace

Configuration configuration_of(const DeviceSpec& spec) {
    return std::visit(overloaded{
                          [](const VoltageSourceY&) { return Configuration::Wye; },
                          [](const CurrentSourceY&) { return Configuration::Wye; },
                          [](const ImpedanceY&) { return Configuration::Wye; },
                          [](const auto&) { return Configuration::Delta; },
                      },
                      spec);
}

DeviceClass class_of(const DeviceSpec& spec) {
    return std::visit(overloaded{
                          [](const VoltageSourceY&) { return DeviceClass::VoltageSource; },
                          [](const VoltageSourceDelta&) { return DeviceClass::VoltageSource; },
                          [](const CurrentSourceY&) { return DeviceClass::CurrentSource; },
                          [](const CurrentSourceDelta&) { return DeviceClass::CurrentSource; },
                          [](const auto&) { return DeviceClass::Impedance; },
                      },
                      spec);
}

std::string_view kind_name(const DeviceSpec& spec) {
    static constexpr std::string_view names[] = {"voltage source (Y)", "voltage source (delta)",
                                                 "current source (Y)", "current source (delta)",
                                                 "impedance (Y)",      "impedance (delta)"};
    return names[spec.index()];
}

void validate(const DeviceSpec& spec) {
    std::visit(overloaded{
                   [](const VoltageSourceY& d) {
                       require_finite(all_finite(d.e) && std::isfinite(std::abs(d.gamma)), "voltage source");
                   },
                   [](const VoltageSourceDelta& d) {
                       require_finite(all_finite(d.e) && std::isfinite(std::abs(d.gamma)) &&
                                          std::isfinite(std::abs(d.beta)),
                                      "voltage source");
                       if (std::abs(d.e.sum()) > range_tolerance(d.e)) {
                           std::ostringstream msg;
                           msg << "delta voltage source violates KVL: line-to-line voltages sum to " << d.e.sum();
                           throw Error(ErrorCode::KvlViolation, msg.str());
                       }
                   },
                   [](const CurrentSourceY& d) {
                       require_finite(all_finite(d.j) && std::isfinite(std::abs(d.gamma)), "current source");
                   },
                   [](const CurrentSourceDelta& d) { require_finite(all_finite(d.j), "current source"); },
                   [](const ImpedanceY& d) {
                       require_finite(all_finite(d.z) && std::isfinite(std::abs(d.gamma)), "impedance");
                       invert_impedance(d.z);
                   },
                   [](const ImpedanceDelta& d) {
                       require_finite(all_finite(d.z) && std::isfinite(std::abs(d.beta)), "impedance");
                       invert_impedance(d.z);
                   },
               },
               spec);
}

InternalState y_internal_from_terminal(const C3& v, const C3& i, Complex gamma) {
    InternalState out;
    out.v_int = v - gamma * ones();
    out.i_int = -i;
    out.s_int = diag_power(out.v_int, out.i_int);
    out.gamma = gamma;
    return out;
}

InternalState delta_internal_from_terminal(const C3& v, const C3& i, Complex beta) {
    require_kcl(i, "delta_internal_from_terminal");
    InternalState out;
    out.v_int = gamma_matrix() * v;
    out.i_int = -gamma_t_dagger() * i + beta * ones();
    out.s_int = diag_power(out.v_int, out.i_int);
    out.gamma = v.sum() / 3.0;
    out.beta = beta;
    return out;
}

C3 delta_terminal_power(const C3& v_int, const C3& i_int, Complex gamma) {
    if (std::abs(v_int.sum()) > range_tolerance(v_int)) {
        std::ostringstream msg;
        msg << "delta_terminal_power: internal voltages sum to " << v_int.sum();
        throw Error(ErrorCode::NotInRange, msg.str());
    }
    const C3 i = -gamma_t_matrix() * i_int;
    const C3x3 outer = v_int * i_int.adjoint();
    return -diagonal(gamma_dagger() * outer * gamma_matrix()) + gamma * i.conjugate();
}

C3 delta_internal_power(const C3& v, const C3& i, Complex beta) {
    require_kcl(i, "delta_internal_power");
    const C3x3 outer = v * i.adjoint();
    return -diagonal(gamma_matrix() * outer * gamma_dagger()) + std::conj(beta) * (gamma_matrix() * v);
}

C3x3 invert_impedance(const C3x3& z) {
    Eigen::PartialPivLU<C3x3> lu(z);
    const double rcond = lu.rcond();
    if (!(rcond >= 1e-12)) {
        std::ostringstream msg;
        msg << "impedance matrix is singular to working precision (reciprocal condition " << rcond << ")";
        throw Error(ErrorCode::SingularImpedance, msg.str());
    }
    return lu.inverse();
}

C3x3 delta_laplacian(const C3x3& y_delta) { return gamma_t_matrix() * y_delta * gamma_matrix(); }

ExternalRelation external_model(const DeviceSpec& spec) {
    return std::visit(overloaded{
                          [](const VoltageSourceY& d) -> ExternalRelation {
                              return FixedVoltage{d.e + d.gamma * ones()};
                          },
                          [](const VoltageSourceDelta& d) -> ExternalRelation {
                              return FixedVoltage{gamma_dagger() * d.e + d.gamma * ones()};
                          },
                          [](const CurrentSourceY& d) -> ExternalRelation { return FixedCurrent{-d.j}; },
                          [](const CurrentSourceDelta& d) -> ExternalRelation {
                              return FixedCurrent{-gamma_t_matrix() * d.j};
                          },
                          [](const ImpedanceY& d) -> ExternalRelation {
                              const C3x3 y = invert_impedance(d.z);
                              return Admittance{y, y * (d.gamma * ones())};
                          },
                          [](const ImpedanceDelta& d) -> ExternalRelation {
                              return Admittance{delta_laplacian(invert_impedance(d.z)), C3::Zero()};
                          },
                      },
                      spec);
}

DeviceSpec delta_to_y(const DeviceSpec& spec) {
    if (const auto* vs = std::get_if<VoltageSourceDelta>(&spec)) {
        return VoltageSourceY{gamma_dagger() * vs->e, vs->gamma};
    }
    if (const auto* cs = std::get_if<CurrentSourceDelta>(&spec)) {
        // Both configurations inject minus their internal current through the
        // conversion rule, so J^Y = Gamma^T J^Delta keeps the terminal current.
        return CurrentSourceY{gamma_t_matrix() * cs->j, Complex{}};
    }
    throw Error(ErrorCode::WrongKind,
                std::string("delta_to_y applies to delta sources only, got ") + std::string(kind_name(spec)));
}

}  // namespace triphase
