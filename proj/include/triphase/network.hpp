#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "triphase/devices.hpp"

namespace triphase {

struct LineSpec {
    std::string from;
    std::string to;
    C3x3 y_series = C3x3::Zero();
    C3x3 y_shunt_from = C3x3::Zero();
    C3x3 y_shunt_to = C3x3::Zero();
};

struct Bus {
    std::string id;
    DeviceSpec device;
    std::optional<C3x3> shunt;  // nodal shunt admittance to ground
};

/// Sending-end currents (I_jk, I_kj) of a three-phase line.
std::pair<C3, C3> line_flow(const LineSpec& line, const C3& v_from, const C3& v_to);

/// S = v * i^H; its diagonal is the per-phase sending-end power.
C3x3 line_power_matrix(const C3& v, const C3& i);

/// Validated, immutable network. Parallel lines are merged on construction.
class Network {
  public:
    /// Throws DuplicateBus, UnknownBus, InvalidLine, DisconnectedGraph, or a device validation error.
    Network(std::vector<Bus> buses, std::vector<LineSpec> lines);

    const std::vector<Bus>& buses() const noexcept { return buses_; }
    const std::vector<LineSpec>& lines() const noexcept { return lines_; }
    std::size_t size() const noexcept { return buses_.size(); }

    std::size_t index_of(const std::string& id) const;
    /// Endpoint bus indices of each merged line, aligned with lines().
    const std::vector<std::pair<std::size_t, std::size_t>>& line_endpoints() const noexcept { return endpoints_; }

  private:
    std::vector<Bus> buses_;
    std::vector<LineSpec> lines_;
    std::vector<std::pair<std::size_t, std::size_t>> endpoints_;
    std::map<std::string, std::size_t> index_;
};

/// Sparse block admittance matrix: 3x3 blocks keyed by (row bus, column bus).
struct BlockAdmittance {
    std::size_t n_buses = 0;
    std::map<std::pair<std::size_t, std::size_t>, C3x3> blocks;

    C3x3 block(std::size_t j, std::size_t k) const;
    Eigen::MatrixXcd dense() const;
    /// Y * V for a stacked 3n voltage vector.
    Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const;
};

BlockAdmittance assemble(const Network& network);

}  // namespace triphase
