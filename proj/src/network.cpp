#include "triphase/network.hpp"

#include <numeric>
#include <sstream>

#include "triphase/errors.hpp"

namespace triphase {

std::pair<C3, C3> line_flow(const LineSpec& line, const C3& v_from, const C3& v_to) {
    const C3 i_from_to = line.y_series * (v_from - v_to) + line.y_shunt_from * v_from;
    const C3 i_to_from = line.y_series * (v_to - v_from) + line.y_shunt_to * v_to;
    return {i_from_to, i_to_from};
}

C3x3 line_power_matrix(const C3& v, const C3& i) { return v * i.adjoint(); }

Network::Network(std::vector<Bus> buses, std::vector<LineSpec> lines) : buses_(std::move(buses)) {
    for (std::size_t k = 0; k < buses_.size(); ++k) {
        const Bus& bus = buses_[k];
        if (!index_.emplace(bus.id, k).second) {
            throw Error(ErrorCode::DuplicateBus, "duplicate bus id '" + bus.id + "'");
        }
        try {
            validate(bus.device);
        } catch (const Error& e) {
            throw Error(e.code(), "bus '" + bus.id + "': " + e.detail());
        }
        if (bus.shunt && !all_finite(*bus.shunt)) {
            throw Error(ErrorCode::NonFinite, "bus '" + bus.id + "': shunt has non-finite entries");
        }
    }
    if (buses_.empty()) throw Error(ErrorCode::DisconnectedGraph, "network has no buses");

    std::map<std::pair<std::size_t, std::size_t>, std::size_t> merged;
    for (const LineSpec& line : lines) {
        const auto from = index_.find(line.from);
        const auto to = index_.find(line.to);
        if (from == index_.end() || to == index_.end()) {
            throw Error(ErrorCode::UnknownBus, "line " + line.from + "-" + line.to + " references an unknown bus");
        }
        if (from->second == to->second) {
            throw Error(ErrorCode::InvalidLine, "line " + line.from + "-" + line.to + " connects a bus to itself");
        }
        if (!all_finite(line.y_series) || !all_finite(line.y_shunt_from) || !all_finite(line.y_shunt_to)) {
            throw Error(ErrorCode::NonFinite, "line " + line.from + "-" + line.to + " has non-finite entries");
        }
        const std::size_t j = from->second;
        const std::size_t k = to->second;
        const auto key = std::minmax(j, k);
        const auto it = merged.find(key);
        if (it == merged.end()) {
            merged.emplace(key, lines_.size());
            lines_.push_back(line);
            endpoints_.emplace_back(j, k);
            continue;
        }
        LineSpec& existing = lines_[it->second];
        existing.y_series += line.y_series;
        if (endpoints_[it->second].first == j) {
            existing.y_shunt_from += line.y_shunt_from;
            existing.y_shunt_to += line.y_shunt_to;
        } else {
            existing.y_shunt_from += line.y_shunt_to;
            existing.y_shunt_to += line.y_shunt_from;
        }
    }

    // Connectivity by union-find over line endpoints.
    std::vector<std::size_t> parent(buses_.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::size_t components = buses_.size();
    for (const auto& [j, k] : endpoints_) {
        const std::size_t a = find(j);
        const std::size_t b = find(k);
        if (a != b) {
            parent[a] = b;
            --components;
        }
    }
    if (components != 1) {
        std::ostringstream msg;
        msg << "network graph has " << components << " connected components";
        throw Error(ErrorCode::DisconnectedGraph, msg.str());
    }
}

std::size_t Network::index_of(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorCode::UnknownBus, "unknown bus '" + id + "'");
    return it->second;
}

C3x3 BlockAdmittance::block(std::size_t j, std::size_t k) const {
    const auto it = blocks.find({j, k});
    return it == blocks.end() ? C3x3::Zero() : it->second;
}

Eigen::MatrixXcd BlockAdmittance::dense() const {
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(3 * n_buses, 3 * n_buses);
    for (const auto& [key, b] : blocks) y.block<3, 3>(3 * key.first, 3 * key.second) = b;
    return y;
}

Eigen::VectorXcd BlockAdmittance::apply(const Eigen::VectorXcd& v) const {
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(3 * n_buses);
    for (const auto& [key, b] : blocks) {
        out.segment<3>(3 * key.first) += b * v.segment<3>(3 * key.second);
    }
    return out;
}

BlockAdmittance assemble(const Network& network) {
    BlockAdmittance y;
    y.n_buses = network.size();
    for (std::size_t j = 0; j < network.size(); ++j) {
        const auto& shunt = network.buses()[j].shunt;
        y.blocks[{j, j}] = shunt ? *shunt : C3x3::Zero();
    }
    const auto& lines = network.lines();
    for (std::size_t l = 0; l < lines.size(); ++l) {
        const auto [j, k] = network.line_endpoints()[l];
        const LineSpec& line = lines[l];
        y.blocks[{j, j}] += line.y_series + line.y_shunt_from;
        y.blocks[{k, k}] += line.y_series + line.y_shunt_to;
        y.blocks[{j, k}] = -line.y_series;
        y.blocks[{k, j}] = -line.y_series;
    }
    return y;
}

}  // namespace triphase
