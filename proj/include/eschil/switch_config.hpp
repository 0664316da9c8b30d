#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace eschil {

/// Conduction state of every controllable switch and every diode in a
/// netlist. Two configs are equal iff all bits are equal; the total bit
/// width is fixed by the netlist (#gates + #diodes).
class SwitchConfig {
public:
    SwitchConfig() = default;
    SwitchConfig(std::size_t n_gates, std::size_t n_diodes)
        : gates_(n_gates, false), diodes_(n_diodes, false) {}

    [[nodiscard]] std::size_t gate_count() const { return gates_.size(); }
    [[nodiscard]] std::size_t diode_count() const { return diodes_.size(); }

    [[nodiscard]] bool gate(std::size_t i) const { return gates_[i]; }
    [[nodiscard]] bool diode(std::size_t i) const { return diodes_[i]; }

    void set_gate(std::size_t i, bool on) { gates_[i] = on; }
    void set_diode(std::size_t i, bool conducting) { diodes_[i] = conducting; }

    void toggle_diode(std::size_t i) { diodes_[i] = !diodes_[i]; }

    friend bool operator==(const SwitchConfig& a, const SwitchConfig& b) {
        return a.gates_ == b.gates_ && a.diodes_ == b.diodes_;
    }

    /// Packed key for cache maps; unique while #gates + #diodes <= 64.
    [[nodiscard]] std::uint64_t key() const {
        std::uint64_t k = 0;
        std::size_t bit = 0;
        for (bool g : gates_) k |= static_cast<std::uint64_t>(g) << bit++;
        for (bool d : diodes_) k |= static_cast<std::uint64_t>(d) << bit++;
        return k;
    }

    [[nodiscard]] std::string to_string() const {
        std::string s = "g:";
        for (bool g : gates_) s += g ? '1' : '0';
        s += " d:";
        for (bool d : diodes_) s += d ? '1' : '0';
        return s;
    }

private:
    std::vector<bool> gates_;
    std::vector<bool> diodes_;
};

}  // namespace eschil
