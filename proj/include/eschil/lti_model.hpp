#pragma once

#include "eschil/common.hpp"
#include "eschil/switch_config.hpp"

#include <string>
#include <vector>

namespace eschil {

/// State-space matrices of the circuit for one switch configuration:
///   dx/dt = A x + B u,   y = C x + D u
/// States are inductor currents and capacitor voltages; inputs are the
/// source values; outputs are the declared probes followed by, for every
/// diode, its branch current and its anode-cathode voltage.
struct LtiModel {
    Mat A, B, C, D;
    std::vector<std::string> state_labels;
    std::vector<std::string> input_labels;
    std::vector<std::string> output_labels;
    SwitchConfig config;

    // First q_probes outputs are the declared probes; diode monitor pairs
    // follow as (current, voltage) per diode in declaration order.
    int probe_count = 0;

    // Largest |eigenvalue| of A, used for the explicit-stability step cap.
    Real spectral_radius = 0.0;

    [[nodiscard]] Index state_count() const { return A.rows(); }
    [[nodiscard]] Index input_count() const { return B.cols(); }
    [[nodiscard]] Index output_count() const { return C.rows(); }

    [[nodiscard]] Index diode_current_output(std::size_t diode_index) const {
        return probe_count + 2 * static_cast<Index>(diode_index);
    }
    [[nodiscard]] Index diode_voltage_output(std::size_t diode_index) const {
        return probe_count + 2 * static_cast<Index>(diode_index) + 1;
    }
};

}  // namespace eschil
