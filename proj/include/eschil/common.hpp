#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace eschil {

using Real = double;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Error carrying the module of origin and, when known, the simulation
/// time and control cycle at which it occurred.
class SimError : public std::runtime_error {
public:
    SimError(std::string module, std::string message, double t_sim = -1.0,
             std::int64_t cycle = -1)
        : std::runtime_error(format(module, message, t_sim, cycle)),
          module_(std::move(module)),
          message_(std::move(message)),
          t_sim_(t_sim),
          cycle_(cycle) {}

    [[nodiscard]] const std::string& module() const { return module_; }
    [[nodiscard]] const std::string& message() const { return message_; }
    [[nodiscard]] double t_sim() const { return t_sim_; }
    [[nodiscard]] std::int64_t cycle() const { return cycle_; }

private:
    static std::string format(const std::string& module, const std::string& message,
                              double t_sim, std::int64_t cycle) {
        std::string s = "[" + module + "] " + message;
        if (t_sim >= 0.0) s += " (t=" + std::to_string(t_sim) + " s";
        if (cycle >= 0) s += (t_sim >= 0.0 ? ", cycle " : " (cycle ") + std::to_string(cycle);
        if (t_sim >= 0.0 || cycle >= 0) s += ")";
        return s;
    }

    std::string module_;
    std::string message_;
    double t_sim_;
    std::int64_t cycle_;
};

}  // namespace eschil
