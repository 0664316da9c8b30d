#pragma once

#include "eschil/mna.hpp"

#include <cstdint>
#include <memory>
#include <mutex>
#include <unordered_map>

namespace eschil {

/// Memoizes stamp_and_reduce per switch configuration. Returned references
/// stay valid for the cache lifetime. Safe for concurrent readers so a
/// netlist can be shared across simulation sessions.
class ModeCache {
public:
    explicit ModeCache(const Netlist& net) : net_(&net) {}

    ModeCache(const ModeCache&) = delete;
    ModeCache& operator=(const ModeCache&) = delete;

    const LtiModel& get(const SwitchConfig& cfg) {
        const std::uint64_t key = cfg.key();
        std::lock_guard<std::mutex> lock(mu_);
        auto it = models_.find(key);
        if (it == models_.end()) {
            auto model = std::make_unique<LtiModel>(stamp_and_reduce(*net_, cfg));
            it = models_.emplace(key, std::move(model)).first;
            ++reductions_;
        }
        return *it->second;
    }

    [[nodiscard]] std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return models_.size();
    }

    /// Number of stamp_and_reduce invocations performed (for tests).
    [[nodiscard]] std::size_t reduction_count() const {
        std::lock_guard<std::mutex> lock(mu_);
        return reductions_;
    }

    [[nodiscard]] const Netlist& netlist() const { return *net_; }

private:
    const Netlist* net_;
    mutable std::mutex mu_;
    std::unordered_map<std::uint64_t, std::unique_ptr<LtiModel>> models_;
    std::size_t reductions_ = 0;
};

}  // namespace eschil
