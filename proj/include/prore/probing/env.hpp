#pragma once

#include <functional>
#include <memory>
#include <string>

#include "prore/core/types.hpp"

namespace prore::probing {

struct Capabilities {
    bool reset = false;
    bool snapshot = false;
    bool replay = false;
};

/// Handle to one mutable environment instance. A handle is owned by one
/// context at a time; snapshots produce fully independent instances.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::string instance_id() const = 0;
    virtual Capabilities capabilities() const = 0;

    virtual core::UiState observe() = 0;
    virtual core::UiState step(const core::Action& action) = 0;
    virtual void reset() = 0;
    virtual std::unique_ptr<Environment> snapshot(const std::string& new_instance_id) = 0;

    virtual bool closed() const = 0;
    virtual void close() = 0;
};

// Agent policy: observation + goal text -> next action. Implementations may
// carry internal navigation state; one instance must not be shared across
// concurrent probes.
using AgentFn = std::function<core::Action(const core::UiState&, const std::string& goal_text)>;

} // namespace prore::probing
