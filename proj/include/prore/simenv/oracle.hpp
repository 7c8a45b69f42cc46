#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "prore/core/types.hpp"
#include "prore/simenv/world.hpp"

namespace prore::simenv {

struct OracleCondition {
    std::string op; // list_contains | list_not_contains | list_count | list_unique | value_equals
    std::string list;
    std::string item;
    std::string key;
    std::string expected;
    int count = 0;

    bool holds(const SimEnvironment& env) const;
};

/// Rule-based task checker with full store visibility; side-effect free.
struct Oracle {
    std::vector<OracleCondition> all;

    bool check(const SimEnvironment& env) const;
    static Oracle from_json(const nlohmann::json& j);
};

class OracleRegistry {
public:
    void register_oracle(const std::string& goal_id, Oracle oracle);
    bool has(const std::string& goal_id) const;

    // Throws InputError when no oracle is registered for the goal.
    core::RewardValue ground_truth_check(const SimEnvironment& env, const core::Goal& goal) const;

private:
    std::map<std::string, Oracle> oracles_;
};

} // namespace prore::simenv
