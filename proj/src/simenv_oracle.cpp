#include "prore/simenv/oracle.hpp"

#include <algorithm>
#include <set>

namespace prore::simenv {

using nlohmann::json;

bool OracleCondition::holds(const SimEnvironment& env) const {
    const auto& lists = env.lists();
    const auto& values = env.values();
    if (op == "list_contains" || op == "list_not_contains") {
        auto it = lists.find(list);
        if (it == lists.end()) return op == "list_not_contains";
        const bool found = std::find(it->second.begin(), it->second.end(), item) != it->second.end();
        return op == "list_contains" ? found : !found;
    }
    if (op == "list_count") {
        auto it = lists.find(list);
        const int n = it == lists.end() ? 0 : static_cast<int>(it->second.size());
        return n == count;
    }
    if (op == "list_unique") {
        auto it = lists.find(list);
        if (it == lists.end()) return true;
        std::set<std::string> seen(it->second.begin(), it->second.end());
        return seen.size() == it->second.size();
    }
    if (op == "value_equals") {
        auto it = values.find(key);
        return it != values.end() && it->second == expected;
    }
    throw ValidationError("oracle: unknown condition op " + op);
}

bool Oracle::check(const SimEnvironment& env) const {
    return std::all_of(all.begin(), all.end(),
                       [&](const OracleCondition& c) { return c.holds(env); });
}

Oracle Oracle::from_json(const json& j) {
    Oracle o;
    for (const auto& cond : j.at("all")) {
        OracleCondition c;
        c.op = cond.at("op").get<std::string>();
        c.list = cond.value("list", std::string());
        c.item = cond.value("item", std::string());
        c.key = cond.value("key", std::string());
        c.expected = cond.value("expected", std::string());
        c.count = cond.value("count", 0);
        o.all.push_back(std::move(c));
    }
    return o;
}

void OracleRegistry::register_oracle(const std::string& goal_id, Oracle oracle) {
    oracles_[goal_id] = std::move(oracle);
}

bool OracleRegistry::has(const std::string& goal_id) const { return oracles_.count(goal_id) > 0; }

core::RewardValue OracleRegistry::ground_truth_check(const SimEnvironment& env,
                                                     const core::Goal& goal) const {
    auto it = oracles_.find(goal.id);
    if (it == oracles_.end()) {
        throw InputError("no oracle registered for goal " + goal.id);
    }
    return it->second.check(env) ? core::RewardValue::success : core::RewardValue::failure;
}

} // namespace prore::simenv
