#pragma once

#include <string>
#include <vector>

namespace prore::claims {

// How an evaluator claim relates to a policy claim. "unrelated" in model
// output is accepted as a synonym of unsupported at parse time.
enum class Relation { confirmed, contradicted, complementary, unsupported };

std::string to_string(Relation r);
Relation relation_from_string(const std::string& s);

struct RelationEdge {
    std::string policy_claim_id;
    std::string evaluator_claim_id;
    Relation relation = Relation::unsupported;
};

struct ClaimGraph {
    std::vector<RelationEdge> edges;

    bool has_evaluator_claim(const std::string& id) const;
    void add_unique(RelationEdge edge); // drops duplicate (policy, evaluator) pairs
};

} // namespace prore::claims
