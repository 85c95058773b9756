#pragma once

// The four HepRep access methods and the incremental-download filter.

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "heprep/model.hpp"

namespace heprep {

enum class PredicateOp { Exists, Eq, Ne, Lt, Le, Gt, Ge };

std::string_view to_string(PredicateOp op);

struct Predicate {
    std::string attName;
    PredicateOp op = PredicateOp::Exists;
    std::optional<AttPayload> operand;

    bool operator==(const Predicate&) const = default;
};

/// Parses "NAME OP LITERAL" ("Momentum>1.0", "ParticleID=e-", "Energy exists").
/// Literals are typed by shape: integer, real, true/false, otherwise text;
/// a double-quoted literal is always text. Throws Error(BadRequest).
Predicate parse_predicate(std::string_view text);
std::string format_predicate(const Predicate& predicate);

/// Evaluates against an already-resolved value (absent when unresolved).
bool evaluate(const Predicate& predicate, const std::optional<AttValue>& resolved);

/// Case-insensitive ordering so name sets follow the model's comparison rule.
struct CaseInsensitiveLess {
    bool operator()(const std::string& a, const std::string& b) const { return to_lower(a) < to_lower(b); }
};
using NameSet = std::set<std::string, CaseInsensitiveLess>;

struct InstanceRequest {
    NameSet typeNames;    // empty selects every type
    NameSet attIncludes;  // empty keeps every attribute
    NameSet attExcludes;
    std::vector<Predicate> predicates;  // conjunction
    std::optional<int> maxDepth;        // roots have depth 1

    bool operator==(const InstanceRequest&) const = default;
};

/// Throws Error(BadRequest) for overlapping include/exclude sets, ordering
/// predicates with non-numeric operands, or maxDepth < 1.
void check_request(const InstanceRequest& request);

struct RootSummary {
    std::string typeFullName;
    std::size_t descendantCount = 0;

    bool operator==(const RootSummary&) const = default;
};

struct InstanceTreeTop {
    std::string name;
    std::string version;
    std::string typeTreeName;
    std::string typeTreeVersion;
    std::vector<RootSummary> roots;

    bool operator==(const InstanceTreeTop&) const = default;
};

inline constexpr std::string_view kOrigPathAttribute = "origPath";

/// AttDef describing the origPath value attached to filtered results.
const AttDef& orig_path_definition();

const TypeTree& get_type_tree(const Document& doc);
InstanceTreeTop get_instance_tree_top(const Document& doc);

/// Paths (in the unfiltered tree) of instances the request selects, pre-order.
std::vector<InstancePath> selected_paths(const Document& doc, const InstanceRequest& request);

/// Filtered copy: selected instances with their points and filtered
/// attributes, unselected ancestors as bare skeletons, the rest pruned.
/// Every surviving instance carries origPath.
InstanceTree get_instances(const Document& doc, const InstanceRequest& request);

}  // namespace heprep
