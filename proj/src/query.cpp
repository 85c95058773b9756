#include "heprep/query.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "heprep/error.hpp"
#include "heprep/values.hpp"

namespace heprep {

std::string_view to_string(PredicateOp op) {
    switch (op) {
        case PredicateOp::Exists: return "exists";
        case PredicateOp::Eq: return "=";
        case PredicateOp::Ne: return "!=";
        case PredicateOp::Lt: return "<";
        case PredicateOp::Le: return "<=";
        case PredicateOp::Gt: return ">";
        case PredicateOp::Ge: return ">=";
    }
    return "";
}

namespace {

bool is_ordering(PredicateOp op) {
    return op == PredicateOp::Lt || op == PredicateOp::Le || op == PredicateOp::Gt || op == PredicateOp::Ge;
}

bool is_numeric(AttValueKind kind) { return kind == AttValueKind::Integer || kind == AttValueKind::Real; }

bool is_op_char(char c) { return c == '<' || c == '>' || c == '=' || c == '!'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

AttPayload parse_literal(std::string_view literal) {
    if (literal.size() >= 2 && literal.front() == '"' && literal.back() == '"') {
        return std::string(literal.substr(1, literal.size() - 2));
    }
    if (auto i = parse_integer(literal)) return *i;
    if (auto d = parse_real(literal)) return *d;
    if (literal == "true") return true;
    if (literal == "false") return false;
    return std::string(literal);
}

[[noreturn]] void bad_predicate(std::string_view text, std::string_view why) {
    throw Error(ErrorCode::BadRequest, "malformed predicate '" + std::string(text) + "': " + std::string(why));
}

template <typename T>
bool compare(PredicateOp op, const T& a, const T& b) {
    switch (op) {
        case PredicateOp::Eq: return a == b;
        case PredicateOp::Ne: return a != b;
        case PredicateOp::Lt: return a < b;
        case PredicateOp::Le: return a <= b;
        case PredicateOp::Gt: return a > b;
        case PredicateOp::Ge: return a >= b;
        case PredicateOp::Exists: return true;
    }
    return false;
}

// Exact three-way comparison of an integer with a finite double.
int compare_mixed(std::int64_t i, double d) {
    constexpr double kTwo63 = 9223372036854775808.0;
    if (d >= kTwo63) return -1;
    if (d < -kTwo63) return 1;
    double whole = std::trunc(d);
    auto w = static_cast<std::int64_t>(whole);
    if (i != w) return i < w ? -1 : 1;
    double frac = d - whole;
    return frac > 0 ? -1 : (frac < 0 ? 1 : 0);
}

int compare_numeric(const AttPayload& a, const AttPayload& b) {
    const auto* ai = std::get_if<std::int64_t>(&a);
    const auto* bi = std::get_if<std::int64_t>(&b);
    if (ai && bi) return *ai < *bi ? -1 : (*ai > *bi ? 1 : 0);
    if (ai) return compare_mixed(*ai, std::get<double>(b));
    if (bi) return -compare_mixed(*bi, std::get<double>(a));
    double x = std::get<double>(a), y = std::get<double>(b);
    return x < y ? -1 : (x > y ? 1 : 0);
}

}  // namespace

Predicate parse_predicate(std::string_view text) {
    std::string_view s = trim(text);
    std::size_t nameEnd = 0;
    while (nameEnd < s.size() && !is_op_char(s[nameEnd]) && !std::isspace(static_cast<unsigned char>(s[nameEnd]))) {
        ++nameEnd;
    }
    Predicate p;
    p.attName = std::string(s.substr(0, nameEnd));
    if (p.attName.empty()) bad_predicate(text, "missing attribute name");
    std::string_view rest = trim(s.substr(nameEnd));
    if (rest == "exists") {
        p.op = PredicateOp::Exists;
        return p;
    }
    static constexpr std::pair<std::string_view, PredicateOp> ops[] = {
        {"<=", PredicateOp::Le}, {">=", PredicateOp::Ge}, {"!=", PredicateOp::Ne},
        {"=", PredicateOp::Eq},  {"<", PredicateOp::Lt},  {">", PredicateOp::Gt},
    };
    bool matched = false;
    for (const auto& [token, op] : ops) {
        if (rest.starts_with(token)) {
            p.op = op;
            rest = trim(rest.substr(token.size()));
            matched = true;
            break;
        }
    }
    if (!matched) bad_predicate(text, "expected one of exists, =, !=, <, <=, >, >=");
    if (rest.empty()) bad_predicate(text, "missing literal");
    if (is_op_char(rest.front())) bad_predicate(text, "unexpected operator character in literal");
    p.operand = parse_literal(rest);
    if (is_ordering(p.op) && !is_numeric(kind_of(*p.operand))) {
        bad_predicate(text, "ordering comparison needs a numeric literal");
    }
    return p;
}

std::string format_predicate(const Predicate& predicate) {
    if (predicate.op == PredicateOp::Exists || !predicate.operand) return predicate.attName + " exists";
    std::string literal = format_payload(*predicate.operand);
    if (const auto* text = std::get_if<std::string>(&*predicate.operand)) {
        if (kind_of(parse_literal(*text)) != AttValueKind::Text || text->empty() || is_op_char(text->front()) ||
            text->front() == '"' || trim(*text) != *text) {
            literal = "\"" + *text + "\"";
        }
    } else if (std::holds_alternative<double>(*predicate.operand) && kind_of(parse_literal(literal)) != AttValueKind::Real) {
        literal += ".0";
    }
    return predicate.attName + std::string(to_string(predicate.op)) + literal;
}

bool evaluate(const Predicate& predicate, const std::optional<AttValue>& resolved) {
    if (!resolved) return false;
    if (predicate.op == PredicateOp::Exists) return true;
    if (!predicate.operand) return false;
    const AttPayload& lhs = resolved->value;
    const AttPayload& rhs = *predicate.operand;
    AttValueKind lk = kind_of(lhs);
    AttValueKind rk = kind_of(rhs);
    if (is_numeric(lk) && is_numeric(rk)) {
        return compare(predicate.op, compare_numeric(lhs, rhs), 0);
    }
    if (lk != rk || is_ordering(predicate.op)) return false;
    bool equal = lhs == rhs;
    return predicate.op == PredicateOp::Eq ? equal : !equal;
}

void check_request(const InstanceRequest& request) {
    for (const auto& name : request.attIncludes) {
        if (request.attExcludes.count(name)) {
            throw Error(ErrorCode::BadRequest, "attribute '" + name + "' is both included and excluded");
        }
    }
    for (const auto& p : request.predicates) {
        if (p.attName.empty()) throw Error(ErrorCode::BadRequest, "predicate without attribute name");
        if (p.op != PredicateOp::Exists && !p.operand) {
            throw Error(ErrorCode::BadRequest, "predicate on '" + p.attName + "' lacks an operand");
        }
        if (is_ordering(p.op) && !is_numeric(kind_of(*p.operand))) {
            throw Error(ErrorCode::BadRequest, "ordering predicate on '" + p.attName + "' has a non-numeric operand");
        }
    }
    if (request.maxDepth && *request.maxDepth < 1) {
        throw Error(ErrorCode::BadRequest, "maxDepth must be at least 1");
    }
}

const AttDef& orig_path_definition() {
    static const AttDef def{std::string(kOrigPathAttribute), "Path of this instance in the unfiltered instance tree",
                            AttributeCategory::Association, AttValueKind::Text, ""};
    return def;
}

const TypeTree& get_type_tree(const Document& doc) { return doc.typeTree; }

namespace {

std::size_t count_descendants(const Instance& instance) {
    std::size_t n = instance.subInstances.size();
    for (const auto& sub : instance.subInstances) n += count_descendants(sub);
    return n;
}

// Instance-level resolution without re-walking the path from the root.
std::optional<AttValue> resolve_here(const Document& doc, const Instance& instance, std::string_view name) {
    for (auto it = instance.attValues.rbegin(); it != instance.attValues.rend(); ++it) {
        if (iequals(it->name, name)) return *it;
    }
    for (std::string t = instance.typeFullName; !t.empty(); t = parent_type_name(t)) {
        if (const Type* type = find_type(doc.typeTree, t)) {
            for (auto it = type->attValues.rbegin(); it != type->attValues.rend(); ++it) {
                if (iequals(it->name, name)) return *it;
            }
        }
    }
    return std::nullopt;
}

class Filter {
  public:
    Filter(const Document& doc, const InstanceRequest& request) : doc_(doc), request_(request) { check_request(request); }

    bool selects(const Instance& instance, std::size_t depth) const {
        if (request_.maxDepth && depth > static_cast<std::size_t>(*request_.maxDepth)) return false;
        if (!request_.typeNames.empty() && !request_.typeNames.count(instance.typeFullName)) return false;
        return std::all_of(request_.predicates.begin(), request_.predicates.end(), [&](const Predicate& p) {
            return evaluate(p, resolve_here(doc_, instance, p.attName));
        });
    }

    bool keeps_attribute(const std::string& name) const {
        if (!request_.attIncludes.empty() && !request_.attIncludes.count(name)) return false;
        return !request_.attExcludes.count(name);
    }

    bool may_descend(std::size_t depth) const {
        return !request_.maxDepth || depth < static_cast<std::size_t>(*request_.maxDepth);
    }

    std::vector<AttValue> filtered(const std::vector<AttValue>& values) const {
        std::vector<AttValue> out;
        for (const auto& v : values) {
            if (keeps_attribute(v.name)) out.push_back(v);
        }
        return out;
    }

    std::optional<Instance> build(const Instance& instance, const InstancePath& path) const {
        std::size_t depth = path.depth();
        std::vector<Instance> children;
        if (may_descend(depth)) {
            for (std::size_t i = 0; i < instance.subInstances.size(); ++i) {
                if (auto child = build(instance.subInstances[i], path.child(i))) children.push_back(std::move(*child));
            }
        }
        bool selected = selects(instance, depth);
        if (!selected && children.empty()) return std::nullopt;
        Instance out;
        out.typeFullName = instance.typeFullName;
        if (selected) {
            out.attValues = filtered(instance.attValues);
            out.points.reserve(instance.points.size());
            for (const auto& pt : instance.points) out.points.push_back({pt.x, pt.y, pt.z, filtered(pt.attValues)});
        }
        out.attValues.push_back({std::string(kOrigPathAttribute), path.str()});
        out.subInstances = std::move(children);
        return out;
    }

    void collect(const Instance& instance, const InstancePath& path, std::vector<InstancePath>& out) const {
        if (selects(instance, path.depth())) out.push_back(path);
        if (!may_descend(path.depth())) return;
        for (std::size_t i = 0; i < instance.subInstances.size(); ++i) {
            collect(instance.subInstances[i], path.child(i), out);
        }
    }

  private:
    const Document& doc_;
    const InstanceRequest& request_;
};

}  // namespace

InstanceTreeTop get_instance_tree_top(const Document& doc) {
    const auto& tree = doc.instanceTree;
    InstanceTreeTop top{tree.name, tree.version, tree.typeTreeName, tree.typeTreeVersion, {}};
    for (const auto& root : tree.rootInstances) top.roots.push_back({root.typeFullName, count_descendants(root)});
    return top;
}

std::vector<InstancePath> selected_paths(const Document& doc, const InstanceRequest& request) {
    Filter filter(doc, request);
    std::vector<InstancePath> out;
    const auto& roots = doc.instanceTree.rootInstances;
    for (std::size_t i = 0; i < roots.size(); ++i) filter.collect(roots[i], InstancePath({i}), out);
    return out;
}

InstanceTree get_instances(const Document& doc, const InstanceRequest& request) {
    Filter filter(doc, request);
    const auto& src = doc.instanceTree;
    InstanceTree out{src.name, src.version, src.typeTreeName, src.typeTreeVersion, {}};
    for (std::size_t i = 0; i < src.rootInstances.size(); ++i) {
        if (auto inst = filter.build(src.rootInstances[i], InstancePath({i}))) out.rootInstances.push_back(std::move(*inst));
    }
    return out;
}

}  // namespace heprep
