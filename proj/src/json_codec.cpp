#include "heprep/json_codec.hpp"

#include <cmath>
#include <initializer_list>

#include "heprep/error.hpp"
#include "heprep/values.hpp"

namespace heprep {

namespace {

Json att_values_json(const std::vector<AttValue>& values) {
    Json arr = Json::array();
    for (const auto& v : values) arr.push_back(to_json(v));
    return arr;
}

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorCode::BadRequest, why); }

void expect_keys(const Json& j, std::string_view what, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) bad(std::string(what) + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            bad("unknown key '" + key + "' in " + std::string(what));
        }
    }
}

std::string str(const Json& j, const char* key, std::string_view what, bool required = true) {
    auto it = j.find(key);
    if (it == j.end()) {
        if (required) bad(std::string(what) + " is missing '" + key + "'");
        return {};
    }
    if (!it->is_string()) bad(std::string(what) + "." + key + " must be a string");
    return it->get<std::string>();
}

const Json& array_or_empty(const Json& j, const char* key, std::string_view what) {
    static const Json empty = Json::array();
    auto it = j.find(key);
    if (it == j.end()) return empty;
    if (!it->is_array()) bad(std::string(what) + "." + key + " must be an array");
    return *it;
}

double number(const Json& j, const char* key, std::string_view what) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number()) bad(std::string(what) + "." + key + " must be a number");
    double v = it->get<double>();
    if (!std::isfinite(v)) bad(std::string(what) + "." + key + " must be finite");
    return v;
}

AttValue att_value_from_json(const Json& j) {
    expect_keys(j, "attvalue", {"name", "kind", "value"});
    auto kind = parse_kind_token(str(j, "kind", "attvalue"));
    if (!kind) bad("attvalue has an unknown kind");
    auto payload = parse_payload(*kind, str(j, "value", "attvalue"));
    if (!payload) bad("attvalue value does not match its kind");
    return {str(j, "name", "attvalue"), std::move(*payload)};
}

std::vector<AttValue> att_values_from_json(const Json& j, std::string_view what) {
    std::vector<AttValue> out;
    for (const auto& v : array_or_empty(j, "attvalues", what)) out.push_back(att_value_from_json(v));
    return out;
}

AttDef att_def_from_json(const Json& j) {
    expect_keys(j, "attdef", {"name", "desc", "category", "kind", "units"});
    auto category = parse_category(str(j, "category", "attdef"));
    if (!category) bad("attdef has an unknown category");
    auto kind = parse_kind_token(str(j, "kind", "attdef"));
    if (!kind) bad("attdef has an unknown kind");
    return {str(j, "name", "attdef"), str(j, "desc", "attdef", false), *category, *kind, str(j, "units", "attdef", false)};
}

Type type_from_json(const Json& j) {
    expect_keys(j, "type", {"name", "attdefs", "attvalues", "types"});
    Type t{str(j, "name", "type"), {}, att_values_from_json(j, "type"), {}};
    for (const auto& d : array_or_empty(j, "attdefs", "type")) t.attDefs.push_back(att_def_from_json(d));
    for (const auto& s : array_or_empty(j, "types", "type")) t.subTypes.push_back(type_from_json(s));
    return t;
}

Point point_from_json(const Json& j) {
    expect_keys(j, "point", {"x", "y", "z", "attvalues"});
    return {number(j, "x", "point"), number(j, "y", "point"), number(j, "z", "point"), att_values_from_json(j, "point")};
}

Instance instance_from_json(const Json& j) {
    expect_keys(j, "instance", {"type", "attvalues", "points", "instances"});
    Instance inst{str(j, "type", "instance"), att_values_from_json(j, "instance"), {}, {}};
    for (const auto& p : array_or_empty(j, "points", "instance")) inst.points.push_back(point_from_json(p));
    for (const auto& s : array_or_empty(j, "instances", "instance")) inst.subInstances.push_back(instance_from_json(s));
    return inst;
}

NameSet name_set(const Json& j, const char* key) {
    NameSet out;
    for (const auto& n : array_or_empty(j, key, "request")) {
        if (!n.is_string()) bad(std::string("request.") + key + " must hold strings");
        out.insert(n.get<std::string>());
    }
    return out;
}

}  // namespace

Json to_json(const AttDef& def) {
    Json j{{"name", def.name}};
    if (!def.description.empty()) j["desc"] = def.description;
    j["category"] = to_string(def.category);
    j["kind"] = kind_token(def.kind);
    if (!def.units.empty()) j["units"] = def.units;
    return j;
}

Json to_json(const AttValue& value) {
    return {{"name", value.name}, {"kind", kind_token(value.kind())}, {"value", format_payload(value.value)}};
}

Json to_json(const Type& type) {
    Json defs = Json::array();
    for (const auto& d : type.attDefs) defs.push_back(to_json(d));
    Json subs = Json::array();
    for (const auto& s : type.subTypes) subs.push_back(to_json(s));
    return {{"name", type.name}, {"attdefs", defs}, {"attvalues", att_values_json(type.attValues)}, {"types", subs}};
}

Json to_json(const TypeTree& tree) {
    Json types = Json::array();
    for (const auto& t : tree.rootTypes) types.push_back(to_json(t));
    return {{"name", tree.name}, {"version", tree.version}, {"types", types}};
}

Json to_json(const Point& point) {
    return {{"x", point.x}, {"y", point.y}, {"z", point.z}, {"attvalues", att_values_json(point.attValues)}};
}

Json to_json(const Instance& instance) {
    Json points = Json::array();
    for (const auto& p : instance.points) points.push_back(to_json(p));
    Json subs = Json::array();
    for (const auto& s : instance.subInstances) subs.push_back(to_json(s));
    return {{"type", instance.typeFullName},
            {"attvalues", att_values_json(instance.attValues)},
            {"points", points},
            {"instances", subs}};
}

Json to_json(const InstanceTree& tree) {
    Json roots = Json::array();
    for (const auto& i : tree.rootInstances) roots.push_back(to_json(i));
    return {{"name", tree.name},
            {"version", tree.version},
            {"typetreename", tree.typeTreeName},
            {"typetreeversion", tree.typeTreeVersion},
            {"instances", roots}};
}

Json to_json(const InstanceTreeTop& top) {
    Json roots = Json::array();
    for (const auto& r : top.roots) roots.push_back({{"type", r.typeFullName}, {"count", r.descendantCount}});
    return {{"name", top.name},
            {"version", top.version},
            {"typetreename", top.typeTreeName},
            {"typetreeversion", top.typeTreeVersion},
            {"roots", roots}};
}

Json to_json(const InstanceRequest& request) {
    Json j = Json::object();
    if (!request.typeNames.empty()) j["typeNames"] = std::vector<std::string>(request.typeNames.begin(), request.typeNames.end());
    if (!request.attIncludes.empty()) {
        j["attIncludes"] = std::vector<std::string>(request.attIncludes.begin(), request.attIncludes.end());
    }
    if (!request.attExcludes.empty()) {
        j["attExcludes"] = std::vector<std::string>(request.attExcludes.begin(), request.attExcludes.end());
    }
    if (!request.predicates.empty()) {
        Json preds = Json::array();
        for (const auto& p : request.predicates) preds.push_back(format_predicate(p));
        j["predicates"] = preds;
    }
    if (request.maxDepth) j["maxDepth"] = *request.maxDepth;
    return j;
}

Json to_json(const ActionSpec& spec) {
    Json args = Json::array();
    for (const auto& a : spec.args) {
        args.push_back({{"name", a.name}, {"kind", kind_token(a.kind)}, {"description", a.description}});
    }
    return {{"name", spec.name}, {"description", spec.description}, {"args", args}};
}

TypeTree type_tree_from_json(const Json& j) {
    expect_keys(j, "typetree", {"name", "version", "types"});
    TypeTree tree{str(j, "name", "typetree"), str(j, "version", "typetree"), {}};
    for (const auto& t : array_or_empty(j, "types", "typetree")) tree.rootTypes.push_back(type_from_json(t));
    return tree;
}

InstanceTree instance_tree_from_json(const Json& j) {
    expect_keys(j, "instancetree", {"name", "version", "typetreename", "typetreeversion", "instances"});
    InstanceTree tree{str(j, "name", "instancetree"), str(j, "version", "instancetree"),
                      str(j, "typetreename", "instancetree"), str(j, "typetreeversion", "instancetree"), {}};
    for (const auto& i : array_or_empty(j, "instances", "instancetree")) tree.rootInstances.push_back(instance_from_json(i));
    return tree;
}

InstanceTreeTop tree_top_from_json(const Json& j) {
    expect_keys(j, "instance tree top", {"name", "version", "typetreename", "typetreeversion", "roots"});
    InstanceTreeTop top{str(j, "name", "top"), str(j, "version", "top"), str(j, "typetreename", "top"),
                        str(j, "typetreeversion", "top"), {}};
    for (const auto& r : array_or_empty(j, "roots", "top")) {
        expect_keys(r, "root summary", {"type", "count"});
        auto count = r.find("count");
        if (count == r.end() || !count->is_number_unsigned()) bad("root summary count must be a non-negative integer");
        top.roots.push_back({str(r, "type", "root summary"), count->get<std::size_t>()});
    }
    return top;
}

InstanceRequest request_from_json(const Json& j) {
    if (j.is_null()) return {};
    expect_keys(j, "request", {"typeNames", "attIncludes", "attExcludes", "predicates", "maxDepth"});
    InstanceRequest request;
    request.typeNames = name_set(j, "typeNames");
    request.attIncludes = name_set(j, "attIncludes");
    request.attExcludes = name_set(j, "attExcludes");
    for (const auto& p : array_or_empty(j, "predicates", "request")) {
        if (!p.is_string()) bad("request.predicates must hold strings such as \"Momentum>1.0\"");
        request.predicates.push_back(parse_predicate(p.get<std::string>()));
    }
    if (auto it = j.find("maxDepth"); it != j.end()) {
        if (!it->is_number_integer()) bad("request.maxDepth must be an integer");
        auto depth = it->get<std::int64_t>();
        if (depth < 1 || depth > 1'000'000) bad("request.maxDepth must be at least 1");
        request.maxDepth = static_cast<int>(depth);
    }
    check_request(request);
    return request;
}

Document document_from_json(const Json& j) {
    expect_keys(j, "document", {"typetree", "instancetree"});
    if (!j.contains("typetree") || !j.contains("instancetree")) bad("document needs typetree and instancetree");
    return {type_tree_from_json(j.at("typetree")), instance_tree_from_json(j.at("instancetree"))};
}

// ---------------------------------------------------------------------------
// JsonBuilder

const Json& JsonBuilder::result() const {
    if (!finished()) throw Error(ErrorCode::BuilderState, "result: builder not finished");
    return root_;
}

void JsonBuilder::on_open_type_tree(std::string_view name, std::string_view version) {
    root_["typetree"] = {{"name", name}, {"version", version}, {"types", Json::array()}};
}

void JsonBuilder::on_open_type(std::string_view name) {
    stack_.push_back({{"name", name}, {"attdefs", Json::array()}, {"attvalues", Json::array()}, {"types", Json::array()}});
}

void JsonBuilder::on_att_def(const AttDef& def) { stack_.back()["attdefs"].push_back(to_json(def)); }

void JsonBuilder::on_type_att_value(const AttValue& value) { stack_.back()["attvalues"].push_back(to_json(value)); }

void JsonBuilder::on_close_type() {
    Json done = std::move(stack_.back());
    stack_.pop_back();
    (stack_.empty() ? root_["typetree"]["types"] : stack_.back()["types"]).push_back(std::move(done));
}

void JsonBuilder::on_close_type_tree() {}

void JsonBuilder::on_open_instance_tree(std::string_view name, std::string_view version,
                                        std::string_view typeTreeName, std::string_view typeTreeVersion) {
    root_["instancetree"] = {{"name", name},
                             {"version", version},
                             {"typetreename", typeTreeName},
                             {"typetreeversion", typeTreeVersion},
                             {"instances", Json::array()}};
}

void JsonBuilder::on_open_instance(std::string_view typeFullName) {
    stack_.push_back(
        {{"type", typeFullName}, {"attvalues", Json::array()}, {"points", Json::array()}, {"instances", Json::array()}});
}

void JsonBuilder::on_instance_att_value(const AttValue& value) { stack_.back()["attvalues"].push_back(to_json(value)); }

void JsonBuilder::on_point(double x, double y, double z) {
    stack_.back()["points"].push_back({{"x", x}, {"y", y}, {"z", z}, {"attvalues", Json::array()}});
}

void JsonBuilder::on_point_att_value(const AttValue& value) {
    stack_.back()["points"].back()["attvalues"].push_back(to_json(value));
}

void JsonBuilder::on_close_instance() {
    Json done = std::move(stack_.back());
    stack_.pop_back();
    (stack_.empty() ? root_["instancetree"]["instances"] : stack_.back()["instances"]).push_back(std::move(done));
}

void JsonBuilder::on_close_instance_tree() {}

}  // namespace heprep
