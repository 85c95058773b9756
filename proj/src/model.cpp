#include "heprep/model.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <unordered_set>

#include "heprep/error.hpp"

namespace heprep {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidPath: return "INVALID_PATH";
        case ErrorCode::BuilderState: return "BUILDER_STATE";
        case ErrorCode::IoError: return "IO_ERROR";
        case ErrorCode::XmlSyntax: return "XML_SYNTAX";
        case ErrorCode::SchemaError: return "SCHEMA_ERROR";
        case ErrorCode::VersionError: return "VERSION_ERROR";
        case ErrorCode::BadRequest: return "BAD_REQUEST";
        case ErrorCode::DuplicateTypeOwner: return "DUPLICATE_TYPE_OWNER";
        case ErrorCode::EmptyOwnership: return "EMPTY_OWNERSHIP";
        case ErrorCode::DegenerateFit: return "DEGENERATE_FIT";
        case ErrorCode::UnknownAction: return "UNKNOWN_ACTION";
        case ErrorCode::BadTarget: return "BAD_TARGET";
        case ErrorCode::ActionArg: return "ACTION_ARG";
        case ErrorCode::ActionPrecondition: return "ACTION_PRECONDITION";
        case ErrorCode::UnknownAlgorithm: return "UNKNOWN_ALGORITHM";
        case ErrorCode::State: return "STATE";
    }
    return "UNKNOWN";
}

std::string_view to_string(AttributeCategory category) {
    switch (category) {
        case AttributeCategory::Draw: return "Draw";
        case AttributeCategory::Physics: return "Physics";
        case AttributeCategory::PickAction: return "PickAction";
        case AttributeCategory::Association: return "Association";
    }
    return "";
}

std::optional<AttributeCategory> parse_category(std::string_view token) {
    for (auto c : {AttributeCategory::Draw, AttributeCategory::Physics, AttributeCategory::PickAction,
                   AttributeCategory::Association}) {
        if (token == to_string(c)) return c;
    }
    return std::nullopt;
}

std::string_view kind_token(AttValueKind kind) {
    switch (kind) {
        case AttValueKind::Text: return "text";
        case AttValueKind::Integer: return "int";
        case AttValueKind::Real: return "real";
        case AttValueKind::Boolean: return "bool";
        case AttValueKind::Color: return "color";
    }
    return "";
}

std::optional<AttValueKind> parse_kind_token(std::string_view token) {
    for (auto k : {AttValueKind::Text, AttValueKind::Integer, AttValueKind::Real, AttValueKind::Boolean,
                   AttValueKind::Color}) {
        if (token == kind_token(k)) return k;
    }
    return std::nullopt;
}

AttValueKind kind_of(const AttPayload& payload) { return static_cast<AttValueKind>(payload.index()); }

// ---------------------------------------------------------------------------
// InstancePath

InstancePath InstancePath::parse(std::string_view text) {
    if (text.empty()) throw Error(ErrorCode::InvalidPath, "empty instance path");
    std::vector<std::size_t> indices;
    std::size_t start = 0;
    while (true) {
        std::size_t slash = text.find('/', start);
        std::string_view seg = text.substr(start, slash == std::string_view::npos ? text.npos : slash - start);
        std::size_t value = 0;
        auto [ptr, ec] = std::from_chars(seg.data(), seg.data() + seg.size(), value);
        if (seg.empty() || ec != std::errc{} || ptr != seg.data() + seg.size()) {
            throw Error(ErrorCode::InvalidPath, "bad path segment '" + std::string(seg) + "' in '" +
                                                    std::string(text) + "'");
        }
        indices.push_back(value);
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
    return InstancePath(std::move(indices));
}

InstancePath InstancePath::child(std::size_t index) const {
    auto copy = indices_;
    copy.push_back(index);
    return InstancePath(std::move(copy));
}

std::string InstancePath::str() const {
    std::string out;
    for (std::size_t i = 0; i < indices_.size(); ++i) {
        if (i) out += '/';
        out += std::to_string(indices_[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Names

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string join_type_name(std::string_view parentFullName, std::string_view name) {
    if (parentFullName.empty()) return std::string(name);
    std::string out(parentFullName);
    out += '/';
    out += name;
    return out;
}

std::string parent_type_name(std::string_view fullName) {
    auto slash = fullName.rfind('/');
    if (slash == std::string_view::npos) return {};
    return std::string(fullName.substr(0, slash));
}

const Type* find_type(const TypeTree& tree, std::string_view fullName) {
    const std::vector<Type>* level = &tree.rootTypes;
    const Type* found = nullptr;
    std::size_t start = 0;
    while (true) {
        std::size_t slash = fullName.find('/', start);
        std::string_view seg = fullName.substr(start, slash == std::string_view::npos ? fullName.npos : slash - start);
        auto it = std::find_if(level->begin(), level->end(), [&](const Type& t) { return iequals(t.name, seg); });
        if (it == level->end()) return nullptr;
        found = &*it;
        if (slash == std::string_view::npos) return found;
        level = &found->subTypes;
        start = slash + 1;
    }
}

// ---------------------------------------------------------------------------
// Addressing and attribute resolution

const Instance& instance_at(const InstanceTree& tree, const InstancePath& path) {
    if (path.empty()) throw Error(ErrorCode::InvalidPath, "empty instance path");
    const std::vector<Instance>* level = &tree.rootInstances;
    const Instance* current = nullptr;
    for (std::size_t index : path.indices()) {
        if (index >= level->size()) {
            throw Error(ErrorCode::InvalidPath, "path '" + path.str() + "' does not resolve");
        }
        current = &(*level)[index];
        level = &current->subInstances;
    }
    return *current;
}

const Instance& instance_at(const Document& doc, const InstancePath& path) {
    return instance_at(doc.instanceTree, path);
}

namespace {

const AttValue* find_last(const std::vector<AttValue>& values, std::string_view name) {
    for (auto it = values.rbegin(); it != values.rend(); ++it) {
        if (iequals(it->name, name)) return &*it;
    }
    return nullptr;
}

}  // namespace

std::optional<AttValue> resolve_attribute(const Document& doc, const InstancePath& path,
                                          std::optional<std::size_t> pointIndex, std::string_view name) {
    const Instance& instance = instance_at(doc, path);
    if (pointIndex) {
        if (*pointIndex >= instance.points.size()) {
            throw Error(ErrorCode::InvalidPath, "point index " + std::to_string(*pointIndex) + " out of range at '" +
                                                    path.str() + "'");
        }
        if (const auto* v = find_last(instance.points[*pointIndex].attValues, name)) return *v;
    }
    if (const auto* v = find_last(instance.attValues, name)) return *v;
    for (std::string typeName = instance.typeFullName; !typeName.empty(); typeName = parent_type_name(typeName)) {
        if (const Type* type = find_type(doc.typeTree, typeName)) {
            if (const auto* v = find_last(type->attValues, name)) return *v;
        }
    }
    return std::nullopt;
}

const std::vector<AttDef>& default_draw_definitions() {
    static const std::vector<AttDef> defs = {
        {"DrawAs", "Shape drawn from the points: Point, Line, Polygon or Prism", AttributeCategory::Draw,
         AttValueKind::Text, ""},
        {"Color", "RGB colour, components in [0,1]", AttributeCategory::Draw, AttValueKind::Color, ""},
        {"LineWidth", "Line width", AttributeCategory::Draw, AttValueKind::Real, "pixels"},
        {"MarkerSize", "Marker size", AttributeCategory::Draw, AttValueKind::Real, "pixels"},
        {"Visibility", "Whether the representable is drawn", AttributeCategory::Draw, AttValueKind::Boolean, ""},
    };
    return defs;
}

std::optional<AttDef> find_attdef_in_scope(const TypeTree& tree, std::string_view typeFullName,
                                           std::string_view name) {
    for (std::string typeName(typeFullName); !typeName.empty(); typeName = parent_type_name(typeName)) {
        if (const Type* type = find_type(tree, typeName)) {
            for (auto it = type->attDefs.rbegin(); it != type->attDefs.rend(); ++it) {
                if (iequals(it->name, name)) return *it;
            }
        }
    }
    for (const auto& def : default_draw_definitions()) {
        if (iequals(def.name, name)) return def;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Validation

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::TypeNotFound: return "TYPE_NOT_FOUND";
        case ViolationKind::BadSubtype: return "BAD_SUBTYPE";
        case ViolationKind::TreeMismatch: return "TREE_MISMATCH";
        case ViolationKind::DupTypeName: return "DUP_TYPE_NAME";
        case ViolationKind::DupAttDef: return "DUP_ATTDEF";
        case ViolationKind::KindMismatch: return "KIND_MISMATCH";
        case ViolationKind::NonfinitePoint: return "NONFINITE_POINT";
        case ViolationKind::InvalidName: return "INVALID_NAME";
    }
    return "";
}

namespace {

class Validator {
  public:
    explicit Validator(const Document& doc) : doc_(doc) {}

    std::vector<Violation> run() {
        const auto& tt = doc_.typeTree;
        const auto& it = doc_.instanceTree;
        if (it.typeTreeName != tt.name || it.typeTreeVersion != tt.version) {
            add(ViolationKind::TreeMismatch, "instancetree",
                "instance tree refers to type tree '" + it.typeTreeName + "' version '" + it.typeTreeVersion +
                    "' but document carries '" + tt.name + "' version '" + tt.version + "'");
        }
        check_types(tt.rootTypes, "");
        check_instances(it.rootInstances, InstancePath{}, nullptr);
        return std::move(out_);
    }

  private:
    void add(ViolationKind kind, std::string location, std::string message) {
        out_.push_back({kind, std::move(location), std::move(message)});
    }

    void check_values(const std::vector<AttValue>& values, std::string_view typeFullName,
                      const std::string& location) {
        for (const auto& v : values) {
            auto def = find_attdef_in_scope(doc_.typeTree, typeFullName, v.name);
            if (def && def->kind != v.kind()) {
                add(ViolationKind::KindMismatch, location,
                    "attribute '" + v.name + "' has kind " + std::string(kind_token(v.kind())) + " but AttDef says " +
                        std::string(kind_token(def->kind)));
            }
        }
    }

    void check_types(const std::vector<Type>& types, const std::string& parentFullName) {
        std::unordered_set<std::string> seen;
        for (const auto& type : types) {
            std::string fullName = join_type_name(parentFullName, type.name);
            if (type.name.empty() || type.name.find('/') != std::string::npos) {
                add(ViolationKind::InvalidName, fullName, "type name '" + type.name + "' is empty or contains '/'");
            }
            if (!seen.insert(to_lower(type.name)).second) {
                add(ViolationKind::DupTypeName, fullName, "duplicate type name '" + fullName + "'");
            }
            std::unordered_set<std::string> defNames;
            for (const auto& def : type.attDefs) {
                if (!defNames.insert(to_lower(def.name)).second) {
                    add(ViolationKind::DupAttDef, fullName, "duplicate AttDef '" + def.name + "'");
                }
            }
            check_values(type.attValues, fullName, fullName);
            check_types(type.subTypes, fullName);
        }
    }

    void check_instances(const std::vector<Instance>& instances, const InstancePath& parentPath,
                         const Instance* parent) {
        for (std::size_t i = 0; i < instances.size(); ++i) {
            const Instance& inst = instances[i];
            InstancePath path = parentPath.child(i);
            std::string loc = path.str();
            bool typeKnown = find_type(doc_.typeTree, inst.typeFullName) != nullptr;
            if (!typeKnown) {
                add(ViolationKind::TypeNotFound, loc, "type '" + inst.typeFullName + "' not found in type tree");
            } else if (parent && find_type(doc_.typeTree, parent->typeFullName) &&
                       !iequals(parent_type_name(inst.typeFullName), parent->typeFullName)) {
                add(ViolationKind::BadSubtype, loc,
                    "type '" + inst.typeFullName + "' is not a subtype of parent type '" + parent->typeFullName + "'");
            }
            if (typeKnown) check_values(inst.attValues, inst.typeFullName, loc);
            for (std::size_t p = 0; p < inst.points.size(); ++p) {
                const Point& pt = inst.points[p];
                if (!std::isfinite(pt.x) || !std::isfinite(pt.y) || !std::isfinite(pt.z)) {
                    add(ViolationKind::NonfinitePoint, loc + "#" + std::to_string(p), "non-finite point coordinate");
                }
                if (typeKnown) check_values(pt.attValues, inst.typeFullName, loc + "#" + std::to_string(p));
            }
            check_instances(inst.subInstances, path, &inst);
        }
    }

    const Document& doc_;
    std::vector<Violation> out_;
};

}  // namespace

std::vector<Violation> validate_document(const Document& doc) { return Validator(doc).run(); }

}  // namespace heprep
