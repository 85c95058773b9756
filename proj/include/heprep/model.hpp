#pragma once

// HepRep document model: a type tree describing what can be drawn and an
// instance tree holding one event's representables.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace heprep {

enum class AttributeCategory { Draw, Physics, PickAction, Association };

enum class AttValueKind { Text, Integer, Real, Boolean, Color };

std::string_view to_string(AttributeCategory category);
std::optional<AttributeCategory> parse_category(std::string_view token);

// Short tokens used by the XML and JSON encodings: text|int|real|bool|color.
std::string_view kind_token(AttValueKind kind);
std::optional<AttValueKind> parse_kind_token(std::string_view token);

struct Color {
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;

    bool operator==(const Color&) const = default;
};

// Alternative order matches AttValueKind.
using AttPayload = std::variant<std::string, std::int64_t, double, bool, Color>;

AttValueKind kind_of(const AttPayload& payload);

struct AttDef {
    std::string name;
    std::string description;
    AttributeCategory category = AttributeCategory::Physics;
    AttValueKind kind = AttValueKind::Text;
    std::string units;

    bool operator==(const AttDef&) const = default;
};

struct AttValue {
    std::string name;
    AttPayload value;

    AttValueKind kind() const { return kind_of(value); }
    bool operator==(const AttValue&) const = default;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    std::vector<AttValue> attValues;

    bool operator==(const Point&) const = default;
};

struct Type {
    std::string name;
    std::vector<AttDef> attDefs;
    std::vector<AttValue> attValues;
    std::vector<Type> subTypes;

    bool operator==(const Type&) const = default;
};

struct TypeTree {
    std::string name;
    std::string version;
    std::vector<Type> rootTypes;

    bool operator==(const TypeTree&) const = default;
};

struct Instance {
    std::string typeFullName;
    std::vector<AttValue> attValues;
    std::vector<Point> points;
    std::vector<Instance> subInstances;

    bool operator==(const Instance&) const = default;
};

struct InstanceTree {
    std::string name;
    std::string version;
    std::string typeTreeName;
    std::string typeTreeVersion;
    std::vector<Instance> rootInstances;

    bool operator==(const InstanceTree&) const = default;
};

struct Document {
    TypeTree typeTree;
    InstanceTree instanceTree;

    bool operator==(const Document&) const = default;
};

/// Sibling indices from the instance-tree root, rendered "0/3".
class InstancePath {
  public:
    InstancePath() = default;
    explicit InstancePath(std::vector<std::size_t> indices) : indices_(std::move(indices)) {}

    /// Throws Error(InvalidPath) on empty input or a non-numeric segment.
    static InstancePath parse(std::string_view text);

    const std::vector<std::size_t>& indices() const { return indices_; }
    std::size_t depth() const { return indices_.size(); }
    bool empty() const { return indices_.empty(); }

    InstancePath child(std::size_t index) const;
    std::string str() const;

    bool operator==(const InstancePath&) const = default;
    auto operator<=>(const InstancePath&) const = default;

  private:
    std::vector<std::size_t> indices_;
};

bool iequals(std::string_view a, std::string_view b);
std::string to_lower(std::string_view s);

/// Last segment-free join: "Track" + "TrackHit" -> "Track/TrackHit".
std::string join_type_name(std::string_view parentFullName, std::string_view name);
/// "Track/TrackHit" -> "Track"; root names yield an empty string.
std::string parent_type_name(std::string_view fullName);

const Type* find_type(const TypeTree& tree, std::string_view fullName);

/// Throws Error(InvalidPath) when the path does not resolve.
const Instance& instance_at(const Document& doc, const InstancePath& path);
const Instance& instance_at(const InstanceTree& tree, const InstancePath& path);

/// Point attributes, then instance, then the instance's type, then each
/// ancestor type. Within one node the last duplicate wins.
std::optional<AttValue> resolve_attribute(const Document& doc, const InstancePath& path,
                                          std::optional<std::size_t> pointIndex, std::string_view name);

/// Nearest AttDef named `name` visible from type `typeFullName`, falling back
/// to the predefined draw definitions.
std::optional<AttDef> find_attdef_in_scope(const TypeTree& tree, std::string_view typeFullName,
                                           std::string_view name);

/// DrawAs, Color, LineWidth, MarkerSize, Visibility.
const std::vector<AttDef>& default_draw_definitions();
inline constexpr std::string_view kDrawAsShapes[] = {"Point", "Line", "Polygon", "Prism"};

enum class ViolationKind {
    TypeNotFound,
    BadSubtype,
    TreeMismatch,
    DupTypeName,
    DupAttDef,
    KindMismatch,
    NonfinitePoint,
    InvalidName,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    std::string location;
    std::string message;
};

std::vector<Violation> validate_document(const Document& doc);

/// Depth-first pre-order visit of every instance with its path.
template <typename Fn>
void for_each_instance(const InstanceTree& tree, Fn&& fn);

namespace detail {
template <typename Fn>
void visit_instances(const std::vector<Instance>& instances, const InstancePath& parent, Fn& fn) {
    for (std::size_t i = 0; i < instances.size(); ++i) {
        InstancePath path = parent.child(i);
        fn(instances[i], path);
        visit_instances(instances[i].subInstances, path, fn);
    }
}
}  // namespace detail

template <typename Fn>
void for_each_instance(const InstanceTree& tree, Fn&& fn) {
    detail::visit_instances(tree.rootInstances, InstancePath{}, fn);
}

}  // namespace heprep
