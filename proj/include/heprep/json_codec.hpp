#pragma once

// JSON shapes for the wire protocol. They mirror the XML elements field for
// field: elements become objects, nesting becomes the arrays "types",
// "instances", "points", "attvalues" and "attdefs". Attribute values keep
// their XML text encoding so 64-bit integers survive JavaScript clients.

#include <vector>

#include <json.hpp>

#include "heprep/builder.hpp"
#include "heprep/model.hpp"
#include "heprep/query.hpp"
#include "heprep/session.hpp"

namespace heprep {

using Json = nlohmann::json;

// Encoders. Decoders throw Error(BadRequest) on any shape violation,
// including unknown keys.
Json to_json(const AttDef& def);
Json to_json(const AttValue& value);
Json to_json(const Type& type);
Json to_json(const TypeTree& tree);
Json to_json(const Point& point);
Json to_json(const Instance& instance);
Json to_json(const InstanceTree& tree);
Json to_json(const InstanceTreeTop& top);
Json to_json(const InstanceRequest& request);
Json to_json(const ActionSpec& spec);

TypeTree type_tree_from_json(const Json& j);
InstanceTree instance_tree_from_json(const Json& j);
InstanceTreeTop tree_top_from_json(const Json& j);
InstanceRequest request_from_json(const Json& j);

/// Wire back end of the Builder: accumulates {"typetree": ..., "instancetree": ...}.
class JsonBuilder final : public Builder {
  public:
    /// Valid only after finish().
    const Json& result() const;

  protected:
    void on_open_type_tree(std::string_view name, std::string_view version) override;
    void on_open_type(std::string_view name) override;
    void on_att_def(const AttDef& def) override;
    void on_type_att_value(const AttValue& value) override;
    void on_close_type() override;
    void on_close_type_tree() override;
    void on_open_instance_tree(std::string_view name, std::string_view version, std::string_view typeTreeName,
                               std::string_view typeTreeVersion) override;
    void on_open_instance(std::string_view typeFullName) override;
    void on_instance_att_value(const AttValue& value) override;
    void on_point(double x, double y, double z) override;
    void on_point_att_value(const AttValue& value) override;
    void on_close_instance() override;
    void on_close_instance_tree() override;
    void on_finish() override {}

  private:
    Json root_ = Json::object();
    std::vector<Json> stack_;
};

Document document_from_json(const Json& j);

}  // namespace heprep
