#pragma once

// Abstract HepRep factory. Fillers emit content through a Builder; concrete
// back ends materialize it in memory, stream it as XML, or encode it as JSON
// for the wire.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "heprep/model.hpp"
#include "heprep/query.hpp"

namespace heprep {

struct Event;

/// Call grammar (checked identically for every back end):
///
///   document      := typeTreeSection instanceTreeSection finish
///   typeTreeSection := openTypeTree type* closeTypeTree
///   type          := openType (attDef | typeAttValue | type)* closeType
///   instanceTreeSection := openInstanceTree instance* closeInstanceTree
///   instance      := openInstance (instanceAttValue | point pointAttValue* | instance)* closeInstance
///
/// Beyond the syntax, the builder rejects anything validate_document would
/// flag: bad or duplicate names, unknown instance types, subinstances whose
/// type is not a subtype of the parent's, attribute kinds that disagree with
/// the nearest AttDef, non-finite numbers. Any error poisons the builder.
class Builder {
  public:
    virtual ~Builder() = default;

    void open_type_tree(std::string_view name, std::string_view version);
    void open_type(std::string_view name);
    void att_def(const AttDef& def);
    void type_att_value(const AttValue& value);
    void close_type();
    void close_type_tree();
    void open_instance_tree(std::string_view name, std::string_view version, std::string_view typeTreeName,
                            std::string_view typeTreeVersion);
    void open_instance(std::string_view typeFullName);
    void instance_att_value(const AttValue& value);
    void point(double x, double y, double z);
    void point_att_value(const AttValue& value);
    void close_instance();
    void close_instance_tree();
    void finish();

    bool finished() const { return phase_ == Phase::Done; }
    bool poisoned() const { return poisoned_; }

    /// Limits which type fullNames may be opened (as types or instance types)
    /// until cleared. Used to hold a filler to the names it declared.
    void restrict_emission(std::optional<NameSet> allowed) { allowed_ = std::move(allowed); }

  protected:
    virtual void on_open_type_tree(std::string_view name, std::string_view version) = 0;
    virtual void on_open_type(std::string_view name) = 0;
    virtual void on_att_def(const AttDef& def) = 0;
    virtual void on_type_att_value(const AttValue& value) = 0;
    virtual void on_close_type() = 0;
    virtual void on_close_type_tree() = 0;
    virtual void on_open_instance_tree(std::string_view name, std::string_view version,
                                       std::string_view typeTreeName, std::string_view typeTreeVersion) = 0;
    virtual void on_open_instance(std::string_view typeFullName) = 0;
    virtual void on_instance_att_value(const AttValue& value) = 0;
    virtual void on_point(double x, double y, double z) = 0;
    virtual void on_point_att_value(const AttValue& value) = 0;
    virtual void on_close_instance() = 0;
    virtual void on_close_instance_tree() = 0;
    virtual void on_finish() = 0;

  private:
    enum class Phase { Start, TypeTree, BetweenTrees, InstanceTree, Closed, Done };

    struct OpenType {
        std::string fullName;
        NameSet childNames;
    };

    struct TypeInfo {
        std::map<std::string, AttValueKind> defs;  // lower-cased name
        std::vector<std::pair<std::string, AttValueKind>> values;
    };

    [[noreturn]] void fail(std::string_view call, const std::string& why);
    void require(bool ok, std::string_view call, const char* why);
    void check_allowed(std::string_view call, std::string_view fullName);
    void check_value(std::string_view call, const AttValue& value, std::string_view typeFullName);
    std::optional<AttValueKind> def_in_scope(std::string_view typeFullName, std::string_view name) const;

    template <typename Fn>
    void emit(Fn&& fn);

    Phase phase_ = Phase::Start;
    bool poisoned_ = false;
    bool lastWasPoint_ = false;
    std::string typeTreeName_;
    std::string typeTreeVersion_;
    NameSet rootTypeNames_;
    std::vector<OpenType> typeStack_;
    std::map<std::string, TypeInfo> catalog_;  // lower-cased fullName
    std::vector<std::string> instanceStack_;
    std::optional<NameSet> allowed_;
};

/// Builder that materializes a Document.
class MemoryBuilder final : public Builder {
  public:
    /// Valid only after finish().
    const Document& document() const;
    Document take_document();

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
    Document doc_;
    std::vector<Type> types_;
    std::vector<Instance> instances_;
};

/// Experiment-side component that turns one subsystem of an event into
/// HepRep types and instances.
class Filler {
  public:
    virtual ~Filler() = default;

    virtual std::string name() const = 0;
    /// Full type names this filler owns, e.g. {"Track", "Track/TrackHit"}.
    virtual std::vector<std::string> type_names() const = 0;
    virtual void fill_types(Builder& builder) const = 0;
    virtual void fill_instances(Builder& builder, const Event& event, const InstanceRequest& request) const = 0;
};

class FillerRegistry {
  public:
    /// Throws Error(EmptyOwnership) or Error(DuplicateTypeOwner).
    void register_filler(std::shared_ptr<const Filler> filler);

    const std::vector<std::shared_ptr<const Filler>>& fillers() const { return fillers_; }
    std::size_t size() const { return fillers_.size(); }

    /// Empty typeNames selects every filler; otherwise fillers owning a
    /// requested name, or an ancestor or descendant of one.
    std::vector<std::shared_ptr<const Filler>> fillers_for_request(const InstanceRequest& request) const;

  private:
    std::vector<std::shared_ptr<const Filler>> fillers_;
    NameSet owned_;
};

/// Feeds an existing document through a builder call by call, finishing it.
void replay_document(const Document& doc, Builder& builder);

inline constexpr std::string_view kTypeTreeName = "GlastEventDisplay";
inline constexpr std::string_view kTypeTreeVersion = "1.0";
inline constexpr std::string_view kInstanceTreeName = "Event";

/// Emits one complete document: every filler's types, then instances from
/// the fillers the request selects. A BUILDER_STATE raised while a filler
/// runs is rethrown naming that filler.
void build_event(const FillerRegistry& registry, const Event& event, const InstanceRequest& request,
                 Builder& builder);

}  // namespace heprep
