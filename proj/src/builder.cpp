#include "heprep/builder.hpp"

#include <cmath>

#include "heprep/error.hpp"
#include "heprep/event.hpp"

namespace heprep {

namespace {

bool finite_payload(const AttPayload& p) {
    if (const auto* d = std::get_if<double>(&p)) return std::isfinite(*d);
    if (const auto* c = std::get_if<Color>(&p)) {
        for (double x : {c->r, c->g, c->b}) {
            if (!std::isfinite(x) || x < 0.0 || x > 1.0) return false;
        }
    }
    return true;
}

}  // namespace

void Builder::fail(std::string_view call, const std::string& why) {
    poisoned_ = true;
    throw Error(ErrorCode::BuilderState, std::string(call) + ": " + why);
}

void Builder::require(bool ok, std::string_view call, const char* why) {
    if (!ok) fail(call, why);
}

template <typename Fn>
void Builder::emit(Fn&& fn) {
    if (poisoned_) throw Error(ErrorCode::BuilderState, "builder is poisoned by an earlier error");
    try {
        fn();
    } catch (...) {
        poisoned_ = true;
        throw;
    }
}

void Builder::check_allowed(std::string_view call, std::string_view fullName) {
    if (allowed_ && !allowed_->count(std::string(fullName))) {
        fail(call, "type '" + std::string(fullName) + "' is not owned by the current filler");
    }
}

std::optional<AttValueKind> Builder::def_in_scope(std::string_view typeFullName, std::string_view name) const {
    std::string key = to_lower(name);
    for (std::string t(typeFullName); !t.empty(); t = parent_type_name(t)) {
        auto it = catalog_.find(to_lower(t));
        if (it == catalog_.end()) continue;
        auto def = it->second.defs.find(key);
        if (def != it->second.defs.end()) return def->second;
    }
    for (const auto& def : default_draw_definitions()) {
        if (iequals(def.name, name)) return def.kind;
    }
    return std::nullopt;
}

void Builder::check_value(std::string_view call, const AttValue& value, std::string_view typeFullName) {
    require(!value.name.empty(), call, "attribute name is empty");
    require(finite_payload(value.value), call, "non-finite real or colour component outside [0,1]");
    if (auto kind = def_in_scope(typeFullName, value.name); kind && *kind != value.kind()) {
        fail(call, "attribute '" + value.name + "' has kind " + std::string(kind_token(value.kind())) +
                       " but its AttDef says " + std::string(kind_token(*kind)));
    }
}

void Builder::open_type_tree(std::string_view name, std::string_view version) {
    emit([&] {
        require(phase_ == Phase::Start, "openTypeTree", "type tree already opened");
        on_open_type_tree(name, version);
        typeTreeName_ = name;
        typeTreeVersion_ = version;
        phase_ = Phase::TypeTree;
    });
}

void Builder::open_type(std::string_view name) {
    emit([&] {
        require(phase_ == Phase::TypeTree, "openType", "no open type tree");
        require(!name.empty() && name.find('/') == std::string_view::npos, "openType",
                "type name must be non-empty and free of '/'");
        std::string fullName = join_type_name(typeStack_.empty() ? "" : typeStack_.back().fullName, name);
        NameSet& siblings = typeStack_.empty() ? rootTypeNames_ : typeStack_.back().childNames;
        if (siblings.count(std::string(name))) fail("openType", "duplicate type '" + fullName + "'");
        check_allowed("openType", fullName);
        on_open_type(name);
        siblings.insert(std::string(name));
        catalog_[to_lower(fullName)];
        typeStack_.push_back({fullName, {}});
    });
}

void Builder::att_def(const AttDef& def) {
    emit([&] {
        require(phase_ == Phase::TypeTree && !typeStack_.empty(), "attDef", "no open type");
        require(!def.name.empty(), "attDef", "AttDef name is empty");
        auto& defs = catalog_[to_lower(typeStack_.back().fullName)].defs;
        if (defs.count(to_lower(def.name))) fail("attDef", "duplicate AttDef '" + def.name + "'");
        on_att_def(def);
        defs.emplace(to_lower(def.name), def.kind);
    });
}

void Builder::type_att_value(const AttValue& value) {
    emit([&] {
        require(phase_ == Phase::TypeTree && !typeStack_.empty(), "typeAttValue", "no open type");
        require(!value.name.empty(), "typeAttValue", "attribute name is empty");
        require(finite_payload(value.value), "typeAttValue", "non-finite real or colour component outside [0,1]");
        on_type_att_value(value);
        catalog_[to_lower(typeStack_.back().fullName)].values.emplace_back(value.name, value.kind());
    });
}

void Builder::close_type() {
    emit([&] {
        require(phase_ == Phase::TypeTree && !typeStack_.empty(), "closeType", "no open type");
        on_close_type();
        typeStack_.pop_back();
    });
}

void Builder::close_type_tree() {
    emit([&] {
        require(phase_ == Phase::TypeTree, "closeTypeTree", "no open type tree");
        require(typeStack_.empty(), "closeTypeTree", "a type is still open");
        // Type-level defaults can only be checked once every AttDef is known.
        for (const auto& [key, info] : catalog_) {
            for (const auto& [name, kind] : info.values) {
                auto def = def_in_scope(key, name);
                if (def && *def != kind) {
                    fail("closeTypeTree", "type default '" + name + "' on '" + key + "' has kind " +
                                              std::string(kind_token(kind)) + " but its AttDef says " +
                                              std::string(kind_token(*def)));
                }
            }
        }
        on_close_type_tree();
        phase_ = Phase::BetweenTrees;
    });
}

void Builder::open_instance_tree(std::string_view name, std::string_view version, std::string_view typeTreeName,
                                 std::string_view typeTreeVersion) {
    emit([&] {
        require(phase_ == Phase::BetweenTrees, "openInstanceTree", "type tree not closed or instance tree already opened");
        require(typeTreeName == typeTreeName_ && typeTreeVersion == typeTreeVersion_, "openInstanceTree",
                "type tree identity does not match the emitted type tree");
        on_open_instance_tree(name, version, typeTreeName, typeTreeVersion);
        phase_ = Phase::InstanceTree;
    });
}

void Builder::open_instance(std::string_view typeFullName) {
    emit([&] {
        require(phase_ == Phase::InstanceTree, "openInstance", "no open instance tree");
        if (!catalog_.count(to_lower(typeFullName))) {
            fail("openInstance", "type '" + std::string(typeFullName) + "' is not in the type tree");
        }
        if (!instanceStack_.empty() && !iequals(parent_type_name(typeFullName), instanceStack_.back())) {
            fail("openInstance", "type '" + std::string(typeFullName) + "' is not a subtype of '" +
                                     instanceStack_.back() + "'");
        }
        check_allowed("openInstance", typeFullName);
        on_open_instance(typeFullName);
        instanceStack_.emplace_back(typeFullName);
        lastWasPoint_ = false;
    });
}

void Builder::instance_att_value(const AttValue& value) {
    emit([&] {
        require(phase_ == Phase::InstanceTree && !instanceStack_.empty(), "instanceAttValue", "no open instance");
        check_value("instanceAttValue", value, instanceStack_.back());
        on_instance_att_value(value);
        lastWasPoint_ = false;
    });
}

void Builder::point(double x, double y, double z) {
    emit([&] {
        require(phase_ == Phase::InstanceTree && !instanceStack_.empty(), "point", "no open instance");
        require(std::isfinite(x) && std::isfinite(y) && std::isfinite(z), "point", "non-finite coordinate");
        on_point(x, y, z);
        lastWasPoint_ = true;
    });
}

void Builder::point_att_value(const AttValue& value) {
    emit([&] {
        require(phase_ == Phase::InstanceTree && !instanceStack_.empty(), "pointAttValue", "no open instance");
        require(lastWasPoint_, "pointAttValue", "must directly follow point() or another pointAttValue()");
        check_value("pointAttValue", value, instanceStack_.back());
        on_point_att_value(value);
    });
}

void Builder::close_instance() {
    emit([&] {
        require(phase_ == Phase::InstanceTree && !instanceStack_.empty(), "closeInstance", "no open instance");
        on_close_instance();
        instanceStack_.pop_back();
        lastWasPoint_ = false;
    });
}

void Builder::close_instance_tree() {
    emit([&] {
        require(phase_ == Phase::InstanceTree, "closeInstanceTree", "no open instance tree");
        require(instanceStack_.empty(), "closeInstanceTree", "an instance is still open");
        on_close_instance_tree();
        phase_ = Phase::Closed;
    });
}

void Builder::finish() {
    emit([&] {
        require(phase_ == Phase::Closed, "finish", "instance tree not closed");
        on_finish();
        phase_ = Phase::Done;
    });
}

// ---------------------------------------------------------------------------
// MemoryBuilder

const Document& MemoryBuilder::document() const {
    if (!finished()) throw Error(ErrorCode::BuilderState, "document: builder not finished");
    return doc_;
}

Document MemoryBuilder::take_document() {
    if (!finished()) throw Error(ErrorCode::BuilderState, "takeDocument: builder not finished");
    return std::move(doc_);
}

void MemoryBuilder::on_open_type_tree(std::string_view name, std::string_view version) {
    doc_.typeTree.name = name;
    doc_.typeTree.version = version;
}

void MemoryBuilder::on_open_type(std::string_view name) { types_.push_back(Type{std::string(name), {}, {}, {}}); }

void MemoryBuilder::on_att_def(const AttDef& def) { types_.back().attDefs.push_back(def); }

void MemoryBuilder::on_type_att_value(const AttValue& value) { types_.back().attValues.push_back(value); }

void MemoryBuilder::on_close_type() {
    Type done = std::move(types_.back());
    types_.pop_back();
    (types_.empty() ? doc_.typeTree.rootTypes : types_.back().subTypes).push_back(std::move(done));
}

void MemoryBuilder::on_close_type_tree() {}

void MemoryBuilder::on_open_instance_tree(std::string_view name, std::string_view version,
                                          std::string_view typeTreeName, std::string_view typeTreeVersion) {
    auto& tree = doc_.instanceTree;
    tree.name = name;
    tree.version = version;
    tree.typeTreeName = typeTreeName;
    tree.typeTreeVersion = typeTreeVersion;
}

void MemoryBuilder::on_open_instance(std::string_view typeFullName) {
    instances_.push_back(Instance{std::string(typeFullName), {}, {}, {}});
}

void MemoryBuilder::on_instance_att_value(const AttValue& value) { instances_.back().attValues.push_back(value); }

void MemoryBuilder::on_point(double x, double y, double z) { instances_.back().points.push_back({x, y, z, {}}); }

void MemoryBuilder::on_point_att_value(const AttValue& value) {
    instances_.back().points.back().attValues.push_back(value);
}

void MemoryBuilder::on_close_instance() {
    Instance done = std::move(instances_.back());
    instances_.pop_back();
    (instances_.empty() ? doc_.instanceTree.rootInstances : instances_.back().subInstances).push_back(std::move(done));
}

void MemoryBuilder::on_close_instance_tree() {}

namespace {

void replay_type(const Type& type, Builder& b) {
    b.open_type(type.name);
    for (const auto& def : type.attDefs) b.att_def(def);
    for (const auto& v : type.attValues) b.type_att_value(v);
    for (const auto& sub : type.subTypes) replay_type(sub, b);
    b.close_type();
}

void replay_instance(const Instance& inst, Builder& b) {
    b.open_instance(inst.typeFullName);
    for (const auto& v : inst.attValues) b.instance_att_value(v);
    for (const auto& p : inst.points) {
        b.point(p.x, p.y, p.z);
        for (const auto& v : p.attValues) b.point_att_value(v);
    }
    for (const auto& sub : inst.subInstances) replay_instance(sub, b);
    b.close_instance();
}

}  // namespace

void replay_document(const Document& doc, Builder& b) {
    b.open_type_tree(doc.typeTree.name, doc.typeTree.version);
    for (const auto& t : doc.typeTree.rootTypes) replay_type(t, b);
    b.close_type_tree();
    const auto& it = doc.instanceTree;
    b.open_instance_tree(it.name, it.version, it.typeTreeName, it.typeTreeVersion);
    for (const auto& inst : it.rootInstances) replay_instance(inst, b);
    b.close_instance_tree();
    b.finish();
}

// ---------------------------------------------------------------------------
// Registry

void FillerRegistry::register_filler(std::shared_ptr<const Filler> filler) {
    auto names = filler->type_names();
    if (names.empty()) {
        throw Error(ErrorCode::EmptyOwnership, "filler '" + filler->name() + "' declares no types");
    }
    NameSet mine;
    for (const auto& n : names) {
        if (owned_.count(n) || mine.count(n)) {
            throw Error(ErrorCode::DuplicateTypeOwner, "type '" + n + "' claimed by filler '" + filler->name() +
                                                           "' is already owned");
        }
        mine.insert(n);
    }
    owned_.insert(mine.begin(), mine.end());
    fillers_.push_back(std::move(filler));
}

namespace {

bool is_ancestor_or_self(std::string_view ancestor, std::string_view fullName) {
    if (iequals(ancestor, fullName)) return true;
    return fullName.size() > ancestor.size() && fullName[ancestor.size()] == '/' &&
           iequals(fullName.substr(0, ancestor.size()), ancestor);
}

}  // namespace

std::vector<std::shared_ptr<const Filler>> FillerRegistry::fillers_for_request(const InstanceRequest& request) const {
    if (request.typeNames.empty()) return fillers_;
    std::vector<std::shared_ptr<const Filler>> out;
    for (const auto& filler : fillers_) {
        bool wanted = false;
        for (const auto& owned : filler->type_names()) {
            for (const auto& requested : request.typeNames) {
                if (is_ancestor_or_self(owned, requested) || is_ancestor_or_self(requested, owned)) wanted = true;
            }
        }
        if (wanted) out.push_back(filler);
    }
    return out;
}

namespace {

template <typename Fn>
void run_filler(Builder& builder, const Filler& filler, Fn&& fn) {
    auto names = filler.type_names();
    builder.restrict_emission(NameSet(names.begin(), names.end()));
    try {
        fn();
    } catch (const Error& e) {
        builder.restrict_emission(std::nullopt);
        if (e.code() == ErrorCode::BuilderState) {
            throw Error(ErrorCode::BuilderState, "filler '" + filler.name() + "': " + e.detail());
        }
        throw;
    }
    builder.restrict_emission(std::nullopt);
}

}  // namespace

void build_event(const FillerRegistry& registry, const Event& event, const InstanceRequest& request,
                 Builder& builder) {
    check_request(request);
    builder.open_type_tree(kTypeTreeName, kTypeTreeVersion);
    for (const auto& filler : registry.fillers()) {
        run_filler(builder, *filler, [&] { filler->fill_types(builder); });
    }
    builder.close_type_tree();
    builder.open_instance_tree(kInstanceTreeName, std::to_string(event.eventId), kTypeTreeName, kTypeTreeVersion);
    for (const auto& filler : registry.fillers_for_request(request)) {
        run_filler(builder, *filler, [&] { filler->fill_instances(builder, event, request); });
    }
    builder.close_instance_tree();
    builder.finish();
}

}  // namespace heprep
