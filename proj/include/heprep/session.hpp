#pragma once

// Server-side event loop: the current event, its lazily built HepRep, pick
// actions and algorithms that a remote client can drive.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "heprep/builder.hpp"
#include "heprep/event.hpp"
#include "heprep/model.hpp"
#include "heprep/query.hpp"

namespace heprep {

struct ActionArgSpec {
    std::string name;
    AttValueKind kind = AttValueKind::Integer;
    std::string description;
};

struct ActionSpec {
    std::string name;
    std::string description;
    std::vector<ActionArgSpec> args;
};

struct ActionInvocation {
    std::string actionName;
    InstancePath targetPath;  // an origPath, i.e. a path in the unfiltered tree
    std::map<std::string, AttPayload, CaseInsensitiveLess> args;
};

struct AlgorithmReport {
    std::string name;
    std::string status;
    std::string summary;
};

inline constexpr std::string_view kRemoveHitAndRefit = "removeHitAndRefit";

class Session {
  public:
    /// Mutates `event` in place; may read the unfiltered document of the
    /// event as it was before the action.
    using ActionHandler = std::function<void(Event& event, const Document& doc, const ActionInvocation&)>;
    using Algorithm = std::function<AlgorithmReport(Event& event)>;

    /// Starts with no current event; the first next_event() loads event 1.
    explicit Session(std::uint64_t seed, EventConfig config = {});

    std::uint64_t seed() const { return seed_; }
    const EventConfig& config() const { return config_; }
    std::int64_t event_id() const { return eventId_; }
    bool has_event() const { return event_ != nullptr; }
    /// Throws Error(State) when no event is loaded.
    const Event& event() const;

    std::int64_t next_event();

    /// Unfiltered document for the current event, built on first use and
    /// cached until the event changes.
    std::shared_ptr<const Document> document();

    /// Fresh build through the registry with only the fillers the request selects.
    Document build_document(const InstanceRequest& request) const;

    const FillerRegistry& registry() const { return registry_; }

    void register_action(ActionSpec spec, ActionHandler handler);
    void register_algorithm(std::string name, Algorithm algorithm);
    std::vector<ActionSpec> actions() const;
    std::vector<std::string> algorithms() const;

    /// All-or-nothing: the event is untouched when the action throws.
    void apply_action(const ActionInvocation& invocation);
    AlgorithmReport run_algorithm(std::string_view name);

  private:
    std::uint64_t seed_;
    EventConfig config_;
    std::int64_t eventId_ = 0;
    std::unique_ptr<Event> event_;
    std::shared_ptr<const Document> document_;
    FillerRegistry registry_;
    std::vector<std::pair<ActionSpec, ActionHandler>> actions_;
    std::vector<std::pair<std::string, Algorithm>> algorithms_;
};

/// Applies the action, rebuilds, then filters as get_instances.
InstanceTree get_instances_after_action(Session& session, const ActionInvocation& action,
                                        const InstanceRequest& request);

/// "nTracks=2 nCalDeposits=3 nAcdHits=0 sumEnergy=123.5"
std::string summarize_event(const Event& event);

}  // namespace heprep
