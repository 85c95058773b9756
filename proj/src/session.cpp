#include "heprep/session.hpp"

#include <algorithm>
#include <sstream>

#include "heprep/error.hpp"
#include "heprep/fillers.hpp"
#include "heprep/values.hpp"

namespace heprep {

namespace {

void remove_hit_and_refit(Event& event, const Document& doc, const ActionInvocation& inv) {
    const Instance& target = instance_at(doc, inv.targetPath);
    if (inv.targetPath.depth() != 1 || !iequals(target.typeFullName, "Track")) {
        throw Error(ErrorCode::BadTarget, "'" + inv.targetPath.str() + "' is a " + target.typeFullName + ", not a Track");
    }
    std::size_t root = inv.targetPath.indices().front();
    auto trackIndex = static_cast<std::size_t>(
        std::count_if(doc.instanceTree.rootInstances.begin(), doc.instanceTree.rootInstances.begin() + root,
                      [](const Instance& i) { return iequals(i.typeFullName, "Track"); }));
    if (trackIndex >= event.tracks.size()) {
        throw Error(ErrorCode::BadTarget, "'" + inv.targetPath.str() + "' has no underlying track");
    }
    for (const auto& [name, value] : inv.args) {
        if (!iequals(name, "hitIndex")) throw Error(ErrorCode::ActionArg, "unknown argument '" + name + "'");
    }
    auto arg = inv.args.find("hitIndex");
    if (arg == inv.args.end()) throw Error(ErrorCode::ActionArg, "missing argument hitIndex");
    const auto* index = std::get_if<std::int64_t>(&arg->second);
    if (!index) throw Error(ErrorCode::ActionArg, "hitIndex must be an integer");

    McTrack& track = event.tracks[trackIndex];
    if (track.hits.size() <= 2) {
        throw Error(ErrorCode::ActionPrecondition, "track has " + std::to_string(track.hits.size()) +
                                                       " hits; removing one would leave fewer than 2");
    }
    if (*index < 0 || static_cast<std::size_t>(*index) >= track.hits.size()) {
        throw Error(ErrorCode::ActionArg, "hitIndex " + std::to_string(*index) + " out of range [0," +
                                              std::to_string(track.hits.size()) + ")");
    }
    auto removed = static_cast<std::size_t>(*index);
    std::vector<TrackHit> remaining = track.hits;
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(removed));
    TrackFit fit = fit_track(remaining);  // may throw DegenerateFit before anything changes

    track.hits = std::move(remaining);
    track.fit = fit;
    if (track.outlierHit) {
        if (*track.outlierHit == removed) {
            track.outlierHit.reset();
        } else if (*track.outlierHit > removed) {
            --*track.outlierHit;
        }
    }
}

AlgorithmReport refit_all(Event& event) {
    for (auto& track : event.tracks) track.fit = fit_track(track.hits);
    return {"refitAll", "ok", "refitted " + std::to_string(event.tracks.size()) + " tracks"};
}

}  // namespace

std::string summarize_event(const Event& event) {
    double sum = 0.0;
    for (const auto& t : event.tracks) sum += t.energy;
    for (const auto& d : event.calDeposits) sum += d.energy;
    for (const auto& d : event.acdHits) sum += d.energy;
    std::ostringstream out;
    out << "eventId=" << event.eventId << " nTracks=" << event.tracks.size()
        << " nCalDeposits=" << event.calDeposits.size() << " nAcdHits=" << event.acdHits.size()
        << " sumEnergy=" << format_real(sum) << " MeV";
    return out.str();
}

Session::Session(std::uint64_t seed, EventConfig config)
    : seed_(seed), config_(config), registry_(standard_registry()) {
    register_action({std::string(kRemoveHitAndRefit),
                     "Remove one hit from a track and refit it",
                     {{"hitIndex", AttValueKind::Integer, "index of the hit along the track"}}},
                    remove_hit_and_refit);
    register_algorithm("refitAll", refit_all);
    register_algorithm("summarize", [](Event& event) {
        return AlgorithmReport{"summarize", "ok", summarize_event(event)};
    });
}

const Event& Session::event() const {
    if (!event_) throw Error(ErrorCode::State, "no current event; call next_event first");
    return *event_;
}

std::int64_t Session::next_event() {
    auto next = std::make_unique<Event>(generate_event(seed_, eventId_ + 1, config_));
    event_ = std::move(next);
    ++eventId_;
    document_.reset();
    return eventId_;
}

std::shared_ptr<const Document> Session::document() {
    if (!document_) {
        MemoryBuilder builder;
        build_event(registry_, event(), InstanceRequest{}, builder);
        document_ = std::make_shared<const Document>(builder.take_document());
    }
    return document_;
}

Document Session::build_document(const InstanceRequest& request) const {
    MemoryBuilder builder;
    build_event(registry_, event(), request, builder);
    return builder.take_document();
}

void Session::register_action(ActionSpec spec, ActionHandler handler) {
    actions_.emplace_back(std::move(spec), std::move(handler));
}

void Session::register_algorithm(std::string name, Algorithm algorithm) {
    algorithms_.emplace_back(std::move(name), std::move(algorithm));
}

std::vector<ActionSpec> Session::actions() const {
    std::vector<ActionSpec> out;
    for (const auto& [spec, handler] : actions_) out.push_back(spec);
    return out;
}

std::vector<std::string> Session::algorithms() const {
    std::vector<std::string> out;
    for (const auto& [name, algorithm] : algorithms_) out.push_back(name);
    return out;
}

void Session::apply_action(const ActionInvocation& invocation) {
    auto it = std::find_if(actions_.begin(), actions_.end(),
                           [&](const auto& a) { return iequals(a.first.name, invocation.actionName); });
    if (it == actions_.end()) throw Error(ErrorCode::UnknownAction, "no action named '" + invocation.actionName + "'");
    auto doc = document();
    Event scratch = event();
    it->second(scratch, *doc, invocation);
    *event_ = std::move(scratch);
    document_.reset();
}

AlgorithmReport Session::run_algorithm(std::string_view name) {
    auto it = std::find_if(algorithms_.begin(), algorithms_.end(),
                           [&](const auto& a) { return iequals(a.first, name); });
    if (it == algorithms_.end()) throw Error(ErrorCode::UnknownAlgorithm, "no algorithm named '" + std::string(name) + "'");
    Event scratch = event();
    AlgorithmReport report = it->second(scratch);
    *event_ = std::move(scratch);
    document_.reset();
    return report;
}

InstanceTree get_instances_after_action(Session& session, const ActionInvocation& action,
                                        const InstanceRequest& request) {
    check_request(request);
    session.apply_action(action);
    return get_instances(*session.document(), request);
}

}  // namespace heprep
