#include "heprep/fillers.hpp"

#include <cmath>

#include "heprep/event.hpp"

namespace heprep {

namespace {

AttDef physics(std::string name, std::string desc, AttValueKind kind, std::string units = {}) {
    return {std::move(name), std::move(desc), AttributeCategory::Physics, kind, std::move(units)};
}

void prism(Builder& b, const Box& box) {
    for (const auto& c : box.corners()) b.point(c.x, c.y, c.z);
}

void draw_defaults(Builder& b, std::string_view drawAs, Color color) {
    b.type_att_value({"DrawAs", std::string(drawAs)});
    b.type_att_value({"Color", color});
}

}  // namespace

void GeometryFiller::fill_types(Builder& b) const {
    b.open_type("Geometry");
    b.att_def(physics("Volume", "Detector volume name", AttValueKind::Text));
    b.att_def(physics("Subsystem", "Tracker, Calorimeter or ACD", AttValueKind::Text));
    draw_defaults(b, "Prism", {0.5, 0.5, 0.5});
    b.type_att_value({"LineWidth", 1.0});
    b.type_att_value({"Visibility", true});
    b.close_type();
}

void GeometryFiller::fill_instances(Builder& b, const Event&, const InstanceRequest&) const {
    auto volume = [&](const Box& box, std::string name, std::string_view subsystem) {
        b.open_instance("Geometry");
        b.instance_att_value({"Volume", std::move(name)});
        b.instance_att_value({"Subsystem", std::string(subsystem)});
        prism(b, box);
        b.close_instance();
    };
    for (int t = 0; t < detector::kTowerCount; ++t) {
        volume(detector::tower_box(t), "Tower" + std::to_string(t), "Tracker");
    }
    for (int c = 0; c < detector::kTowerCount * detector::kCrystalsPerTower; ++c) {
        volume(detector::crystal_box(c), "Crystal" + std::to_string(c), "Calorimeter");
    }
    for (int t = 0; t < detector::kTowerCount; ++t) {
        volume(detector::tile_box(t), "Tile" + std::to_string(t), "ACD");
    }
}

void TrackFiller::fill_types(Builder& b) const {
    b.open_type("Track");
    b.att_def(physics("Momentum", "Energy carried by the track", AttValueKind::Real, "MeV"));
    b.att_def(physics("ParticleID", "Particle species", AttValueKind::Text));
    b.att_def(physics("Chi2", "Unweighted straight-line fit chi-square", AttValueKind::Real, "mm^2"));
    b.att_def(physics("NHits", "Number of hits on the track", AttValueKind::Integer));
    b.att_def({"removeHitAndRefit", "Remove the hit given by hitIndex and refit the track",
               AttributeCategory::PickAction, AttValueKind::Text, ""});
    draw_defaults(b, "Line", {0.2, 0.4, 1.0});
    b.type_att_value({"LineWidth", 2.0});
    b.type_att_value({"removeHitAndRefit", std::string("Remove hit and refit track")});

    b.open_type("TrackHit");
    b.att_def(physics("HitIndex", "Position of the hit along the track", AttValueKind::Integer));
    b.att_def(physics("Residual", "Distance from the fitted line in the plane", AttValueKind::Real, "mm"));
    draw_defaults(b, "Point", {1.0, 1.0, 0.0});
    b.type_att_value({"MarkerSize", 4.0});
    b.close_type();

    b.close_type();
}

void TrackFiller::fill_instances(Builder& b, const Event& event, const InstanceRequest& request) const {
    bool withHits = request.typeNames.empty() || request.typeNames.count("Track/TrackHit");
    for (const auto& track : event.tracks) {
        b.open_instance("Track");
        b.instance_att_value({"Momentum", track.energy});
        b.instance_att_value({"ParticleID", track.particleId});
        b.instance_att_value({"Chi2", track.fit.chi2});
        b.instance_att_value({"NHits", static_cast<std::int64_t>(track.hits.size())});
        for (const auto& h : track.hits) b.point(h.x, h.y, h.z);
        if (withHits) {
            for (std::size_t i = 0; i < track.hits.size(); ++i) {
                const auto& h = track.hits[i];
                double rx = h.x - (track.fit.slopeX * h.z + track.fit.interceptX);
                double ry = h.y - (track.fit.slopeY * h.z + track.fit.interceptY);
                b.open_instance("Track/TrackHit");
                b.instance_att_value({"HitIndex", static_cast<std::int64_t>(i)});
                b.instance_att_value({"Residual", std::hypot(rx, ry)});
                b.point(h.x, h.y, h.z);
                b.close_instance();
            }
        }
        b.close_instance();
    }
}

void CalFiller::fill_types(Builder& b) const {
    b.open_type("CalCrystal");
    b.att_def(physics("Energy", "Deposited energy", AttValueKind::Real, "MeV"));
    b.att_def(physics("CrystalId", "Tower * 8 + crystal index", AttValueKind::Integer));
    draw_defaults(b, "Prism", {1.0, 0.5, 0.0});
    b.close_type();
}

void CalFiller::fill_instances(Builder& b, const Event& event, const InstanceRequest&) const {
    for (const auto& dep : event.calDeposits) {
        b.open_instance("CalCrystal");
        b.instance_att_value({"Energy", dep.energy});
        b.instance_att_value({"CrystalId", static_cast<std::int64_t>(dep.id)});
        prism(b, detector::crystal_box(dep.id));
        b.close_instance();
    }
}

void AcdFiller::fill_types(Builder& b) const {
    b.open_type("AcdTile");
    b.att_def(physics("Energy", "Deposited energy", AttValueKind::Real, "MeV"));
    b.att_def(physics("TileId", "Tile index (equal to the tower below it)", AttValueKind::Integer));
    draw_defaults(b, "Polygon", {0.0, 0.8, 0.2});
    b.close_type();
}

void AcdFiller::fill_instances(Builder& b, const Event& event, const InstanceRequest&) const {
    for (const auto& hit : event.acdHits) {
        Box box = detector::tile_box(hit.id);
        b.open_instance("AcdTile");
        b.instance_att_value({"Energy", hit.energy});
        b.instance_att_value({"TileId", static_cast<std::int64_t>(hit.id)});
        b.point(box.min.x, box.min.y, detector::kAcdZ);
        b.point(box.max.x, box.min.y, detector::kAcdZ);
        b.point(box.max.x, box.max.y, detector::kAcdZ);
        b.point(box.min.x, box.max.y, detector::kAcdZ);
        b.close_instance();
    }
}

std::vector<std::shared_ptr<const Filler>> standard_fillers() {
    return {std::make_shared<GeometryFiller>(), std::make_shared<TrackFiller>(), std::make_shared<CalFiller>(),
            std::make_shared<AcdFiller>()};
}

FillerRegistry standard_registry() {
    FillerRegistry registry;
    for (auto& f : standard_fillers()) registry.register_filler(std::move(f));
    return registry;
}

}  // namespace heprep
