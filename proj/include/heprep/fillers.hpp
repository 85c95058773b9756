#pragma once

#include <memory>
#include <vector>

#include "heprep/builder.hpp"

namespace heprep {

/// Detector volumes as prisms: towers, crystals and ACD tiles.
class GeometryFiller final : public Filler {
  public:
    std::string name() const override { return "GeometryFiller"; }
    std::vector<std::string> type_names() const override { return {"Geometry"}; }
    void fill_types(Builder& builder) const override;
    void fill_instances(Builder& builder, const Event& event, const InstanceRequest& request) const override;
};

/// Tracks as polylines through their hits, hits as subinstances. Hits are
/// emitted only when the request asks for every type or for Track/TrackHit.
class TrackFiller final : public Filler {
  public:
    std::string name() const override { return "TrackFiller"; }
    std::vector<std::string> type_names() const override { return {"Track", "Track/TrackHit"}; }
    void fill_types(Builder& builder) const override;
    void fill_instances(Builder& builder, const Event& event, const InstanceRequest& request) const override;
};

class CalFiller final : public Filler {
  public:
    std::string name() const override { return "CalFiller"; }
    std::vector<std::string> type_names() const override { return {"CalCrystal"}; }
    void fill_types(Builder& builder) const override;
    void fill_instances(Builder& builder, const Event& event, const InstanceRequest& request) const override;
};

class AcdFiller final : public Filler {
  public:
    std::string name() const override { return "AcdFiller"; }
    std::vector<std::string> type_names() const override { return {"AcdTile"}; }
    void fill_types(Builder& builder) const override;
    void fill_instances(Builder& builder, const Event& event, const InstanceRequest& request) const override;
};

/// Geometry, Track, CalCrystal, AcdTile in that order.
std::vector<std::shared_ptr<const Filler>> standard_fillers();
FillerRegistry standard_registry();

}  // namespace heprep
