#pragma once

// Toy gamma-ray telescope: a 4x4 array of towers, each with ten tracker
// planes above a calorimeter, capped by an anticoincidence (ACD) tile layer.
// Lengths are millimetres, energies MeV.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace heprep {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool operator==(const Vec3&) const = default;
};

/// Axis-aligned box; the eight corners are ordered bottom face then top face,
/// each counter-clockwise seen from +z.
struct Box {
    Vec3 min;
    Vec3 max;

    std::array<Vec3, 8> corners() const;
    bool contains(const Vec3& p) const;
    bool operator==(const Box&) const = default;
};

namespace detector {

inline constexpr int kTowersPerSide = 4;
inline constexpr int kTowerCount = kTowersPerSide * kTowersPerSide;
inline constexpr double kTowerPitch = 400.0;
inline constexpr double kTowerWidth = 360.0;
inline constexpr int kPlaneCount = 10;
inline constexpr double kFirstPlaneZ = 50.0;
inline constexpr double kPlaneSpacing = 50.0;
inline constexpr double kTrackerBottomZ = 25.0;
inline constexpr double kTrackerTopZ = 525.0;
inline constexpr int kCrystalsX = 4;
inline constexpr int kCrystalsY = 2;
inline constexpr int kCrystalsPerTower = kCrystalsX * kCrystalsY;
inline constexpr double kCalBottomZ = -200.0;
inline constexpr double kCalTopZ = 0.0;
inline constexpr double kAcdZ = 550.0;
inline constexpr double kAcdHalfThickness = 5.0;

double plane_z(int plane);
/// Tower index in [0,16), row-major over (ix, iy); -1 outside every footprint.
int tower_at(double x, double y);
Vec3 tower_center(int tower);
Box tower_box(int tower);
/// Crystal ids are tower * 8 + local index.
Box crystal_box(int crystalId);
int crystal_at(double x, double y);
/// One ACD tile per tower footprint, id equal to the tower index.
Box tile_box(int tileId);
/// Smallest box containing every detector volume.
Box bounding_box();

}  // namespace detector

struct TrackHit {
    double z = 0.0;
    double x = 0.0;
    double y = 0.0;

    bool operator==(const TrackHit&) const = default;
};

struct TrackFit {
    double slopeX = 0.0;
    double interceptX = 0.0;
    double slopeY = 0.0;
    double interceptY = 0.0;
    double chi2 = 0.0;

    bool operator==(const TrackFit&) const = default;
};

struct McTrack {
    std::string particleId;  // "e-" or "e+"
    double energy = 0.0;
    Vec3 direction;
    std::vector<TrackHit> hits;  // increasing z
    TrackFit fit;
    /// Truth record of the hit carrying an injected outlier offset, if any.
    std::optional<std::size_t> outlierHit;

    bool operator==(const McTrack&) const = default;
};

struct EnergyDeposit {
    int id = 0;  // crystal or tile id
    double energy = 0.0;

    bool operator==(const EnergyDeposit&) const = default;
};

/// Per-event transient store.
struct Event {
    std::int64_t eventId = 0;
    double gammaEnergy = 0.0;
    Vec3 vertex;
    std::vector<McTrack> tracks;
    std::vector<EnergyDeposit> calDeposits;
    std::vector<EnergyDeposit> acdHits;

    bool operator==(const Event&) const = default;
};

struct EventConfig {
    double outlierProbability = 0.1;
    double smearSigma = 0.2;
    double outlierOffset = 5.0;
};

/// Deterministic in (seed, eventId, config).
Event generate_event(std::uint64_t seed, std::int64_t eventId, const EventConfig& config = {});

/// Independent unweighted least-squares lines x(z) and y(z).
/// Throws Error(DegenerateFit) with fewer than two distinct z values.
TrackFit fit_track(std::span<const TrackHit> hits);

/// Sum of squared residuals of `hits` against `fit`'s lines.
double chi2_of(std::span<const TrackHit> hits, const TrackFit& fit);

}  // namespace heprep
