#include "heprep/event.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "heprep/error.hpp"

namespace heprep {

std::array<Vec3, 8> Box::corners() const {
    return {{
        {min.x, min.y, min.z},
        {max.x, min.y, min.z},
        {max.x, max.y, min.z},
        {min.x, max.y, min.z},
        {min.x, min.y, max.z},
        {max.x, min.y, max.z},
        {max.x, max.y, max.z},
        {min.x, max.y, max.z},
    }};
}

bool Box::contains(const Vec3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y && p.z >= min.z && p.z <= max.z;
}

namespace detector {

double plane_z(int plane) { return kFirstPlaneZ + kPlaneSpacing * plane; }

Vec3 tower_center(int tower) {
    int ix = tower % kTowersPerSide;
    int iy = tower / kTowersPerSide;
    double offset = (kTowersPerSide - 1) / 2.0;
    return {(ix - offset) * kTowerPitch, (iy - offset) * kTowerPitch, 0.0};
}

int tower_at(double x, double y) {
    double half = kTowersPerSide * kTowerPitch / 2.0;
    int ix = static_cast<int>(std::floor((x + half) / kTowerPitch));
    int iy = static_cast<int>(std::floor((y + half) / kTowerPitch));
    if (ix < 0 || iy < 0 || ix >= kTowersPerSide || iy >= kTowersPerSide) return -1;
    int tower = iy * kTowersPerSide + ix;
    Vec3 c = tower_center(tower);
    if (std::abs(x - c.x) > kTowerWidth / 2 || std::abs(y - c.y) > kTowerWidth / 2) return -1;
    return tower;
}

namespace {
Box footprint(int tower, double zmin, double zmax) {
    Vec3 c = tower_center(tower);
    double h = kTowerWidth / 2;
    return {{c.x - h, c.y - h, zmin}, {c.x + h, c.y + h, zmax}};
}
}  // namespace

Box tower_box(int tower) { return footprint(tower, kTrackerBottomZ, kTrackerTopZ); }

Box crystal_box(int crystalId) {
    int tower = crystalId / kCrystalsPerTower;
    int local = crystalId % kCrystalsPerTower;
    int lx = local % kCrystalsX;
    int ly = local / kCrystalsX;
    Box fp = footprint(tower, kCalBottomZ, kCalTopZ);
    double wx = kTowerWidth / kCrystalsX;
    double wy = kTowerWidth / kCrystalsY;
    return {{fp.min.x + lx * wx, fp.min.y + ly * wy, kCalBottomZ},
            {fp.min.x + (lx + 1) * wx, fp.min.y + (ly + 1) * wy, kCalTopZ}};
}

int crystal_at(double x, double y) {
    int tower = tower_at(x, y);
    if (tower < 0) return -1;
    Box fp = footprint(tower, kCalBottomZ, kCalTopZ);
    int lx = std::min(kCrystalsX - 1, static_cast<int>((x - fp.min.x) / (kTowerWidth / kCrystalsX)));
    int ly = std::min(kCrystalsY - 1, static_cast<int>((y - fp.min.y) / (kTowerWidth / kCrystalsY)));
    return tower * kCrystalsPerTower + ly * kCrystalsX + lx;
}

Box tile_box(int tileId) { return footprint(tileId, kAcdZ - kAcdHalfThickness, kAcdZ + kAcdHalfThickness); }

Box bounding_box() {
    double half = ((kTowersPerSide - 1) * kTowerPitch + kTowerWidth) / 2;
    return {{-half, -half, kCalBottomZ}, {half, half, kAcdZ + kAcdHalfThickness}};
}

}  // namespace detector

// ---------------------------------------------------------------------------
// Fit

TrackFit fit_track(std::span<const TrackHit> hits) {
    std::set<double> distinct;
    for (const auto& h : hits) distinct.insert(h.z);
    if (distinct.size() < 2) {
        throw Error(ErrorCode::DegenerateFit, "need at least two distinct z values, got " +
                                                  std::to_string(distinct.size()));
    }
    double n = static_cast<double>(hits.size());
    double zbar = 0, xbar = 0, ybar = 0;
    for (const auto& h : hits) {
        zbar += h.z;
        xbar += h.x;
        ybar += h.y;
    }
    zbar /= n;
    xbar /= n;
    ybar /= n;
    double szz = 0, szx = 0, szy = 0;
    for (const auto& h : hits) {
        double dz = h.z - zbar;
        szz += dz * dz;
        szx += dz * (h.x - xbar);
        szy += dz * (h.y - ybar);
    }
    TrackFit fit;
    fit.slopeX = szx / szz;
    fit.interceptX = xbar - fit.slopeX * zbar;
    fit.slopeY = szy / szz;
    fit.interceptY = ybar - fit.slopeY * zbar;
    fit.chi2 = chi2_of(hits, fit);
    return fit;
}

double chi2_of(std::span<const TrackHit> hits, const TrackFit& fit) {
    double chi2 = 0.0;
    for (const auto& h : hits) {
        double rx = h.x - (fit.slopeX * h.z + fit.interceptX);
        double ry = h.y - (fit.slopeY * h.z + fit.interceptY);
        chi2 += rx * rx + ry * ry;
    }
    return chi2;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

// Energies are whole multiples of 2^-20 MeV so every partial sum is exact.
constexpr double kEnergyQuantum = 1.0 / (1 << 20);
constexpr double kMinGammaEnergy = 20.0;
constexpr double kMaxGammaEnergy = 300000.0;
constexpr double kBacksplashProbability = 0.15;
constexpr double kSlopeSpread = 0.15;
constexpr double kFootprintMargin = 10.0;

// Portable transforms over mt19937_64 so output does not depend on the
// standard library's distribution implementations.
class Random {
  public:
    Random(std::uint64_t seed, std::int64_t eventId) {
        auto id = static_cast<std::uint64_t>(eventId);
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(id), static_cast<std::uint32_t>(id >> 32)};
        engine_.seed(seq);
    }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int index(int n) { return std::min(n - 1, static_cast<int>(uniform() * n)); }

    double gauss() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

  private:
    std::mt19937_64 engine_;
};

struct Trajectory {
    Vec3 direction;
    double slopeX = 0.0;  // dx/dz
    double slopeY = 0.0;
    bool upward = false;
};

Vec3 along(const Vec3& vertex, const Trajectory& t, double z) {
    double dz = z - vertex.z;
    return {vertex.x + t.slopeX * dz, vertex.y + t.slopeY * dz, z};
}

bool inside_footprint(int tower, double x, double y, double margin) {
    Vec3 c = detector::tower_center(tower);
    double h = detector::kTowerWidth / 2 - margin;
    return std::abs(x - c.x) <= h && std::abs(y - c.y) <= h;
}

Trajectory make_trajectory(double slopeX, double slopeY, bool upward) {
    double sz = upward ? 1.0 : -1.0;
    // Slopes are dx/dz with z running along the direction of flight.
    double norm = std::sqrt(slopeX * slopeX + slopeY * slopeY + 1.0);
    Trajectory t;
    t.upward = upward;
    t.slopeX = slopeX * sz;
    t.slopeY = slopeY * sz;
    t.direction = {slopeX / norm, slopeY / norm, sz / norm};
    return t;
}

std::vector<int> planes_for(int conversionPlane, bool upward) {
    std::vector<int> planes;
    if (upward) {
        for (int p = conversionPlane; p < detector::kPlaneCount; ++p) planes.push_back(p);
    } else {
        for (int p = 0; p <= conversionPlane; ++p) planes.push_back(p);
    }
    return planes;
}

}  // namespace

Event generate_event(std::uint64_t seed, std::int64_t eventId, const EventConfig& config) {
    Random rng(seed, eventId);
    Event event;
    event.eventId = eventId;

    auto totalUnits = static_cast<std::int64_t>(
        std::llround(kMinGammaEnergy * std::pow(kMaxGammaEnergy / kMinGammaEnergy, rng.uniform()) / kEnergyQuantum));
    event.gammaEnergy = static_cast<double>(totalUnits) * kEnergyQuantum;

    int tower = rng.index(detector::kTowerCount);
    bool backsplash = rng.uniform() < kBacksplashProbability;
    // Downward tracks cross at least three planes, so every event has a track
    // that can lose a hit; an upward track needs at least one plane above.
    int conversionPlane = 2 + rng.index(backsplash ? detector::kPlaneCount - 3 : detector::kPlaneCount - 2);
    Vec3 c = detector::tower_center(tower);
    double spread = detector::kTowerWidth / 2 - 4 * kFootprintMargin;
    event.vertex = {c.x + rng.uniform(-spread, spread), c.y + rng.uniform(-spread, spread),
                    detector::plane_z(conversionPlane)};

    const std::array<bool, 2> upward = {false, backsplash};
    std::array<Trajectory, 2> trajectories;
    std::array<std::vector<TrackHit>, 2> hits;
    std::optional<std::pair<std::size_t, std::size_t>> outlier;

    auto attempt = [&](double spreadScale) {
        for (int k = 0; k < 2; ++k) {
            trajectories[k] = make_trajectory(kSlopeSpread * spreadScale * rng.gauss(),
                                              kSlopeSpread * spreadScale * rng.gauss(), upward[k]);
            hits[k].clear();
            for (int plane : planes_for(conversionPlane, upward[k])) {
                Vec3 p = along(event.vertex, trajectories[k], detector::plane_z(plane));
                hits[k].push_back({p.z, p.x + config.smearSigma * rng.gauss(), p.y + config.smearSigma * rng.gauss()});
            }
        }
        outlier.reset();
        if (rng.uniform() < config.outlierProbability) {
            std::vector<std::size_t> eligible;
            for (std::size_t k = 0; k < 2; ++k) {
                if (hits[k].size() >= 3) eligible.push_back(k);
            }
            if (!eligible.empty()) {
                std::size_t k = eligible[rng.index(static_cast<int>(eligible.size()))];
                std::size_t h = static_cast<std::size_t>(rng.index(static_cast<int>(hits[k].size())));
                hits[k][h].x += rng.uniform() < 0.5 ? -config.outlierOffset : config.outlierOffset;
                outlier = {k, h};
            }
        }
        for (int k = 0; k < 2; ++k) {
            for (const auto& h : hits[k]) {
                if (!inside_footprint(tower, h.x, h.y, 0.0)) return false;
            }
            double exitZ = upward[k] ? detector::kAcdZ : detector::kCalTopZ;
            Vec3 exit = along(event.vertex, trajectories[k], exitZ);
            if (!inside_footprint(tower, exit.x, exit.y, kFootprintMargin)) return false;
        }
        return true;
    };
    bool ok = false;
    for (int tries = 0; tries < 64 && !ok; ++tries) ok = attempt(1.0);
    // A vertical pair always fits inside the tower.
    if (!ok) ok = attempt(0.0);

    // Exact energy partition: each particle keeps part of its share on the
    // track and deposits the rest where it leaves the tracker.
    std::int64_t share0 = static_cast<std::int64_t>(static_cast<double>(totalUnits) * rng.uniform(0.2, 0.8));
    std::array<std::int64_t, 2> shares = {share0, totalUnits - share0};
    std::map<int, std::int64_t> crystalUnits;
    std::map<int, std::int64_t> tileUnits;
    for (int k = 0; k < 2; ++k) {
        McTrack track;
        track.particleId = k == 0 ? "e-" : "e+";
        track.direction = trajectories[k].direction;
        track.hits = hits[k];
        if (outlier && outlier->first == static_cast<std::size_t>(k)) track.outlierHit = outlier->second;
        auto kept = static_cast<std::int64_t>(static_cast<double>(shares[k]) * rng.uniform(0.05, 0.3));
        std::int64_t residual = shares[k] - kept;
        track.energy = static_cast<double>(kept) * kEnergyQuantum;
        if (upward[k]) {
            tileUnits[tower] += residual;
        } else {
            Vec3 exit = along(event.vertex, trajectories[k], detector::kCalTopZ);
            int crystal = detector::crystal_at(exit.x, exit.y);
            int local = crystal % detector::kCrystalsPerTower;
            int lx = local % detector::kCrystalsX;
            int neighbour = crystal + (lx < detector::kCrystalsX - 1 ? 1 : -1);
            auto main = static_cast<std::int64_t>(static_cast<double>(residual) * rng.uniform(0.6, 1.0));
            crystalUnits[crystal] += main;
            if (residual - main > 0) crystalUnits[neighbour] += residual - main;
        }
        track.fit = fit_track(track.hits);
        event.tracks.push_back(std::move(track));
    }
    for (const auto& [id, units] : crystalUnits) {
        if (units > 0) event.calDeposits.push_back({id, static_cast<double>(units) * kEnergyQuantum});
    }
    for (const auto& [id, units] : tileUnits) {
        if (units > 0) event.acdHits.push_back({id, static_cast<double>(units) * kEnergyQuantum});
    }
    return event;
}

}  // namespace heprep
