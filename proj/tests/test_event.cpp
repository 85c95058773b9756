#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

#include "heprep/builder.hpp"
#include "heprep/error.hpp"
#include "heprep/event.hpp"
#include "heprep/fillers.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace heprep;

namespace {

constexpr double kQuantum = 1.0 / (1 << 20);

std::int64_t units(double mev) {
    double u = mev / kQuantum;
    REQUIRE(u == std::floor(u));
    return static_cast<std::int64_t>(u);
}

Document full_document(const Event& event) {
    MemoryBuilder builder;
    build_event(standard_registry(), event, {}, builder);
    return builder.take_document();
}

void for_each_point(const std::vector<Instance>& level, const std::function<void(const Point&)>& f) {
    for (const auto& inst : level) {
        for (const auto& p : inst.points) f(p);
        for_each_point(inst.subInstances, f);
    }
}

long double chi2_long(const std::vector<TrackHit>& hits, const TrackFit& f) {
    long double sum = 0;
    for (const auto& h : hits) {
        long double rx = h.x - (static_cast<long double>(f.slopeX) * h.z + f.interceptX);
        long double ry = h.y - (static_cast<long double>(f.slopeY) * h.z + f.interceptY);
        sum += rx * rx + ry * ry;
    }
    return sum;
}

}  // namespace

TEST_CASE("generation is deterministic") {
    CHECK(generate_event(42, 1) == generate_event(42, 1));
    CHECK(generate_event(42, 7) == generate_event(42, 7));
    CHECK_FALSE(generate_event(42, 1) == generate_event(42, 2));
    CHECK_FALSE(generate_event(42, 1) == generate_event(43, 1));
    EventConfig clean{0.0, 0.0, 5.0};
    CHECK(generate_event(5, 3, clean) == generate_event(5, 3, clean));
}

TEST_CASE("hits lie in one tower footprint on detector planes") {
    std::set<double> planes;
    for (int p = 0; p < detector::kPlaneCount; ++p) planes.insert(detector::plane_z(p));
    CHECK(planes == std::set<double>{50, 100, 150, 200, 250, 300, 350, 400, 450, 500});

    for (std::int64_t id = 1; id <= 2000; ++id) {
        auto event = generate_event(7, id);
        CAPTURE(id);
        REQUIRE(event.tracks.size() == 2);
        int tower = detector::tower_at(event.vertex.x, event.vertex.y);
        REQUIRE(tower >= 0);
        auto box = detector::tower_box(tower);
        for (const auto& track : event.tracks) {
            CHECK(track.hits.size() >= 2);
            for (std::size_t i = 0; i < track.hits.size(); ++i) {
                const auto& h = track.hits[i];
                CHECK(planes.count(h.z) == 1);
                CHECK(h.x >= box.min.x);
                CHECK(h.x <= box.max.x);
                CHECK(h.y >= box.min.y);
                CHECK(h.y <= box.max.y);
                if (i > 0) CHECK(track.hits[i - 1].z < h.z);
            }
            CHECK(std::abs(std::hypot(track.direction.x, track.direction.y, track.direction.z) - 1.0) < 1e-12);
            CHECK((track.particleId == "e-" || track.particleId == "e+"));
        }
        CHECK(std::any_of(event.tracks.begin(), event.tracks.end(), [](const McTrack& t) { return t.hits.size() >= 3; }));
        CHECK(event.gammaEnergy >= 20.0);
        CHECK(event.gammaEnergy <= 300000.0);
    }
}

TEST_CASE("energy is conserved exactly") {
    testsupport::Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        auto seed = rng();
        auto event = generate_event(seed, 1 + i % 5);
        CAPTURE(seed);
        std::int64_t sum = 0;
        for (const auto& t : event.tracks) sum += units(t.energy);
        for (const auto& d : event.calDeposits) sum += units(d.energy);
        for (const auto& d : event.acdHits) sum += units(d.energy);
        REQUIRE(sum == units(event.gammaEnergy));
        CHECK(event.calDeposits.size() <= 4);
    }
}

TEST_CASE("deposits sit under the track exits") {
    int withAcd = 0;
    for (std::int64_t id = 1; id <= 500; ++id) {
        auto event = generate_event(3, id);
        int tower = detector::tower_at(event.vertex.x, event.vertex.y);
        for (const auto& d : event.calDeposits) CHECK(d.id / detector::kCrystalsPerTower == tower);
        for (const auto& d : event.acdHits) CHECK(d.id == tower);
        withAcd += !event.acdHits.empty();
    }
    CHECK(withAcd > 0);
    CHECK(withAcd < 250);
}

TEST_CASE("every emitted point lies inside the detector") {
    auto bounds = detector::bounding_box();
    for (std::int64_t id = 1; id <= 200; ++id) {
        auto doc = full_document(generate_event(11, id));
        for_each_point(doc.instanceTree.rootInstances, [&](const Point& p) {
            CHECK(std::isfinite(p.x));
            CHECK(bounds.contains({p.x, p.y, p.z}));
        });
    }
}

TEST_CASE("detector volumes are disjoint") {
    std::vector<Box> boxes;
    for (int t = 0; t < detector::kTowerCount; ++t) boxes.push_back(detector::tower_box(t));
    for (int c = 0; c < detector::kTowerCount * detector::kCrystalsPerTower; ++c) boxes.push_back(detector::crystal_box(c));
    for (int t = 0; t < detector::kTowerCount; ++t) boxes.push_back(detector::tile_box(t));
    auto overlap = [](const Box& a, const Box& b) {
        return a.min.x < b.max.x && b.min.x < a.max.x && a.min.y < b.max.y && b.min.y < a.max.y && a.min.z < b.max.z &&
               b.min.z < a.max.z;
    };
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        for (std::size_t j = i + 1; j < boxes.size(); ++j) {
            CAPTURE(i);
            CAPTURE(j);
            CHECK_FALSE(overlap(boxes[i], boxes[j]));
        }
    }
    CHECK(detector::crystal_at(detector::tower_center(5).x + 1, detector::tower_center(5).y + 1) / 8 == 5);
    CHECK(detector::tower_at(10000, 0) == -1);
}

TEST_CASE("fit on exact lines") {
    std::vector<TrackHit> hits;
    for (double z : {50.0, 100.0, 150.0, 300.0}) hits.push_back({z, 0.1 * z + 2, -0.05 * z + 1});
    auto fit = fit_track(hits);
    CHECK(fit.slopeX == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(fit.interceptX == doctest::Approx(2).epsilon(1e-9));
    CHECK(fit.slopeY == doctest::Approx(-0.05).epsilon(1e-9));
    CHECK(fit.interceptY == doctest::Approx(1).epsilon(1e-9));
    CHECK(std::abs(fit.chi2) < 1e-9);
}

TEST_CASE("fit of three x-hits matches the closed form") {
    std::vector<TrackHit> hits = {{0, 0, 0}, {1, 1, 0}, {2, 0, 0}};
    auto fit = fit_track(hits);
    auto oracle = testsupport::oracle_fit(hits);
    CHECK(std::abs(fit.slopeX) < 1e-12);
    CHECK(fit.interceptX == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(fit.chi2 == doctest::Approx(2.0 / 3).epsilon(1e-12));
    CHECK(testsupport::close_rel(fit.interceptX, oracle.interceptX, 1e-12));
    CHECK(testsupport::close_rel(fit.chi2, oracle.chi2, 1e-12));
}

TEST_CASE("degenerate fits") {
    std::vector<TrackHit> same = {{100, 1, 2}, {100, 3, 4}, {100, 5, 6}};
    CHECK_THROWS_AS(fit_track(same), Error);
    try {
        fit_track(same);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateFit);
    }
    std::vector<TrackHit> one = {{100, 1, 2}};
    CHECK_THROWS_AS(fit_track(one), Error);
    CHECK_THROWS_AS(fit_track(std::span<const TrackHit>{}), Error);
}

TEST_CASE("fit matches the oracle and is stationary") {
    testsupport::Rng rng(77);
    std::uniform_real_distribution<double> coord(-180, 180);
    for (int i = 0; i < 2000; ++i) {
        std::vector<TrackHit> hits;
        int n = testsupport::pick(rng, 2, 10);
        std::vector<int> planes(10);
        std::iota(planes.begin(), planes.end(), 0);
        std::shuffle(planes.begin(), planes.end(), rng);
        planes.resize(static_cast<std::size_t>(n));
        std::sort(planes.begin(), planes.end());
        for (int p : planes) hits.push_back({detector::plane_z(p), coord(rng), coord(rng)});

        auto fit = fit_track(hits);
        auto oracle = testsupport::oracle_fit(hits);
        CAPTURE(i);
        CHECK(testsupport::close_rel(fit.slopeX, oracle.slopeX, 1e-9));
        CHECK(testsupport::close_rel(fit.interceptX, oracle.interceptX, 1e-9));
        CHECK(testsupport::close_rel(fit.slopeY, oracle.slopeY, 1e-9));
        CHECK(testsupport::close_rel(fit.interceptY, oracle.interceptY, 1e-9));
        CHECK(testsupport::close_rel(fit.chi2, oracle.chi2, 1e-9));
        CHECK(fit.chi2 >= 0);
        CHECK(chi2_of(hits, fit) == doctest::Approx(fit.chi2).epsilon(1e-12));

        const double eps = 1e-6;
        for (int k = 0; k < 4; ++k) {
            for (double sign : {-1.0, 1.0}) {
                TrackFit moved = fit;
                double* field[] = {&moved.slopeX, &moved.interceptX, &moved.slopeY, &moved.interceptY};
                *field[k] += sign * eps;
                CHECK(chi2_long(hits, moved) >= chi2_long(hits, fit));
            }
        }
    }
}

TEST_CASE("pre-fit tracks and injected outliers") {
    int outliers = 0;
    for (std::int64_t id = 1; id <= 1000; ++id) {
        auto event = generate_event(42, id);
        for (const auto& track : event.tracks) {
            CHECK(track.fit == fit_track(track.hits));
            if (track.outlierHit) {
                ++outliers;
                CHECK(track.hits.size() >= 3);
                CHECK(*track.outlierHit < track.hits.size());
            }
        }
    }
    // roughly one event in ten
    CHECK(outliers > 50);
    CHECK(outliers < 160);

    EventConfig never{0.0, 0.2, 5.0};
    for (std::int64_t id = 1; id <= 200; ++id) {
        for (const auto& t : generate_event(42, id, never).tracks) CHECK_FALSE(t.outlierHit.has_value());
    }
}
