#include <doctest.h>

#include "heprep/error.hpp"
#include "heprep/query.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace heprep;

namespace {

Document momentum_document() {
    Document doc;
    doc.typeTree = {"T", "1", {}};
    Type track{"Track", {{"Momentum", "", AttributeCategory::Physics, AttValueKind::Real, "GeV"}}, {}, {}};
    track.subTypes.push_back({"TrackHit", {}, {}, {}});
    doc.typeTree.rootTypes.push_back(track);
    doc.typeTree.rootTypes.push_back({"CalCrystal", {}, {}, {}});
    doc.instanceTree = {"Event", "1", "T", "1", {}};
    for (double p : {0.5, 1.5, 2.5}) {
        Instance t{"Track", {{"Momentum", p}}, {{0, 0, 0, {}}, {1, 1, 1, {}}}, {}};
        for (int i = 0; i < 2; ++i) t.subInstances.push_back({"Track/TrackHit", {{"HitIndex", std::int64_t(i)}}, {{0, 0, 1, {}}}, {}});
        doc.instanceTree.rootInstances.push_back(t);
    }
    doc.instanceTree.rootInstances.push_back({"CalCrystal", {{"Energy", 3.0}}, {{0, 0, -1, {}}}, {}});
    return doc;
}

std::string orig_path(const Instance& i) {
    for (const auto& v : i.attValues) {
        if (v.name == kOrigPathAttribute) return std::get<std::string>(v.value);
    }
    return {};
}

}  // namespace

TEST_CASE("predicate parsing") {
    auto p = parse_predicate("Momentum>1.0");
    CHECK(p.attName == "Momentum");
    CHECK(p.op == PredicateOp::Gt);
    CHECK(p.operand == AttPayload(1.0));

    CHECK(parse_predicate("ParticleID=e-").operand == AttPayload(std::string("e-")));
    CHECK(parse_predicate("Energy exists").op == PredicateOp::Exists);
    CHECK(parse_predicate("NHits >= 3").operand == AttPayload(std::int64_t(3)));
    CHECK(parse_predicate("Flag!=true").operand == AttPayload(true));
    CHECK(parse_predicate("Label=\"3\"").operand == AttPayload(std::string("3")));
    CHECK(parse_predicate("Chi2<=1e3").operand == AttPayload(1000.0));

    for (const char* bad : {"Chi2>>1", "", ">1", "Chi2", "Chi2>", "Label<abc", "Chi2 exist", "Chi2=<1", "Flag<true"}) {
        CAPTURE(bad);
        try {
            parse_predicate(bad);
            FAIL("accepted");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::BadRequest);
        }
    }
}

TEST_CASE("format_predicate inverts parse_predicate") {
    testsupport::Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        Predicate p;
        p.attName = "A" + std::to_string(i);
        p.op = static_cast<PredicateOp>(testsupport::pick(rng, 0, 6));
        if (p.op != PredicateOp::Exists) {
            bool ordering = p.op != PredicateOp::Eq && p.op != PredicateOp::Ne;
            auto kind = ordering ? (testsupport::chance(rng, 0.5) ? AttValueKind::Integer : AttValueKind::Real)
                                 : testsupport::random_kind(rng);
            if (kind == AttValueKind::Color) kind = AttValueKind::Text;
            p.operand = testsupport::random_payload(rng, kind);
            if (auto* t = std::get_if<std::string>(&*p.operand)) {
                // quotes cannot be escaped inside a literal; newlines are not part of the syntax
                std::erase_if(*t, [](char c) { return c == '"' || static_cast<unsigned char>(c) < 0x20; });
            }
        }
        CAPTURE(format_predicate(p));
        CHECK(parse_predicate(format_predicate(p)) == p);
    }
}

TEST_CASE("evaluation semantics") {
    auto v = [](AttPayload p) { return std::optional<AttValue>(AttValue{"x", std::move(p)}); };
    CHECK(evaluate(parse_predicate("x>1"), v(1.5)));
    CHECK(evaluate(parse_predicate("x>1.0"), v(std::int64_t(2))));
    CHECK_FALSE(evaluate(parse_predicate("x>1"), v(std::string("2"))));
    CHECK_FALSE(evaluate(parse_predicate("x!=1"), v(std::string("2"))));
    CHECK(evaluate(parse_predicate("x=2"), v(2.0)));
    CHECK(evaluate(parse_predicate("x exists"), v(false)));
    CHECK_FALSE(evaluate(parse_predicate("x exists"), std::nullopt));
    CHECK_FALSE(evaluate(parse_predicate("x!=3"), std::nullopt));
    CHECK(evaluate(parse_predicate("x=e-"), v(std::string("e-"))));
    CHECK_FALSE(evaluate(parse_predicate("x=E-"), v(std::string("e-"))));
    // Integers beyond 2^53 still compare exactly against reals.
    CHECK_FALSE(evaluate(parse_predicate("x=9007199254740992.0"), v(std::int64_t(9007199254740993))));
    CHECK(evaluate(parse_predicate("x>9007199254740992.0"), v(std::int64_t(9007199254740993))));
    CHECK(evaluate(parse_predicate("x<9.3e18"), v(INT64_MAX)));
    CHECK(evaluate(parse_predicate("x>-9.3e18"), v(INT64_MIN)));
    CHECK(evaluate(parse_predicate("x<-0.5"), v(std::int64_t(-1))));
    CHECK_FALSE(evaluate(parse_predicate("x<-0.5"), v(std::int64_t(0))));
}

TEST_CASE("type tree and tree top") {
    auto doc = momentum_document();
    CHECK(&get_type_tree(doc) == &doc.typeTree);
    auto top = get_instance_tree_top(doc);
    REQUIRE(top.roots.size() == 4);
    CHECK(top.roots[0] == RootSummary{"Track", 2});
    CHECK(top.roots[3] == RootSummary{"CalCrystal", 0});
    CHECK(top.typeTreeName == "T");

    Document empty;
    CHECK(get_instance_tree_top(empty).roots.empty());
}

TEST_CASE("get_instances filters") {
    auto doc = momentum_document();

    InstanceRequest fast;
    fast.predicates.push_back(parse_predicate("Momentum>1.0"));
    auto result = get_instances(doc, fast);
    REQUIRE(result.rootInstances.size() == 2);
    CHECK(orig_path(result.rootInstances[0]) == "1");
    CHECK(orig_path(result.rootInstances[1]) == "2");
    CHECK(result.rootInstances[0].subInstances.empty());

    InstanceRequest noMomentum;
    noMomentum.attExcludes.insert("momentum");
    for (const auto& inst : get_instances(doc, noMomentum).rootInstances) {
        CHECK_FALSE(inst.points.empty());
        for (const auto& a : inst.attValues) CHECK(a.name != "Momentum");
    }

    InstanceRequest hits;
    hits.typeNames.insert("Track/TrackHit");
    result = get_instances(doc, hits);
    REQUIRE(result.rootInstances.size() == 3);
    for (const auto& parent : result.rootInstances) {
        CHECK(parent.points.empty());
        REQUIRE(parent.attValues.size() == 1);
        CHECK(parent.attValues[0].name == "origPath");
        CHECK(parent.subInstances.size() == 2);
        CHECK(parent.subInstances[1].points.size() == 1);
    }
    CHECK(orig_path(result.rootInstances[2].subInstances[1]) == "2/1");

    InstanceRequest shallow;
    shallow.maxDepth = 1;
    result = get_instances(doc, shallow);
    CHECK(result.rootInstances.size() == 4);
    for (const auto& inst : result.rootInstances) CHECK(inst.subInstances.empty());

    InstanceRequest clash;
    clash.attIncludes.insert("A");
    clash.attExcludes.insert("a");
    CHECK_THROWS_AS(get_instances(doc, clash), Error);
    InstanceRequest zero;
    zero.maxDepth = 0;
    CHECK_THROWS_AS(check_request(zero), Error);
}

TEST_CASE("get_instances equals the brute-force oracle") {
    testsupport::Rng rng(2024);
    int nonEmpty = 0;
    for (int i = 0; i < 300; ++i) {
        auto doc = testsupport::random_document(rng);
        auto request = testsupport::random_request(rng, doc);
        auto expected = testsupport::oracle_get_instances(doc, request);
        auto actual = get_instances(doc, request);
        CAPTURE(i);
        REQUIRE(actual == expected);

        std::set<std::string> paths;
        for (const auto& p : selected_paths(doc, request)) paths.insert(p.str());
        CHECK(paths == testsupport::oracle_selected(doc, request));
        nonEmpty += !paths.empty();
    }
    CHECK(nonEmpty > 100);
}

TEST_CASE("filtered results validate clean against the type tree") {
    testsupport::Rng rng(99);
    for (int i = 0; i < 100; ++i) {
        auto doc = testsupport::random_document(rng);
        auto request = testsupport::random_request(rng, doc);
        Document filtered{doc.typeTree, get_instances(doc, request)};
        CHECK(validate_document(filtered).empty());
    }
}
