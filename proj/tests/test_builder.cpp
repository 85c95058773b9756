#include <doctest.h>

#include <functional>
#include <sstream>

#include "heprep/builder.hpp"
#include "heprep/error.hpp"
#include "heprep/event.hpp"
#include "heprep/json_codec.hpp"
#include "heprep/xml.hpp"
#include "support/generators.hpp"

using namespace heprep;
using testsupport::Call;

namespace {

class ScriptFiller final : public Filler {
  public:
    ScriptFiller(std::string name, std::vector<std::string> types, std::function<void(Builder&)> typesFn,
                 std::function<void(Builder&)> instancesFn)
        : name_(std::move(name)), types_(std::move(types)), typesFn_(std::move(typesFn)),
          instancesFn_(std::move(instancesFn)) {}

    std::string name() const override { return name_; }
    std::vector<std::string> type_names() const override { return types_; }
    void fill_types(Builder& b) const override { typesFn_(b); }
    void fill_instances(Builder& b, const Event&, const InstanceRequest&) const override {
        ++calls;
        instancesFn_(b);
    }

    mutable int calls = 0;

  private:
    std::string name_;
    std::vector<std::string> types_;
    std::function<void(Builder&)> typesFn_;
    std::function<void(Builder&)> instancesFn_;
};

std::shared_ptr<ScriptFiller> simple_filler(const std::string& type, int instances = 1) {
    return std::make_shared<ScriptFiller>(
        type + "Filler", std::vector<std::string>{type},
        [type](Builder& b) {
            b.open_type(type);
            b.close_type();
        },
        [type, instances](Builder& b) {
            for (int i = 0; i < instances; ++i) {
                b.open_instance(type);
                b.point(0, 0, i);
                b.close_instance();
            }
        });
}

template <typename Fn>
void expect_builder_state(Fn&& fn) {
    try {
        fn();
        FAIL("no error raised");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BuilderState);
    }
}

void open_trees(Builder& b) {
    b.open_type_tree("T", "1");
    b.open_type("Track");
    b.att_def({"Momentum", "", AttributeCategory::Physics, AttValueKind::Real, "MeV"});
    b.open_type("TrackHit");
    b.close_type();
    b.close_type();
    b.close_type_tree();
    b.open_instance_tree("Event", "1", "T", "1");
}

}  // namespace

TEST_CASE("minimal sequence builds a document") {
    MemoryBuilder b;
    b.open_type_tree("T", "1");
    b.open_type("Track");
    b.close_type();
    b.close_type_tree();
    b.open_instance_tree("Event", "1", "T", "1");
    b.open_instance("Track");
    b.point(0, 0, 0);
    b.point(1, 1, 1);
    b.close_instance();
    b.close_instance_tree();
    b.finish();
    const auto& doc = b.document();
    CHECK(doc.typeTree.rootTypes.size() == 1);
    REQUIRE(doc.instanceTree.rootInstances.size() == 1);
    CHECK(doc.instanceTree.rootInstances[0].points.size() == 2);
    CHECK(validate_document(doc).empty());
}

TEST_CASE("grammar violations raise BUILDER_STATE and poison") {
    {
        MemoryBuilder b;
        b.open_type_tree("T", "1");
        b.close_type_tree();
        expect_builder_state([&] { b.open_instance("Track"); });
        CHECK(b.poisoned());
        expect_builder_state([&] { b.open_instance_tree("Event", "1", "T", "1"); });
    }
    {
        MemoryBuilder b;
        open_trees(b);
        expect_builder_state([&] { b.finish(); });
    }
    {
        MemoryBuilder b;
        expect_builder_state([&] { b.document(); });
    }

    using Step = std::function<void(Builder&)>;
    const std::vector<std::pair<const char*, Step>> cases = {
        {"unknown instance type", [](Builder& b) { b.open_instance("Ghost"); }},
        {"child not a subtype",
         [](Builder& b) {
             b.open_instance("Track");
             b.open_instance("Track");
         }},
        {"root hit under nothing is fine but hit under hit is not",
         [](Builder& b) {
             b.open_instance("Track/TrackHit");
             b.open_instance("Track/TrackHit");
         }},
        {"kind mismatch", [](Builder& b) {
             b.open_instance("Track");
             b.instance_att_value({"Momentum", std::string("fast")});
         }},
        {"default draw kind", [](Builder& b) {
             b.open_instance("Track");
             b.instance_att_value({"Color", std::int64_t(1)});
         }},
        {"non-finite point", [](Builder& b) {
             b.open_instance("Track");
             b.point(0, std::numeric_limits<double>::quiet_NaN(), 0);
         }},
        {"non-finite value", [](Builder& b) {
             b.open_instance("Track");
             b.instance_att_value({"Weight", std::numeric_limits<double>::infinity()});
         }},
        {"colour out of range", [](Builder& b) {
             b.open_instance("Track");
             b.instance_att_value({"Color", Color{1.5, 0, 0}});
         }},
        {"point attribute without point", [](Builder& b) {
             b.open_instance("Track");
             b.instance_att_value({"Weight", 1.0});
             b.point_att_value({"Weight", 2.0});
         }},
        {"point outside instance", [](Builder& b) { b.point(0, 0, 0); }},
        {"close with nothing open", [](Builder& b) { b.close_instance(); }},
        {"close tree with open instance", [](Builder& b) {
             b.open_instance("Track");
             b.close_instance_tree();
         }},
        {"empty attribute name", [](Builder& b) {
             b.open_instance("Track");
             b.instance_att_value({"", 1.0});
         }},
    };
    for (const auto& [what, step] : cases) {
        CAPTURE(what);
        MemoryBuilder b;
        open_trees(b);
        expect_builder_state([&] { step(b); });
        CHECK(b.poisoned());
    }

    const std::vector<std::pair<const char*, Step>> typeCases = {
        {"slash in name", [](Builder& b) { b.open_type("a/b"); }},
        {"empty name", [](Builder& b) { b.open_type(""); }},
        {"duplicate sibling", [](Builder& b) {
             b.open_type("Track");
             b.close_type();
             b.open_type("TRACK");
         }},
        {"duplicate attdef", [](Builder& b) {
             b.open_type("Track");
             b.att_def({"E", "", AttributeCategory::Physics, AttValueKind::Real, ""});
             b.att_def({"e", "", AttributeCategory::Physics, AttValueKind::Real, ""});
         }},
        {"type default mismatching a later def", [](Builder& b) {
             b.open_type("Track");
             b.type_att_value({"E", std::string("x")});
             b.att_def({"E", "", AttributeCategory::Physics, AttValueKind::Real, ""});
             b.close_type();
             b.close_type_tree();
         }},
        {"attdef outside type", [](Builder& b) { b.att_def({"E", "", AttributeCategory::Physics, AttValueKind::Real, ""}); }},
        {"instance tree identity", [](Builder& b) {
             b.close_type_tree();
             b.open_instance_tree("Event", "1", "T", "2");
         }},
    };
    for (const auto& [what, step] : typeCases) {
        CAPTURE(what);
        MemoryBuilder b;
        b.open_type_tree("T", "1");
        expect_builder_state([&] { step(b); });
    }
}

TEST_CASE("random legal sequences are accepted and validate clean") {
    testsupport::Rng rng(5);
    for (int i = 0; i < 300; ++i) {
        auto seq = testsupport::random_sequence(rng);
        MemoryBuilder b;
        testsupport::apply(seq, b);
        REQUIRE(b.finished());
        CHECK(validate_document(b.document()).empty());

        MemoryBuilder replayed;
        replay_document(b.document(), replayed);
        CHECK(replayed.document() == b.document());
    }
}

TEST_CASE("mutated sequences either fail or still validate, identically in every back end") {
    testsupport::Rng rng(17);
    int rejected = 0;
    int accepted = 0;
    for (int i = 0; i < 600; ++i) {
        auto seq = testsupport::random_sequence(rng);
        auto at = static_cast<std::size_t>(testsupport::pick(rng, 0, static_cast<int>(seq.size()) - 1));
        switch (testsupport::pick(rng, 0, 4)) {
            case 0: seq.erase(seq.begin() + static_cast<std::ptrdiff_t>(at)); break;
            case 1: seq.insert(seq.begin() + static_cast<std::ptrdiff_t>(at), seq[at]); break;
            case 2:
                if (at + 1 < seq.size()) std::swap(seq[at], seq[at + 1]);
                break;
            case 3:
                seq[at].value.value = testsupport::random_payload(rng, testsupport::random_kind(rng));
                break;
            default:
                if (!seq[at].text.empty()) seq[at].text[0] = testsupport::chance(rng, 0.5) ? "Ghost" : "Hit";
                break;
        }

        auto run = [&](Builder& b) -> bool {
            try {
                testsupport::apply(seq, b);
                return true;
            } catch (const Error& e) {
                CHECK(e.code() == ErrorCode::BuilderState);
                return false;
            }
        };
        MemoryBuilder memory;
        std::ostringstream xml;
        XmlBuilder streaming(xml);
        JsonBuilder json;
        bool ok = run(memory);
        CHECK(run(streaming) == ok);
        CHECK(run(json) == ok);
        if (ok) {
            ++accepted;
            CHECK(validate_document(memory.document()).empty());
            CHECK(parse_document(xml.str()) == memory.document());
        } else {
            ++rejected;
        }
    }
    CHECK(rejected > 100);
    CHECK(accepted > 50);
}

TEST_CASE("filler registry ownership") {
    FillerRegistry r;
    r.register_filler(simple_filler("Track"));
    r.register_filler(simple_filler("CalCrystal"));
    CHECK(r.size() == 2);
    CHECK(r.fillers()[0]->name() == "TrackFiller");
    CHECK(r.fillers()[1]->name() == "CalCrystalFiller");

    try {
        r.register_filler(simple_filler("track"));
        FAIL("duplicate owner accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DuplicateTypeOwner);
    }
    try {
        r.register_filler(std::make_shared<ScriptFiller>("Nothing", std::vector<std::string>{}, [](Builder&) {},
                                                         [](Builder&) {}));
        FAIL("empty ownership accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyOwnership);
    }
    CHECK(r.size() == 2);

    InstanceRequest track;
    track.typeNames.insert("Track");
    auto chosen = r.fillers_for_request(track);
    REQUIRE(chosen.size() == 1);
    CHECK(chosen[0]->name() == "TrackFiller");
    CHECK(r.fillers_for_request({}).size() == 2);
    InstanceRequest foo;
    foo.typeNames.insert("Foo");
    CHECK(r.fillers_for_request(foo).empty());
    InstanceRequest sub;
    sub.typeNames.insert("Track/TrackHit");
    CHECK(r.fillers_for_request(sub).size() == 1);
}

TEST_CASE("build_event runs only the requested fillers but emits every type") {
    auto track = simple_filler("Track", 3);
    auto cal = simple_filler("CalCrystal", 2);
    FillerRegistry r;
    r.register_filler(track);
    r.register_filler(cal);
    Event event;

    InstanceRequest only;
    only.typeNames.insert("Track");
    MemoryBuilder b;
    build_event(r, event, only, b);
    const auto& doc = b.document();
    CHECK(doc.typeTree.rootTypes.size() == 2);
    CHECK(doc.instanceTree.rootInstances.size() == 3);
    CHECK(track->calls == 1);
    CHECK(cal->calls == 0);
    CHECK(doc.typeTree.name == kTypeTreeName);
    CHECK(doc.instanceTree.typeTreeName == kTypeTreeName);

    MemoryBuilder all;
    build_event(r, event, {}, all);
    CHECK(all.document().instanceTree.rootInstances.size() == 5);
    CHECK(cal->calls == 1);
}

TEST_CASE("filler errors name the filler") {
    FillerRegistry r;
    r.register_filler(std::make_shared<ScriptFiller>(
        "Broken", std::vector<std::string>{"Track"},
        [](Builder& b) {
            b.open_type("Track");
            b.close_type();
        },
        [](Builder& b) { b.point(0, 0, 0); }));
    MemoryBuilder b;
    try {
        build_event(r, Event{}, {}, b);
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BuilderState);
        CHECK(std::string(e.what()).find("Broken") != std::string::npos);
    }

    FillerRegistry greedy;
    greedy.register_filler(simple_filler("Track"));
    greedy.register_filler(std::make_shared<ScriptFiller>(
        "Greedy", std::vector<std::string>{"Cal"},
        [](Builder& b) {
            b.open_type("Cal");
            b.close_type();
        },
        [](Builder& b) {
            b.open_instance("Track");
            b.close_instance();
        }));
    MemoryBuilder g;
    CHECK_THROWS_AS(build_event(greedy, Event{}, {}, g), Error);
}
