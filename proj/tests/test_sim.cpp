#include "crowdtrack/error.hpp"
#include "crowdtrack/sim.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

namespace crowdtrack {
namespace {

ScenarioConfig one_actor() {
    ScenarioConfig s;
    s.name = "unit";
    s.frames = 30;
    s.calibration = default_calibration();
    s.red_region.mu = s.homography().ground_to_pixel(Vec2(0.3, 2.5));
    s.red_region.sigma = Vec2(900.0, 1600.0).asDiagonal();
    ActorConfig a;
    a.id = 4;
    a.visits.push_back({0, -1, 1.0, {Vec2(2.0, 2.0), Vec2(3.0, 2.0)}});
    s.actors.push_back(a);
    return s;
}

TEST(ActorPosition, ConstantSpeedThenWait) {
    const auto s = one_actor();
    const auto& a = s.actors[0];
    EXPECT_TRUE(actor_position(a, 0, 25.0)->isApprox(Vec2(2.0, 2.0)));
    EXPECT_TRUE(actor_position(a, 10, 25.0)->isApprox(Vec2(2.4, 2.0)));
    EXPECT_TRUE(actor_position(a, 25, 25.0)->isApprox(Vec2(3.0, 2.0)));
    EXPECT_TRUE(actor_position(a, 29, 25.0)->isApprox(Vec2(3.0, 2.0)));
}

TEST(ActorPosition, AbsentOutsideVisits) {
    ActorConfig a;
    a.visits.push_back({5, 9, 1.0, {Vec2(1, 1)}});
    EXPECT_FALSE(actor_position(a, 4, 25.0).has_value());
    EXPECT_TRUE(actor_position(a, 5, 25.0).has_value());
    EXPECT_TRUE(actor_position(a, 9, 25.0).has_value());
    EXPECT_FALSE(actor_position(a, 10, 25.0).has_value());
}

TEST(Generate, OneRowPerActorAndFrame) {
    const auto s = one_actor();
    const auto r = generate(s);
    ASSERT_EQ(r.frames.size(), 30u);
    ASSERT_EQ(r.ground_truth.size(), 30u);
    for (long k = 0; k < 30; ++k) {
        EXPECT_EQ(r.frames[static_cast<std::size_t>(k)].frame_index, k);
        EXPECT_EQ(r.ground_truth[static_cast<std::size_t>(k)].id, 4);
        EXPECT_FALSE(r.frames[static_cast<std::size_t>(k)].measurements.empty());
    }
}

TEST(Generate, BlobIsCentredOnProjectedPosition) {
    const auto s = one_actor();
    const auto r = generate(s);
    const auto& f = r.frames[10];
    Vec2 c = Vec2::Zero();
    std::set<std::pair<int, int>> seen;
    for (const auto& m : f.measurements) {
        c += Vec2(m.x, m.y);
        EXPECT_TRUE(seen.insert({m.x, m.y}).second) << "duplicate pixel";
        EXPECT_GE(m.x, 0);
        EXPECT_LT(m.x, s.width);
    }
    c /= static_cast<double>(f.measurements.size());
    const Vec2 want = s.homography().ground_to_pixel(Vec2(2.4, 2.0));
    EXPECT_LT((c - want).norm(), 1.0);
    EXPECT_EQ(f.measurements.size(), isolated_pixel_count(s, 0, 10));
}

TEST(Generate, SeedControlsColours) {
    auto s = one_actor();
    const auto a = generate(s);
    const auto b = generate(s);
    s.seed = 8;
    const auto c = generate(s);
    EXPECT_EQ(a.frames[3].measurements, b.frames[3].measurements);
    EXPECT_NE(a.frames[3].measurements, c.frames[3].measurements);
}

TEST(Generate, NearerActorHidesFartherOne) {
    auto s = one_actor();
    ActorConfig b;
    b.id = 5;
    b.color = {40, 40, 200};
    b.visits.push_back({0, -1, 1.0, {Vec2(2.0, 2.05)}});  // slightly farther from the camera
    s.actors[0].visits[0].waypoints = {Vec2(2.0, 2.0)};
    s.actors.push_back(b);
    const auto r = generate(s);
    const auto& f = r.frames[0];
    EXPECT_LT(f.measurements.size(), isolated_pixel_count(s, 0, 0) + isolated_pixel_count(s, 1, 0));
    EXPECT_GE(f.measurements.size(), isolated_pixel_count(s, 0, 0));
}

TEST(Validate, RejectsBadScenarios) {
    auto s = one_actor();
    s.actors[0].visits[0].speed = 3.0;
    EXPECT_THROW(s.validate(), Error);
    s = one_actor();
    s.actors[0].visits[0].waypoints.push_back(Vec2(9.0, 2.0));
    EXPECT_THROW(s.validate(), Error);
    s = one_actor();
    s.actors.push_back(s.actors[0]);
    EXPECT_THROW(s.validate(), Error);
    s = one_actor();
    s.actors[0].visits[0].entry_frame = 5;  // late entry away from the door
    EXPECT_THROW(s.validate(), Error);
}

TEST(Presets, AllValidAndNamed) {
    std::set<std::string> names;
    for (const auto& p : preset_scenarios()) {
        EXPECT_NO_THROW(p.validate()) << p.name;
        names.insert(p.name);
    }
    for (const char* n : {"single_walk", "two_cross", "three_cross_reentry", "five_corridor"}) {
        EXPECT_TRUE(names.count(n)) << n;
    }
    try {
        (void)preset_scenario("nope");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConfigInvalid);
        EXPECT_NE(std::string(e.what()).find("two_cross"), std::string::npos);
    }
}

TEST(ScenarioFile, FormatParseRoundTrip) {
    const auto original = preset_scenario("three_cross_reentry");
    std::istringstream in(format_scenario(original));
    const auto parsed = parse_scenario(in);
    EXPECT_EQ(format_scenario(parsed), format_scenario(original));
    const auto a = generate(original);
    const auto b = generate(parsed);
    EXPECT_EQ(a.frames[150].measurements, b.frames[150].measurements);
}

TEST(ScenarioFile, UnknownKeyRejected) {
    std::istringstream in("[scenario]\nframes = 10\nbogus = 1\n");
    try {
        (void)parse_scenario(in);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConfigInvalid);
    }
}

}  // namespace
}  // namespace crowdtrack
