#include <cmath>
#include <limits>

#include <doctest.h>
#include <json.hpp>

#include "hdgkit/config_json.hpp"
#include "hdgkit/core.hpp"
#include "hdgkit/error.hpp"

using namespace hdg;

namespace {

std::size_t segment_length(const FeatureLayout& layout, Component c) {
  auto s = layout.find(c);
  REQUIRE(s.has_value());
  return s->length;
}

}  // namespace

TEST_CASE("default layout for 20 joints") {
  const auto layout = layout_from_config(HdgConfig::msr_compat(), 20);
  CHECK(layout.total_length() == 13250);
  CHECK(segment_length(layout, Component::hod) == 2500);
  CHECK(segment_length(layout, Component::hodg) == 10000);
  CHECK(segment_length(layout, Component::jmv) == 600);
  CHECK(segment_length(layout, Component::jpd) == 150);

  // Canonical order hod, hodg, jpd, jmv with contiguous offsets.
  const auto segs = layout.segments();
  REQUIRE(segs.size() == 4);
  CHECK(segs[0].component == Component::hod);
  CHECK(segs[1].component == Component::hodg);
  CHECK(segs[2].component == Component::jpd);
  CHECK(segs[3].component == Component::jmv);
  CHECK(segs[0].offset == 0);
  CHECK(segs[1].offset == 2500);
  CHECK(segs[2].offset == 12500);
  CHECK(segs[3].offset == 12650);
}

TEST_CASE("single-segment layouts") {
  HdgConfig c;
  c.components = {Component::jpd};
  const auto layout = layout_from_config(c, 20);
  REQUIRE(layout.segments().size() == 1);
  CHECK(layout.segments()[0] == Segment{Component::jpd, 0, 150});

  HdgConfig h;
  h.grid = {2, 2, 2};
  h.hod_bins = 3;
  h.components = {Component::hod};
  CHECK(layout_from_config(h, 20).total_length() == 24);
}

TEST_CASE("layout is pure") {
  HdgConfig c;
  c.grid = {3, 2, 4};
  CHECK(layout_from_config(c, 7) == layout_from_config(c, 7));
  CHECK_THROWS_AS(layout_from_config(c, 0), ValidationError);
}

TEST_CASE("column names") {
  const auto layout = layout_from_config(HdgConfig{}, 20);
  CHECK(layout.column_name(0) == "hod:0");
  CHECK(layout.column_name(2517) == "hodg:17");
  CHECK(layout.column_name(12500) == "jpd:0");
  CHECK(layout.column_name(13249) == "jmv:599");
  CHECK_THROWS_AS(layout.column_name(13250), ValidationError);
}

TEST_CASE("component sets") {
  CHECK(ComponentSet::parse("hod,jpd") == ComponentSet{Component::hod, Component::jpd});
  CHECK(ComponentSet::parse("jmv, hodg") == ComponentSet{Component::hodg, Component::jmv});
  CHECK(ComponentSet::parse("all") == ComponentSet::all());
  CHECK_THROWS_AS(ComponentSet::parse("hod,foo"), ValidationError);
  CHECK_THROWS_AS(ComponentSet::parse(""), ValidationError);
  CHECK(ComponentSet{Component::jmv, Component::hod}.to_string() == "hod+jmv");
  CHECK(ComponentSet{Component::jpd}.needs_skeleton());
  CHECK_FALSE(ComponentSet{Component::jpd}.needs_depth());
}

TEST_CASE("config validation") {
  HdgConfig c;
  CHECK_NOTHROW(c.validate());
  c.hod_bins = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = HdgConfig{};
  c.grid.t = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = HdgConfig{};
  c.components = ComponentSet{};
  CHECK_THROWS_AS(c.validate(), ValidationError);

  HyperParams hp;
  CHECK(hp.pruning_trees == 130);
  CHECK(hp.classifier_trees == 128);
  CHECK(hp.alpha == 3.5);
  hp.pruning_trees = 0;
  CHECK_THROWS_AS(hp.validate(), ValidationError);
  hp = HyperParams{};
  hp.alpha = -0.1;
  CHECK_THROWS_AS(hp.validate(), ValidationError);
}

TEST_CASE("feature vector invariants") {
  FeatureLayout layout({{Component::jpd, 0, 3}});
  CHECK_NOTHROW(FeatureVector({1, 2, 3}, layout));
  CHECK_THROWS_AS(FeatureVector({1, 2}, layout), ValidationError);
  CHECK_THROWS_AS(FeatureVector({1, std::numeric_limits<double>::quiet_NaN(), 3}, layout), ValidationError);
  CHECK_THROWS_AS(FeatureVector({1, INFINITY, 3}, layout), ValidationError);
  CHECK_THROWS_AS(FeatureLayout({{Component::hod, 0, 2}, {Component::jpd, 3, 1}}), ValidationError);
  CHECK_THROWS_AS(FeatureLayout(std::vector<Segment>{}), ValidationError);
}

TEST_CASE("sequence construction checks") {
  CHECK_THROWS_AS(DepthSequence(2, 2, 2, std::vector<std::uint16_t>(7)), ValidationError);
  CHECK_THROWS_AS(DepthSequence(1, 2, 2, std::vector<std::uint16_t>(4), std::vector<std::uint8_t>(3)),
                  ValidationError);
  DepthSequence d(1, 1, 2, {0, 5}, {1, 1});
  CHECK_FALSE(d.is_foreground(0, 0, 0));
  CHECK(d.is_foreground(0, 0, 1));

  CHECK_THROWS_AS(SkeletonSequence(1, 2, std::vector<Joint>(2), 2), ValidationError);
  CHECK_THROWS_AS(SkeletonSequence(2, 2, std::vector<Joint>(3), 0), ValidationError);

  ActionSample s;
  s.depth = DepthSequence(2, 1, 1, {1, 1});
  s.skeleton = SkeletonSequence(3, 1, std::vector<Joint>(3));
  CHECK_THROWS_AS(check_sample_consistency(s), ValidationError);
}

TEST_CASE("config json round trip") {
  HdgConfig c;
  c.grid = {4, 3, 2};
  c.hodg_bins = {3, 4, 5};
  c.components = {Component::hod, Component::jmv};
  const nlohmann::json j = c;
  CHECK(j.get<HdgConfig>() == c);

  // Missing keys keep their defaults.
  const auto partial = nlohmann::json::parse(R"({"hod_bins": 9})").get<HdgConfig>();
  CHECK(partial.hod_bins == 9);
  CHECK(partial.grid == GridDims{10, 10, 5});

  HyperParams hp{64, 32, 1.25, 99, false};
  CHECK(nlohmann::json(hp).get<HyperParams>() == hp);

  CHECK(config_hash(c) == config_hash(c));
  CHECK(config_hash(c) != config_hash(HdgConfig{}));
}

TEST_CASE("seed derivation separates streams") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(5, 3, 4) == derive_seed(5, 3, 4));
}
