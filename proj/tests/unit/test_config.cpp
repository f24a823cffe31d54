#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "predrisk/config.hpp"

using namespace predrisk;

TEST_CASE("channel selection strings map to ablation flags") {
  AblationConfig abl;
  set_channels(abl, "1");
  CHECK(!abl.use_ch2);
  CHECK(!abl.use_ch3);
  CHECK(channels_string(abl) == "1");
  set_channels(abl, "12");
  CHECK(abl.use_ch2);
  CHECK(!abl.use_ch3);
  CHECK(channels_string(abl) == "12");
  set_channels(abl, "13");
  CHECK(!abl.use_ch2);
  CHECK(abl.use_ch3);
  CHECK(channels_string(abl) == "13");
  set_channels(abl, "123");
  CHECK(abl.use_ch2);
  CHECK(abl.use_ch3);
  CHECK(channels_string(abl) == "123");
  // order does not matter, repeats are harmless
  set_channels(abl, "321");
  CHECK(channels_string(abl) == "123");

  CHECK_THROWS_AS(set_channels(abl, "23"), ConfigError);  // channel 1 mandatory
  CHECK_THROWS_AS(set_channels(abl, ""), ConfigError);
  CHECK_THROWS_AS(set_channels(abl, "14"), ConfigError);
  CHECK_THROWS_AS(set_channels(abl, "1 2"), ConfigError);
}

TEST_CASE("feature kinds round-trip through their names") {
  CHECK(feature_kind_from("pos") == FeatureKind::kPos);
  CHECK(feature_kind_from("pos_vel") == FeatureKind::kPosVel);
  CHECK(feature_kind_from("pos_vel_acc") == FeatureKind::kPosVelAcc);
  CHECK(to_string(FeatureKind::kPos) == "pos");
  CHECK(to_string(FeatureKind::kPosVel) == "pos_vel");
  CHECK(to_string(FeatureKind::kPosVelAcc) == "pos_vel_acc");
  CHECK_THROWS_AS(feature_kind_from("velocity"), ConfigError);
  CHECK_THROWS_AS(feature_kind_from(""), ConfigError);
}

TEST_CASE("run config validation flags out-of-range fields") {
  RunConfig cfg;
  CHECK_NOTHROW(cfg.validate());  // defaults are a legal run

  SUBCASE("data") {
    cfg.data.format = "csv";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.data.format = "highd";
    CHECK_NOTHROW(cfg.validate());
    cfg.data.stride_s = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("grid") {
    cfg.data.grid.longitudinal_window = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.data.grid.longitudinal_window = 90.0;
    cfg.data.grid.alongside_band = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("model") {
    cfg.model.embed_dim = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.model.embed_dim = 32;
    cfg.model.leaky_slope = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("train") {
    cfg.train.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("plan") {
    cfg.plan.ax_step = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.plan.ax_step = 0.5;
    cfg.plan.ax_min = 1.0;
    cfg.plan.ax_max = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("risk") {
    cfg.risk.w_ttc = 0.7;  // weights no longer sum to 1
    CHECK_THROWS_AS(cfg.validate(), InvalidParams);
    cfg.risk.w_ttc = 0.6;
    cfg.risk.check_step = 0.3;  // does not divide the 5 s horizon
    CHECK_THROWS_AS(cfg.validate(), InvalidParams);
  }
}

TEST_CASE("fingerprints are stable and sensitive to every section") {
  const RunConfig base;
  CHECK(base.fingerprint() == RunConfig{}.fingerprint());
  CHECK(!base.fingerprint().empty());

  std::set<std::string> prints;
  prints.insert(base.fingerprint());

  auto expect_new = [&](RunConfig cfg) {
    const std::string fp = cfg.fingerprint();
    CHECK(prints.count(fp) == 0);
    prints.insert(fp);
  };

  RunConfig c = base;
  c.data.format = "highd";
  expect_new(c);
  c = base;
  c.data.cutoff_hz = 2.0;
  expect_new(c);
  c = base;
  c.model.encoder_hidden += 1;
  expect_new(c);
  c = base;
  c.ablation.use_ch2 = false;
  expect_new(c);
  c = base;
  c.ablation.features = FeatureKind::kPos;
  expect_new(c);
  c = base;
  c.ablation.relative = false;
  expect_new(c);
  c = base;
  c.train.seed += 1;
  expect_new(c);
  c = base;
  c.plan.ax_step = 0.25;
  expect_new(c);
  c = base;
  c.risk.w_ttc = 0.5;
  c.risk.w_mdm = 0.5;
  expect_new(c);
  c = base;
  c.output_dir = "elsewhere";
  expect_new(c);
  c = base;
  c.split_seed = 17;
  expect_new(c);
}

TEST_CASE("every channel and feature combination fingerprints distinctly") {
  std::set<std::string> prints;
  for (const char* channels : {"1", "12", "13", "123"}) {
    for (const char* features : {"pos", "pos_vel", "pos_vel_acc"}) {
      for (bool relative : {false, true}) {
        RunConfig cfg;
        set_channels(cfg.ablation, channels);
        cfg.ablation.features = feature_kind_from(features);
        cfg.ablation.relative = relative;
        cfg.validate();
        prints.insert(cfg.fingerprint());
      }
    }
  }
  CHECK(prints.size() == 4 * 3 * 2);
}
