#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "predrisk/data.hpp"

using namespace predrisk;

namespace {

constexpr double kFt = 0.3048;

std::string fixture(const std::string& name) { return std::string(FIXTURE_DIR) + "/" + name; }

// Writes an inline CSV under the working directory and returns its path.
std::string write_temp(const std::string& name, const std::string& text) {
  std::ofstream out(name);
  REQUIRE(out.good());
  out << text;
  return name;
}

const Track& track_by_id(const RawRecording& rec, const std::string& id, size_t which = 0) {
  size_t seen = 0;
  for (const Track& tr : rec.tracks) {
    if (tr.vehicle_id != id) continue;
    if (seen == which) return tr;
    ++seen;
  }
  FAIL(("track not found: " + id).c_str());
  return rec.tracks.front();
}

size_t count_tracks(const RawRecording& rec, const std::string& id) {
  size_t n = 0;
  for (const Track& tr : rec.tracks)
    if (tr.vehicle_id == id) ++n;
  return n;
}

// Resamples every track of a recording to the model step.
RawRecording resample_recording(const RawRecording& rec) {
  RawRecording out = rec;
  out.tracks.clear();
  for (const Track& tr : rec.tracks) out.tracks.push_back(resample(tr, kDt));
  return out;
}

Track make_track(const std::string& id, double t0, double step, size_t n,
                 double x0, double y, double vx) {
  Track tr;
  tr.vehicle_id = id;
  tr.length = 5.0;
  tr.width = 2.0;
  for (size_t i = 0; i < n; ++i) {
    MotionState s;
    s.t = t0 + static_cast<double>(i) * step;
    s.x = x0 + vx * (s.t - t0);
    s.y = y;
    s.vx = vx;
    tr.states.push_back(s);
  }
  return tr;
}

const std::string kNgsimHeader =
    "Vehicle_ID,Frame_ID,Local_X,Local_Y,v_Length,v_Width,v_Vel,v_Acc,Lane_ID\n";

}  // namespace

TEST_CASE("ngsim parser converts feet, splits gaps, derives lateral rates") {
  const RawRecording rec = parse_ngsim(fixture("ngsim_mini.csv"));
  CHECK(rec.source == Source::kNgsim);
  CHECK(rec.native_rate == doctest::Approx(10.0));

  // 5 vehicles; the frame gap in 105 splits it into two tracks
  CHECK(rec.tracks.size() == 6);
  CHECK(count_tracks(rec, "101") == 1);
  CHECK(count_tracks(rec, "105") == 2);

  const Track& v101 = track_by_id(rec, "101");
  REQUIRE(v101.states.size() == 400);
  // first row: frame 1, Local_X 6.5863 ft, Local_Y 7.8762 ft, v_Vel 78.7835, v_Acc 0.4330
  const MotionState& s0 = v101.states.front();
  CHECK(s0.t == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(s0.x == doctest::Approx(7.8762 * kFt).epsilon(1e-12));
  CHECK(s0.y == doctest::Approx(6.5863 * kFt).epsilon(1e-12));
  CHECK(s0.vx == doctest::Approx(78.7835 * kFt).epsilon(1e-12));
  CHECK(s0.ax == doctest::Approx(0.4330 * kFt).epsilon(1e-12));
  // dimensions from the vehicle's first row, feet converted
  CHECK(v101.length == doctest::Approx(16.404 * kFt).epsilon(1e-12));
  CHECK(v101.width == doctest::Approx(6.562 * kFt).epsilon(1e-12));

  // lateral rates are finite differences of the parsed y series
  const double dt = 0.1;
  const size_t n = v101.states.size();
  auto y_at = [&](size_t i) { return v101.states[i].y; };
  CHECK(v101.states[0].vy == doctest::Approx((y_at(1) - y_at(0)) / dt).epsilon(1e-12));
  CHECK(v101.states[7].vy ==
        doctest::Approx((y_at(8) - y_at(6)) / (2.0 * dt)).epsilon(1e-12));
  CHECK(v101.states[n - 1].vy ==
        doctest::Approx((y_at(n - 1) - y_at(n - 2)) / dt).epsilon(1e-12));
  // ay differentiates the derived vy series
  const double vy6 = (y_at(7) - y_at(5)) / (2.0 * dt);
  const double vy8 = (y_at(9) - y_at(7)) / (2.0 * dt);
  CHECK(v101.states[7].ay == doctest::Approx((vy8 - vy6) / (2.0 * dt)).epsilon(1e-12));

  // the generator put the wobble around true centers 2, 6, 10 m
  REQUIRE(rec.lanes.lane_centers.size() == 3);
  CHECK(std::is_sorted(rec.lanes.lane_centers.begin(), rec.lanes.lane_centers.end()));
  CHECK(rec.lanes.lane_centers[0] == doctest::Approx(2.0).epsilon(0.1));
  CHECK(rec.lanes.lane_centers[1] == doctest::Approx(6.0).epsilon(0.05));
  CHECK(rec.lanes.lane_centers[2] == doctest::Approx(10.0).epsilon(0.05));
  CHECK(rec.lanes.lane_width == doctest::Approx(4.0).epsilon(0.05));

  // gap bounds: frames 1..179 then 195..400 at 10 Hz
  const Track& seg1 = track_by_id(rec, "105", 0);
  const Track& seg2 = track_by_id(rec, "105", 1);
  REQUIRE(seg1.states.size() == 179);
  REQUIRE(seg2.states.size() == 206);
  CHECK(seg1.states.back().t == doctest::Approx(17.9).epsilon(1e-12));
  CHECK(seg2.states.front().t == doctest::Approx(19.5).epsilon(1e-12));
}

TEST_CASE("ngsim parser reports malformed input precisely") {
  const std::string good_row = "7,1,6.5,7.8,16.4,6.5,78.7,0.4,1\n";

  SUBCASE("missing column") {
    std::string path = write_temp(
        "bad_missing_col.csv",
        "Vehicle_ID,Frame_ID,Local_Y,v_Vel,v_Acc,Lane_ID\n7,1,7.8,78.7,0.4,1\n");
    try {
      parse_ngsim(path);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()) == path + ": missing column 'local_x'");
    }
  }
  SUBCASE("invalid number") {
    std::string path = write_temp("bad_number.csv",
                                  kNgsimHeader + "7,1,abc,7.8,16.4,6.5,78.7,0.4,1\n");
    try {
      parse_ngsim(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()) == path + " line 2: invalid number 'abc'");
    }
  }
  SUBCASE("non-integer frame") {
    std::string path = write_temp("bad_frame.csv",
                                  kNgsimHeader + "7,1.5,6.5,7.8,16.4,6.5,78.7,0.4,1\n");
    try {
      parse_ngsim(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()) == path + " line 2: expected integer, got '1.5'");
    }
  }
  SUBCASE("too few fields") {
    std::string path = write_temp("bad_short.csv", kNgsimHeader + good_row + "7,2,6.5\n");
    try {
      parse_ngsim(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()) == path + " line 3: too few fields");
    }
  }
  SUBCASE("empty vehicle id") {
    std::string path = write_temp("bad_id.csv", kNgsimHeader + ",1,6.5,7.8,16.4,6.5,78.7,0.4,1\n");
    try {
      parse_ngsim(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()) == path + " line 2: empty vehicle id");
    }
  }
  SUBCASE("empty file") {
    std::string path = write_temp("bad_empty.csv", "");
    try {
      parse_ngsim(path);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()) == path + ": empty file");
    }
  }
  SUBCASE("header only") {
    std::string path = write_temp("bad_norows.csv", kNgsimHeader);
    try {
      parse_ngsim(path);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()) == path + ": no data rows");
    }
  }
  SUBCASE("magnitude out of range") {
    std::string path = write_temp("bad_huge.csv",
                                  kNgsimHeader + "7,1,6.5,9e7,16.4,6.5,78.7,0.4,1\n");
    try {
      parse_ngsim(path);
      FAIL("expected InvalidValue");
    } catch (const InvalidValue& e) {
      CHECK(std::string(e.what()) == path + " line 2: value out of range");
    }
  }
  SUBCASE("missing file") {
    try {
      parse_ngsim("no_such_dir/no_such_file.csv");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()) == "cannot open no_such_dir/no_such_file.csv");
    }
  }
  SUBCASE("dimension columns are optional") {
    std::string path = write_temp(
        "ok_nodims.csv",
        "Vehicle_ID,Frame_ID,Local_X,Local_Y,v_Vel,v_Acc,Lane_ID\n7,1,6.5,7.8,78.7,0.4,1\n");
    const RawRecording rec = parse_ngsim(path);
    REQUIRE(rec.tracks.size() == 1);
    CHECK(rec.tracks[0].length == doctest::Approx(5.21));
    CHECK(rec.tracks[0].width == doctest::Approx(2.04));
  }
  SUBCASE("duplicate frames are dropped") {
    std::string path = write_temp("ok_dupe.csv", kNgsimHeader + good_row + good_row +
                                                     "7,2,6.5,15.6,16.4,6.5,78.7,0.4,1\n");
    const RawRecording rec = parse_ngsim(path);
    REQUIRE(rec.tracks.size() == 1);
    CHECK(rec.tracks[0].states.size() == 2);
  }
}

TEST_CASE("highd parser centers boxes, reads markings, normalizes direction") {
  const RawRecording rec =
      parse_highd(fixture("highd_mini_tracks.csv"), fixture("highd_mini_meta.csv"));
  CHECK(rec.source == Source::kHighd);
  CHECK(rec.native_rate == doctest::Approx(25.0));
  CHECK(rec.tracks.size() == 4);

  // markings 0;4;8 and 12;16;20 -> centers 2, 6, 14, 18, width 4
  REQUIRE(rec.lanes.lane_centers.size() == 4);
  CHECK(rec.lanes.lane_centers[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rec.lanes.lane_centers[1] == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(rec.lanes.lane_centers[2] == doctest::Approx(14.0).epsilon(1e-12));
  CHECK(rec.lanes.lane_centers[3] == doctest::Approx(18.0).epsilon(1e-12));
  CHECK(rec.lanes.lane_width == doctest::Approx(4.0).epsilon(1e-12));

  // first row of vehicle 1: corner (7.6, 13.09673), box 4.8x1.9 -> center
  const Track& v1 = track_by_id(rec, "1");
  REQUIRE(v1.states.size() == 1000);
  CHECK(v1.states[0].t == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v1.states[0].x == doctest::Approx(7.6 + 2.4).epsilon(1e-12));
  CHECK(v1.states[0].y == doctest::Approx(13.09673 + 0.95).epsilon(1e-12));
  CHECK(v1.length == doctest::Approx(4.8).epsilon(1e-12));
  CHECK(v1.width == doctest::Approx(1.9).epsilon(1e-12));
  // lateral rates come from the file, not differencing (file carries vy = 0)
  CHECK(v1.states[3].vy == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(v1.states[3].ay == doctest::Approx(0.0).epsilon(1e-15));

  // vehicle 4 drives in -x in the file; after normalization x increases
  const Track& v4 = track_by_id(rec, "4");
  CHECK(v4.states.front().vx > 0.0);
  CHECK(v4.states.back().x > v4.states.front().x);
  CHECK(v4.states.front().x == doctest::Approx(-400.0).epsilon(1e-9));
  // lateral state is untouched by the flip
  CHECK(v4.states.front().y == doctest::Approx(6.0 + 0.13 * std::sin(0.9)).epsilon(1e-6));
}

TEST_CASE("highd parser validates the meta file") {
  const std::string tracks_header =
      "frame,id,x,y,width,height,xVelocity,yVelocity,xAcceleration,yAcceleration\n";
  std::string tracks = write_temp("hd_tracks.csv",
                                  tracks_header + "0,1,7.6,13.1,4.8,1.9,28,0,0.1,0\n");

  SUBCASE("wrong frame rate") {
    std::string meta = write_temp(
        "hd_meta_rate.csv",
        "id,frameRate,locationId,upperLaneMarkings,lowerLaneMarkings\n1,30,2,0;4,12;16\n");
    try {
      parse_highd(tracks, meta);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()) == meta + ": frame rate 30, expected 25");
    }
  }
  SUBCASE("meta without data row") {
    std::string meta = write_temp(
        "hd_meta_empty.csv", "id,frameRate,locationId,upperLaneMarkings,lowerLaneMarkings\n");
    try {
      parse_highd(tracks, meta);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()) == meta + ": expected header and one data row");
    }
  }
  SUBCASE("tracks missing column") {
    std::string meta = write_temp(
        "hd_meta_ok.csv",
        "id,frameRate,locationId,upperLaneMarkings,lowerLaneMarkings\n1,25,2,0;4,12;16\n");
    std::string bad = write_temp(
        "hd_tracks_nocol.csv",
        "frame,id,x,y,width,height,xVelocity,yVelocity,xAcceleration\n0,1,7.6,13.1,4.8,1.9,28,0,0.1\n");
    try {
      parse_highd(bad, meta);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()) == bad + ": missing column 'yacceleration'");
    }
  }
}

TEST_CASE("butterworth filter matches its analytic response") {
  SUBCASE("constants pass through exactly") {
    std::vector<double> series(200, 3.7);
    const std::vector<double> fwd = butterworth_forward(series, 1.0, 10.0);
    const std::vector<double> zp = butterworth_lowpass(series, 1.0, 10.0);
    for (size_t i = 0; i < series.size(); ++i) {
      CHECK(std::abs(fwd[i] - 3.7) < 1e-9);
      CHECK(std::abs(zp[i] - 3.7) < 1e-9);
    }
  }
  SUBCASE("single pass attenuates a cutoff-frequency sine by 1/sqrt(2)") {
    const double fs = 10.0, fc = 1.0, f = 1.0;
    std::vector<double> series;
    for (int i = 0; i < 400; ++i)
      series.push_back(std::sin(2.0 * M_PI * f * static_cast<double>(i) / fs));
    const std::vector<double> y = butterworth_forward(series, fc, fs);
    // steady-state amplitude via RMS over whole periods (20 of them),
    // away from the start-up transient; phase-independent unlike a max scan
    double sq = 0.0;
    for (size_t i = 200; i < 400; ++i) sq += y[i] * y[i];
    const double amp = std::sqrt(2.0 * sq / 200.0);
    CHECK(std::abs(amp - std::sqrt(0.5)) < 0.02);
  }
  SUBCASE("forward-backward pass squares the gain and cancels the phase") {
    // first-order magnitude at f = fc is 1/sqrt(2); two passes give 1/2,
    // and the reversal makes the net phase zero, so the output tracks
    // 0.5 * input sample for sample away from the edges
    const double fs = 10.0, fc = 1.0;
    std::vector<double> series;
    for (int i = 0; i < 600; ++i)
      series.push_back(std::sin(2.0 * M_PI * static_cast<double>(i) / fs));
    const std::vector<double> y = butterworth_lowpass(series, fc, fs);
    double worst = 0.0;
    for (size_t i = 150; i < 450; ++i) worst = std::max(worst, std::abs(y[i] - 0.5 * series[i]));
    CHECK(worst < 1e-6);
  }
  SUBCASE("parameter validation") {
    std::vector<double> s(10, 1.0);
    CHECK_THROWS_AS(butterworth_forward(s, 0.0, 10.0), InvalidParameter);
    CHECK_THROWS_AS(butterworth_forward(s, -1.0, 10.0), InvalidParameter);
    CHECK_THROWS_AS(butterworth_forward(s, 5.0, 10.0), InvalidParameter);  // fs == 2 fc
    CHECK_THROWS_AS(butterworth_forward({1.0}, 1.0, 10.0), InvalidParameter);
  }
  SUBCASE("filter_recording touches every series and skips stubs") {
    RawRecording rec;
    rec.native_rate = 10.0;
    Track tr = make_track("a", 0.0, 0.1, 50, 0.0, 2.0, 10.0);
    for (size_t i = 0; i < tr.states.size(); ++i)
      tr.states[i].ay = std::sin(2.0 * M_PI * static_cast<double>(i) / 10.0);  // 1 Hz ripple
    rec.tracks.push_back(tr);
    Track stub = make_track("b", 0.0, 0.1, 1, 0.0, 2.0, 10.0);
    rec.tracks.push_back(stub);

    filter_recording(rec, 1.0);
    // constant channels survive exactly; the oscillating one is attenuated
    for (size_t i = 0; i < 50; ++i) {
      CHECK(std::abs(rec.tracks[0].states[i].y - 2.0) < 1e-9);
      CHECK(std::abs(rec.tracks[0].states[i].vx - 10.0) < 1e-9);
    }
    double sq = 0.0;
    for (size_t i = 10; i < 40; ++i) sq += rec.tracks[0].states[i].ay * rec.tracks[0].states[i].ay;
    const double amp = std::sqrt(2.0 * sq / 30.0);
    CHECK(amp < 0.55);
    CHECK(amp > 0.4);
    // the single-state track is returned untouched
    CHECK(rec.tracks[1].states.size() == 1);
    CHECK(rec.tracks[1].states[0].x == doctest::Approx(0.0));
  }
}

TEST_CASE("resample keeps every k-th state on the output grid") {
  SUBCASE("10 Hz to 5 Hz with phase alignment") {
    // native timestamps 0.1, 0.2, ... 4.0: the first on-grid sample is 0.2
    Track tr = make_track("v", 0.1, 0.1, 40, 0.0, 2.0, 10.0);
    Track out = resample(tr, 0.2);
    REQUIRE(out.states.size() == 20);
    CHECK(out.vehicle_id == "v");
    CHECK(out.length == doctest::Approx(5.0));
    for (size_t j = 0; j < out.states.size(); ++j) {
      CHECK(out.states[j].t ==
            doctest::Approx(0.2 * static_cast<double>(j + 1)).epsilon(1e-12));
      // retained states are the originals at odd indices
      CHECK(out.states[j].x == doctest::Approx(tr.states[2 * j + 1].x).epsilon(1e-12));
    }
    CHECK(out.dt() == doctest::Approx(0.2).epsilon(1e-12));
  }
  SUBCASE("25 Hz to 5 Hz starting on the grid") {
    Track tr = make_track("w", 0.0, 0.04, 1000, 0.0, 2.0, 10.0);
    Track out = resample(tr, 0.2);
    REQUIRE(out.states.size() == 200);
    CHECK(out.states.front().t == doctest::Approx(0.0));
    CHECK(out.states.back().t == doctest::Approx(0.2 * 199.0).epsilon(1e-12));
  }
  SUBCASE("already at the target step: timestamps reissued, states kept") {
    Track tr = make_track("u", 0.0, 0.2, 30, 5.0, 2.0, 8.0);
    Track out = resample(tr, 0.2);
    REQUIRE(out.states.size() == 30);
    for (size_t j = 0; j < 30; ++j) CHECK(out.states[j].x == doctest::Approx(tr.states[j].x));
  }
  SUBCASE("step that does not divide the target") {
    Track tr = make_track("v", 0.0, 0.08, 50, 0.0, 2.0, 10.0);
    CHECK_THROWS_AS(resample(tr, 0.2), ResampleError);  // ratio 2.5
  }
  SUBCASE("track never lands on the grid") {
    Track tr = make_track("v", 0.05, 0.1, 50, 0.0, 2.0, 10.0);  // 0.05, 0.15, ...
    try {
      resample(tr, 0.2);
      FAIL("expected ResampleError");
    } catch (const ResampleError& e) {
      CHECK(std::string(e.what()).find("never lands on the output grid") != std::string::npos);
    }
  }
  SUBCASE("too short") {
    Track tr = make_track("v", 0.0, 0.1, 1, 0.0, 2.0, 10.0);
    try {
      resample(tr, 0.2);
      FAIL("expected ResampleError");
    } catch (const ResampleError& e) {
      CHECK(std::string(e.what()) == "resample: track v has fewer than 2 states");
    }
  }
  SUBCASE("invalid dt") {
    Track tr = make_track("v", 0.0, 0.1, 10, 0.0, 2.0, 10.0);
    CHECK_THROWS_AS(resample(tr, 0.0), InvalidParameter);
    CHECK_THROWS_AS(resample(tr, -0.2), InvalidParameter);
  }
}

TEST_CASE("extract_windows cuts histories, futures, and context") {
  LaneGeometry lanes;
  lanes.lane_centers = {2.0, 6.0};
  lanes.lane_width = 4.0;

  SUBCASE("window count follows floor((n - 41) / stride) + 1") {
    for (size_t n : {41u, 45u, 46u, 120u}) {
      RawRecording rec;
      rec.lanes = lanes;
      rec.tracks.push_back(make_track("ov", 0.0, kDt, n, 0.0, 2.0, 10.0));
      const auto samples = extract_windows(rec);
      CHECK(samples.size() == (n - 41) / 5 + 1);
    }
  }
  SUBCASE("sample frames: 16 history steps ending at t0, 25 future steps") {
    RawRecording rec;
    rec.lanes = lanes;
    rec.tracks.push_back(make_track("ov", 0.0, kDt, 60, 0.0, 2.0, 10.0));
    const auto samples = extract_windows(rec, GridOptions{}, 1.0, "mini");
    REQUIRE(samples.size() == 4);
    const Sample& s = samples[0];
    CHECK(s.id == "mini:ov:t3.0");
    CHECK(s.t0 == doctest::Approx(15.0 * kDt).epsilon(1e-12));
    REQUIRE(s.ov_history.size() == 16);
    REQUIRE(s.ov_future.size() == 25);
    CHECK(s.ov_history.front().t == doctest::Approx(0.0));
    CHECK(s.ov_history.back().t == doctest::Approx(s.t0));
    CHECK(s.ov_future[0][0] == doctest::Approx(10.0 * (s.t0 + kDt)).epsilon(1e-9));
    CHECK(s.ov_future[24][0] == doctest::Approx(10.0 * (s.t0 + 25.0 * kDt)).epsilon(1e-9));
    CHECK(s.grid.at(2, 1) == "ov");
    // next window starts one second later
    CHECK(samples[1].t0 == doctest::Approx(s.t0 + 1.0).epsilon(1e-12));
    CHECK(samples[1].id == "mini:ov:t4.0");
  }
  SUBCASE("surrounding vehicle with full history is attached with relatives") {
    RawRecording rec;
    rec.lanes = lanes;
    rec.tracks.push_back(make_track("ov", 0.0, kDt, 120, 0.0, 2.0, 10.0));
    rec.tracks.push_back(make_track("sv", 0.0, kDt, 120, 0.0, 6.0, 10.0));
    const auto samples = extract_windows(rec);
    REQUIRE(!samples.empty());
    // every ov window sees sv alongside-left (same x, one lane over)
    const Sample* ov_sample = nullptr;
    for (const Sample& s : samples)
      if (s.grid.at(2, 1) == "ov") {
        ov_sample = &s;
        break;
      }
    REQUIRE(ov_sample != nullptr);
    REQUIRE(ov_sample->sv_histories.size() == 1);
    const SvHistory& h = ov_sample->sv_histories[0];
    CHECK(h.vehicle_id == "sv");
    CHECK(h.cell == ContextGrid::cell_index(2, 0));
    REQUIRE(h.states.size() == 16);
    for (const SvState& st : h.states) {
      CHECK(st[1] == doctest::Approx(6.0));   // absolute y
      CHECK(st[6] == doctest::Approx(0.0));   // dx
      CHECK(st[7] == doctest::Approx(4.0));   // dy
      CHECK(st[8] == doctest::Approx(0.0));   // dvx
    }
  }
  SUBCASE("surrounding vehicle with short history is treated as absent") {
    RawRecording rec;
    rec.lanes = lanes;
    rec.tracks.push_back(make_track("ov", 0.0, kDt, 120, 0.0, 2.0, 10.0));
    // sv appears at t = 2.0: at the first window (t0 = 3.0) it has only
    // 6 steps of history; by t0 = 5.0 it has 16
    rec.tracks.push_back(make_track("sv", 2.0, kDt, 100, 20.0, 6.0, 10.0));
    const auto samples = extract_windows(rec);
    std::map<std::string, const Sample*> by_id;
    for (const Sample& s : samples) by_id[s.id] = &s;
    const Sample* early = by_id.at("rec:ov:t3.0");
    CHECK(early->sv_histories.empty());
    CHECK(early->grid.occupied_sv_cells().empty());
    const Sample* late = by_id.at("rec:ov:t5.0");
    REQUIRE(late->sv_histories.size() == 1);
    CHECK(late->sv_histories[0].vehicle_id == "sv");
    CHECK(late->sv_histories[0].states.size() == 16);
  }
  SUBCASE("ov off the lane map yields no windows") {
    RawRecording rec;
    rec.lanes = lanes;
    rec.tracks.push_back(make_track("ov", 0.0, kDt, 120, 0.0, 50.0, 10.0));
    CHECK(extract_windows(rec).empty());
  }
  SUBCASE("unresampled track is rejected") {
    RawRecording rec;
    rec.lanes = lanes;
    rec.tracks.push_back(make_track("ov", 0.0, 0.1, 120, 0.0, 2.0, 10.0));
    CHECK_THROWS_AS(extract_windows(rec), InvalidParameter);
  }
  SUBCASE("stride must be a positive multiple of the step") {
    RawRecording rec;
    rec.lanes = lanes;
    rec.tracks.push_back(make_track("ov", 0.0, kDt, 60, 0.0, 2.0, 10.0));
    CHECK_THROWS_AS(extract_windows(rec, GridOptions{}, 0.3), InvalidParameter);
    CHECK_THROWS_AS(extract_windows(rec, GridOptions{}, 0.0), InvalidParameter);
    CHECK(extract_windows(rec, GridOptions{}, 0.2).size() == 20);  // stride of one step
  }
}

TEST_CASE("split_dataset shuffles deterministically and cuts 70/10/20") {
  auto make_samples = [](size_t n) {
    std::vector<Sample> samples;
    for (size_t i = 0; i < n; ++i) {
      Sample s;
      char buf[16];
      std::snprintf(buf, sizeof(buf), "s%02zu", i);
      s.id = buf;
      samples.push_back(s);
    }
    return samples;
  };

  SUBCASE("replays the seeded shuffle exactly") {
    const auto samples = make_samples(12);
    const SplitManifest m = split_dataset(samples, 2024);
    // independent replay: Fisher-Yates from the top with the same generator
    std::vector<std::string> ids;
    for (const Sample& s : samples) ids.push_back(s.id);
    std::mt19937_64 rng(2024);
    for (size_t i = ids.size() - 1; i > 0; --i) {
      const size_t j = static_cast<size_t>(rng() % (i + 1));
      std::swap(ids[i], ids[j]);
    }
    REQUIRE(m.train.size() == 8);   // llround(0.7 * 12)
    REQUIRE(m.val.size() == 1);     // llround(0.1 * 12)
    REQUIRE(m.test.size() == 3);
    for (size_t i = 0; i < 8; ++i) CHECK(m.train[i] == ids[i]);
    CHECK(m.val[0] == ids[8]);
    for (size_t i = 0; i < 3; ++i) CHECK(m.test[i] == ids[9 + i]);
  }
  SUBCASE("byte-identical manifests for the same seed, different otherwise") {
    const auto samples = make_samples(25);
    CHECK(split_dataset(samples, 7).to_json() == split_dataset(samples, 7).to_json());
    CHECK(split_dataset(samples, 7).to_json() != split_dataset(samples, 8).to_json());
  }
  SUBCASE("manifest json round-trip") {
    const auto samples = make_samples(10);
    const SplitManifest m = split_dataset(samples, 99);
    const SplitManifest back = SplitManifest::from_json(m.to_json());
    CHECK(back.seed == m.seed);
    CHECK(back.train == m.train);
    CHECK(back.val == m.val);
    CHECK(back.test == m.test);
    CHECK_THROWS_AS(SplitManifest::from_json("{\"seed\": 1}"), FormatError);
    CHECK_THROWS_AS(SplitManifest::from_json("not json"), FormatError);
  }
  SUBCASE("too few samples") {
    const auto samples = make_samples(9);
    try {
      split_dataset(samples, 1);
      FAIL("expected InsufficientData");
    } catch (const InsufficientData& e) {
      CHECK(std::string(e.what()) == "split_dataset: need at least 10 samples, got 9");
    }
  }
  SUBCASE("apply_split gathers by id and rejects unknown ids") {
    const auto samples = make_samples(12);
    const SplitManifest m = split_dataset(samples, 5);
    const SplitSets sets = apply_split(samples, m);
    REQUIRE(sets.train.size() == 8);
    CHECK(sets.train[0].id == m.train[0]);
    CHECK(sets.val[0].id == m.val[0]);
    CHECK(sets.test[2].id == m.test[2]);
    SplitManifest bad = m;
    bad.train.push_back("sXX");
    CHECK_THROWS_AS(apply_split(samples, bad), InvalidValue);
  }
}

TEST_CASE("sample jsonl round-trips exactly") {
  // build a few real windows, including one with an SV attached
  LaneGeometry lanes;
  lanes.lane_centers = {2.0, 6.0};
  RawRecording rec;
  rec.lanes = lanes;
  rec.tracks.push_back(make_track("ov", 0.0, kDt, 80, 0.0, 2.0, 11.0));
  rec.tracks.push_back(make_track("sv", 0.0, kDt, 80, 3.0, 6.0, 9.5));
  const auto samples = extract_windows(rec);
  REQUIRE(!samples.empty());
  REQUIRE(!samples[0].sv_histories.empty());

  const std::string path = "samples_roundtrip.jsonl";
  write_samples_jsonl(path, samples);
  const auto back = read_samples_jsonl(path);
  REQUIRE(back.size() == samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    const Sample& a = samples[i];
    const Sample& b = back[i];
    CHECK(a.id == b.id);
    CHECK(a.t0 == b.t0);
    CHECK(a.grid.cells == b.grid.cells);
    REQUIRE(a.ov_history.size() == b.ov_history.size());
    for (size_t j = 0; j < a.ov_history.size(); ++j) {
      CHECK(a.ov_history[j].t == b.ov_history[j].t);
      CHECK(a.ov_history[j].x == b.ov_history[j].x);
      CHECK(a.ov_history[j].y == b.ov_history[j].y);
      CHECK(a.ov_history[j].vx == b.ov_history[j].vx);
      CHECK(a.ov_history[j].vy == b.ov_history[j].vy);
      CHECK(a.ov_history[j].ax == b.ov_history[j].ax);
      CHECK(a.ov_history[j].ay == b.ov_history[j].ay);
    }
    REQUIRE(a.sv_histories.size() == b.sv_histories.size());
    for (size_t j = 0; j < a.sv_histories.size(); ++j) {
      CHECK(a.sv_histories[j].cell == b.sv_histories[j].cell);
      CHECK(a.sv_histories[j].vehicle_id == b.sv_histories[j].vehicle_id);
      CHECK(a.sv_histories[j].states == b.sv_histories[j].states);
    }
    CHECK(a.ov_future == b.ov_future);
  }

  SUBCASE("invalid line reports its number") {
    const std::string bad = write_temp("samples_bad.jsonl", "{\"id\": \"x\"\n");
    try {
      read_samples_jsonl(bad);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find(bad + " line 1:") == 0);
    }
  }
  SUBCASE("blank lines are skipped") {
    std::ofstream out("samples_blank.jsonl");
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    out << "\n" << line << "\n\n";
    out.close();
    CHECK(read_samples_jsonl("samples_blank.jsonl").size() == 1);
  }
}

TEST_CASE("mini recordings run the full pipeline to the documented counts") {
  SUBCASE("ngsim") {
    RawRecording rec = parse_ngsim(fixture("ngsim_mini.csv"));
    filter_recording(rec, 1.0);
    const RawRecording at5hz = resample_recording(rec);
    const auto samples = extract_windows(at5hz, GridOptions{}, 1.0, "ngsim_mini");

    // per-track window counts: four 200-step tracks (32 each), the split
    // vehicle contributes 89 -> 10 and 103 -> 13
    std::map<std::string, int> per_vehicle;
    for (const Sample& s : samples) {
      const std::string vid = s.id.substr(std::string("ngsim_mini:").size());
      per_vehicle[vid.substr(0, vid.find(':'))] += 1;
    }
    CHECK(per_vehicle["101"] == 32);
    CHECK(per_vehicle["102"] == 32);
    CHECK(per_vehicle["103"] == 32);
    CHECK(per_vehicle["104"] == 32);
    CHECK(per_vehicle["105"] == 23);
    CHECK(samples.size() == 151);

    // ids are unique, so the split partitions cleanly
    std::set<std::string> ids;
    for (const Sample& s : samples) ids.insert(s.id);
    CHECK(ids.size() == samples.size());

    const SplitManifest m = split_dataset(samples, 20240601);
    CHECK(m.train.size() == 106);  // llround(0.7 * 151)
    CHECK(m.val.size() == 15);     // llround(0.1 * 151)
    CHECK(m.test.size() == 30);
    const SplitSets sets = apply_split(samples, m);
    CHECK(sets.train.size() + sets.val.size() + sets.test.size() == samples.size());

    // neighbours in adjacent lanes do show up as SV histories
    size_t with_sv = 0;
    for (const Sample& s : samples)
      if (!s.sv_histories.empty()) ++with_sv;
    CHECK(with_sv > 0);
    for (const Sample& s : samples) s.validate();
  }
  SUBCASE("highd") {
    RawRecording rec =
        parse_highd(fixture("highd_mini_tracks.csv"), fixture("highd_mini_meta.csv"));
    filter_recording(rec, 1.0);
    const RawRecording at5hz = resample_recording(rec);
    for (const Track& tr : at5hz.tracks) CHECK(tr.states.size() == 200);
    const auto samples = extract_windows(at5hz, GridOptions{}, 1.0, "highd_mini");
    CHECK(samples.size() == 4 * 32);
    // the two same-lane vehicles see each other
    size_t with_sv = 0;
    for (const Sample& s : samples)
      if (!s.sv_histories.empty()) ++with_sv;
    CHECK(with_sv > 0);
  }
}
