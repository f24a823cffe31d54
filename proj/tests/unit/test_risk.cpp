#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "predrisk/risk.hpp"

using namespace predrisk;

namespace {

using Vec2 = std::array<double, 2>;

bool point_in_obb(const Vec2& p, const Obb& box) {
  const auto ex = box.axis_long();
  const auto ey = box.axis_lat();
  const double dx = p[0] - box.cx, dy = p[1] - box.cy;
  return std::abs(dx * ex[0] + dy * ex[1]) <= box.half_length &&
         std::abs(dx * ey[0] + dy * ey[1]) <= box.half_width;
}

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  double d1 = cross(q1, q2, p1), d2 = cross(q1, q2, p2);
  double d3 = cross(p1, p2, q1), d4 = cross(p1, p2, q2);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

// Exact, SAT-free overlap test: corner containment or proper edge crossing.
bool oracle_overlap(const Obb& a, const Obb& b) {
  auto ca = a.corners();
  auto cb = b.corners();
  for (const auto& p : ca)
    if (point_in_obb(p, b)) return true;
  for (const auto& p : cb)
    if (point_in_obb(p, a)) return true;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (segments_intersect(ca[i], ca[(i + 1) % 4], cb[j], cb[(j + 1) % 4])) return true;
  return false;
}

// max over the four edge axes of the signed projection gap: positive =
// separated by that much, negative = penetrating on every axis.
double signed_gap(const Obb& a, const Obb& b) {
  auto project = [](const Obb& box, const Vec2& axis) {
    auto ex = box.axis_long();
    auto ey = box.axis_lat();
    return box.half_length * std::abs(ex[0] * axis[0] + ex[1] * axis[1]) +
           box.half_width * std::abs(ey[0] * axis[0] + ey[1] * axis[1]);
  };
  const Vec2 t{b.cx - a.cx, b.cy - a.cy};
  double best = -1e300;
  for (const Vec2& axis : {a.axis_long(), a.axis_lat(), b.axis_long(), b.axis_lat()}) {
    double gap = std::abs(t[0] * axis[0] + t[1] * axis[1]) - project(a, axis) - project(b, axis);
    best = std::max(best, gap);
  }
  return best;
}

Obb random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-8.0, 8.0);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> hl(0.5, 3.0);
  std::uniform_real_distribution<double> hw(0.3, 1.5);
  Obb b;
  b.cx = pos(rng);
  b.cy = pos(rng);
  b.heading = ang(rng);
  b.half_length = hl(rng);
  b.half_width = hw(rng);
  return b;
}

std::vector<Vec2> boundary_samples(const Obb& box, int per_edge) {
  auto c = box.corners();
  std::vector<Vec2> out;
  out.reserve(static_cast<size_t>(4 * per_edge));
  for (int e = 0; e < 4; ++e) {
    const auto& p = c[e];
    const auto& q = c[(e + 1) % 4];
    for (int i = 0; i < per_edge; ++i) {
      double u = static_cast<double>(i) / per_edge;
      out.push_back({p[0] + u * (q[0] - p[0]), p[1] + u * (q[1] - p[1])});
    }
  }
  return out;
}

LaneGeometry two_lanes() {
  LaneGeometry lanes;
  lanes.lane_centers = {2.0, 6.0};
  lanes.lane_width = 4.0;
  return lanes;
}

CandidateTrajectory straight_candidate(double x0, double y0, double v, double t0 = 0.0) {
  MotionState s;
  s.t = t0;
  s.x = x0;
  s.y = y0;
  s.vx = v;
  auto set = candidates(s, {y0});
  for (const auto& c : set)
    if (c.ax == doctest::Approx(0.0)) return c;
  REQUIRE(false);
  return set[0];
}

SplineTrajectory straight_spline(double x0, double y0, double v, double t0 = 0.0) {
  std::vector<Vec2> pts;
  for (int i = 0; i <= 25; ++i) pts.push_back({x0 + v * 0.2 * i, y0});
  return spline_fit(pts, t0, 0.2, v, 0.0, 0.0, 0.0);
}

}  // namespace

TEST_CASE("sat_overlap hand cases") {
  Obb a = obb_from_pose(0, 0, 0, 5.21, 2.04);
  CHECK(sat_overlap(a, obb_from_pose(5.0, 0, 0, 5.21, 2.04)));        // overlapping
  CHECK_FALSE(sat_overlap(a, obb_from_pose(6.0, 0, 0, 5.21, 2.04)));  // 0.79 m gap
  CHECK(sat_overlap(a, obb_from_pose(5.21, 0, 0, 5.21, 2.04)));       // exact touch counts
  CHECK(sat_overlap(a, a));
  // rotated: a 45-degree box whose corner reaches into the gap
  Obb diag = obb_from_pose(4.0, 0, M_PI / 4.0, 5.21, 2.04);
  CHECK(sat_overlap(a, diag));
}

TEST_CASE("sat_overlap agrees with the exact polygon oracle") {
  std::mt19937_64 rng(31);
  int disagreements = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    Obb a = random_box(rng);
    Obb b = random_box(rng);
    bool sat = sat_overlap(a, b);
    bool oracle = oracle_overlap(a, b);
    if (sat != oracle) {
      ++disagreements;
      CHECK(std::abs(signed_gap(a, b)) < 1e-6);  // only razor-thin boundary cases
    }
  }
  CHECK(disagreements <= 1);
}

TEST_CASE("distance_margin matches hand values and validates the axis") {
  Obb a = obb_from_pose(0, 0, 0, 5.21, 2.04);
  Obb b = obb_from_pose(10.0, 0, 0, 5.21, 2.04);
  CHECK(distance_margin(a, b, {1.0, 0.0}) == doctest::Approx(10.0 - 5.21).epsilon(1e-12));
  CHECK(distance_margin(a, b, {0.0, 1.0}) == doctest::Approx(0.0));  // clamped
  CHECK_THROWS_AS(distance_margin(a, b, {1.0, 1.0}), InvalidAxis);
  CHECK_THROWS_AS(distance_margin(a, b, {0.0, 0.0}), InvalidAxis);
}

TEST_CASE("distance_margin never exceeds the sampled boundary distance") {
  std::mt19937_64 rng(53);
  int checked = 0;
  while (checked < 300) {
    Obb a = random_box(rng);
    Obb b = random_box(rng);
    if (sat_overlap(a, b)) continue;  // margins are zero when overlapping
    ++checked;
    auto sa = boundary_samples(a, 64);
    auto sb = boundary_samples(b, 64);
    double best = 1e300;
    for (const auto& p : sa)
      for (const auto& q : sb)
        best = std::min(best, std::hypot(p[0] - q[0], p[1] - q[1]));
    for (const Vec2 axis : {a.axis_long(), a.axis_lat(), b.axis_long(), b.axis_lat()}) {
      CHECK(distance_margin(a, b, axis) <= best + 1e-3);
    }
    // the road-frame decomposition obeys the same bound
    MdmResult m = mdm(a, b);
    CHECK(m.mdm <= best + 1e-3);
    CHECK(m.mdm_x <= best + 1e-3);
    CHECK(m.mdm_y <= best + 1e-3);
  }
}

TEST_CASE("mdm hand cases for axis-aligned pairs") {
  Obb a = obb_from_pose(0, 0, 0, 5.21, 2.04);

  // diagonal neighbor
  MdmResult d = mdm(a, obb_from_pose(10.0, 10.0, 0, 5.21, 2.04));
  CHECK(d.mdm_x == doctest::Approx(10.0 - 5.21).epsilon(1e-12));
  CHECK(d.mdm_y == doctest::Approx(10.0 - 2.04).epsilon(1e-12));
  CHECK(d.mdm == doctest::Approx(4.79).epsilon(1e-12));  // min over edge axes

  // car following: laterally aligned
  MdmResult f = mdm(a, obb_from_pose(10.0, 0.0, 0, 5.21, 2.04));
  CHECK(f.mdm_x == doctest::Approx(4.79).epsilon(1e-12));
  CHECK(f.mdm_y == doctest::Approx(0.0));
  CHECK(f.mdm == doctest::Approx(0.0));  // lateral axis already touches
}

TEST_CASE("risk params validation") {
  RiskParams p;
  p.validate(5.0);
  RiskParams bad_w = p;
  bad_w.w_ttc = 0.7;
  CHECK_THROWS_AS(bad_w.validate(5.0), InvalidParams);
  RiskParams bad_step = p;
  bad_step.check_step = 0.07;  // does not divide 5 s
  CHECK_THROWS_AS(bad_step.validate(5.0), InvalidParams);
  RiskParams bad_sigma = p;
  bad_sigma.sigma3 = 0.0;
  CHECK_THROWS_AS(bad_sigma.validate(5.0), InvalidParams);
}

TEST_CASE("ttc on the analytic closing-gap fixture") {
  LaneGeometry lanes = two_lanes();
  RiskParams params;
  PairDims dims;  // both 5.21 x 2.04

  auto av = straight_candidate(0.0, 2.0, 30.0);
  auto ov = straight_spline(30.0, 2.0, 0.0);
  // gap = 30 - 5.21 = 24.79 m at 30 m/s -> 0.8263 s, on the grid: 0.85
  CHECK(ttc(av, ov, dims, lanes, params) == doctest::Approx(0.85).epsilon(1e-12));

  // never closing: TTC equals the horizon
  auto far = straight_spline(60.0, 2.0, 30.0);
  CHECK(ttc(av, far, dims, lanes, params) == doctest::Approx(5.0));
}

TEST_CASE("pair_risk matches the scalar kernel oracle on the worked case") {
  LaneGeometry lanes = two_lanes();
  RiskParams params;
  PairDims dims;

  // constant offsets: dx = 25.21 -> mdm_x = 20, dy = 2.54 -> mdm_y = 0.5,
  // never overlapping -> TTC = 5
  auto av = straight_candidate(0.0, 2.0, 20.0);
  auto ov = straight_spline(25.21, 4.54, 20.0);
  RiskProfile prof = pair_risk(av, ov, "ov", dims, lanes, params);

  REQUIRE(prof.times.size() == 101);
  CHECK(prof.ttc == doctest::Approx(5.0));
  CHECK(prof.mdm_x[0] == doctest::Approx(20.0).epsilon(1e-9));
  CHECK(prof.mdm_y[0] == doctest::Approx(0.5).epsilon(1e-9));

  double s1 = 2.0 * 2.04 * 2.04, s2 = s1, s3 = 2.0 * 45.0 * 45.0, s4 = 2.0 * 1.6 * 1.6;
  double oracle = 0.6 * std::exp(-5.0 / s1) * std::exp(-25.0 / s2) +
                  0.4 * std::exp(-400.0 / s3) * std::exp(-0.25 / s4);
  CHECK(std::abs(oracle - 0.361) < 5e-4);  // the worked value
  CHECK(std::abs(prof.risk[0] - oracle) < 1e-6);
}

TEST_CASE("pair_risk is exactly 1 for the all-zero case") {
  LaneGeometry lanes = two_lanes();
  RiskParams params;
  PairDims dims;
  auto av = straight_candidate(0.0, 2.0, 20.0);
  auto ov = straight_spline(0.0, 2.0, 20.0);  // coincident at all times
  RiskProfile prof = pair_risk(av, ov, "ov", dims, lanes, params);
  CHECK(prof.ttc == doctest::Approx(0.0));
  CHECK(prof.risk[0] == 1.0);  // exact: w_ttc + w_mdm with unit kernels
}

TEST_CASE("pair_risk stays in [0,1] on random trajectory pairs") {
  LaneGeometry lanes = two_lanes();
  RiskParams params;
  PairDims dims;
  std::mt19937_64 rng(97);
  std::uniform_real_distribution<double> ux(-40.0, 40.0);
  std::uniform_real_distribution<double> uv(0.0, 35.0);
  std::uniform_real_distribution<double> uy(2.0, 6.0);
  std::uniform_real_distribution<double> wob(-2.0, 2.0);

  for (int trial = 0; trial < 200; ++trial) {
    MotionState s;
    s.x = ux(rng);
    s.y = trial % 2 ? 2.0 : 6.0;
    s.vx = uv(rng);
    auto cand_set = candidates(s, adjacent_lane_targets(s.y, lanes));
    const auto& av = cand_set[static_cast<size_t>(trial) % cand_set.size()];

    double ovx = ux(rng), ovy = uy(rng), ovv = uv(rng), a = wob(rng);
    std::vector<Vec2> pts;
    for (int i = 0; i <= 25; ++i) {
      double tau = 0.2 * i;
      pts.push_back({ovx + ovv * tau, ovy + a * std::sin(tau)});
    }
    auto ov = spline_fit(pts, 0.0, 0.2, ovv, 0.0, a, 0.0);

    RiskProfile prof = pair_risk(av, ov, "ov", dims, lanes, params);
    for (double r : prof.risk) {
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
    }
  }
}

TEST_CASE("aggregate_risk algebra") {
  RiskProfile a, b;
  a.times = {0.0, 0.05};
  a.risk = {0.5, 0.0};
  b.times = {0.0, 0.05};
  b.risk = {0.5, 0.25};
  auto agg = aggregate_risk({a, b});
  REQUIRE(agg.size() == 2);
  CHECK(agg[0] == 0.75);  // 1 - 0.5*0.5, exact in binary
  CHECK(agg[1] == doctest::Approx(0.25));
  CHECK(aggregate_risk({}).empty());

  RiskProfile c = b;
  c.times = {0.0, 0.06};
  CHECK_THROWS_AS(aggregate_risk({a, c}), GridError);
  RiskProfile d = b;
  d.risk.pop_back();
  CHECK_THROWS_AS(aggregate_risk({a, d}), GridError);

  // union risk dominates every component
  auto agg2 = aggregate_risk({a, b});
  for (size_t i = 0; i < agg2.size(); ++i) {
    CHECK(agg2[i] >= a.risk[i]);
    CHECK(agg2[i] >= b.risk[i]);
  }
}

TEST_CASE("risk_map evaluates the full candidate grid") {
  LaneGeometry lanes = two_lanes();
  RiskParams params;

  MotionState av;
  av.t = 3.0;
  av.x = 75.0;
  av.y = 2.0;
  av.vx = 25.0;

  OvPrediction lead;
  lead.id = "lead";
  lead.state0.t = 3.0;
  lead.state0.x = 130.0;
  lead.state0.y = 2.0;
  lead.state0.vx = 25.0;
  GaussianTrajectory pred;
  for (int i = 1; i <= 25; ++i) {
    GaussianParams g;
    g.mu_x = 130.0 + 25.0 * 0.2 * i;
    g.mu_y = 2.0;
    pred.steps.push_back(g);
  }
  lead.prediction = pred;

  RiskMap map = risk_map(av, VehicleDims{}, {lead}, lanes, params);
  CHECK(map.t0 == doctest::Approx(3.0));
  REQUIRE(map.times.size() == 101);
  CHECK(map.times.front() == doctest::Approx(3.0));
  CHECK(map.times.back() == doctest::Approx(8.0));
  CHECK(map.ov_ids == std::vector<VehicleId>{"lead"});
  // two lateral targets (y = 2 and 6) x 21 accelerations
  CHECK(map.entries.size() == 42);
  for (const auto& e : map.entries) {
    REQUIRE(e.risk.size() == 101);
    REQUIRE(e.ttcs.size() == 1);
    for (double r : e.risk) {
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
    }
  }

  // deterministic: same inputs give identical output
  RiskMap again = risk_map(av, VehicleDims{}, {lead}, lanes, params);
  for (size_t i = 0; i < map.entries.size(); ++i)
    for (size_t k = 0; k < map.entries[i].risk.size(); ++k)
      CHECK(map.entries[i].risk[k] == again.entries[i].risk[k]);

  // no object vehicles: zero risk everywhere
  RiskMap empty = risk_map(av, VehicleDims{}, {}, lanes, params);
  CHECK(empty.entries.size() == 42);
  for (double r : empty.entries[0].risk) CHECK(r == 0.0);
}
