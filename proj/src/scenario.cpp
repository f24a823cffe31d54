#include "predrisk/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>

namespace predrisk {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& field, const std::string& path, size_t lineno) {
  const std::string t = trim(field);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw ParseError(path + " line " + std::to_string(lineno) + ": invalid number '" + field + "'");
  return v;
}

}  // namespace

const Track& Scenario::av() const {
  for (const Track& tr : tracks)
    if (tr.vehicle_id == av_id) return tr;
  throw MissingVehicle("scenario " + name + ": AV '" + av_id + "' has no track");
}

Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  Scenario sc;
  sc.name = std::filesystem::path(path).stem().string();
  sc.lanes.lane_centers.clear();

  std::string line;
  size_t lineno = 0;
  bool header_seen = false;
  std::array<size_t, 10> col{};  // vehicle_id,t,x,y,vx,vy,ax,ay,length,width
  std::map<VehicleId, Track> by_id;
  std::vector<VehicleId> order;

  while (std::getline(in, line)) {
    ++lineno;
    const std::string text = trim(line);
    if (text.empty()) continue;
    if (text[0] == '#') {
      const size_t eq = text.find('=');
      if (eq == std::string::npos) continue;  // plain comment
      const std::string key = trim(text.substr(1, eq - 1));
      const std::string value = trim(text.substr(eq + 1));
      if (key == "lane_centers") {
        for (const std::string& part : split(value, ','))
          sc.lanes.lane_centers.push_back(parse_double(part, path, lineno));
      } else if (key == "lane_width") {
        sc.lanes.lane_width = parse_double(value, path, lineno);
      } else if (key == "av") {
        sc.av_id = value;
      }
      continue;
    }
    const auto cells = split(text, ',');
    if (!header_seen) {
      static const char* names[10] = {"vehicle_id", "t", "x", "y", "vx",
                                      "vy", "ax", "ay", "length", "width"};
      for (size_t k = 0; k < 10; ++k) {
        bool found = false;
        for (size_t i = 0; i < cells.size(); ++i)
          if (trim(cells[i]) == names[k]) {
            col[k] = i;
            found = true;
            break;
          }
        if (!found) throw FormatError(path + ": missing column '" + std::string(names[k]) + "'");
      }
      header_seen = true;
      continue;
    }
    auto cell = [&](size_t k) -> const std::string& {
      if (col[k] >= cells.size())
        throw ParseError(path + " line " + std::to_string(lineno) + ": too few fields");
      return cells[col[k]];
    };
    const VehicleId id = trim(cell(0));
    if (id.empty()) throw ParseError(path + " line " + std::to_string(lineno) + ": empty vehicle id");
    MotionState s;
    s.t = parse_double(cell(1), path, lineno);
    s.x = parse_double(cell(2), path, lineno);
    s.y = parse_double(cell(3), path, lineno);
    s.vx = parse_double(cell(4), path, lineno);
    s.vy = parse_double(cell(5), path, lineno);
    s.ax = parse_double(cell(6), path, lineno);
    s.ay = parse_double(cell(7), path, lineno);
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      Track tr;
      tr.vehicle_id = id;
      tr.length = parse_double(cell(8), path, lineno);
      tr.width = parse_double(cell(9), path, lineno);
      it = by_id.emplace(id, std::move(tr)).first;
      order.push_back(id);
    }
    it->second.states.push_back(s);
  }

  if (!header_seen) throw FormatError(path + ": no data");
  if (sc.lanes.lane_centers.empty()) throw FormatError(path + ": missing '# lane_centers = ...'");
  if (sc.av_id.empty()) throw FormatError(path + ": missing '# av = ...'");
  sc.lanes.validate();

  for (const VehicleId& id : order) {
    Track& tr = by_id.at(id);
    std::sort(tr.states.begin(), tr.states.end(),
              [](const MotionState& a, const MotionState& b) { return a.t < b.t; });
    tr.validate();
    if (tr.states.size() >= 2 && std::abs(tr.dt() - kDt) > 1e-6)
      throw FormatError(path + ": track " + id + " is not sampled at the 0.2 s step");
    sc.tracks.push_back(std::move(tr));
  }
  sc.av();  // fail fast when the AV id names no track
  return sc;
}

Sample cut_sample(const std::vector<Track>& tracks, const VehicleId& ov_id,
                  double t0, const LaneGeometry& lanes, const GridOptions& opts) {
  const Track* ov = nullptr;
  for (const Track& tr : tracks)
    if (tr.vehicle_id == ov_id && tr.state_at(t0)) {
      ov = &tr;
      break;
    }
  if (!ov) throw MissingVehicle("vehicle " + ov_id + " has no state at t0");
  const long idx0 = std::llround((t0 - ov->states.front().t) / kDt);
  if (idx0 < kHistoryLen - 1)
    throw InsufficientData("vehicle " + ov_id + " has under 3 s of history at t0");

  std::vector<FrameEntry> frame;
  for (const Track& tr : tracks)
    if (auto s = tr.state_at(t0)) frame.push_back(FrameEntry{&tr, *s});
  ContextGrid grid = assign_context_grid(frame, ov_id, lanes, opts);

  Sample sample;
  sample.t0 = t0;
  {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", t0);
    sample.id = ov_id + ":t" + buf;
  }
  for (long j = idx0 - (kHistoryLen - 1); j <= idx0; ++j)
    sample.ov_history.push_back(ov->states[static_cast<size_t>(j)]);
  if (idx0 + kFutureLen < static_cast<long>(ov->states.size()))
    for (long j = idx0 + 1; j <= idx0 + kFutureLen; ++j)
      sample.ov_future.push_back({ov->states[static_cast<size_t>(j)].x,
                                  ov->states[static_cast<size_t>(j)].y});

  for (int cell : grid.occupied_sv_cells()) {
    const VehicleId& sv_id = grid.cells[static_cast<size_t>(cell)];
    const Track* sv_track = nullptr;
    for (const FrameEntry& fe : frame)
      if (fe.track->vehicle_id == sv_id) {
        sv_track = fe.track;
        break;
      }
    const long sv_idx = std::llround((t0 - sv_track->states.front().t) / kDt);
    if (sv_idx < kHistoryLen - 1) {
      grid.cells[static_cast<size_t>(cell)].clear();
      continue;
    }
    SvHistory hist;
    hist.cell = cell;
    hist.vehicle_id = sv_id;
    for (int s = 0; s < kHistoryLen; ++s) {
      const MotionState& sv = sv_track->states[static_cast<size_t>(sv_idx - (kHistoryLen - 1) + s)];
      const MotionState& me = ov->states[static_cast<size_t>(idx0 - (kHistoryLen - 1) + s)];
      hist.states.push_back({sv.x, sv.y, sv.vx, sv.vy, sv.ax, sv.ay,
                             sv.x - me.x, sv.y - me.y, sv.vx - me.vx,
                             sv.vy - me.vy, sv.ax - me.ax, sv.ay - me.ay});
    }
    sample.sv_histories.push_back(std::move(hist));
  }
  sample.grid = grid;
  sample.validate();
  return sample;
}

}  // namespace predrisk
