#include "predrisk/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace predrisk {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kFootToMeter = 0.3048;
constexpr double kMagnitudeLimit = 1e7;  // anything beyond this is a unit mix-up

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    return s.substr(1, s.size() - 2);
  return s;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
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
  const std::string t = trim(strip_quotes(field));
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size())
    throw ParseError(path + " line " + std::to_string(lineno) + ": invalid number '" + field + "'");
  return v;
}

long parse_long(const std::string& field, const std::string& path, size_t lineno) {
  const double v = parse_double(field, path, lineno);
  const long r = std::lround(v);
  if (std::abs(v - static_cast<double>(r)) > 1e-9)
    throw ParseError(path + " line " + std::to_string(lineno) + ": expected integer, got '" + field + "'");
  return r;
}

void check_magnitude(double v, const std::string& path, size_t lineno) {
  if (!std::isfinite(v) || std::abs(v) > kMagnitudeLimit)
    throw InvalidValue(path + " line " + std::to_string(lineno) + ": value out of range");
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// header cell name (lowercased, trimmed) -> column index
std::unordered_map<std::string, size_t> header_index(const std::vector<std::string>& cells) {
  std::unordered_map<std::string, size_t> idx;
  for (size_t i = 0; i < cells.size(); ++i) idx[lower(trim(strip_quotes(cells[i])))] = i;
  return idx;
}

size_t require_column(const std::unordered_map<std::string, size_t>& idx,
                      const std::string& name, const std::string& path) {
  auto it = idx.find(name);
  if (it == idx.end()) throw FormatError(path + ": missing column '" + name + "'");
  return it->second;
}

// One-sided at the ends, central elsewhere.
std::vector<double> derivative(const std::vector<double>& v, double dt) {
  const size_t n = v.size();
  std::vector<double> d(n, 0.0);
  if (n < 2) return d;
  d[0] = (v[1] - v[0]) / dt;
  d[n - 1] = (v[n - 1] - v[n - 2]) / dt;
  for (size_t i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) / (2.0 * dt);
  return d;
}

struct RawRow {
  long frame = 0;
  double x = 0, y = 0, vx = 0, vy = 0, ax = 0, ay = 0;
  bool has_lateral_rates = false;  // false -> derive vy/ay by differencing y
};

// Sorts by frame, drops duplicate frames, splits on discontinuities, and
// finishes each segment into a Track (deriving lateral rates if needed).
void finish_vehicle(const VehicleId& id, std::vector<RawRow>& rows,
                    double rate, double length, double width,
                    std::vector<Track>& out) {
  std::sort(rows.begin(), rows.end(),
            [](const RawRow& a, const RawRow& b) { return a.frame < b.frame; });
  rows.erase(std::unique(rows.begin(), rows.end(),
                         [](const RawRow& a, const RawRow& b) { return a.frame == b.frame; }),
             rows.end());
  const double dt = 1.0 / rate;
  size_t seg_begin = 0;
  for (size_t i = 0; i <= rows.size(); ++i) {
    const bool gap = i == rows.size() || (i > seg_begin && rows[i].frame != rows[i - 1].frame + 1);
    if (!gap) continue;
    Track tr;
    tr.vehicle_id = id;
    tr.length = length;
    tr.width = width;
    std::vector<double> ys;
    for (size_t j = seg_begin; j < i; ++j) {
      const RawRow& r = rows[j];
      MotionState s;
      s.t = static_cast<double>(r.frame) * dt;
      s.x = r.x;
      s.y = r.y;
      s.vx = r.vx;
      s.vy = r.vy;
      s.ax = r.ax;
      s.ay = r.ay;
      tr.states.push_back(s);
      ys.push_back(r.y);
    }
    if (!tr.states.empty() && !rows[seg_begin].has_lateral_rates) {
      const std::vector<double> vy = derivative(ys, dt);
      const std::vector<double> ay = derivative(vy, dt);
      for (size_t j = 0; j < tr.states.size(); ++j) {
        tr.states[j].vy = vy[j];
        tr.states[j].ay = ay[j];
      }
    }
    if (!tr.states.empty()) out.push_back(std::move(tr));
    seg_begin = i;
  }
}

}  // namespace

RawRecording parse_ngsim(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw FormatError(path + ": empty file");
  const auto idx = header_index(split(lines[0], ','));
  const size_t c_id = require_column(idx, "vehicle_id", path);
  const size_t c_frame = require_column(idx, "frame_id", path);
  const size_t c_lx = require_column(idx, "local_x", path);
  const size_t c_ly = require_column(idx, "local_y", path);
  const size_t c_vel = require_column(idx, "v_vel", path);
  const size_t c_acc = require_column(idx, "v_acc", path);
  const size_t c_lane = require_column(idx, "lane_id", path);
  const auto c_len = idx.find("v_length");
  const auto c_wid = idx.find("v_width");

  struct PerVehicle {
    std::vector<RawRow> rows;
    double length = 5.21, width = 2.04;  // defaults when the columns are absent
  };
  std::map<VehicleId, PerVehicle> vehicles;
  std::map<long, std::pair<double, long>> lane_acc;  // lane id -> (sum of y, count)

  for (size_t li = 1; li < lines.size(); ++li) {
    const std::string line = trim(lines[li]);
    if (line.empty()) continue;
    const size_t lineno = li + 1;
    const auto cells = split(line, ',');
    auto cell = [&](size_t c) -> const std::string& {
      if (c >= cells.size())
        throw ParseError(path + " line " + std::to_string(lineno) + ": too few fields");
      return cells[c];
    };
    const VehicleId id = trim(strip_quotes(cell(c_id)));
    if (id.empty())
      throw ParseError(path + " line " + std::to_string(lineno) + ": empty vehicle id");
    RawRow r;
    r.frame = parse_long(cell(c_frame), path, lineno);
    // feet -> meters; the dataset's Local_Y runs along the road
    r.x = parse_double(cell(c_ly), path, lineno) * kFootToMeter;
    r.y = parse_double(cell(c_lx), path, lineno) * kFootToMeter;
    r.vx = parse_double(cell(c_vel), path, lineno) * kFootToMeter;
    r.ax = parse_double(cell(c_acc), path, lineno) * kFootToMeter;
    r.has_lateral_rates = false;
    check_magnitude(r.x, path, lineno);
    check_magnitude(r.y, path, lineno);
    check_magnitude(r.vx, path, lineno);
    check_magnitude(r.ax, path, lineno);
    const long lane = parse_long(cell(c_lane), path, lineno);
    auto& pv = vehicles[id];
    if (pv.rows.empty()) {
      if (c_len != idx.end()) pv.length = parse_double(cell(c_len->second), path, lineno) * kFootToMeter;
      if (c_wid != idx.end()) pv.width = parse_double(cell(c_wid->second), path, lineno) * kFootToMeter;
    }
    pv.rows.push_back(r);
    auto& acc = lane_acc[lane];
    acc.first += r.y;
    acc.second += 1;
  }
  if (vehicles.empty()) throw FormatError(path + ": no data rows");

  RawRecording rec;
  rec.source = Source::kNgsim;
  rec.native_rate = 10.0;
  for (auto& [id, pv] : vehicles)
    finish_vehicle(id, pv.rows, rec.native_rate, pv.length, pv.width, rec.tracks);

  for (const auto& [lane, acc] : lane_acc)
    rec.lanes.lane_centers.push_back(acc.first / static_cast<double>(acc.second));
  std::sort(rec.lanes.lane_centers.begin(), rec.lanes.lane_centers.end());
  if (rec.lanes.lane_centers.size() >= 2) {
    double gap = 0.0;
    for (size_t i = 0; i + 1 < rec.lanes.lane_centers.size(); ++i)
      gap += rec.lanes.lane_centers[i + 1] - rec.lanes.lane_centers[i];
    rec.lanes.lane_width = gap / static_cast<double>(rec.lanes.lane_centers.size() - 1);
  }
  return rec;
}

RawRecording parse_highd(const std::string& tracks_path, const std::string& meta_path) {
  // recording meta: one data row; frame rate and lane markings
  const std::vector<std::string> meta_lines = read_lines(meta_path);
  if (meta_lines.size() < 2) throw FormatError(meta_path + ": expected header and one data row");
  const auto midx = header_index(split(meta_lines[0], ','));
  const size_t m_rate = require_column(midx, "framerate", meta_path);
  const size_t m_upper = require_column(midx, "upperlanemarkings", meta_path);
  const size_t m_lower = require_column(midx, "lowerlanemarkings", meta_path);
  const auto mcells = split(meta_lines[1], ',');
  auto mcell = [&](size_t c) -> const std::string& {
    if (c >= mcells.size()) throw ParseError(meta_path + " line 2: too few fields");
    return mcells[c];
  };
  const double rate = parse_double(mcell(m_rate), meta_path, 2);
  if (std::abs(rate - 25.0) > 1e-9)
    throw FormatError(meta_path + ": frame rate " + trim(mcell(m_rate)) + ", expected 25");

  auto parse_markings = [&](const std::string& field) {
    std::vector<double> marks;
    for (const std::string& part : split(strip_quotes(trim(field)), ';')) {
      if (trim(part).empty()) continue;
      marks.push_back(parse_double(part, meta_path, 2));
    }
    std::sort(marks.begin(), marks.end());
    return marks;
  };
  const std::vector<double> upper = parse_markings(mcell(m_upper));
  const std::vector<double> lower = parse_markings(mcell(m_lower));

  RawRecording rec;
  rec.source = Source::kHighd;
  rec.native_rate = 25.0;
  double gap_sum = 0.0;
  long gap_count = 0;
  for (const auto* marks : {&upper, &lower}) {
    for (size_t i = 0; i + 1 < marks->size(); ++i) {
      rec.lanes.lane_centers.push_back(((*marks)[i] + (*marks)[i + 1]) / 2.0);
      gap_sum += (*marks)[i + 1] - (*marks)[i];
      gap_count += 1;
    }
  }
  std::sort(rec.lanes.lane_centers.begin(), rec.lanes.lane_centers.end());
  if (gap_count > 0) rec.lanes.lane_width = gap_sum / static_cast<double>(gap_count);

  // tracks file: box corners + per-axis rates, in meters
  const std::vector<std::string> lines = read_lines(tracks_path);
  if (lines.empty()) throw FormatError(tracks_path + ": empty file");
  const auto idx = header_index(split(lines[0], ','));
  const size_t c_frame = require_column(idx, "frame", tracks_path);
  const size_t c_id = require_column(idx, "id", tracks_path);
  const size_t c_x = require_column(idx, "x", tracks_path);
  const size_t c_y = require_column(idx, "y", tracks_path);
  const size_t c_w = require_column(idx, "width", tracks_path);
  const size_t c_h = require_column(idx, "height", tracks_path);
  const size_t c_vx = require_column(idx, "xvelocity", tracks_path);
  const size_t c_vy = require_column(idx, "yvelocity", tracks_path);
  const size_t c_ax = require_column(idx, "xacceleration", tracks_path);
  const size_t c_ay = require_column(idx, "yacceleration", tracks_path);

  struct PerVehicle {
    std::vector<RawRow> rows;
    double length = 0.0, width = 0.0;
  };
  std::map<VehicleId, PerVehicle> vehicles;
  for (size_t li = 1; li < lines.size(); ++li) {
    const std::string line = trim(lines[li]);
    if (line.empty()) continue;
    const size_t lineno = li + 1;
    const auto cells = split(line, ',');
    auto cell = [&](size_t c) -> const std::string& {
      if (c >= cells.size())
        throw ParseError(tracks_path + " line " + std::to_string(lineno) + ": too few fields");
      return cells[c];
    };
    const VehicleId id = trim(strip_quotes(cell(c_id)));
    if (id.empty())
      throw ParseError(tracks_path + " line " + std::to_string(lineno) + ": empty vehicle id");
    const double box_w = parse_double(cell(c_w), tracks_path, lineno);   // along x = length
    const double box_h = parse_double(cell(c_h), tracks_path, lineno);   // along y = width
    RawRow r;
    r.frame = parse_long(cell(c_frame), tracks_path, lineno);
    r.x = parse_double(cell(c_x), tracks_path, lineno) + box_w / 2.0;
    r.y = parse_double(cell(c_y), tracks_path, lineno) + box_h / 2.0;
    r.vx = parse_double(cell(c_vx), tracks_path, lineno);
    r.vy = parse_double(cell(c_vy), tracks_path, lineno);
    r.ax = parse_double(cell(c_ax), tracks_path, lineno);
    r.ay = parse_double(cell(c_ay), tracks_path, lineno);
    r.has_lateral_rates = true;
    check_magnitude(r.x, tracks_path, lineno);
    check_magnitude(r.y, tracks_path, lineno);
    check_magnitude(r.vx, tracks_path, lineno);
    check_magnitude(r.vy, tracks_path, lineno);
    check_magnitude(r.ax, tracks_path, lineno);
    check_magnitude(r.ay, tracks_path, lineno);
    auto& pv = vehicles[id];
    if (pv.rows.empty()) {
      pv.length = box_w;
      pv.width = box_h;
    }
    pv.rows.push_back(r);
  }
  if (vehicles.empty()) throw FormatError(tracks_path + ": no data rows");

  for (auto& [id, pv] : vehicles) {
    const size_t first = rec.tracks.size();
    finish_vehicle(id, pv.rows, rec.native_rate, pv.length, pv.width, rec.tracks);
    // normalize driving direction: x must increase along travel
    for (size_t ti = first; ti < rec.tracks.size(); ++ti) {
      Track& tr = rec.tracks[ti];
      double mean_vx = 0.0;
      for (const MotionState& s : tr.states) mean_vx += s.vx;
      if (mean_vx / static_cast<double>(tr.states.size()) >= 0.0) continue;
      for (MotionState& s : tr.states) {
        s.x = -s.x;
        s.vx = -s.vx;
        s.ax = -s.ax;
      }
    }
  }
  return rec;
}

std::vector<double> butterworth_forward(const std::vector<double>& series,
                                        double fc, double fs) {
  if (fc <= 0.0 || fs <= 0.0) throw InvalidParameter("butterworth: fc and fs must be positive");
  if (fs <= 2.0 * fc) throw InvalidParameter("butterworth: fs must exceed 2*fc");
  if (series.size() < 2) throw InvalidParameter("butterworth: series shorter than 2");
  // bilinear transform of 1/(1 + s/wc) with prewarped cutoff
  const double alpha = std::tan(M_PI * fc / fs);
  const double b0 = alpha / (1.0 + alpha);
  const double b1 = b0;
  const double a1 = (alpha - 1.0) / (1.0 + alpha);
  std::vector<double> out(series.size());
  double prev_x = series[0];
  double prev_y = series[0];  // settles the filter so constants pass through
  for (size_t i = 0; i < series.size(); ++i) {
    const double y = b0 * series[i] + b1 * prev_x - a1 * prev_y;
    out[i] = y;
    prev_x = series[i];
    prev_y = y;
  }
  return out;
}

std::vector<double> butterworth_lowpass(const std::vector<double>& series,
                                        double fc, double fs) {
  std::vector<double> y = butterworth_forward(series, fc, fs);
  std::reverse(y.begin(), y.end());
  y = butterworth_forward(y, fc, fs);
  std::reverse(y.begin(), y.end());
  return y;
}

void filter_recording(RawRecording& recording, double fc) {
  for (Track& tr : recording.tracks) {
    const size_t n = tr.states.size();
    if (n < 2) continue;
    auto apply = [&](double MotionState::* field) {
      std::vector<double> series(n);
      for (size_t i = 0; i < n; ++i) series[i] = tr.states[i].*field;
      series = butterworth_lowpass(series, fc, recording.native_rate);
      for (size_t i = 0; i < n; ++i) tr.states[i].*field = series[i];
    };
    apply(&MotionState::x);
    apply(&MotionState::y);
    apply(&MotionState::vx);
    apply(&MotionState::vy);
    apply(&MotionState::ax);
    apply(&MotionState::ay);
  }
}

Track resample(const Track& track, double dt) {
  if (dt <= 0.0) throw InvalidParameter("resample: dt must be positive");
  if (track.states.size() < 2)
    throw ResampleError("resample: track " + track.vehicle_id + " has fewer than 2 states");
  const double step = track.dt();
  const double ratio = dt / step;
  const long k = std::lround(ratio);
  if (k < 1 || std::abs(ratio - static_cast<double>(k)) > 1e-6)
    throw ResampleError("resample: step " + std::to_string(step) + " s does not divide " +
                        std::to_string(dt) + " s");
  // phase-align so the retained timestamps are exact multiples of dt
  long start = -1;
  for (long i = 0; i < k && i < static_cast<long>(track.states.size()); ++i) {
    const double m = track.states[static_cast<size_t>(i)].t / dt;
    if (std::abs(m - std::llround(m)) < 1e-6) {
      start = i;
      break;
    }
  }
  if (start < 0)
    throw ResampleError("resample: track " + track.vehicle_id + " never lands on the output grid");
  Track out;
  out.vehicle_id = track.vehicle_id;
  out.length = track.length;
  out.width = track.width;
  const long base = std::llround(track.states[static_cast<size_t>(start)].t / dt);
  for (size_t i = static_cast<size_t>(start); i < track.states.size(); i += static_cast<size_t>(k)) {
    MotionState s = track.states[i];
    const long j = static_cast<long>((i - static_cast<size_t>(start)) / static_cast<size_t>(k));
    s.t = static_cast<double>(base + j) * dt;  // reissue exactly on the grid
    out.states.push_back(s);
  }
  return out;
}

std::vector<Sample> extract_windows(const RawRecording& recording,
                                    const GridOptions& opts,
                                    double stride,
                                    const std::string& recording_label) {
  const double dt = kDt;
  const long stride_steps = std::lround(stride / dt);
  if (stride_steps < 1 || std::abs(static_cast<double>(stride_steps) * dt - stride) > 1e-9)
    throw InvalidParameter("extract_windows: stride must be a positive multiple of the sample step");
  recording.lanes.validate();

  std::vector<const Track*> tracks;
  for (const Track& tr : recording.tracks) {
    if (tr.states.size() >= 2 && std::abs(tr.dt() - dt) > 1e-6)
      throw InvalidParameter("extract_windows: track " + tr.vehicle_id + " is not resampled");
    tracks.push_back(&tr);
  }
  std::sort(tracks.begin(), tracks.end(), [](const Track* a, const Track* b) {
    if (a->vehicle_id != b->vehicle_id) return a->vehicle_id < b->vehicle_id;
    return a->states.front().t < b->states.front().t;
  });

  // time key (in dt ticks) -> every vehicle present at that instant
  std::unordered_map<long, std::vector<FrameEntry>> frames;
  for (const Track* tr : tracks)
    for (const MotionState& s : tr->states)
      frames[std::llround(s.t / dt)].push_back(FrameEntry{tr, s});

  const int kH = kHistoryLen;  // history steps including t0
  const int kF = kFutureLen;
  std::vector<Sample> samples;
  for (const Track* tr : tracks) {
    const long n = static_cast<long>(tr->states.size());
    for (long idx0 = kH - 1; idx0 + kF < n; idx0 += stride_steps) {
      const MotionState& s0 = tr->states[static_cast<size_t>(idx0)];
      ContextGrid grid;
      try {
        grid = assign_context_grid(frames.at(std::llround(s0.t / dt)), tr->vehicle_id,
                                   recording.lanes, opts);
      } catch (const MissingVehicle&) {
        continue;  // OV off the lane map at t0: no usable context
      }

      Sample sample;
      sample.t0 = s0.t;
      {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f", s0.t);
        sample.id = recording_label + ":" + tr->vehicle_id + ":t" + buf;
      }
      for (long j = idx0 - (kH - 1); j <= idx0; ++j)
        sample.ov_history.push_back(tr->states[static_cast<size_t>(j)]);
      for (long j = idx0 + 1; j <= idx0 + kF; ++j)
        sample.ov_future.push_back({tr->states[static_cast<size_t>(j)].x,
                                    tr->states[static_cast<size_t>(j)].y});

      const auto& frame = frames.at(std::llround(s0.t / dt));
      for (int cell : grid.occupied_sv_cells()) {
        const VehicleId& sv_id = grid.cells[static_cast<size_t>(cell)];
        const Track* sv_track = nullptr;
        for (const FrameEntry& fe : frame)
          if (fe.track->vehicle_id == sv_id) {
            sv_track = fe.track;
            break;
          }
        const long sv_idx = std::llround((s0.t - sv_track->states.front().t) / dt);
        if (sv_idx < kH - 1) {
          grid.cells[static_cast<size_t>(cell)].clear();  // too little history: treat as absent
          continue;
        }
        SvHistory hist;
        hist.cell = cell;
        hist.vehicle_id = sv_id;
        for (int s = 0; s < kH; ++s) {
          const MotionState& sv = sv_track->states[static_cast<size_t>(sv_idx - (kH - 1) + s)];
          const MotionState& ov = tr->states[static_cast<size_t>(idx0 - (kH - 1) + s)];
          hist.states.push_back({sv.x, sv.y, sv.vx, sv.vy, sv.ax, sv.ay,
                                 sv.x - ov.x, sv.y - ov.y, sv.vx - ov.vx,
                                 sv.vy - ov.vy, sv.ax - ov.ax, sv.ay - ov.ay});
        }
        sample.sv_histories.push_back(std::move(hist));
      }
      sample.grid = grid;
      sample.validate();
      samples.push_back(std::move(sample));
    }
  }
  return samples;
}

std::string SplitManifest::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["train"] = train;
  j["val"] = val;
  j["test"] = test;
  return j.dump(2) + "\n";
}

SplitManifest SplitManifest::from_json(const std::string& text) {
  SplitManifest m;
  try {
    const ordered_json j = ordered_json::parse(text);
    m.seed = j.at("seed").get<std::uint64_t>();
    m.train = j.at("train").get<std::vector<std::string>>();
    m.val = j.at("val").get<std::vector<std::string>>();
    m.test = j.at("test").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("split manifest: ") + e.what());
  }
  return m;
}

SplitManifest split_dataset(const std::vector<Sample>& samples, std::uint64_t seed) {
  const size_t n = samples.size();
  if (n < 10)
    throw InsufficientData("split_dataset: need at least 10 samples, got " + std::to_string(n));
  std::vector<std::string> ids;
  ids.reserve(n);
  for (const Sample& s : samples) ids.push_back(s.id);
  std::mt19937_64 rng(seed);
  for (size_t i = n - 1; i > 0; --i) {
    const size_t j = static_cast<size_t>(rng() % (i + 1));
    std::swap(ids[i], ids[j]);
  }
  const auto n_train = static_cast<size_t>(std::llround(0.7 * static_cast<double>(n)));
  const auto n_val = static_cast<size_t>(std::llround(0.1 * static_cast<double>(n)));
  SplitManifest m;
  m.seed = seed;
  m.train.assign(ids.begin(), ids.begin() + static_cast<long>(n_train));
  m.val.assign(ids.begin() + static_cast<long>(n_train),
               ids.begin() + static_cast<long>(n_train + n_val));
  m.test.assign(ids.begin() + static_cast<long>(n_train + n_val), ids.end());
  return m;
}

SplitSets apply_split(const std::vector<Sample>& samples, const SplitManifest& manifest) {
  std::unordered_map<std::string, const Sample*> by_id;
  for (const Sample& s : samples) by_id[s.id] = &s;
  auto gather = [&](const std::vector<std::string>& ids) {
    std::vector<Sample> out;
    out.reserve(ids.size());
    for (const std::string& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end())
        throw InvalidValue("apply_split: manifest references unknown sample '" + id + "'");
      out.push_back(*it->second);
    }
    return out;
  };
  SplitSets sets;
  sets.train = gather(manifest.train);
  sets.val = gather(manifest.val);
  sets.test = gather(manifest.test);
  return sets;
}

namespace {

ordered_json sample_to_json(const Sample& s) {
  ordered_json j;
  j["id"] = s.id;
  j["t0"] = s.t0;
  j["grid"] = s.grid.cells;
  ordered_json hist = ordered_json::array();
  for (const MotionState& m : s.ov_history)
    hist.push_back({m.t, m.x, m.y, m.vx, m.vy, m.ax, m.ay});
  j["ov_history"] = std::move(hist);
  ordered_json svs = ordered_json::array();
  for (const SvHistory& h : s.sv_histories) {
    ordered_json sv;
    sv["cell"] = h.cell;
    sv["vehicle_id"] = h.vehicle_id;
    ordered_json states = ordered_json::array();
    for (const SvState& st : h.states) states.push_back(st);
    sv["states"] = std::move(states);
    svs.push_back(std::move(sv));
  }
  j["sv_histories"] = std::move(svs);
  ordered_json fut = ordered_json::array();
  for (const auto& p : s.ov_future) fut.push_back({p[0], p[1]});
  j["ov_future"] = std::move(fut);
  return j;
}

Sample sample_from_json(const ordered_json& j) {
  Sample s;
  s.id = j.at("id").get<std::string>();
  s.t0 = j.at("t0").get<double>();
  const auto grid = j.at("grid").get<std::vector<std::string>>();
  if (grid.size() != s.grid.cells.size()) throw FormatError("sample " + s.id + ": bad grid size");
  std::copy(grid.begin(), grid.end(), s.grid.cells.begin());
  for (const auto& row : j.at("ov_history")) {
    const auto v = row.get<std::vector<double>>();
    if (v.size() != 7) throw FormatError("sample " + s.id + ": bad history row");
    s.ov_history.push_back(MotionState{v[0], v[1], v[2], v[3], v[4], v[5], v[6]});
  }
  for (const auto& sv : j.at("sv_histories")) {
    SvHistory h;
    h.cell = sv.at("cell").get<int>();
    h.vehicle_id = sv.at("vehicle_id").get<std::string>();
    for (const auto& row : sv.at("states")) h.states.push_back(row.get<SvState>());
    s.sv_histories.push_back(std::move(h));
  }
  for (const auto& row : j.at("ov_future")) {
    const auto v = row.get<std::vector<double>>();
    if (v.size() != 2) throw FormatError("sample " + s.id + ": bad future row");
    s.ov_future.push_back({v[0], v[1]});
  }
  s.validate();
  return s;
}

}  // namespace

void write_samples_jsonl(const std::string& path, const std::vector<Sample>& samples) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (const Sample& s : samples) out << sample_to_json(s).dump() << "\n";
}

std::vector<Sample> read_samples_jsonl(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  std::vector<Sample> samples;
  for (size_t li = 0; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    try {
      samples.push_back(sample_from_json(ordered_json::parse(lines[li])));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + " line " + std::to_string(li + 1) + ": " + e.what());
    }
  }
  return samples;
}

}  // namespace predrisk
