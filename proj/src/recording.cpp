#include "ogrit/recording.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ogrit {

void Recording::validate() const {
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (!(frames[i].time > frames[i - 1].time)) {
      throw ValidationError("recording " + episode_id + ": frame times not strictly increasing at index " +
                            std::to_string(i));
    }
  }
  std::map<VehicleId, std::size_t> last_seen;
  std::set<VehicleId> finished;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    for (const auto& [id, state] : frames[i].states) {
      if (finished.contains(id)) {
        throw ValidationError("recording " + episode_id + ": vehicle " + std::to_string(id) +
                              " reappears after leaving");
      }
      last_seen[id] = i;
    }
    for (const auto& [id, idx] : last_seen) {
      if (idx + 1 == i && !frames[i].states.contains(id)) finished.insert(id);
    }
  }
}

std::vector<VehicleId> Recording::vehicle_ids() const {
  std::set<VehicleId> ids;
  for (const auto& f : frames) {
    for (const auto& [id, s] : f.states) ids.insert(id);
  }
  return {ids.begin(), ids.end()};
}

std::size_t Recording::nearest_frame(double t) const {
  if (frames.empty()) throw ContractViolation("nearest_frame on empty recording");
  const auto it = std::lower_bound(frames.begin(), frames.end(), t,
                                   [](const TimedFrame& f, double v) { return f.time < v; });
  if (it == frames.begin()) return 0;
  if (it == frames.end()) return frames.size() - 1;
  const std::size_t hi = static_cast<std::size_t>(it - frames.begin());
  return (t - frames[hi - 1].time <= it->time - t) ? hi - 1 : hi;
}

namespace {

std::vector<std::string_view> split_row(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& cell : out) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.remove_suffix(1);
    while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
  }
  return out;
}

double parse_double(std::string_view cell, std::size_t row, std::string_view column) {
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
    throw ParseError("CSV row " + std::to_string(row) + ": bad value '" + std::string(cell) +
                     "' in column " + std::string(column));
  }
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct Row {
  long frame{0};
  double x{0}, y{0}, heading_deg{0}, width{1.8}, length{4.5};
  std::optional<double> vx, vy, ax, ay;
};

}  // namespace

Recording recording_from_csv_text(const std::string& text, double frame_rate,
                                  std::string scenario_id, std::string episode_id) {
  if (frame_rate <= 0.0) throw ValidationError("frame rate must be positive");
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("CSV is empty");
  const auto header = split_row(line);
  std::map<std::string, std::size_t, std::less<>> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(std::string(header[i]), i);
  for (const char* required : {"trackId", "frame", "xCenter", "yCenter", "heading"}) {
    if (!col.contains(required)) {
      throw ParseError(std::string("CSV schema: missing column '") + required + "'");
    }
  }
  auto optional_col = [&](const char* name) -> std::optional<std::size_t> {
    const auto it = col.find(name);
    return it == col.end() ? std::nullopt : std::optional<std::size_t>(it->second);
  };
  const auto c_width = optional_col("width");
  const auto c_length = optional_col("length");
  const auto c_vx = optional_col("xVelocity");
  const auto c_vy = optional_col("yVelocity");
  const auto c_ax = optional_col("xAcceleration");
  const auto c_ay = optional_col("yAcceleration");

  std::map<VehicleId, std::vector<Row>> tracks;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_row(line);
    if (cells.size() != header.size()) {
      throw ParseError("CSV row " + std::to_string(row_no) + ": expected " +
                       std::to_string(header.size()) + " cells");
    }
    auto get = [&](std::size_t c, std::string_view name) { return parse_double(cells[c], row_no, name); };
    Row r;
    const auto id = static_cast<VehicleId>(get(col.find("trackId")->second, "trackId"));
    r.frame = static_cast<long>(get(col.find("frame")->second, "frame"));
    r.x = get(col.find("xCenter")->second, "xCenter");
    r.y = get(col.find("yCenter")->second, "yCenter");
    r.heading_deg = get(col.find("heading")->second, "heading");
    if (c_width) r.width = get(*c_width, "width");
    if (c_length) r.length = get(*c_length, "length");
    if (c_vx && c_vy) {
      r.vx = get(*c_vx, "xVelocity");
      r.vy = get(*c_vy, "yVelocity");
    }
    if (c_ax && c_ay) {
      r.ax = get(*c_ax, "xAcceleration");
      r.ay = get(*c_ay, "yAcceleration");
    }
    auto& track = tracks[id];
    if (!track.empty() && r.frame <= track.back().frame) {
      throw ValidationError("CSV row " + std::to_string(row_no) + ": frames of track " +
                            std::to_string(id) + " not increasing");
    }
    track.push_back(r);
  }

  std::map<long, Frame> by_frame;
  for (const auto& [id, rows] : tracks) {
    std::vector<double> speeds(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].vx) {
        speeds[i] = std::hypot(*rows[i].vx, *rows[i].vy);
      } else if (rows.size() > 1) {
        const std::size_t a = i == 0 ? 0 : i - 1;
        const std::size_t b = i == 0 ? 1 : i;
        const double dt = static_cast<double>(rows[b].frame - rows[a].frame) / frame_rate;
        speeds[i] = std::hypot(rows[b].x - rows[a].x, rows[b].y - rows[a].y) / dt;
      }
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Row& r = rows[i];
      const double heading = r.heading_deg * std::numbers::pi / 180.0;
      double accel = 0.0;
      if (r.ax) {
        accel = *r.ax * std::cos(heading) + *r.ay * std::sin(heading);
      } else if (rows.size() > 1) {
        const std::size_t a = i == 0 ? 0 : i - 1;
        const std::size_t b = i == 0 ? 1 : i;
        const double dt = static_cast<double>(rows[b].frame - rows[a].frame) / frame_rate;
        accel = (speeds[b] - speeds[a]) / dt;
      }
      const double t = static_cast<double>(r.frame) / frame_rate;
      by_frame[r.frame].emplace(id, VehicleState(id, t, {r.x, r.y}, heading, speeds[i], accel, r.length, r.width));
    }
  }

  Recording rec;
  rec.scenario_id = std::move(scenario_id);
  rec.episode_id = std::move(episode_id);
  rec.frame_rate = frame_rate;
  for (auto& [frame, states] : by_frame) {
    rec.frames.push_back({static_cast<double>(frame) / frame_rate, std::move(states)});
  }
  rec.validate();
  return rec;
}

Recording ingest_csv(const std::filesystem::path& path, double frame_rate, std::string scenario_id,
                     std::string episode_id) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open recording " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (episode_id.empty()) episode_id = path.stem().string();
  return recording_from_csv_text(buf.str(), frame_rate, std::move(scenario_id), std::move(episode_id));
}

std::string recording_to_csv_text(const Recording& recording) {
  std::ostringstream out;
  out << "trackId,frame,trackLifetime,xCenter,yCenter,heading,width,length,xVelocity,yVelocity,"
         "xAcceleration,yAcceleration\n";
  std::map<VehicleId, long> first_frame;
  std::map<VehicleId, std::vector<std::pair<long, const VehicleState*>>> tracks;
  for (const auto& f : recording.frames) {
    const long frame = std::lround(f.time * recording.frame_rate);
    for (const auto& [id, s] : f.states) tracks[id].emplace_back(frame, &s);
  }
  for (const auto& [id, rows] : tracks) {
    const long first = rows.front().first;
    for (const auto& [frame, s] : rows) {
      const double c = std::cos(s->heading);
      const double sn = std::sin(s->heading);
      double deg = s->heading * 180.0 / std::numbers::pi;
      if (deg < 0) deg += 360.0;
      if (deg >= 360.0) deg -= 360.0;
      out << id << ',' << frame << ',' << (frame - first) << ',' << format_double(s->position.x) << ','
          << format_double(s->position.y) << ',' << format_double(deg) << ','
          << format_double(s->width) << ',' << format_double(s->length) << ','
          << format_double(s->speed * c) << ',' << format_double(s->speed * sn) << ','
          << format_double(s->acceleration * c) << ',' << format_double(s->acceleration * sn) << '\n';
    }
  }
  return out.str();
}

void write_csv(const Recording& recording, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw OgritError("cannot write " + path.string());
  out << recording_to_csv_text(recording);
}

}  // namespace ogrit
