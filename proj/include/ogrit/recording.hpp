#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ogrit/scene.hpp"

namespace ogrit {

struct TimedFrame {
  double time{0.0};
  Frame states;
};

/// One continuous episode of trajectory data.
struct Recording {
  std::string scenario_id;
  std::string episode_id;
  double frame_rate{25.0};
  std::vector<TimedFrame> frames;

  /// Throws ValidationError if frame times are not strictly increasing or a vehicle
  /// disappears and reappears.
  void validate() const;

  /// Every vehicle id present in any frame, ascending.
  [[nodiscard]] std::vector<VehicleId> vehicle_ids() const;
  /// Index of the frame whose time is nearest `t`.
  [[nodiscard]] std::size_t nearest_frame(double t) const;
};

/// Reads an inD-family trajectory CSV. Requires trackId, frame, xCenter, yCenter and
/// heading columns; velocity and acceleration columns are optional.
Recording ingest_csv(const std::filesystem::path& path, double frame_rate,
                     std::string scenario_id = {}, std::string episode_id = {});
Recording recording_from_csv_text(const std::string& text, double frame_rate,
                                  std::string scenario_id = {}, std::string episode_id = {});

/// Writes the inD-family CSV; `ingest_csv` reproduces the recording.
void write_csv(const Recording& recording, const std::filesystem::path& path);
std::string recording_to_csv_text(const Recording& recording);

}  // namespace ogrit
