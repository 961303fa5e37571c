#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "janus/magnetics.hpp"

namespace janus {

struct ScheduleSegment {
  double t_start = 0.0;  // s
  FieldCommand command;
};

/// Piecewise-constant global field over [0, duration].
struct ControlSchedule {
  std::vector<ScheduleSegment> segments;
  double duration = 0.0;  // s

  void validate() const {
    if (!(duration >= 0.0) || !std::isfinite(duration))
      throw ScheduleError("duration must be finite and >= 0");
    if (segments.empty()) throw ScheduleError("schedule has no segments");
    if (segments.front().t_start != 0.0) throw ScheduleError("first segment must start at t = 0");
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& s = segments[i];
      try {
        s.command.validate();
      } catch (const Error& e) {
        throw ScheduleError("segment " + std::to_string(i) + ": " + e.what());
      }
      if (i > 0 && !(s.t_start > segments[i - 1].t_start))
        throw ScheduleError("segment start times must be strictly increasing");
      if (i > 0 && !(s.t_start < duration))
        throw ScheduleError("segment " + std::to_string(i) + " starts at or after duration");
    }
  }

  /// Index of the segment active at time t (segments are half-open [start, next)).
  std::size_t segment_index(double t) const {
    std::size_t idx = 0;
    for (std::size_t i = 1; i < segments.size(); ++i)
      if (segments[i].t_start <= t) idx = i;
    return idx;
  }

  const FieldCommand& command_at(double t) const { return segments[segment_index(t)].command; }

  double segment_end(std::size_t idx) const {
    return idx + 1 < segments.size() ? segments[idx + 1].t_start : duration;
  }

  static ControlSchedule constant(FieldCommand cmd, double duration) {
    return {{{0.0, cmd}}, duration};
  }
};

}  // namespace janus
