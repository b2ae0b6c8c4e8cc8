#pragma once

#include <cstdint>
#include <vector>

#include "shipgate/qtensor.hpp"

namespace shipgate {

// One non-zero activation. Zero values never become events, so zero-padded
// borders and silent channels cost nothing downstream.
struct Event {
  int channel = 0;
  int row = 0;
  int col = 0;
  std::int32_t value = 0;

  bool operator==(const Event&) const = default;
};

struct EventList {
  std::vector<Event> events;
  Shape source_shape;

  double density() const {
    const std::int64_t n = source_shape.size();
    return n == 0 ? 0.0 : static_cast<double>(events.size()) / static_cast<double>(n);
  }

  void validate() const {
    const Event* prev = nullptr;
    for (const Event& e : events) {
      if (e.value == 0) fail(ErrorCategory::validation, "zero-valued event");
      if (e.channel < 0 || e.channel >= source_shape.channels || e.row < 0 ||
          e.row >= source_shape.height || e.col < 0 || e.col >= source_shape.width)
        fail(ErrorCategory::validation, "event coordinate outside source shape");
      if (prev) {
        const auto key = [](const Event& ev) {
          return std::tuple{ev.channel, ev.row, ev.col};
        };
        if (!(key(*prev) < key(e)))
          fail(ErrorCategory::validation,
               "events not in strict (channel,row,col) order");
      }
      prev = &e;
    }
  }
};

// Exactly the non-zero entries, in (channel, row, col) lexicographic order.
inline EventList to_events(const QuantTensor& t) {
  EventList out;
  out.source_shape = t.shape;
  for (int c = 0; c < t.shape.channels; ++c)
    for (int y = 0; y < t.shape.height; ++y)
      for (int x = 0; x < t.shape.width; ++x) {
        const std::int32_t v = t.at(c, y, x);
        if (v != 0) out.events.push_back({c, y, x, v});
      }
  return out;
}

}  // namespace shipgate
