#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "smjp/core.hpp"

namespace smjp {

struct Event {
  double time = 0.0;  // seconds
  int observation = 0;
  int action = 0;
};

/// Time-ordered observation/action record. The action attached to an event
/// is the one in force until the next event.
struct EventSequence {
  std::string id;
  Alphabet observations{AlphabetKind::Observation, {"o0"}};
  Alphabet actions{AlphabetKind::Action, {"a0"}};
  std::vector<Event> events;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return events.size(); }
  bool empty() const { return events.empty(); }
  double duration() const { return events.empty() ? 0.0 : events.back().time - events.front().time; }

  /// Throws NonMonotoneTimestamps or UnknownSymbol.
  void validate() const;

  /// Events [begin, end) under the same alphabets, id suffixed.
  EventSequence slice(std::size_t begin, std::size_t end, const std::string& suffix) const;

  /// Chronological split: the first `train_fraction` of events and the rest.
  std::pair<EventSequence, EventSequence> split_chronological(double train_fraction) const;

  /// Content digest (FNV-1a over times and symbols), stable across runs.
  std::uint64_t digest() const;
};

}  // namespace smjp
