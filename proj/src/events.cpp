#include "smjp/events.hpp"

#include <cmath>
#include <algorithm>
#include <cstring>

namespace smjp {

void EventSequence::validate() const {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (!std::isfinite(e.time))
      throw Error(ErrorCode::NonFinite, "event " + std::to_string(i) + " has a non-finite time");
    if (i > 0 && !(e.time > events[i - 1].time))
      throw Error(ErrorCode::NonMonotoneTimestamps, "event " + std::to_string(i) + " is not after its predecessor");
    if (e.observation < 0 || static_cast<std::size_t>(e.observation) >= observations.size())
      throw Error(ErrorCode::UnknownSymbol, "event " + std::to_string(i) + " has an observation outside the alphabet");
    if (e.action < 0 || static_cast<std::size_t>(e.action) >= actions.size())
      throw Error(ErrorCode::UnknownSymbol, "event " + std::to_string(i) + " has an action outside the alphabet");
  }
}

EventSequence EventSequence::slice(std::size_t begin, std::size_t end, const std::string& suffix) const {
  EventSequence out;
  out.id = id + suffix;
  out.observations = observations;
  out.actions = actions;
  out.metadata = metadata;
  end = std::min(end, events.size());
  if (begin < end) out.events.assign(events.begin() + static_cast<std::ptrdiff_t>(begin),
                                     events.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

std::pair<EventSequence, EventSequence> EventSequence::split_chronological(double train_fraction) const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorCode::InvalidConfig, "train fraction must lie in (0,1)");
  const auto cut = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(events.size())));
  return {slice(0, cut, "/train"), slice(cut, events.size(), "/heldout")};
}

std::uint64_t EventSequence::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const Event& e : events) {
    std::uint64_t bits;
    std::memcpy(&bits, &e.time, sizeof bits);
    feed(&bits, sizeof bits);
    const std::int32_t sym[2] = {e.observation, e.action};
    feed(sym, sizeof sym);
  }
  return h;
}

}  // namespace smjp
