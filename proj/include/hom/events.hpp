#ifndef HOM_EVENTS_HPP
#define HOM_EVENTS_HPP

#include <cstdint>
#include <string>

namespace hom {

/// Output ports of the recombining beam splitter, each watched by one APD.
enum class Channel : std::uint8_t { three = 3, four = 4 };

inline int channel_number(Channel c) { return static_cast<int>(c); }
inline std::size_t channel_slot(Channel c) { return c == Channel::three ? 0 : 1; }

/// One detector click.
struct DetectionEvent {
  Channel channel = Channel::three;
  double time = 0.0;

  bool operator==(const DetectionEvent&) const = default;
};

inline bool earlier(const DetectionEvent& a, const DetectionEvent& b) {
  if (a.time != b.time) return a.time < b.time;
  return a.channel < b.channel;
}

}  // namespace hom

#endif  // HOM_EVENTS_HPP
