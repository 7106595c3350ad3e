#pragma once

// Event list codecs. Layouts are specified byte for byte in docs/formats.md.
//
// CSV:    "# motrims-events <major>.<minor>" line, header row, one event per
//         row, doubles printed with 17 significant digits (lossless).
// Binary: magic "MOTR1", u16 major, u16 minor, u32 flags, u64 count, then
//         fixed-size little-endian records.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "motrims/apparatus.hpp"

namespace motrims::io {

inline constexpr std::uint16_t kEventFormatMajor = 1;
inline constexpr std::uint16_t kEventFormatMinor = 0;

struct EventFile {
  std::vector<apparatus::DetectorEvent> events;
  bool has_truth = false;
};

// Truth columns are written when every event carries truth.
void write_events_csv(std::ostream& out, std::span<const apparatus::DetectorEvent> events);
void write_events_binary(std::ostream& out, std::span<const apparatus::DetectorEvent> events);

// DataError with the line number (CSV) or record index (binary) on malformed
// input, and for a newer major version.
EventFile read_events_csv(std::istream& in, const std::string& origin = "<csv>");
EventFile read_events_binary(std::istream& in, const std::string& origin = "<bin>");

// Writers pick the codec by flag; read_events sniffs the magic bytes.
void write_events(const std::string& path, std::span<const apparatus::DetectorEvent> events, bool binary);
EventFile read_events(const std::string& path);

}  // namespace motrims::io
