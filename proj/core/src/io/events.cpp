#include "motrims/io/events.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "motrims/error.hpp"

namespace motrims::io {

namespace {

constexpr std::string_view kCsvTag = "# motrims-events ";
constexpr std::string_view kHeaderBase = "event_id,t_us,x_mm,y_mm";
constexpr std::string_view kHeaderTruth =
    "event_id,t_us,x_mm,y_mm,truth_px_au,truth_py_au,truth_pz_au,truth_x_mm,truth_y_mm,truth_z_mm,channel";
constexpr std::array<char, 5> kMagic{'M', 'O', 'T', 'R', '1'};
constexpr std::uint32_t kFlagTruth = 1u;

bool all_truth(std::span<const apparatus::DetectorEvent> events) {
  if (events.empty()) return false;
  for (const auto& e : events) {
    if (!e.truth) return false;
  }
  return true;
}

void put_double(std::string& line, double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  line.append(buf, static_cast<std::size_t>(n));
}

// Major/minor from "M.m"; DataError if unreadable or too new.
void check_version(std::string_view text, const std::string& where) {
  unsigned major = 0, minor = 0;
  const char* end = text.data() + text.size();
  auto r1 = std::from_chars(text.data(), end, major);
  if (r1.ec != std::errc() || r1.ptr == end || *r1.ptr != '.') throw DataError(where + ": unreadable format version");
  auto r2 = std::from_chars(r1.ptr + 1, end, minor);
  if (r2.ec != std::errc()) throw DataError(where + ": unreadable format version");
  if (major > kEventFormatMajor) {
    throw DataError(where + ": event format " + std::to_string(major) + "." + std::to_string(minor) +
                    " is newer than supported " + std::to_string(kEventFormatMajor) + ".x");
  }
}

}  // namespace

void write_events_csv(std::ostream& out, std::span<const apparatus::DetectorEvent> events) {
  const bool truth = all_truth(events);
  out << kCsvTag << kEventFormatMajor << '.' << kEventFormatMinor << '\n';
  out << (truth ? kHeaderTruth : kHeaderBase) << '\n';
  std::string line;
  for (const auto& e : events) {
    line = std::to_string(e.id);
    for (double v : {e.t_us, e.x_mm, e.y_mm}) {
      line += ',';
      put_double(line, v);
    }
    if (truth) {
      const auto& t = *e.truth;
      for (double v : {t.momentum_au.x, t.momentum_au.y, t.momentum_au.z, t.birth_mm.x, t.birth_mm.y, t.birth_mm.z}) {
        line += ',';
        put_double(line, v);
      }
      line += ',';
      line += strongfield::channel_label(t.channel);
    }
    line += '\n';
    out << line;
  }
  if (!out) throw IoError("failed writing event CSV");
}

EventFile read_events_csv(std::istream& in, const std::string& origin) {
  EventFile file;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = origin + ":" + std::to_string(line_no);
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (std::string_view(line).substr(0, kCsvTag.size()) == kCsvTag) {
        check_version(std::string_view(line).substr(kCsvTag.size()), where);
      }
      continue;
    }
    if (!header_seen) {
      if (line == kHeaderTruth) {
        file.has_truth = true;
        columns = 11;
      } else if (line == kHeaderBase) {
        columns = 4;
      } else {
        throw DataError(where + ": unexpected header '" + line + "'");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto c = rest.find(',');
      fields.push_back(rest.substr(0, c));
      if (c == std::string_view::npos) break;
      rest.remove_prefix(c + 1);
    }
    if (fields.size() != columns) {
      throw DataError(where + ": expected " + std::to_string(columns) + " fields, found " +
                      std::to_string(fields.size()));
    }
    auto number = [&](std::size_t i) {
      double v = 0.0;
      std::string_view f = fields[i];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
        throw DataError(where + ": field " + std::to_string(i + 1) + " ('" + std::string(f) + "') is not a number");
      }
      return v;
    };
    apparatus::DetectorEvent e;
    {
      std::string_view f = fields[0];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), e.id);
      if (ec != std::errc() || ptr != f.data() + f.size()) throw DataError(where + ": bad event_id '" + std::string(f) + "'");
    }
    e.t_us = number(1);
    e.x_mm = number(2);
    e.y_mm = number(3);
    if (file.has_truth) {
      apparatus::TruthRecord t;
      t.momentum_au = {number(4), number(5), number(6)};
      t.birth_mm = {number(7), number(8), number(9)};
      try {
        t.channel = strongfield::parse_channel(fields[10]);
      } catch (const Error&) {
        throw DataError(where + ": unknown channel '" + std::string(fields[10]) + "'");
      }
      e.truth = t;
    }
    file.events.push_back(e);
  }
  if (in.bad()) throw IoError(origin + ": read error");
  if (!header_seen) throw DataError(origin + ": no header row");
  return file;
}

namespace {

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
void put_f64(std::string& buf, double v) { put_u64(buf, std::bit_cast<std::uint64_t>(v)); }
void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xffu));
  buf.push_back(static_cast<char>(v >> 8));
}

std::uint64_t get_le(const unsigned char* p, int n) {
  std::uint64_t v = 0;
  for (int i = n - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

void write_events_binary(std::ostream& out, std::span<const apparatus::DetectorEvent> events) {
  const bool truth = all_truth(events);
  std::string buf(kMagic.begin(), kMagic.end());
  put_u16(buf, kEventFormatMajor);
  put_u16(buf, kEventFormatMinor);
  put_u32(buf, truth ? kFlagTruth : 0u);
  put_u64(buf, events.size());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  for (const auto& e : events) {
    buf.clear();
    put_u64(buf, e.id);
    put_f64(buf, e.t_us);
    put_f64(buf, e.x_mm);
    put_f64(buf, e.y_mm);
    if (truth) {
      const auto& t = *e.truth;
      for (double v : {t.momentum_au.x, t.momentum_au.y, t.momentum_au.z, t.birth_mm.x, t.birth_mm.y, t.birth_mm.z}) {
        put_f64(buf, v);
      }
      put_u64(buf, t.channel == strongfield::Channel::k5s ? 0u : 1u);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw IoError("failed writing binary event file");
}

EventFile read_events_binary(std::istream& in, const std::string& origin) {
  unsigned char head[21];
  in.read(reinterpret_cast<char*>(head), sizeof head);
  if (in.gcount() != static_cast<std::streamsize>(sizeof head)) throw DataError(origin + ": truncated header");
  if (std::memcmp(head, kMagic.data(), kMagic.size()) != 0) throw DataError(origin + ": bad magic (not a MOTR1 file)");
  const auto major = static_cast<unsigned>(get_le(head + 5, 2));
  const auto minor = static_cast<unsigned>(get_le(head + 7, 2));
  check_version(std::to_string(major) + "." + std::to_string(minor), origin);
  const auto flags = static_cast<std::uint32_t>(get_le(head + 9, 4));
  if (flags & ~kFlagTruth) throw DataError(origin + ": unknown flags " + std::to_string(flags));
  const std::uint64_t count = get_le(head + 13, 8);

  EventFile file;
  file.has_truth = (flags & kFlagTruth) != 0;
  const std::size_t rec_size = file.has_truth ? 88 : 32;
  std::vector<unsigned char> rec(rec_size);
  // Do not trust count for the reservation; a corrupt header should fail on read.
  file.events.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  auto f64 = [&](std::size_t off) { return std::bit_cast<double>(get_le(rec.data() + off, 8)); };
  for (std::uint64_t i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char*>(rec.data()), static_cast<std::streamsize>(rec_size));
    if (in.gcount() != static_cast<std::streamsize>(rec_size)) {
      throw DataError(origin + ": truncated at record " + std::to_string(i) + " of " + std::to_string(count));
    }
    apparatus::DetectorEvent e;
    e.id = get_le(rec.data(), 8);
    e.t_us = f64(8);
    e.x_mm = f64(16);
    e.y_mm = f64(24);
    if (file.has_truth) {
      apparatus::TruthRecord t;
      t.momentum_au = {f64(32), f64(40), f64(48)};
      t.birth_mm = {f64(56), f64(64), f64(72)};
      const auto ch = get_le(rec.data() + 80, 8);
      if (ch > 1) throw DataError(origin + ": record " + std::to_string(i) + " has unknown channel code");
      t.channel = ch == 0 ? strongfield::Channel::k5s : strongfield::Channel::k5p;
      e.truth = t;
    }
    file.events.push_back(e);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError(origin + ": trailing bytes after last record");
  return file;
}

void write_events(const std::string& path, std::span<const apparatus::DetectorEvent> events, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create '" + path + "'");
  if (binary) {
    write_events_binary(out, events);
  } else {
    write_events_csv(out, events);
  }
}

EventFile read_events(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open event file '" + path + "'");
  char magic[5] = {};
  in.read(magic, 5);
  const bool binary = in.gcount() == 5 && std::memcmp(magic, kMagic.data(), 5) == 0;
  in.clear();
  in.seekg(0);
  return binary ? read_events_binary(in, path) : read_events_csv(in, path);
}

}  // namespace motrims::io
