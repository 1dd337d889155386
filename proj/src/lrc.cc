#include "segflow/lrc.h"

#include <cmath>
#include <cstdio>

#include "segflow/errors.h"

namespace segflow {
namespace {

bool TwoDigits(std::string_view s, std::size_t pos, int* value) {
  if (pos + 2 > s.size()) return false;
  const char a = s[pos], b = s[pos + 1];
  if (a < '0' || a > '9' || b < '0' || b > '9') return false;
  *value = (a - '0') * 10 + (b - '0');
  return true;
}

bool IsBlank(std::string_view s) {
  return s.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

void ValidateLrc(const LrcDocument& doc) {
  if (!(doc.total_duration > 0.0) || !std::isfinite(doc.total_duration)) {
    throw ValidationError("lrc: total duration must be positive");
  }
  double prev = 0.0;
  for (std::size_t i = 0; i < doc.lines.size(); ++i) {
    const LrcLine& line = doc.lines[i];
    if (!(line.timestamp >= 0.0) || !std::isfinite(line.timestamp)) {
      throw ValidationError("lrc: negative timestamp at line " + std::to_string(i + 1));
    }
    if (line.timestamp < prev) {
      throw ValidationError("lrc: decreasing timestamp at line " + std::to_string(i + 1));
    }
    if (line.timestamp >= doc.total_duration) {
      throw ValidationError("lrc: timestamp beyond song end at line " +
                            std::to_string(i + 1));
    }
    if (line.text.find('\n') != std::string::npos) {
      throw ValidationError("lrc: newline inside line text " + std::to_string(i + 1));
    }
    prev = line.timestamp;
  }
}

LrcDocument ParseLrc(std::string_view raw, std::optional<double> total_duration) {
  LrcDocument doc;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    std::size_t nl = raw.find('\n', pos);
    if (nl == std::string_view::npos) nl = raw.size();
    std::string_view line = raw.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (IsBlank(line)) continue;

    int mm = 0, ss = 0, xx = 0;
    if (line.size() < 10 || line[0] != '[' || !TwoDigits(line, 1, &mm) || line[3] != ':' ||
        !TwoDigits(line, 4, &ss) || line[6] != '.' || !TwoDigits(line, 7, &xx) ||
        line[9] != ']') {
      throw ParseError(line_no, "malformed timestamp, expected [mm:ss.xx]");
    }
    if (ss > 59) throw ParseError(line_no, "seconds field out of range");
    std::string_view text = line.substr(10);
    if (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    const int centis = mm * 6000 + ss * 100 + xx;
    doc.lines.push_back({static_cast<double>(centis) / 100.0, std::string(text)});
  }
  if (total_duration) {
    doc.total_duration = *total_duration;
  } else {
    doc.total_duration = doc.lines.empty() ? 0.01 : doc.lines.back().timestamp + 0.01;
  }
  ValidateLrc(doc);
  return doc;
}

std::string FormatLrcTimestamp(double seconds) {
  if (!(seconds >= 0.0)) throw ContractError("lrc: negative timestamp");
  // nearbyint uses the current rounding mode, round-half-to-even by default.
  const auto centis = static_cast<long long>(std::nearbyint(seconds * 100.0));
  const long long minutes = centis / 6000;
  if (minutes > 99) throw ContractError("lrc: timestamps past 99:59.99 are not representable");
  const long long secs = (centis / 100) % 60;
  const long long cs = centis % 100;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "[%02lld:%02lld.%02lld]", minutes, secs, cs);
  return buf;
}

std::string SerializeLrc(const LrcDocument& doc) {
  std::string out;
  for (const LrcLine& line : doc.lines) {
    out += FormatLrcTimestamp(line.timestamp);
    if (!line.text.empty()) {
      out += ' ';
      out += line.text;
    }
    out += '\n';
  }
  return out;
}

std::size_t TimeToFrame(double t, double sampling_rate, double downsample) {
  if (!(t >= 0.0)) throw ContractError("time_to_frame: negative time");
  if (!(sampling_rate > 0.0) || !(downsample > 0.0)) {
    throw ContractError("time_to_frame: rates must be positive");
  }
  return static_cast<std::size_t>(std::floor(t * sampling_rate / downsample));
}

std::size_t TimeToFrame(double t, double frame_rate) {
  if (!(t >= 0.0)) throw ContractError("time_to_frame: negative time");
  if (!(frame_rate > 0.0)) throw ContractError("time_to_frame: rate must be positive");
  return static_cast<std::size_t>(std::floor(t * frame_rate));
}

std::size_t FrameCount(double total_duration, double frame_rate) {
  if (!(total_duration > 0.0) || !(frame_rate > 0.0)) {
    throw ContractError("frame_count: duration and rate must be positive");
  }
  return static_cast<std::size_t>(std::ceil(total_duration * frame_rate));
}

}  // namespace segflow
