#pragma once

// Biosemi BDF reader/writer. BDF is the 24-bit variant of EDF: a 256-byte
// text header, 256 bytes of per-channel metadata per channel, then data
// records of little-endian 24-bit two's-complement samples. The trigger word
// lives in the lower 16 bits of the status channel (last channel, "Status").

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "erpforge/errors.hpp"

namespace erpforge::bdf {

struct ChannelInfo {
  std::string label;
  std::string transducer;
  std::string physical_dim = "uV";
  double physical_min = -262144.0;
  double physical_max = 262143.0;
  int digital_min = -8388608;
  int digital_max = 8388607;
  std::string prefiltering;
  int samples_per_record = 0;

  double gain() const {
    return (physical_max - physical_min) / (double(digital_max) - double(digital_min));
  }
  double offset() const { return physical_min - digital_min * gain(); }
};

struct BdfHeader {
  std::array<unsigned char, 8> version_magic{{0xFF, 'B', 'I', 'O', 'S', 'E', 'M', 'I'}};
  std::string patient_id;
  std::string recording_id;
  std::string start_date = "01.01.00";
  std::string start_time = "00.00.00";
  std::string data_version = "24BIT";
  int record_count = 0;
  double record_duration_s = 1.0;
  int channel_count = 0;  // includes the status channel when present
  std::vector<ChannelInfo> channels;

  void validate() const {
    if (channel_count < 1) throw MalformedHeader("channel count must be >= 1");
    if (static_cast<int>(channels.size()) != channel_count)
      throw MalformedHeader("channel metadata count does not match channel count");
    if (record_count < 0) throw MalformedHeader("record count must be >= 0");
    if (!(record_duration_s > 0)) throw MalformedHeader("record duration must be positive");
    for (const auto& ch : channels) {
      if (ch.digital_max <= ch.digital_min)
        throw MalformedHeader("digital range inverted for channel " + ch.label);
      if (!(ch.physical_max > ch.physical_min))
        throw MalformedHeader("physical range inverted for channel " + ch.label);
      if (ch.samples_per_record < 1)
        throw MalformedHeader("samples per record must be >= 1 for channel " + ch.label);
    }
  }
};

struct Event {
  std::int64_t sample_index = 0;
  int trigger_code = 0;
  bool operator==(const Event&) const = default;
};

struct LabeledEvent {
  std::int64_t sample_index = 0;
  int label = 0;  // 0 or 1
  bool operator==(const LabeledEvent&) const = default;
};

// Continuous multichannel recording in physical units (microvolts), status
// channel stripped and reduced to the event list.
struct RawRecording {
  std::vector<std::vector<double>> samples;  // [channel][sample]
  double sample_rate_hz = 0.0;
  std::vector<Event> events;

  int channel_count() const { return static_cast<int>(samples.size()); }
  std::int64_t total_samples() const {
    return samples.empty() ? 0 : static_cast<std::int64_t>(samples.front().size());
  }
};

// 24-bit little-endian two's complement. Total on all 3-byte inputs.
inline std::int32_t decode_sample24(const unsigned char bytes3[3]) {
  std::uint32_t u = std::uint32_t(bytes3[0]) | (std::uint32_t(bytes3[1]) << 8) |
                    (std::uint32_t(bytes3[2]) << 16);
  if (u & 0x800000u) u |= 0xFF000000u;
  return static_cast<std::int32_t>(u);
}

inline void encode_sample24(std::int32_t value, unsigned char out[3]) {
  const std::uint32_t u = static_cast<std::uint32_t>(value);
  out[0] = static_cast<unsigned char>(u & 0xFFu);
  out[1] = static_cast<unsigned char>((u >> 8) & 0xFFu);
  out[2] = static_cast<unsigned char>((u >> 16) & 0xFFu);
}

namespace detail {

inline std::string fixed_field(const std::string& text, std::size_t width) {
  std::string s = text.substr(0, width);
  s.resize(width, ' ');
  return s;
}

inline std::string fixed_number(double v, std::size_t width) {
  std::ostringstream os;
  os << v;
  std::string s = os.str();
  if (s.size() > width) {  // fall back to a compact form that still parses
    os.str("");
    os.precision(static_cast<int>(width) - 2);
    os << v;
    s = os.str().substr(0, width);
  }
  s.resize(width, ' ');
  return s;
}

inline std::string read_chunk(std::istream& in, std::size_t n) {
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw MalformedHeader("header ends prematurely");
  return s;
}

inline std::string trimmed(std::string s) {
  const auto last = s.find_last_not_of(" \0", std::string::npos, 2);
  if (last == std::string::npos) return "";
  return s.substr(0, last + 1);
}

inline double parse_real(const std::string& field, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(field, &pos);
    return v;
  } catch (const std::exception&) {
    throw MalformedHeader(std::string("unparseable numeric field: ") + what + " ('" + trimmed(field) + "')");
  }
}

inline long parse_int(const std::string& field, const char* what) {
  try {
    return std::stol(field);
  } catch (const std::exception&) {
    throw MalformedHeader(std::string("unparseable integer field: ") + what + " ('" + trimmed(field) + "')");
  }
}

inline bool is_status_label(const std::string& label) {
  return label == "Status" || label == "STATUS";
}

}  // namespace detail

// Extracts trigger events from decoded status-channel samples: an event fires
// where the 16-bit trigger word transitions from zero to nonzero; sustained
// codes count once. State before the first sample is taken as zero.
inline std::vector<Event> events_from_status(const std::vector<std::int32_t>& status) {
  std::vector<Event> events;
  int prev = 0;
  for (std::size_t i = 0; i < status.size(); ++i) {
    const int code = static_cast<int>(static_cast<std::uint32_t>(status[i]) & 0xFFFFu);
    if (prev == 0 && code != 0) events.push_back({static_cast<std::int64_t>(i), code});
    prev = code;
  }
  return events;
}

inline std::pair<BdfHeader, RawRecording> parse_bdf(std::istream& in) {
  BdfHeader h;

  std::string magic = detail::read_chunk(in, 8);
  if (static_cast<unsigned char>(magic[0]) != 0xFF || magic.substr(1, 7) != "BIOSEMI")
    throw MalformedHeader("bad identification bytes (expected 0xFF 'BIOSEMI')");
  for (int i = 0; i < 8; ++i) h.version_magic[static_cast<std::size_t>(i)] = static_cast<unsigned char>(magic[static_cast<std::size_t>(i)]);

  h.patient_id = detail::trimmed(detail::read_chunk(in, 80));
  h.recording_id = detail::trimmed(detail::read_chunk(in, 80));
  h.start_date = detail::trimmed(detail::read_chunk(in, 8));
  h.start_time = detail::trimmed(detail::read_chunk(in, 8));
  const long header_bytes = detail::parse_int(detail::read_chunk(in, 8), "header size");
  h.data_version = detail::trimmed(detail::read_chunk(in, 44));
  h.record_count = static_cast<int>(detail::parse_int(detail::read_chunk(in, 8), "record count"));
  h.record_duration_s = detail::parse_real(detail::read_chunk(in, 8), "record duration");
  h.channel_count = static_cast<int>(detail::parse_int(detail::read_chunk(in, 4), "channel count"));

  if (h.channel_count < 1) throw MalformedHeader("channel count must be >= 1");
  if (header_bytes != 256L * (h.channel_count + 1))
    throw MalformedHeader("header size field disagrees with channel count");
  if (h.record_count < 0) throw MalformedHeader("record count must be >= 0");

  const int nc = h.channel_count;
  h.channels.resize(static_cast<std::size_t>(nc));
  auto per_channel = [&](std::size_t width, auto&& assign) {
    for (int c = 0; c < nc; ++c) assign(h.channels[static_cast<std::size_t>(c)], detail::read_chunk(in, width));
  };
  per_channel(16, [](ChannelInfo& ch, const std::string& s) { ch.label = detail::trimmed(s); });
  per_channel(80, [](ChannelInfo& ch, const std::string& s) { ch.transducer = detail::trimmed(s); });
  per_channel(8, [](ChannelInfo& ch, const std::string& s) { ch.physical_dim = detail::trimmed(s); });
  per_channel(8, [](ChannelInfo& ch, const std::string& s) { ch.physical_min = detail::parse_real(s, "physical min"); });
  per_channel(8, [](ChannelInfo& ch, const std::string& s) { ch.physical_max = detail::parse_real(s, "physical max"); });
  per_channel(8, [](ChannelInfo& ch, const std::string& s) { ch.digital_min = static_cast<int>(detail::parse_int(s, "digital min")); });
  per_channel(8, [](ChannelInfo& ch, const std::string& s) { ch.digital_max = static_cast<int>(detail::parse_int(s, "digital max")); });
  per_channel(80, [](ChannelInfo& ch, const std::string& s) { ch.prefiltering = detail::trimmed(s); });
  per_channel(8, [](ChannelInfo& ch, const std::string& s) { ch.samples_per_record = static_cast<int>(detail::parse_int(s, "samples per record")); });
  per_channel(32, [](ChannelInfo&, const std::string&) {});

  h.validate();

  // All signal channels must agree on sampling so the recording forms one
  // rectangular matrix; the status channel must match too.
  const int spr = h.channels.front().samples_per_record;
  for (const auto& ch : h.channels) {
    if (ch.samples_per_record != spr)
      throw MalformedHeader("mixed per-channel sample rates are not supported");
  }

  const int status_index = detail::is_status_label(h.channels.back().label) ? nc - 1 : -1;
  const int n_signal = status_index >= 0 ? nc - 1 : nc;

  RawRecording rec;
  rec.sample_rate_hz = spr / h.record_duration_s;
  const std::int64_t total = static_cast<std::int64_t>(h.record_count) * spr;
  rec.samples.assign(static_cast<std::size_t>(n_signal),
                     std::vector<double>(static_cast<std::size_t>(total)));
  std::vector<std::int32_t> status;
  if (status_index >= 0) status.resize(static_cast<std::size_t>(total));

  std::vector<unsigned char> record_buf(static_cast<std::size_t>(nc) * spr * 3);
  for (int r = 0; r < h.record_count; ++r) {
    in.read(reinterpret_cast<char*>(record_buf.data()), static_cast<std::streamsize>(record_buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != record_buf.size())
      throw TruncatedRecords("data ends inside record " + std::to_string(r) + " of " + std::to_string(h.record_count));
    const std::int64_t base = static_cast<std::int64_t>(r) * spr;
    for (int c = 0; c < nc; ++c) {
      const unsigned char* p = record_buf.data() + static_cast<std::size_t>(c) * spr * 3;
      if (c == status_index) {
        for (int s = 0; s < spr; ++s) status[static_cast<std::size_t>(base + s)] = decode_sample24(p + 3 * s);
      } else {
        const auto& ch = h.channels[static_cast<std::size_t>(c)];
        const double gain = ch.gain(), offset = ch.offset();
        auto& dst = rec.samples[static_cast<std::size_t>(c)];
        for (int s = 0; s < spr; ++s)
          dst[static_cast<std::size_t>(base + s)] = decode_sample24(p + 3 * s) * gain + offset;
      }
    }
  }

  if (status_index >= 0) rec.events = events_from_status(status);
  return {std::move(h), std::move(rec)};
}

inline std::pair<BdfHeader, RawRecording> parse_bdf_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return parse_bdf(in);
}

// Serializes header + recording. When the header's last channel is "Status",
// a status channel is synthesized from the event list (one-sample pulses, so
// parse_bdf recovers the same events). Digital samples round-trip bit-exactly.
inline void write_bdf(const BdfHeader& header, const RawRecording& recording, std::ostream& out) {
  header.validate();
  const int nc = header.channel_count;
  const int status_index = nc >= 1 && detail::is_status_label(header.channels.back().label) ? nc - 1 : -1;
  const int n_signal = status_index >= 0 ? nc - 1 : nc;
  const int spr = header.channels.front().samples_per_record;
  for (const auto& ch : header.channels)
    if (ch.samples_per_record != spr)
      throw InconsistentShape("mixed per-channel sample rates are not supported");

  const std::int64_t total = static_cast<std::int64_t>(header.record_count) * spr;
  if (recording.channel_count() != n_signal)
    throw InconsistentShape("recording has " + std::to_string(recording.channel_count()) +
                            " channels; header implies " + std::to_string(n_signal));
  for (const auto& ch : recording.samples)
    if (static_cast<std::int64_t>(ch.size()) != total)
      throw InconsistentShape("channel length " + std::to_string(ch.size()) +
                              " does not match record_count*samples_per_record = " + std::to_string(total));
  for (const auto& ev : recording.events)
    if (ev.sample_index < 0 || ev.sample_index >= total)
      throw InconsistentShape("event sample index out of range");

  using detail::fixed_field;
  using detail::fixed_number;
  std::string hdr;
  hdr.reserve(static_cast<std::size_t>(256 * (nc + 1)));
  hdr.append(reinterpret_cast<const char*>(header.version_magic.data()), 8);
  hdr += fixed_field(header.patient_id, 80);
  hdr += fixed_field(header.recording_id, 80);
  hdr += fixed_field(header.start_date, 8);
  hdr += fixed_field(header.start_time, 8);
  hdr += fixed_number(256.0 * (nc + 1), 8);
  hdr += fixed_field(header.data_version, 44);
  hdr += fixed_number(header.record_count, 8);
  hdr += fixed_number(header.record_duration_s, 8);
  hdr += fixed_field(std::to_string(nc), 4);

  auto per_channel = [&](std::size_t width, auto&& field) {
    for (int c = 0; c < nc; ++c) hdr += fixed_field(field(header.channels[static_cast<std::size_t>(c)]), width);
  };
  per_channel(16, [](const ChannelInfo& ch) { return ch.label; });
  per_channel(80, [](const ChannelInfo& ch) { return ch.transducer; });
  per_channel(8, [](const ChannelInfo& ch) { return ch.physical_dim; });
  per_channel(8, [](const ChannelInfo& ch) { return fixed_number(ch.physical_min, 8); });
  per_channel(8, [](const ChannelInfo& ch) { return fixed_number(ch.physical_max, 8); });
  per_channel(8, [](const ChannelInfo& ch) { return std::to_string(ch.digital_min); });
  per_channel(8, [](const ChannelInfo& ch) { return std::to_string(ch.digital_max); });
  per_channel(80, [](const ChannelInfo& ch) { return ch.prefiltering; });
  per_channel(8, [](const ChannelInfo& ch) { return std::to_string(ch.samples_per_record); });
  per_channel(32, [](const ChannelInfo&) { return std::string(); });
  out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));

  std::vector<std::int32_t> status;
  if (status_index >= 0) {
    status.assign(static_cast<std::size_t>(total), 0);
    for (const auto& ev : recording.events)
      status[static_cast<std::size_t>(ev.sample_index)] = ev.trigger_code & 0xFFFF;
  }

  std::vector<unsigned char> record_buf(static_cast<std::size_t>(nc) * spr * 3);
  for (int r = 0; r < header.record_count; ++r) {
    const std::int64_t base = static_cast<std::int64_t>(r) * spr;
    for (int c = 0; c < nc; ++c) {
      unsigned char* p = record_buf.data() + static_cast<std::size_t>(c) * spr * 3;
      if (c == status_index) {
        for (int s = 0; s < spr; ++s) encode_sample24(status[static_cast<std::size_t>(base + s)], p + 3 * s);
      } else {
        const auto& ch = header.channels[static_cast<std::size_t>(c)];
        const double gain = ch.gain(), offset = ch.offset();
        const auto& src = recording.samples[static_cast<std::size_t>(c)];
        for (int s = 0; s < spr; ++s) {
          const double digital = (src[static_cast<std::size_t>(base + s)] - offset) / gain;
          const auto d = static_cast<std::int32_t>(std::llround(digital));
          encode_sample24(d, p + 3 * s);
        }
      }
    }
    out.write(reinterpret_cast<const char*>(record_buf.data()), static_cast<std::streamsize>(record_buf.size()));
  }
}

inline void write_bdf_file(const BdfHeader& header, const RawRecording& recording, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot create " + path);
  write_bdf(header, recording, out);
}

// Maps trigger codes to binary labels; events with any other code are
// discarded, order preserved.
inline std::vector<LabeledEvent> label_events(const std::vector<Event>& events, int target_code,
                                              int nontarget_code) {
  if (target_code == nontarget_code)
    throw InvalidSpec("target and non-target trigger codes must differ");
  std::vector<LabeledEvent> out;
  out.reserve(events.size());
  for (const auto& ev : events) {
    if (ev.trigger_code == target_code)
      out.push_back({ev.sample_index, 1});
    else if (ev.trigger_code == nontarget_code)
      out.push_back({ev.sample_index, 0});
  }
  return out;
}

// Convenience for building a 32-channel EEG header (plus status channel).
inline BdfHeader make_header(const std::vector<std::string>& labels, int record_count,
                             double record_duration_s, int samples_per_record,
                             bool with_status = true) {
  BdfHeader h;
  h.record_count = record_count;
  h.record_duration_s = record_duration_s;
  for (const auto& label : labels) {
    ChannelInfo ch;
    ch.label = label;
    ch.physical_dim = "uV";
    // -262144..262143 over the full 24-bit range: LSB ~ 1/32 uV, and both
    // bounds serialize exactly within the 8-character header fields.
    ch.physical_min = -262144.0;
    ch.physical_max = 262143.0;
    ch.samples_per_record = samples_per_record;
    h.channels.push_back(std::move(ch));
  }
  if (with_status) {
    ChannelInfo st;
    st.label = "Status";
    st.physical_dim = "Boolean";
    st.physical_min = -8388608;
    st.physical_max = 8388607;
    st.samples_per_record = samples_per_record;
    h.channels.push_back(std::move(st));
  }
  h.channel_count = static_cast<int>(h.channels.size());
  return h;
}

}  // namespace erpforge::bdf
