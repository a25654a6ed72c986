// Copyright 2026 The edupipe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing,
// software distributed under the License is distributed on an
// "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, either express or implied.  See the License for the
// specific language governing permissions and limitations
// under the License.

#include "edupipe/pipeline/sample.h"

#include <charconv>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/algorithm/string.hpp>

namespace edupipe {

namespace {

double ParseDouble(std::string_view s, std::string_view what) {
  std::string tmp(s);
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size() || errno == ERANGE || !std::isfinite(v)) {
    Fail(ErrorCode::kMalformedFile, "bad number for " + std::string(what) + ": '" + tmp + "'");
  }
  return v;
}

std::uint16_t U16LE(ByteView b, std::size_t off) {
  return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

std::uint32_t U32LE(ByteView b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) |
         (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

void PutU16LE(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

}  // namespace

std::string_view ToString(SampleSource s) {
  switch (s) {
    case SampleSource::kWav: return "WAV";
    case SampleSource::kSine: return "SINE";
    case SampleSource::kText: return "TEXT";
    case SampleSource::kRaw: return "RAW";
  }
  return "?";
}

std::string_view ToString(AudioFormat f) {
  switch (f) {
    case AudioFormat::kWav: return "wav";
    case AudioFormat::kSine: return "sine";
    case AudioFormat::kText: return "text";
    case AudioFormat::kRaw: return "raw";
    case AudioFormat::kMp3: return "mp3";
    case AudioFormat::kUlaw: return "ulaw";
    case AudioFormat::kMidi: return "midi";
  }
  return "?";
}

AudioFormat ParseAudioFormat(std::string_view s) {
  std::string lower = boost::algorithm::to_lower_copy(std::string(s));
  for (AudioFormat f : {AudioFormat::kWav, AudioFormat::kSine, AudioFormat::kText,
                        AudioFormat::kRaw, AudioFormat::kMp3, AudioFormat::kUlaw,
                        AudioFormat::kMidi}) {
    if (lower == ToString(f)) return f;
  }
  Fail(ErrorCode::kUnsupportedFormat, "unknown sample format '" + std::string(s) + "'");
}

Sample LoadWav(ByteView b) {
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 ||
      std::memcmp(b.data() + 8, "WAVE", 4) != 0) {
    Fail(ErrorCode::kMalformedFile, "not a RIFF/WAVE file");
  }
  std::size_t off = 12;
  bool have_fmt = false;
  int rate = 0;
  while (off + 8 <= b.size()) {
    std::uint32_t len = U32LE(b, off + 4);
    ByteView id = b.subspan(off, 4);
    std::size_t body = off + 8;
    if (body + len > b.size()) Fail(ErrorCode::kMalformedFile, "WAV chunk overruns file");
    if (std::memcmp(id.data(), "fmt ", 4) == 0) {
      if (len < 16) Fail(ErrorCode::kMalformedFile, "short fmt chunk");
      std::uint16_t audio_format = U16LE(b, body);
      std::uint16_t channels = U16LE(b, body + 2);
      rate = static_cast<int>(U32LE(b, body + 4));
      std::uint16_t bits = U16LE(b, body + 14);
      if (audio_format != 1 || channels != 1 || bits != 16) {
        Fail(ErrorCode::kUnsupportedFormat, "only PCM16 mono WAV is supported");
      }
      if (rate <= 0) Fail(ErrorCode::kMalformedFile, "WAV sample rate must be positive");
      have_fmt = true;
    } else if (std::memcmp(id.data(), "data", 4) == 0) {
      if (!have_fmt) Fail(ErrorCode::kMalformedFile, "data chunk before fmt chunk");
      if (len % 2 != 0) Fail(ErrorCode::kMalformedFile, "odd PCM16 data length");
      Sample s;
      s.rate_hz = rate;
      s.source = SampleSource::kWav;
      s.data.reserve(len / 2);
      for (std::size_t i = 0; i < len; i += 2) {
        auto v = static_cast<std::int16_t>(U16LE(b, body + i));
        s.data.push_back(static_cast<double>(v) / 32768.0);
      }
      return s;
    }
    off = body + len + (len & 1);
  }
  Fail(ErrorCode::kMalformedFile, "WAV has no data chunk");
}

Sample GenerateSine(std::string_view spec) {
  std::vector<double> freqs;
  double amp = 0.5;
  double dur = 1.0;
  int rate = 8000;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> parts;
  boost::algorithm::split(parts, std::string(spec), boost::is_any_of(","));
  for (std::string part : parts) {
    boost::algorithm::trim(part);
    if (part.empty()) continue;
    auto eq = part.find('=');
    if (eq == std::string::npos) Fail(ErrorCode::kMalformedFile, "sine spec needs key=value: " + part);
    std::string key = boost::algorithm::trim_copy(part.substr(0, eq));
    std::string value = boost::algorithm::trim_copy(part.substr(eq + 1));
    if (key == "freq") {
      std::vector<std::string> fs;
      boost::algorithm::split(fs, value, boost::is_any_of("+"));
      for (const auto& f : fs) freqs.push_back(ParseDouble(f, "freq"));
    } else if (key == "amp") {
      amp = ParseDouble(value, key);
    } else if (key == "dur") {
      dur = ParseDouble(value, key);
    } else if (key == "rate") {
      rate = static_cast<int>(ParseDouble(value, key));
    } else if (key == "noise") {
      noise = ParseDouble(value, key);
    } else if (key == "seed") {
      seed = static_cast<std::uint64_t>(ParseDouble(value, key));
    } else {
      Fail(ErrorCode::kMalformedFile, "unknown sine spec key '" + key + "'");
    }
  }
  if (freqs.empty()) Fail(ErrorCode::kMalformedFile, "sine spec needs freq");
  if (rate <= 0 || dur <= 0) Fail(ErrorCode::kMalformedFile, "sine rate and dur must be positive");
  auto n = static_cast<std::size_t>(std::llround(dur * rate));
  Sample s;
  s.rate_hz = rate;
  s.source = SampleSource::kSine;
  s.data.resize(n);
  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < n; ++t) {
    double v = 0.0;
    for (double f : freqs) {
      v += amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t) / rate);
    }
    if (noise > 0) {
      // Built from raw engine output so the values do not depend on the
      // standard library's distribution implementation.
      double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      v += noise * (2.0 * u - 1.0);
    }
    s.data[t] = v;
  }
  return s;
}

Sample LoadText(std::string_view text, int rate_hz) {
  Sample s;
  s.rate_hz = rate_hz;
  s.source = SampleSource::kText;
  std::istringstream in{std::string(text)};
  std::string tok;
  bool first = true;
  while (in >> tok) {
    if (first && tok.rfind("rate=", 0) == 0) {
      s.rate_hz = static_cast<int>(ParseDouble(tok.substr(5), "rate"));
    } else {
      s.data.push_back(ParseDouble(tok, "sample"));
    }
    first = false;
  }
  if (s.rate_hz <= 0) Fail(ErrorCode::kMalformedFile, "text sample rate must be positive");
  return s;
}

Sample LoadRaw(ByteView bytes, int rate_hz) {
  if (bytes.size() % 8 != 0) Fail(ErrorCode::kMalformedFile, "raw f64 data length not a multiple of 8");
  Sample s;
  s.rate_hz = rate_hz;
  s.source = SampleSource::kRaw;
  ByteReader r(bytes);
  while (!r.empty()) {
    double v = r.F64LE();
    if (!std::isfinite(v)) Fail(ErrorCode::kMalformedFile, "non-finite raw sample");
    s.data.push_back(v);
  }
  return s;
}

Sample LoadSample(AudioFormat format, ByteView bytes_or_spec) {
  switch (format) {
    case AudioFormat::kWav: return LoadWav(bytes_or_spec);
    case AudioFormat::kSine: return GenerateSine(ToString(bytes_or_spec));
    case AudioFormat::kText: return LoadText(ToString(bytes_or_spec));
    case AudioFormat::kRaw: return LoadRaw(bytes_or_spec);
    case AudioFormat::kMp3:
    case AudioFormat::kUlaw:
    case AudioFormat::kMidi:
      break;
  }
  Fail(ErrorCode::kUnsupportedFormat, std::string(ToString(format)) + " loading is not implemented");
}

Bytes EncodeWavPcm16(const Sample& s) {
  Bytes out;
  const auto data_len = static_cast<std::uint32_t>(s.data.size() * 2);
  auto put_tag = [&](const char* tag) { out.insert(out.end(), tag, tag + 4); };
  put_tag("RIFF");
  PutU32LE(out, 36 + data_len);
  put_tag("WAVE");
  put_tag("fmt ");
  PutU32LE(out, 16);
  PutU16LE(out, 1);
  PutU16LE(out, 1);
  PutU32LE(out, static_cast<std::uint32_t>(s.rate_hz));
  PutU32LE(out, static_cast<std::uint32_t>(s.rate_hz) * 2);
  PutU16LE(out, 2);
  PutU16LE(out, 16);
  put_tag("data");
  PutU32LE(out, data_len);
  for (double v : s.data) {
    double scaled = std::round(v * 32768.0);
    scaled = std::clamp(scaled, -32768.0, 32767.0);
    PutU16LE(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  return out;
}

Bytes EncodeSample(const Sample& s) {
  Bytes out;
  out.reserve(13 + s.data.size() * 8);
  PutU32BE(out, static_cast<std::uint32_t>(s.rate_hz));
  PutU8(out, static_cast<std::uint8_t>(s.source));
  PutU64BE(out, s.data.size());
  for (double v : s.data) PutF64LE(out, v);
  return out;
}

Sample DecodeSample(ByteView bytes) {
  ByteReader r(bytes);
  Sample s;
  s.rate_hz = static_cast<int>(r.U32BE());
  std::uint8_t src = r.U8();
  if (src > 3) Fail(ErrorCode::kMalformedRecord, "bad sample source");
  s.source = static_cast<SampleSource>(src);
  std::uint64_t n = r.U64BE();
  if (n > r.remaining() / 8) Fail(ErrorCode::kMalformedRecord, "sample count overruns buffer");
  s.data.resize(n);
  for (auto& v : s.data) v = r.F64LE();
  if (!r.empty()) Fail(ErrorCode::kMalformedRecord, "trailing bytes after sample");
  return s;
}

}  // namespace edupipe
