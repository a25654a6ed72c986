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

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "edupipe/common.h"

namespace edupipe {

enum class SampleSource : std::uint8_t { kWav = 0, kSine = 1, kText = 2, kRaw = 3 };

std::string_view ToString(SampleSource s);

struct Sample {
  int rate_hz = 8000;
  std::vector<double> data;
  SampleSource source = SampleSource::kRaw;

  bool operator==(const Sample&) const = default;
};

// Input formats the loader stage recognizes. MP3, ULAW and MIDI are
// declared but rejected with kUnsupportedFormat.
enum class AudioFormat { kWav, kSine, kText, kRaw, kMp3, kUlaw, kMidi };

std::string_view ToString(AudioFormat f);
AudioFormat ParseAudioFormat(std::string_view s);

// RIFF/WAVE, PCM16, mono, little-endian. Amplitudes are divided by 32768.
Sample LoadWav(ByteView bytes);
// Spec: "freq=440+660,amp=0.5,dur=1,rate=8000,noise=0.01,seed=7". Every
// key is optional except freq. Each frequency contributes amp*sin(.);
// noise adds seeded uniform values in [-noise, noise).
Sample GenerateSine(std::string_view spec);
// Whitespace-separated reals; an optional leading "rate=N" token.
Sample LoadText(std::string_view text, int rate_hz = 8000);
// f64 little-endian values.
Sample LoadRaw(ByteView bytes, int rate_hz = 8000);

Sample LoadSample(AudioFormat format, ByteView bytes_or_spec);

Bytes EncodeWavPcm16(const Sample& s);

// Stage wire form: rate u32 BE, source u8, count u64 BE, f64 LE values.
Bytes EncodeSample(const Sample& s);
Sample DecodeSample(ByteView bytes);

}  // namespace edupipe
