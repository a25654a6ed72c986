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

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "edupipe/pipeline/features.h"
#include "edupipe/pipeline/fft.h"
#include "edupipe/pipeline/preprocessing.h"
#include "edupipe/pipeline/sample.h"

namespace edupipe {
namespace {

std::vector<Complex> NaiveDft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      double angle = -2.0 * std::numbers::pi * static_cast<double>(k * t) / static_cast<double>(n);
      acc += x[t] * Complex(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

std::vector<double> RandomSignal(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

TEST(FftTest, MatchesNaiveDft) {
  for (std::size_t n = 1; n <= 64; n *= 2) {
    auto x = RandomSignal(n, n);
    auto fast = Fft(std::span<const double>(x));
    auto slow = NaiveDft(x);
    ASSERT_EQ(fast.size(), n);
    for (std::size_t k = 0; k < n; ++k) EXPECT_LT(std::abs(fast[k] - slow[k]), 1e-9) << n << ":" << k;
  }
}

TEST(FftTest, ZeroPadsToPowerOfTwo) {
  std::vector<double> x{1, 2, 3};
  auto X = Fft(std::span<const double>(x));
  ASSERT_EQ(X.size(), 4u);
  auto ref = NaiveDft({1, 2, 3, 0});
  for (std::size_t k = 0; k < 4; ++k) EXPECT_LT(std::abs(X[k] - ref[k]), 1e-12);
  EXPECT_EQ(NextPowerOfTwo(5), 8u);
  EXPECT_EQ(NextPowerOfTwo(8), 8u);
}

TEST(FftTest, Parseval) {
  auto x = RandomSignal(1024, 5);
  auto X = Fft(std::span<const double>(x));
  double time = 0, freq = 0;
  for (double v : x) time += v * v;
  for (auto c : X) freq += std::norm(c);
  freq /= static_cast<double>(x.size());
  EXPECT_LT(std::abs(time - freq) / time, 1e-9);
}

TEST(FftTest, InverseRoundTrip) {
  auto x = RandomSignal(256, 6);
  auto back = Ifft(Fft(std::span<const double>(x)));
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_LT(std::abs(back[i].real() - x[i]), 1e-9);
    EXPECT_LT(std::abs(back[i].imag()), 1e-9);
  }
}

TEST(LpcTest, LevinsonMatchesToeplitzSolve) {
  auto x = RandomSignal(512, 17);
  for (std::size_t p = 1; p <= 8; ++p) {
    auto r = Autocorrelation(x, p);
    auto a = LevinsonDurbin(r, p);
    Eigen::MatrixXd R(p, p);
    Eigen::VectorXd rhs(p);
    for (std::size_t i = 0; i < p; ++i) {
      rhs(i) = r[i + 1];
      for (std::size_t j = 0; j < p; ++j) R(i, j) = r[i > j ? i - j : j - i];
    }
    Eigen::VectorXd ref = R.fullPivLu().solve(rhs);
    ASSERT_EQ(a.size(), p);
    for (std::size_t i = 0; i < p; ++i) EXPECT_LT(std::abs(a[i] - ref(i)), 1e-8) << p << ":" << i;
  }
}

TEST(LpcTest, RecoversAr1Coefficient) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> noise(0.0, 1.0);
  Sample s;
  double prev = 0;
  for (int t = 0; t < 20000; ++t) {
    prev = 0.9 * prev + noise(rng);
    s.data.push_back(prev);
  }
  auto a = ExtractLpcFeatures(s, 1);
  EXPECT_NEAR(a[0], 0.9, 0.05);
}

TEST(LpcTest, Errors) {
  std::vector<double> zeros{0, 0, 0};
  EXPECT_THROW(LevinsonDurbin(zeros, 2), Error);
  Sample tiny;
  tiny.data = {1, 2};
  try {
    ExtractLpcFeatures(tiny, 20);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooShort);
  }
}

TEST(FeaturesTest, FftFeaturesShape) {
  Sample s = GenerateSine("freq=440,dur=0.5,rate=8000");
  auto f = ExtractFftFeatures(s);
  EXPECT_EQ(f.size(), 128u);
  for (double v : f) EXPECT_GE(v, 0.0);
  // 440 Hz lands in bin 56 of 1024 at 8 kHz, folded group 14.
  auto peak = std::max_element(f.begin(), f.end()) - f.begin();
  EXPECT_EQ(peak, 14);
}

TEST(FeaturesTest, MinMax) {
  Sample s;
  s.data = {3, -1, 7, 0, 5, -4};
  auto f = ExtractMinMaxFeatures(s, 5);
  EXPECT_EQ(f, (FeatureVector{7, 5, 3, -4, -1}));
  EXPECT_THROW(ExtractMinMaxFeatures(s, 7), Error);
}

TEST(FeaturesTest, FeatureCodecRoundTrip) {
  FeatureVector v{1.5, -2.25, 0};
  EXPECT_EQ(DecodeFeatures(EncodeFeatures(v)), v);
}

TEST(SampleTest, WavRoundTrip) {
  Sample s = GenerateSine("freq=300,amp=0.5,dur=0.1,rate=8000");
  Sample back = LoadWav(EncodeWavPcm16(s));
  ASSERT_EQ(back.data.size(), s.data.size());
  EXPECT_EQ(back.rate_hz, 8000);
  for (std::size_t i = 0; i < s.data.size(); ++i) EXPECT_NEAR(back.data[i], s.data[i], 1.0 / 32768 + 1e-12);
}

TEST(SampleTest, SineIsSeeded) {
  EXPECT_EQ(GenerateSine("freq=100,noise=0.1,seed=3"), GenerateSine("freq=100,noise=0.1,seed=3"));
  EXPECT_NE(GenerateSine("freq=100,noise=0.1,seed=3"), GenerateSine("freq=100,noise=0.1,seed=4"));
  Sample s = GenerateSine("freq=1000,dur=0.01,rate=8000");
  EXPECT_EQ(s.data.size(), 80u);
  EXPECT_NEAR(s.data[2], 0.5 * std::sin(2 * std::numbers::pi * 1000 * 2 / 8000.0), 1e-12);
}

TEST(SampleTest, TextAndRaw) {
  Sample t = LoadText("rate=16000 0.5 -0.25 1");
  EXPECT_EQ(t.rate_hz, 16000);
  EXPECT_EQ(t.data, (std::vector<double>{0.5, -0.25, 1}));
  Sample r;
  r.data = {0.125, 2};
  EXPECT_EQ(DecodeSample(EncodeSample(r)), r);
}

TEST(SampleTest, UnsupportedFormats) {
  for (auto f : {AudioFormat::kMp3, AudioFormat::kUlaw, AudioFormat::kMidi}) {
    try {
      LoadSample(f, Bytes{1, 2, 3});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kUnsupportedFormat);
    }
  }
  try {
    LoadWav(ToBytes("not a wav file at all"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedFile);
  }
}

TEST(PreprocessingTest, Normalize) {
  Sample s;
  s.data = {0.1, -0.5, 0.25};
  Sample n = Normalize(s);
  EXPECT_DOUBLE_EQ(n.data[1], -1.0);
  EXPECT_DOUBLE_EQ(n.data[0], 0.2);
  s.data = {0, 0};
  EXPECT_THROW(Normalize(s), Error);
  Sample part;
  part.data = {0.5, 0.25, 4};
  Sample p = NormalizeRange(part, 0, 2);
  EXPECT_EQ(p.data, (std::vector<double>{1.0, 0.5, 4}));
}

TEST(PreprocessingTest, SilenceAndEndpoint) {
  Sample s;
  s.data = {0, 0.5, 0.0001, -0.5, 0};
  EXPECT_EQ(RemoveSilence(s).data, (std::vector<double>{0.5, -0.5}));
  EXPECT_EQ(Endpoint(s).data, (std::vector<double>{0.5, 0.0001, -0.5}));
  Sample quiet;
  quiet.data = {0, 0};
  try {
    RemoveSilence(quiet);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyAfterSilence);
  }
}

TEST(PreprocessingTest, LowPassPlusHighPassReconstructs) {
  Sample s = GenerateSine("freq=200+3000,dur=0.3,rate=8000");
  Sample lo = FftFilter(s, {FilterKind::kLowPass, 1000});
  Sample hi = FftFilter(s, {FilterKind::kHighPass, 1000});
  ASSERT_EQ(lo.data.size(), s.data.size());
  for (std::size_t i = 0; i < s.data.size(); ++i) EXPECT_NEAR(lo.data[i] + hi.data[i], s.data[i], 1e-9);
}

TEST(PreprocessingTest, LowPassRemovesHighTone) {
  Sample s = GenerateSine("freq=250+2000,dur=0.256,rate=8000");
  Sample lo = FftFilter(s, {FilterKind::kLowPass, 1000});
  Sample ref = GenerateSine("freq=250,dur=0.256,rate=8000");
  for (std::size_t i = 0; i < ref.data.size(); ++i) EXPECT_NEAR(lo.data[i], ref.data[i], 1e-9);
}

TEST(PreprocessingTest, BadCutoffs) {
  Sample s = GenerateSine("freq=200,dur=0.1");
  for (FilterSpec spec : {FilterSpec{FilterKind::kLowPass, 0}, FilterSpec{FilterKind::kLowPass, 4000},
                          FilterSpec{FilterKind::kBandPass, 900, 300}}) {
    try {
      FftFilter(s, spec);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kBadCutoff);
    }
  }
}

}  // namespace
}  // namespace edupipe
