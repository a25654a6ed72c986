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

#include <span>
#include <vector>

#include "edupipe/pipeline/classify.h"

namespace edupipe {

inline constexpr std::size_t kDefaultOutputNeuronBits = 32;
inline constexpr double kDefaultTrainingConstant = 1.0;
inline constexpr int kDefaultEpochNumber = 64;
inline constexpr double kDefaultMinError = 0.1;

struct TrainingExample {
  std::vector<double> input;
  std::vector<double> target;
};

struct NnTrainResult {
  int epochs = 0;
  double error = 0.0;
  // False when the epoch cap was hit with error still >= min_error.
  bool converged = false;
};

// Fully connected feedforward network of sigmoid units with biases,
// trained by online backpropagation.
class NeuralNetwork {
 public:
  // Weights start uniform in [-1, 1) from `seed`.
  static NeuralNetwork Generate(std::size_t inputs, const std::vector<std::size_t>& hidden,
                                std::size_t outputs, std::uint64_t seed);

  std::vector<double> Forward(std::span<const double> input) const;

  // Mean over examples and outputs of (output - target)^2.
  double Error(std::span<const TrainingExample> data) const;
  // Gradient of Error() with respect to Parameters().
  std::vector<double> Gradient(std::span<const TrainingExample> data) const;

  // One online pass per epoch, in data order; stops once Error() drops
  // below `min_error`.
  NnTrainResult Train(std::span<const TrainingExample> data, int epochs = kDefaultEpochNumber,
                      double rate = kDefaultTrainingConstant, double min_error = kDefaultMinError);

  // Flattened weights then biases, layer by layer.
  std::vector<double> Parameters() const;
  void SetParameters(std::span<const double> params);

  std::size_t inputs() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t outputs() const { return layers_.empty() ? 0 : layers_.back().out; }

 private:
  struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    // Row-major out x in.
    std::vector<double> w;
    std::vector<double> b;
  };

  // Activations of every layer, input first.
  std::vector<std::vector<double>> Activations(std::span<const double> input) const;
  // Accumulates d(0.5 * sum (o - t)^2) / dparams scaled by `scale` into
  // `grad`, laid out like Parameters().
  void Backprop(const TrainingExample& ex, double scale, std::vector<double>& grad) const;

  std::vector<Layer> layers_;
};

// Subject id as output targets, least significant bit first.
std::vector<double> EncodeIdBits(SubjectId id, std::size_t bits = kDefaultOutputNeuronBits);
// Thresholds each output at 0.5.
SubjectId DecodeIdBits(std::span<const double> outputs);

// Decoded id with outcome = squared distance from the ideal bit pattern.
ResultSet NnClassify(const NeuralNetwork& net, const FeatureVector& fv);

}  // namespace edupipe
