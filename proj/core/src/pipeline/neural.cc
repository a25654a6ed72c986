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

#include "edupipe/pipeline/neural.h"

#include <cmath>
#include <random>

namespace edupipe {

namespace {

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

NeuralNetwork NeuralNetwork::Generate(std::size_t inputs, const std::vector<std::size_t>& hidden,
                                      std::size_t outputs, std::uint64_t seed) {
  if (inputs == 0 || outputs == 0) Fail(ErrorCode::kBadParameter, "network needs inputs and outputs");
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] {
    return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
  };
  NeuralNetwork net;
  std::vector<std::size_t> sizes{inputs};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(outputs);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l + 1] == 0) Fail(ErrorCode::kBadParameter, "hidden layer of size zero");
    Layer layer;
    layer.in = sizes[l];
    layer.out = sizes[l + 1];
    layer.w.resize(layer.in * layer.out);
    layer.b.resize(layer.out);
    for (auto& w : layer.w) w = uniform();
    for (auto& b : layer.b) b = uniform();
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

std::vector<std::vector<double>> NeuralNetwork::Activations(std::span<const double> input) const {
  if (input.size() != inputs()) {
    Fail(ErrorCode::kDimensionMismatch, "network expects " + std::to_string(inputs()) + " inputs");
  }
  std::vector<std::vector<double>> acts;
  acts.emplace_back(input.begin(), input.end());
  for (const Layer& layer : layers_) {
    const auto& x = acts.back();
    std::vector<double> y(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      double z = layer.b[o];
      for (std::size_t i = 0; i < layer.in; ++i) z += layer.w[o * layer.in + i] * x[i];
      y[o] = Sigmoid(z);
    }
    acts.push_back(std::move(y));
  }
  return acts;
}

std::vector<double> NeuralNetwork::Forward(std::span<const double> input) const {
  return Activations(input).back();
}

double NeuralNetwork::Error(std::span<const TrainingExample> data) const {
  if (data.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& ex : data) {
    auto out = Forward(ex.input);
    if (ex.target.size() != out.size()) Fail(ErrorCode::kDimensionMismatch, "target length differs from outputs");
    for (std::size_t k = 0; k < out.size(); ++k) sum += (out[k] - ex.target[k]) * (out[k] - ex.target[k]);
  }
  return sum / static_cast<double>(data.size() * outputs());
}

void NeuralNetwork::Backprop(const TrainingExample& ex, double scale,
                             std::vector<double>& grad) const {
  auto acts = Activations(ex.input);
  if (ex.target.size() != outputs()) Fail(ErrorCode::kDimensionMismatch, "target length differs from outputs");

  std::vector<std::size_t> offset(layers_.size());
  std::size_t pos = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    offset[l] = pos;
    pos += layers_[l].w.size() + layers_[l].b.size();
  }

  const auto& out = acts.back();
  std::vector<double> delta(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    delta[k] = (out[k] - ex.target[k]) * out[k] * (1.0 - out[k]);
  }
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    const auto& x = acts[l];
    double* gw = grad.data() + offset[l];
    double* gb = gw + layer.w.size();
    for (std::size_t o = 0; o < layer.out; ++o) {
      for (std::size_t i = 0; i < layer.in; ++i) gw[o * layer.in + i] += scale * delta[o] * x[i];
      gb[o] += scale * delta[o];
    }
    if (l == 0) break;
    std::vector<double> prev(layer.in, 0.0);
    for (std::size_t i = 0; i < layer.in; ++i) {
      double s = 0.0;
      for (std::size_t o = 0; o < layer.out; ++o) s += layer.w[o * layer.in + i] * delta[o];
      prev[i] = s * x[i] * (1.0 - x[i]);
    }
    delta = std::move(prev);
  }
}

std::vector<double> NeuralNetwork::Gradient(std::span<const TrainingExample> data) const {
  std::vector<double> grad(Parameters().size(), 0.0);
  if (data.empty()) return grad;
  // Error() averages (o - t)^2; Backprop differentiates 0.5 * sum (o - t)^2.
  const double scale = 2.0 / static_cast<double>(data.size() * outputs());
  for (const auto& ex : data) Backprop(ex, scale, grad);
  return grad;
}

NnTrainResult NeuralNetwork::Train(std::span<const TrainingExample> data, int epochs, double rate,
                                   double min_error) {
  NnTrainResult result;
  result.error = Error(data);
  const std::size_t n_params = Parameters().size();
  while (result.error >= min_error && result.epochs < epochs) {
    for (const auto& ex : data) {
      std::vector<double> grad(n_params, 0.0);
      Backprop(ex, 1.0, grad);
      std::size_t p = 0;
      for (Layer& layer : layers_) {
        for (auto& w : layer.w) w -= rate * grad[p++];
        for (auto& b : layer.b) b -= rate * grad[p++];
      }
    }
    ++result.epochs;
    result.error = Error(data);
  }
  result.converged = result.error < min_error;
  return result;
}

std::vector<double> NeuralNetwork::Parameters() const {
  std::vector<double> p;
  for (const Layer& layer : layers_) {
    p.insert(p.end(), layer.w.begin(), layer.w.end());
    p.insert(p.end(), layer.b.begin(), layer.b.end());
  }
  return p;
}

void NeuralNetwork::SetParameters(std::span<const double> params) {
  if (params.size() != Parameters().size()) Fail(ErrorCode::kDimensionMismatch, "parameter count differs");
  std::size_t p = 0;
  for (Layer& layer : layers_) {
    for (auto& w : layer.w) w = params[p++];
    for (auto& b : layer.b) b = params[p++];
  }
}

std::vector<double> EncodeIdBits(SubjectId id, std::size_t bits) {
  if (bits > 32) Fail(ErrorCode::kBadParameter, "at most 32 id bits");
  if (bits < 32 && (static_cast<std::uint64_t>(id) >> bits) != 0) {
    Fail(ErrorCode::kBadParameter, "id " + std::to_string(id) + " does not fit in " + std::to_string(bits) + " bits");
  }
  std::vector<double> out(bits);
  for (std::size_t i = 0; i < bits; ++i) out[i] = (id >> i) & 1u ? 1.0 : 0.0;
  return out;
}

SubjectId DecodeIdBits(std::span<const double> outputs) {
  if (outputs.size() > 32) Fail(ErrorCode::kBadParameter, "at most 32 id bits");
  SubjectId id = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (outputs[i] >= 0.5) id |= SubjectId{1} << i;
  }
  return id;
}

ResultSet NnClassify(const NeuralNetwork& net, const FeatureVector& fv) {
  auto out = net.Forward(fv);
  SubjectId id = DecodeIdBits(out);
  auto ideal = EncodeIdBits(id, out.size());
  ResultSet rs;
  rs.Add(id, Distance(Metric::kEuclidean, out, ideal), "neural network");
  return rs;
}

}  // namespace edupipe
