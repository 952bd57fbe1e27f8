// include/fsbed/proto.h

// Copyright 2026 The fsbed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FSBED_PROTO_H_
#define FSBED_PROTO_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsbed/corpus.h"
#include "fsbed/dsp.h"

namespace fsbed::proto {

using corpus::Event;
using corpus::FewShotTask;
using Vector = std::vector<double>;

struct EmbeddingDims {
  std::size_t input = 0;
  std::size_t hidden = 64;
  std::size_t embed = 32;

  friend bool operator==(const EmbeddingDims &, const EmbeddingDims &) = default;
};

/// Weights of x -> W2 relu(W1 x + b1) + b2. Matrices are row-major with one
/// row per output unit. The same layout holds gradients.
///
/// Flat layer order (checkpoints, finite differences): W1, b1, W2, b2.
struct EmbeddingParams {
  EmbeddingDims dims;
  std::vector<double> w1;  // hidden x input
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // embed x hidden
  std::vector<double> b2;  // embed

  static EmbeddingParams zeros(const EmbeddingDims &dims);
  static EmbeddingParams from_flat(const EmbeddingDims &dims, std::span<const double> flat);

  std::size_t size() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
  std::vector<double> flat() const;

  /// this += scale * other
  void add_scaled(const EmbeddingParams &other, double scale);
  bool all_finite() const;

  friend bool operator==(const EmbeddingParams &, const EmbeddingParams &) = default;
};

/// He-normal weights, zero biases.
EmbeddingParams init_params(const EmbeddingDims &dims, std::uint64_t seed);

/// Throws std::invalid_argument on a dimension mismatch.
Vector embed(const EmbeddingParams &params, std::span<const double> x);

struct Prototype {
  std::size_t class_id = 0;
  Vector vector;
};

/// Per-class mean; groups[c] holds the embedded support vectors of class c.
std::vector<Prototype> compute_prototypes(const std::vector<std::vector<Vector>> &groups);

struct EpisodeSpec {
  std::size_t n_way = 5;
  std::size_t k_shot = 2;
  std::size_t queries = 3;

  void validate() const;
};

/// support[c] has k vectors, query[c] has q vectors, all pooled features.
struct Episode {
  std::vector<std::vector<Vector>> support;
  std::vector<std::vector<Vector>> query;
  std::vector<std::string> class_ids;
};

struct LossAndGradient {
  double loss = 0.0;
  EmbeddingParams gradient;
};

/// Mean cross-entropy of softmax(-squared distance to each prototype) over
/// all queries, with the analytic gradient through prototypes and embedding.
LossAndGradient episode_loss(const EmbeddingParams &params, const Episode &episode);

/// Loss only; the finite-difference oracle in the tests uses this.
double episode_loss_value(const EmbeddingParams &params, const Episode &episode);

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pooled positive events per class label.
class TrainingPool {
 public:
  void add(const std::string &label, Vector pooled);

  /// Adds a pool_segment for every POS event of `ann` found in `features`.
  void add_file(const dsp::FeatureStack &features, const corpus::FileAnnotations &ann);

  const std::map<std::string, std::vector<Vector>> &classes() const { return classes_; }
  std::size_t input_dim() const { return input_dim_; }
  /// Classes with at least `min_events` events.
  std::size_t eligible_classes(std::size_t min_events) const;

 private:
  std::map<std::string, std::vector<Vector>> classes_;
  std::size_t input_dim_ = 0;
};

/// N classes uniformly among those with >= k + q events, then k + q distinct
/// events per class (first k support, rest query). Deterministic in `seed`.
/// Throws InsufficientDataError naming N and the eligible class count.
Episode sample_episode(const TrainingPool &pool, const EpisodeSpec &spec, std::uint64_t seed);

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(std::size_t step, double loss);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct TrainOptions {
  std::size_t episodes = 2000;
  double learning_rate = 0.01;
  EpisodeSpec spec;
  std::uint64_t seed = 0;
};

struct TrainResult {
  EmbeddingParams params;
  std::vector<double> losses;  // one per step
};

/// Plain gradient descent, one episode per step. Episode i is sampled with a
/// seed derived from (options.seed, i). `on_step` (optional) sees every loss.
TrainResult train(EmbeddingParams params, const TrainingPool &pool, const TrainOptions &options,
                  const std::function<void(std::size_t, double)> &on_step = {});

/// "step,loss" CSV.
std::string loss_log_csv(std::span<const double> losses);

struct ProtoInferConfig {
  double window_seconds = 0.0;       // 0: mean shot duration
  double window_hop_seconds = 0.0;   // 0: window / 4
  double prob_threshold = 0.5;       // strict >
  std::size_t median_filter_width = 5;
  double min_event_fraction = 0.3;   // of the mean shot duration

  void validate() const;
};

/// softmax([-pos_dist2, -neg_dist2])[0].
double positive_probability(double pos_dist2, double neg_dist2);

/// Centered running median with edge replication; `width` must be odd.
std::vector<double> median_filter(std::span<const double> values, std::size_t width);

/// Few-shot detection for one file.
///
/// The positive prototype is the mean embedding of the five shots. The
/// negative prototype averages windows tiled over [0, query_start) that miss
/// every shot, plus any `negatives` supplied (e.g. annotated NEG events).
/// With no negative material it falls back to the five query windows farthest
/// from the positive prototype. Windows slide over [query_start, end); the
/// median-filtered positive probability is thresholded into events, and
/// events shorter than min_event_fraction x mean shot duration are dropped.
std::vector<Event> infer_fewshot(const EmbeddingParams &params, const dsp::FeatureStack &features,
                                 const FewShotTask &task, const ProtoInferConfig &cfg,
                                 std::span<const Event> negatives = {});

// Checkpoints ---------------------------------------------------------------

struct CheckpointMeta {
  dsp::FeatureConfig features;
  TrainOptions training;
};

/// A one-line JSON header, a newline, then the flat float64 weights in
/// little-endian byte order (W1, b1, W2, b2).
void save_checkpoint(const std::filesystem::path &path, const EmbeddingParams &params,
                     const CheckpointMeta &meta);

struct Checkpoint {
  EmbeddingParams params;
  CheckpointMeta meta;
};

Checkpoint load_checkpoint(const std::filesystem::path &path);

}  // namespace fsbed::proto

#endif  // FSBED_PROTO_H_
