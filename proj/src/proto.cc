// src/proto.cc

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

#include "fsbed/proto.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace fsbed::proto {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

Vector mean_of(const std::vector<Vector> &vs) {
  Vector m(vs.front().size(), 0.0);
  for (const auto &v : vs)
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += v[i];
  for (double &x : m) x /= static_cast<double>(vs.size());
  return m;
}

// Forward pass keeping what backprop needs.
struct Activation {
  std::span<const double> x;
  Vector pre;    // W1 x + b1
  Vector out;    // embedding
};

Activation forward(const EmbeddingParams &p, std::span<const double> x) {
  const auto &d = p.dims;
  if (x.size() != d.input)
    throw std::invalid_argument("embedding input has " + std::to_string(x.size()) +
                                " dims, expected " + std::to_string(d.input));
  Activation a{x, Vector(d.hidden), Vector(d.embed)};
  for (std::size_t u = 0; u < d.hidden; ++u) {
    double acc = p.b1[u];
    const double *row = p.w1.data() + u * d.input;
    for (std::size_t i = 0; i < d.input; ++i) acc += row[i] * x[i];
    a.pre[u] = acc;
  }
  for (std::size_t o = 0; o < d.embed; ++o) {
    double acc = p.b2[o];
    const double *row = p.w2.data() + o * d.hidden;
    for (std::size_t u = 0; u < d.hidden; ++u) acc += row[u] * std::max(a.pre[u], 0.0);
    a.out[o] = acc;
  }
  return a;
}

void backward(const EmbeddingParams &p, const Activation &a, std::span<const double> grad_out,
              EmbeddingParams &grad) {
  const auto &d = p.dims;
  Vector grad_pre(d.hidden, 0.0);
  for (std::size_t o = 0; o < d.embed; ++o) {
    const double g = grad_out[o];
    if (g == 0.0) continue;
    grad.b2[o] += g;
    double *grow = grad.w2.data() + o * d.hidden;
    const double *row = p.w2.data() + o * d.hidden;
    for (std::size_t u = 0; u < d.hidden; ++u) {
      if (a.pre[u] <= 0.0) continue;
      grow[u] += g * a.pre[u];
      grad_pre[u] += row[u] * g;
    }
  }
  for (std::size_t u = 0; u < d.hidden; ++u) {
    const double g = grad_pre[u];
    if (g == 0.0) continue;
    grad.b1[u] += g;
    double *grow = grad.w1.data() + u * d.input;
    for (std::size_t i = 0; i < d.input; ++i) grow[i] += g * a.x[i];
  }
}

void check_episode(const Episode &ep) {
  if (ep.support.size() < 2 || ep.query.size() != ep.support.size())
    throw std::invalid_argument("episode needs >= 2 classes with support and query sets");
  for (std::size_t c = 0; c < ep.support.size(); ++c)
    if (ep.support[c].empty() || ep.query[c].empty())
      throw std::invalid_argument("episode class " + std::to_string(c) + " is empty");
}

}  // namespace

EmbeddingParams EmbeddingParams::zeros(const EmbeddingDims &dims) {
  EmbeddingParams p;
  p.dims = dims;
  p.w1.assign(dims.hidden * dims.input, 0.0);
  p.b1.assign(dims.hidden, 0.0);
  p.w2.assign(dims.embed * dims.hidden, 0.0);
  p.b2.assign(dims.embed, 0.0);
  return p;
}

EmbeddingParams EmbeddingParams::from_flat(const EmbeddingDims &dims,
                                           std::span<const double> flat) {
  EmbeddingParams p = zeros(dims);
  if (flat.size() != p.size())
    throw std::invalid_argument("flat parameter vector has " + std::to_string(flat.size()) +
                                " values, expected " + std::to_string(p.size()));
  auto it = flat.begin();
  for (auto *v : {&p.w1, &p.b1, &p.w2, &p.b2}) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(v->size()), v->begin());
    it += static_cast<std::ptrdiff_t>(v->size());
  }
  return p;
}

std::vector<double> EmbeddingParams::flat() const {
  std::vector<double> out;
  out.reserve(size());
  for (const auto *v : {&w1, &b1, &w2, &b2}) out.insert(out.end(), v->begin(), v->end());
  return out;
}

void EmbeddingParams::add_scaled(const EmbeddingParams &other, double scale) {
  if (!(other.dims == dims)) throw std::invalid_argument("parameter dims differ");
  const auto axpy = [scale](std::vector<double> &y, const std::vector<double> &x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += scale * x[i];
  };
  axpy(w1, other.w1);
  axpy(b1, other.b1);
  axpy(w2, other.w2);
  axpy(b2, other.b2);
}

bool EmbeddingParams::all_finite() const {
  for (const auto *v : {&w1, &b1, &w2, &b2})
    for (double x : *v)
      if (!std::isfinite(x)) return false;
  return true;
}

EmbeddingParams init_params(const EmbeddingDims &dims, std::uint64_t seed) {
  if (dims.input == 0 || dims.hidden == 0 || dims.embed == 0)
    throw std::invalid_argument("embedding dimensions must be positive");
  EmbeddingParams p = EmbeddingParams::zeros(dims);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> w1_dist(0.0, std::sqrt(2.0 / static_cast<double>(dims.input)));
  std::normal_distribution<double> w2_dist(0.0, std::sqrt(2.0 / static_cast<double>(dims.hidden)));
  for (double &w : p.w1) w = w1_dist(rng);
  for (double &w : p.w2) w = w2_dist(rng);
  return p;
}

Vector embed(const EmbeddingParams &params, std::span<const double> x) {
  return forward(params, x).out;
}

std::vector<Prototype> compute_prototypes(const std::vector<std::vector<Vector>> &groups) {
  std::vector<Prototype> out;
  for (std::size_t c = 0; c < groups.size(); ++c) {
    if (groups[c].empty())
      throw std::invalid_argument("class " + std::to_string(c) + " has no support embeddings");
    out.push_back({c, mean_of(groups[c])});
  }
  return out;
}

void EpisodeSpec::validate() const {
  if (n_way < 2) throw std::invalid_argument("episodes need N >= 2 classes");
  if (k_shot < 1) throw std::invalid_argument("episodes need k >= 1 shots");
  if (queries < 1) throw std::invalid_argument("episodes need q >= 1 queries");
}

LossAndGradient episode_loss(const EmbeddingParams &params, const Episode &episode) {
  check_episode(episode);
  const std::size_t n_classes = episode.support.size();
  const std::size_t embed_dim = params.dims.embed;

  std::vector<std::vector<Activation>> support(n_classes);
  std::vector<Vector> protos(n_classes, Vector(embed_dim, 0.0));
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (const auto &x : episode.support[c]) {
      support[c].push_back(forward(params, x));
      for (std::size_t i = 0; i < embed_dim; ++i) protos[c][i] += support[c].back().out[i];
    }
    for (double &v : protos[c]) v /= static_cast<double>(episode.support[c].size());
  }

  std::size_t n_queries = 0;
  for (const auto &q : episode.query) n_queries += q.size();
  const double inv_q = 1.0 / static_cast<double>(n_queries);

  LossAndGradient result{0.0, EmbeddingParams::zeros(params.dims)};
  std::vector<Vector> grad_proto(n_classes, Vector(embed_dim, 0.0));
  std::vector<double> z(n_classes);
  Vector grad_e(embed_dim);
  for (std::size_t y = 0; y < n_classes; ++y) {
    for (const auto &x : episode.query[y]) {
      const Activation a = forward(params, x);
      for (std::size_t c = 0; c < n_classes; ++c) z[c] = -squared_distance(a.out, protos[c]);
      const double zmax = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (double v : z) sum += std::exp(v - zmax);
      const double lse = zmax + std::log(sum);
      result.loss += (lse - z[y]) * inv_q;

      std::fill(grad_e.begin(), grad_e.end(), 0.0);
      for (std::size_t c = 0; c < n_classes; ++c) {
        const double dz = (std::exp(z[c] - lse) - (c == y ? 1.0 : 0.0)) * inv_q;
        for (std::size_t i = 0; i < embed_dim; ++i) {
          const double diff = a.out[i] - protos[c][i];
          grad_e[i] -= 2.0 * dz * diff;
          grad_proto[c][i] += 2.0 * dz * diff;
        }
      }
      backward(params, a, grad_e, result.gradient);
    }
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (double &g : grad_proto[c]) g /= static_cast<double>(support[c].size());
    for (const auto &a : support[c]) backward(params, a, grad_proto[c], result.gradient);
  }
  return result;
}

double episode_loss_value(const EmbeddingParams &params, const Episode &episode) {
  check_episode(episode);
  std::vector<std::vector<Vector>> embedded(episode.support.size());
  for (std::size_t c = 0; c < episode.support.size(); ++c)
    for (const auto &x : episode.support[c]) embedded[c].push_back(embed(params, x));
  const auto protos = compute_prototypes(embedded);
  double loss = 0.0;
  std::size_t n = 0;
  std::vector<double> z(protos.size());
  for (std::size_t y = 0; y < episode.query.size(); ++y) {
    for (const auto &x : episode.query[y]) {
      const Vector e = embed(params, x);
      for (std::size_t c = 0; c < protos.size(); ++c) z[c] = -squared_distance(e, protos[c].vector);
      const double zmax = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (double v : z) sum += std::exp(v - zmax);
      loss += zmax + std::log(sum) - z[y];
      ++n;
    }
  }
  return loss / static_cast<double>(n);
}

void TrainingPool::add(const std::string &label, Vector pooled) {
  if (pooled.empty()) throw std::invalid_argument("empty pooled vector");
  if (input_dim_ == 0) input_dim_ = pooled.size();
  if (pooled.size() != input_dim_) throw std::invalid_argument("pooled vector size differs");
  classes_[label].push_back(std::move(pooled));
}

void TrainingPool::add_file(const dsp::FeatureStack &features,
                            const corpus::FileAnnotations &ann) {
  for (const auto &e : ann.events) {
    if (e.tag != corpus::Tag::kPos || e.onset >= features.end_seconds()) continue;
    add(e.label, dsp::pool_segment(features, e.onset, e.offset));
  }
}

std::size_t TrainingPool::eligible_classes(std::size_t min_events) const {
  std::size_t n = 0;
  for (const auto &[label, events] : classes_)
    if (events.size() >= min_events) ++n;
  return n;
}

Episode sample_episode(const TrainingPool &pool, const EpisodeSpec &spec, std::uint64_t seed) {
  spec.validate();
  const std::size_t per_class = spec.k_shot + spec.queries;
  std::vector<const std::pair<const std::string, std::vector<Vector>> *> eligible;
  for (const auto &entry : pool.classes())
    if (entry.second.size() >= per_class) eligible.push_back(&entry);
  if (eligible.size() < spec.n_way)
    throw InsufficientDataError("episode needs N=" + std::to_string(spec.n_way) +
                                " classes with >= " + std::to_string(per_class) +
                                " events each, only " + std::to_string(eligible.size()) +
                                " available");

  std::mt19937_64 rng(seed);
  const auto partial_shuffle = [&rng](auto &v, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, v.size() - 1);
      std::swap(v[i], v[pick(rng)]);
    }
  };
  partial_shuffle(eligible, spec.n_way);

  Episode ep;
  for (std::size_t c = 0; c < spec.n_way; ++c) {
    const auto &[label, events] = *eligible[c];
    std::vector<std::size_t> idx(events.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    partial_shuffle(idx, per_class);
    ep.class_ids.push_back(label);
    ep.support.emplace_back();
    ep.query.emplace_back();
    for (std::size_t i = 0; i < per_class; ++i)
      (i < spec.k_shot ? ep.support : ep.query).back().push_back(events[idx[i]]);
  }
  return ep;
}

TrainingDivergedError::TrainingDivergedError(std::size_t step, double loss)
    : std::runtime_error("training diverged at step " + std::to_string(step) + " (loss " +
                         std::to_string(loss) + ")"),
      step_(step) {}

TrainResult train(EmbeddingParams params, const TrainingPool &pool, const TrainOptions &options,
                  const std::function<void(std::size_t, double)> &on_step) {
  options.spec.validate();
  if (!(options.learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  if (pool.input_dim() != params.dims.input)
    throw std::invalid_argument("training features have " + std::to_string(pool.input_dim()) +
                                " dims, model expects " + std::to_string(params.dims.input));
  TrainResult result;
  result.losses.reserve(options.episodes);
  for (std::size_t step = 0; step < options.episodes; ++step) {
    const Episode ep = sample_episode(pool, options.spec, splitmix64(options.seed ^ splitmix64(step)));
    const LossAndGradient lg = episode_loss(params, ep);
    if (!std::isfinite(lg.loss)) throw TrainingDivergedError(step, lg.loss);
    params.add_scaled(lg.gradient, -options.learning_rate);
    if (!params.all_finite()) throw TrainingDivergedError(step, lg.loss);
    result.losses.push_back(lg.loss);
    if (on_step) on_step(step, lg.loss);
  }
  result.params = std::move(params);
  return result;
}

std::string loss_log_csv(std::span<const double> losses) {
  std::string out = "step,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < losses.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i, losses[i]);
    out += buf;
  }
  return out;
}

// Inference ----------------------------------------------------------------

void ProtoInferConfig::validate() const {
  if (!(prob_threshold > 0.0 && prob_threshold < 1.0))
    throw std::invalid_argument("prob_threshold must be in (0, 1)");
  if (window_seconds < 0.0 || window_hop_seconds < 0.0)
    throw std::invalid_argument("window sizes must be positive (or 0 for defaults)");
  if (median_filter_width == 0 || median_filter_width % 2 == 0)
    throw std::invalid_argument("median_filter_width must be a positive odd number");
  if (!(min_event_fraction >= 0.0)) throw std::invalid_argument("min_event_fraction must be >= 0");
}

double positive_probability(double pos_dist2, double neg_dist2) {
  // 1 / (1 + exp(pos - neg)), written to avoid overflow either way.
  const double d = pos_dist2 - neg_dist2;
  if (d >= 0.0) {
    const double e = std::exp(-d);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(d));
}

std::vector<double> median_filter(std::span<const double> values, std::size_t width) {
  if (width == 0 || width % 2 == 0) throw std::invalid_argument("median width must be odd");
  const auto n = static_cast<std::ptrdiff_t>(values.size());
  const auto half = static_cast<std::ptrdiff_t>(width / 2);
  std::vector<double> out(values.size()), buf(width);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (std::ptrdiff_t k = -half; k <= half; ++k)
      buf[static_cast<std::size_t>(k + half)] =
          values[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i + k, 0, n - 1))];
    std::nth_element(buf.begin(), buf.begin() + half, buf.end());
    out[static_cast<std::size_t>(i)] = buf[static_cast<std::size_t>(half)];
  }
  return out;
}

std::vector<Event> infer_fewshot(const EmbeddingParams &params, const dsp::FeatureStack &features,
                                 const FewShotTask &task, const ProtoInferConfig &cfg,
                                 std::span<const Event> negatives) {
  cfg.validate();
  if (task.shots.empty()) throw std::invalid_argument("task has no shots");
  const double file_end = features.end_seconds();
  for (const auto &s : task.shots)
    if (s.onset >= file_end) throw std::invalid_argument("shot lies outside the features");

  const double mean_shot = task.mean_shot_duration();
  const double window = cfg.window_seconds > 0.0 ? cfg.window_seconds : mean_shot;
  const double hop = cfg.window_hop_seconds > 0.0 ? cfg.window_hop_seconds : window / 4.0;
  const auto embed_segment = [&](double t0, double t1) {
    return embed(params, dsp::pool_segment(features, t0, t1));
  };

  std::vector<Vector> pos;
  for (const auto &s : task.shots) pos.push_back(embed_segment(s.onset, s.offset));
  const Vector pos_proto = mean_of(pos);

  std::vector<Vector> neg;
  for (double t = 0.0; t + window <= task.query_start + 1e-9; t += window) {
    const bool hits_shot = std::any_of(task.shots.begin(), task.shots.end(), [&](const Event &s) {
      return std::min(s.offset, t + window) > std::max(s.onset, t);
    });
    if (!hits_shot) neg.push_back(embed_segment(t, t + window));
  }
  for (const auto &e : negatives)
    if (e.onset < file_end) neg.push_back(embed_segment(e.onset, e.offset));

  std::vector<double> starts;
  for (double t = task.query_start; t + window <= file_end + 1e-9;
       t = task.query_start + static_cast<double>(starts.size()) * hop)
    starts.push_back(t);
  if (starts.empty()) return {};
  std::vector<Vector> windows;
  windows.reserve(starts.size());
  for (double t : starts) windows.push_back(embed_segment(t, t + window));

  if (neg.empty()) {
    // Fallback: the query windows least like the shots.
    std::vector<std::size_t> order(windows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> dist(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) dist[i] = squared_distance(windows[i], pos_proto);
    const std::size_t take = std::min<std::size_t>(FewShotTask::kShots, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return dist[a] != dist[b] ? dist[a] > dist[b] : a < b;
                      });
    for (std::size_t i = 0; i < take; ++i) neg.push_back(windows[order[i]]);
  }
  const Vector neg_proto = mean_of(neg);

  std::vector<double> prob(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i)
    prob[i] = positive_probability(squared_distance(windows[i], pos_proto),
                                   squared_distance(windows[i], neg_proto));
  prob = median_filter(prob, cfg.median_filter_width);

  std::vector<Event> events;
  const std::string label = task.class_label.empty() ? "POS" : task.class_label;
  for (std::size_t i = 0; i < prob.size();) {
    if (!(prob[i] > cfg.prob_threshold)) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < prob.size() && prob[end] > cfg.prob_threshold) ++end;
    const double onset = std::max(task.query_start, starts[i] + 0.5 * window - 0.5 * hop);
    const double offset = std::min(file_end, starts[end - 1] + 0.5 * window + 0.5 * hop);
    if (offset > onset && offset - onset >= cfg.min_event_fraction * mean_shot)
      events.push_back(Event{onset, offset, label, corpus::Tag::kPos});
    i = end;
  }
  return events;
}

// Checkpoints -----------------------------------------------------------------

namespace {

constexpr const char *kCheckpointFormat = "fsbed-proto-checkpoint-v1";

nlohmann::json feature_config_json(const dsp::FeatureConfig &f) {
  return {{"sample_rate", f.sample_rate},
          {"n_fft", f.stft.n_fft},
          {"hop", f.stft.hop},
          {"mel_bands", f.mel.bands},
          {"fmin", f.mel.fmin},
          {"fmax", f.mel.fmax},
          {"pcen_smoothing", f.pcen.smoothing},
          {"pcen_gain", f.pcen.gain},
          {"pcen_bias", f.pcen.bias},
          {"pcen_exponent", f.pcen.exponent},
          {"pcen_floor", f.pcen.floor},
          {"mfcc_coeffs", f.mfcc_coeffs},
          {"kind", dsp::feature_kind_name(f.kind)}};
}

dsp::FeatureConfig feature_config_from_json(const nlohmann::json &j) {
  dsp::FeatureConfig f;
  f.sample_rate = j.at("sample_rate").get<int>();
  f.stft.n_fft = j.at("n_fft").get<std::size_t>();
  f.stft.hop = j.at("hop").get<std::size_t>();
  f.mel.bands = j.at("mel_bands").get<std::size_t>();
  f.mel.fmin = j.at("fmin").get<double>();
  f.mel.fmax = j.at("fmax").get<double>();
  f.pcen.smoothing = j.at("pcen_smoothing").get<double>();
  f.pcen.gain = j.at("pcen_gain").get<double>();
  f.pcen.bias = j.at("pcen_bias").get<double>();
  f.pcen.exponent = j.at("pcen_exponent").get<double>();
  f.pcen.floor = j.at("pcen_floor").get<double>();
  f.mfcc_coeffs = j.at("mfcc_coeffs").get<std::size_t>();
  const auto kind = dsp::parse_feature_kind(j.at("kind").get<std::string>());
  if (!kind) throw std::runtime_error("unknown feature kind in checkpoint");
  f.kind = *kind;
  return f;
}

}  // namespace

void save_checkpoint(const std::filesystem::path &path, const EmbeddingParams &params,
                     const CheckpointMeta &meta) {
  const auto flat = params.flat();
  const nlohmann::json header = {
      {"format", kCheckpointFormat},
      {"dims", {{"input", params.dims.input}, {"hidden", params.dims.hidden}, {"embed", params.dims.embed}}},
      {"layer_order", {"w1", "b1", "w2", "b2"}},
      {"weights", flat.size()},
      {"features", feature_config_json(meta.features)},
      {"training",
       {{"episodes", meta.training.episodes},
        {"learning_rate", meta.training.learning_rate},
        {"n_way", meta.training.spec.n_way},
        {"k_shot", meta.training.spec.k_shot},
        {"queries", meta.training.spec.queries},
        {"seed", meta.training.seed}}}};
  std::string out = header.dump();
  out += '\n';
  for (double w : flat) {
    std::uint64_t bits;
    std::memcpy(&bits, &w, sizeof(bits));
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty checkpoint " + path.string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception &e) {
    throw std::runtime_error("corrupt checkpoint header in " + path.string() + ": " + e.what());
  }
  if (header.value("format", "") != kCheckpointFormat)
    throw std::runtime_error("not a checkpoint: " + path.string());

  Checkpoint ck;
  const auto &dims = header.at("dims");
  const EmbeddingDims d{dims.at("input").get<std::size_t>(), dims.at("hidden").get<std::size_t>(),
                        dims.at("embed").get<std::size_t>()};
  const auto n = header.at("weights").get<std::size_t>();
  std::vector<unsigned char> raw(n * 8);
  f.read(reinterpret_cast<char *>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(f.gcount()) != raw.size())
    throw std::runtime_error("truncated checkpoint " + path.string());
  std::vector<double> flat(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(raw[i * 8 + b]) << (8 * b);
    std::memcpy(&flat[i], &bits, sizeof(double));
  }
  ck.params = EmbeddingParams::from_flat(d, flat);
  ck.meta.features = feature_config_from_json(header.at("features"));
  const auto &t = header.at("training");
  ck.meta.training.episodes = t.at("episodes").get<std::size_t>();
  ck.meta.training.learning_rate = t.at("learning_rate").get<double>();
  ck.meta.training.spec = {t.at("n_way").get<std::size_t>(), t.at("k_shot").get<std::size_t>(),
                           t.at("queries").get<std::size_t>()};
  ck.meta.training.seed = t.at("seed").get<std::uint64_t>();
  return ck;
}

}  // namespace fsbed::proto
