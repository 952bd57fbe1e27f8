// src/eval.cc

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

#include "fsbed/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace fsbed::eval {

double iou(const Event &a, const Event &b) {
  const double inter = std::min(a.offset, b.offset) - std::max(a.onset, b.onset);
  if (inter <= 0.0) return 0.0;
  const double uni = std::max(a.offset, b.offset) - std::min(a.onset, b.onset);
  return uni > 0.0 ? inter / uni : 0.0;
}

double MatchResult::total_iou() const {
  double sum = 0.0;
  for (const auto &p : pairs) sum += p.iou;
  return sum;
}

namespace {

constexpr double kWeightTolerance = 1e-9;

// Above this many edges a component skips the lexicographic tie-break pass;
// the matching is still maximum-cardinality with maximal total IoU.
constexpr std::size_t kTieBreakEdgeLimit = 256;

struct Edge {
  std::size_t left;   // component-local gt index
  std::size_t right;  // component-local pred index
  double weight;
};

struct Assignment {
  std::size_t cardinality = 0;
  double weight = 0.0;
  std::vector<std::size_t> edges;  // indices into the edge list
};

// Maximum-cardinality, maximum-weight matching by successive shortest
// augmenting paths (Bellman-Ford over the residual graph, cost = -weight).
// Vertices flagged in the masks are treated as absent.
Assignment solve_assignment(std::size_t n_left, std::size_t n_right,
                            const std::vector<Edge> &edges,
                            const std::vector<bool> &left_removed,
                            const std::vector<bool> &right_removed) {
  // Node ids: 0 = source, 1..n_left, then right nodes, then sink.
  const std::size_t source = 0;
  const std::size_t sink = 1 + n_left + n_right;
  const std::size_t n_nodes = sink + 1;

  struct Arc {
    std::size_t to;
    std::size_t rev;
    int cap;
    double cost;
    std::size_t edge_id;  // SIZE_MAX for source/sink arcs
  };
  std::vector<std::vector<Arc>> graph(n_nodes);
  const auto add_arc = [&](std::size_t from, std::size_t to, double cost, std::size_t id) {
    graph[from].push_back({to, graph[to].size(), 1, cost, id});
    graph[to].push_back({from, graph[from].size() - 1, 0, -cost, id});
  };
  constexpr auto kNone = std::numeric_limits<std::size_t>::max();
  for (std::size_t l = 0; l < n_left; ++l)
    if (!left_removed[l]) add_arc(source, 1 + l, 0.0, kNone);
  for (std::size_t r = 0; r < n_right; ++r)
    if (!right_removed[r]) add_arc(1 + n_left + r, sink, 0.0, kNone);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge &edge = edges[e];
    if (left_removed[edge.left] || right_removed[edge.right]) continue;
    add_arc(1 + edge.left, 1 + n_left + edge.right, -edge.weight, e);
  }

  Assignment result;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n_nodes);
  std::vector<std::pair<std::size_t, std::size_t>> parent(n_nodes);  // (node, arc index)
  while (true) {
    std::fill(dist.begin(), dist.end(), inf);
    dist[source] = 0.0;
    for (std::size_t iter = 0; iter + 1 < n_nodes; ++iter) {
      bool changed = false;
      for (std::size_t u = 0; u < n_nodes; ++u) {
        if (dist[u] == inf) continue;
        for (std::size_t a = 0; a < graph[u].size(); ++a) {
          const Arc &arc = graph[u][a];
          if (arc.cap <= 0) continue;
          const double nd = dist[u] + arc.cost;
          if (nd < dist[arc.to] - 1e-12) {
            dist[arc.to] = nd;
            parent[arc.to] = {u, a};
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (dist[sink] == inf) break;
    for (std::size_t v = sink; v != source;) {
      auto [u, a] = parent[v];
      Arc &arc = graph[u][a];
      arc.cap -= 1;
      graph[v][arc.rev].cap += 1;
      v = u;
    }
    ++result.cardinality;
  }

  for (std::size_t l = 0; l < n_left; ++l) {
    for (const Arc &arc : graph[1 + l]) {
      if (arc.edge_id == kNone || arc.to == source || arc.cap != 0) continue;
      if (arc.to <= n_left) continue;  // reverse arcs point back to left nodes
      result.edges.push_back(arc.edge_id);
      result.weight += edges[arc.edge_id].weight;
    }
  }
  return result;
}

bool same_optimum(std::size_t card_a, double weight_a, std::size_t card_b, double weight_b) {
  return card_a == card_b && std::abs(weight_a - weight_b) <= kWeightTolerance;
}

// Picks, among optimal assignments, the one whose sorted edge list is
// lexicographically smallest. `edges` must already be in (left, right) order.
std::vector<std::size_t> lexicographic_optimum(std::size_t n_left, std::size_t n_right,
                                               const std::vector<Edge> &edges,
                                               const Assignment &optimum) {
  std::vector<bool> left_removed(n_left, false), right_removed(n_right, false);
  std::vector<std::size_t> chosen;
  std::size_t chosen_card = 0;
  double chosen_weight = 0.0;
  for (std::size_t e = 0; e < edges.size() && chosen_card < optimum.cardinality; ++e) {
    const Edge &edge = edges[e];
    if (left_removed[edge.left] || right_removed[edge.right]) continue;
    left_removed[edge.left] = right_removed[edge.right] = true;
    const Assignment rest = solve_assignment(n_left, n_right, edges, left_removed, right_removed);
    if (same_optimum(chosen_card + 1 + rest.cardinality, chosen_weight + edge.weight + rest.weight,
                     optimum.cardinality, optimum.weight)) {
      chosen.push_back(e);
      ++chosen_card;
      chosen_weight += edge.weight;
    } else {
      left_removed[edge.left] = right_removed[edge.right] = false;
    }
  }
  return chosen;
}

std::size_t find_root(std::vector<std::size_t> &parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

MatchResult match_events(std::span<const Event> gt, std::span<const Event> pred,
                         double min_iou) {
  if (!(min_iou > 0.0 && min_iou <= 1.0)) throw std::invalid_argument("min_iou must be in (0, 1]");
  const std::size_t n_gt = gt.size();
  const std::size_t n_pred = pred.size();

  // Candidate edges, then connected components over gt + pred vertices.
  std::vector<MatchedPair> all_edges;
  std::vector<std::size_t> parent(n_gt + n_pred);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t i = 0; i < n_gt; ++i) {
    for (std::size_t j = 0; j < n_pred; ++j) {
      const double w = iou(gt[i], pred[j]);
      if (w >= min_iou) {
        all_edges.push_back({i, j, w});
        const std::size_t a = find_root(parent, i), b = find_root(parent, n_gt + j);
        if (a != b) parent[a] = b;
      }
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> components;  // root -> edge ids
  for (std::size_t e = 0; e < all_edges.size(); ++e)
    components[find_root(parent, all_edges[e].gt)].push_back(e);

  MatchResult result;
  std::vector<bool> gt_used(n_gt, false), pred_used(n_pred, false);
  for (const auto &[root, edge_ids] : components) {
    // Local numbering keeps the (gt, pred) order of the global indices.
    std::vector<std::size_t> lefts, rights;
    for (std::size_t e : edge_ids) {
      lefts.push_back(all_edges[e].gt);
      rights.push_back(all_edges[e].pred);
    }
    std::sort(lefts.begin(), lefts.end());
    lefts.erase(std::unique(lefts.begin(), lefts.end()), lefts.end());
    std::sort(rights.begin(), rights.end());
    rights.erase(std::unique(rights.begin(), rights.end()), rights.end());
    const auto local = [](const std::vector<std::size_t> &v, std::size_t x) {
      return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
    };
    std::vector<Edge> edges;
    for (std::size_t e : edge_ids)
      edges.push_back({local(lefts, all_edges[e].gt), local(rights, all_edges[e].pred),
                       all_edges[e].iou});
    // all_edges was generated in (gt, pred) order, so `edges` already is too.

    const std::vector<bool> none_l(lefts.size(), false), none_r(rights.size(), false);
    const Assignment optimum = solve_assignment(lefts.size(), rights.size(), edges, none_l, none_r);
    const std::vector<std::size_t> chosen =
        edges.size() <= kTieBreakEdgeLimit
            ? lexicographic_optimum(lefts.size(), rights.size(), edges, optimum)
            : optimum.edges;
    for (std::size_t e : chosen) {
      const std::size_t g = lefts[edges[e].left], p = rights[edges[e].right];
      result.pairs.push_back({g, p, edges[e].weight});
      gt_used[g] = pred_used[p] = true;
    }
  }
  std::sort(result.pairs.begin(), result.pairs.end(),
            [](const MatchedPair &a, const MatchedPair &b) { return a.gt < b.gt; });
  for (std::size_t i = 0; i < n_gt; ++i)
    if (!gt_used[i]) result.unmatched_gt.push_back(i);
  for (std::size_t j = 0; j < n_pred; ++j)
    if (!pred_used[j]) result.unmatched_pred.push_back(j);
  return result;
}

Prf prf(const ScoreCounts &c) {
  Prf out;
  const auto tp = static_cast<double>(c.tp);
  if (c.tp + c.fp > 0) out.precision = tp / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) out.recall = tp / static_cast<double>(c.tp + c.fn);
  if (out.precision + out.recall > 0.0)
    out.fscore = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  return out;
}

void ScoringOptions::validate() const {
  if (!(min_iou > 0.0 && min_iou <= 1.0)) throw std::invalid_argument("min_iou must be in (0, 1]");
}

ScoreCounts score_file(const corpus::FileAnnotations &ann, const std::string &pred_audio_id,
                       std::span<const Event> pred, const corpus::FewShotTask &task,
                       const ScoringOptions &options) {
  options.validate();
  if (pred_audio_id != ann.audio_id)
    throw std::invalid_argument("predictions for '" + pred_audio_id + "' scored against '" +
                                ann.audio_id + "'");
  std::vector<Event> gt, unk;
  for (const auto &e : ann.events) {
    if (e.tag == corpus::Tag::kUnk) unk.push_back(e);
    else if (e.tag == corpus::Tag::kPos && e.onset >= task.query_start) gt.push_back(e);
  }
  std::vector<Event> kept;
  for (const auto &p : pred) {
    if (p.onset < task.query_start) continue;
    if (options.ignore_unk) {
      double best = 0.0;
      for (const auto &u : unk) best = std::max(best, iou(p, u));
      if (best >= options.min_iou) continue;
    }
    kept.push_back(p);
  }
  const MatchResult m = match_events(gt, kept, options.min_iou);
  return {m.pairs.size(), m.unmatched_pred.size(), m.unmatched_gt.size()};
}

ScoreReport aggregate(const std::map<std::string, ScoreCounts> &files,
                      const std::map<std::string, std::string> &dataset_of) {
  ScoreReport report;
  report.files = files;
  for (const auto &[id, counts] : files) {
    const auto it = dataset_of.find(id);
    if (it == dataset_of.end()) throw std::invalid_argument("file '" + id + "' has no dataset");
    report.datasets[it->second].counts += counts;
    report.overall.counts += counts;
  }
  double macro = 0.0;
  for (auto &[name, summary] : report.datasets) {
    summary.prf = prf(summary.counts);
    macro += summary.prf.fscore;
  }
  report.overall.prf = prf(report.overall.counts);
  report.macro_fscore = report.datasets.empty() ? 0.0 : macro / static_cast<double>(report.datasets.size());
  return report;
}

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty sample");
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ConfidenceInterval bootstrap_ci(std::span<const ScoreCounts> files, std::size_t iterations,
                                std::uint64_t seed) {
  if (files.size() < 2) throw std::invalid_argument("bootstrap needs at least two files");
  if (iterations == 0) throw std::invalid_argument("bootstrap needs at least one iteration");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, files.size() - 1);
  std::vector<double> scores(iterations);
  for (auto &score : scores) {
    ScoreCounts total;
    for (std::size_t i = 0; i < files.size(); ++i) total += files[pick(rng)];
    score = prf(total).fscore;
  }
  std::sort(scores.begin(), scores.end());
  return {percentile_sorted(scores, 0.025), percentile_sorted(scores, 0.975)};
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string quoted(const std::string &s) { return nlohmann::json(s).dump(); }

std::string summary_json(const ScoreCounts &c, const Prf &p) {
  return "{\"TP\": " + std::to_string(c.tp) + ", \"FP\": " + std::to_string(c.fp) +
         ", \"FN\": " + std::to_string(c.fn) + ", \"precision\": " + fixed6(p.precision) +
         ", \"recall\": " + fixed6(p.recall) + ", \"fscore\": " + fixed6(p.fscore);
}

}  // namespace

std::string report_to_json(const ScoreReport &report, const ReportConfig &config,
                           const std::vector<std::string> &warnings) {
  std::string out = "{\n  \"overall\": ";
  out += summary_json(report.overall.counts, report.overall.prf);
  out += ", \"fscore_macro\": " + fixed6(report.macro_fscore);
  out += ", \"ci\": ";
  out += report.ci ? "[" + fixed6(report.ci->low) + ", " + fixed6(report.ci->high) + "]" : "null";
  out += "},\n  \"datasets\": {";
  bool first = true;
  for (const auto &[name, s] : report.datasets) {
    out += first ? "\n    " : ",\n    ";
    out += quoted(name) + ": " + summary_json(s.counts, s.prf) + "}";
    first = false;
  }
  out += first ? "},\n" : "\n  },\n";
  out += "  \"files\": {";
  first = true;
  for (const auto &[id, c] : report.files) {
    out += first ? "\n    " : ",\n    ";
    out += quoted(id) + ": " + summary_json(c, prf(c)) + "}";
    first = false;
  }
  out += first ? "},\n" : "\n  },\n";
  out += "  \"config\": {\"min_iou\": " + fixed6(config.min_iou) +
         ", \"ignore_unk\": " + (config.ignore_unk ? "true" : "false") +
         ", \"bootstrap_iterations\": " + std::to_string(config.bootstrap_iterations) +
         ", \"seed\": " + std::to_string(config.seed) + "},\n";
  out += "  \"warnings\": [";
  for (std::size_t i = 0; i < warnings.size(); ++i) out += (i ? ", " : "") + quoted(warnings[i]);
  out += "]\n}\n";
  return out;
}

}  // namespace fsbed::eval
