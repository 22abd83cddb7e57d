/*
 * Copyright 2026 The sae-strokes Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "embed/embed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "common/error.hpp"

namespace sae::embed {

CharEmbedding embed_character(const vit::ViTModel& model, const strokes::Image& image, std::size_t m,
                              const std::string& label) {
  const auto& cfg = model.config();
  require(m >= 1 && m <= cfg.pad_len, ErrorKind::Range,
          "stroke count " + std::to_string(m) + " outside 1.." + std::to_string(cfg.pad_len));
  require(cfg.decoder_depth >= 3, ErrorKind::Config, "embedding needs at least 3 decoder blocks");
  ad::Graph g(false);
  std::vector<ad::Var> blocks;
  model.forward(g, image, &blocks);
  const ad::Tensor& y = blocks[2].value();
  CharEmbedding e;
  e.label = label;
  e.m = m;
  e.vector.assign(y.ptr() + (m - 1) * cfg.width, y.ptr() + m * cfg.width);
  for (double v : e.vector) require(std::isfinite(v), ErrorKind::Numeric, "non-finite embedding for '" + label + "'");
  return e;
}

std::vector<std::vector<double>> cosine_matrix(const std::vector<CharEmbedding>& a,
                                               const std::vector<CharEmbedding>& b) {
  std::vector<std::vector<double>> out(a.size(), std::vector<double>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i][j] = models::cosine_similarity(a[i].vector, b[j].vector);
  return out;
}

namespace {

std::vector<double> normalized(const std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  require(n > 0.0, ErrorKind::Numeric, "k-means: zero-norm point");
  n = std::sqrt(n);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

KMeansResult kmeans_cosine(const std::vector<std::vector<double>>& points, std::size_t k, std::uint64_t seed,
                           std::size_t max_iter) {
  require(k >= 1 && k <= points.size(), ErrorKind::Config,
          "k-means: k = " + std::to_string(k) + " with " + std::to_string(points.size()) + " points");
  const std::size_t n = points.size(), d = points.front().size();
  std::vector<std::vector<double>> x;
  for (const auto& p : points) {
    require(p.size() == d, ErrorKind::Dimension, "k-means: points differ in length");
    x.push_back(normalized(p));
  }
  KMeansResult r;
  // Farthest-first seeding: the first centroid is a point drawn by seed, each
  // next one the point least similar to every centroid chosen so far.
  std::mt19937_64 rng(seed);
  r.centroids.push_back(x[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  std::vector<double> nearest(n, -2.0);
  while (r.centroids.size() < k) {
    std::size_t pick = 0;
    double pick_s = 2.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::max(nearest[i], dot(x[i], r.centroids.back()));
      if (nearest[i] < pick_s) {
        pick_s = nearest[i];
        pick = i;
      }
    }
    r.centroids.push_back(x[pick]);
  }
  r.assignment.assign(n, k);

  for (std::size_t it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_s = dot(x[i], r.centroids[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double s = dot(x[i], r.centroids[c]);
        if (s > best_s) {
          best_s = s;
          best = c;
        }
      }
      if (r.assignment[i] != best) {
        r.assignment[i] = best;
        changed = true;
      }
    }
    ++r.iterations;
    if (!changed && it > 0) break;
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> sum(d, 0.0);
      std::size_t members = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (r.assignment[i] == c) {
          for (std::size_t j = 0; j < d; ++j) sum[j] += x[i][j];
          ++members;
        }
      double norm = 0.0;
      for (double v : sum) norm += v * v;
      if (members == 0 || norm == 0.0) {
        // Re-seed from the point farthest from its own centroid.
        std::size_t far = 0;
        double far_s = 2.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double s = dot(x[i], r.centroids[r.assignment[i]]);
          if (s < far_s) {
            far_s = s;
            far = i;
          }
        }
        r.centroids[c] = x[far];
        r.assignment[far] = c;
        ++r.reseeded;
        continue;
      }
      r.centroids[c] = normalized(sum);
    }
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) obj += dot(x[i], r.centroids[r.assignment[i]]);
    r.objective.push_back(obj);
  }
  return r;
}

void export_embeddings(const std::vector<CharEmbedding>& embeddings, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  const std::size_t d = embeddings.empty() ? 0 : embeddings.front().vector.size();
  out << "label,m";
  for (std::size_t j = 0; j < d; ++j) out << ",d" << j;
  out << '\n';
  out.precision(17);
  for (const auto& e : embeddings) {
    require(e.vector.size() == d, ErrorKind::Dimension, "embeddings differ in width");
    require(e.label.find_first_of(",\n\"") == std::string::npos, ErrorKind::Data,
            "label '" + e.label + "' cannot be written to CSV");
    out << e.label << ',' << e.m;
    for (double v : e.vector) out << ',' << v;
    out << '\n';
  }
  require(out.good(), ErrorKind::Io, "write failed for " + path.string());
}

std::vector<CharEmbedding> load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  require(line.starts_with("label,m"), ErrorKind::Parse, path.string() + ": missing embedding header");
  std::vector<CharEmbedding> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    CharEmbedding e;
    std::getline(row, e.label, ',');
    std::getline(row, cell, ',');
    try {
      e.m = std::stoul(cell);
      while (std::getline(row, cell, ',')) e.vector.push_back(std::stod(cell));
    } catch (const std::exception&) {
      fail(ErrorKind::Parse, path.string() + ": malformed row for '" + e.label + "'");
    }
    out.push_back(std::move(e));
  }
  return out;
}

void export_matrix(const std::vector<std::vector<double>>& matrix, const std::vector<std::string>& row_labels,
                   const std::vector<std::string>& col_labels, const std::filesystem::path& path) {
  require(matrix.size() == row_labels.size(), ErrorKind::Dimension, "matrix rows and labels differ");
  std::ofstream out(path, std::ios::trunc);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  out << "label";
  for (const auto& c : col_labels) out << ',' << c;
  out << '\n';
  out.precision(17);
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    require(matrix[i].size() == col_labels.size(), ErrorKind::Dimension, "matrix columns and labels differ");
    out << row_labels[i];
    for (double v : matrix[i]) out << ',' << v;
    out << '\n';
  }
  require(out.good(), ErrorKind::Io, "write failed for " + path.string());
}

double mean_reciprocal_rank(const std::vector<std::vector<double>>& similarity,
                            const std::vector<std::vector<std::size_t>>& truth) {
  require(similarity.size() == truth.size() && !truth.empty(), ErrorKind::Dimension,
          "MRR: similarity rows and truth lists differ");
  double total = 0.0;
  for (std::size_t i = 0; i < similarity.size(); ++i) {
    const auto& row = similarity[i];
    require(!truth[i].empty(), ErrorKind::Data, "MRR: character without a true radical");
    double best = -2.0;
    for (auto t : truth[i]) best = std::max(best, row.at(t));
    // Rank 1 + number of radicals strictly more similar.
    std::size_t rank = 1;
    for (double s : row) rank += s > best;
    total += 1.0 / static_cast<double>(rank);
  }
  return total / static_cast<double>(similarity.size());
}

std::vector<double> shuffled_mrr(const std::vector<std::vector<double>>& similarity,
                                 const std::vector<std::vector<std::size_t>>& truth, std::size_t shuffles,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto permuted = truth;
  std::vector<double> out;
  for (std::size_t s = 0; s < shuffles; ++s) {
    std::shuffle(permuted.begin(), permuted.end(), rng);
    out.push_back(mean_reciprocal_rank(similarity, permuted));
  }
  return out;
}

}  // namespace sae::embed
