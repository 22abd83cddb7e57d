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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vit/vit.hpp"

namespace sae::embed {

struct CharEmbedding {
  std::string label;
  std::size_t m = 0;
  std::vector<double> vector;
};

// Token m (1-based stroke slot) of the sequence after decoder block 3.
CharEmbedding embed_character(const vit::ViTModel& model, const strokes::Image& image, std::size_t m,
                              const std::string& label = {});

// Entry (i, j) = cosine(A_i, B_j).
std::vector<std::vector<double>> cosine_matrix(const std::vector<CharEmbedding>& a,
                                               const std::vector<CharEmbedding>& b);

struct KMeansResult {
  std::vector<std::size_t> assignment;
  std::vector<std::vector<double>> centroids;  // unit length
  std::vector<double> objective;               // sum of cosines to the assigned centroid, per iteration
  std::size_t iterations = 0;
  std::size_t reseeded = 0;
};

// Spherical k-means: points are unit-normalised and assigned to the centroid of
// highest cosine. Seeding is farthest-first from one point drawn by seed. An empty cluster is re-seeded from the point farthest (lowest
// cosine) from its current centroid.
KMeansResult kmeans_cosine(const std::vector<std::vector<double>>& points, std::size_t k, std::uint64_t seed,
                           std::size_t max_iter = 100);

// CSV: label,m,d0..d{n-1}.
void export_embeddings(const std::vector<CharEmbedding>& embeddings, const std::filesystem::path& path);
std::vector<CharEmbedding> load_embeddings(const std::filesystem::path& path);
void export_matrix(const std::vector<std::vector<double>>& matrix, const std::vector<std::string>& row_labels,
                   const std::vector<std::string>& col_labels, const std::filesystem::path& path);

// Mean over characters of 1 / rank of their true radicals among all radicals
// by cosine similarity. `truth[i]` lists radical indices of character i; a
// character's rank is that of its best-ranked true radical.
double mean_reciprocal_rank(const std::vector<std::vector<double>>& similarity,
                            const std::vector<std::vector<std::size_t>>& truth);

// Control for the MRR: the truth lists are permuted among characters once per
// shuffle and the MRR recomputed.
std::vector<double> shuffled_mrr(const std::vector<std::vector<double>>& similarity,
                                 const std::vector<std::vector<std::size_t>>& truth, std::size_t shuffles,
                                 std::uint64_t seed);

}  // namespace sae::embed
