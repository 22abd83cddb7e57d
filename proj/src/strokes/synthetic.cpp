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

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>

#include "common/error.hpp"
#include "strokes/strokes.hpp"

namespace sae::strokes {

namespace {

Stroke unit_stroke(int cls, std::initializer_list<Point> pts) {
  return Stroke{static_cast<StrokeClass>(cls), std::vector<Point>(pts)};
}

struct Box {
  double x0, y0, x1, y1;
};

std::vector<Stroke> place(const std::vector<Stroke>& unit, const Box& b) {
  std::vector<Stroke> out;
  for (const auto& s : unit) {
    Stroke t{s.cls, {}};
    for (const auto& p : s.points) {
      t.points.push_back({(b.x0 + p.x * (b.x1 - b.x0)) * kGlyphBox, (b.y0 + p.y * (b.y1 - b.y0)) * kGlyphBox});
    }
    out.push_back(std::move(t));
  }
  return out;
}

enum class Layout { LeftRight, TopBottom, Enclosing };

const char* layout_name(Layout l) {
  switch (l) {
    case Layout::LeftRight: return "left-right";
    case Layout::TopBottom: return "top-bottom";
    case Layout::Enclosing: return "enclosing";
  }
  return "?";
}

struct Composition {
  std::size_t first, second;
  Layout layout;
};

CharacterSpec compose(const Composition& c, const std::string& label) {
  const auto& lib = radical_library();
  Box a{}, b{};
  switch (c.layout) {
    case Layout::LeftRight:
      a = {0.05, 0.10, 0.47, 0.90};
      b = {0.53, 0.10, 0.95, 0.90};
      break;
    case Layout::TopBottom:
      a = {0.10, 0.05, 0.90, 0.46};
      b = {0.10, 0.54, 0.90, 0.95};
      break;
    case Layout::Enclosing:
      a = {0.05, 0.05, 0.95, 0.95};
      b = {0.33, 0.33, 0.67, 0.67};
      break;
  }
  CharacterSpec spec;
  spec.label = label;
  spec.strokes = place(lib[c.first].strokes, a);
  auto inner = place(lib[c.second].strokes, b);
  spec.strokes.insert(spec.strokes.end(), inner.begin(), inner.end());
  spec.radicals = {lib[c.first].name, lib[c.second].name};
  spec.layout = layout_name(c.layout);
  return spec;
}

}  // namespace

const std::vector<RadicalProgram>& radical_library() {
  static const std::vector<RadicalProgram> lib = {
      {"yi", {unit_stroke(1, {{0.1, 0.5}, {0.9, 0.5}})}, false},
      {"shi", {unit_stroke(1, {{0.1, 0.45}, {0.9, 0.45}}), unit_stroke(2, {{0.5, 0.1}, {0.5, 0.9}})}, false},
      {"kou",
       {unit_stroke(2, {{0.15, 0.15}, {0.15, 0.85}}),
        unit_stroke(5, {{0.15, 0.15}, {0.85, 0.15}, {0.85, 0.85}}),
        unit_stroke(1, {{0.15, 0.85}, {0.85, 0.85}})},
       true},
      {"ren", {unit_stroke(3, {{0.5, 0.1}, {0.15, 0.9}}), unit_stroke(4, {{0.45, 0.35}, {0.88, 0.9}})}, false},
      {"ba", {unit_stroke(3, {{0.38, 0.2}, {0.12, 0.82}}), unit_stroke(4, {{0.62, 0.2}, {0.9, 0.82}})}, false},
      {"er", {unit_stroke(1, {{0.2, 0.3}, {0.8, 0.3}}), unit_stroke(1, {{0.1, 0.75}, {0.9, 0.75}})}, false},
      {"ding",
       {unit_stroke(1, {{0.1, 0.15}, {0.9, 0.15}}), unit_stroke(2, {{0.5, 0.15}, {0.5, 0.88}, {0.38, 0.8}})},
       false},
      {"gong",
       {unit_stroke(1, {{0.2, 0.15}, {0.8, 0.15}}), unit_stroke(2, {{0.5, 0.15}, {0.5, 0.85}}),
        unit_stroke(1, {{0.1, 0.85}, {0.9, 0.85}})},
       false},
      {"xiao",
       {unit_stroke(2, {{0.5, 0.1}, {0.5, 0.88}, {0.4, 0.8}}), unit_stroke(3, {{0.3, 0.35}, {0.12, 0.7}}),
        unit_stroke(4, {{0.7, 0.35}, {0.88, 0.7}})},
       false},
      {"ri",
       {unit_stroke(2, {{0.2, 0.1}, {0.2, 0.9}}), unit_stroke(5, {{0.2, 0.1}, {0.8, 0.1}, {0.8, 0.9}}),
        unit_stroke(1, {{0.2, 0.5}, {0.8, 0.5}}), unit_stroke(1, {{0.2, 0.9}, {0.8, 0.9}})},
       false},
      {"shan",
       {unit_stroke(2, {{0.5, 0.1}, {0.5, 0.85}}), unit_stroke(5, {{0.15, 0.35}, {0.15, 0.85}, {0.85, 0.85}}),
        unit_stroke(2, {{0.85, 0.35}, {0.85, 0.85}})},
       false},
      {"yi2", {unit_stroke(5, {{0.15, 0.15}, {0.8, 0.15}, {0.2, 0.85}, {0.9, 0.85}})}, false},
  };
  return lib;
}

CharacterSpec radical_character(const RadicalProgram& radical) {
  CharacterSpec spec;
  spec.label = radical.name;
  spec.strokes = place(radical.strokes, {0.1, 0.1, 0.9, 0.9});
  spec.radicals = {radical.name};
  spec.layout = "single";
  return spec;
}

std::vector<CharacterSpec> synthetic_alphabet(std::size_t n_radicals, std::size_t n_chars, std::uint64_t seed) {
  const auto& lib = radical_library();
  require(n_radicals >= 2, ErrorKind::Config, "synthetic alphabet needs at least 2 radicals");
  require(n_chars >= n_radicals, ErrorKind::Config, "synthetic alphabet needs n_chars >= n_radicals");
  require(n_radicals <= lib.size(), ErrorKind::Config,
          "radical library holds only " + std::to_string(lib.size()) + " radicals");

  std::array<std::vector<Composition>, 3> groups;
  for (std::size_t a = 0; a < n_radicals; ++a)
    for (std::size_t b = 0; b < n_radicals; ++b) {
      if (a == b) continue;
      groups[0].push_back({a, b, Layout::LeftRight});
      groups[1].push_back({a, b, Layout::TopBottom});
      if (lib[a].can_enclose) groups[2].push_back({a, b, Layout::Enclosing});
    }
  const std::size_t available = groups[0].size() + groups[1].size() + groups[2].size();
  require(n_chars <= available, ErrorKind::Config,
          "only " + std::to_string(available) + " distinct compositions of " + std::to_string(n_radicals) +
              " radicals, " + std::to_string(n_chars) + " requested");

  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 64; ++attempt) {
    auto shuffled = groups;
    for (auto& g : shuffled) std::shuffle(g.begin(), g.end(), rng);
    // Round-robin over layouts so small alphabets still mix layouts.
    std::vector<Composition> picked;
    for (std::size_t i = 0; picked.size() < n_chars; ++i) {
      for (auto& g : shuffled) {
        if (i < g.size() && picked.size() < n_chars) picked.push_back(g[i]);
      }
    }
    std::map<std::size_t, int> uses;
    for (const auto& c : picked) {
      ++uses[c.first];
      ++uses[c.second];
    }
    const bool ok = std::all_of(uses.begin(), uses.end(), [](const auto& kv) { return kv.second >= 2; });
    if (!ok) continue;
    std::vector<CharacterSpec> out;
    for (std::size_t i = 0; i < picked.size(); ++i) {
      char label[32];
      std::snprintf(label, sizeof(label), "S%04zu", i);
      out.push_back(compose(picked[i], label));
    }
    return out;
  }
  fail(ErrorKind::Config, "could not draw an alphabet where every radical is shared by two characters");
}

}  // namespace sae::strokes
