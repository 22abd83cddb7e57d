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
#include <fstream>
#include <set>
#include <sstream>

#include "common/error.hpp"
#include "json.hpp"
#include "strokes/strokes.hpp"

namespace sae::strokes {

using nlohmann::json;

StrokeClass stroke_class_from_code(int c) {
  require(c >= 1 && c <= 5, ErrorKind::Parse, "stroke class " + std::to_string(c) + " outside 1..5");
  return static_cast<StrokeClass>(c);
}

void validate(const CharacterSpec& spec, const std::string& context) {
  const std::string where = context.empty() ? "character '" + spec.label + "'" : context;
  require(!spec.label.empty(), ErrorKind::Parse, where + ": empty label");
  require(!spec.strokes.empty(), ErrorKind::Parse, where + ": no strokes");
  require(spec.strokes.size() <= kMaxStrokes, ErrorKind::Parse,
          where + ": " + std::to_string(spec.strokes.size()) + " strokes exceeds the maximum of " +
              std::to_string(kMaxStrokes));
  for (std::size_t i = 0; i < spec.strokes.size(); ++i) {
    const Stroke& s = spec.strokes[i];
    const int c = code(s.cls);
    require(c >= 1 && c <= 5, ErrorKind::Parse,
            where + ", stroke " + std::to_string(i) + ": class " + std::to_string(c) + " outside 1..5");
    require(s.points.size() >= 2, ErrorKind::Parse,
            where + ", stroke " + std::to_string(i) + ": polyline needs at least 2 points");
    for (const auto& p : s.points) {
      require(p.x >= 0.0 && p.x <= kGlyphBox && p.y >= 0.0 && p.y <= kGlyphBox, ErrorKind::Parse,
              where + ", stroke " + std::to_string(i) + ": point outside the glyph box");
    }
  }
}

std::string encode_strokes(const CharacterSpec& spec) {
  std::string out;
  out.reserve(spec.strokes.size());
  for (const auto& s : spec.strokes) out.push_back(static_cast<char>('0' + code(s.cls)));
  return out;
}

namespace {

CharacterSpec record_to_spec(const json& rec, const std::string& ctx) {
  require(rec.is_object(), ErrorKind::Parse, ctx + ": record is not an object");
  CharacterSpec spec;
  auto label = rec.find("label");
  require(label != rec.end() && label->is_string(), ErrorKind::Parse, ctx + ": missing string \"label\"");
  spec.label = label->get<std::string>();
  const std::string where = ctx + " ('" + spec.label + "')";
  auto strokes = rec.find("strokes");
  require(strokes != rec.end() && strokes->is_array(), ErrorKind::Parse, where + ": missing array \"strokes\"");
  require(strokes->size() <= kMaxStrokes, ErrorKind::Parse,
          where + ": " + std::to_string(strokes->size()) + " strokes exceeds the maximum of " +
              std::to_string(kMaxStrokes));
  for (std::size_t i = 0; i < strokes->size(); ++i) {
    const json& s = (*strokes)[i];
    const std::string sw = where + ", stroke " + std::to_string(i);
    require(s.is_object(), ErrorKind::Parse, sw + ": not an object");
    auto cls = s.find("class");
    require(cls != s.end() && cls->is_number_integer(), ErrorKind::Parse, sw + ": missing integer \"class\"");
    const int c = cls->get<int>();
    require(c >= 1 && c <= 5, ErrorKind::Parse, sw + ": class " + std::to_string(c) + " outside 1..5");
    Stroke stroke;
    stroke.cls = static_cast<StrokeClass>(c);
    auto pts = s.find("points");
    require(pts != s.end() && pts->is_array(), ErrorKind::Parse, sw + ": missing array \"points\"");
    for (const auto& p : *pts) {
      require(p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number(), ErrorKind::Parse,
              sw + ": points must be [x, y] pairs");
      stroke.points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    spec.strokes.push_back(std::move(stroke));
  }
  if (auto r = rec.find("radicals"); r != rec.end()) {
    require(r->is_array(), ErrorKind::Parse, where + ": \"radicals\" must be an array");
    for (const auto& x : *r) {
      require(x.is_string(), ErrorKind::Parse, where + ": radical names must be strings");
      spec.radicals.push_back(x.get<std::string>());
    }
  }
  if (auto l = rec.find("layout"); l != rec.end()) {
    require(l->is_string(), ErrorKind::Parse, where + ": \"layout\" must be a string");
    spec.layout = l->get<std::string>();
  }
  validate(spec, where);
  return spec;
}

}  // namespace

std::vector<CharacterSpec> parse_stroke_json(const std::string& text) {
  std::vector<CharacterSpec> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return out;

  if (text[first] == '[') {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::Parse, std::string("stroke JSON: ") + e.what());
    }
    for (std::size_t i = 0; i < doc.size(); ++i) {
      out.push_back(record_to_spec(doc[i], "record " + std::to_string(i)));
    }
  } else {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0, record = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string ctx = "line " + std::to_string(line_no) + " (record " + std::to_string(record) + ")";
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::parse_error& e) {
        fail(ErrorKind::Parse, ctx + ": " + e.what());
      }
      out.push_back(record_to_spec(rec, ctx));
      ++record;
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const CharacterSpec& a, const CharacterSpec& b) { return a.label < b.label; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    require(out[i].label != out[i - 1].label, ErrorKind::Parse, "duplicate label '" + out[i].label + "'");
  }
  return out;
}

std::vector<CharacterSpec> load_stroke_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open stroke file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_stroke_json(ss.str());
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

std::string to_stroke_json(const std::vector<CharacterSpec>& specs) {
  std::string out = "[\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    json rec;
    rec["label"] = s.label;
    json strokes = json::array();
    for (const auto& st : s.strokes) {
      json pts = json::array();
      for (const auto& p : st.points) pts.push_back({p.x, p.y});
      strokes.push_back({{"class", code(st.cls)}, {"points", pts}});
    }
    rec["strokes"] = strokes;
    if (!s.radicals.empty()) rec["radicals"] = s.radicals;
    if (!s.layout.empty()) rec["layout"] = s.layout;
    out += "  " + rec.dump();
    out += i + 1 < specs.size() ? ",\n" : "\n";
  }
  out += "]\n";
  return out;
}

void save_stroke_file(const std::filesystem::path& path, const std::vector<CharacterSpec>& specs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::Io, "cannot write " + path.string());
  out << to_stroke_json(specs);
  require(out.good(), ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace sae::strokes
