// Copyright 2026 The syschaos Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Reader and writer for the Prometheus text exposition format, the lingua
// franca of the metrics endpoints we scrape.  Only the slice of the format
// that matters here is implemented:
//
//   * sample lines `name{label="value",...} number [timestamp]`
//   * `# TYPE <name> <counter|gauge|...>` comment lines, kept as hints
//   * `+Inf`/`-Inf`/`NaN` literals, label value escapes (\\, \", \n)
//
// Labeled samples are flattened to a single series key so the rest of the
// pipeline can treat a metric as "name -> number":
//
//   requests_total{code="200",method="GET"}
//     -> requests_total.code.200.method.GET        (label keys sorted)
//
// Malformed lines are skipped, never fatal: a half-written exposition from a
// process under fault injection should degrade into missing points, not into
// a scrape error.

namespace syschaos::prom {

struct Exposition {
  // Flattened series name -> sample value.
  std::map<std::string, double> samples;
  // Base metric name -> declared type string ("counter", "gauge", ...).
  std::map<std::string, std::string> type_hints;
};

namespace detail {

inline void skip_spaces(std::string_view& s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
}

inline bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':';
}

inline std::optional<std::string> parse_name(std::string_view& s) {
  std::size_t i = 0;
  while (i < s.size() && is_name_char(s[i])) ++i;
  if (i == 0) return std::nullopt;
  std::string name(s.substr(0, i));
  s.remove_prefix(i);
  return name;
}

// Parses `{k="v",...}`; cursor must sit on '{'.  Returns sorted key/value
// pairs, or nullopt when the block is malformed.
inline std::optional<std::vector<std::pair<std::string, std::string>>> parse_labels(
    std::string_view& s) {
  std::vector<std::pair<std::string, std::string>> labels;
  s.remove_prefix(1);  // '{'
  skip_spaces(s);
  if (!s.empty() && s.front() == '}') {
    s.remove_prefix(1);
    return labels;
  }
  while (true) {
    skip_spaces(s);
    auto key = parse_name(s);
    if (!key) return std::nullopt;
    skip_spaces(s);
    if (s.empty() || s.front() != '=') return std::nullopt;
    s.remove_prefix(1);
    skip_spaces(s);
    if (s.empty() || s.front() != '"') return std::nullopt;
    s.remove_prefix(1);
    std::string value;
    bool closed = false;
    while (!s.empty()) {
      const char c = s.front();
      s.remove_prefix(1);
      if (c == '\\') {
        if (s.empty()) return std::nullopt;
        const char esc = s.front();
        s.remove_prefix(1);
        if (esc == 'n') value.push_back('\n');
        else value.push_back(esc);  // \" and \\ (and anything else literally)
      } else if (c == '"') {
        closed = true;
        break;
      } else {
        value.push_back(c);
      }
    }
    if (!closed) return std::nullopt;
    labels.emplace_back(std::move(*key), std::move(value));
    skip_spaces(s);
    if (!s.empty() && s.front() == ',') {
      s.remove_prefix(1);
      continue;
    }
    if (!s.empty() && s.front() == '}') {
      s.remove_prefix(1);
      break;
    }
    return std::nullopt;
  }
  std::sort(labels.begin(), labels.end());
  return labels;
}

inline std::optional<double> parse_number(std::string_view token) {
  if (token.empty()) return std::nullopt;
  std::string buf(token);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);  // accepts inf/nan spellings
  if (end != buf.c_str() + buf.size()) return std::nullopt;
  return v;
}

}  // namespace detail

// Flattened series key for a (possibly labeled) sample; label keys are
// sorted so the flattening is order-insensitive.
inline std::string flatten_series_name(
    std::string_view base,
    std::vector<std::pair<std::string, std::string>> labels) {
  std::sort(labels.begin(), labels.end());
  std::string out(base);
  for (const auto& [k, v] : labels) {
    out.push_back('.');
    out += k;
    out.push_back('.');
    out += v;
  }
  return out;
}

inline Exposition parse_exposition(std::string_view body) {
  Exposition out;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    const std::size_t eol = body.find('\n', pos);
    std::string_view line = body.substr(pos, eol == std::string_view::npos
                                                 ? std::string_view::npos
                                                 : eol - pos);
    pos = (eol == std::string_view::npos) ? body.size() + 1 : eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    detail::skip_spaces(line);
    if (line.empty()) continue;

    if (line.front() == '#') {
      // Only `# TYPE name kind` matters; other comments are ignored.
      line.remove_prefix(1);
      detail::skip_spaces(line);
      if (line.substr(0, 4) != "TYPE") continue;
      line.remove_prefix(4);
      detail::skip_spaces(line);
      auto name = detail::parse_name(line);
      if (!name) continue;
      detail::skip_spaces(line);
      auto kind_end = line.find_first_of(" \t");
      std::string kind(line.substr(0, kind_end));
      if (!kind.empty()) out.type_hints[*name] = kind;
      continue;
    }

    auto name = detail::parse_name(line);
    if (!name) continue;
    std::vector<std::pair<std::string, std::string>> labels;
    if (!line.empty() && line.front() == '{') {
      auto parsed = detail::parse_labels(line);
      if (!parsed) continue;
      labels = std::move(*parsed);
    }
    detail::skip_spaces(line);
    // Value token runs to the next whitespace; a trailing timestamp may follow.
    const std::size_t val_end = line.find_first_of(" \t");
    std::string_view value_token = line.substr(0, val_end);
    auto value = detail::parse_number(value_token);
    if (!value) continue;
    out.samples[flatten_series_name(*name, std::move(labels))] = *value;
  }
  return out;
}

// Minimal exposition writer used by the toy target and by tests that need a
// round-trippable document.
class ExpositionWriter {
 public:
  void add_type(std::string_view name, std::string_view kind) {
    body_ += "# TYPE ";
    body_ += name;
    body_ += ' ';
    body_ += kind;
    body_ += '\n';
  }

  void add_sample(std::string_view name, double value) {
    add_sample(name, {}, value);
  }

  void add_sample(std::string_view name,
                  const std::vector<std::pair<std::string, std::string>>& labels,
                  double value) {
    body_ += name;
    if (!labels.empty()) {
      body_ += '{';
      bool first = true;
      for (const auto& [k, v] : labels) {
        if (!first) body_ += ',';
        first = false;
        body_ += k;
        body_ += "=\"";
        for (char c : v) {
          if (c == '\\' || c == '"') body_ += '\\';
          if (c == '\n') {
            body_ += "\\n";
            continue;
          }
          body_ += c;
        }
        body_ += '"';
      }
      body_ += '}';
    }
    body_ += ' ';
    std::ostringstream os;
    os.precision(17);
    os << value;
    body_ += os.str();
    body_ += '\n';
  }

  const std::string& str() const { return body_; }

 private:
  std::string body_;
};

}  // namespace syschaos::prom
