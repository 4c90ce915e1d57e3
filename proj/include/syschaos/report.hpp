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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "syschaos/clock.hpp"
#include "syschaos/orchestrator.hpp"

// Report rendering: experiment records in, human-readable artifacts out.
//
//   render_markdown            one results table + optional per-metric detail
//   render_benchmark_markdown  the same models side by side across targets
//   render_timeline_svg        phase bands of a single experiment
//
// Rendering is pure string building; callers decide where files go.  Every
// rendered report carries the scope note about what error injection at the
// syscall boundary does and does not simulate.

namespace syschaos::report {

struct Report {
  std::string title = "Fault injection report";
  double generated_at = 0.0;  // unix seconds
  std::vector<orchestrate::ExperimentRecord> experiments;
};

inline void to_json(nlohmann::json& j, const Report& r) {
  j = nlohmann::json{{"title", r.title},
                     {"generated_at", r.generated_at},
                     {"experiments", r.experiments}};
}

inline void from_json(const nlohmann::json& j, Report& r) {
  j.at("title").get_to(r.title);
  j.at("generated_at").get_to(r.generated_at);
  j.at("experiments").get_to(r.experiments);
}

inline void save_report(const Report& r, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write report: " + path.string());
  out << nlohmann::json(r).dump(2) << '\n';
}

inline Report load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read report: " + path.string());
  nlohmann::json doc;
  in >> doc;
  return doc.get<Report>();
}

struct RenderOptions {
  bool summary_only = false;
  // When set, the detail section links each experiment's timeline image at
  // <plot_dir>/<plot_filename(record)>.
  std::string plot_dir;
};

// ---------------------------------------------------------------------------
// Result-row cells
//
// The last four columns of the results table answer, per experiment:
//   Metrics  how many steady metrics passed the pre-check
//   H_N      did the target survive the faults? (√ / X)
//   H_O      how many of those metrics deviated while faults were armed
//   H_R      how many of the deviated metrics returned to baseline
// A cell shows "-" where the run never got to ask the question: a crash
// voids every per-metric column, and H_R stays empty when nothing deviated.

struct ResultCells {
  std::string metrics;
  std::string survived;
  std::string observed;
  std::string recovered;
};

inline ResultCells result_cells(const orchestrate::ExperimentRecord& r) {
  if (r.invalid) return {"-", "-", "-", "-"};
  if (r.crashed) return {"-", "X", "-", "-"};
  const auto s = orchestrate::summarize(r.findings);
  ResultCells c;
  c.metrics = std::to_string(s.passed_precheck);
  c.survived = "√";
  c.observed = std::to_string(s.affected);
  c.recovered = s.affected == 0 ? "-" : std::to_string(s.recovered);
  return c;
}

// ---------------------------------------------------------------------------
// Formatting helpers

namespace detail {

inline std::string num(double v, const char* fmt = "%.3g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

inline std::string opt_p(const std::optional<double>& p) {
  return p ? num(*p, "%.4g") : "-";
}

inline std::string verdict_mark(orchestrate::Verdict v) {
  switch (v) {
    case orchestrate::Verdict::holds: return "√";
    case orchestrate::Verdict::rejected: return "X";
    case orchestrate::Verdict::skipped: return "-";
  }
  return "-";
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* scope_note() {
  return "Scope note: faults are injected by rewriting syscall return values "
         "at the kernel boundary after the call has already executed, so the "
         "target sees an error code while the call's side effects may still "
         "have happened. Results therefore describe how the target reacts to "
         "error returns, not how it would behave under a genuine kernel or "
         "hardware failure.";
}

}  // namespace detail

inline std::string plot_filename(const orchestrate::ExperimentRecord& r) {
  return "timeline-" + r.target_id + "-" + r.model.syscall + "-" +
         r.model.error + "-seed" + std::to_string(r.seed) + ".svg";
}

// ---------------------------------------------------------------------------
// Markdown

inline std::string render_markdown(const Report& report,
                                   const RenderOptions& opts = {}) {
  std::ostringstream md;
  md << "# " << report.title << "\n\n";
  md << "Generated "
     << iso8601(std::chrono::system_clock::time_point{} +
                std::chrono::milliseconds(static_cast<long long>(
                    report.generated_at * 1000.0)))
     << ".\n\n";
  md << detail::scope_note() << "\n\n";

  std::vector<const orchestrate::ExperimentRecord*> valid;
  std::vector<const orchestrate::ExperimentRecord*> invalid;
  for (const auto& r : report.experiments) {
    (r.invalid ? invalid : valid).push_back(&r);
  }

  md << "## Results\n\n";
  if (valid.empty()) {
    md << "No completed experiments.\n";
  } else {
    md << "| Client | Syscall | Error Code | Error Rate | Injections | "
          "Metrics | H_N | H_O | H_R |\n";
    md << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto* r : valid) {
      const auto c = result_cells(*r);
      md << "| " << r->target_id << " | " << r->model.syscall << " | "
         << r->model.error << " | " << detail::num(r->model.rate) << " | "
         << r->injected << " | " << c.metrics << " | " << c.survived << " | "
         << c.observed << " | " << c.recovered << " |\n";
    }
    std::map<std::string, int> outcome_counts;
    for (const auto* r : valid) {
      if (r->outcome) ++outcome_counts[orchestrate::to_string(*r->outcome)];
    }
    md << "\nOutcomes:";
    bool first = true;
    for (const auto& [name, n] : outcome_counts) {
      md << (first ? " " : ", ") << n << " " << name;
      first = false;
    }
    md << ".\n";
  }

  if (!invalid.empty()) {
    md << "\n## Invalid experiments\n\n";
    md << "| Client | Syscall | Error Code | Reason |\n";
    md << "|---|---|---|---|\n";
    for (const auto* r : invalid) {
      md << "| " << r->target_id << " | " << r->model.syscall << " | "
         << r->model.error << " | " << r->invalid_reason << " |\n";
    }
  }

  if (!opts.summary_only) {
    for (const auto* r : valid) {
      md << "\n## " << r->target_id << ": " << r->model.label() << " at rate "
         << detail::num(r->model.rate) << " (seed " << r->seed << ")\n\n";
      if (r->outcome) {
        md << "Outcome: **" << orchestrate::to_string(*r->outcome) << "**. ";
      }
      md << "Injected " << r->injected << " faults out of " << r->intercepted
         << " intercepted calls over " << r->durations.injection_seconds
         << " s";
      if (r->crashed && r->crash_phase) {
        md << "; the target died during the "
           << orchestrate::to_string(*r->crash_phase) << " phase after "
           << r->injections_at_death << " injected faults";
      }
      md << ".\n";
      if (!opts.plot_dir.empty()) {
        md << "\n![phase timeline](" << opts.plot_dir << "/"
           << plot_filename(*r) << ")\n";
      }
      if (!r->findings.empty()) {
        md << "\n| Metric | Kind | Pre-check p | Injection p | Validation p "
              "| Deviated | Recovered |\n";
        md << "|---|---|---|---|---|---|---|\n";
        for (const auto& f : r->findings) {
          md << "| " << f.name << " | " << metrics::to_string(f.kind) << " | "
             << detail::opt_p(f.precheck_p) << " | "
             << detail::opt_p(f.injection_p) << " | "
             << detail::opt_p(f.validation_p) << " | "
             << detail::verdict_mark(f.observed) << " | "
             << detail::verdict_mark(f.recovered) << " |\n";
        }
      }
    }
  }
  return md.str();
}

// Same models rendered side by side, one column block per target.  A model
// that never ran on some target gets an explicit placeholder so gaps are
// visible rather than silently dropped rows.
inline std::string render_benchmark_markdown(const Report& report) {
  std::set<std::string> clients;
  std::set<std::pair<std::string, std::string>> models;
  std::map<std::string,
           std::map<std::pair<std::string, std::string>,
                    const orchestrate::ExperimentRecord*>>
      by_client;
  for (const auto& r : report.experiments) {
    clients.insert(r.target_id);
    const auto key = std::make_pair(r.model.syscall, r.model.error);
    models.insert(key);
    by_client[r.target_id][key] = &r;
  }

  std::ostringstream md;
  md << "# " << report.title << "\n\n";
  md << "Generated "
     << iso8601(std::chrono::system_clock::time_point{} +
                std::chrono::milliseconds(static_cast<long long>(
                    report.generated_at * 1000.0)))
     << ".\n\n";
  md << detail::scope_note() << "\n\n";

  md << "## Side-by-side outcomes\n\n";
  if (models.empty()) {
    md << "No experiments.\n";
    return md.str();
  }

  md << "| Syscall | Error Code |";
  for (const auto& c : clients) md << " " << c << " |";
  md << "\n|---|---|";
  for (std::size_t i = 0; i < clients.size(); ++i) md << "---|";
  md << "\n";

  int missing_cells = 0;
  for (const auto& [syscall, error] : models) {
    md << "| " << syscall << " | " << error << " |";
    for (const auto& c : clients) {
      const auto& runs = by_client[c];
      const auto it = runs.find({syscall, error});
      if (it == runs.end()) {
        md << " (not run) |";
        ++missing_cells;
        continue;
      }
      const auto* r = it->second;
      if (r->invalid) {
        md << " invalid |";
      } else if (r->outcome) {
        md << " " << orchestrate::to_string(*r->outcome) << " @"
           << detail::num(r->model.rate) << ", " << r->injected << " inj |";
      } else {
        md << " ? |";
      }
    }
    md << "\n";
  }
  md << "\n" << models.size() << " model(s) across " << clients.size()
     << " target(s); " << missing_cells << " pairing(s) missing.\n";
  return md.str();
}

// ---------------------------------------------------------------------------
// SVG timeline
//
// Horizontal band per phase, scaled to the planned schedule; a truncated
// run (invalidation or death) is cut at the time it actually ended and
// marked there.

inline std::string render_timeline_svg(const orchestrate::ExperimentRecord& r,
                                       int width = 760, int height = 150) {
  struct Band {
    const char* name;
    int seconds;
    const char* fill;
  };
  const Band bands[] = {
      {"warmup", r.durations.warmup_seconds, "#d9d9d9"},
      {"precheck", r.durations.precheck_seconds, "#c6dbef"},
      {"injection", r.durations.injection_seconds, "#fc9272"},
      {"recovery", r.durations.recovery_seconds, "#a1d99b"},
      {"validation", r.durations.validation_seconds, "#9ecae1"},
  };
  int planned = 0;
  for (const auto& b : bands) planned += b.seconds;
  if (planned <= 0) planned = 1;

  const double margin = 20.0;
  const double band_top = 58.0, band_h = 44.0;
  const double usable = width - 2.0 * margin;
  const auto x_at = [&](double seconds) {
    return margin + usable * seconds / planned;
  };
  const double elapsed =
      std::max(0.0, std::min<double>(planned, r.finished_at - r.started_at));

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\" font-family=\"monospace\" font-size=\"12\">\n";
  std::string title = r.target_id + " " + r.model.label() + " @" +
                      detail::num(r.model.rate) + " seed " +
                      std::to_string(r.seed);
  if (r.outcome) {
    title += std::string(": ") + orchestrate::to_string(*r.outcome);
  } else if (r.invalid) {
    title += ": invalid";
  }
  svg << "  <text x=\"" << margin << "\" y=\"22\" font-size=\"14\">"
      << detail::xml_escape(title) << "</text>\n";

  double t = 0.0;
  for (const auto& b : bands) {
    if (b.seconds <= 0) continue;
    const double start = t, end = t + b.seconds;
    t = end;
    // Only the part of the band the run actually reached is filled solid;
    // the never-run remainder is drawn hollow.
    const double reached = std::min(end, elapsed);
    if (reached > start) {
      svg << "  <rect x=\"" << x_at(start) << "\" y=\"" << band_top
          << "\" width=\"" << x_at(reached) - x_at(start) << "\" height=\""
          << band_h << "\" fill=\"" << b.fill << "\" stroke=\"#555\"/>\n";
    }
    if (end > reached) {
      svg << "  <rect x=\"" << x_at(std::max(start, reached)) << "\" y=\""
          << band_top << "\" width=\""
          << x_at(end) - x_at(std::max(start, reached)) << "\" height=\""
          << band_h << "\" fill=\"none\" stroke=\"#bbb\" "
             "stroke-dasharray=\"4 3\"/>\n";
    }
    svg << "  <text x=\"" << (x_at(start) + x_at(end)) / 2.0
        << "\" y=\"" << band_top + band_h + 16.0
        << "\" text-anchor=\"middle\">" << b.name << "</text>\n";
    svg << "  <text x=\"" << (x_at(start) + x_at(end)) / 2.0 << "\" y=\""
        << band_top - 8.0 << "\" text-anchor=\"middle\" fill=\"#666\">"
        << b.seconds << "s</text>\n";
  }

  if (r.crashed || r.invalid) {
    const double x = x_at(elapsed);
    const char* label = r.crashed ? "death" : "stopped";
    svg << "  <line x1=\"" << x << "\" y1=\"" << band_top - 14.0 << "\" x2=\""
        << x << "\" y2=\"" << band_top + band_h + 6.0
        << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    svg << "  <text x=\"" << x << "\" y=\"" << band_top + band_h + 30.0
        << "\" text-anchor=\"middle\" fill=\"#d62728\">" << label
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

inline void save_text(const std::string& text,
                      const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());
  out << text;
}

}  // namespace syschaos::report
