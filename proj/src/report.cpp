#include "stancebench/report.hpp"

#include <algorithm>
#include <array>
#include <map>

#include "stancebench/error.hpp"
#include "stancebench/orchestrator.hpp"
#include "text_util.hpp"

namespace stancebench {

using nlohmann::json;

std::string_view to_string(ReportOutput output) {
  switch (output) {
    case ReportOutput::MetricsTable: return "metrics_table";
    case ReportOutput::HeatmapMatrix: return "heatmap";
    case ReportOutput::PromptAccuracy: return "prompt_accuracy";
    case ReportOutput::ErrorTypes: return "error_types";
    case ReportOutput::AblationTable: return "ablation";
  }
  return "?";
}

std::optional<ReportOutput> parse_report_output(std::string_view text) {
  const std::string s = detail::to_lower(detail::trim(text));
  if (s == "metrics_table" || s == "metrics" || s == "metricstable") return ReportOutput::MetricsTable;
  if (s == "heatmap" || s == "heatmap_matrix" || s == "heatmapmatrix") return ReportOutput::HeatmapMatrix;
  if (s == "prompt_accuracy" || s == "prompts" || s == "promptaccuracy") return ReportOutput::PromptAccuracy;
  if (s == "error_types" || s == "errors" || s == "errortypes") return ReportOutput::ErrorTypes;
  if (s == "ablation" || s == "ablation_table" || s == "ablationtable") return ReportOutput::AblationTable;
  return std::nullopt;
}

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  const std::string s = detail::to_lower(detail::trim(text));
  if (s == "csv") return ReportFormat::Csv;
  if (s == "md" || s == "markdown") return ReportFormat::Markdown;
  return std::nullopt;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"': quoted = true; any = true; break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r': break;
      case '\n':
        if (any || !field.empty()) {
          row.push_back(std::move(field));
          rows.push_back(std::move(row));
        }
        field.clear();
        row.clear();
        any = false;
        break;
      default: field += c; any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

const StoredMetrics* LoadedRun::find(std::string_view topic, std::string_view model, std::string_view mode) const {
  for (const auto& m : metrics)
    if (m.key.topic == topic && m.key.model == model && m.key.mode == mode) return &m;
  return nullptr;
}

LoadedRun load_run(const std::filesystem::path& dir) {
  for (const char* required : {"config.json", "metrics.csv"})
    if (!std::filesystem::exists(dir / required))
      throw Error(ErrorCode::MissingData, (dir / required).string() + " not found");

  LoadedRun run;
  run.config = json::parse(detail::read_file(dir / "config.json"));
  for (const auto& m : run.config.at("models")) run.models.push_back(m.at("name").get<std::string>());
  for (const auto& p : run.config.at("prompts")) run.prompts.push_back(p.get<std::string>());
  for (const auto& d : run.config.at("datasets"))
    run.partitions.push_back({d.at("dataset").get<std::string>(), d.at("topic").get<std::string>()});

  const auto rows = parse_csv(detail::read_file(dir / "metrics.csv"));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 8)
      throw Error(ErrorCode::MalformedJson, "metrics.csv line " + std::to_string(i + 1) + ": expected 8 fields");
    run.metrics.push_back(StoredMetrics{{r[0], r[1], r[2], r[3]},
                                        std::stod(r[4]),
                                        std::stod(r[5]),
                                        std::stod(r[6]),
                                        std::stod(r[7])});
  }

  if (std::filesystem::exists(dir / "votes.jsonl")) {
    const std::string text = detail::read_file(dir / "votes.jsonl");
    for (std::string_view line : detail::split(text, '\n')) {
      if (detail::trim(line).empty()) continue;
      const json j = json::parse(line);
      StoredVote v;
      v.record_id = j.at("record_id").get<std::string>();
      v.dataset = j.at("dataset").get<std::string>();
      v.topic = j.at("topic").get<std::string>();
      const auto gold = parse_label_name(j.at("gold").get<std::string>());
      if (!gold) throw Error(ErrorCode::UnknownAnnotation, "votes.jsonl: bad gold label for " + v.record_id);
      v.gold = *gold;
      v.model = j.at("model").get<std::string>();
      v.kind = j.at("kind").get<std::string>();
      if (!parse_prediction_name(j.at("label").get<std::string>(), v.label))
        throw Error(ErrorCode::UnknownAnnotation, "votes.jsonl: bad label for " + v.record_id);
      run.votes.push_back(std::move(v));
    }
  }
  if (std::filesystem::exists(dir / "ablation.csv")) run.ablation_csv = detail::read_file(dir / "ablation.csv");
  return run;
}

namespace {

using Quad = std::array<double, 4>;  // accuracy, precision, recall, f1

Quad quad_of(const StoredMetrics& m) { return {m.accuracy, m.precision, m.recall, m.f1}; }

std::optional<Quad> mean_of(const std::vector<Quad>& values) {
  if (values.empty()) return std::nullopt;
  Quad q{};
  for (const auto& v : values)
    for (std::size_t i = 0; i < 4; ++i) q[i] += v[i];
  for (double& x : q) x /= static_cast<double>(values.size());
  return q;
}

std::string table_row(const std::vector<std::string>& cells) {
  std::string out = "|";
  for (const auto& c : cells) out += " " + c + " |";
  return out + "\n";
}

std::string separator(std::size_t columns) {
  std::string out = "|";
  for (std::size_t i = 0; i < columns; ++i) out += "---|";
  return out + "\n";
}

std::string dataset_title(std::string_view dataset) { return dataset == "ArgsMe" ? "Args.me" : std::string(dataset); }

std::vector<std::string> table_models(const LoadedRun& run) {
  std::vector<std::string> models = run.models;
  for (const auto& m : run.metrics)
    if (m.key.model == kEnsembleModel) {
      models.push_back(m.key.model);
      break;
    }
  return models;
}

std::vector<std::string> datasets_in_order(const LoadedRun& run) {
  std::vector<std::string> out;
  for (const auto& p : run.partitions)
    if (std::find(out.begin(), out.end(), p.dataset) == out.end()) out.push_back(p.dataset);
  return out;
}

// Mean over the rephrased prompts, or nullopt when none were scored.
std::optional<Quad> prompt_average(const LoadedRun& run, std::string_view topic, std::string_view model) {
  std::vector<Quad> values;
  for (const auto& kind : run.prompts)
    if (const auto* m = run.find(topic, model, kind)) values.push_back(quad_of(*m));
  return mean_of(values);
}

// The ensemble only has one score per topic, shown wherever a voted result fits.
std::optional<Quad> mode_cell(const LoadedRun& run, std::string_view topic, std::string_view model,
                              std::string_view mode) {
  if (model == kEnsembleModel) {
    if (mode != "average" && mode != "Certainty" && mode != "Ensemble") return std::nullopt;
    mode = "Ensemble";
  } else if (mode == "average") {
    if (auto avg = prompt_average(run, topic, model)) return avg;
    mode = "Certainty";
  }
  if (const auto* m = run.find(topic, model, mode)) return quad_of(*m);
  return std::nullopt;
}

struct TableLine {
  std::string dataset;
  std::string label;
  std::vector<std::optional<Quad>> cells;  // one per model
};

std::vector<TableLine> metrics_lines(const LoadedRun& run, const std::vector<std::string>& models) {
  std::vector<TableLine> lines;
  for (const auto& dataset : datasets_in_order(run)) {
    const std::string title = dataset_title(dataset);
    std::vector<std::string> topics;
    for (const auto& p : run.partitions)
      if (p.dataset == dataset) topics.push_back(p.topic);

    auto average_line = [&](const std::string& label, std::string_view mode) {
      TableLine line{dataset, label, {}};
      bool any = false;
      for (const auto& model : models) {
        std::vector<Quad> values;
        for (const auto& t : topics)
          if (auto q = mode_cell(run, t, model, mode)) values.push_back(*q);
        line.cells.push_back(values.size() == topics.size() ? mean_of(values) : std::nullopt);
        any = any || line.cells.back().has_value();
      }
      if (any) lines.push_back(std::move(line));
    };

    for (const auto& t : topics) {
      TableLine line{dataset, title + " - " + t, {}};
      for (const auto& model : models) line.cells.push_back(mode_cell(run, t, model, "average"));
      lines.push_back(std::move(line));
    }
    average_line("Avg. " + title + " result", "average");
    average_line("Avg. " + title + " result (Certainty)", "Certainty");
    average_line("Avg. " + title + " result (CoT)", "CoT");
  }
  return lines;
}

std::string render_metrics_table(const LoadedRun& run, ReportFormat format) {
  const auto models = table_models(run);
  const auto lines = metrics_lines(run, models);
  static constexpr std::array<const char*, 4> kNames{"accuracy", "macro_precision", "macro_recall", "macro_f1"};

  if (format == ReportFormat::Csv) {
    std::string out = "dataset,row,model";
    for (const char* n : kNames) out += std::string(",") + n;
    out += "\n";
    for (const auto& line : lines)
      for (std::size_t m = 0; m < models.size(); ++m) {
        if (!line.cells[m]) continue;
        out += detail::csv_field(line.dataset) + "," + detail::csv_field(line.label) + "," + detail::csv_field(models[m]);
        for (double v : *line.cells[m]) out += detail::format(",%.6f", v);
        out += "\n";
      }
    return out;
  }

  std::string out;
  for (const auto& dataset : datasets_in_order(run)) {
    std::vector<std::string> header{"Dataset"};
    for (const auto& m : models)
      for (const char* metric : {"Acc.", "P", "R", "F1"}) header.push_back(m + " " + metric);
    out += table_row(header) + separator(header.size());
    for (const auto& line : lines) {
      if (line.dataset != dataset) continue;
      // Compare on the printed value so equal-looking cells tie.
      std::array<std::string, 4> best{};
      for (std::size_t k = 0; k < 4; ++k) {
        double top = -1.0;
        for (const auto& c : line.cells)
          if (c) top = std::max(top, std::stod(detail::percent1((*c)[k])));
        if (top >= 0.0) best[k] = detail::percent1(top / 100.0);
      }
      std::vector<std::string> cells{line.label};
      for (const auto& c : line.cells)
        for (std::size_t k = 0; k < 4; ++k) {
          if (!c) {
            cells.emplace_back("-");
            continue;
          }
          const std::string v = detail::percent1((*c)[k]);
          cells.push_back(models.size() > 1 && v == best[k] ? "**" + v + "**" : v);
        }
      out += table_row(cells);
    }
    out += "\n";
  }
  return out;
}

std::string render_heatmap(const LoadedRun& run, ReportFormat format, const ReportOptions& options) {
  std::vector<std::string> rows;
  std::vector<std::vector<double>> values;
  for (const auto& model : table_models(run)) {
    std::vector<double> row;
    for (const auto& p : run.partitions) {
      auto cell = mode_cell(run, p.topic, model, options.heatmap_mode);
      if (!cell) {
        if (model == kEnsembleModel) break;
        throw Error(ErrorCode::MissingData,
                    "no " + options.heatmap_mode + " accuracy for " + model + " on " + p.topic);
      }
      row.push_back((*cell)[0]);
    }
    if (row.size() != run.partitions.size()) continue;
    rows.push_back(model);
    values.push_back(std::move(row));
  }

  std::vector<std::string> header{"model"};
  for (const auto& p : run.partitions) header.push_back(p.topic);
  std::string out;
  if (format == ReportFormat::Csv) {
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + detail::csv_field(header[i]);
    out += "\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
      out += detail::csv_field(rows[r]);
      for (double v : values[r]) out += "," + detail::percent1(v);
      out += "\n";
    }
    return out;
  }
  out = table_row(header) + separator(header.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<std::string> cells{rows[r]};
    for (double v : values[r]) cells.push_back(detail::percent1(v));
    out += table_row(cells);
  }
  return out;
}

std::string render_prompt_accuracy(const LoadedRun& run, ReportFormat format) {
  std::vector<std::string> header{"model", "topic"};
  header.insert(header.end(), run.prompts.begin(), run.prompts.end());
  std::string out = format == ReportFormat::Csv ? "" : table_row(header) + separator(header.size());
  if (format == ReportFormat::Csv) {
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += "\n";
  }
  for (const auto& model : run.models)
    for (const auto& p : run.partitions) {
      std::vector<std::string> cells{model, p.topic};
      for (const auto& kind : run.prompts) {
        const auto* m = run.find(p.topic, model, kind);
        if (!m) throw Error(ErrorCode::MissingData, "no " + kind + " accuracy for " + model + " on " + p.topic);
        cells.push_back(format == ReportFormat::Csv ? detail::format("%.6f", m->accuracy)
                                                    : detail::percent1(m->accuracy));
      }
      if (format == ReportFormat::Markdown) {
        out += table_row(cells);
        continue;
      }
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + detail::csv_field(cells[i]);
      out += "\n";
    }
  return out;
}

std::string render_error_types(const LoadedRun& run, ReportFormat format) {
  std::map<std::pair<std::string, std::string>, ErrorBreakdown> groups;
  for (const auto& v : run.votes) {
    const auto type = classify_error(v.gold, v.label);
    if (!type) continue;
    for (const auto& key : {std::pair<std::string, std::string>{"prompt", v.kind},
                            std::pair<std::string, std::string>{"topic", v.topic},
                            std::pair<std::string, std::string>{"model", v.model}}) {
      ErrorBreakdown& b = groups[key];
      ++b.counts[static_cast<std::size_t>(*type)];
      ++b.total_errors;
    }
  }

  std::vector<std::string> header{"group_by", "group"};
  for (ErrorType t : kAllErrorTypes) header.emplace_back(to_string(t));
  std::string out;
  if (format == ReportFormat::Csv) {
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += "\n";
  } else {
    out = table_row(header) + separator(header.size());
  }
  for (const char* group_by : {"prompt", "topic", "model"})
    for (const auto& [key, breakdown] : groups) {
      if (key.first != group_by) continue;
      std::vector<std::string> cells{key.first, key.second};
      for (double p : breakdown.proportions())
        cells.push_back(format == ReportFormat::Csv ? detail::format("%.4f", p) : detail::percent1(p));
      if (format == ReportFormat::Markdown) {
        out += table_row(cells);
        continue;
      }
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + detail::csv_field(cells[i]);
      out += "\n";
    }
  return out;
}

std::string render_ablation(const LoadedRun& run, ReportFormat format) {
  if (!run.ablation_csv) throw Error(ErrorCode::MissingData, "run has no ablation.csv; run `ablate` first");
  if (format == ReportFormat::Csv) return *run.ablation_csv;

  const auto rows = parse_csv(*run.ablation_csv);
  if (rows.empty() || rows[0].size() != 7) throw Error(ErrorCode::MissingData, "ablation.csv: unexpected header");
  const auto& h = rows[0];
  std::string out = table_row({"Model", "Dataset", h[2], h[3], h[4], h[5], "avg", h[6]}) + separator(8);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 7) throw Error(ErrorCode::MissingData, "ablation.csv: malformed row " + std::to_string(i + 1));
    std::vector<std::string> cells{r[0], r[1]};
    double sum = 0.0;
    for (std::size_t c = 2; c < 6; ++c) {
      const double v = std::stod(r[c]);
      sum += v;
      cells.push_back(detail::percent1(v));
    }
    cells.push_back(detail::percent1(sum / 4.0));
    cells.push_back(detail::percent1(std::stod(r[6])));
    out += table_row(cells);
  }
  return out;
}

}  // namespace

std::string render_report(const LoadedRun& run, ReportOutput output, ReportFormat format,
                          const ReportOptions& options) {
  switch (output) {
    case ReportOutput::MetricsTable: return render_metrics_table(run, format);
    case ReportOutput::HeatmapMatrix: return render_heatmap(run, format, options);
    case ReportOutput::PromptAccuracy: return render_prompt_accuracy(run, format);
    case ReportOutput::ErrorTypes: return render_error_types(run, format);
    case ReportOutput::AblationTable: return render_ablation(run, format);
  }
  return {};
}

std::vector<std::filesystem::path> write_reports(const std::filesystem::path& dir, const LoadedRun& run,
                                                 const std::vector<ReportOutput>& outputs, ReportFormat format,
                                                 const ReportOptions& options) {
  std::vector<std::filesystem::path> written;
  for (ReportOutput output : outputs) {
    const auto path =
        dir / "report" / (std::string(to_string(output)) + (format == ReportFormat::Csv ? ".csv" : ".md"));
    detail::write_file(path, render_report(run, output, format, options));
    written.push_back(path);
  }
  return written;
}

}  // namespace stancebench
