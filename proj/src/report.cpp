#include <ostream>

#include <fmt/format.h>

#include "hdgkit/eval.hpp"

namespace hdg {

std::string format_real(double v) { return fmt::format("{:.6g}", v); }

namespace {

// Quotes a CSV field when it contains a separator, quote or newline.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& confusion, const DatasetManifest& manifest) {
  out << "true\\predicted";
  for (int c = 0; c < confusion.num_classes(); ++c) out << ',' << csv_field(manifest.class_name(c));
  out << '\n';
  for (int t = 0; t < confusion.num_classes(); ++t) {
    out << csv_field(manifest.class_name(t));
    for (int p = 0; p < confusion.num_classes(); ++p) out << ',' << confusion.at(t, p);
    out << '\n';
  }
}

void write_plan_summary_csv(std::ostream& out, const ProtocolResult& result) {
  out << "plan,descriptor,status,average_accuracy,selected_features,full_features\n";
  for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
    const auto& o = result.outcomes[i];
    out << i << ',' << csv_field(o.plan.descriptor) << ',';
    if (o.report) {
      out << "ok," << format_real(o.report->average_accuracy) << ',' << o.report->selected_features << ','
          << o.report->full_features << '\n';
    } else {
      out << csv_field("skipped: " + o.skip_reason) << ",,,\n";
    }
  }
}

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
  out << "components,feature_length,mean_accuracy,evaluated_plans\n";
  for (const auto& row : rows) {
    out << row.components.to_string() << ',' << row.feature_length << ',' << format_real(row.mean_accuracy) << ','
        << row.evaluated << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const SweepGrid& grid) {
  out << "trees\\alpha";
  for (double a : grid.alphas) out << ',' << format_real(a);
  out << '\n';
  for (std::size_t t = 0; t < grid.trees.size(); ++t) {
    out << grid.trees[t];
    for (std::size_t a = 0; a < grid.alphas.size(); ++a) {
      const auto& cell = grid.at(t, a);
      out << ',' << (cell.accuracy ? format_real(*cell.accuracy) : std::string("failed"));
    }
    out << '\n';
  }
}

}  // namespace hdg
