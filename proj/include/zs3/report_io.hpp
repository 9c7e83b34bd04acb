#pragma once

#include "zs3/embeddings.hpp"
#include "zs3/metrics.hpp"

#include <string>

namespace zs3 {

/// Seen | Unseen | Overall table (percent, one decimal) plus per-class rows.
/// Empty groups render as "--".
std::string report_to_text(const EvalReport& report, const ClassCatalog& catalog,
                           const std::string& row_label);

/// Machine document: confusion matrix, per-class metrics, group metrics,
/// hIoU, plus the config echo and seed it was produced under.
std::string report_to_json(const EvalReport& report, const ClassCatalog& catalog,
                           const std::string& config_echo_json, std::uint64_t seed);

enum class ReportFormat { text, json };

void emit_report(const EvalReport& report, const ClassCatalog& catalog, const std::string& path,
                 ReportFormat format, const std::string& row_label, const std::string& config_echo_json,
                 std::uint64_t seed);

} // namespace zs3
