#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "simviz/retrieval.hpp"

namespace simviz {

enum class ReportFormat { Tsv, JsonLines };

ReportFormat parse_report_format(std::string_view text);

/// TSV: header "rank\tid\tclass_label\tscore" then one line per result.
/// JSON lines: one {"rank","id","class_label","score"} object per line.
/// Scores carry 9 significant digits in both.
std::string emit_report(const std::vector<RankedResult>& results, ReportFormat format);
std::vector<RankedResult> parse_report(std::string_view text, ReportFormat format);

/// `v` rounded to 9 significant digits.
double round9(double v);

}  // namespace simviz
