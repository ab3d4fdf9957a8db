#include "simviz/report.hpp"

#include <cstdlib>
#include <json.hpp>

#include "simviz/error.hpp"
#include "simviz/io_util.hpp"

namespace simviz {

ReportFormat parse_report_format(std::string_view text) {
  if (text == "tsv") return ReportFormat::Tsv;
  if (text == "json-lines") return ReportFormat::JsonLines;
  throw Error(Errc::InvalidArgument, "report format must be tsv or json-lines");
}

double round9(double v) { return std::strtod(io::format9(v).c_str(), nullptr); }

std::string emit_report(const std::vector<RankedResult>& results, ReportFormat format) {
  std::string out;
  if (format == ReportFormat::Tsv) {
    out = "rank\tid\tclass_label\tscore\n";
    for (const RankedResult& r : results) {
      out += std::to_string(r.rank) + '\t' + r.id + '\t' + r.class_label + '\t' + io::format9(r.score) + '\n';
    }
    return out;
  }
  for (const RankedResult& r : results) {
    nlohmann::ordered_json j;
    j["rank"] = r.rank;
    j["id"] = r.id;
    j["class_label"] = r.class_label;
    j["score"] = round9(r.score);
    out += j.dump() + '\n';
  }
  return out;
}

std::vector<RankedResult> parse_report(std::string_view text, ReportFormat format) {
  std::vector<RankedResult> results;
  std::size_t pos = 0;
  bool header = format == ReportFormat::Tsv;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string line(text.substr(pos, end - pos));
    pos = end + 1;
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    RankedResult r;
    if (format == ReportFormat::Tsv) {
      const std::size_t t1 = line.find('\t');
      const std::size_t t2 = line.find('\t', t1 + 1);
      const std::size_t t3 = line.find('\t', t2 + 1);
      if (t3 == std::string::npos) throw Error(Errc::InvalidArgument, "malformed report line");
      r.rank = std::stoul(line.substr(0, t1));
      r.id = line.substr(t1 + 1, t2 - t1 - 1);
      r.class_label = line.substr(t2 + 1, t3 - t2 - 1);
      r.score = std::strtod(line.c_str() + t3 + 1, nullptr);
    } else {
      const auto j = nlohmann::json::parse(line);
      r.rank = j.at("rank").get<std::size_t>();
      r.id = j.at("id").get<std::string>();
      r.class_label = j.at("class_label").get<std::string>();
      r.score = j.at("score").get<double>();
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace simviz
