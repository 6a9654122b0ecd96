// SPDX-License-Identifier: MIT
//
// Program-level analysis reports: one row per source label plus the verdict
// table (which runtime errors are possible and where, what escapes main,
// which labels are unreachable).  Renders to stable JSON or a human table.

#ifndef CPM_REPORT_HPP
#define CPM_REPORT_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <cpm/analyzer.hpp>

namespace cpm {

// Where one exception category can originate, program-wide.  Labels are the
// raise sites in ascending order; synthesized phrases (call protocol
// allocations and the like) appear under their own labels.
struct CategoryVerdict {
  std::vector<Label> labels;
  bool possible() const { return !labels.empty(); }
};

struct Report {
  struct Row {
    Label label = 0;
    Span span{};
    LabelReport::Kind kind = LabelReport::Kind::Stmt;
    std::string mem;     // rendered normal-exit memory
    std::string except;  // rendered exceptional outcome, "none" if impossible
    bool unreachable = false;
  };

  std::vector<Row> rows;  // source labels only, ascending

  CategoryVerdict divbyzero;
  CategoryVerdict memerror;
  CategoryVerdict stack_overflow;
  CategoryVerdict data_overflow;
  CategoryVerdict extern_call;

  struct Uncaught {
    bool possible = false;
    std::vector<std::string> rts;  // names, ascending; all five when ⊤
    std::string value;             // rendered thrown-value component
  } uncaught;

  std::vector<Label> unreachable;  // source labels never reached, ascending
  std::string exit_value;          // rendered abstraction of main's result
  std::uint64_t rule_applications = 0;
};

std::string_view to_string(LabelReport::Kind k);

Report make_report(const Program& prog, const Analyzer& an,
                   const AnalysisResult& result);

// Stable rendering: fixed key order and formatting, no locale or iteration
// order dependence; equal inputs and configuration give byte-equal output.
std::string to_json(const Report& rep, const AnalyzerConfig& cfg);

// Human-oriented rendering keyed by source position.
std::string to_text(const Report& rep);

}  // namespace cpm

#endif  // CPM_REPORT_HPP
