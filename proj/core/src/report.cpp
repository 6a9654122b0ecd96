// SPDX-License-Identifier: MIT

#include <cpm/report.hpp>

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace cpm {

namespace {

using ordered_json = nlohmann::ordered_json;

// The RTS name universe is closed, so ⊤ has an exact enumeration.
const std::vector<std::string> kAllRts = {
    std::string(rts::datovflw), std::string(rts::divbyzero),
    std::string(rts::externcall), std::string(rts::memerror),
    std::string(rts::stkovflw)};

std::string render_except(const AbsExcState& e) {
  return e.is_bottom() ? "none" : e.render();
}

ordered_json category_json(const CategoryVerdict& v) {
  ordered_json j;
  j["status"] = v.possible() ? "possible" : "impossible";
  j["labels"] = v.labels;
  return j;
}

std::string label_list(const std::vector<Label>& ls) {
  std::string out;
  for (Label l : ls) {
    if (!out.empty()) out += ", ";
    out += std::to_string(l);
  }
  return out;
}

}  // namespace

std::string_view to_string(LabelReport::Kind k) {
  switch (k) {
    case LabelReport::Kind::Expr: return "expr";
    case LabelReport::Kind::Decl: return "decl";
    case LabelReport::Kind::Glob: return "glob";
    case LabelReport::Kind::Stmt: return "stmt";
    case LabelReport::Kind::Body: return "body";
    case LabelReport::Kind::Catch: return "catch";
  }
  return "?";
}

Report make_report(const Program& prog, const Analyzer& an,
                   const AnalysisResult& result) {
  Report rep;
  const auto& visited = an.labels();

  // Closures hold capture-wrapped (and rec-rebuilt) bodies, so a function
  // body is entered under a stand-in label, never its own.  Fold every
  // stand-in's record back onto the source label it stands for.
  std::map<Label, LabelReport> eff;
  for (const auto& [l, lr] : visited) {
    Label key = l;
    if (lr.synthetic) {
      if (lr.kind != LabelReport::Kind::Body) continue;
      key = an.synth().source_origin(l);
      if (key == 0) continue;  // driver machinery, not a source phrase
    }
    auto [it, fresh] = eff.try_emplace(key, lr);
    if (!fresh) {
      it->second.pre = join(it->second.pre, lr.pre);
      it->second.post = join(it->second.post, lr.post);
      it->second.raised = join(it->second.raised, lr.raised);
      it->second.escape = join(it->second.escape, lr.escape);
    }
  }

  // One row per source label, whether the analysis ever got there or not.
  for (const auto& [l, skel] : collect_label_skeleton(prog)) {
    Report::Row row;
    row.label = l;
    row.span = skel.span;
    row.kind = skel.kind;
    auto it = eff.find(l);
    if (it == eff.end() || it->second.pre.is_bottom()) {
      row.unreachable = true;
      row.mem = "⊥";
      row.except = "none";
      rep.unreachable.push_back(l);
    } else {
      row.mem = it->second.post.is_bottom() ? "⊥" : it->second.post.render();
      row.except = render_except(it->second.escape);
    }
    rep.rows.push_back(std::move(row));
  }

  // Raise sites per category, synthesized phrases included: a call's
  // parameter allocation can overflow the stack even though no source label
  // names it.
  for (const auto& [l, lr] : visited) {
    if (lr.raised.is_bottom()) continue;
    const AbsRts& r = lr.raised.ex.rts;
    if (r.contains(rts::divbyzero)) rep.divbyzero.labels.push_back(l);
    if (r.contains(rts::memerror)) rep.memerror.labels.push_back(l);
    if (r.contains(rts::stkovflw)) rep.stack_overflow.labels.push_back(l);
    if (r.contains(rts::datovflw)) rep.data_overflow.labels.push_back(l);
    if (r.contains(rts::externcall)) rep.extern_call.labels.push_back(l);
  }

  if (!result.uncaught.is_bottom()) {
    rep.uncaught.possible = true;
    const AbsRts& r = result.uncaught.ex.rts;
    if (r.is_top())
      rep.uncaught.rts = kAllRts;
    else
      rep.uncaught.rts.assign(r.names().begin(), r.names().end());
    rep.uncaught.value = result.uncaught.ex.val.is_bottom()
                             ? "⊥"
                             : result.uncaught.ex.val.render();
  } else {
    rep.uncaught.value = "⊥";
  }

  rep.exit_value =
      result.exit_value.is_bottom() ? "⊥" : result.exit_value.render();
  rep.rule_applications = result.rule_applications;
  return rep;
}

std::string to_json(const Report& rep, const AnalyzerConfig& cfg) {
  ordered_json j;

  j["labels"] = ordered_json::array();
  for (const auto& row : rep.rows) {
    ordered_json r;
    r["label"] = row.label;
    r["line"] = row.span.line;
    r["col"] = row.span.col;
    r["mem"] = row.mem;
    r["except"] = row.except;
    j["labels"].push_back(std::move(r));
  }

  ordered_json v;
  v["divbyzero"] = category_json(rep.divbyzero);
  v["memerror"] = category_json(rep.memerror);
  v["stack_overflow"] = category_json(rep.stack_overflow);
  v["data_overflow"] = category_json(rep.data_overflow);
  v["extern_call"] = category_json(rep.extern_call);
  ordered_json u;
  u["status"] = rep.uncaught.possible ? "possible" : "impossible";
  u["rts"] = rep.uncaught.rts;
  u["value"] = rep.uncaught.value;
  v["uncaught"] = std::move(u);
  v["unreachable"] = rep.unreachable;
  j["verdicts"] = std::move(v);

  j["exit"] = rep.exit_value;

  ordered_json c;
  c["widening_delay"] = cfg.widening_delay;
  c["max_iterations"] = cfg.max_iterations;
  c["memoize"] = cfg.memoize;
  c["data_capacity"] = cfg.limits.data_capacity;
  c["stack_capacity"] = cfg.limits.stack_capacity;
  if (cfg.plugin)
    c["plugin"] = std::string(cfg.plugin->name());
  else
    c["plugin"] = nullptr;
  j["config_echo"] = std::move(c);

  return j.dump(2) + "\n";
}

std::string to_text(const Report& rep) {
  std::ostringstream os;
  for (const auto& row : rep.rows) {
    os << "label " << row.label << " (" << row.span.line << ':'
       << row.span.col << ", " << to_string(row.kind) << ")";
    if (row.unreachable) {
      os << "  unreachable\n";
      continue;
    }
    os << "\n  post:   " << row.mem << "\n";
    if (row.except != "none") os << "  except: " << row.except << "\n";
  }

  os << "\nverdicts\n";
  auto cat = [&](const char* name, const CategoryVerdict& v) {
    os << "  " << name << ": ";
    if (v.possible())
      os << "possible at label(s) " << label_list(v.labels) << "\n";
    else
      os << "impossible\n";
  };
  cat("divbyzero     ", rep.divbyzero);
  cat("memerror      ", rep.memerror);
  cat("stack overflow", rep.stack_overflow);
  cat("data overflow ", rep.data_overflow);
  cat("extern call   ", rep.extern_call);

  os << "  uncaught      : ";
  if (rep.uncaught.possible) {
    os << "possible {";
    for (std::size_t i = 0; i < rep.uncaught.rts.size(); ++i)
      os << (i ? "," : "") << rep.uncaught.rts[i];
    os << "}";
    if (rep.uncaught.value != "⊥") os << " value " << rep.uncaught.value;
    os << "\n";
  } else {
    os << "impossible\n";
  }

  os << "  unreachable   : ";
  if (rep.unreachable.empty())
    os << "none\n";
  else
    os << "label(s) " << label_list(rep.unreachable) << "\n";

  os << "\nexit value: " << rep.exit_value << "\n";
  return os.str();
}

}  // namespace cpm
