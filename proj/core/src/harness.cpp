// SPDX-License-Identifier: MIT
#include "cpm/harness.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace cpm {

// ------------------------------------------------------ value-level approx

bool approx(const SVal& v, const AbsSVal& a) { return a.contains(v); }

bool approx(const Except& x, const AbsExcept& a) { return a.contains(x); }

// --------------------------------------------------------------- memories

bool approx(const Mem& m, const AbsMem& a) {
  if (a.is_bottom()) return false;
  if (a.limits() != m.limits) return false;
  if (a.next_loc() && *a.next_loc() != m.next_loc) return false;
  if (a.data_cells() && *a.data_cells() != m.data_cells) return false;

  // Cut the stack word into link-separated segments and match the listed
  // frames against the trailing ones.  Marks stay inside their segment: a
  // mark opens a frame for the unwind protocol but does not close the
  // addressable region the way a link does, and the abstract frames follow
  // the links.
  std::vector<std::pair<std::size_t, std::size_t>> segs;
  std::size_t beg = 0;
  for (std::size_t i = 0; i < m.word.size(); ++i) {
    if (m.word[i].kind == StackSym::Kind::Link) {
      segs.emplace_back(beg, i);
      beg = i + 1;
    }
  }
  segs.emplace_back(beg, m.word.size());

  const std::vector<AbsFrame>& frames = a.frames();
  if (segs.size() < frames.size()) return false;
  if (!a.below_unknown() && segs.size() != frames.size()) return false;

  const std::size_t off = segs.size() - frames.size();
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const AbsFrame& af = frames[f];
    const auto [b, e] = segs[off + f];
    const std::size_t len = e - b;
    if (af.slots.size() > len) return false;
    if (!af.tail_unknown && af.slots.size() != len) return false;
    for (std::size_t i = 0; i < af.slots.size(); ++i) {
      const AbsSlot& s = af.slots[i];
      const StackSym& w = m.word[b + i];
      if (s.kind == AbsSlot::Kind::Marker) {
        if (w.kind != StackSym::Kind::Mark) return false;
        continue;
      }
      if (w.kind != StackSym::Kind::Location) return false;
      if (s.maybe_invalid) continue;  // binding unconstrained
      auto it = m.data.find({w.loc, s.type});
      if (it == m.data.end()) return false;
      if (!approx(it->second, s.val)) return false;
    }
  }

  // Data segment: listed cells bound their keys, and any concrete key that
  // is not listed must at least belong to the stack.
  for (const auto& [key, cell] : a.data()) {
    auto it = m.data.find(key);
    if (it == m.data.end()) {
      if (!cell.maybe_absent && !cell.maybe_invalid) return false;
    } else if (!cell.maybe_invalid) {
      if (!approx(it->second, cell.val)) return false;
    }
  }
  std::set<Loc> stack_locs;
  for (const StackSym& w : m.word)
    if (w.kind == StackSym::Kind::Location) stack_locs.insert(w.loc);
  for (const auto& kv : m.data) {
    if (a.data().contains(kv.first)) continue;
    if (!stack_locs.contains(kv.first.first)) return false;
  }
  return true;
}

bool approx(const ExceptState& e, const AbsExcState& a) {
  return !a.is_bottom() && approx(e.ex, a.ex) && approx(e.mem, a.mem);
}

// -------------------------------------------------------------- terminals

bool approx(const ExprOut& out, const AbsExprOut& a) {
  if (const auto* e = std::get_if<ExceptState>(&out)) return approx(*e, a.exc);
  // Expressions cannot change memory, so a value terminal constrains the
  // value side only; the memory pairing is checked where memory can move.
  const auto& v = std::get<SVal>(out);
  return !a.val.is_bottom() && approx(v, a.val.val);
}

bool approx(const DeclOut& out, const AbsDeclOut& a) {
  if (const auto* e = std::get_if<ExceptState>(&out)) return approx(*e, a.exc);
  const DeclOk& ok = std::get<DeclOk>(out);
  return !a.mem.is_bottom() && equal_modulo_labels(ok.env, a.env) &&
         approx(ok.mem, a.mem);
}

bool approx(const StmtOut& out, const AbsStmtOut& a) {
  if (const auto* e = std::get_if<ExceptState>(&out)) return approx(*e, a.exc);
  return approx(std::get<Mem>(out), a.mem);
}

bool approx(const CatchOut& out, const AbsCatchOut& a) {
  if (out.caught) return approx(out.out, a.caught);
  const auto* e = std::get_if<ExceptState>(&out.out);
  return e != nullptr && approx(*e, a.uncaught);
}

// ---------------------------------------------------- differential driver

namespace {

// Thrown from the trace sink once a violation is recorded: the remaining
// concrete run cannot change the verdict, so stop paying for it.
struct AbortTrace {};

// Analyzer records folded onto source labels, the same attribution the
// report uses: a synthesized body stand-in (capture or recursion wrapper)
// reports for the body it evaluates in place of; other synthesized phrases
// are protocol steps with no source counterpart.
struct Folded {
  AbsMem pre = AbsMem::bottom();
  AbsMem post = AbsMem::bottom();
  AbsExcState escape;
};

std::map<Label, Folded> fold_records(const Analyzer& an) {
  std::map<Label, Folded> eff;
  for (const auto& [l, rec] : an.labels()) {
    Label key = l;
    if (rec.synthetic) {
      if (rec.kind != LabelReport::Kind::Body) continue;
      key = an.synth().source_origin(l);
      if (key == 0) continue;
    }
    Folded& f = eff[key];
    f.pre = join(f.pre, rec.pre);
    f.post = join(f.post, rec.post);
    f.escape = join(f.escape, rec.escape);
  }
  return eff;
}

}  // namespace

std::string Verdict::describe() const {
  switch (kind) {
    case Kind::Sound:
      return "sound: " + std::to_string(concrete_steps) +
             " concrete steps against " + std::to_string(abstract_steps) +
             " abstract rule applications";
    case Kind::Violation:
      return (label == 0 ? std::string("violation at program level (")
                         : "violation at label " + std::to_string(label) +
                               " (") +
             category + ")";
    case Kind::Inconclusive:
      return analysis_terminated
                 ? "inconclusive: concrete budget exhausted after " +
                       std::to_string(concrete_steps) +
                       " steps; analysis terminated"
                 : "inconclusive: analysis hit its iteration cap";
  }
  return "corrupt verdict";
}

Verdict differential_check(const Program& prog, const TypeInfo& types,
                           const DiffConfig& cfg) {
  Verdict v;

  // Abstract side first: its per-label records are what the concrete trace
  // is checked against.
  AnalyzerConfig acfg = cfg.analyzer;
  acfg.limits = cfg.interp.limits;
  Analyzer an(prog, types, acfg);
  AnalysisResult ares;
  try {
    ares = an.run();
  } catch (const IterationCapExceeded& e) {
    v.kind = Verdict::Kind::Inconclusive;
    v.analysis_terminated = false;
    v.category = "analysis-iteration-cap";
    v.label = e.label;
    return v;
  }
  v.abstract_steps = ares.rule_applications;

  const std::map<Label, Folded> eff = fold_records(an);
  const std::map<Label, LabelReport> skel = collect_label_skeleton(prog);

  std::optional<Verdict> bad;
  std::vector<Label> path;
  constexpr std::size_t kPathKeep = 24;

  Interp* ip = nullptr;  // filled right after construction, used by the sink
  TraceSink sink;
  if (cfg.per_label) {
    sink = [&](const TraceEvent& ev) {
      Label l = ev.label;
      if (l >= prog.first_free_label) {
        // Only body stand-ins have a source phrase to answer for.
        if (!ip->synth().is_body_standin(l)) return;
        l = ip->synth().source_origin(l);
        if (l == 0) return;
      }
      auto ks = skel.find(l);
      if (ks == skel.end()) return;
      const auto kind = ks->second.kind;
      if (kind != LabelReport::Kind::Stmt && kind != LabelReport::Kind::Body)
        return;

      if (ev.phase == TraceEvent::Phase::Enter) {
        if (path.size() == kPathKeep) path.erase(path.begin());
        path.push_back(l);
      }

      auto flag = [&](std::string category, std::string witness,
                      std::string claim) {
        Verdict w;
        w.kind = Verdict::Kind::Violation;
        w.label = l;
        w.category = std::move(category);
        w.witness = std::move(witness);
        w.claim = std::move(claim);
        w.path = path;
        bad = std::move(w);
        throw AbortTrace{};
      };

      auto it = eff.find(l);
      if (it == eff.end())
        flag("reached-unreachable", ev.mem->render(),
             "label never reached in the analysis");
      const Folded& f = it->second;
      if (ev.phase == TraceEvent::Phase::Enter) {
        if (!approx(*ev.mem, f.pre))
          flag("entry", ev.mem->render(), f.pre.render());
      } else if (ev.ex != nullptr) {
        if (f.escape.is_bottom() || !approx(*ev.ex, f.escape.ex) ||
            !approx(*ev.mem, f.escape.mem))
          flag("exceptional-exit",
               to_string(*ev.ex) + " with " + ev.mem->render(),
               f.escape.render());
      } else {
        if (!approx(*ev.mem, f.post))
          flag("normal-exit", ev.mem->render(), f.post.render());
      }
    };
  }

  Interp in(prog, types, cfg.interp, std::move(sink));
  ip = &in;

  std::optional<ProgramResult> res;
  try {
    res = in.run();
  } catch (const AbortTrace&) {
    // verdict already recorded
  } catch (const StuckError& e) {
    Verdict w;
    w.kind = Verdict::Kind::Violation;
    w.label = e.label;
    w.category = "stuck";
    w.witness = e.what();
    w.claim = "checked programs evaluate without sticking";
    w.path = path;
    bad = std::move(w);
  }
  v.concrete_steps = in.steps_used();

  if (bad) {
    bad->analysis_terminated = true;
    bad->concrete_steps = in.steps_used();
    bad->abstract_steps = ares.rule_applications;
    return *std::move(bad);
  }

  switch (res->kind) {
    case ProgramResult::Kind::OutOfBudget:
      v.kind = Verdict::Kind::Inconclusive;
      v.budget_exhausted = true;
      v.category = "budget-exhausted";
      break;
    case ProgramResult::Kind::Value: {
      const SVal sv{res->value};
      if (!approx(sv, ares.exit_value)) {
        v.kind = Verdict::Kind::Violation;
        v.category = "exit-value";
        v.witness = to_string(sv);
        v.claim = ares.exit_value.render();
        v.path = path;
      }
      break;
    }
    case ProgramResult::Kind::Exception:
      if (ares.uncaught.is_bottom() || !approx(res->ex, ares.uncaught.ex)) {
        v.kind = Verdict::Kind::Violation;
        v.category = "uncaught";
        v.witness = to_string(res->ex);
        v.claim = ares.uncaught.render();
        v.path = path;
      }
      break;
  }
  return v;
}

}  // namespace cpm
