// SPDX-License-Identifier: MIT
#include "cpm/synth.hpp"

#include <memory>

#include "cpm/bug.hpp"

namespace cpm {

namespace {

template <typename N, typename V>
std::shared_ptr<const N> mk(Label label, Span span, V&& node) {
  return std::make_shared<const N>(N{label, span, std::forward<V>(node)});
}

}  // namespace

Synth::Synth(const Program& prog) : prog_(prog), next_(prog.first_free_label) {
  // The driver's phrases come first, then everything reachable from the
  // program in structural order.  The order is arbitrary but must be a
  // function of the program alone.
  assign(0, kTagDriverGVar);
  assign(0, kTagDriverZero);
  assign(0, kTagDriverGSeq);
  assign(0, kTagDriverCall);
  index_call_site(at(0, kTagDriverCall), 0);
  if (prog_.globals) walk_glob(*prog_.globals, 0);
}

void Synth::assign(Label origin, unsigned tag) {
  auto [it, inserted] = labels_.try_emplace({origin, tag}, next_);
  if (inserted) {
    origin_of_.emplace(next_, origin);
    tag_of_.emplace(next_, tag);
    ++next_;
  }
}

bool Synth::is_body_standin(Label l) const {
  auto it = tag_of_.find(l);
  return it != tag_of_.end() &&
         (it->second == kTagCaptureBody || it->second == kTagRecBody);
}

Label Synth::source_origin(Label l) const {
  while (l >= prog_.first_free_label) {
    auto it = origin_of_.find(l);
    if (it == origin_of_.end()) return 0;
    l = it->second;
  }
  return l;
}

Label Synth::at(Label origin, unsigned tag) const {
  auto it = labels_.find({origin, tag});
  CPM_CHECK(it != labels_.end(), "synthesis at an unindexed origin");
  return it->second;
}

void Synth::index_call_site(Label site, std::size_t n_args) {
  assign(site, kTagRetVarRef);
  for (std::size_t j = 0; j <= n_args; ++j)
    assign(site, kTagParamDecl + static_cast<unsigned>(j));
  for (std::size_t j = 1; j <= n_args; ++j)
    assign(site, kTagParamSeq + static_cast<unsigned>(j));
  assign(site, kTagRetAssign);
  assign(site, kTagRetAssignVar);
}

void Synth::index_body_chain(const Body& b, unsigned rec_depth) {
  const auto* let = std::get_if<BLet>(&b.node);
  if (!let) return;  // extern bodies are used as they are

  // The original body is evaluated directly only by tests; closures hold the
  // capture-wrapped form, and each enclosing rec adds one rebuild layer.
  assign(b.label, kTagResultAssign);
  assign(b.label, kTagCaptureEnv);
  assign(b.label, kTagCaptureSeq);
  assign(b.label, kTagCaptureBody);
  Label cur = at(b.label, kTagCaptureBody);
  assign(cur, kTagResultAssign);
  for (unsigned k = 0; k < rec_depth; ++k) {
    assign(cur, kTagRecEnvDecl);
    assign(cur, kTagRecSeq);
    assign(cur, kTagRecBody);
    cur = at(cur, kTagRecBody);
    assign(cur, kTagResultAssign);
  }
  walk_stmt(*let->stmt);
}

void Synth::walk_glob(const Glob& g, unsigned rec_depth) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, GVar>) {
          // expressions synthesize nothing
        } else if constexpr (std::is_same_v<T, GFun>) {
          index_body_chain(*n.body, rec_depth);
        } else if constexpr (std::is_same_v<T, GRec>) {
          assign(g.label, kTagRecLiteral);
          walk_glob(*n.decls, rec_depth + 1);
        } else if constexpr (std::is_same_v<T, GSeq>) {
          walk_glob(*n.first, rec_depth);
          walk_glob(*n.second, rec_depth);
        }
      },
      g.node);
}

void Synth::walk_stmt(const Stmt& s) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, SCall>) {
          index_call_site(s.label, n.args.size());
        } else if constexpr (std::is_same_v<T, SSeq>) {
          walk_stmt(*n.first);
          walk_stmt(*n.second);
        } else if constexpr (std::is_same_v<T, SBlock>) {
          walk_stmt(*n.stmt);
        } else if constexpr (std::is_same_v<T, SIf>) {
          walk_stmt(*n.then_s);
          walk_stmt(*n.else_s);
        } else if constexpr (std::is_same_v<T, SWhile>) {
          walk_stmt(*n.body);
        } else if constexpr (std::is_same_v<T, STryCatch>) {
          walk_stmt(*n.body);
          walk_catch(*n.handlers);
        } else if constexpr (std::is_same_v<T, STryFinally>) {
          walk_stmt(*n.body);
          walk_stmt(*n.finalizer);
        }
      },
      s.node);
}

void Synth::walk_catch(const Catch& k) {
  if (const auto* c = std::get_if<CClause>(&k.node)) {
    walk_stmt(*c->handler);
  } else {
    const auto& seq = std::get<CSeq>(k.node);
    walk_catch(*seq.first);
    walk_catch(*seq.second);
  }
}

// ---------------------------------------------------------------- driver

GlobPtr Synth::driver_glob() {
  Key key{0, kTagDriverGSeq};
  if (auto it = cache_.find(key); it != cache_.end())
    return std::get<GlobPtr>(it->second);
  Span sp{};
  auto zero = mk<Expr>(at(0, kTagDriverZero), sp, IntConst{Int(0)});
  auto gv = mk<Glob>(at(0, kTagDriverGVar), sp,
                     GVar{reserved_result(), SType::Integer, zero});
  auto gseq =
      mk<Glob>(at(0, kTagDriverGSeq), sp, GSeq{prog_.globals, gv});
  cache_.emplace(key, gseq);
  return gseq;
}

StmtPtr Synth::driver_call() {
  Key key{0, kTagDriverCall};
  if (auto it = cache_.find(key); it != cache_.end())
    return std::get<StmtPtr>(it->second);
  Span sp{};
  auto call = mk<Stmt>(at(0, kTagDriverCall), sp,
                       SCall{reserved_result(), Ident{"main", false}, {}});
  cache_.emplace(key, call);
  return call;
}

// ---------------------------------------------------------- call protocol

DeclPtr Synth::call_param_decl(const Stmt& call_site, const Formals& fps,
                               SType ret_type) {
  const auto& c = std::get<SCall>(call_site.node);
  CPM_CHECK(c.args.size() == fps.size(),
            "parameter declaration for a mismatched arity");
  Key key{call_site.label, kTagCallDecl};
  if (auto it = cache_.find(key); it != cache_.end()) {
    // The closure seen at one call site is stable across a run; make sure.
    const DeclPtr& cached = std::get<DeclPtr>(it->second);
    const Decl* d = cached.get();
    for (std::size_t j = fps.size(); j >= 1; --j) {
      const auto* seq = std::get_if<DSeq>(&d->node);
      CPM_CHECK(seq, "cached parameter declaration lost its spine");
      const auto& lv = std::get<DLocal>(seq->second->node);
      CPM_CHECK(lv.type == fps[j - 1].type,
                "call site resynthesized with different parameter types");
      d = seq->first.get();
    }
    CPM_CHECK(std::get<DLocal>(d->node).type == ret_type,
              "call site resynthesized with a different return type");
    return cached;
  }

  Span sp = call_site.span;
  Label site = call_site.label;
  auto ret_init = mk<Expr>(at(site, kTagRetVarRef), sp, VarRef{c.target});
  DeclPtr acc = mk<Decl>(at(site, kTagParamDecl + 0u), sp,
                         DLocal{reserved_slot(0), ret_type, ret_init});
  for (std::size_t j = 1; j <= fps.size(); ++j) {
    auto lv = mk<Decl>(
        at(site, kTagParamDecl + static_cast<unsigned>(j)), sp,
        DLocal{reserved_slot(static_cast<unsigned>(j)), fps[j - 1].type,
               c.args[j - 1]});
    acc = mk<Decl>(at(site, kTagParamSeq + static_cast<unsigned>(j)), sp,
                   DSeq{acc, lv});
  }
  cache_.emplace(key, acc);
  return acc;
}

Env Synth::callee_env(const Formals& fps, SType ret_type) {
  Env rho1;
  rho1.bindings.emplace(reserved_slot(0), Cell{Ind{0}, ret_type});
  for (std::size_t j = 1; j <= fps.size(); ++j)
    rho1.bindings.emplace(
        fps[j - 1].id,
        Cell{Ind{static_cast<std::uint32_t>(j)}, fps[j - 1].type});
  return rho1;
}

StmtPtr Synth::return_assign(const Stmt& call_site) {
  const auto& c = std::get<SCall>(call_site.node);
  Key key{call_site.label, kTagRetAssign};
  if (auto it = cache_.find(key); it != cache_.end())
    return std::get<StmtPtr>(it->second);
  Span sp = call_site.span;
  auto slot = mk<Expr>(at(call_site.label, kTagRetAssignVar), sp,
                       VarRef{reserved_slot(0)});
  auto st = mk<Stmt>(at(call_site.label, kTagRetAssign), sp,
                     SAssign{c.target, slot});
  cache_.emplace(key, st);
  return st;
}

// ----------------------------------------------------------------- bodies

StmtPtr Synth::result_assign(const Body& let_body) {
  const auto& b = std::get<BLet>(let_body.node);
  Key key{let_body.label, kTagResultAssign};
  if (auto it = cache_.find(key); it != cache_.end())
    return std::get<StmtPtr>(it->second);
  auto st = mk<Stmt>(at(let_body.label, kTagResultAssign), let_body.span,
                     SAssign{reserved_slot(0), b.result});
  cache_.emplace(key, st);
  return st;
}

BodyPtr Synth::capture_body(const Body& body0, const Env& captured) {
  const auto& b = std::get<BLet>(body0.node);
  Key key{body0.label, kTagCaptureBody};
  if (auto it = cache_.find(key); it != cache_.end()) {
    const BodyPtr& cached = std::get<BodyPtr>(it->second);
    const auto& seq = std::get<DSeq>(std::get<BLet>(cached->node).locals->node);
    const auto& lit = std::get<DEnv>(seq.first->node);
    CPM_CHECK(equal_modulo_labels(*lit.env, captured),
              "closure recaptured a different environment");
    return cached;
  }
  Span sp = body0.span;
  auto lit = mk<Decl>(at(body0.label, kTagCaptureEnv), sp,
                      DEnv{std::make_shared<const Env>(captured)});
  auto seq =
      mk<Decl>(at(body0.label, kTagCaptureSeq), sp, DSeq{lit, b.locals});
  auto wrapped = mk<Body>(at(body0.label, kTagCaptureBody), sp,
                          BLet{seq, b.stmt, b.result});
  cache_.emplace(key, wrapped);
  return wrapped;
}

// -------------------------------------------------------------- recursion

DeclPtr Synth::rec_literal(const Glob& rec_site, const Env& group) {
  Key key{rec_site.label, kTagRecLiteral};
  if (auto it = cache_.find(key); it != cache_.end()) {
    const DeclPtr& cached = std::get<DeclPtr>(it->second);
    CPM_CHECK(
        equal_modulo_labels(*std::get<DRecEnv>(cached->node).env, group),
        "rec group re-evaluated to a different environment");
    return cached;
  }
  auto lit = mk<Decl>(at(rec_site.label, kTagRecLiteral), rec_site.span,
                      DRecEnv{std::make_shared<const Env>(group)});
  cache_.emplace(key, lit);
  return lit;
}

BodyPtr Synth::rec_body(const Body& closure_body, const Env& group) {
  const auto& b = std::get<BLet>(closure_body.node);
  Key key{closure_body.label, kTagRecBody};
  if (auto it = cache_.find(key); it != cache_.end()) {
    const BodyPtr& cached = std::get<BodyPtr>(it->second);
    const auto& seq = std::get<DSeq>(std::get<BLet>(cached->node).locals->node);
    const auto& lit = std::get<DRecEnv>(seq.first->node);
    CPM_CHECK(equal_modulo_labels(*lit.env, group),
              "closure rebuilt around a different recursive group");
    return cached;
  }
  Span sp = closure_body.span;
  auto lit = mk<Decl>(at(closure_body.label, kTagRecEnvDecl), sp,
                      DRecEnv{std::make_shared<const Env>(group)});
  auto seq =
      mk<Decl>(at(closure_body.label, kTagRecSeq), sp, DSeq{lit, b.locals});
  auto wrapped = mk<Body>(at(closure_body.label, kTagRecBody), sp,
                          BLet{seq, b.stmt, b.result});
  cache_.emplace(key, wrapped);
  return wrapped;
}

}  // namespace cpm
