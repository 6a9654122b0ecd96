// SPDX-License-Identifier: MIT
#include "cpm/absmem.hpp"

#include <algorithm>
#include <sstream>

#include "cpm/bug.hpp"

namespace cpm {

namespace {

AbsExcState rts_err(const AbsMem& m, std::string_view name) {
  return AbsExcState::of(m, AbsExcept::of(Except{RtsExc{std::string(name)}}));
}

SType other_type(SType t) {
  return t == SType::Integer ? SType::Boolean : SType::Integer;
}

// Index of the last marker slot of a frame, or npos.
std::size_t last_marker(const AbsFrame& f) {
  for (std::size_t i = f.slots.size(); i > 0; --i)
    if (f.slots[i - 1].kind == AbsSlot::Kind::Marker) return i - 1;
  return std::string::npos;
}

}  // namespace

// ---------------------------------------------------------------------------
// AbsMem basics
// ---------------------------------------------------------------------------

AbsMem AbsMem::initial(Limits lim) {
  AbsMem m;
  m.bottom_ = false;
  m.frames_.push_back(AbsFrame{});
  m.next_loc_ = 0;
  m.data_cells_ = 0;
  m.limits_ = lim;
  return m;
}

const std::map<std::pair<Loc, SType>, AbsDataCell>& AbsMem::data() const {
  CPM_CHECK(!bottom_, "component access on bottom memory");
  return data_;
}

const std::vector<AbsFrame>& AbsMem::frames() const {
  CPM_CHECK(!bottom_, "component access on bottom memory");
  return frames_;
}

bool AbsMem::below_unknown() const {
  CPM_CHECK(!bottom_, "component access on bottom memory");
  return below_unknown_;
}

const Limits& AbsMem::limits() const {
  CPM_CHECK(!bottom_, "component access on bottom memory");
  return limits_;
}

std::optional<Loc> AbsMem::next_loc() const {
  CPM_CHECK(!bottom_, "component access on bottom memory");
  return next_loc_;
}

std::optional<std::uint64_t> AbsMem::data_cells() const {
  CPM_CHECK(!bottom_, "component access on bottom memory");
  return data_cells_;
}

// ---------------------------------------------------------------------------
// Lattice.  Join and widening share the alignment logic and differ only in
// how two known values are combined.  Shapes can only get coarser under
// either: slot prefixes shrink, frame counts shrink, unknown-flags switch
// on — so widening terminates as soon as the value combination does.
// ---------------------------------------------------------------------------

struct AbsMemOps {
  using ValComb = AbsSVal (*)(const AbsSVal&, const AbsSVal&);

  static std::map<std::pair<Loc, SType>, AbsDataCell>& data_of(AbsMem& m) {
    CPM_CHECK(!m.bottom_, "component access on bottom memory");
    return m.data_;
  }
  static std::vector<AbsFrame>& frames_of(AbsMem& m) {
    CPM_CHECK(!m.bottom_, "component access on bottom memory");
    return m.frames_;
  }
  static AbsFrame& top_frame(AbsMem& m) { return frames_of(m).back(); }
  static void set_next_loc(AbsMem& m, Loc l) { m.next_loc_ = l; }
  static void set_counters(AbsMem& m, Loc l, std::uint64_t cells) {
    m.next_loc_ = l;
    m.data_cells_ = cells;
  }

  static AbsFrame combine_frame(const AbsFrame& a, const AbsFrame& b,
                                ValComb f) {
    AbsFrame out;
    std::size_t n = std::min(a.slots.size(), b.slots.size());
    std::size_t i = 0;
    for (; i < n; ++i) {
      const AbsSlot& x = a.slots[i];
      const AbsSlot& y = b.slots[i];
      if (x.kind != y.kind) break;
      if (x.kind == AbsSlot::Kind::Marker) {
        out.slots.push_back(AbsSlot::marker());
        continue;
      }
      if (x.type != y.type) break;
      out.slots.push_back(AbsSlot::cell(x.type, f(x.val, y.val),
                                        x.maybe_invalid || y.maybe_invalid));
    }
    out.tail_unknown = a.tail_unknown || b.tail_unknown ||
                       i < a.slots.size() || i < b.slots.size();
    return out;
  }

  static AbsMem combine(const AbsMem& a, const AbsMem& b, ValComb f) {
    if (a.bottom_) return b;
    if (b.bottom_) return a;
    CPM_CHECK(a.limits_ == b.limits_,
              "combining memories from different configurations");
    AbsMem out;
    out.bottom_ = false;
    out.limits_ = a.limits_;

    for (const auto& [key, ca] : a.data_) {
      auto it = b.data_.find(key);
      if (it == b.data_.end()) {
        out.data_.emplace(key,
                          AbsDataCell{ca.val, true, ca.maybe_invalid});
      } else {
        const AbsDataCell& cb = it->second;
        out.data_.emplace(key, AbsDataCell{f(ca.val, cb.val),
                                           ca.maybe_absent || cb.maybe_absent,
                                           ca.maybe_invalid ||
                                               cb.maybe_invalid});
      }
    }
    for (const auto& [key, cb] : b.data_)
      if (!a.data_.contains(key))
        out.data_.emplace(key, AbsDataCell{cb.val, true, cb.maybe_invalid});

    // Frames align from the top: the innermost activations correspond, and
    // anything deeper that disagrees in count collapses into the summary.
    std::size_t ka = a.frames_.size(), kb = b.frames_.size();
    std::size_t k = std::min(ka, kb);
    out.below_unknown_ = a.below_unknown_ || b.below_unknown_ || ka != kb;
    out.frames_.reserve(k);
    for (std::size_t j = 0; j < k; ++j)
      out.frames_.push_back(
          combine_frame(a.frames_[ka - k + j], b.frames_[kb - k + j], f));

    if (a.next_loc_ && b.next_loc_ && *a.next_loc_ == *b.next_loc_)
      out.next_loc_ = a.next_loc_;
    if (a.data_cells_ && b.data_cells_ && *a.data_cells_ == *b.data_cells_)
      out.data_cells_ = a.data_cells_;
    return out;
  }

  static bool slot_leq(const AbsSlot& x, const AbsSlot& y) {
    if (x.kind != y.kind) return false;
    if (x.kind == AbsSlot::Kind::Marker) return true;
    if (y.maybe_invalid) return true;  // y places no constraint on the cell
    if (x.maybe_invalid) return false;
    return x.type == y.type && leq(x.val, y.val);
  }

  static bool frame_leq(const AbsFrame& x, const AbsFrame& y) {
    if (y.tail_unknown) {
      if (x.slots.size() < y.slots.size()) return false;
    } else {
      if (x.tail_unknown || x.slots.size() != y.slots.size()) return false;
    }
    for (std::size_t i = 0; i < y.slots.size(); ++i)
      if (!slot_leq(x.slots[i], y.slots[i])) return false;
    return true;
  }

  static bool mem_leq(const AbsMem& a, const AbsMem& b) {
    if (a.bottom_) return true;
    if (b.bottom_) return false;
    CPM_CHECK(a.limits_ == b.limits_,
              "comparing memories from different configurations");

    // Every key a knows about must be covered; keys a lacks must be allowed
    // to be absent on b's side, and b may not know fewer keys than a (its
    // concretization forbids unlisted ones).
    for (const auto& [key, ca] : a.data_) {
      auto it = b.data_.find(key);
      if (it == b.data_.end()) return false;
      const AbsDataCell& cb = it->second;
      if (ca.maybe_absent && !cb.maybe_absent) return false;
      if (cb.maybe_invalid) continue;
      if (ca.maybe_invalid || !leq(ca.val, cb.val)) return false;
    }
    for (const auto& [key, cb] : b.data_)
      if (!a.data_.contains(key) && !cb.maybe_absent) return false;

    std::size_t ka = a.frames_.size(), kb = b.frames_.size();
    if (b.below_unknown_) {
      if (kb > ka) return false;  // b's deeper kept frames are unverifiable
    } else {
      if (a.below_unknown_ || ka != kb) return false;
    }
    for (std::size_t j = 0; j < kb; ++j)
      if (!frame_leq(a.frames_[ka - kb + j], b.frames_[j])) return false;

    if (b.next_loc_ && a.next_loc_ != b.next_loc_) return false;
    if (b.data_cells_ && a.data_cells_ != b.data_cells_) return false;
    return true;
  }
};

bool leq(const AbsMem& a, const AbsMem& b) { return AbsMemOps::mem_leq(a, b); }

AbsMem join(const AbsMem& a, const AbsMem& b) {
  return AbsMemOps::combine(
      a, b, [](const AbsSVal& x, const AbsSVal& y) { return join(x, y); });
}

AbsMem widen(const AbsMem& prev, const AbsMem& next) {
  return AbsMemOps::combine(
      prev, next,
      [](const AbsSVal& x, const AbsSVal& y) { return widen(x, y); });
}

std::string AbsMem::render() const {
  if (bottom_) return "⊥";
  std::ostringstream out;
  out << "{";
  bool first = true;
  for (const auto& [key, cell] : data_) {
    if (!first) out << ", ";
    first = false;
    out << "(" << key.first << ":" << to_string(key.second) << ")="
        << cell.val.render();
    if (cell.maybe_absent) out << "?";
    if (cell.maybe_invalid) out << "!";
  }
  out << "} [";
  first = true;
  if (below_unknown_) {
    out << "… ‡";
    first = false;
  }
  for (std::size_t j = 0; j < frames_.size(); ++j) {
    if (j > 0) {
      out << " ‡";
      first = false;
    }
    for (const AbsSlot& s : frames_[j].slots) {
      if (!first) out << " ";
      first = false;
      if (s.kind == AbsSlot::Kind::Marker) {
        out << "†";
      } else {
        out << s.val.render();
        if (s.maybe_invalid) out << "!";
      }
    }
    if (frames_[j].tail_unknown) {
      if (!first) out << " ";
      first = false;
      out << "…";
    }
  }
  out << "]";
  return out.str();
}

// ---------------------------------------------------------------------------
// Paired states
// ---------------------------------------------------------------------------

AbsValState AbsValState::of(AbsSVal v, AbsMem m) {
  if (v.is_bottom() || m.is_bottom()) return {};
  return {std::move(v), std::move(m)};
}

std::string AbsValState::render() const {
  if (is_bottom()) return "⊥";
  return "(" + val.render() + ", " + mem.render() + ")";
}

bool leq(const AbsValState& a, const AbsValState& b) {
  if (a.is_bottom()) return true;
  if (b.is_bottom()) return false;
  return leq(a.val, b.val) && leq(a.mem, b.mem);
}

AbsValState join(const AbsValState& a, const AbsValState& b) {
  if (a.is_bottom()) return b;
  if (b.is_bottom()) return a;
  return {join(a.val, b.val), join(a.mem, b.mem)};
}

AbsValState widen(const AbsValState& prev, const AbsValState& next) {
  if (prev.is_bottom()) return next;
  if (next.is_bottom()) return prev;
  return {widen(prev.val, next.val), widen(prev.mem, next.mem)};
}

AbsExcState AbsExcState::of(AbsMem m, AbsExcept x) {
  if (m.is_bottom() || x.is_bottom()) return {};
  return {std::move(m), std::move(x)};
}

std::string AbsExcState::render() const {
  if (is_bottom()) return "none";
  return "(" + mem.render() + ", " + ex.render() + ")";
}

bool leq(const AbsExcState& a, const AbsExcState& b) {
  if (a.is_bottom()) return true;
  if (b.is_bottom()) return false;
  return leq(a.mem, b.mem) && leq(a.ex, b.ex);
}

AbsExcState join(const AbsExcState& a, const AbsExcState& b) {
  if (a.is_bottom()) return b;
  if (b.is_bottom()) return a;
  return {join(a.mem, b.mem), join(a.ex, b.ex)};
}

AbsExcState widen(const AbsExcState& prev, const AbsExcState& next) {
  if (prev.is_bottom()) return next;
  if (next.is_bottom()) return prev;
  return {widen(prev.mem, next.mem), widen(prev.ex, next.ex)};
}

// ---------------------------------------------------------------------------
// Reads & writes
// ---------------------------------------------------------------------------

AbsReadOut a_read(const AbsMem& m, const Addr& a, SType t) {
  AbsReadOut out;
  if (m.is_bottom()) return out;

  if (const Loc* l = std::get_if<Loc>(&a)) {
    auto it = m.data().find({*l, t});
    if (it == m.data().end()) {
      out.err = rts_err(m, rts::memerror);
      return out;
    }
    const AbsDataCell& c = it->second;
    out.ok = AbsValState::of(c.val, m);
    if (c.maybe_absent || c.maybe_invalid) out.err = rts_err(m, rts::memerror);
    return out;
  }

  const Ind& ind = std::get<Ind>(a);
  const AbsFrame& tf = m.frames().back();
  if (ind.i < tf.slots.size()) {
    const AbsSlot& s = tf.slots[ind.i];
    if (s.kind == AbsSlot::Kind::Marker) {
      out.err = rts_err(m, rts::memerror);
      return out;
    }
    if (s.maybe_invalid) {
      // The backing binding is untrusted: any value of any type, or a miss.
      out.ok = AbsValState::of(s.val, m);
      out.err = rts_err(m, rts::memerror);
      return out;
    }
    if (s.type != t) {
      out.err = rts_err(m, rts::memerror);
      return out;
    }
    out.ok = AbsValState::of(s.val, m);
    return out;
  }
  if (tf.tail_unknown) {
    // Somewhere in the summarized region: could be any cell or a marker.
    out.ok = AbsValState::of(AbsSVal::top(), m);
    out.err = rts_err(m, rts::memerror);
  } else {
    out.err = rts_err(m, rts::memerror);
  }
  return out;
}

AbsWriteOut a_write(const AbsMem& m, const Addr& a, SType t,
                    const AbsSVal& v) {
  AbsWriteOut out;
  if (m.is_bottom() || v.is_bottom()) return out;
  AbsSVal stored = v.restrict_to(t);
  // Values of the wrong type never reach a typed write in a checked
  // program; a mixed value (possible after an external call) is narrowed to
  // the written component, since only those members perform the write.
  CPM_CHECK(!stored.is_bottom(), "abstract write carries no value of the "
                                 "written type");

  if (const Loc* l = std::get_if<Loc>(&a)) {
    auto it = m.data().find({*l, t});
    if (it == m.data().end()) {
      out.err = rts_err(m, rts::memerror);
      return out;
    }
    const AbsDataCell& c = it->second;
    AbsMem ok = m;
    AbsMemOps::data_of(ok)[{*l, t}] = AbsDataCell{stored, false, false};
    out.ok = std::move(ok);
    if (c.maybe_absent || c.maybe_invalid) out.err = rts_err(m, rts::memerror);
    return out;
  }

  const Ind& ind = std::get<Ind>(a);
  const AbsFrame& tf = m.frames().back();
  if (ind.i < tf.slots.size()) {
    const AbsSlot& s = tf.slots[ind.i];
    if (s.kind == AbsSlot::Kind::Marker) {
      out.err = rts_err(m, rts::memerror);
      return out;
    }
    if (s.maybe_invalid) {
      // Strong update of the written component; the other component and the
      // trust bit keep covering whatever else the binding might be.
      AbsSVal nv = s.val;
      if (t == SType::Integer)
        nv.i = stored.i;
      else
        nv.b = stored.b;
      AbsMem ok = m;
      AbsMemOps::top_frame(ok).slots[ind.i] = AbsSlot::cell(t, nv, true);
      out.ok = std::move(ok);
      out.err = rts_err(m, rts::memerror);
      return out;
    }
    if (s.type != t) {
      out.err = rts_err(m, rts::memerror);
      return out;
    }
    AbsMem ok = m;
    AbsMemOps::top_frame(ok).slots[ind.i] = AbsSlot::cell(t, stored);
    out.ok = std::move(ok);
    return out;
  }
  if (tf.tail_unknown) {
    // A write into the summarized region leaves it just as unknown.
    out.ok = m;
    out.err = rts_err(m, rts::memerror);
  } else {
    out.err = rts_err(m, rts::memerror);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Allocation
// ---------------------------------------------------------------------------

AbsAllocDataOut a_new_data(const AbsValState& vs) {
  AbsAllocDataOut out;
  if (vs.is_bottom()) return out;
  const AbsMem& m = vs.mem;
  CPM_CHECK(m.data_cells().has_value() && m.next_loc().has_value(),
            "data allocation with summarized allocation counters");
  if (*m.data_cells() + 1 > m.limits().data_capacity) {
    out.err = rts_err(m, rts::datovflw);
    return out;
  }
  Loc l = *m.next_loc();
  bool mixed = !vs.val.i.is_bottom() && !vs.val.b.is_bottom();
  AbsMem ok = m;
  auto& data = AbsMemOps::data_of(ok);
  if (!vs.val.i.is_bottom())
    data[{l, SType::Integer}] =
        AbsDataCell{AbsSVal::of_int(vs.val.i), mixed, false};
  if (!vs.val.b.is_bottom())
    data[{l, SType::Boolean}] =
        AbsDataCell{AbsSVal::of_bool(vs.val.b), mixed, false};
  AbsMemOps::set_counters(ok, l + 1, *m.data_cells() + 1);
  out.ok = std::move(ok);
  out.loc = l;
  return out;
}

AbsAllocStackOut a_new_stack(const AbsValState& vs) {
  AbsAllocStackOut out;
  if (vs.is_bottom()) return out;
  const AbsMem& m = vs.mem;

  std::optional<std::uint64_t> word_len = 0;
  if (m.below_unknown()) word_len.reset();
  for (std::size_t j = 0; word_len && j < m.frames().size(); ++j) {
    if (m.frames()[j].tail_unknown) {
      word_len.reset();
      break;
    }
    *word_len += m.frames()[j].slots.size() + (j > 0 ? 1 : 0);
  }

  bool can_fit = !word_len || *word_len + 1 <= m.limits().stack_capacity;
  bool can_overflow = !word_len || *word_len + 1 > m.limits().stack_capacity;
  if (can_overflow) out.err = rts_err(m, rts::stkovflw);
  if (!can_fit) return out;

  AbsMem ok = m;
  AbsFrame& tf = AbsMemOps::top_frame(ok);
  out.ind = Ind{static_cast<std::uint32_t>(tf.slots.size())};
  bool mixed = !vs.val.i.is_bottom() && !vs.val.b.is_bottom();
  if (!tf.tail_unknown) {
    if (mixed) {
      tf.slots.push_back(AbsSlot::cell(SType::Integer, vs.val, true));
    } else {
      SType t =
          vs.val.i.is_bottom() ? SType::Boolean : SType::Integer;
      tf.slots.push_back(AbsSlot::cell(t, vs.val));
    }
  }
  // else: the cell lands somewhere in the summarized suffix, which already
  // covers arbitrary content; the returned position keeps every later access
  // inside that suffix.
  if (auto nl = m.next_loc()) AbsMemOps::set_next_loc(ok, *nl + 1);
  out.ok = std::move(ok);
  return out;
}

// ---------------------------------------------------------------------------
// Frame protocol
// ---------------------------------------------------------------------------

AbsMem a_mark_stack(AbsMem m) {
  if (m.is_bottom()) return m;
  AbsFrame& tf = AbsMemOps::top_frame(m);
  if (!tf.tail_unknown) tf.slots.push_back(AbsSlot::marker());
  // else: the marker joins the unknown suffix.
  return m;
}

AbsMem a_unmark_stack(AbsMem m) {
  if (m.is_bottom()) return m;
  AbsFrame& tf = AbsMemOps::top_frame(m);
  std::size_t p = last_marker(tf);
  if (!tf.tail_unknown) {
    CPM_CHECK(p != std::string::npos,
              "unbalanced frame protocol: nothing to unmark");
    tf.slots.resize(p);
  } else if (p != std::string::npos) {
    // The popped marker is either the known one or a later one in the
    // summarized suffix; only the prefix below the known marker survives in
    // every case.
    tf.slots.resize(p);
  }
  // else: the marker sits in the unknown suffix; the known prefix survives.
  return m;
}

AbsMem a_link_stack(AbsMem m) {
  if (m.is_bottom()) return m;
  AbsFrame tf = std::move(AbsMemOps::frames_of(m).back());
  AbsMemOps::frames_of(m).pop_back();
  std::size_t p = last_marker(tf);

  AbsFrame caller, callee;
  if (!tf.tail_unknown) {
    CPM_CHECK(p != std::string::npos,
              "unbalanced frame protocol: nothing to link");
    caller.slots.assign(tf.slots.begin(),
                        tf.slots.begin() + static_cast<std::ptrdiff_t>(p));
    callee.slots.assign(tf.slots.begin() + static_cast<std::ptrdiff_t>(p) + 1,
                        tf.slots.end());
  } else {
    // The flipped marker may be the known one or may sit inside the unknown
    // suffix, so both resulting frames keep only what holds either way.
    if (p != std::string::npos)
      caller.slots.assign(tf.slots.begin(),
                          tf.slots.begin() + static_cast<std::ptrdiff_t>(p));
    else
      caller.slots = std::move(tf.slots);
    caller.tail_unknown = true;
    callee.tail_unknown = true;
  }
  AbsMemOps::frames_of(m).push_back(std::move(caller));
  AbsMemOps::frames_of(m).push_back(std::move(callee));
  return m;
}

AbsMem a_unlink_stack(AbsMem m) {
  if (m.is_bottom()) return m;
  auto& frames = AbsMemOps::frames_of(m);
  if (frames.size() >= 2) {
    AbsFrame top = std::move(frames.back());
    frames.pop_back();
    AbsFrame& below = frames.back();
    if (!below.tail_unknown) {
      below.slots.push_back(AbsSlot::marker());
      below.slots.insert(below.slots.end(),
                         std::make_move_iterator(top.slots.begin()),
                         std::make_move_iterator(top.slots.end()));
      below.tail_unknown = top.tail_unknown;
    }
    // else: the reopened frame continues into its unknown suffix, which
    // swallows the marker and the old top frame.
    return m;
  }
  // The link sits below every kept frame; after the flip the top frame
  // starts somewhere in the summarized region.
  CPM_CHECK(m.below_unknown(), "unbalanced frame protocol: nothing to unlink");
  frames.clear();
  frames.push_back(AbsFrame{{}, true});
  return m;
}

AbsExcState cleanup_data(AbsExcState e) {
  if (e.is_bottom()) return e;
  e.mem = AbsMem::initial(e.mem.limits());
  return e;
}

AbsExcState unmark_stack(AbsExcState e) {
  e.mem = a_unmark_stack(std::move(e.mem));
  return e;
}

AbsExcState unlink_stack(AbsExcState e) {
  e.mem = a_unlink_stack(std::move(e.mem));
  return e;
}

AbsMem a_havoc(AbsMem m) {
  if (m.is_bottom()) return m;
  for (auto& [key, cell] : AbsMemOps::data_of(m))
    cell = AbsDataCell{AbsSVal::top(), true, true};
  for (AbsFrame& f : AbsMemOps::frames_of(m))
    for (AbsSlot& s : f.slots)
      if (s.kind == AbsSlot::Kind::Cell)
        s = AbsSlot::cell(s.type, AbsSVal::top(), true);
  return m;
}

// ---------------------------------------------------------------------------
// Guard refinement.  The filter walks the guard's Boolean skeleton and, for
// the comparison and variable leaves it understands, narrows the cells the
// guard constrains.  Anything else degrades to the identity, which is always
// a sound refinement.  Cells are narrowed only when their location, shape and
// type are precisely known.
// ---------------------------------------------------------------------------

namespace {

// A precisely-known cell of the expected type, or null.
struct CellRef {
  bool is_data = false;
  std::pair<Loc, SType> key;  // data cell
  std::size_t slot = 0;       // stack cell
};

std::optional<CellRef> locate_cell(const AbsMem& m, const Env& rho,
                                   const Ident& id, SType want) {
  const EnvVal* ev = rho.lookup(id);
  if (!ev) return std::nullopt;
  const Cell* cell = std::get_if<Cell>(ev);
  if (!cell || cell->type != want) return std::nullopt;
  if (const Loc* l = std::get_if<Loc>(&cell->addr)) {
    auto it = m.data().find({*l, want});
    if (it == m.data().end()) return std::nullopt;
    if (it->second.maybe_absent || it->second.maybe_invalid)
      return std::nullopt;
    CellRef r;
    r.is_data = true;
    r.key = {*l, want};
    return r;
  }
  const Ind& ind = std::get<Ind>(cell->addr);
  const AbsFrame& tf = m.frames().back();
  if (ind.i >= tf.slots.size()) return std::nullopt;
  const AbsSlot& s = tf.slots[ind.i];
  if (s.kind != AbsSlot::Kind::Cell || s.maybe_invalid || s.type != want)
    return std::nullopt;
  CellRef r;
  r.key = {0, want};
  r.slot = ind.i;
  return r;
}

const AbsSVal& cell_value(const AbsMem& m, const CellRef& r) {
  if (r.is_data) return m.data().at(r.key).val;
  return m.frames().back().slots[r.slot].val;
}

// Replaces the cell's value; a bottom value means no covered memory
// satisfies the guard, collapsing the whole state.
AbsMem with_cell(AbsMem m, const CellRef& r, AbsSVal v) {
  if (v.is_bottom()) return AbsMem::bottom();
  if (r.is_data) {
    AbsMemOps::data_of(m)[r.key].val = std::move(v);
  } else {
    AbsSlot& s = AbsMemOps::top_frame(m).slots[r.slot];
    s = AbsSlot::cell(s.type, std::move(v));
  }
  return m;
}

// An integer comparison operand: a constant, a negated constant, or an
// integer variable with a precisely-known cell.
struct IntOperand {
  AbsInt iv;
  std::optional<CellRef> cell;  // set for refinable variables
};

std::optional<IntOperand> int_operand(const AbsMem& m, const Env& rho,
                                      const Expr& e) {
  if (const auto* c = std::get_if<IntConst>(&e.node))
    return IntOperand{AbsInt::singleton(c->value), std::nullopt};
  if (const auto* n = std::get_if<Neg>(&e.node)) {
    if (const auto* c = std::get_if<IntConst>(&n->arg->node))
      return IntOperand{AbsInt::singleton(-c->value), std::nullopt};
    return std::nullopt;
  }
  if (const auto* v = std::get_if<VarRef>(&e.node)) {
    auto r = locate_cell(m, rho, v->id, SType::Integer);
    if (!r) return std::nullopt;
    return IntOperand{cell_value(m, *r).i, r};
  }
  return std::nullopt;
}

CmpOp negate(CmpOp op) {
  switch (op) {
    case CmpOp::Eq: return CmpOp::Ne;
    case CmpOp::Ne: return CmpOp::Eq;
    case CmpOp::Lt: return CmpOp::Ge;
    case CmpOp::Le: return CmpOp::Gt;
    case CmpOp::Ge: return CmpOp::Lt;
    case CmpOp::Gt: return CmpOp::Le;
  }
  CPM_BUG("unhandled comparison operator");
}

// x ≠ b: when b pins one endpoint of x exactly, the endpoint moves inward.
AbsInt trim_away(const AbsInt& a, const AbsInt& b) {
  if (a.is_bottom() || b.is_bottom()) return AbsInt::bottom();
  std::optional<Int> c = b.as_singleton();
  if (!c) return a;
  if (auto s = a.as_singleton(); s && *s == *c) return AbsInt::bottom();
  if (a.lo().is_finite() && a.lo().value() == *c)
    return AbsInt::interval(Bound::finite(*c + 1), a.hi());
  if (a.hi().is_finite() && a.hi().value() == *c)
    return AbsInt::interval(a.lo(), Bound::finite(*c - 1));
  return a;
}

AbsMem refine_cmp(const Env& rho, AbsMem m, CmpOp op, const Expr& lhs,
                  const Expr& rhs) {
  auto a = int_operand(m, rho, lhs);
  auto b = int_operand(m, rho, rhs);
  if (!a || !b) return m;
  if (a->iv.is_bottom() || b->iv.is_bottom()) return m;

  AbsInt na = a->iv, nb = b->iv;
  switch (op) {
    case CmpOp::Eq:
      na = meet(a->iv, b->iv);
      nb = na;
      break;
    case CmpOp::Ne:
      na = trim_away(a->iv, b->iv);
      nb = trim_away(b->iv, a->iv);
      break;
    case CmpOp::Lt:
      if (b->iv.hi().is_finite())
        na = meet(a->iv, AbsInt::at_most(b->iv.hi().value() - 1));
      if (a->iv.lo().is_finite())
        nb = meet(b->iv, AbsInt::at_least(a->iv.lo().value() + 1));
      break;
    case CmpOp::Le:
      if (b->iv.hi().is_finite())
        na = meet(a->iv, AbsInt::at_most(b->iv.hi().value()));
      if (a->iv.lo().is_finite())
        nb = meet(b->iv, AbsInt::at_least(a->iv.lo().value()));
      break;
    case CmpOp::Gt:
      if (b->iv.lo().is_finite())
        na = meet(a->iv, AbsInt::at_least(b->iv.lo().value() + 1));
      if (a->iv.hi().is_finite())
        nb = meet(b->iv, AbsInt::at_most(a->iv.hi().value() - 1));
      break;
    case CmpOp::Ge:
      if (b->iv.lo().is_finite())
        na = meet(a->iv, AbsInt::at_least(b->iv.lo().value()));
      if (a->iv.hi().is_finite())
        nb = meet(b->iv, AbsInt::at_most(a->iv.hi().value()));
      break;
  }
  if (na.is_bottom() || nb.is_bottom()) return AbsMem::bottom();
  if (a->cell) m = with_cell(std::move(m), *a->cell, AbsSVal::of_int(na));
  if (m.is_bottom()) return m;
  if (b->cell) m = with_cell(std::move(m), *b->cell, AbsSVal::of_int(nb));
  return m;
}

}  // namespace

AbsMem filter_guard(const Env& rho, const AbsMem& m, const Expr& e,
                    bool want) {
  if (m.is_bottom()) return m;

  if (const auto* c = std::get_if<BoolConst>(&e.node))
    return c->value == want ? m : AbsMem::bottom();

  if (const auto* v = std::get_if<VarRef>(&e.node)) {
    auto r = locate_cell(m, rho, v->id, SType::Boolean);
    if (!r) return m;
    AbsBool nb = meet(cell_value(m, *r).b, AbsBool::of(want));
    return with_cell(m, *r, AbsSVal::of_bool(nb));
  }

  if (const auto* n = std::get_if<Not>(&e.node))
    return filter_guard(rho, m, *n->arg, !want);

  if (const auto* a = std::get_if<And>(&e.node)) {
    if (want)
      return filter_guard(rho, filter_guard(rho, m, *a->lhs, true), *a->rhs,
                          true);
    return join(filter_guard(rho, m, *a->lhs, false),
                filter_guard(rho, m, *a->rhs, false));
  }

  if (const auto* o = std::get_if<Or>(&e.node)) {
    if (!want)
      return filter_guard(rho, filter_guard(rho, m, *o->lhs, false), *o->rhs,
                          false);
    return join(filter_guard(rho, m, *o->lhs, true),
                filter_guard(rho, m, *o->rhs, true));
  }

  if (const auto* c = std::get_if<Cmp>(&e.node)) {
    CmpOp op = want ? c->op : negate(c->op);
    return refine_cmp(rho, m, op, *c->lhs, *c->rhs);
  }

  return m;
}

// ---------------------------------------------------------------------------
// Exception dispatch
// ---------------------------------------------------------------------------

namespace {

// The name-set with one name removed; the unbounded set stays unbounded.
AbsRts rts_minus(const AbsRts& r, std::string_view name) {
  if (r.is_top()) return r;
  AbsRts out = AbsRts::bottom();
  for (const std::string& n : r.names())
    if (n != name) out = join(out, AbsRts::singleton(n));
  return out;
}

}  // namespace

AbsExcSplit filter_exception(const ExceptDecl& p, const AbsExcState& e) {
  AbsExcSplit out;
  if (e.is_bottom()) return out;

  switch (p.kind) {
    case ExceptDecl::Kind::Any:
      out.matched = e;
      return out;
    case ExceptDecl::Kind::Rts: {
      AbsRts hit = meet(e.ex.rts, AbsRts::singleton(p.rts_name));
      AbsRts miss = rts_minus(e.ex.rts, p.rts_name);
      out.matched =
          AbsExcState::of(e.mem, AbsExcept{hit, AbsSVal::bottom()});
      out.unmatched = AbsExcState::of(e.mem, AbsExcept{miss, e.ex.val});
      return out;
    }
    case ExceptDecl::Kind::Type:
    case ExceptDecl::Kind::Binder: {
      AbsSVal pay = e.ex.val.restrict_to(p.type);
      AbsSVal rest = e.ex.val.restrict_to(other_type(p.type));
      out.matched =
          AbsExcState::of(e.mem, AbsExcept{AbsRts::bottom(), pay});
      out.unmatched = AbsExcState::of(e.mem, AbsExcept{e.ex.rts, rest});
      return out;
    }
  }
  CPM_BUG("unhandled exception declaration kind");
}

AbsSVal sel_payload(SType t, const AbsExcState& e) {
  if (e.is_bottom()) return AbsSVal::bottom();
  return e.ex.val.restrict_to(t);
}

}  // namespace cpm
