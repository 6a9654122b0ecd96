// SPDX-License-Identifier: MIT
#include "cpm/memory.hpp"

#include <cstdio>
#include <sstream>

#include "cpm/bug.hpp"

namespace cpm {

SType type_of(const SVal& v) {
  return std::holds_alternative<Int>(v) ? SType::Integer : SType::Boolean;
}

std::string to_string(const SVal& v) {
  if (const auto* i = std::get_if<Int>(&v)) return i->str();
  return std::get<bool>(v) ? "true" : "false";
}

std::string to_string(const Except& x) {
  if (const auto* r = std::get_if<RtsExc>(&x)) return r->name;
  return to_string(std::get<SVal>(x));
}

std::size_t Mem::frame_begin() const {
  for (std::size_t i = word.size(); i > 0; --i)
    if (word[i - 1].kind == StackSym::Kind::Link) return i;
  return 0;
}

std::optional<Loc> Mem::loc_at(Ind ind) const {
  std::size_t pos = frame_begin() + ind.i;
  if (pos >= word.size()) return std::nullopt;
  if (word[pos].kind != StackSym::Kind::Location) return std::nullopt;
  return word[pos].loc;
}

std::variant<SVal, RtsExc> Mem::read(const Addr& a, SType t) const {
  Loc l;
  if (const auto* direct = std::get_if<Loc>(&a)) {
    l = *direct;
  } else {
    auto resolved = loc_at(std::get<Ind>(a));
    if (!resolved) return RtsExc{std::string(rts::memerror)};
    l = *resolved;
  }
  auto it = data.find({l, t});
  if (it == data.end()) return RtsExc{std::string(rts::memerror)};
  CPM_CHECK(type_of(it->second) == t, "stored value type drifted from key");
  return it->second;
}

std::optional<RtsExc> Mem::write(const Addr& a, SType t, const SVal& v) {
  if (type_of(v) != t) return RtsExc{std::string(rts::memerror)};
  Loc l;
  if (const auto* direct = std::get_if<Loc>(&a)) {
    l = *direct;
  } else {
    auto resolved = loc_at(std::get<Ind>(a));
    if (!resolved) return RtsExc{std::string(rts::memerror)};
    l = *resolved;
  }
  auto it = data.find({l, t});
  if (it == data.end()) return RtsExc{std::string(rts::memerror)};
  it->second = v;
  return std::nullopt;
}

std::variant<Loc, RtsExc> Mem::new_data(const SVal& v) {
  if (data_cells + 1 > limits.data_capacity)
    return RtsExc{std::string(rts::datovflw)};
  Loc l = next_loc++;
  data.emplace(std::pair{l, type_of(v)}, v);
  ++data_cells;
  return l;
}

std::variant<Ind, RtsExc> Mem::new_stack(const SVal& v) {
  if (word.size() + 1 > limits.stack_capacity)
    return RtsExc{std::string(rts::stkovflw)};
  Ind ind{static_cast<std::uint32_t>(frame_size())};
  Loc l = next_loc++;
  data.emplace(std::pair{l, type_of(v)}, v);
  word.push_back(StackSym::location(l));
  return ind;
}

void Mem::mark_stack() { word.push_back(StackSym::mark()); }

void Mem::unmark_stack() {
  std::size_t i = word.size();
  while (i > 0 && word[i - 1].kind == StackSym::Kind::Location) {
    Loc l = word[i - 1].loc;
    // A location carries exactly one of the two typed cells.
    if (!data.erase({l, SType::Integer})) {
      bool erased = data.erase({l, SType::Boolean}) != 0;
      CPM_CHECK(erased, "stack location without a data cell");
    }
    --i;
  }
  CPM_CHECK(i > 0 && word[i - 1].kind == StackSym::Kind::Mark,
            "unmark without a matching mark");
  word.resize(i - 1);
}

void Mem::link_stack() {
  std::size_t i = word.size();
  while (i > 0 && word[i - 1].kind == StackSym::Kind::Location) --i;
  CPM_CHECK(i > 0 && word[i - 1].kind == StackSym::Kind::Mark,
            "link without a mark on top");
  word[i - 1].kind = StackSym::Kind::Link;
}

void Mem::unlink_stack() {
  std::size_t i = word.size();
  while (i > 0 && word[i - 1].kind == StackSym::Kind::Location) --i;
  CPM_CHECK(i > 0 && word[i - 1].kind == StackSym::Kind::Link,
            "unlink without a link on top");
  word[i - 1].kind = StackSym::Kind::Mark;
}

std::string Mem::render() const {
  std::ostringstream out;
  out << "{";
  bool first = true;
  for (const auto& [key, val] : data) {
    if (!first) out << ", ";
    first = false;
    out << "(" << key.first << ":" << to_string(key.second) << ")="
        << to_string(val);
  }
  out << "} [";
  first = true;
  for (const auto& sym : word) {
    if (!first) out << " ";
    first = false;
    switch (sym.kind) {
      case StackSym::Kind::Location: out << sym.loc; break;
      case StackSym::Kind::Mark: out << "†"; break;
      case StackSym::Kind::Link: out << "‡"; break;
    }
  }
  out << "]";
  return out.str();
}

std::string Mem::digest() const {
  // FNV-1a over the rendering; stability, not cryptography, is the point.
  std::string s = render();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExceptState cleanup_data(ExceptState e) {
  e.mem = Mem::initial(e.mem.limits);
  return e;
}

ExceptState unmark_stack(ExceptState e) {
  e.mem.unmark_stack();
  return e;
}

ExceptState unlink_stack(ExceptState e) {
  e.mem.unlink_stack();
  return e;
}

}  // namespace cpm
