// SPDX-License-Identifier: MIT

#include <cpm/generator.hpp>

#include <random>
#include <vector>

#include <cpm/parser.hpp>

namespace cpm {

namespace {

// Raw mt19937_64 draws reduced by modulo.  uniform_int_distribution is not
// specified bit-for-bit across standard libraries; the engine itself is, and
// replayability across toolchains matters more than perfect uniformity here.
class Gen {
 public:
  Gen(std::uint64_t seed, unsigned size)
      : rng_(seed * 0x9e3779b97f4a7c15ull + size), depth_(size) {}

  std::string run();

 private:
  struct Var {
    std::string name;
    SType type;
    bool frozen;  // loop counters: readable but never reassigned
  };
  struct Fn {
    std::string name;
    std::vector<SType> params;
    SType result;
  };

  std::mt19937_64 rng_;
  unsigned depth_;
  std::vector<Var> scope_;
  std::vector<Fn> fns_;  // callable so far, in declaration order
  int fresh_ = 0;
  std::string out_;
  int indent_ = 0;

  // ---- randomness ----
  unsigned pick(unsigned n) { return static_cast<unsigned>(rng_() % n); }
  bool chance(unsigned pct) { return pick(100) < pct; }
  int irange(int lo, int hi) { return lo + static_cast<int>(pick(hi - lo + 1)); }

  // ---- emission ----
  void line(const std::string& s) {
    out_.append(2 * static_cast<std::size_t>(indent_), ' ');
    out_ += s;
    out_ += '\n';
  }

  std::string fresh(const char* base) {
    return base + std::to_string(fresh_++);
  }

  const Var* random_var(SType t, bool for_assign) {
    std::vector<const Var*> hits;
    for (const Var& v : scope_)
      if (v.type == t && !(for_assign && v.frozen)) hits.push_back(&v);
    if (hits.empty()) return nullptr;
    return hits[pick(static_cast<unsigned>(hits.size()))];
  }

  // ---- expressions (fully parenthesized; precedence never an issue) ----

  std::string int_leaf() {
    if (const Var* v = random_var(SType::Integer, false); v && chance(55))
      return v->name;
    return std::to_string(irange(-9, 9));
  }

  std::string int_expr(unsigned d) {
    if (d == 0 || chance(30)) return int_leaf();
    switch (pick(8)) {
      case 0: return "(- " + int_expr(d - 1) + ")";
      case 1: case 2:
        return "(" + int_expr(d - 1) + " + " + int_expr(d - 1) + ")";
      case 3:
        return "(" + int_expr(d - 1) + " - " + int_expr(d - 1) + ")";
      case 4:
        return "(" + int_expr(d - 1) + " * " + int_expr(d - 1) + ")";
      case 5:
      case 6: {  // division and remainder, divisor sometimes spanning zero
        const char* op = pick(2) ? " / " : " % ";
        std::string divisor;
        switch (pick(4)) {
          case 0: divisor = std::to_string(irange(1, 6)); break;
          case 1: divisor = std::to_string(irange(-6, 1)); break;
          case 2: divisor = int_leaf(); break;
          default: divisor = int_expr(d - 1); break;
        }
        return "(" + int_expr(d - 1) + op + divisor + ")";
      }
      default: return int_leaf();
    }
  }

  std::string bool_leaf() {
    if (const Var* v = random_var(SType::Boolean, false); v && chance(50))
      return v->name;
    return pick(2) ? "true" : "false";
  }

  std::string bool_expr(unsigned d) {
    if (d == 0 || chance(25)) return bool_leaf();
    switch (pick(6)) {
      case 0: return "(not " + bool_expr(d - 1) + ")";
      case 1: return "(" + bool_expr(d - 1) + " and " + bool_expr(d - 1) + ")";
      case 2: return "(" + bool_expr(d - 1) + " or " + bool_expr(d - 1) + ")";
      default: {
        static constexpr const char* ops[] = {" = ", " != ", " < ",
                                              " <= ", " > ", " >= "};
        return "(" + int_expr(d - 1) + ops[pick(6)] + int_expr(d - 1) + ")";
      }
    }
  }

  std::string expr_of(SType t, unsigned d) {
    return t == SType::Integer ? int_expr(d) : bool_expr(d);
  }

  // ---- statements ----

  void assign_stmt() {
    if (const Var* v = random_var(SType::Boolean, true);
        v && pick(3) == 0) {
      line(v->name + " := " + bool_expr(2) + ";");
      return;
    }
    if (const Var* v = random_var(SType::Integer, true)) {
      line(v->name + " := " + int_expr(2) + ";");
      return;
    }
    line("nop;");
  }

  void call_stmt() {
    std::vector<const Fn*> callable;
    for (const Fn& f : fns_)
      if (random_var(f.result, true)) callable.push_back(&f);
    if (callable.empty()) {
      assign_stmt();
      return;
    }
    const Fn& f = *callable[pick(static_cast<unsigned>(callable.size()))];
    const Var* target = random_var(f.result, true);
    std::string call = target->name + " := " + f.name + "(";
    for (std::size_t j = 0; j < f.params.size(); ++j) {
      if (j) call += ", ";
      call += expr_of(f.params[j], 1);
    }
    line(call + ");");
  }

  void throw_stmt() {
    switch (pick(4)) {
      case 0: {
        static constexpr const char* names[] = {"divbyzero", "memerror",
                                                "stkovflw", "datovflw"};
        line(std::string("throw ") + names[pick(4)] + ";");
        return;
      }
      case 1: line("throw " + bool_expr(1) + ";"); return;
      default: line("throw " + int_expr(2) + ";"); return;
    }
  }

  void leaf_stmt() {
    switch (pick(10)) {
      case 0: line("nop;"); return;
      case 1: call_stmt(); return;
      case 2: throw_stmt(); return;
      default: assign_stmt(); return;
    }
  }

  // Emits one statement followed by ";".  The caller strips the final
  // semicolon of a sequence (see seq()).
  void stmt(unsigned d) {
    if (d == 0) {
      leaf_stmt();
      return;
    }
    switch (pick(12)) {
      case 0: {  // if
        line("if " + bool_expr(2) + " then (");
        ++indent_;
        seq(d - 1, 1 + pick(2));
        --indent_;
        line(") else (");
        ++indent_;
        seq(d - 1, 1 + pick(2));
        --indent_;
        line(");");
        return;
      }
      case 1: {  // counted loop; the counter is frozen inside the body
        std::string k = fresh("k");
        const int bound = irange(1, 5);
        line("{ lvar " + k + " : integer = 0;");
        ++indent_;
        scope_.push_back({k, SType::Integer, true});
        line("while (" + k + " < " + std::to_string(bound) + ") do (");
        ++indent_;
        // body statements keep their ';': it separates them from the
        // counter bump, which must stay last
        const unsigned body_n = 1 + pick(2);
        for (unsigned j = 0; j < body_n; ++j) stmt(d - 1);
        line(k + " := (" + k + " + 1)");
        --indent_;
        line(")");
        scope_.pop_back();
        --indent_;
        line("};");
        return;
      }
      case 2: {  // block with fresh locals
        const std::size_t mark = scope_.size();
        std::string head = "{ ";
        const unsigned n = 1 + pick(2);
        for (unsigned j = 0; j < n; ++j) {
          SType t = pick(3) ? SType::Integer : SType::Boolean;
          std::string x = fresh("x");
          if (j) head += "; ";
          head += "lvar " + x + " : " + std::string(to_string(t)) + " = " +
                  expr_of(t, 1);
          scope_.push_back({x, t, false});
        }
        line(head + ";");
        ++indent_;
        seq(d - 1, 1 + pick(3));
        --indent_;
        line("};");
        scope_.resize(mark);
        return;
      }
      case 3: {  // try/catch with 1-2 clauses
        line("try (");
        ++indent_;
        seq(d - 1, 1 + pick(2));
        --indent_;
        const unsigned clauses = 1 + pick(2);
        for (unsigned j = 0; j < clauses; ++j) {
          std::string intro = j == 0 ? ") catch " : "); ";
          const std::size_t mark = scope_.size();
          switch (pick(4)) {
            case 0: {
              static constexpr const char* names[] = {"divbyzero", "memerror",
                                                      "stkovflw", "any"};
              line(intro + "(" + names[pick(4)] + ") (");
              break;
            }
            case 1: {
              std::string v = fresh("v");
              SType t = pick(2) ? SType::Integer : SType::Boolean;
              line(intro + "(" + v + " : " + std::string(to_string(t)) +
                   ") (");
              scope_.push_back({v, t, false});
              break;
            }
            case 2:
              line(intro + "(" + std::string(to_string(pick(2)
                                                           ? SType::Integer
                                                           : SType::Boolean)) +
                   ") (");
              break;
            default:
              line(intro + "(any) (");
              break;
          }
          ++indent_;
          seq(d - 1, 1);
          --indent_;
          scope_.resize(mark);
        }
        line(");");
        return;
      }
      case 4: {  // try/finally
        line("try (");
        ++indent_;
        seq(d - 1, 1 + pick(2));
        --indent_;
        line(") finally (");
        ++indent_;
        seq(d - 1, 1);
        --indent_;
        line(");");
        return;
      }
      case 5:
        if (chance(6)) {  // rare unbounded loop: budget/termination coverage
          line("while " + bool_expr(2) + " do (");
          ++indent_;
          seq(d - 1, 1);
          --indent_;
          line(");");
          return;
        }
        stmt(d - 1);
        return;
      default:
        leaf_stmt();
        return;
    }
  }

  // n statements joined by ";"; strips the trailing semicolon so the text
  // can sit directly before ')', '}' or 'result'.
  void seq(unsigned d, unsigned n) {
    for (unsigned j = 0; j < n; ++j) stmt(d);
    // Each stmt emitted ended its last line with ";"; drop the final one.
    std::size_t last = out_.find_last_of(';');
    out_.erase(last, 1);
  }

  // ---- functions ----

  void function_body(SType result, unsigned body_depth) {
    // params already pushed by caller; add locals
    const std::size_t mark = scope_.size();
    std::string decls;
    const unsigned n = 1 + pick(2);
    for (unsigned j = 0; j < n; ++j) {
      SType t = pick(3) ? SType::Integer : SType::Boolean;
      std::string x = fresh("x");
      if (j) decls += "; ";
      decls += "lvar " + x + " : " + std::string(to_string(t)) + " = " +
               expr_of(t, 1);
      scope_.push_back({x, t, false});
    }
    line("let " + decls);
    line("in (");
    ++indent_;
    seq(body_depth, 1 + pick(2));
    --indent_;
    std::string res = expr_of(result, 2);
    line(")");
    line("result " + res);
    scope_.resize(mark);
  }

  void helper_function() {
    Fn f;
    f.name = fresh("h");
    const unsigned arity = pick(3);
    for (unsigned j = 0; j < arity; ++j)
      f.params.push_back(pick(3) ? SType::Integer : SType::Boolean);
    f.result = pick(4) ? SType::Integer : SType::Boolean;

    std::string head = "function " + f.name + "(";
    const std::size_t mark = scope_.size();
    for (unsigned j = 0; j < arity; ++j) {
      std::string a = fresh("a");
      if (j) head += ", ";
      head += a + " : " + std::string(to_string(f.params[j]));
      scope_.push_back({a, f.params[j], false});
    }
    line(head + ") =");
    ++indent_;
    function_body(f.result, depth_ > 2 ? depth_ - 2 : 1);
    --indent_;
    line(";");
    scope_.resize(mark);
    fns_.push_back(std::move(f));
  }

  // rec function whose self-call decreases its argument and is guarded, so
  // concrete recursion depth stays tiny.
  void rec_function() {
    Fn f;
    f.name = fresh("r");
    f.params = {SType::Integer};
    f.result = SType::Integer;

    std::string n = fresh("a");
    std::string acc = fresh("x");
    line("rec function " + f.name + "(" + n + " : integer) =");
    ++indent_;
    line("let lvar " + acc + " : integer = " + std::to_string(irange(0, 4)));
    line("in (");
    ++indent_;
    line("if (" + n + " < 1) then nop else (");
    ++indent_;
    scope_.push_back({acc, SType::Integer, false});
    scope_.push_back({n, SType::Integer, true});
    fns_.push_back(f);  // visible to itself
    line(acc + " := " + f.name + "((" + n + " - 1));");
    line(acc + " := (" + acc + " + " + int_expr(1) + ")");
    scope_.pop_back();
    scope_.pop_back();
    --indent_;
    line(")");
    --indent_;
    line(")");
    line("result " + acc);
    --indent_;
    line(";");
  }

  // A two-function rec group with crossed, decreasing calls.
  void rec_pair() {
    std::string fa = fresh("r");
    std::string fb = fresh("r");
    auto half = [&](const std::string& self, const std::string& other) {
      std::string n = fresh("a");
      std::string acc = fresh("x");
      line("function " + self + "(" + n + " : integer) =");
      ++indent_;
      line("let lvar " + acc + " : integer = " + std::to_string(irange(0, 3)));
      line("in (");
      ++indent_;
      line("if (" + n + " < 1) then nop else " + acc + " := " + other +
           "((" + n + " - 1))");
      --indent_;
      line(")");
      line("result (" + acc + " + " + std::to_string(irange(0, 3)) + ")");
      --indent_;
    };
    line("rec (");
    ++indent_;
    half(fa, fb);
    line(";");
    half(fb, fa);
    --indent_;
    line(");");
    fns_.push_back({fa, {SType::Integer}, SType::Integer});
    fns_.push_back({fb, {SType::Integer}, SType::Integer});
  }
};

std::string Gen::run() {
  // globals first: functions may read them
  const unsigned n_gvars = pick(3);
  for (unsigned j = 0; j < n_gvars; ++j) {
    SType t = pick(3) ? SType::Integer : SType::Boolean;
    std::string g = fresh("g");
    line("gvar " + g + " : " + std::string(to_string(t)) + " = " +
         expr_of(t, 1) + ";");
    scope_.push_back({g, t, false});
  }

  const unsigned n_helpers = pick(3);
  for (unsigned j = 0; j < n_helpers; ++j) helper_function();
  if (chance(40)) {
    if (chance(30))
      rec_pair();
    else
      rec_function();
  }

  line("function main() =");
  ++indent_;
  const std::size_t mark = scope_.size();
  std::string decls;
  const unsigned n = 1 + pick(3);
  for (unsigned j = 0; j < n; ++j) {
    SType t = pick(3) ? SType::Integer : SType::Boolean;
    std::string x = fresh("x");
    if (j) decls += "; ";
    decls += "lvar " + x + " : " + std::string(to_string(t)) + " = " +
             expr_of(t, 1);
    scope_.push_back({x, t, false});
  }
  line("let " + decls);
  line("in (");
  ++indent_;
  // a recursive function, when present, is always exercised with a small
  // argument so concrete call depth stays at most 2
  for (const Fn& f : fns_)
    if (f.name[0] == 'r' && chance(85)) {
      if (const Var* target = random_var(SType::Integer, true))
        line(target->name + " := " + f.name + "(" +
             std::to_string(irange(0, 2)) + ");");
      break;
    }
  seq(depth_, 2 + pick(2));
  --indent_;
  line(")");
  line("result " + int_expr(2));
  scope_.resize(mark);
  --indent_;
  return std::move(out_);
}

}  // namespace

std::string generate_source(std::uint64_t seed, unsigned size) {
  return Gen(seed, size).run();
}

Program generate_program(std::uint64_t seed, unsigned size) {
  std::string name =
      "gen(" + std::to_string(seed) + "," + std::to_string(size) + ")";
  return parse_program(generate_source(seed, size), std::move(name));
}

}  // namespace cpm
