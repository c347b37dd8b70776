#include <type_traits>

#include "fex/lang.hpp"

namespace fex::lang {

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

void print(const Expr& e, std::string& out);

// Operands of binary operators and `wait` must be atoms or parenthesised.
void print_operand(const Expr& e, std::string& out) {
  bool atomic = e.as<IntLit>() || e.as<BoolLit>() || e.as<Var>() || e.as<Call>() || e.as<Invoke>();
  if (atomic) {
    print(e, out);
    return;
  }
  out += '(';
  print(e, out);
  out += ')';
}

void print_args(const std::string& fname, const std::vector<ExprPtr>& args, std::string& out) {
  out += fname;
  out += '(';
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    print(*args[i], out);
  }
  out += ')';
}

void print(const Expr& e, std::string& out) {
  std::visit(overloaded{
                 [&](const IntLit& n) {
                   if (n.value < 0) {
                     // Only generated ASTs carry negative literals; they print as a subtraction.
                     out += "(0 - " + std::to_string(n.value).substr(1) + ")";
                   } else {
                     out += std::to_string(n.value);
                   }
                 },
                 [&](const BoolLit& b) { out += b.value ? "true" : "false"; },
                 [&](const Var& v) { out += v.name; },
                 [&](const Binop& b) {
                   print_operand(*b.lhs, out);
                   out += ' ';
                   out += binop_symbol(b.op);
                   out += ' ';
                   print_operand(*b.rhs, out);
                 },
                 [&](const If& i) {
                   out += "if ";
                   print(*i.cond, out);
                   out += " { ";
                   print(*i.then_branch, out);
                   out += " } else { ";
                   print(*i.else_branch, out);
                   out += " }";
                 },
                 [&](const Let& l) {
                   out += "let " + l.name + " = ";
                   print(*l.bound, out);
                   out += "; ";
                   print(*l.rest, out);
                 },
                 [&](const Call& c) { print_args(c.fname, c.args, out); },
                 [&](const Invoke& c) {
                   out += "invoke ";
                   print_args(c.fname, c.args, out);
                 },
                 [&](const Wait& w) {
                   out += "wait ";
                   print_operand(*w.operand, out);
                 },
             },
             e.node);
}

bool same_list(const std::vector<ExprPtr>& a, const std::vector<ExprPtr>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_structure(*a[i], *b[i])) return false;
  }
  return true;
}

}  // namespace

std::string to_source(const Expr& expr) {
  std::string out;
  print(expr, out);
  return out;
}

std::string to_source(const Program& program) {
  std::string out;
  for (const auto& f : program.functions) {
    out += "fn " + f.name + "(";
    for (std::size_t i = 0; i < f.params.size(); ++i) {
      if (i) out += ", ";
      out += f.params[i];
    }
    out += ") { ";
    print(*f.body, out);
    out += " }\n";
  }
  return out;
}

bool same_structure(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, IntLit> || std::is_same_v<T, BoolLit>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, Var>) {
          return x.name == y.name;
        } else if constexpr (std::is_same_v<T, Binop>) {
          return x.op == y.op && same_structure(*x.lhs, *y.lhs) && same_structure(*x.rhs, *y.rhs);
        } else if constexpr (std::is_same_v<T, If>) {
          return same_structure(*x.cond, *y.cond) && same_structure(*x.then_branch, *y.then_branch) &&
                 same_structure(*x.else_branch, *y.else_branch);
        } else if constexpr (std::is_same_v<T, Let>) {
          return x.name == y.name && same_structure(*x.bound, *y.bound) && same_structure(*x.rest, *y.rest);
        } else if constexpr (std::is_same_v<T, Call> || std::is_same_v<T, Invoke>) {
          return x.fname == y.fname && same_list(x.args, y.args);
        } else {
          return same_structure(*x.operand, *y.operand);
        }
      },
      a.node);
}

bool same_structure(const Program& a, const Program& b) {
  if (a.functions.size() != b.functions.size()) return false;
  for (std::size_t i = 0; i < a.functions.size(); ++i) {
    const auto& f = a.functions[i];
    const auto& g = b.functions[i];
    if (f.name != g.name || f.params != g.params || !same_structure(*f.body, *g.body)) return false;
  }
  return true;
}

}  // namespace fex::lang
