#include <optional>
#include <cctype>
#include <limits>

#include "fex/lang.hpp"

namespace fex::lang {

namespace {

enum class Tok {
  Ident,
  Int,
  KwFn,
  KwLet,
  KwIf,
  KwElse,
  KwInvoke,
  KwWait,
  KwTrue,
  KwFalse,
  LParen,
  RParen,
  LBrace,
  RBrace,
  Comma,
  Semi,
  Assign,
  Plus,
  Minus,
  Star,
  Slash,
  Percent,
  Lt,
  Le,
  EqEq,
  Ne,
  Gt,
  Ge,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  SourcePos pos;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End:
      return "end of input";
    case Tok::Ident:
      return "identifier '" + t.text + "'";
    case Tok::Int:
      return "integer '" + t.text + "'";
    default:
      return "'" + t.text + "'";
  }
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_trivia();
      SourcePos pos{line_, col_};
      if (at_end()) {
        out.push_back({Tok::End, "", pos});
        return out;
      }
      char c = peek();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::string word;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
          word.push_back(advance());
        }
        out.push_back({keyword_or_ident(word), word, pos});
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        std::string digits;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) digits.push_back(advance());
        out.push_back({Tok::Int, digits, pos});
      } else {
        out.push_back(punct(pos));
      }
    }
  }

 private:
  bool at_end() const { return i_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const { return i_ + ahead < src_.size() ? src_[i_ + ahead] : '\0'; }

  char advance() {
    char c = src_[i_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_trivia() {
    while (!at_end()) {
      char c = peek();
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && peek(1) == '/') {
        while (!at_end() && peek() != '\n') advance();
      } else {
        return;
      }
    }
  }

  static Tok keyword_or_ident(const std::string& w) {
    if (w == "fn") return Tok::KwFn;
    if (w == "let") return Tok::KwLet;
    if (w == "if") return Tok::KwIf;
    if (w == "else") return Tok::KwElse;
    if (w == "invoke") return Tok::KwInvoke;
    if (w == "wait") return Tok::KwWait;
    if (w == "true") return Tok::KwTrue;
    if (w == "false") return Tok::KwFalse;
    return Tok::Ident;
  }

  Token punct(SourcePos pos) {
    char c = advance();
    auto two = [&](char next, Tok yes, std::string yes_text, Tok no) -> Token {
      if (peek() == next) {
        advance();
        return {yes, std::move(yes_text), pos};
      }
      return {no, std::string(1, c), pos};
    };
    switch (c) {
      case '(': return {Tok::LParen, "(", pos};
      case ')': return {Tok::RParen, ")", pos};
      case '{': return {Tok::LBrace, "{", pos};
      case '}': return {Tok::RBrace, "}", pos};
      case ',': return {Tok::Comma, ",", pos};
      case ';': return {Tok::Semi, ";", pos};
      case '+': return {Tok::Plus, "+", pos};
      case '-': return {Tok::Minus, "-", pos};
      case '*': return {Tok::Star, "*", pos};
      case '/': return {Tok::Slash, "/", pos};
      case '%': return {Tok::Percent, "%", pos};
      case '<': return two('=', Tok::Le, "<=", Tok::Lt);
      case '>': return two('=', Tok::Ge, ">=", Tok::Gt);
      case '=': return two('=', Tok::EqEq, "==", Tok::Assign);
      case '!':
        if (peek() == '=') {
          advance();
          return {Tok::Ne, "!=", pos};
        }
        break;
      default:
        break;
    }
    throw ParseError(pos, "token", "character '" + std::string(1, c) + "'");
  }

  std::string_view src_;
  std::size_t i_ = 0;
  std::uint32_t line_ = 1;
  std::uint32_t col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program program() {
    Program p;
    do {
      p.functions.push_back(fndef());
    } while (cur().kind != Tok::End);
    return p;
  }

 private:
  const Token& cur() const { return toks_[i_]; }
  bool at(Tok k) const { return cur().kind == k; }

  Token expect(Tok k, std::string_view what) {
    if (!at(k)) fail(what);
    return toks_[i_++];
  }

  [[noreturn]] void fail(std::string_view expected) const {
    throw ParseError(cur().pos, std::string(expected), describe(cur()));
  }

  FuncDef fndef() {
    FuncDef f;
    f.pos = expect(Tok::KwFn, "'fn'").pos;
    f.name = expect(Tok::Ident, "function name").text;
    expect(Tok::LParen, "'('");
    if (!at(Tok::RParen)) {
      f.params.push_back(expect(Tok::Ident, "parameter name").text);
      while (at(Tok::Comma)) {
        ++i_;
        f.params.push_back(expect(Tok::Ident, "parameter name").text);
      }
    }
    expect(Tok::RParen, "')' or ','");
    f.body = block();
    return f;
  }

  ExprPtr block() {
    expect(Tok::LBrace, "'{'");
    auto e = expr();
    expect(Tok::RBrace, "'}'");
    return e;
  }

  ExprPtr expr() {
    SourcePos pos = cur().pos;
    if (at(Tok::KwLet)) {
      ++i_;
      std::string name = expect(Tok::Ident, "variable name").text;
      expect(Tok::Assign, "'='");
      auto bound = expr();
      expect(Tok::Semi, "';'");
      auto rest = expr();
      return make_expr(Let{std::move(name), std::move(bound), std::move(rest)}, pos);
    }
    if (at(Tok::KwIf)) {
      ++i_;
      auto cond = expr();
      auto then_branch = block();
      expect(Tok::KwElse, "'else'");
      auto else_branch = block();
      return make_expr(If{std::move(cond), std::move(then_branch), std::move(else_branch)}, pos);
    }
    return cmp();
  }

  ExprPtr cmp() {
    auto lhs = add();
    std::optional<BinOp> op;
    switch (cur().kind) {
      case Tok::Lt: op = BinOp::Lt; break;
      case Tok::Le: op = BinOp::Le; break;
      case Tok::EqEq: op = BinOp::Eq; break;
      case Tok::Ne: op = BinOp::Ne; break;
      case Tok::Gt: op = BinOp::Gt; break;
      case Tok::Ge: op = BinOp::Ge; break;
      default: return lhs;
    }
    SourcePos pos = cur().pos;
    ++i_;
    auto rhs = add();
    return make_expr(Binop{*op, std::move(lhs), std::move(rhs)}, pos);
  }

  ExprPtr add() {
    auto lhs = mul();
    while (at(Tok::Plus) || at(Tok::Minus)) {
      SourcePos pos = cur().pos;
      BinOp op = at(Tok::Plus) ? BinOp::Add : BinOp::Sub;
      ++i_;
      auto rhs = mul();
      lhs = make_expr(Binop{op, std::move(lhs), std::move(rhs)}, pos);
    }
    return lhs;
  }

  ExprPtr mul() {
    auto lhs = unary();
    while (at(Tok::Star) || at(Tok::Slash) || at(Tok::Percent)) {
      SourcePos pos = cur().pos;
      BinOp op = at(Tok::Star) ? BinOp::Mul : at(Tok::Slash) ? BinOp::Div : BinOp::Mod;
      ++i_;
      auto rhs = unary();
      lhs = make_expr(Binop{op, std::move(lhs), std::move(rhs)}, pos);
    }
    return lhs;
  }

  // Negation is sugar for `0 - x`, so the AST keeps a single arithmetic form.
  ExprPtr unary() {
    SourcePos pos = cur().pos;
    if (at(Tok::Minus)) {
      ++i_;
      auto operand = unary();
      return make_expr(Binop{BinOp::Sub, make_expr(IntLit{0}, pos), std::move(operand)}, pos);
    }
    if (at(Tok::KwWait)) {
      ++i_;
      return make_expr(Wait{unary()}, pos);
    }
    return atom();
  }

  std::vector<ExprPtr> args() {
    std::vector<ExprPtr> out;
    expect(Tok::LParen, "'('");
    if (!at(Tok::RParen)) {
      out.push_back(expr());
      while (at(Tok::Comma)) {
        ++i_;
        out.push_back(expr());
      }
    }
    expect(Tok::RParen, "')' or ','");
    return out;
  }

  ExprPtr atom() {
    const Token& t = cur();
    SourcePos pos = t.pos;
    switch (t.kind) {
      case Tok::Int: {
        std::uint64_t v = 0;
        for (char c : t.text) {
          std::uint64_t digit = static_cast<std::uint64_t>(c - '0');
          if (v > (static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()) - digit) / 10) {
            throw ParseError(pos, "integer literal within 64-bit signed range", describe(t));
          }
          v = v * 10 + digit;
        }
        ++i_;
        return make_expr(IntLit{static_cast<std::int64_t>(v)}, pos);
      }
      case Tok::KwTrue:
        ++i_;
        return make_expr(BoolLit{true}, pos);
      case Tok::KwFalse:
        ++i_;
        return make_expr(BoolLit{false}, pos);
      case Tok::KwInvoke: {
        ++i_;
        std::string name = expect(Tok::Ident, "function name").text;
        return make_expr(Invoke{std::move(name), args()}, pos);
      }
      case Tok::Ident: {
        std::string name = t.text;
        ++i_;
        if (at(Tok::LParen)) return make_expr(Call{std::move(name), args()}, pos);
        return make_expr(Var{std::move(name)}, pos);
      }
      case Tok::LParen: {
        ++i_;
        auto e = expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      default:
        fail("expression");
    }
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

std::string parse_error_text(SourcePos pos, const std::string& expected, const std::string& found) {
  return std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": expected " + expected + ", found " +
         found;
}

}  // namespace

ParseError::ParseError(SourcePos pos, std::string expected, std::string found)
    : std::runtime_error(parse_error_text(pos, expected, found)),
      pos_(pos),
      expected_(std::move(expected)),
      found_(std::move(found)) {}

ExprPtr make_expr(Expr::Node node, SourcePos pos) {
  return std::make_unique<Expr>(Expr{std::move(node), pos});
}

std::string_view binop_symbol(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
  }
  return "?";
}

Program parse(std::string_view source) {
  Lexer lexer(source);
  Parser parser(lexer.run());
  return parser.program();
}

}  // namespace fex::lang
