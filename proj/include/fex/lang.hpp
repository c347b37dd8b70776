#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fex::lang {

struct SourcePos {
  std::uint32_t line = 0;
  std::uint32_t column = 0;
};

enum class BinOp { Add, Sub, Mul, Div, Mod, Lt, Le, Eq, Ne, Gt, Ge };

std::string_view binop_symbol(BinOp op);

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct IntLit {
  std::int64_t value;
};
struct BoolLit {
  bool value;
};
struct Var {
  std::string name;
};
struct Binop {
  BinOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};
struct If {
  ExprPtr cond;
  ExprPtr then_branch;
  ExprPtr else_branch;
};
struct Let {
  std::string name;
  ExprPtr bound;
  ExprPtr rest;
};
struct Call {
  std::string fname;
  std::vector<ExprPtr> args;
};
struct Invoke {
  std::string fname;
  std::vector<ExprPtr> args;
};
struct Wait {
  ExprPtr operand;
};

/// One AST node. Nodes are immutable once a Program is built; backends hold
/// raw `const Expr*` into a shared Program for the whole run.
struct Expr {
  using Node = std::variant<IntLit, BoolLit, Var, Binop, If, Let, Call, Invoke, Wait>;

  Node node;
  SourcePos pos;

  template <class T>
  const T* as() const {
    return std::get_if<T>(&node);
  }
};

ExprPtr make_expr(Expr::Node node, SourcePos pos = {});

struct FuncDef {
  std::string name;
  std::vector<std::string> params;
  ExprPtr body;
  SourcePos pos;
};

/// Functions in source order. The entry point is always "main".
struct Program {
  std::vector<FuncDef> functions;

  static constexpr std::string_view entry = "main";
};

/// Structural equality ignoring source positions.
bool same_structure(const Expr& a, const Expr& b);
bool same_structure(const Program& a, const Program& b);

class ParseError : public std::runtime_error {
 public:
  ParseError(SourcePos pos, std::string expected, std::string found);

  SourcePos pos() const { return pos_; }
  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }

 private:
  SourcePos pos_;
  std::string expected_;
  std::string found_;
};

/// Parses FEX source text. Throws ParseError on the first deviation from the grammar.
Program parse(std::string_view source);

/// Renders a program back to source that parses to a structurally equal AST.
std::string to_source(const Program& program);
std::string to_source(const Expr& expr);

enum class ValidationKind {
  UndefinedFunction,
  ArityMismatch,
  UnboundVariable,
  MissingMain,
  MainHasParams,
  DuplicateParam,
  DuplicateFunction,
};

std::string_view validation_kind_name(ValidationKind kind);

struct ValidationError {
  ValidationKind kind;
  std::string name;
  SourcePos pos;
  std::string message;
};

/// Validated program shared by every backend. Cheap to copy; the underlying
/// AST is immutable and safe to read from any number of executors.
class CheckedProgram {
 public:
  const Program& program() const { return *program_; }
  const FuncDef* find(std::string_view name) const;
  const FuncDef& entry() const { return *find(Program::entry); }

 private:
  friend CheckedProgram validate(Program program);
  std::shared_ptr<const Program> program_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

class ValidationFailed : public std::runtime_error {
 public:
  explicit ValidationFailed(std::vector<ValidationError> errors);
  const std::vector<ValidationError>& errors() const { return errors_; }

 private:
  std::vector<ValidationError> errors_;
};

/// Every invariant violation in `program`, in source order. Empty iff valid.
std::vector<ValidationError> check(const Program& program);

/// Throws ValidationFailed carrying all violations.
CheckedProgram validate(Program program);

/// parse + validate.
CheckedProgram load(std::string_view source);

}  // namespace fex::lang
