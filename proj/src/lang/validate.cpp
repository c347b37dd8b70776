#include <algorithm>
#include <set>

#include "fex/lang.hpp"

namespace fex::lang {

namespace {

struct Scope {
  const std::vector<std::string>& params;
  std::vector<std::string> lets;

  bool binds(const std::string& name) const {
    return std::find(lets.begin(), lets.end(), name) != lets.end() ||
           std::find(params.begin(), params.end(), name) != params.end();
  }
};

class Checker {
 public:
  explicit Checker(const Program& p) : program_(p) {
    for (const auto& f : p.functions) arity_.try_emplace(f.name, f.params.size());
  }

  std::vector<ValidationError> run() {
    std::set<std::string> seen;
    bool has_main = false;
    for (const auto& f : program_.functions) {
      if (!seen.insert(f.name).second) {
        report(ValidationKind::DuplicateFunction, f.name, f.pos, "function '" + f.name + "' defined twice");
      }
      if (f.name == Program::entry) {
        has_main = true;
        if (!f.params.empty()) {
          report(ValidationKind::MainHasParams, f.name, f.pos, "main must take no parameters");
        }
      }
      std::set<std::string> params;
      for (const auto& p : f.params) {
        if (!params.insert(p).second) {
          report(ValidationKind::DuplicateParam, p, f.pos, "parameter '" + p + "' repeated in '" + f.name + "'");
        }
      }
      Scope scope{f.params, {}};
      walk(*f.body, scope);
    }
    if (!has_main) report(ValidationKind::MissingMain, "main", {1, 1}, "no function named main");
    return std::move(errors_);
  }

 private:
  void report(ValidationKind kind, std::string name, SourcePos pos, std::string message) {
    errors_.push_back({kind, std::move(name), pos, std::move(message)});
  }

  void check_target(const std::string& fname, std::size_t argc, SourcePos pos) {
    auto it = arity_.find(fname);
    if (it == arity_.end()) {
      report(ValidationKind::UndefinedFunction, fname, pos, "call to undefined function '" + fname + "'");
    } else if (it->second != argc) {
      report(ValidationKind::ArityMismatch, fname, pos,
             "'" + fname + "' takes " + std::to_string(it->second) + " argument(s), given " + std::to_string(argc));
    }
  }

  void walk(const Expr& e, Scope& scope) {
    if (auto* v = e.as<Var>()) {
      if (!scope.binds(v->name)) {
        report(ValidationKind::UnboundVariable, v->name, e.pos, "unbound variable '" + v->name + "'");
      }
    } else if (auto* b = e.as<Binop>()) {
      walk(*b->lhs, scope);
      walk(*b->rhs, scope);
    } else if (auto* i = e.as<If>()) {
      walk(*i->cond, scope);
      walk(*i->then_branch, scope);
      walk(*i->else_branch, scope);
    } else if (auto* l = e.as<Let>()) {
      walk(*l->bound, scope);
      scope.lets.push_back(l->name);
      walk(*l->rest, scope);
      scope.lets.pop_back();
    } else if (auto* c = e.as<Call>()) {
      check_target(c->fname, c->args.size(), e.pos);
      for (const auto& a : c->args) walk(*a, scope);
    } else if (auto* c = e.as<Invoke>()) {
      check_target(c->fname, c->args.size(), e.pos);
      for (const auto& a : c->args) walk(*a, scope);
    } else if (auto* w = e.as<Wait>()) {
      walk(*w->operand, scope);
    }
  }

  const Program& program_;
  std::map<std::string, std::size_t> arity_;
  std::vector<ValidationError> errors_;
};

std::string summarize(const std::vector<ValidationError>& errors) {
  std::string out;
  for (const auto& e : errors) {
    if (!out.empty()) out += "\n";
    out += std::to_string(e.pos.line) + ":" + std::to_string(e.pos.column) + ": " +
           std::string(validation_kind_name(e.kind)) + ": " + e.message;
  }
  return out;
}

}  // namespace

std::string_view validation_kind_name(ValidationKind kind) {
  switch (kind) {
    case ValidationKind::UndefinedFunction: return "UndefinedFunction";
    case ValidationKind::ArityMismatch: return "ArityMismatch";
    case ValidationKind::UnboundVariable: return "UnboundVariable";
    case ValidationKind::MissingMain: return "MissingMain";
    case ValidationKind::MainHasParams: return "MainHasParams";
    case ValidationKind::DuplicateParam: return "DuplicateParam";
    case ValidationKind::DuplicateFunction: return "DuplicateFunction";
  }
  return "?";
}

ValidationFailed::ValidationFailed(std::vector<ValidationError> errors)
    : std::runtime_error(summarize(errors)), errors_(std::move(errors)) {}

std::vector<ValidationError> check(const Program& program) { return Checker(program).run(); }

CheckedProgram validate(Program program) {
  auto errors = check(program);
  if (!errors.empty()) throw ValidationFailed(std::move(errors));
  CheckedProgram checked;
  auto shared = std::make_shared<const Program>(std::move(program));
  for (std::size_t i = 0; i < shared->functions.size(); ++i) checked.index_.emplace(shared->functions[i].name, i);
  checked.program_ = std::move(shared);
  return checked;
}

const FuncDef* CheckedProgram::find(std::string_view name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &program_->functions[it->second];
}

CheckedProgram load(std::string_view source) { return validate(parse(source)); }

}  // namespace fex::lang
