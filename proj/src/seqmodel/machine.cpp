#include <limits>

#include "fex/seqmodel.hpp"

namespace fex::seq {

namespace {

using lang::BinOp;
using trace::EventKind;

RuntimeError error(ErrorKind kind, std::string message) { return RuntimeError{kind, std::move(message)}; }

std::string where(const lang::Expr* node) {
  if (!node) return "";
  return " at " + std::to_string(node->pos.line) + ":" + std::to_string(node->pos.column);
}

class Stepper {
 public:
  Stepper(MachineState& s, const lang::CheckedProgram& p) : s_(s), program_(p) {}

  StepResult run() {
    if (s_.terminated()) return finished();
    if (s_.steps >= s_.limits.max_steps) {
      return terminate(error(ErrorKind::StepLimitExceeded,
                             "exceeded " + std::to_string(s_.limits.max_steps) + " steps"));
    }
    ++s_.steps;
    switch (s_.phase) {
      case Phase::FramePush: return frame_push();
      case Phase::ControlTransfer: return advance(EventKind::CONTROL_TRANSFER, Phase::SaveState);
      case Phase::SaveState:
        top().callee_part.saved_state = std::move(s_.control);
        s_.control = {};
        return advance(EventKind::SAVE_STATE, Phase::LocalsAlloc);
      case Phase::LocalsAlloc:
        top().callee_part.locals.emplace();
        return advance(EventKind::LOCALS_ALLOC, Phase::BodyStart);
      case Phase::BodyStart:
        s_.control.work.push_back({Instr::Op::Eval, top().def->body.get()});
        return advance(EventKind::BODY_START, Phase::Eval);
      case Phase::Eval: return eval();
      case Phase::BodyEnd: return advance(EventKind::BODY_END, Phase::ReturnStored);
      case Phase::ReturnStored: {
        s_.pending_value = s_.control.values.back();
        s_.control.values.pop_back();
        auto r = advance(EventKind::RETURN_STORED, Phase::LocalsFreed);
        r.event->detail.set("value", s_.pending_value->str());
        return r;
      }
      case Phase::LocalsFreed:
        top().callee_part.locals.reset();
        return advance(EventKind::LOCALS_FREED, Phase::RestoreState);
      case Phase::RestoreState:
        s_.control = std::move(*top().callee_part.saved_state);
        top().callee_part.saved_state.reset();
        return advance(EventKind::RESTORE_STATE, Phase::ControlReturn);
      case Phase::ControlReturn: return advance(EventKind::CONTROL_RETURN, Phase::ReturnTaken);
      case Phase::ReturnTaken: return return_taken();
      case Phase::FramePop: return frame_pop();
      case Phase::AwaitReply:
        // Nothing to do until the controller replies; not a real step.
        --s_.steps;
        return {};
      case Phase::Terminated: break;
    }
    return finished();
  }

 private:
  Frame& top() { return s_.stack.back(); }

  trace::TraceEvent event(EventKind kind) {
    trace::TraceEvent e;
    e.actor = trace::executor_actor(0);
    e.kind = kind;
    e.fn = top().fn_name;
    return e;
  }

  StepResult advance(EventKind kind, Phase next) {
    s_.phase = next;
    return {event(kind), {}};
  }

  StepResult finished() {
    StepResult r;
    if (s_.result && std::holds_alternative<RuntimeError>(*s_.result)) {
      r.effect.kind = Effect::Kind::Failed;
    } else if (s_.result) {
      r.effect.kind = Effect::Kind::Finished;
    }
    return r;
  }

  StepResult terminate(RuntimeError err) {
    s_.phase = Phase::Terminated;
    s_.result = std::move(err);
    return finished();
  }

  StepResult terminate(Value v) {
    s_.phase = Phase::Terminated;
    s_.result = v;
    return finished();
  }

  StepResult frame_push() {
    PendingCall call = std::move(*s_.pending_call);
    s_.pending_call.reset();
    if (s_.depth() + 1 > s_.limits.max_frames) {
      return terminate(error(ErrorKind::StackOverflow, "call to '" + call.def->name + "' exceeds " +
                                                           std::to_string(s_.limits.max_frames) + " frames"));
    }
    Frame f;
    f.fn_name = call.def->name;
    f.def = call.def;
    f.caller_part.args = std::move(call.args);
    f.caller_part.return_address = call.return_address;
    s_.stack.push_back(std::move(f));
    s_.max_depth = std::max(s_.max_depth, s_.depth());
    auto r = advance(EventKind::FRAME_PUSH, Phase::ControlTransfer);
    r.event->detail.set("depth", std::to_string(s_.depth()));
    r.event->detail.set("args", render_args(top().caller_part.args));
    if (call.return_address.handle) r.event->detail.set("handle", call.return_address.handle->str());
    return r;
  }

  StepResult return_taken() {
    Value v = *s_.pending_value;
    s_.pending_value.reset();
    const ReturnAddress& ra = top().caller_part.return_address;
    auto r = advance(EventKind::RETURN_TAKEN, Phase::FramePop);
    r.event->detail.set("value", v.str());
    switch (ra.kind) {
      case ReturnAddress::Kind::Entry:
        s_.pending_value = v;
        break;
      case ReturnAddress::Kind::Value:
        s_.control.values.push_back(v);
        break;
      case ReturnAddress::Kind::Handle:
        s_.resolved.emplace(*ra.handle, v);
        s_.control.values.push_back(Value::handle(*ra.handle));
        r.event->detail.set("handle", ra.handle->str());
        break;
    }
    return r;
  }

  StepResult frame_pop() {
    auto r = event(EventKind::FRAME_POP);
    r.detail.set("depth", std::to_string(s_.depth()));
    s_.stack.pop_back();
    if (!s_.stack.empty()) {
      s_.phase = Phase::Eval;
      return {std::move(r), {}};
    }
    Value v = *s_.pending_value;
    s_.pending_value.reset();
    StepResult out = v.is_handle() ? terminate(error(ErrorKind::TypeError, "main returned a handle"))
                                   : terminate(v);
    out.event = std::move(r);
    return out;
  }

  std::optional<Value> lookup(std::string_view name) {
    Frame& f = top();
    if (f.callee_part.locals) {
      const auto& locals = *f.callee_part.locals;
      for (auto it = locals.rbegin(); it != locals.rend(); ++it) {
        if (it->first == name) return it->second;
      }
    }
    const auto& params = f.def->params;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i] == name) return f.caller_part.args[i];
    }
    return std::nullopt;
  }

  Value pop() {
    Value v = s_.control.values.back();
    s_.control.values.pop_back();
    return v;
  }

  std::vector<Value> pop_args(std::size_t n) {
    std::vector<Value> args(s_.control.values.end() - static_cast<std::ptrdiff_t>(n), s_.control.values.end());
    s_.control.values.resize(s_.control.values.size() - n);
    return args;
  }

  template <class CallNode>
  void push_call(Instr::Op apply, const lang::Expr* node, const CallNode& c) {
    auto& work = s_.control.work;
    work.push_back({apply, node});
    for (auto it = c.args.rbegin(); it != c.args.rend(); ++it) work.push_back({Instr::Op::Eval, it->get()});
  }

  StepResult eval() {
    auto& work = s_.control.work;
    if (work.empty()) {
      if (s_.mode == CallMode::Controller) {
        Value v = pop();
        if (v.is_handle() && top().def->name == lang::Program::entry) {
          return terminate(error(ErrorKind::TypeError, "main returned a handle"));
        }
        return terminate(v);
      }
      s_.phase = Phase::BodyEnd;
      --s_.steps;
      return run();
    }
    Instr in = work.back();
    work.pop_back();
    const lang::Expr* node = in.node;
    switch (in.op) {
      case Instr::Op::Eval: return eval_node(node);
      case Instr::Op::Arith: {
        Value rhs = pop();
        Value lhs = pop();
        auto r = apply_binop(node->as<lang::Binop>()->op, lhs, rhs);
        if (auto* err = std::get_if<RuntimeError>(&r)) {
          err->message += where(node);
          return terminate(std::move(*err));
        }
        s_.control.values.push_back(std::get<Value>(r));
        return {};
      }
      case Instr::Op::Branch: {
        Value c = pop();
        if (!c.is_bool()) return terminate(error(ErrorKind::TypeError, "if condition is " + c.describe() + where(node)));
        const auto* i = node->as<lang::If>();
        work.push_back({Instr::Op::Eval, c.as_bool() ? i->then_branch.get() : i->else_branch.get()});
        return {};
      }
      case Instr::Op::Bind: {
        const auto* l = node->as<lang::Let>();
        top().callee_part.locals->emplace_back(l->name, pop());
        work.push_back({Instr::Op::Unbind, node});
        work.push_back({Instr::Op::Eval, l->rest.get()});
        return {};
      }
      case Instr::Op::Unbind:
        top().callee_part.locals->pop_back();
        return {};
      case Instr::Op::CallApply: return call_apply(node);
      case Instr::Op::InvokeApply: return invoke_apply(node);
      case Instr::Op::WaitApply: return wait_apply(node);
    }
    return {};
  }

  StepResult eval_node(const lang::Expr* node) {
    auto& work = s_.control.work;
    if (auto* n = node->as<lang::IntLit>()) {
      s_.control.values.push_back(Value::integer(n->value));
    } else if (auto* b = node->as<lang::BoolLit>()) {
      s_.control.values.push_back(Value::boolean(b->value));
    } else if (auto* v = node->as<lang::Var>()) {
      auto val = lookup(v->name);
      if (!val) return terminate(error(ErrorKind::TypeError, "unbound variable '" + v->name + "'" + where(node)));
      s_.control.values.push_back(*val);
    } else if (auto* b = node->as<lang::Binop>()) {
      work.push_back({Instr::Op::Arith, node});
      work.push_back({Instr::Op::Eval, b->rhs.get()});
      work.push_back({Instr::Op::Eval, b->lhs.get()});
    } else if (auto* i = node->as<lang::If>()) {
      work.push_back({Instr::Op::Branch, node});
      work.push_back({Instr::Op::Eval, i->cond.get()});
    } else if (auto* l = node->as<lang::Let>()) {
      work.push_back({Instr::Op::Bind, node});
      work.push_back({Instr::Op::Eval, l->bound.get()});
    } else if (auto* c = node->as<lang::Call>()) {
      push_call(Instr::Op::CallApply, node, *c);
    } else if (auto* c = node->as<lang::Invoke>()) {
      push_call(Instr::Op::InvokeApply, node, *c);
    } else if (auto* w = node->as<lang::Wait>()) {
      work.push_back({Instr::Op::WaitApply, node});
      work.push_back({Instr::Op::Eval, w->operand.get()});
    }
    return {};
  }

  StepResult call_apply(const lang::Expr* node) {
    const auto* c = node->as<lang::Call>();
    const lang::FuncDef* def = program_.find(c->fname);
    auto args = pop_args(c->args.size());
    if (s_.mode == CallMode::Controller) {
      // A synchronous call is wait(invoke(...)) through the controller.
      s_.control.work.push_back({Instr::Op::WaitApply, node});
      return request(def, std::move(args), true);
    }
    s_.pending_call = PendingCall{def, std::move(args), {ReturnAddress::Kind::Value, node, std::nullopt}};
    s_.phase = Phase::FramePush;
    return {};
  }

  StepResult invoke_apply(const lang::Expr* node) {
    const auto* c = node->as<lang::Invoke>();
    const lang::FuncDef* def = program_.find(c->fname);
    auto args = pop_args(c->args.size());
    if (s_.mode == CallMode::Controller) return request(def, std::move(args), false);
    InstanceId id{s_.next_instance++};
    s_.pending_call = PendingCall{def, std::move(args), {ReturnAddress::Kind::Handle, node, id}};
    s_.phase = Phase::FramePush;
    return {};
  }

  StepResult request(const lang::FuncDef* def, std::vector<Value> args, bool sync) {
    s_.phase = Phase::AwaitReply;
    StepResult r;
    r.effect.kind = Effect::Kind::Request;
    r.effect.callee = def;
    r.effect.args = std::move(args);
    r.effect.sync = sync;
    return r;
  }

  StepResult wait_apply(const lang::Expr* node) {
    Value h = pop();
    if (!h.is_handle()) {
      return terminate(error(ErrorKind::WaitOnNonHandle, "wait on " + h.describe() + where(node)));
    }
    InstanceId id = h.as_handle();
    if (s_.mode == CallMode::Controller) {
      s_.phase = Phase::AwaitReply;
      StepResult r;
      r.effect.kind = Effect::Kind::Wait;
      r.effect.wait_on = id;
      return r;
    }
    if (s_.consumed.count(id)) {
      return terminate(error(ErrorKind::WaitConsumed, "second wait on " + id.str() + where(node)));
    }
    auto it = s_.resolved.find(id);
    if (it == s_.resolved.end()) {
      return terminate(error(ErrorKind::UnknownInstance, "no instance " + id.str() + where(node)));
    }
    s_.control.values.push_back(it->second);
    s_.resolved.erase(it);
    s_.consumed.insert(id);
    return {};
  }

  MachineState& s_;
  const lang::CheckedProgram& program_;
};

}  // namespace

std::string render_args(const std::vector<Value>& args) {
  std::string out = "[";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) out += ", ";
    out += args[i].str();
  }
  return out + "]";
}

std::variant<Value, RuntimeError> apply_binop(BinOp op, const Value& lhs, const Value& rhs) {
  auto type_error = [&] {
    return RuntimeError{ErrorKind::TypeError, "operands " + lhs.describe() + " " + std::string(lang::binop_symbol(op)) +
                                                  " " + rhs.describe()};
  };
  if (op == BinOp::Eq || op == BinOp::Ne) {
    bool same;
    if (lhs.is_int() && rhs.is_int()) {
      same = lhs.as_int() == rhs.as_int();
    } else if (lhs.is_bool() && rhs.is_bool()) {
      same = lhs.as_bool() == rhs.as_bool();
    } else {
      return type_error();
    }
    return Value::boolean(op == BinOp::Eq ? same : !same);
  }
  if (!lhs.is_int() || !rhs.is_int()) return type_error();
  const std::int64_t a = lhs.as_int();
  const std::int64_t b = rhs.as_int();
  std::int64_t out = 0;
  auto overflow = [&] {
    return RuntimeError{ErrorKind::IntegerOverflow, std::to_string(a) + " " + std::string(lang::binop_symbol(op)) +
                                                        " " + std::to_string(b) + " overflows"};
  };
  switch (op) {
    case BinOp::Add:
      if (__builtin_add_overflow(a, b, &out)) return overflow();
      return Value::integer(out);
    case BinOp::Sub:
      if (__builtin_sub_overflow(a, b, &out)) return overflow();
      return Value::integer(out);
    case BinOp::Mul:
      if (__builtin_mul_overflow(a, b, &out)) return overflow();
      return Value::integer(out);
    case BinOp::Div:
      if (b == 0) return RuntimeError{ErrorKind::DivisionByZero, "division by zero"};
      if (a == std::numeric_limits<std::int64_t>::min() && b == -1) return overflow();
      return Value::integer(a / b);
    case BinOp::Mod:
      if (b == 0) return RuntimeError{ErrorKind::DivisionByZero, "remainder by zero"};
      if (b == -1) return Value::integer(0);
      return Value::integer(a % b);
    case BinOp::Lt: return Value::boolean(a < b);
    case BinOp::Le: return Value::boolean(a <= b);
    case BinOp::Gt: return Value::boolean(a > b);
    case BinOp::Ge: return Value::boolean(a >= b);
    default: break;
  }
  return type_error();
}

MachineState initial_state(const lang::CheckedProgram& program, Limits limits) {
  MachineState s;
  s.limits = limits;
  s.pending_call = PendingCall{&program.entry(), {}, {ReturnAddress::Kind::Entry, nullptr, std::nullopt}};
  s.phase = Phase::FramePush;
  return s;
}

MachineState instance_state(const lang::FuncDef& def, std::vector<Value> args, std::uint64_t depth, Limits limits) {
  MachineState s;
  s.mode = CallMode::Controller;
  s.limits = limits;
  s.base_depth = depth - 1;
  Frame f;
  f.fn_name = def.name;
  f.def = &def;
  f.caller_part.args = std::move(args);
  f.callee_part.locals.emplace();
  s.stack.push_back(std::move(f));
  s.max_depth = s.depth();
  s.control.work.push_back({Instr::Op::Eval, def.body.get()});
  s.phase = Phase::Eval;
  return s;
}

StepResult step(MachineState& state, const lang::CheckedProgram& program) { return Stepper(state, program).run(); }

void resume(MachineState& state, Value reply) {
  state.control.values.push_back(reply);
  state.phase = Phase::Eval;
}

void fail(MachineState& state, RuntimeError error) {
  state.result = std::move(error);
  state.phase = Phase::Terminated;
}

Outcome run_sequential(const lang::CheckedProgram& program, trace::TraceSink& sink, Limits limits) {
  MachineState state = initial_state(program, limits);
  while (!state.terminated()) {
    auto r = step(state, program);
    if (r.event) sink.record(std::move(*r.event));
  }
  Outcome out;
  out.steps = state.steps;
  out.trace_ref = sink.name();
  if (std::holds_alternative<Value>(*state.result)) {
    out.result = std::get<Value>(*state.result);
  } else {
    out.result = std::get<RuntimeError>(*state.result);
  }
  sink.set_summary(trace::RunSummary::from(out));
  return out;
}

}  // namespace fex::seq
