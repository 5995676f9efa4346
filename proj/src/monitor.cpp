#include "stlgame/monitor.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

namespace stlgame::stl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Key {
  const Formula* node;
  int t;
  bool operator==(const Key& o) const { return node == o.node && t == o.t; }
};

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    return std::hash<const Formula*>()(k.node) * 1000003u ^ std::hash<int>()(k.t);
  }
};

void check_window(const Formula& f, const Trace& trace, int t) {
  if (t < 0) throw InputError("evaluation time must be nonnegative");
  if (trace.states.empty()) throw InputError("trace is empty");
  if (t + f.horizon() > trace.max_time()) {
    throw InputError("trace has " + std::to_string(trace.length()) +
                     " samples but evaluating at t=" + std::to_string(t) +
                     " needs horizon " + std::to_string(f.horizon()) + " beyond it");
  }
}

const Eigen::VectorXd& state_at(const Trace& trace, int t) {
  if (t < 0 || t > trace.max_time()) {
    throw InternalError("monitor stepped outside the trace at t=" + std::to_string(t));
  }
  return trace.states[static_cast<std::size_t>(t)];
}

class BoolEval {
 public:
  explicit BoolEval(const Trace& trace) : trace_(trace) {}

  bool eval(const Formula& f, int t) {
    Key key{&f, t};
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    bool v = compute(f, t);
    memo_.emplace(key, v);
    return v;
  }

 private:
  bool compute(const Formula& f, int t) {
    switch (f.op()) {
      case Op::True:
        return true;
      case Op::Pred:
        return f.pred().eval(state_at(trace_, t)) >= 0.0;
      case Op::Not:
        return !eval(*f.child(0), t);
      case Op::And:
        for (const auto& c : f.children()) {
          if (!eval(*c, t)) return false;
        }
        return true;
      case Op::Or:
        for (const auto& c : f.children()) {
          if (eval(*c, t)) return true;
        }
        return false;
      case Op::Eventually:
        for (int s = t + f.lo(); s <= t + f.hi(); ++s) {
          if (eval(*f.child(0), s)) return true;
        }
        return false;
      case Op::Always:
        for (int s = t + f.lo(); s <= t + f.hi(); ++s) {
          if (!eval(*f.child(0), s)) return false;
        }
        return true;
      case Op::Until: {
        // Witness time t' must satisfy the right operand while the left
        // operand holds on all of [t, t'], including t' itself.
        bool lhs_ok = true;
        for (int s = t; s < t + f.lo(); ++s) lhs_ok = lhs_ok && eval(*f.child(0), s);
        for (int s = t + f.lo(); s <= t + f.hi(); ++s) {
          lhs_ok = lhs_ok && eval(*f.child(0), s);
          if (!lhs_ok) return false;
          if (eval(*f.child(1), s)) return true;
        }
        return false;
      }
    }
    throw InternalError("unreachable formula op in eval_bool");
  }

  const Trace& trace_;
  std::unordered_map<Key, bool, KeyHash> memo_;
};

class RobustEval {
 public:
  explicit RobustEval(const Trace& trace) : trace_(trace) {}

  double eval(const Formula& f, int t) {
    Key key{&f, t};
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    double v = compute(f, t);
    memo_.emplace(key, v);
    return v;
  }

 private:
  double compute(const Formula& f, int t) {
    switch (f.op()) {
      case Op::True:
        return kInf;
      case Op::Pred:
        return f.pred().eval(state_at(trace_, t));
      case Op::Not:
        return -eval(*f.child(0), t);
      case Op::And: {
        double v = kInf;
        for (const auto& c : f.children()) v = std::min(v, eval(*c, t));
        return v;
      }
      case Op::Or: {
        double v = -kInf;
        for (const auto& c : f.children()) v = std::max(v, eval(*c, t));
        return v;
      }
      case Op::Eventually: {
        double v = -kInf;
        for (int s = t + f.lo(); s <= t + f.hi(); ++s) v = std::max(v, eval(*f.child(0), s));
        return v;
      }
      case Op::Always: {
        double v = kInf;
        for (int s = t + f.lo(); s <= t + f.hi(); ++s) v = std::min(v, eval(*f.child(0), s));
        return v;
      }
      case Op::Until: {
        double best = -kInf;
        double lhs_min = kInf;
        for (int s = t; s < t + f.lo(); ++s) lhs_min = std::min(lhs_min, eval(*f.child(0), s));
        for (int s = t + f.lo(); s <= t + f.hi(); ++s) {
          lhs_min = std::min(lhs_min, eval(*f.child(0), s));
          best = std::max(best, std::min(eval(*f.child(1), s), lhs_min));
        }
        return best;
      }
    }
    throw InternalError("unreachable formula op in robustness");
  }

  const Trace& trace_;
  std::unordered_map<Key, double, KeyHash> memo_;
};

}  // namespace

bool eval_bool(const Formula& f, const Trace& trace, int t) {
  check_window(f, trace, t);
  return BoolEval(trace).eval(f, t);
}

double robustness(const Formula& f, const Trace& trace, int t) {
  check_window(f, trace, t);
  return RobustEval(trace).eval(f, t);
}

}  // namespace stlgame::stl
