#include "skillplan/pddl.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <functional>
#include <sstream>

#include <nlohmann/json.hpp>

namespace skillplan::pddl {

namespace {

// ---------------------------------------------------------------------------
// S-expression lexer/reader with line/column tracking.

struct Token {
  enum Kind { kLParen, kRParen, kSymbol, kEnd } kind;
  std::string text;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  Token next() {
    skip_ws();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= text_.size()) {
      t.kind = Token::kEnd;
      return t;
    }
    const char c = text_[pos_];
    if (c == '(') {
      advance();
      t.kind = Token::kLParen;
      return t;
    }
    if (c == ')') {
      advance();
      t.kind = Token::kRParen;
      return t;
    }
    t.kind = Token::kSymbol;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ';') {
      t.text.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text_[pos_]))));
      advance();
    }
    if (t.text.empty()) throw ParseError(t.line, t.col, "unexpected character");
    return t;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ';') {  // comment to end of line
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

struct Sexp {
  bool is_list = false;
  std::string symbol;
  std::vector<Sexp> items;
  int line = 1;
  int col = 1;
};

Sexp read_sexp(Lexer& lex, const Token& first) {
  Sexp s;
  s.line = first.line;
  s.col = first.col;
  if (first.kind == Token::kSymbol) {
    s.symbol = first.text;
    return s;
  }
  if (first.kind != Token::kLParen) throw ParseError(first.line, first.col, "expected '('");
  s.is_list = true;
  for (;;) {
    Token t = lex.next();
    if (t.kind == Token::kEnd) throw ParseError(t.line, t.col, "unexpected end of input");
    if (t.kind == Token::kRParen) return s;
    s.items.push_back(read_sexp(lex, t));
  }
}

Sexp read_top(const std::string& text) {
  Lexer lex(text);
  Token t = lex.next();
  if (t.kind == Token::kEnd) throw ParseError(t.line, t.col, "empty input");
  Sexp s = read_sexp(lex, t);
  Token rest = lex.next();
  if (rest.kind != Token::kEnd) throw ParseError(rest.line, rest.col, "trailing content");
  return s;
}

const Sexp& expect_list(const Sexp& s, const char* what) {
  if (!s.is_list) throw ParseError(s.line, s.col, std::string("expected list for ") + what);
  return s;
}

const std::string& expect_symbol(const Sexp& s, const char* what) {
  if (s.is_list) throw ParseError(s.line, s.col, std::string("expected name for ") + what);
  return s.symbol;
}

/// Parse "a b - t c d - u e" into typed names (default type "object").
std::vector<TypedName> parse_typed_list(const std::vector<Sexp>& items, std::size_t begin,
                                        std::size_t end) {
  std::vector<TypedName> out;
  std::vector<std::size_t> pending;
  for (std::size_t i = begin; i < end; ++i) {
    const std::string& sym = expect_symbol(items[i], "typed list entry");
    if (sym == "-") {
      if (i + 1 >= end) throw ParseError(items[i].line, items[i].col, "dangling '-' in typed list");
      const std::string& type = expect_symbol(items[i + 1], "type name");
      for (std::size_t p : pending) out.push_back({items[p].symbol, type});
      pending.clear();
      ++i;
    } else {
      pending.push_back(i);
    }
  }
  for (std::size_t p : pending) out.push_back({items[p].symbol, "object"});
  return out;
}

Atom parse_atom(const Sexp& s) {
  expect_list(s, "atom");
  if (s.items.empty()) throw ParseError(s.line, s.col, "empty atom");
  Atom a;
  a.predicate = expect_symbol(s.items[0], "predicate name");
  for (std::size_t i = 1; i < s.items.size(); ++i)
    a.args.push_back(expect_symbol(s.items[i], "atom argument"));
  return a;
}

void parse_condition(const Sexp& s, std::vector<Literal>& out) {
  expect_list(s, "condition");
  if (s.items.empty()) return;  // () means empty conjunction
  const std::string head = s.items[0].is_list ? "" : s.items[0].symbol;
  if (head == "and") {
    for (std::size_t i = 1; i < s.items.size(); ++i) parse_condition(s.items[i], out);
  } else if (head == "not") {
    if (s.items.size() != 2)
      throw ParseError(s.line, s.col, "'not' takes exactly one atom");
    out.push_back({parse_atom(s.items[1]), true});
  } else {
    out.push_back({parse_atom(s), false});
  }
}

struct AtomContext {
  const Domain* dom;
  // name -> type, for whatever scope applies (parameters or objects+constants)
  const std::map<std::string, std::string>* scope;
};

void check_atom(const Atom& a, const AtomContext& ctx, int line, int col) {
  const Predicate* pred = ctx.dom->find_predicate(a.predicate);
  if (!pred)
    throw ParseError(line, col, "undeclared predicate '" + a.predicate + "'");
  if (pred->parameters.size() != a.args.size())
    throw ParseError(line, col, "arity mismatch for '" + a.predicate + "': expected " +
                                    std::to_string(pred->parameters.size()) + " got " +
                                    std::to_string(a.args.size()));
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    auto it = ctx.scope->find(a.args[i]);
    if (it == ctx.scope->end())
      throw ParseError(line, col, "undeclared name '" + a.args[i] + "' in atom '" +
                                      a.predicate + "'");
    if (!ctx.dom->type_is_a(it->second, pred->parameters[i].type))
      throw ParseError(line, col, "type mismatch: argument '" + a.args[i] + "' of '" +
                                      a.predicate + "' is '" + it->second + "', expected '" +
                                      pred->parameters[i].type + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string Atom::str() const {
  std::string s = "(" + predicate;
  for (const auto& a : args) s += " " + a;
  return s + ")";
}

bool Domain::type_exists(const std::string& t) const {
  if (t == "object") return true;
  return std::any_of(types.begin(), types.end(), [&](const TypedName& tn) { return tn.name == t; });
}

bool Domain::type_is_a(const std::string& t, const std::string& ancestor) const {
  if (ancestor == "object" || t == ancestor) return true;
  std::string cur = t;
  for (std::size_t hops = 0; hops <= types.size(); ++hops) {
    auto it = std::find_if(types.begin(), types.end(),
                           [&](const TypedName& tn) { return tn.name == cur; });
    if (it == types.end()) return false;
    cur = it->type;
    if (cur == ancestor) return true;
    if (cur == "object") return false;
  }
  return false;
}

const Predicate* Domain::find_predicate(const std::string& name) const {
  for (const auto& p : predicates)
    if (p.name == name) return &p;
  return nullptr;
}

const ActionSchema* Domain::find_action(const std::string& name) const {
  for (const auto& a : actions)
    if (a.name == name) return &a;
  return nullptr;
}

Domain parse_domain(const std::string& text) {
  const Sexp top = read_top(text);
  expect_list(top, "domain");
  if (top.items.size() < 2 || top.items[0].is_list || top.items[0].symbol != "define")
    throw ParseError(top.line, top.col, "expected (define (domain ...) ...)");
  const Sexp& head = expect_list(top.items[1], "domain header");
  if (head.items.size() != 2 || expect_symbol(head.items[0], "keyword") != "domain")
    throw ParseError(head.line, head.col, "expected (domain <name>)");

  Domain dom;
  dom.name = expect_symbol(head.items[1], "domain name");

  for (std::size_t i = 2; i < top.items.size(); ++i) {
    const Sexp& sec = expect_list(top.items[i], "domain section");
    if (sec.items.empty()) throw ParseError(sec.line, sec.col, "empty domain section");
    const std::string kw = expect_symbol(sec.items[0], "section keyword");
    if (kw == ":requirements") {
      continue;  // accepted, not interpreted
    } else if (kw == ":types") {
      dom.types = parse_typed_list(sec.items, 1, sec.items.size());
    } else if (kw == ":constants") {
      dom.constants = parse_typed_list(sec.items, 1, sec.items.size());
    } else if (kw == ":predicates") {
      for (std::size_t p = 1; p < sec.items.size(); ++p) {
        const Sexp& ps = expect_list(sec.items[p], "predicate declaration");
        if (ps.items.empty()) throw ParseError(ps.line, ps.col, "empty predicate");
        Predicate pred;
        pred.name = expect_symbol(ps.items[0], "predicate name");
        pred.parameters = parse_typed_list(ps.items, 1, ps.items.size());
        dom.predicates.push_back(std::move(pred));
      }
    } else if (kw == ":action") {
      if (sec.items.size() < 2) throw ParseError(sec.line, sec.col, "action without name");
      ActionSchema act;
      act.name = expect_symbol(sec.items[1], "action name");
      for (std::size_t p = 2; p + 1 < sec.items.size(); p += 2) {
        const std::string field = expect_symbol(sec.items[p], "action field");
        const Sexp& val = sec.items[p + 1];
        if (field == ":parameters") {
          const Sexp& plist = expect_list(val, ":parameters");
          act.parameters = parse_typed_list(plist.items, 0, plist.items.size());
        } else if (field == ":precondition") {
          parse_condition(val, act.precondition);
        } else if (field == ":effect") {
          parse_condition(val, act.effect);
        } else {
          throw ParseError(sec.items[p].line, sec.items[p].col,
                           "unknown action field '" + field + "'");
        }
      }
      dom.actions.push_back(std::move(act));
    } else {
      throw ParseError(sec.line, sec.col, "unknown keyword '" + kw + "'");
    }
  }

  // Validation: unique action names, declared types, declared predicates,
  // variables bound by parameters.
  for (std::size_t i = 0; i < dom.actions.size(); ++i)
    for (std::size_t j = i + 1; j < dom.actions.size(); ++j)
      if (dom.actions[i].name == dom.actions[j].name)
        throw ParseError(1, 1, "duplicate action name '" + dom.actions[i].name + "'");

  for (const auto& tn : dom.constants)
    if (!dom.type_exists(tn.type))
      throw ParseError(1, 1, "constant '" + tn.name + "' has undeclared type '" + tn.type + "'");

  for (const auto& act : dom.actions) {
    std::map<std::string, std::string> scope;
    for (const auto& p : act.parameters) {
      if (!dom.type_exists(p.type))
        throw ParseError(1, 1, "parameter '" + p.name + "' of action '" + act.name +
                                   "' has undeclared type '" + p.type + "'");
      scope[p.name] = p.type;
    }
    for (const auto& c : dom.constants) scope.emplace(c.name, c.type);
    AtomContext ctx{&dom, &scope};
    for (const auto& lit : act.precondition) check_atom(lit.atom, ctx, 1, 1);
    for (const auto& lit : act.effect) check_atom(lit.atom, ctx, 1, 1);
  }
  return dom;
}

Problem parse_problem(const std::string& text, const Domain& dom) {
  const Sexp top = read_top(text);
  expect_list(top, "problem");
  if (top.items.size() < 2 || top.items[0].is_list || top.items[0].symbol != "define")
    throw ParseError(top.line, top.col, "expected (define (problem ...) ...)");
  const Sexp& head = expect_list(top.items[1], "problem header");
  if (head.items.size() != 2 || expect_symbol(head.items[0], "keyword") != "problem")
    throw ParseError(head.line, head.col, "expected (problem <name>)");

  Problem prob;
  prob.name = expect_symbol(head.items[1], "problem name");

  for (std::size_t i = 2; i < top.items.size(); ++i) {
    const Sexp& sec = expect_list(top.items[i], "problem section");
    if (sec.items.empty()) throw ParseError(sec.line, sec.col, "empty problem section");
    const std::string kw = expect_symbol(sec.items[0], "section keyword");
    if (kw == ":domain") {
      if (sec.items.size() != 2) throw ParseError(sec.line, sec.col, "expected (:domain <name>)");
      prob.domain_name = expect_symbol(sec.items[1], "domain name");
    } else if (kw == ":objects") {
      prob.objects = parse_typed_list(sec.items, 1, sec.items.size());
    } else if (kw == ":init") {
      for (std::size_t p = 1; p < sec.items.size(); ++p) prob.init.push_back(parse_atom(sec.items[p]));
    } else if (kw == ":goal") {
      if (sec.items.size() != 2) throw ParseError(sec.line, sec.col, "expected (:goal <condition>)");
      parse_condition(sec.items[1], prob.goal);
    } else if (kw == ":feasibility") {
      for (std::size_t p = 1; p < sec.items.size(); ++p)
        prob.feasibility.push_back(expect_symbol(sec.items[p], "feasibility predicate"));
    } else {
      throw ParseError(sec.line, sec.col, "unknown keyword '" + kw + "'");
    }
  }

  if (!prob.domain_name.empty() && prob.domain_name != dom.name)
    throw ParseError(1, 1, "problem references domain '" + prob.domain_name + "', expected '" +
                               dom.name + "'");

  std::map<std::string, std::string> scope;
  for (const auto& o : prob.objects) {
    if (!dom.type_exists(o.type))
      throw ParseError(1, 1, "object '" + o.name + "' has undeclared type '" + o.type + "'");
    scope[o.name] = o.type;
  }
  for (const auto& c : dom.constants) scope.emplace(c.name, c.type);

  AtomContext ctx{&dom, &scope};
  for (const auto& a : prob.init) check_atom(a, ctx, 1, 1);
  for (const auto& lit : prob.goal) check_atom(lit.atom, ctx, 1, 1);
  for (const auto& f : prob.feasibility)
    if (!dom.find_predicate(f))
      throw ParseError(1, 1, "feasibility names undeclared predicate '" + f + "'");
  return prob;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GroundError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Domain parse_domain_file(const std::string& path) { return parse_domain(read_file(path)); }

Problem parse_problem_file(const std::string& path, const Domain& dom) {
  return parse_problem(read_file(path), dom);
}

// ---------------------------------------------------------------------------

PredicateState PredicateState::from_atoms(std::vector<Atom> atoms) {
  std::sort(atoms.begin(), atoms.end());
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
  return PredicateState{std::move(atoms)};
}

bool PredicateState::contains(const Atom& a) const {
  return std::binary_search(atoms.begin(), atoms.end(), a);
}

std::string PredicateState::key() const {
  std::string s;
  for (const auto& a : atoms) s += a.str();
  return s;
}

std::string GroundedAction::signature() const {
  std::string s = schema + "(";
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) s += ",";
    s += args[i];
  }
  return s + ")";
}

bool TaskGraph::is_goal(int state) const {
  return std::find(goal_states.begin(), goal_states.end(), state) != goal_states.end();
}

namespace {

struct GroundOp {
  std::string schema;
  std::vector<std::string> args;
  std::vector<Atom> pre_pos, pre_neg, add, del;

  std::string sort_key() const {
    std::string s = schema;
    for (const auto& a : args) s += "\x01" + a;
    return s;
  }
};

Atom bind_atom(const Atom& a, const std::map<std::string, std::string>& binding) {
  Atom out;
  out.predicate = a.predicate;
  for (const auto& arg : a.args) {
    auto it = binding.find(arg);
    out.args.push_back(it == binding.end() ? arg : it->second);
  }
  return out;
}

}  // namespace

TaskGraph ground(const Domain& dom, const Problem& prob, std::size_t max_states) {
  const std::set<std::string> feasible(prob.feasibility.begin(), prob.feasibility.end());

  // Candidate objects per type (problem objects plus domain constants).
  std::vector<TypedName> universe = prob.objects;
  universe.insert(universe.end(), dom.constants.begin(), dom.constants.end());
  std::sort(universe.begin(), universe.end(),
            [](const TypedName& a, const TypedName& b) { return a.name < b.name; });

  // Enumerate all ground operators, dropping feasibility-predicate literals.
  std::vector<GroundOp> ops;
  for (const auto& act : dom.actions) {
    std::vector<std::vector<std::string>> candidates;
    for (const auto& param : act.parameters) {
      std::vector<std::string> cs;
      for (const auto& obj : universe)
        if (dom.type_is_a(obj.type, param.type)) cs.push_back(obj.name);
      candidates.push_back(std::move(cs));
    }
    std::vector<std::size_t> idx(act.parameters.size(), 0);
    const auto emit = [&]() {
      std::map<std::string, std::string> binding;
      GroundOp op;
      op.schema = act.name;
      for (std::size_t p = 0; p < act.parameters.size(); ++p) {
        binding[act.parameters[p].name] = candidates[p][idx[p]];
        op.args.push_back(candidates[p][idx[p]]);
      }
      for (const auto& lit : act.precondition) {
        if (feasible.count(lit.atom.predicate)) {
          if (lit.negated) return;  // negated feasibility is always false
          continue;                 // positive feasibility is always true
        }
        (lit.negated ? op.pre_neg : op.pre_pos).push_back(bind_atom(lit.atom, binding));
      }
      for (const auto& lit : act.effect) {
        if (feasible.count(lit.atom.predicate)) continue;
        (lit.negated ? op.del : op.add).push_back(bind_atom(lit.atom, binding));
      }
      ops.push_back(std::move(op));
    };
    if (act.parameters.empty()) {
      emit();
    } else {
      bool done = std::any_of(candidates.begin(), candidates.end(),
                              [](const auto& c) { return c.empty(); });
      while (!done) {
        emit();
        std::size_t p = 0;
        for (;; ++p) {
          if (p == idx.size()) {
            done = true;
            break;
          }
          if (++idx[p] < candidates[p].size()) break;
          idx[p] = 0;
        }
      }
    }
  }
  std::sort(ops.begin(), ops.end(),
            [](const GroundOp& a, const GroundOp& b) { return a.sort_key() < b.sort_key(); });

  // Initial state: init atoms minus feasibility predicates.
  std::vector<Atom> init_atoms;
  for (const auto& a : prob.init)
    if (!feasible.count(a.predicate)) init_atoms.push_back(a);
  const PredicateState initial = PredicateState::from_atoms(std::move(init_atoms));

  const auto satisfies_goal = [&](const PredicateState& w) {
    for (const auto& lit : prob.goal) {
      if (feasible.count(lit.atom.predicate)) {
        if (lit.negated) return false;
        continue;
      }
      if (lit.negated == w.contains(lit.atom)) return false;
    }
    return true;
  };

  TaskGraph graph;
  std::map<PredicateState, int> ids;
  std::deque<int> frontier;
  graph.states.push_back(initial);
  graph.outgoing.emplace_back();
  ids.emplace(initial, 0);
  frontier.push_back(0);
  if (satisfies_goal(initial)) graph.goal_states.push_back(0);

  while (!frontier.empty()) {
    const int sid = frontier.front();
    frontier.pop_front();
    const PredicateState state = graph.states[sid];  // copy; states vector may grow
    for (const auto& op : ops) {
      const bool applicable =
          std::all_of(op.pre_pos.begin(), op.pre_pos.end(),
                      [&](const Atom& a) { return state.contains(a); }) &&
          std::none_of(op.pre_neg.begin(), op.pre_neg.end(),
                       [&](const Atom& a) { return state.contains(a); });
      if (!applicable) continue;

      std::vector<Atom> next_atoms;
      for (const auto& a : state.atoms)
        if (std::find(op.del.begin(), op.del.end(), a) == op.del.end()) next_atoms.push_back(a);
      next_atoms.insert(next_atoms.end(), op.add.begin(), op.add.end());
      PredicateState next = PredicateState::from_atoms(std::move(next_atoms));

      int tid;
      auto it = ids.find(next);
      if (it != ids.end()) {
        tid = it->second;
      } else {
        if (graph.states.size() >= max_states)
          throw GroundError("state-space overflow: more than " + std::to_string(max_states) +
                            " reachable states");
        tid = static_cast<int>(graph.states.size());
        graph.states.push_back(next);
        graph.outgoing.emplace_back();
        ids.emplace(std::move(next), tid);
        frontier.push_back(tid);
        if (satisfies_goal(graph.states[tid])) graph.goal_states.push_back(tid);
      }

      GroundedAction edge;
      edge.schema = op.schema;
      edge.args = op.args;
      edge.source = sid;
      edge.target = tid;
      edge.skill_id = op.schema;
      graph.outgoing[sid].push_back(static_cast<int>(graph.edges.size()));
      graph.edges.push_back(std::move(edge));
    }
  }

  if (graph.goal_states.empty()) throw GroundError("goal unreachable from the initial state");
  return graph;
}

void TaskGraph::validate_against(const Domain& dom, const Problem& prob) const {
  const std::set<std::string> feasible(prob.feasibility.begin(), prob.feasibility.end());
  for (const auto& e : edges) {
    if (e.source < 0 || e.source >= static_cast<int>(states.size()) || e.target < 0 ||
        e.target >= static_cast<int>(states.size()))
      throw GroundError("edge endpoint out of range");
    const ActionSchema* act = dom.find_action(e.schema);
    if (!act) throw GroundError("edge references unknown schema " + e.schema);
    std::map<std::string, std::string> binding;
    for (std::size_t p = 0; p < act->parameters.size(); ++p)
      binding[act->parameters[p].name] = e.args.at(p);
    std::vector<Atom> next_atoms;
    std::vector<Atom> dels;
    for (const auto& lit : act->effect) {
      if (feasible.count(lit.atom.predicate)) continue;
      if (lit.negated) dels.push_back(bind_atom(lit.atom, binding));
    }
    for (const auto& a : states[e.source].atoms)
      if (std::find(dels.begin(), dels.end(), a) == dels.end()) next_atoms.push_back(a);
    for (const auto& lit : act->effect) {
      if (feasible.count(lit.atom.predicate) || lit.negated) continue;
      next_atoms.push_back(bind_atom(lit.atom, binding));
    }
    if (PredicateState::from_atoms(std::move(next_atoms)) != states[e.target])
      throw GroundError("effects of " + e.signature() + " do not reproduce target state");
  }
}

// ---------------------------------------------------------------------------

namespace {

std::string print_typed_list(const std::vector<TypedName>& list) {
  std::string s;
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (i) s += " ";
    s += list[i].name + " - " + list[i].type;
  }
  return s;
}

std::string print_condition(const std::vector<Literal>& lits) {
  std::string s = "(and";
  for (const auto& lit : lits) {
    s += " ";
    s += lit.negated ? "(not " + lit.atom.str() + ")" : lit.atom.str();
  }
  return s + ")";
}

}  // namespace

std::string pretty_print(const Domain& dom) {
  std::ostringstream out;
  out << "(define (domain " << dom.name << ")\n";
  if (!dom.types.empty()) out << "  (:types " << print_typed_list(dom.types) << ")\n";
  if (!dom.constants.empty()) out << "  (:constants " << print_typed_list(dom.constants) << ")\n";
  if (!dom.predicates.empty()) {
    out << "  (:predicates";
    for (const auto& p : dom.predicates) {
      out << "\n    (" << p.name;
      if (!p.parameters.empty()) out << " " << print_typed_list(p.parameters);
      out << ")";
    }
    out << ")\n";
  }
  for (const auto& a : dom.actions) {
    out << "  (:action " << a.name << "\n";
    out << "    :parameters (" << print_typed_list(a.parameters) << ")\n";
    out << "    :precondition " << print_condition(a.precondition) << "\n";
    out << "    :effect " << print_condition(a.effect) << ")\n";
  }
  out << ")\n";
  return out.str();
}

std::string pretty_print(const Problem& prob) {
  std::ostringstream out;
  out << "(define (problem " << prob.name << ")\n";
  out << "  (:domain " << prob.domain_name << ")\n";
  if (!prob.objects.empty()) out << "  (:objects " << print_typed_list(prob.objects) << ")\n";
  out << "  (:init";
  for (const auto& a : prob.init) out << " " << a.str();
  out << ")\n";
  out << "  (:goal " << print_condition(prob.goal) << ")\n";
  if (!prob.feasibility.empty()) {
    out << "  (:feasibility";
    for (const auto& f : prob.feasibility) out << " " << f;
    out << ")\n";
  }
  out << ")\n";
  return out.str();
}

nlohmann::json to_json(const TaskGraph& graph) {
  nlohmann::json j;
  nlohmann::json states = nlohmann::json::array();
  for (const auto& s : graph.states) {
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& a : s.atoms) atoms.push_back(a.str());
    states.push_back(atoms);
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : graph.edges) {
    edges.push_back({{"schema", e.schema},
                     {"args", e.args},
                     {"source", e.source},
                     {"target", e.target},
                     {"skill", e.skill_id}});
  }
  j["states"] = states;
  j["edges"] = edges;
  j["initial"] = graph.initial;
  j["goals"] = graph.goal_states;
  return j;
}

std::string to_dot(const TaskGraph& graph) {
  std::ostringstream out;
  out << "digraph task {\n  rankdir=LR;\n";
  for (std::size_t i = 0; i < graph.states.size(); ++i) {
    out << "  s" << i << " [label=\"w" << i << "\"";
    if (static_cast<int>(i) == graph.initial) out << ", shape=box";
    if (graph.is_goal(static_cast<int>(i))) out << ", peripheries=2";
    out << "];\n";
  }
  for (const auto& e : graph.edges)
    out << "  s" << e.source << " -> s" << e.target << " [label=\"" << e.signature() << "\"];\n";
  out << "}\n";
  return out.str();
}

}  // namespace skillplan::pddl
