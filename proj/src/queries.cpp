#include "hamlet/queries.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <numeric>
#include <sstream>

namespace hamlet {

std::string aggregate_to_string(const AggregateSpec& a) {
  switch (a.kind) {
    case AggKind::CountStar: return "COUNT(*)";
    case AggKind::CountType: return "COUNT(" + a.type + ")";
    case AggKind::Sum: return "SUM(" + a.type + "." + a.attr + ")";
    case AggKind::Avg: return "AVG(" + a.type + "." + a.attr + ")";
    case AggKind::Min: return "MIN(" + a.type + "." + a.attr + ")";
    case AggKind::Max: return "MAX(" + a.type + "." + a.attr + ")";
  }
  return "?";
}

bool cmp_holds_int(std::int64_t lhs, Cmp cmp, std::int64_t rhs) {
  switch (cmp) {
    case Cmp::Lt: return lhs < rhs;
    case Cmp::Le: return lhs <= rhs;
    case Cmp::Eq: return lhs == rhs;
    case Cmp::Ge: return lhs >= rhs;
    case Cmp::Gt: return lhs > rhs;
    case Cmp::Ne: return lhs != rhs;
  }
  return false;
}

template <typename T>
static bool cmp_holds_ord(const T& lhs, Cmp cmp, const T& rhs) {
  switch (cmp) {
    case Cmp::Lt: return lhs < rhs;
    case Cmp::Le: return lhs <= rhs;
    case Cmp::Eq: return lhs == rhs;
    case Cmp::Ge: return lhs >= rhs;
    case Cmp::Gt: return lhs > rhs;
    case Cmp::Ne: return lhs != rhs;
  }
  return false;
}

bool cmp_holds(const AttrValue& lhs, Cmp cmp, const AttrValue& rhs) {
  const bool ltext = std::holds_alternative<std::string>(lhs);
  const bool rtext = std::holds_alternative<std::string>(rhs);
  if (ltext != rtext) return false;
  if (ltext) return cmp_holds_ord(std::get<std::string>(lhs), cmp, std::get<std::string>(rhs));
  if (std::holds_alternative<std::int64_t>(lhs) && std::holds_alternative<std::int64_t>(rhs))
    return cmp_holds_int(std::get<std::int64_t>(lhs), cmp, std::get<std::int64_t>(rhs));
  auto as_double = [](const AttrValue& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    return std::get<double>(v);
  };
  return cmp_holds_ord(as_double(lhs), cmp, as_double(rhs));
}

// ---------------------------------------------------------------------------
// Tokenizer for the query grammar
// ---------------------------------------------------------------------------

namespace {

struct Token {
  enum class Kind { Ident, Number, Text, Punct, End };
  Kind kind = Kind::End;
  std::string text;   // identifier / punct spelling / text literal
  double num = 0.0;
  std::int64_t inum = 0;
  bool is_int = false;
  int line = 0;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  std::vector<Token> all() {
    std::vector<Token> out;
    for (;;) {
      Token t = next();
      bool end = t.kind == Token::Kind::End;
      out.push_back(std::move(t));
      if (end) break;
    }
    return out;
  }

 private:
  Token next() {
    skip_ws();
    Token t;
    t.line = line_;
    if (pos_ >= src_.size()) return t;
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      t.kind = Token::Kind::Ident;
      t.text = src_.substr(start, pos_ - start);
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      std::size_t start = pos_;
      if (c == '-') ++pos_;
      bool is_int = true;
      while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
        if (src_[pos_] == '.') is_int = false;
        ++pos_;
      }
      t.kind = Token::Kind::Number;
      t.text = src_.substr(start, pos_ - start);
      t.is_int = is_int;
      if (is_int) t.inum = std::stoll(t.text);
      t.num = std::stod(t.text);
      return t;
    }
    if (c == '\'' || c == '"') {
      char quote = c;
      ++pos_;
      std::size_t start = pos_;
      while (pos_ < src_.size() && src_[pos_] != quote) ++pos_;
      if (pos_ >= src_.size()) throw ParseError("query: unterminated text literal at line " + std::to_string(line_));
      t.kind = Token::Kind::Text;
      t.text = src_.substr(start, pos_ - start);
      ++pos_;
      return t;
    }
    // multi-char comparators first
    auto two = src_.substr(pos_, 2);
    if (two == "<=" || two == ">=" || two == "!=" || two == "==") {
      t.kind = Token::Kind::Punct;
      t.text = two == "==" ? "=" : two;
      pos_ += 2;
      return t;
    }
    t.kind = Token::Kind::Punct;
    t.text = std::string(1, c);
    ++pos_;
    return t;
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {  // line comment in query files
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

// Cursor over a token slice (one query block).
class Cursor {
 public:
  Cursor(const std::vector<Token>& toks, std::size_t begin, std::size_t end)
      : toks_(toks), pos_(begin), end_(end) {}

  const Token& peek() const { return pos_ < end_ ? toks_[pos_] : toks_.back(); }
  const Token& get() {
    const Token& t = peek();
    if (pos_ < end_) ++pos_;
    return t;
  }
  bool at_end() const { return pos_ >= end_; }
  bool peek_punct(const std::string& p) const {
    return peek().kind == Token::Kind::Punct && peek().text == p;
  }
  bool peek_ident(const std::string& name) const {
    return peek().kind == Token::Kind::Ident && peek().text == name;
  }
  void expect_punct(const std::string& p, const std::string& what) {
    if (!peek_punct(p))
      throw ParseError("query: expected '" + p + "' " + what + " at line " + std::to_string(peek().line));
    get();
  }
  std::string expect_ident(const std::string& what) {
    if (peek().kind != Token::Kind::Ident)
      throw ParseError("query: expected " + what + " at line " + std::to_string(peek().line));
    return get().text;
  }

 private:
  const std::vector<Token>& toks_;
  std::size_t pos_;
  std::size_t end_;
};

Cmp parse_cmp(Cursor& cur) {
  const Token& t = cur.peek();
  if (t.kind != Token::Kind::Punct)
    throw ParseError("query: expected comparison operator at line " + std::to_string(t.line));
  Cmp c;
  if (t.text == "<") c = Cmp::Lt;
  else if (t.text == "<=") c = Cmp::Le;
  else if (t.text == "=") c = Cmp::Eq;
  else if (t.text == ">=") c = Cmp::Ge;
  else if (t.text == ">") c = Cmp::Gt;
  else if (t.text == "!=") c = Cmp::Ne;
  else throw ParseError("query: unknown comparison '" + t.text + "' at line " + std::to_string(t.line));
  cur.get();
  return c;
}

Pattern parse_pattern_expr(Cursor& cur);

Pattern parse_pattern_primary(Cursor& cur) {
  const Token& t = cur.peek();
  if (t.kind != Token::Kind::Ident)
    throw ParseError("query: expected pattern at line " + std::to_string(t.line));
  if (t.text == "NOT")
    throw ParseError("query: NOT patterns (negation) are unsupported");
  if (t.text == "SEQ" || t.text == "OR" || t.text == "AND") {
    std::string head = cur.get().text;
    cur.expect_punct("(", "after " + head);
    Pattern p;
    p.kind = head == "SEQ" ? Pattern::Kind::Seq
             : head == "OR" ? Pattern::Kind::Or
                            : Pattern::Kind::And;
    p.children.push_back(parse_pattern_expr(cur));
    while (cur.peek_punct(",")) {
      cur.get();
      p.children.push_back(parse_pattern_expr(cur));
    }
    cur.expect_punct(")", "to close " + head);
    if (p.kind == Pattern::Kind::Seq && p.children.size() < 2)
      throw ParseError("query: SEQ needs at least two sub-patterns");
    if (p.kind != Pattern::Kind::Seq && p.children.size() != 2)
      throw ParseError("query: " + head + " takes exactly two sub-patterns");
    return p;
  }
  Pattern p;
  p.kind = Pattern::Kind::Atom;
  p.type = cur.get().text;
  return p;
}

Pattern parse_pattern_expr(Cursor& cur) {
  Pattern p = parse_pattern_primary(cur);
  while (cur.peek_punct("+")) {
    cur.get();
    if (p.kind == Pattern::Kind::Kleene)
      throw ParseError("query: Kleene plus applied to a Kleene pattern");
    Pattern k;
    k.kind = Pattern::Kind::Kleene;
    k.children.push_back(std::move(p));
    p = std::move(k);
  }
  return p;
}

void collect_types(const Pattern& p, std::vector<std::string>& out) {
  if (p.kind == Pattern::Kind::Atom) {
    out.push_back(p.type);
    return;
  }
  for (const auto& c : p.children) collect_types(c, out);
}

void collect_kleene_atoms(const Pattern& p, std::vector<std::string>& out) {
  if (p.kind == Pattern::Kind::Kleene && p.children[0].kind == Pattern::Kind::Atom) {
    out.push_back(p.children[0].type);
  }
  for (const auto& c : p.children) collect_kleene_atoms(c, out);
}

bool contains_or_and(const Pattern& p) {
  if (p.kind == Pattern::Kind::Or || p.kind == Pattern::Kind::And) return true;
  for (const auto& c : p.children)
    if (contains_or_and(c)) return true;
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// Query parsing and validation
// ---------------------------------------------------------------------------

static void validate_query(Query& q, const Schema& schema) {
  if (q.id.empty()) throw ParseError("query: missing id");
  const std::string where = " in query '" + q.id + "'";

  // Pattern shape: OR/AND only at top level, with type-disjoint operands.
  if (q.pattern.kind == Pattern::Kind::Or || q.pattern.kind == Pattern::Kind::And) {
    for (const auto& c : q.pattern.children)
      if (contains_or_and(c))
        throw ParseError("query: nested OR/AND patterns are unsupported" + where);
    std::vector<std::string> lhs, rhs;
    collect_types(q.pattern.children[0], lhs);
    collect_types(q.pattern.children[1], rhs);
    for (const auto& t : lhs)
      if (std::find(rhs.begin(), rhs.end(), t) != rhs.end())
        throw ParseError("query: OR/AND operands must use disjoint event types ('" + t + "' repeats)" + where);
    if (q.pattern.kind == Pattern::Kind::And && q.agg.kind != AggKind::CountStar)
      throw ParseError("query: AND patterns support only COUNT(*)" + where);
  } else if (contains_or_and(q.pattern)) {
    throw ParseError("query: OR/AND are supported at the top level only" + where);
  }

  // Every type at most once; every leaf declared.
  std::vector<std::string> types;
  collect_types(q.pattern, types);
  std::set<std::string> seen;
  for (const auto& t : types) {
    if (!schema.find(t)) throw SchemaError("query: unknown event type '" + t + "'" + where);
    if (!seen.insert(t).second)
      throw ParseError("query: event type '" + t + "' appears more than once in the pattern" + where);
  }
  q.types = types;
  collect_kleene_atoms(q.pattern, q.kleene_types);

  auto require_attr = [&](const std::string& type, const std::string& attr) -> AttrKind {
    const EventType* et = schema.find(type);
    if (!et) throw SchemaError("query: unknown event type '" + type + "'" + where);
    auto it = et->schema.find(attr);
    if (it == et->schema.end())
      throw SchemaError("query: type '" + type + "' has no attribute '" + attr + "'" + where);
    return it->second;
  };
  auto in_pattern = [&](const std::string& type) {
    return std::find(q.types.begin(), q.types.end(), type) != q.types.end();
  };

  // Aggregate.
  if (q.agg.kind != AggKind::CountStar) {
    if (!in_pattern(q.agg.type))
      throw ParseError("query: aggregated type '" + q.agg.type + "' is not in the pattern" + where);
    if (q.agg.kind != AggKind::CountType) {
      AttrKind k = require_attr(q.agg.type, q.agg.attr);
      if (k == AttrKind::Text)
        throw ParseError("query: aggregate over text attribute '" + q.agg.attr + "'" + where);
    }
  }

  // Predicates.
  for (const auto& p : q.locals) {
    if (!in_pattern(p.type))
      throw ParseError("query: predicate type '" + p.type + "' is not in the pattern" + where);
    AttrKind k = require_attr(p.type, p.attr);
    bool const_text = std::holds_alternative<std::string>(p.constant);
    if ((k == AttrKind::Text) != const_text)
      throw ParseError("query: predicate on '" + p.type + "." + p.attr + "' compares " +
                       attr_kind_name(k) + " with a " + (const_text ? "text" : "numeric") +
                       " constant" + where);
    if (k == AttrKind::Integer && std::holds_alternative<double>(p.constant))
      throw ParseError("query: predicate on integer attribute '" + p.type + "." + p.attr +
                       "' uses a non-integer constant" + where);
  }
  for (const auto& p : q.adjacents) {
    if (!in_pattern(p.type))
      throw ParseError("query: predicate type '" + p.type + "' is not in the pattern" + where);
    AttrKind kn = require_attr(p.type, p.next_attr);
    AttrKind kp = require_attr(p.type, p.prev_attr);
    bool tn = kn == AttrKind::Text, tp = kp == AttrKind::Text;
    if (tn != tp)
      throw ParseError("query: adjacent predicate mixes text and numeric attributes" + where);
  }
  for (const auto& a : q.equivalence) {
    for (const auto& t : q.types) require_attr(t, a);
  }
  for (const auto& a : q.groupby) {
    for (const auto& t : q.types) require_attr(t, a);
  }

  // Window.
  if (q.window_slide < 1 || q.window_size < q.window_slide)
    throw ParseError("query: window must satisfy size >= slide >= 1" + where);
}

static Query parse_block(Cursor cur, const Schema& schema) {
  Query q;
  // QUERY <id>
  if (!cur.peek_ident("QUERY"))
    throw ParseError("query: block must start with QUERY at line " + std::to_string(cur.peek().line));
  cur.get();
  q.id = cur.expect_ident("query id");
  cur.expect_punct("/", "after query id");

  // RETURN <agg>
  if (!cur.peek_ident("RETURN"))
    throw ParseError("query: expected RETURN clause at line " + std::to_string(cur.peek().line));
  cur.get();
  std::string agg = cur.expect_ident("aggregate function");
  cur.expect_punct("(", "after aggregate function");
  if (agg == "COUNT") {
    if (cur.peek_punct("*")) {
      cur.get();
      q.agg.kind = AggKind::CountStar;
    } else {
      q.agg.kind = AggKind::CountType;
      q.agg.type = cur.expect_ident("event type in COUNT");
    }
  } else {
    if (agg == "SUM") q.agg.kind = AggKind::Sum;
    else if (agg == "AVG") q.agg.kind = AggKind::Avg;
    else if (agg == "MIN") q.agg.kind = AggKind::Min;
    else if (agg == "MAX") q.agg.kind = AggKind::Max;
    else throw ParseError("query: unknown aggregate '" + agg + "'");
    q.agg.type = cur.expect_ident("event type in aggregate");
    cur.expect_punct(".", "between type and attribute");
    q.agg.attr = cur.expect_ident("attribute in aggregate");
  }
  cur.expect_punct(")", "to close aggregate");
  cur.expect_punct("/", "after RETURN clause");

  // PATTERN <expr>
  if (!cur.peek_ident("PATTERN"))
    throw ParseError("query: expected PATTERN clause at line " + std::to_string(cur.peek().line));
  cur.get();
  q.pattern = parse_pattern_expr(cur);
  cur.expect_punct("/", "after PATTERN clause");

  // Optional WHERE
  if (cur.peek_ident("WHERE")) {
    cur.get();
    for (;;) {
      if (cur.peek_punct("[")) {
        cur.get();
        q.equivalence.push_back(cur.expect_ident("equivalence attribute"));
        cur.expect_punct("]", "to close equivalence predicate");
      } else if (cur.peek_ident("NEXT")) {
        cur.get();
        AdjacentPredicate ap;
        cur.expect_punct("(", "after NEXT");
        ap.type = cur.expect_ident("event type in NEXT");
        cur.expect_punct(")", "after NEXT type");
        cur.expect_punct(".", "after NEXT(type)");
        ap.next_attr = cur.expect_ident("attribute after NEXT");
        ap.cmp = parse_cmp(cur);
        if (!cur.peek_ident("PREV"))
          throw ParseError("query: adjacent predicate must compare NEXT(E).a with PREV(E).b, line " +
                           std::to_string(cur.peek().line));
        cur.get();
        cur.expect_punct("(", "after PREV");
        std::string prev_type = cur.expect_ident("event type in PREV");
        cur.expect_punct(")", "after PREV type");
        cur.expect_punct(".", "after PREV(type)");
        ap.prev_attr = cur.expect_ident("attribute after PREV");
        if (prev_type != ap.type)
          throw ParseError("query: adjacent predicates relate consecutive events of one type; got NEXT(" +
                           ap.type + ") vs PREV(" + prev_type + ")");
        q.adjacents.push_back(std::move(ap));
      } else {
        LocalPredicate lp;
        lp.type = cur.expect_ident("event type in predicate");
        cur.expect_punct(".", "after predicate type");
        lp.attr = cur.expect_ident("attribute in predicate");
        lp.cmp = parse_cmp(cur);
        const Token& v = cur.peek();
        if (v.kind == Token::Kind::Number) {
          cur.get();
          if (v.is_int) lp.constant = v.inum;
          else lp.constant = v.num;
        } else if (v.kind == Token::Kind::Text) {
          cur.get();
          lp.constant = v.text;
        } else {
          throw ParseError("query: expected constant in predicate at line " + std::to_string(v.line));
        }
        q.locals.push_back(std::move(lp));
      }
      if (cur.peek_ident("AND")) {
        cur.get();
        continue;
      }
      break;
    }
    cur.expect_punct("/", "after WHERE clause");
  }

  // Optional GROUPBY
  if (cur.peek_ident("GROUPBY")) {
    cur.get();
    for (;;) {
      q.groupby.push_back(cur.expect_ident("grouping attribute"));
      if (cur.peek_punct(",")) {
        cur.get();
        continue;
      }
      break;
    }
    cur.expect_punct("/", "after GROUPBY clause");
  }

  // WITHIN <int> SLIDE <int>
  if (!cur.peek_ident("WITHIN"))
    throw ParseError("query: expected WITHIN clause at line " + std::to_string(cur.peek().line));
  cur.get();
  const Token& wt = cur.peek();
  if (wt.kind != Token::Kind::Number || !wt.is_int)
    throw ParseError("query: WITHIN takes an integer, line " + std::to_string(wt.line));
  q.window_size = cur.get().inum;
  if (!cur.peek_ident("SLIDE"))
    throw ParseError("query: expected SLIDE after WITHIN at line " + std::to_string(cur.peek().line));
  cur.get();
  const Token& st = cur.peek();
  if (st.kind != Token::Kind::Number || !st.is_int)
    throw ParseError("query: SLIDE takes an integer, line " + std::to_string(st.line));
  q.window_slide = cur.get().inum;

  if (!cur.at_end())
    throw ParseError("query: unexpected trailing input at line " + std::to_string(cur.peek().line));

  validate_query(q, schema);
  return q;
}

std::vector<Query> parse_queries(const std::string& text, const Schema& schema) {
  Lexer lex(text);
  std::vector<Token> toks = lex.all();
  // Block boundaries: every top-level QUERY token starts a block.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i + 1 < toks.size(); ++i)
    if (toks[i].kind == Token::Kind::Ident && toks[i].text == "QUERY") starts.push_back(i);
  if (starts.empty()) throw ParseError("query: no QUERY blocks found");
  if (starts[0] != 0)
    throw ParseError("query: stray input before first QUERY at line " + std::to_string(toks[0].line));

  std::vector<Query> out;
  std::set<std::string> ids;
  for (std::size_t b = 0; b < starts.size(); ++b) {
    std::size_t begin = starts[b];
    std::size_t end = (b + 1 < starts.size()) ? starts[b + 1] : toks.size() - 1;  // exclude End token
    Query q = parse_block(Cursor(toks, begin, end), schema);
    if (!ids.insert(q.id).second) throw ParseError("query: duplicate query id '" + q.id + "'");
    out.push_back(std::move(q));
  }
  return out;
}

Query parse_query(const std::string& text, const Schema& schema) {
  auto qs = parse_queries(text, schema);
  if (qs.size() != 1) throw ParseError("query: expected exactly one QUERY block");
  return std::move(qs[0]);
}

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

namespace {

struct Flf {
  std::set<std::string> first, last;
  std::set<std::pair<std::string, std::string>> follow;
};

Flf build_flf(const Pattern& p) {
  Flf r;
  switch (p.kind) {
    case Pattern::Kind::Atom:
      r.first = {p.type};
      r.last = {p.type};
      break;
    case Pattern::Kind::Kleene: {
      r = build_flf(p.children[0]);
      for (const auto& l : r.last)
        for (const auto& f : r.first) r.follow.insert({l, f});
      break;
    }
    case Pattern::Kind::Seq: {
      Flf prev;
      for (std::size_t i = 0; i < p.children.size(); ++i) {
        Flf c = build_flf(p.children[i]);
        if (i == 0) {
          prev = std::move(c);
          continue;
        }
        for (const auto& e : c.follow) prev.follow.insert(e);
        for (const auto& l : prev.last)
          for (const auto& f : c.first) prev.follow.insert({l, f});
        prev.last = std::move(c.last);
      }
      r = std::move(prev);
      break;
    }
    case Pattern::Kind::Or:
    case Pattern::Kind::And: {
      // validated to be top-level with disjoint types; the operands stay
      // disconnected components of one automaton
      Flf a = build_flf(p.children[0]);
      Flf b = build_flf(p.children[1]);
      r.first = a.first;
      r.first.insert(b.first.begin(), b.first.end());
      r.last = a.last;
      r.last.insert(b.last.begin(), b.last.end());
      r.follow = a.follow;
      r.follow.insert(b.follow.begin(), b.follow.end());
      break;
    }
  }
  return r;
}

}  // namespace

QueryTemplate build_template(const Query& q) {
  QueryTemplate t;
  t.states = q.types;
  Flf flf = build_flf(q.pattern);
  t.edges = std::move(flf.follow);
  t.start = std::move(flf.first);
  t.end = std::move(flf.last);
  t.is_and = q.pattern.kind == Pattern::Kind::And;
  t.is_or = q.pattern.kind == Pattern::Kind::Or;
  for (const auto& ty : q.types) t.operand[ty] = 0;
  if (t.is_and || t.is_or) {
    std::vector<std::string> rhs;
    collect_types(q.pattern.children[1], rhs);
    for (const auto& ty : rhs) t.operand[ty] = 1;
  }
  return t;
}

std::set<std::string> MergedTemplate::pt(const std::string& type, const std::string& query_id) const {
  std::set<std::string> out;
  auto it = per_query.find(query_id);
  if (it == per_query.end()) return out;
  for (const auto& e : it->second.edges)
    if (e.second == type) out.insert(e.first);
  return out;
}

const std::set<std::string>& MergedTemplate::start_of(const std::string& query_id) const {
  return per_query.at(query_id).start;
}

const std::set<std::string>& MergedTemplate::end_of(const std::string& query_id) const {
  return per_query.at(query_id).end;
}

MergedTemplate build_merged_template(const std::vector<Query>& workload) {
  MergedTemplate m;
  for (const auto& q : workload) {
    QueryTemplate t = build_template(q);
    for (const auto& s : t.states) m.states.insert(s);
    for (const auto& e : t.edges) m.transitions[e].insert(q.id);
    m.per_query[q.id] = std::move(t);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Sharable sets and execution units
// ---------------------------------------------------------------------------

namespace {

// Aggregate-compatibility class key inside one Kleene type's candidate set.
// COUNT(*) only with COUNT(*), MIN/MAX only with the same aggregate over the
// same attribute, SUM/AVG over the same attribute with each other and with
// COUNT(E) of the same aggregated type.
std::string agg_class_key(const Query& q, const std::vector<const Query*>& candidates) {
  switch (q.agg.kind) {
    case AggKind::CountStar: return "#count*";
    case AggKind::Min: return "min:" + q.agg.type + "." + q.agg.attr;
    case AggKind::Max: return "max:" + q.agg.type + "." + q.agg.attr;
    case AggKind::Sum:
    case AggKind::Avg: return "sum:" + q.agg.type + "." + q.agg.attr;
    case AggKind::CountType: {
      // join the sum/avg class over the same type when it is unambiguous
      std::set<std::string> sum_attrs;
      for (const Query* c : candidates)
        if ((c->agg.kind == AggKind::Sum || c->agg.kind == AggKind::Avg) && c->agg.type == q.agg.type)
          sum_attrs.insert(c->agg.attr);
      if (sum_attrs.size() == 1) return "sum:" + q.agg.type + "." + *sum_attrs.begin();
      return "ecnt:" + q.agg.type;
    }
  }
  return "?";
}

std::string join_sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  std::string out;
  for (const auto& s : v) {
    out += s;
    out += ',';
  }
  return out;
}

}  // namespace

std::vector<SharableSet> find_sharable(const std::vector<Query>& workload) {
  std::vector<SharableSet> out;
  std::set<std::string> kleene_types;
  for (const auto& q : workload)
    for (const auto& t : q.kleene_types) kleene_types.insert(t);

  for (const auto& kt : kleene_types) {
    std::vector<const Query*> candidates;
    for (const auto& q : workload)
      if (std::find(q.kleene_types.begin(), q.kleene_types.end(), kt) != q.kleene_types.end())
        candidates.push_back(&q);
    if (candidates.size() < 2) continue;

    // Group by full compatibility key. Windows of integer sliding queries
    // always overlap on the timeline, so compatibility reduces to aggregates
    // and identical partitioning (grouping + equivalence attributes).
    std::map<std::string, std::vector<std::string>> groups;
    for (const Query* q : candidates) {
      std::vector<std::string> key_attrs = q->groupby;
      key_attrs.insert(key_attrs.end(), q->equivalence.begin(), q->equivalence.end());
      std::string key = agg_class_key(*q, candidates) + "|g:" + join_sorted(q->groupby) +
                        "|k:" + join_sorted(key_attrs);
      groups[key].push_back(q->id);
    }
    for (auto& [key, ids] : groups) {
      (void)key;
      if (ids.size() < 2) continue;
      std::sort(ids.begin(), ids.end());
      out.push_back(SharableSet{kt, ids});
    }
  }
  std::sort(out.begin(), out.end(), [](const SharableSet& a, const SharableSet& b) {
    if (a.kleene_type != b.kleene_type) return a.kleene_type < b.kleene_type;
    return a.query_ids < b.query_ids;
  });
  return out;
}

Time pane_of(const std::vector<const Query*>& queries) {
  Time g = 0;
  for (const Query* q : queries) {
    g = std::gcd(g, q->window_size);
    g = std::gcd(g, q->window_slide);
  }
  return g == 0 ? 1 : g;
}

bool event_matches(const Query& q, const Event& e) {
  if (std::find(q.types.begin(), q.types.end(), e.type) == q.types.end()) return false;
  for (const auto& p : q.locals) {
    if (p.type != e.type) continue;
    auto it = e.attrs.find(p.attr);
    if (it == e.attrs.end()) return false;
    if (!cmp_holds(it->second, p.cmp, p.constant)) return false;
  }
  return true;
}

bool adjacent_ok(const Query& q, const Event& prev, const Event& next) {
  if (prev.type != next.type) return true;
  for (const auto& p : q.adjacents) {
    if (p.type != prev.type) continue;
    auto nit = next.attrs.find(p.next_attr);
    auto pit = prev.attrs.find(p.prev_attr);
    if (nit == next.attrs.end() || pit == prev.attrs.end()) return false;
    if (!cmp_holds(nit->second, p.cmp, pit->second)) return false;
  }
  return true;
}

std::vector<Unit> build_units(const std::vector<Query>& workload) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < workload.size(); ++i) index[workload[i].id] = i;

  // union-find over queries, linked by shared sets
  std::vector<std::size_t> parent(workload.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](std::size_t a, std::size_t b) { parent[find(a)] = find(b); };

  std::vector<SharableSet> sets = find_sharable(workload);
  for (const auto& s : sets)
    for (std::size_t i = 1; i < s.query_ids.size(); ++i)
      unite(index.at(s.query_ids[0]), index.at(s.query_ids[i]));

  std::map<std::size_t, Unit> units;
  for (std::size_t i = 0; i < workload.size(); ++i)
    units[find(i)].query_ids.push_back(workload[i].id);

  std::vector<Unit> out;
  for (auto& [root, u] : units) {
    (void)root;
    std::sort(u.query_ids.begin(), u.query_ids.end());
    std::set<std::string> members(u.query_ids.begin(), u.query_ids.end());
    for (const auto& s : sets) {
      bool inside = true;
      for (const auto& id : s.query_ids)
        if (!members.count(id)) inside = false;
      if (inside) u.shared.push_back(s);
    }
    std::set<std::string> attrs;
    std::vector<const Query*> qs;
    for (const auto& id : u.query_ids) {
      const Query& q = workload[index.at(id)];
      qs.push_back(&q);
      attrs.insert(q.groupby.begin(), q.groupby.end());
      attrs.insert(q.equivalence.begin(), q.equivalence.end());
    }
    u.partition_attrs.assign(attrs.begin(), attrs.end());
    u.pane = pane_of(qs);
    out.push_back(std::move(u));
  }
  std::sort(out.begin(), out.end(),
            [](const Unit& a, const Unit& b) { return a.query_ids < b.query_ids; });
  return out;
}

}  // namespace hamlet
