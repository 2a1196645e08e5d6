#include "gsp/parser.hpp"

#include <cctype>
#include <cstdlib>
#include <set>
#include <sstream>

namespace gsp {

namespace {

enum class Tok { Ident, Int, Str, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  long long intVal = 0;
  int col = 0;
};

struct Line {
  int indent = 0;
  int lineNo = 0;
  std::vector<Token> toks;
};

struct ParseError {
  std::string msg;
  int line, col;
};

class Parser {
 public:
  explicit Parser(const std::string& src) { split_lines(src); }

  ParseResult run() {
    prescan();
    size_t i = 0;
    std::set<std::string> topNames;
    while (i < lines_.size()) {
      const Line& ln = lines_[i];
      if (ln.indent != 0) {
        diag("unexpected indentation", ln.lineNo, 1);
        ++i;
        continue;
      }
      try {
        StmtPtr s = parse_top(i);
        if (s) {
          std::string declared;
          if (s->kind == StmtKind::VarDef || s->kind == StmtKind::FuncDef ||
              s->kind == StmtKind::ClassDef)
            declared = s->name;
          if (!declared.empty()) {
            if (!topNames.insert(declared).second)
              diag_code("E-DUP-NAME", "duplicate top-level name '" + declared + "'", s->line, 1);
          }
          result_.program.stmts.push_back(s);
        }
      } catch (const ParseError& e) {
        diag(e.msg, e.line, e.col);
        // Skip past the failed statement and any block under it.
        int ind = lines_[i].indent;
        ++i;
        while (i < lines_.size() && lines_[i].indent > ind) ++i;
      }
    }
    validate_local_defs();
    return std::move(result_);
  }

 private:
  std::vector<Line> lines_;
  ParseResult result_;
  std::set<std::string> classNames_;
  std::set<std::string> moduleVarNames_;

  void diag(const std::string& msg, int line, int col) {
    result_.diags.push_back({"E-SYNTAX", msg, line, col});
  }
  void diag_code(const std::string& code, const std::string& msg, int line, int col) {
    result_.diags.push_back({code, msg, line, col});
  }

  [[noreturn]] void fail(const std::string& msg, int line, int col) {
    throw ParseError{msg, line, col};
  }

  void split_lines(const std::string& src) {
    int lineNo = 0;
    std::istringstream in(src);
    std::string raw;
    while (std::getline(in, raw)) {
      ++lineNo;
      if (!raw.empty() && raw.back() == '\r') raw.pop_back();
      size_t p = 0;
      while (p < raw.size() && raw[p] == ' ') ++p;
      if (p < raw.size() && raw[p] == '\t') {
        diag("tab indentation not allowed", lineNo, (int)p + 1);
        continue;
      }
      if (p == raw.size() || raw[p] == '#') continue;  // blank or comment
      if (p % 4 != 0) {
        diag("indentation must be a multiple of 4 spaces", lineNo, (int)p + 1);
        continue;
      }
      Line ln;
      ln.indent = (int)(p / 4);
      ln.lineNo = lineNo;
      tokenize(raw, p, lineNo, ln.toks);
      if (!ln.toks.empty()) lines_.push_back(std::move(ln));
    }
  }

  void tokenize(const std::string& s, size_t p, int lineNo, std::vector<Token>& out) {
    while (p < s.size()) {
      char c = s[p];
      if (c == ' ') {
        ++p;
        continue;
      }
      if (c == '#') break;
      int col = (int)p + 1;
      if (std::isalpha((unsigned char)c) || c == '_') {
        size_t q = p;
        while (q < s.size() && (std::isalnum((unsigned char)s[q]) || s[q] == '_')) ++q;
        out.push_back({Tok::Ident, s.substr(p, q - p), 0, col});
        p = q;
      } else if (std::isdigit((unsigned char)c) || (c == '-' && p + 1 < s.size() &&
                                                    std::isdigit((unsigned char)s[p + 1]))) {
        size_t q = p + 1;
        while (q < s.size() && std::isdigit((unsigned char)s[q])) ++q;
        std::string digits = s.substr(p, q - p);
        errno = 0;
        char* endp = nullptr;
        long long v = std::strtoll(digits.c_str(), &endp, 10);
        if (errno == ERANGE) {
          diag("integer literal out of 64-bit range", lineNo, col);
          v = 0;
        }
        out.push_back({Tok::Int, digits, v, col});
        p = q;
      } else if (c == '"') {
        std::string text;
        size_t q = p + 1;
        bool closed = false;
        while (q < s.size()) {
          if (s[q] == '\\') {
            if (q + 1 >= s.size()) break;
            char e = s[q + 1];
            if (e == '"') text += '"';
            else if (e == '\\') text += '\\';
            else if (e == 'n') text += '\n';
            else {
              diag(std::string("bad escape '\\") + e + "'", lineNo, (int)q + 1);
            }
            q += 2;
          } else if (s[q] == '"') {
            closed = true;
            ++q;
            break;
          } else {
            text += s[q++];
          }
        }
        if (!closed) diag("unterminated string literal", lineNo, col);
        Token t;
        t.kind = Tok::Str;
        t.text = text;
        t.col = col;
        out.push_back(t);
        p = q;
      } else if (c == '=' && p + 1 < s.size() && s[p + 1] == '=') {
        out.push_back({Tok::Punct, "==", 0, col});
        p += 2;
      } else if (c == '-' && p + 1 < s.size() && s[p + 1] == '>') {
        out.push_back({Tok::Punct, "->", 0, col});
        p += 2;
      } else if (std::string("()[]{}:,=.").find(c) != std::string::npos) {
        out.push_back({Tok::Punct, std::string(1, c), 0, col});
        ++p;
      } else {
        diag(std::string("bad character '") + c + "'", lineNo, col);
        ++p;
      }
    }
  }

  // Collect top-level class / module-variable names before full parsing so
  // that New-vs-Call and Assign-vs-LocalDef are decidable in one pass.
  void prescan() {
    for (const Line& ln : lines_) {
      if (ln.indent != 0 || ln.toks.empty()) continue;
      const auto& t = ln.toks;
      if (t[0].kind == Tok::Ident && t[0].text == "class" && t.size() > 1 &&
          t[1].kind == Tok::Ident)
        classNames_.insert(t[1].text);
      else if (t.size() > 2 && t[0].kind == Tok::Ident && t[0].text == "dyn" &&
               t[1].kind == Tok::Ident && t[1].text == "class" && t[2].kind == Tok::Ident)
        classNames_.insert(t[2].text);
      else if (t.size() > 1 && t[0].kind == Tok::Ident && t[1].kind == Tok::Punct &&
               (t[1].text == ":" || t[1].text == "=") && !is_keyword(t[0].text))
        moduleVarNames_.insert(t[0].text);
    }
  }

  static bool is_keyword(const std::string& s) {
    static const std::set<std::string> kw = {"def",   "class", "dyn",  "if",   "else",
                                             "while", "break", "pass", "return", "None",
                                             "True",  "False", "not",  "is"};
    return kw.count(s) > 0;
  }

  // ---- token cursor over one line ----
  struct Cur {
    const Line* ln;
    size_t i = 0;
    mutable Token endTok_{};
    const Token& peek() const {
      if (i >= ln->toks.size()) {
        endTok_ = Token{};
        endTok_.col = ln->toks.empty() ? 1 : ln->toks.back().col + 1;
        return endTok_;
      }
      return ln->toks[i];
    }
    const Token& next() {
      const Token& t = peek();
      if (i < ln->toks.size()) ++i;
      return t;
    }
    bool at_end() const { return i >= ln->toks.size(); }
  };

  bool is_punct(const Token& t, const char* p) { return t.kind == Tok::Punct && t.text == p; }
  bool is_ident(const Token& t, const char* w) { return t.kind == Tok::Ident && t.text == w; }

  void expect_punct(Cur& c, const char* p, int lineNo) {
    if (!is_punct(c.peek(), p))
      fail(std::string("expected '") + p + "'", lineNo, c.peek().col);
    c.next();
  }

  std::string expect_name(Cur& c, int lineNo, const char* what) {
    const Token& t = c.peek();
    if (t.kind != Tok::Ident || is_keyword(t.text))
      fail(std::string("expected ") + what, lineNo, t.col);
    return c.next().text;
  }

  void expect_line_end(Cur& c, int lineNo) {
    if (!c.at_end()) fail("unexpected trailing tokens", lineNo, c.peek().col);
  }

  // ---- types ----
  Type parse_type(Cur& c, int lineNo) {
    const Token& t = c.peek();
    if (t.kind != Tok::Ident) fail("expected a type", lineNo, t.col);
    std::string w = c.next().text;
    if (w == "dyn") return Type::dyn();
    if (w == "None") return Type::none();
    if (w == "int") return Type::intT();
    if (w == "bool") return Type::boolT();
    if (w == "str") return Type::strT();
    if (w == "Dict") {
      // Bare `Dict` is the evaluation type; it also appears in checked-dict
      // parameters, so the surface grammar admits it.
      if (!is_punct(c.peek(), "[")) return Type::dict();
      expect_punct(c, "[", lineNo);
      Type k = parse_type(c, lineNo);
      expect_punct(c, ",", lineNo);
      Type v = parse_type(c, lineNo);
      expect_punct(c, "]", lineNo);
      return Type::dict(k, v);
    }
    if (w == "CheckedDict") {
      expect_punct(c, "[", lineNo);
      Type k = parse_type(c, lineNo);
      expect_punct(c, ",", lineNo);
      Type v = parse_type(c, lineNo);
      expect_punct(c, "]", lineNo);
      return Type::checkedDict(k, v);
    }
    if (w == "Optional") {
      expect_punct(c, "[", lineNo);
      Type s = parse_type(c, lineNo);
      expect_punct(c, "]", lineNo);
      return Type::unionOf({Type::none(), s});  // desugared at parse time
    }
    if (w == "Union") {
      expect_punct(c, "[", lineNo);
      std::vector<Type> members;
      members.push_back(parse_type(c, lineNo));
      while (is_punct(c.peek(), ",")) {
        c.next();
        members.push_back(parse_type(c, lineNo));
      }
      expect_punct(c, "]", lineNo);
      return Type::unionOf(std::move(members));
    }
    if (is_keyword(w)) fail("expected a type", lineNo, t.col);
    return Type::cls(w);  // user class name
  }

  // ---- expressions ----
  ExprPtr parse_expr(Cur& c, int lineNo) {
    if (is_ident(c.peek(), "not")) {
      int col = c.next().col;
      ExprPtr inner = parse_expr(c, lineNo);
      ExprPtr e = make_expr(ExprKind::Not, lineNo, col);
      e->args.push_back(inner);
      return e;
    }
    return parse_cmp(c, lineNo);
  }

  ExprPtr parse_cmp(Cur& c, int lineNo) {
    ExprPtr lhs = parse_postfix(c, lineNo);
    if (is_punct(c.peek(), "==")) {
      int col = c.next().col;
      ExprPtr rhs = parse_postfix(c, lineNo);
      ExprPtr e = make_expr(ExprKind::Eq, lineNo, col);
      e->args.push_back(lhs);
      e->args.push_back(rhs);
      return e;
    }
    if (is_ident(c.peek(), "is")) {
      int col = c.next().col;
      bool negated = false;
      if (is_ident(c.peek(), "not")) {
        c.next();
        negated = true;
      }
      if (!is_ident(c.peek(), "None")) fail("expected 'None' after 'is'", lineNo, c.peek().col);
      c.next();
      ExprPtr e = make_expr(ExprKind::IsNone, lineNo, col);
      e->args.push_back(lhs);
      if (!negated) return e;
      ExprPtr n = make_expr(ExprKind::Not, lineNo, col);
      n->args.push_back(e);
      return n;
    }
    return lhs;
  }

  ExprPtr parse_postfix(Cur& c, int lineNo) {
    ExprPtr e = parse_atom(c, lineNo);
    while (true) {
      if (is_punct(c.peek(), "[")) {
        int col = c.next().col;
        ExprPtr key = parse_expr(c, lineNo);
        expect_punct(c, "]", lineNo);
        ExprPtr sub = make_expr(ExprKind::Subscript, lineNo, col);
        sub->args.push_back(e);
        sub->args.push_back(key);
        e = sub;
      } else if (is_punct(c.peek(), ".")) {
        int col = c.next().col;
        std::string member = expect_name(c, lineNo, "member name");
        if (is_punct(c.peek(), "(")) {
          c.next();
          ExprPtr call = make_expr(ExprKind::MethodCall, lineNo, col);
          call->name = member;
          call->args.push_back(e);
          if (!is_punct(c.peek(), ")")) call->args.push_back(parse_expr(c, lineNo));
          expect_punct(c, ")", lineNo);
          e = call;
        } else {
          ExprPtr get = make_expr(ExprKind::FieldGet, lineNo, col);
          get->name = member;
          get->args.push_back(e);
          e = get;
        }
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_atom(Cur& c, int lineNo) {
    const Token& t = c.peek();
    int col = t.col;
    if (t.kind == Tok::Int) {
      ExprPtr e = make_expr(ExprKind::IntLit, lineNo, col);
      e->intVal = c.next().intVal;
      return e;
    }
    if (t.kind == Tok::Str) {
      ExprPtr e = make_expr(ExprKind::StrLit, lineNo, col);
      e->strVal = c.next().text;
      return e;
    }
    if (is_punct(t, "(")) {
      c.next();
      ExprPtr e = parse_expr(c, lineNo);
      expect_punct(c, ")", lineNo);
      return e;
    }
    if (is_punct(t, "{")) return parse_dict_lit(c, lineNo);
    if (t.kind != Tok::Ident) fail("expected an expression", lineNo, col);
    std::string w = c.next().text;
    if (w == "None") return make_expr(ExprKind::NoneLit, lineNo, col);
    if (w == "True" || w == "False") {
      ExprPtr e = make_expr(ExprKind::BoolLit, lineNo, col);
      e->boolVal = (w == "True");
      return e;
    }
    if (w == "CheckedDict") {
      expect_punct(c, "[", lineNo);
      Type k = parse_type(c, lineNo);
      expect_punct(c, ",", lineNo);
      Type v = parse_type(c, lineNo);
      expect_punct(c, "]", lineNo);
      expect_punct(c, "(", lineNo);
      ExprPtr inner = parse_dict_lit(c, lineNo);
      expect_punct(c, ")", lineNo);
      inner->kind = ExprKind::ChkDictLit;
      inner->keyAnn = k;
      inner->valAnn = v;
      inner->line = lineNo;
      inner->col = col;
      return inner;
    }
    if (is_keyword(w)) fail("unexpected keyword '" + w + "'", lineNo, col);
    if (is_punct(c.peek(), "(")) {
      c.next();
      bool isNew = classNames_.count(w) > 0;
      ExprPtr e = make_expr(isNew ? ExprKind::New : ExprKind::Call, lineNo, col);
      e->name = w;
      if (!is_punct(c.peek(), ")")) e->args.push_back(parse_expr(c, lineNo));
      expect_punct(c, ")", lineNo);
      return e;
    }
    ExprPtr e = make_expr(ExprKind::Var, lineNo, col);
    e->name = w;
    return e;
  }

  ExprPtr parse_dict_lit(Cur& c, int lineNo) {
    int col = c.peek().col;
    expect_punct(c, "{", lineNo);
    ExprPtr e = make_expr(ExprKind::DictLit, lineNo, col);
    if (!is_punct(c.peek(), "}")) {
      while (true) {
        e->args.push_back(parse_expr(c, lineNo));
        expect_punct(c, ":", lineNo);
        e->args.push_back(parse_expr(c, lineNo));
        if (!is_punct(c.peek(), ",")) break;
        c.next();
      }
    }
    expect_punct(c, "}", lineNo);
    return e;
  }

  // ---- statements ----
  StmtPtr parse_top(size_t& i) {
    const Line& ln = lines_[i];
    Cur c{&ln};
    const Token& t0 = c.peek();
    if (is_ident(t0, "def")) return parse_func(i);
    if (is_ident(t0, "class") || (is_ident(t0, "dyn"))) return parse_class(i);
    if (is_ident(t0, "break") || is_ident(t0, "while") || is_ident(t0, "if") ||
        is_ident(t0, "return") || is_ident(t0, "pass") || is_ident(t0, "else"))
      fail(is_ident(t0, "break") ? "break outside loop"
                                 : "statement not allowed at top level",
           ln.lineNo, t0.col);
    // name : type = expr  |  name = expr  |  expression statement
    if (t0.kind == Tok::Ident && !is_keyword(t0.text) && ln.toks.size() > 1 &&
        ln.toks[1].kind == Tok::Punct && (ln.toks[1].text == ":" || ln.toks[1].text == "=")) {
      std::string name = c.next().text;
      StmtPtr s = make_stmt(StmtKind::VarDef, ln.lineNo, t0.col);
      s->name = name;
      if (is_punct(c.peek(), ":")) {
        c.next();
        s->ann = parse_type(c, ln.lineNo);
        s->hasAnn = true;
      }
      expect_punct(c, "=", ln.lineNo);
      s->expr = parse_expr(c, ln.lineNo);
      expect_line_end(c, ln.lineNo);
      ++i;
      return s;
    }
    StmtPtr s = parse_expr_or_store(c, ln.lineNo);
    expect_line_end(c, ln.lineNo);
    ++i;
    return s;
  }

  // expr, expr[k] = v, expr.x = v — all surface as ExprStmt.
  StmtPtr parse_expr_or_store(Cur& c, int lineNo) {
    ExprPtr e = parse_expr(c, lineNo);
    if (is_punct(c.peek(), "=")) {
      int col = c.next().col;
      ExprPtr value = parse_expr(c, lineNo);
      if (e->kind == ExprKind::Subscript) {
        ExprPtr set = make_expr(ExprKind::SubscriptSet, lineNo, col);
        set->args = {e->args[0], e->args[1], value};
        e = set;
      } else if (e->kind == ExprKind::FieldGet) {
        ExprPtr set = make_expr(ExprKind::FieldSet, lineNo, col);
        set->name = e->name;
        set->args = {e->args[0], value};
        e = set;
      } else {
        fail("cannot assign to this expression", lineNo, col);
      }
    }
    StmtPtr s = make_stmt(StmtKind::ExprStmt, lineNo, e->col);
    s->expr = e;
    return s;
  }

  std::vector<StmtPtr> parse_block(size_t& i, int indent, std::set<std::string>& locals,
                                   bool inLoop) {
    std::vector<StmtPtr> out;
    if (i >= lines_.size() || lines_[i].indent < indent)
      fail("expected an indented block", i > 0 ? lines_[i - 1].lineNo : 1, 1);
    while (i < lines_.size() && lines_[i].indent == indent) {
      try {
        out.push_back(parse_body_stmt(i, indent, locals, inLoop));
      } catch (const ParseError& e) {
        diag(e.msg, e.line, e.col);
        int ind = lines_[i].indent;
        ++i;
        while (i < lines_.size() && lines_[i].indent > ind) ++i;
      }
    }
    if (i < lines_.size() && lines_[i].indent > indent)
      fail("unexpected indentation", lines_[i].lineNo, 1);
    return out;
  }

  StmtPtr parse_body_stmt(size_t& i, int indent, std::set<std::string>& locals, bool inLoop) {
    const Line& ln = lines_[i];
    Cur c{&ln};
    const Token& t0 = c.peek();
    if (is_ident(t0, "pass")) {
      c.next();
      expect_line_end(c, ln.lineNo);
      ++i;
      return make_stmt(StmtKind::Pass, ln.lineNo, t0.col);
    }
    if (is_ident(t0, "break")) {
      c.next();
      expect_line_end(c, ln.lineNo);
      if (!inLoop) fail("break outside loop", ln.lineNo, t0.col);
      ++i;
      return make_stmt(StmtKind::Break, ln.lineNo, t0.col);
    }
    if (is_ident(t0, "return")) {
      c.next();
      StmtPtr s = make_stmt(StmtKind::Return, ln.lineNo, t0.col);
      if (!c.at_end()) {
        s->expr = parse_expr(c, ln.lineNo);
        s->hasExpr = true;
        expect_line_end(c, ln.lineNo);
      }
      ++i;
      return s;
    }
    if (is_ident(t0, "if")) {
      c.next();
      StmtPtr s = make_stmt(StmtKind::If, ln.lineNo, t0.col);
      s->expr = parse_expr(c, ln.lineNo);
      expect_punct(c, ":", ln.lineNo);
      expect_line_end(c, ln.lineNo);
      ++i;
      s->body = parse_block(i, indent + 1, locals, inLoop);
      if (i < lines_.size() && lines_[i].indent == indent &&
          !lines_[i].toks.empty() && is_ident(lines_[i].toks[0], "else")) {
        Cur ec{&lines_[i]};
        ec.next();
        expect_punct(ec, ":", lines_[i].lineNo);
        expect_line_end(ec, lines_[i].lineNo);
        ++i;
        s->orelse = parse_block(i, indent + 1, locals, inLoop);
      }
      return s;
    }
    if (is_ident(t0, "else")) fail("'else' without matching 'if'", ln.lineNo, t0.col);
    if (is_ident(t0, "while")) {
      c.next();
      StmtPtr s = make_stmt(StmtKind::While, ln.lineNo, t0.col);
      s->expr = parse_expr(c, ln.lineNo);
      expect_punct(c, ":", ln.lineNo);
      expect_line_end(c, ln.lineNo);
      ++i;
      s->body = parse_block(i, indent + 1, locals, true);
      return s;
    }
    if (is_ident(t0, "def") || is_ident(t0, "class"))
      fail("nested definitions are not allowed", ln.lineNo, t0.col);
    // name : type = expr | name = expr | expr | store forms
    if (t0.kind == Tok::Ident && !is_keyword(t0.text) && ln.toks.size() > 1 &&
        ln.toks[1].kind == Tok::Punct && (ln.toks[1].text == ":" || ln.toks[1].text == "=")) {
      std::string name = c.next().text;
      bool annotated = is_punct(c.peek(), ":");
      StmtPtr s;
      if (annotated) {
        s = make_stmt(StmtKind::LocalDef, ln.lineNo, t0.col);
        s->name = name;
        c.next();
        s->ann = parse_type(c, ln.lineNo);
        s->hasAnn = true;
        if (locals.count(name))
          fail("duplicate local definition of '" + name + "'", ln.lineNo, t0.col);
        locals.insert(name);
      } else if (locals.count(name) || moduleVarNames_.count(name)) {
        s = make_stmt(StmtKind::Assign, ln.lineNo, t0.col);
        s->name = name;
      } else {
        s = make_stmt(StmtKind::LocalDef, ln.lineNo, t0.col);
        s->name = name;
        locals.insert(name);
      }
      expect_punct(c, "=", ln.lineNo);
      s->expr = parse_expr(c, ln.lineNo);
      expect_line_end(c, ln.lineNo);
      ++i;
      return s;
    }
    StmtPtr s = parse_expr_or_store(c, ln.lineNo);
    expect_line_end(c, ln.lineNo);
    ++i;
    return s;
  }

  StmtPtr parse_func(size_t& i) {
    const Line& ln = lines_[i];
    Cur c{&ln};
    c.next();  // def
    StmtPtr s = make_stmt(StmtKind::FuncDef, ln.lineNo, 1);
    s->name = expect_name(c, ln.lineNo, "function name");
    expect_punct(c, "(", ln.lineNo);
    s->param.name = expect_name(c, ln.lineNo, "parameter name");
    if (is_punct(c.peek(), ":")) {
      c.next();
      s->param.ann = parse_type(c, ln.lineNo);
    }
    expect_punct(c, ")", ln.lineNo);
    if (is_punct(c.peek(), "->")) {
      c.next();
      s->ann = parse_type(c, ln.lineNo);
    }
    expect_punct(c, ":", ln.lineNo);
    expect_line_end(c, ln.lineNo);
    ++i;
    std::set<std::string> locals{s->param.name};
    s->body = parse_block(i, 1, locals, false);
    return s;
  }

  StmtPtr parse_class(size_t& i) {
    const Line& ln = lines_[i];
    Cur c{&ln};
    StmtPtr s = make_stmt(StmtKind::ClassDef, ln.lineNo, 1);
    if (is_ident(c.peek(), "dyn")) {
      c.next();
      s->dynClass = true;
    }
    if (!is_ident(c.peek(), "class")) fail("expected 'class'", ln.lineNo, c.peek().col);
    c.next();
    s->name = expect_name(c, ln.lineNo, "class name");
    expect_punct(c, "(", ln.lineNo);
    s->parent = expect_name(c, ln.lineNo, "parent class name");
    expect_punct(c, ")", ln.lineNo);
    expect_punct(c, ":", ln.lineNo);
    expect_line_end(c, ln.lineNo);
    ++i;
    if (i >= lines_.size() || lines_[i].indent != 1)
      fail("expected an indented class body", ln.lineNo, 1);
    // Field definition first.
    {
      const Line& fl = lines_[i];
      Cur fc{&fl};
      const Token& ft = fc.peek();
      if (ft.kind != Tok::Ident || is_keyword(ft.text))
        fail("class body must start with a field definition", fl.lineNo, ft.col);
      s->fieldName = fc.next().text;
      if (is_punct(fc.peek(), ":")) {
        fc.next();
        s->fieldAnn = parse_type(fc, fl.lineNo);
      }
      expect_punct(fc, "=", fl.lineNo);
      s->fieldDefault = parse_expr(fc, fl.lineNo);
      expect_line_end(fc, fl.lineNo);
      ++i;
    }
    // Methods.
    while (i < lines_.size() && lines_[i].indent == 1 && !lines_[i].toks.empty() &&
           is_ident(lines_[i].toks[0], "def")) {
      const Line& ml = lines_[i];
      Cur mc{&ml};
      mc.next();
      MethodDef m;
      m.line = ml.lineNo;
      m.name = expect_name(mc, ml.lineNo, "method name");
      expect_punct(mc, "(", ml.lineNo);
      std::string self = expect_name(mc, ml.lineNo, "'self'");
      if (self != "self") fail("first method parameter must be 'self'", ml.lineNo, 1);
      if (is_punct(mc.peek(), ",")) {
        mc.next();
        m.hasParam = true;
        m.param.name = expect_name(mc, ml.lineNo, "parameter name");
        if (is_punct(mc.peek(), ":")) {
          mc.next();
          m.param.ann = parse_type(mc, ml.lineNo);
        }
      }
      expect_punct(mc, ")", ml.lineNo);
      if (is_punct(mc.peek(), "->")) {
        mc.next();
        m.ret = parse_type(mc, ml.lineNo);
      }
      expect_punct(mc, ":", ml.lineNo);
      expect_line_end(mc, ml.lineNo);
      ++i;
      std::set<std::string> locals{"self"};
      if (m.hasParam) locals.insert(m.param.name);
      m.body = parse_block(i, 2, locals, false);
      s->methods.push_back(std::move(m));
    }
    if (i < lines_.size() && lines_[i].indent >= 1 &&
        !(lines_[i].indent == 0))
      fail("unexpected statement in class body", lines_[i].lineNo, 1);
    return s;
  }

  // Enforces "a local name is defined before any Assign or read of it":
  // a name read before its LocalDef, in lexical pre-order, is an error.
  void validate_local_defs() {
    for (const StmtPtr& s : result_.program.stmts) {
      if (s->kind == StmtKind::FuncDef) {
        check_body_uses(s->body, {s->param.name});
      } else if (s->kind == StmtKind::ClassDef) {
        for (const MethodDef& m : s->methods) {
          std::set<std::string> init{"self"};
          if (m.hasParam) init.insert(m.param.name);
          check_body_uses(m.body, init);
        }
      }
    }
  }

  void collect_local_defs(const std::vector<StmtPtr>& body, std::set<std::string>& out) {
    for (const StmtPtr& s : body) {
      if (s->kind == StmtKind::LocalDef) out.insert(s->name);
      collect_local_defs(s->body, out);
      collect_local_defs(s->orelse, out);
    }
  }

  void check_body_uses(const std::vector<StmtPtr>& body, std::set<std::string> defined) {
    std::set<std::string> allLocals = defined;
    collect_local_defs(body, allLocals);
    walk_block(body, defined, allLocals);
  }

  void walk_block(const std::vector<StmtPtr>& body, std::set<std::string>& defined,
                  const std::set<std::string>& allLocals) {
    for (const StmtPtr& s : body) {
      if (s->expr) walk_expr(*s->expr, defined, allLocals, s->line);
      if (s->kind == StmtKind::LocalDef) defined.insert(s->name);
      walk_block(s->body, defined, allLocals);
      walk_block(s->orelse, defined, allLocals);
    }
  }

  void walk_expr(const Expr& e, const std::set<std::string>& defined,
                 const std::set<std::string>& allLocals, int line) {
    if (e.kind == ExprKind::Var && allLocals.count(e.name) && !defined.count(e.name) &&
        !moduleVarNames_.count(e.name))
      diag("use of local '" + e.name + "' before definition", line, e.col);
    for (const ExprPtr& c : e.args) walk_expr(*c, defined, allLocals, line);
  }
};

}  // namespace

ParseResult parse(const std::string& source) { return Parser(source).run(); }

// ---------------- unparser ----------------

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\\\"";
    else if (c == '\\') out += "\\\\";
    else if (c == '\n') out += "\\n";
    else out += c;
  }
  return out + "\"";
}

void emit_expr(const Expr& e, std::string& out) {
  switch (e.kind) {
    case ExprKind::Var: out += e.name; break;
    case ExprKind::NoneLit: out += "None"; break;
    case ExprKind::IntLit: out += std::to_string(e.intVal); break;
    case ExprKind::BoolLit: out += e.boolVal ? "True" : "False"; break;
    case ExprKind::StrLit: out += quote(e.strVal); break;
    case ExprKind::Call:
    case ExprKind::New:
      out += e.name;
      out += "(";
      if (!e.args.empty()) emit_expr(*e.args[0], out);
      out += ")";
      break;
    case ExprKind::DictLit:
    case ExprKind::ChkDictLit: {
      if (e.kind == ExprKind::ChkDictLit) {
        out += "CheckedDict[" + to_string(e.keyAnn) + ", " + to_string(e.valAnn) + "](";
      }
      out += "{";
      for (size_t i = 0; i + 1 < e.args.size(); i += 2) {
        if (i) out += ", ";
        emit_expr(*e.args[i], out);
        out += ": ";
        emit_expr(*e.args[i + 1], out);
      }
      out += "}";
      if (e.kind == ExprKind::ChkDictLit) out += ")";
      break;
    }
    case ExprKind::Subscript:
      emit_expr(*e.args[0], out);
      out += "[";
      emit_expr(*e.args[1], out);
      out += "]";
      break;
    case ExprKind::SubscriptSet:
      emit_expr(*e.args[0], out);
      out += "[";
      emit_expr(*e.args[1], out);
      out += "] = ";
      emit_expr(*e.args[2], out);
      break;
    case ExprKind::FieldGet:
      emit_expr(*e.args[0], out);
      out += "." + e.name;
      break;
    case ExprKind::FieldSet:
      emit_expr(*e.args[0], out);
      out += "." + e.name + " = ";
      emit_expr(*e.args[1], out);
      break;
    case ExprKind::MethodCall:
      emit_expr(*e.args[0], out);
      out += "." + e.name + "(";
      if (e.args.size() > 1) emit_expr(*e.args[1], out);
      out += ")";
      break;
    case ExprKind::IsNone:
      out += "(";
      emit_expr(*e.args[0], out);
      out += ") is None";
      break;
    case ExprKind::Eq:
      out += "(";
      emit_expr(*e.args[0], out);
      out += ") == (";
      emit_expr(*e.args[1], out);
      out += ")";
      break;
    case ExprKind::Not:
      out += "not (";
      emit_expr(*e.args[0], out);
      out += ")";
      break;
  }
}

void emit_block(const std::vector<StmtPtr>& body, int indent, std::string& out);

void emit_stmt(const Stmt& s, int indent, std::string& out) {
  std::string pad(indent * 4, ' ');
  switch (s.kind) {
    case StmtKind::VarDef:
    case StmtKind::LocalDef:
      out += pad + s.name;
      if (s.hasAnn) out += ": " + to_string(s.ann);
      out += " = ";
      emit_expr(*s.expr, out);
      out += "\n";
      break;
    case StmtKind::Assign:
      out += pad + s.name + " = ";
      emit_expr(*s.expr, out);
      out += "\n";
      break;
    case StmtKind::ExprStmt:
      out += pad;
      emit_expr(*s.expr, out);
      out += "\n";
      break;
    case StmtKind::If:
      out += pad + "if ";
      emit_expr(*s.expr, out);
      out += ":\n";
      emit_block(s.body, indent + 1, out);
      if (!s.orelse.empty()) {
        out += pad + "else:\n";
        emit_block(s.orelse, indent + 1, out);
      }
      break;
    case StmtKind::While:
      out += pad + "while ";
      emit_expr(*s.expr, out);
      out += ":\n";
      emit_block(s.body, indent + 1, out);
      break;
    case StmtKind::Break: out += pad + "break\n"; break;
    case StmtKind::Pass: out += pad + "pass\n"; break;
    case StmtKind::Return:
      out += pad + "return";
      if (s.hasExpr) {
        out += " ";
        emit_expr(*s.expr, out);
      }
      out += "\n";
      break;
    case StmtKind::FuncDef:
      out += pad + "def " + s.name + "(" + s.param.name + ": " + to_string(s.param.ann) +
             ") -> " + to_string(s.ann) + ":\n";
      emit_block(s.body, indent + 1, out);
      break;
    case StmtKind::ClassDef:
      out += pad + std::string(s.dynClass ? "dyn " : "") + "class " + s.name + "(" + s.parent +
             "):\n";
      out += pad + "    " + s.fieldName + ": " + to_string(s.fieldAnn) + " = ";
      emit_expr(*s.fieldDefault, out);
      out += "\n";
      for (const MethodDef& m : s.methods) {
        out += pad + "    def " + m.name + "(self";
        if (m.hasParam) out += ", " + m.param.name + ": " + to_string(m.param.ann);
        out += ") -> " + to_string(m.ret) + ":\n";
        emit_block(m.body, indent + 2, out);
      }
      break;
  }
}

void emit_block(const std::vector<StmtPtr>& body, int indent, std::string& out) {
  if (body.empty()) {
    out += std::string(indent * 4, ' ') + "pass\n";
    return;
  }
  for (const StmtPtr& s : body) emit_stmt(*s, indent, out);
}

}  // namespace

std::string unparse_expr(const Expr& e) {
  std::string out;
  emit_expr(e, out);
  return out;
}

std::string unparse(const SurfaceProgram& p) {
  std::string out;
  for (const StmtPtr& s : p.stmts) emit_stmt(*s, 0, out);
  return out;
}

}  // namespace gsp
