#include "parser.hpp"

#include <cctype>
#include <functional>
#include <optional>
#include <sstream>

namespace tq {

std::string ParseError::str() const {
  std::ostringstream os;
  os << "parse error at " << line << ":" << col << ": " << message;
  if (!expected.empty()) os << " (expected " << expected << ")";
  return os.str();
}

namespace {

enum class Tok : uint8_t {
  Ident,
  LParen,
  RParen,
  LBracket,
  RBracket,
  LBrace,
  RBrace,
  Lt,
  Gt,
  Comma,
  Dot,
  Colon,
  Eq,
  Bar,
  Bang,
  Caret,
  Star,
  Semi,
  Union,  // \/
  Hash,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int col = 1;
  bool glued = false;  // no whitespace between this token and the previous
};

struct Lexer {
  std::vector<Token> toks;
  std::optional<ParseError> error;

  explicit Lexer(const std::string& src) {
    int line = 1, col = 1;
    size_t i = 0;
    bool gap = true;
    auto push = [&](Tok k, std::string text, int l, int c) {
      Token t;
      t.kind = k;
      t.text = std::move(text);
      t.line = l;
      t.col = c;
      t.glued = !gap;
      toks.push_back(std::move(t));
      gap = false;
    };
    while (i < src.size()) {
      char ch = src[i];
      if (ch == '\n') {
        ++line;
        col = 1;
        ++i;
        gap = true;
        continue;
      }
      if (isspace(static_cast<unsigned char>(ch))) {
        ++i;
        ++col;
        gap = true;
        continue;
      }
      if (ch == '#') {
        // '#' glued to the previous ident and followed by digits is a
        // session index; otherwise it starts a comment.
        bool index = !gap && !toks.empty() && toks.back().kind == Tok::Ident &&
                     i + 1 < src.size() && isdigit(static_cast<unsigned char>(src[i + 1]));
        if (index) {
          push(Tok::Hash, "#", line, col);
          ++i;
          ++col;
          continue;
        }
        while (i < src.size() && src[i] != '\n') ++i;
        continue;
      }
      int l = line, c = col;
      if (isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '\'') {
        std::string text;
        while (i < src.size() && (isalnum(static_cast<unsigned char>(src[i])) ||
                                  src[i] == '_' || src[i] == '\'')) {
          text += src[i++];
          ++col;
        }
        push(Tok::Ident, std::move(text), l, c);
        continue;
      }
      if (ch == '\\' && i + 1 < src.size() && src[i + 1] == '/') {
        push(Tok::Union, "\\/", l, c);
        i += 2;
        col += 2;
        continue;
      }
      Tok k;
      switch (ch) {
        case '(': k = Tok::LParen; break;
        case ')': k = Tok::RParen; break;
        case '[': k = Tok::LBracket; break;
        case ']': k = Tok::RBracket; break;
        case '{': k = Tok::LBrace; break;
        case '}': k = Tok::RBrace; break;
        case '<': k = Tok::Lt; break;
        case '>': k = Tok::Gt; break;
        case ',': k = Tok::Comma; break;
        case '.': k = Tok::Dot; break;
        case ':': k = Tok::Colon; break;
        case '=': k = Tok::Eq; break;
        case '|': k = Tok::Bar; break;
        case '!': k = Tok::Bang; break;
        case '^': k = Tok::Caret; break;
        case '*': k = Tok::Star; break;
        case ';': k = Tok::Semi; break;
        default: {
          error = ParseError{l, c, std::string("unexpected character '") + ch + "'", ""};
          return;
        }
      }
      push(k, std::string(1, ch), l, c);
      ++i;
      ++col;
    }
    Token end;
    end.kind = Tok::End;
    end.line = line;
    end.col = col;
    toks.push_back(end);
  }
};

const char* tok_name(Tok k) {
  switch (k) {
    case Tok::Ident: return "identifier";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::LBrace: return "'{'";
    case Tok::RBrace: return "'}'";
    case Tok::Lt: return "'<'";
    case Tok::Gt: return "'>'";
    case Tok::Comma: return "','";
    case Tok::Dot: return "'.'";
    case Tok::Colon: return "':'";
    case Tok::Eq: return "'='";
    case Tok::Bar: return "'|'";
    case Tok::Bang: return "'!'";
    case Tok::Caret: return "'^'";
    case Tok::Star: return "'*'";
    case Tok::Semi: return "';'";
    case Tok::Union: return "'\\/'";
    case Tok::Hash: return "'#'";
    case Tok::End: return "end of input";
  }
  return "?";
}

// Identifier resolution environment while parsing a process.
struct Scope {
  std::map<std::string, Atom>* globals = nullptr;  // constants, freenames, keys
  std::vector<std::pair<std::string, Atom>> locals; // nonces and variables in scope
  std::map<std::string, int>* fresh_counter = nullptr;
  std::vector<std::pair<Atom, NonceAnnotation>>* all_binders = nullptr;
  // Key declarations may reference keys declared later and nonces bound in
  // the processes; inside key types unknown identifiers become provisional
  // atoms of the kind the position dictates, checked after parsing.
  bool in_key_type = false;
  std::map<std::string, Atom>* provisional = nullptr;

  const Atom* lookup(const std::string& name) const {
    for (auto it = locals.rbegin(); it != locals.rend(); ++it)
      if (it->first == name) return &it->second;
    auto g = globals->find(name);
    if (g != globals->end()) return &g->second;
    return nullptr;
  }
};

struct Parser {
  std::vector<Token> toks;
  size_t pos = 0;
  std::optional<ParseError> err;

  const Token& peek(int off = 0) const {
    size_t p = pos + off;
    if (p >= toks.size()) p = toks.size() - 1;
    return toks[p];
  }
  const Token& cur() const { return peek(); }
  void advance() {
    if (pos + 1 < toks.size()) ++pos;
  }
  bool at(Tok k) const { return cur().kind == k; }
  bool at_ident(const char* s) const { return at(Tok::Ident) && cur().text == s; }

  bool fail(const std::string& msg, const std::string& expected = "") {
    if (!err) err = ParseError{cur().line, cur().col, msg, expected};
    return false;
  }
  bool expect(Tok k) {
    if (!at(k)) return fail("found " + std::string(tok_name(cur().kind)), tok_name(k));
    advance();
    return true;
  }
  bool expect_ident(const char* s) {
    if (!at_ident(s))
      return fail("found " + std::string(tok_name(cur().kind)) +
                      (cur().kind == Tok::Ident ? " '" + cur().text + "'" : ""),
                  std::string("'") + s + "'");
    advance();
    return true;
  }

  // ---- terms ----

  bool parse_atom_ref(const Scope& sc, Atom& out, AtomKind hint = AtomKind::Constant,
                      bool allow_provisional = false) {
    if (!at(Tok::Ident)) return fail("found " + std::string(tok_name(cur().kind)), "a term");
    std::string name = cur().text;
    int line = cur().line, col = cur().col;
    advance();
    const Atom* a = sc.lookup(name);
    if (!a && allow_provisional && sc.in_key_type && sc.provisional) {
      auto it = sc.provisional->find(name);
      if (it == sc.provisional->end())
        it = sc.provisional->emplace(name, make_atom(hint, name)).first;
      a = &it->second;
    }
    if (!a) {
      err = ParseError{line, col, "undeclared identifier '" + name + "'", ""};
      return false;
    }
    out = *a;
    if (at(Tok::Hash)) {
      advance();
      if (!at(Tok::Ident)) return fail("expected index digits after '#'");
      out.session = std::atoi(cur().text.c_str());
      advance();
    }
    return true;
  }

  bool parse_term(const Scope& sc, Term& out) {
    if (at(Tok::Lt)) {
      advance();
      Term a, b;
      if (!parse_term(sc, a)) return false;
      if (!expect(Tok::Comma)) return false;
      if (!parse_term(sc, b)) return false;
      // n-tuples are right-nested pairs
      std::vector<Term> more;
      while (at(Tok::Comma)) {
        advance();
        Term c;
        if (!parse_term(sc, c)) return false;
        more.push_back(std::move(c));
      }
      if (!expect(Tok::Gt)) return false;
      Term t = more.empty() ? b : [&] {
        Term acc = more.back();
        for (size_t i = more.size() - 1; i-- > 0;) acc = Term::pair(more[i], acc);
        return Term::pair(b, acc);
      }();
      out = Term::pair(a, t);
      return true;
    }
    if (!at(Tok::Ident)) return fail("found " + std::string(tok_name(cur().kind)), "a term");
    std::string head = cur().text;
    Op op = Op::Leaf;
    if (head == "pk") op = Op::Pk;
    else if (head == "vk") op = Op::Vk;
    else if (head == "enc") op = Op::Enc;
    else if (head == "aenc") op = Op::Aenc;
    else if (head == "sign") op = Op::Sign;
    else if (head == "h") op = Op::Hash;
    else if (head == "dec") op = Op::Dec;
    else if (head == "adec") op = Op::Adec;
    else if (head == "checksign") op = Op::Check;
    else if (head == "fst") op = Op::Fst;
    else if (head == "snd") op = Op::Snd;
    if (op != Op::Leaf && peek(1).kind == Tok::LParen) {
      advance();
      advance();
      std::vector<Term> args;
      Term a;
      if (!parse_term(sc, a)) return false;
      args.push_back(std::move(a));
      while (at(Tok::Comma)) {
        advance();
        Term b;
        if (!parse_term(sc, b)) return false;
        args.push_back(std::move(b));
      }
      if (!expect(Tok::RParen)) return false;
      if (static_cast<int>(args.size()) != arity(op))
        return fail(std::string("'") + op_name(op) + "' takes " +
                    std::to_string(arity(op)) + " argument(s)");
      out = Term::make(op, std::move(args));
      return true;
    }
    Atom a;
    if (!parse_atom_ref(sc, a)) return false;
    out = Term::atom(a);
    return true;
  }

  // Terms in output and conditional positions: choice[M,N] may occur at
  // any depth and splits the term into its left and right sides.
  bool parse_biterm(const Scope& sc, BiTerm& out) {
    if (at_ident("choice")) {
      advance();
      if (!expect(Tok::LBracket)) return false;
      BiTerm l, r;
      if (!parse_biterm(sc, l)) return false;
      if (!expect(Tok::Comma)) return false;
      if (!parse_biterm(sc, r)) return false;
      if (!expect(Tok::RBracket)) return false;
      out = BiTerm(std::move(l.left), std::move(r.right));
      return true;
    }
    if (at(Tok::Lt)) {
      advance();
      std::vector<BiTerm> parts;
      BiTerm a;
      if (!parse_biterm(sc, a)) return false;
      parts.push_back(std::move(a));
      while (at(Tok::Comma)) {
        advance();
        BiTerm b;
        if (!parse_biterm(sc, b)) return false;
        parts.push_back(std::move(b));
      }
      if (!expect(Tok::Gt)) return false;
      if (parts.size() < 2) return fail("a tuple needs at least two components");
      BiTerm acc = parts.back();
      for (size_t i = parts.size() - 1; i-- > 0;)
        acc = BiTerm(Term::pair(parts[i].left, acc.left),
                     Term::pair(parts[i].right, acc.right));
      out = std::move(acc);
      return true;
    }
    if (at(Tok::Ident)) {
      std::string head = cur().text;
      Op op = Op::Leaf;
      if (head == "pk") op = Op::Pk;
      else if (head == "vk") op = Op::Vk;
      else if (head == "enc") op = Op::Enc;
      else if (head == "aenc") op = Op::Aenc;
      else if (head == "sign") op = Op::Sign;
      else if (head == "h") op = Op::Hash;
      else if (head == "dec") op = Op::Dec;
      else if (head == "adec") op = Op::Adec;
      else if (head == "checksign") op = Op::Check;
      else if (head == "fst") op = Op::Fst;
      else if (head == "snd") op = Op::Snd;
      if (op != Op::Leaf && peek(1).kind == Tok::LParen) {
        advance();
        advance();
        std::vector<BiTerm> args;
        BiTerm a;
        if (!parse_biterm(sc, a)) return false;
        args.push_back(std::move(a));
        while (at(Tok::Comma)) {
          advance();
          BiTerm b;
          if (!parse_biterm(sc, b)) return false;
          args.push_back(std::move(b));
        }
        if (!expect(Tok::RParen)) return false;
        if (static_cast<int>(args.size()) != arity(op))
          return fail(std::string("'") + op_name(op) + "' takes " +
                      std::to_string(arity(op)) + " argument(s)");
        std::vector<Term> ls, rs;
        for (BiTerm& x : args) {
          ls.push_back(std::move(x.left));
          rs.push_back(std::move(x.right));
        }
        out = BiTerm(Term::make(op, std::move(ls)), Term::make(op, std::move(rs)));
        return true;
      }
    }
    Term t;
    if (!parse_term(sc, t)) return false;
    out = BiTerm(std::move(t));
    return true;
  }

  // ---- types ----

  bool parse_label(Label& out) {
    if (at_ident("LL")) out = Label::LL;
    else if (at_ident("HL")) out = Label::HL;
    else if (at_ident("HH")) out = Label::HH;
    else return fail("found " + std::string(tok_name(cur().kind)), "LL, HL or HH");
    advance();
    return true;
  }

  bool parse_mult(Mult& out) {
    if (at_ident("1")) out = Mult::One;
    else if (at_ident("inf")) out = Mult::Many;
    else return fail("found " + std::string(tok_name(cur().kind)), "1 or inf");
    advance();
    return true;
  }

  bool parse_nonce_type(const Scope& sc, NonceType& out) {
    if (!expect_ident("t")) return false;
    if (!expect(Tok::LBrace)) return false;
    if (!parse_label(out.label)) return false;
    if (!expect(Tok::Comma)) return false;
    if (!parse_mult(out.mult)) return false;
    if (!expect(Tok::Comma)) return false;
    if (!parse_atom_ref(sc, out.name, AtomKind::BoundNonce, true)) return false;
    if (!expect(Tok::RBrace)) return false;
    return true;
  }

  bool parse_type_atomic(const Scope& sc, Type& out) {
    if (at(Tok::LParen)) {
      advance();
      if (!parse_type(sc, out)) return false;
      return expect(Tok::RParen);
    }
    if (at(Tok::LBracket)) {
      advance();
      NonceType l, r;
      if (!parse_nonce_type(sc, l)) return false;
      if (!expect(Tok::Semi)) return false;
      if (!parse_nonce_type(sc, r)) return false;
      if (!expect(Tok::RBracket)) return false;
      if (l.mult != r.mult) return fail("refinement multiplicities must agree");
      out = Type::refine(l, r);
      return true;
    }
    if (at_ident("t") && peek(1).kind == Tok::LBrace) {
      NonceType nt;
      if (!parse_nonce_type(sc, nt)) return false;
      out = Type::nonce(nt);
      return true;
    }
    if (at_ident("LL") || at_ident("HL") || at_ident("HH")) {
      Label l;
      parse_label(l);
      out = Type::label(l);
      return true;
    }
    if (at_ident("key")) {
      advance();
      if (!expect(Tok::Caret)) return false;
      Label l;
      if (!parse_label(l)) return false;
      if (!expect(Tok::LParen)) return false;
      Type payload;
      if (!parse_type(sc, payload)) return false;
      if (!expect(Tok::RParen)) return false;
      out = Type::key(l, payload);
      return true;
    }
    if (at_ident("enc") || at_ident("aenc")) {
      bool sym = cur().text == "enc";
      advance();
      if (!expect(Tok::LParen)) return false;
      Type payload;
      if (!parse_type(sc, payload)) return false;
      if (!expect(Tok::Comma)) return false;
      Atom k;
      if (!parse_atom_ref(sc, k, AtomKind::Key, true)) return false;
      if (k.kind != AtomKind::Key) return fail("ciphertext type key must be a declared key");
      if (!expect(Tok::RParen)) return false;
      out = sym ? Type::senc(payload, k) : Type::aenc(payload, k);
      return true;
    }
    return fail("found " + std::string(tok_name(cur().kind)), "a type");
  }

  bool parse_type_product(const Scope& sc, Type& out) {
    Type a;
    if (!parse_type_atomic(sc, a)) return false;
    if (at(Tok::Star)) {
      advance();
      Type b;
      if (!parse_type_product(sc, b)) return false;  // right associative
      out = Type::pair(a, b);
      return true;
    }
    out = a;
    return true;
  }

  bool parse_type(const Scope& sc, Type& out) {
    Type a;
    if (!parse_type_product(sc, a)) return false;
    if (at(Tok::Union)) {
      advance();
      Type b;
      if (!parse_type(sc, b)) return false;
      out = Type::union_of(a, b);
      return true;
    }
    out = a;
    return true;
  }

  // ---- processes ----

  Atom fresh_binder(Scope& sc, AtomKind kind, const std::string& name) {
    int& n = (*sc.fresh_counter)[name];
    ++n;
    Atom a = make_atom(kind, name, 0, n == 1 ? 0 : n);
    return a;
  }

  bool parse_destructor(Scope& sc, DestructorApp& out) {
    if (!at(Tok::Ident)) return fail("expected a destructor");
    std::string head = cur().text;
    Op op;
    if (head == "dec") op = Op::Dec;
    else if (head == "adec") op = Op::Adec;
    else if (head == "checksign") op = Op::Check;
    else if (head == "fst") op = Op::Fst;
    else if (head == "snd") op = Op::Snd;
    else return fail("'" + head + "' is not a destructor",
                     "dec, adec, checksign, fst or snd");
    advance();
    if (!expect(Tok::LParen)) return false;
    Atom arg;
    if (!parse_atom_ref(sc, arg)) return false;
    if (arg.kind != AtomKind::Var)
      return fail("destructors apply to a variable");
    out.op = op;
    out.arg = arg;
    if (op == Op::Dec || op == Op::Adec) {
      if (!expect(Tok::Comma)) return false;
      Atom k;
      if (!parse_atom_ref(sc, k)) return false;
      if (k.kind != AtomKind::Key) return fail("decryption key must be a declared key");
      out.key = k;
    } else if (op == Op::Check) {
      if (!expect(Tok::Comma)) return false;
      if (!expect_ident("vk")) return false;
      if (!expect(Tok::LParen)) return false;
      Atom k;
      if (!parse_atom_ref(sc, k)) return false;
      if (k.kind != AtomKind::Key) return fail("verification key must be a declared key");
      if (!expect(Tok::RParen)) return false;
      out.key = k;
    }
    return expect(Tok::RParen);
  }

  // A single sequential process; '|' is handled by parse_process.
  bool parse_process_seq(Scope& sc, Proc& out) {
    if (at(Tok::LParen)) {
      advance();
      if (!parse_process(sc, out)) return false;
      return expect(Tok::RParen);
    }
    if (at(Tok::Bang)) {
      advance();
      Proc body;
      if (!parse_process_seq(sc, body)) return false;
      out = Proc::repl(body);
      return true;
    }
    if (at_ident("0")) {
      advance();
      out = Proc::zero();
      return true;
    }
    if (at_ident("new")) {
      advance();
      if (!at(Tok::Ident)) return fail("expected a nonce name after 'new'");
      std::string name = cur().text;
      advance();
      if (!expect(Tok::Colon)) return false;
      NonceAnnotation ann;
      if (!parse_label(ann.label)) return false;
      if (!expect(Tok::Caret)) return false;
      if (!parse_mult(ann.mult)) return false;
      if (!expect(Tok::Dot)) return false;
      Atom nonce = fresh_binder(sc, AtomKind::BoundNonce, name);
      sc.all_binders->emplace_back(nonce, ann);
      sc.locals.emplace_back(name, nonce);
      Proc cont;
      bool ok = parse_process_seq(sc, cont);
      sc.locals.pop_back();
      if (!ok) return false;
      out = Proc::make_new(nonce, ann, cont);
      return true;
    }
    if (at_ident("out")) {
      advance();
      if (!expect(Tok::LParen)) return false;
      BiTerm payload;
      if (!parse_biterm(sc, payload)) return false;
      if (!expect(Tok::RParen)) return false;
      Proc cont;
      if (at(Tok::Dot)) {
        advance();
        if (!parse_process_seq(sc, cont)) return false;
      } else {
        cont = Proc::zero();
      }
      out = Proc::out(payload, cont);
      return true;
    }
    if (at_ident("in")) {
      advance();
      if (!expect(Tok::LParen)) return false;
      if (!at(Tok::Ident)) return fail("expected a variable name in in(..)");
      std::string name = cur().text;
      advance();
      if (!expect(Tok::RParen)) return false;
      Atom var = fresh_binder(sc, AtomKind::Var, name);
      sc.locals.emplace_back(name, var);
      Proc cont;
      bool ok = true;
      if (at(Tok::Dot)) {
        advance();
        ok = parse_process_seq(sc, cont);
      } else {
        cont = Proc::zero();
      }
      sc.locals.pop_back();
      if (!ok) return false;
      out = Proc::in(var, cont);
      return true;
    }
    if (at_ident("let")) {
      advance();
      if (!at(Tok::Ident)) return fail("expected a variable name after 'let'");
      std::string name = cur().text;
      advance();
      if (!expect(Tok::Eq)) return false;
      DestructorApp d;
      if (!parse_destructor(sc, d)) return false;
      if (!expect_ident("in")) return false;
      Atom var = fresh_binder(sc, AtomKind::Var, name);
      sc.locals.emplace_back(name, var);
      Proc then_p;
      bool ok = parse_process_seq(sc, then_p);
      sc.locals.pop_back();
      if (!ok) return false;
      if (!expect_ident("else")) return false;
      Proc else_p;
      if (!parse_process_seq(sc, else_p)) return false;
      out = Proc::let(var, d, then_p, else_p);
      return true;
    }
    if (at_ident("if")) {
      advance();
      BiTerm a, b;
      if (!parse_biterm(sc, a)) return false;
      if (!expect(Tok::Eq)) return false;
      if (!parse_biterm(sc, b)) return false;
      if (!expect_ident("then")) return false;
      Proc then_p;
      if (!parse_process_seq(sc, then_p)) return false;
      if (!expect_ident("else")) return false;
      Proc else_p;
      if (!parse_process_seq(sc, else_p)) return false;
      out = Proc::ifeq(a, b, then_p, else_p);
      return true;
    }
    return fail("found " + std::string(tok_name(cur().kind)) +
                    (cur().kind == Tok::Ident ? " '" + cur().text + "'" : ""),
                "a process");
  }

  bool parse_process(Scope& sc, Proc& out) {
    Proc a;
    if (!parse_process_seq(sc, a)) return false;
    while (at(Tok::Bar)) {
      advance();
      Proc b;
      if (!parse_process_seq(sc, b)) return false;
      a = Proc::par(a, b);
    }
    out = a;
    return true;
  }
};

}  // namespace

std::variant<ProtocolFile, ParseError> parse_protocol(const std::string& source) {
  Lexer lex(source);
  if (lex.error) return *lex.error;
  Parser p;
  p.toks = std::move(lex.toks);

  ProtocolFile file;
  std::map<std::string, Atom> globals;
  std::map<std::string, int> fresh;
  std::vector<std::pair<Atom, NonceAnnotation>> binders;

  std::map<std::string, Atom> provisional;
  auto declare = [&](const std::string& name, Atom a) -> bool {
    if (globals.count(name)) {
      p.fail("duplicate declaration of '" + name + "'");
      return false;
    }
    auto it = provisional.find(name);
    if (it != provisional.end()) {
      if (!(it->second == a)) {
        p.fail("'" + name + "' was referenced in a key type as a different kind");
        return false;
      }
      provisional.erase(it);
    }
    globals[name] = std::move(a);
    return true;
  };

  Proc left_proc, right_proc, choice_proc;
  bool have_left = false, have_right = false, have_choice = false, have_query = false;

  while (!p.at(Tok::End)) {
    if (p.at_ident("const")) {
      p.advance();
      while (true) {
        if (!p.at(Tok::Ident)) { p.fail("expected a constant name"); return *p.err; }
        std::string n = p.cur().text;
        p.advance();
        if (!declare(n, make_atom(AtomKind::Constant, n))) return *p.err;
        file.constants.push_back(globals[n]);
        if (p.at(Tok::Comma)) { p.advance(); continue; }
        break;
      }
      if (!p.expect(Tok::Dot)) return *p.err;
      continue;
    }
    if (p.at_ident("freename")) {
      p.advance();
      while (true) {
        if (!p.at(Tok::Ident)) { p.fail("expected a name"); return *p.err; }
        std::string n = p.cur().text;
        p.advance();
        if (!declare(n, make_atom(AtomKind::FreeNonce, n))) return *p.err;
        file.freenames.push_back(globals[n]);
        if (p.at(Tok::Comma)) { p.advance(); continue; }
        break;
      }
      if (!p.expect(Tok::Dot)) return *p.err;
      continue;
    }
    if (p.at_ident("key")) {
      p.advance();
      if (!p.at(Tok::Ident)) { p.fail("expected a key name"); return *p.err; }
      std::string n = p.cur().text;
      p.advance();
      if (!declare(n, make_atom(AtomKind::Key, n))) return *p.err;
      Atom k = globals[n];
      if (!p.expect(Tok::Colon)) return *p.err;
      // key types may reference nonces bound later in the processes;
      // resolution of those names happens in a second pass below, so here
      // the scope is a forward-declaring one.
      // To keep the grammar one-pass, we pre-register unknown identifiers
      // in nonce-type position as provisional bound nonces.
      Scope sc;
      sc.globals = &globals;
      sc.fresh_counter = &fresh;
      sc.all_binders = &binders;
      sc.in_key_type = true;
      sc.provisional = &provisional;
      Type ty;
      if (!p.parse_type(sc, ty)) return *p.err;
      if (ty.kind() != TypeKind::Key) {
        p.fail("a key must be declared with a key^l(T) type");
        return *p.err;
      }
      file.key_env.bind(k, ty);
      if (!p.expect(Tok::Dot)) return *p.err;
      continue;
    }
    if (p.at_ident("left") || p.at_ident("right") || p.at_ident("process")) {
      std::string which = p.cur().text;
      p.advance();
      if (!p.at(Tok::Ident)) { p.fail("expected a process name"); return *p.err; }
      p.advance();
      if (!p.expect(Tok::Eq)) return *p.err;
      Scope sc;
      sc.globals = &globals;
      sc.fresh_counter = &fresh;
      sc.all_binders = &binders;
      Proc proc;
      if (!p.parse_process(sc, proc)) return *p.err;
      if (which == "left") { left_proc = proc; have_left = true; }
      else if (which == "right") { right_proc = proc; have_right = true; }
      else { choice_proc = proc; have_choice = true; }
      continue;
    }
    if (p.at_ident("query")) {
      p.advance();
      if (!p.expect_ident("equivalence")) return *p.err;
      if (p.at_ident("replicated")) {
        p.advance();
        file.replicated_query = true;
      }
      have_query = true;
      continue;
    }
    p.fail("found " + std::string(tok_name(p.cur().kind)) +
               (p.cur().kind == Tok::Ident ? " '" + p.cur().text + "'" : ""),
           "a declaration (const, freename, key, left, right, process, query)");
    return *p.err;
  }

  if (!have_query) {
    p.fail("missing 'query equivalence' line");
    return *p.err;
  }
  if (have_choice && (have_left || have_right)) {
    p.fail("give either a single 'process' or a 'left'/'right' pair, not both");
    return *p.err;
  }
  if (!have_choice && !(have_left && have_right)) {
    p.fail("missing process: need 'left' and 'right', or a single 'process'");
    return *p.err;
  }

  if (have_choice) {
    file.biprocess = choice_proc;
  } else {
    auto zipped = pair_processes(left_proc, right_proc);
    if (auto* m = std::get_if<ShapeMismatch>(&zipped)) {
      p.fail("left and right processes have different shapes: " + m->where);
      return *p.err;
    }
    file.biprocess = std::get<Proc>(zipped);
  }

  // Second pass: provisional references introduced while parsing key types
  // must resolve: keys to a later declaration (handled in declare),
  // bound nonces to exactly one binder of the final bi-process.
  std::vector<std::pair<Atom, NonceAnnotation>> final_binders;
  bound_nonces(file.biprocess, final_binders);
  for (const auto& [name, atom] : provisional) {
    if (atom.kind == AtomKind::Key) {
      p.fail("key types reference the undeclared key '" + name + "'");
      return *p.err;
    }
    int count = 0;
    for (const auto& [b, ann] : final_binders)
      if (b.base == name) ++count;
    if (count == 0) {
      p.fail("key types reference '" + name + "', which is never bound");
      return *p.err;
    }
    if (count > 1) {
      p.fail("reference to '" + name + "' is ambiguous: bound more than once");
      return *p.err;
    }
  }
  return file;
}

std::string print_protocol(const ProtocolFile& f) {
  std::ostringstream os;
  if (!f.constants.empty()) {
    os << "const ";
    for (size_t i = 0; i < f.constants.size(); ++i) {
      if (i) os << ", ";
      os << to_string(f.constants[i]);
    }
    os << ".\n";
  }
  if (!f.freenames.empty()) {
    os << "freename ";
    for (size_t i = 0; i < f.freenames.size(); ++i) {
      if (i) os << ", ";
      os << to_string(f.freenames[i]);
    }
    os << ".\n";
  }
  for (const auto& [k, t] : f.key_env.items())
    os << "key " << to_string(k) << " : " << to_string(t) << ".\n";
  os << "process P =\n" << to_string(f.biprocess) << "\n";
  os << "query equivalence" << (f.replicated_query ? " replicated" : "") << "\n";
  return os.str();
}

std::variant<Term, ParseError> parse_term(const std::string& source,
                                          const std::map<std::string, Atom>& symbols) {
  Lexer lex(source);
  if (lex.error) return *lex.error;
  Parser p;
  p.toks = std::move(lex.toks);
  std::map<std::string, Atom> globals = symbols;
  std::map<std::string, int> fresh;
  std::vector<std::pair<Atom, NonceAnnotation>> binders;
  Scope sc;
  sc.globals = &globals;
  sc.fresh_counter = &fresh;
  sc.all_binders = &binders;
  Term t;
  if (!p.parse_term(sc, t)) return *p.err;
  if (!p.at(Tok::End)) {
    p.fail("trailing input after term");
    return *p.err;
  }
  return t;
}

std::variant<Type, ParseError> parse_type(const std::string& source,
                                          const std::map<std::string, Atom>& symbols) {
  Lexer lex(source);
  if (lex.error) return *lex.error;
  Parser p;
  p.toks = std::move(lex.toks);
  std::map<std::string, Atom> globals = symbols;
  std::map<std::string, int> fresh;
  std::vector<std::pair<Atom, NonceAnnotation>> binders;
  Scope sc;
  sc.globals = &globals;
  sc.fresh_counter = &fresh;
  sc.all_binders = &binders;
  Type t;
  if (!p.parse_type(sc, t)) return *p.err;
  if (!p.at(Tok::End)) {
    p.fail("trailing input after type");
    return *p.err;
  }
  return t;
}

}  // namespace tq
