// SPDX-License-Identifier: Apache-2.0
#include <cctype>
#include <string>
#include <vector>

#include "ttune/cpg/ast.hpp"
#include "ttune/error.hpp"

namespace ttune::cpg {

std::string_view ast_kind_name(AstKind kind) noexcept {
  switch (kind) {
    case AstKind::FuncDef: return "FuncDef";
    case AstKind::Param: return "Param";
    case AstKind::Block: return "Block";
    case AstKind::Assign: return "Assign";
    case AstKind::If: return "If";
    case AstKind::While: return "While";
    case AstKind::Call: return "Call";
    case AstKind::Return: return "Return";
    case AstKind::BinOp: return "BinOp";
    case AstKind::Name: return "Name";
    case AstKind::Number: return "Number";
    case AstKind::String: return "String";
  }
  return "?";
}

namespace {

constexpr int kIndentWidth = 4;

enum class Tok { Ident, Number, String, Op, Newline, Indent, Dedent, End };

struct Token {
  Tok type;
  std::string text;
  int line;
  std::size_t begin;
  std::size_t end;
};

bool is_keyword(std::string_view s) {
  return s == "def" || s == "if" || s == "else" || s == "while" || s == "return";
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<int> indents{0};
    std::size_t pos = 0;
    int line = 0;
    while (pos < src_.size()) {
      ++line;
      std::size_t eol = src_.find('\n', pos);
      if (eol == std::string_view::npos) eol = src_.size();
      std::size_t content_end = eol;
      if (content_end > pos && src_[content_end - 1] == '\r') --content_end;
      lex_line(pos, content_end, line, indents);
      pos = eol + 1;
    }
    while (indents.size() > 1) {
      indents.pop_back();
      out_.push_back({Tok::Dedent, "", line, src_.size(), src_.size()});
    }
    out_.push_back({Tok::End, "", line + 1, src_.size(), src_.size()});
    return std::move(out_);
  }

 private:
  void lex_line(std::size_t begin, std::size_t end, int line, std::vector<int>& indents) {
    std::size_t i = begin;
    while (i < end && src_[i] == ' ') ++i;
    if (i < end && src_[i] == '\t') throw SyntaxError(line, "tab indentation is not allowed");
    if (i == end || src_[i] == '#') return;
    const int width = static_cast<int>(i - begin);
    if (width > indents.back()) {
      if (width != indents.back() + kIndentWidth) throw SyntaxError(line, "indent must be four spaces");
      indents.push_back(width);
      out_.push_back({Tok::Indent, "", line, i, i});
    } else {
      while (width < indents.back()) {
        indents.pop_back();
        out_.push_back({Tok::Dedent, "", line, i, i});
      }
      if (width != indents.back()) throw SyntaxError(line, "dedent does not match any outer level");
    }
    while (i < end) {
      const char c = src_[i];
      if (c == ' ') {
        ++i;
        continue;
      }
      if (c == '\t') throw SyntaxError(line, "tab inside a line");
      if (c == '#') break;
      const std::size_t start = i;
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        while (i < end && (std::isalnum(static_cast<unsigned char>(src_[i])) || src_[i] == '_')) ++i;
        out_.push_back({Tok::Ident, std::string(src_.substr(start, i - start)), line, start, i});
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        while (i < end && (std::isdigit(static_cast<unsigned char>(src_[i])) || src_[i] == '.')) ++i;
        out_.push_back({Tok::Number, std::string(src_.substr(start, i - start)), line, start, i});
      } else if (c == '"') {
        ++i;
        while (i < end && src_[i] != '"') ++i;
        if (i == end) throw SyntaxError(line, "unterminated string literal");
        ++i;
        out_.push_back({Tok::String, std::string(src_.substr(start, i - start)), line, start, i});
      } else {
        static constexpr std::string_view two[] = {"<=", ">=", "==", "!="};
        std::string_view op;
        for (auto t : two)
          if (src_.substr(i, 2) == t) op = t;
        if (op.empty()) {
          static constexpr std::string_view singles = "()=,:+-*/<>";
          if (singles.find(c) == std::string_view::npos) {
            throw SyntaxError(line, std::string("unexpected character '") + c + "'");
          }
          op = src_.substr(i, 1);
        }
        i += op.size();
        out_.push_back({Tok::Op, std::string(op), line, start, i});
      }
    }
    out_.push_back({Tok::Newline, "", line, end, end});
  }

  std::string_view src_;
  std::vector<Token> out_;
};

class Parser {
 public:
  Parser(std::string_view src, std::vector<Token> tokens) : src_(src), toks_(std::move(tokens)) {}

  Program program() {
    Program prog;
    while (peek().type != Tok::End) prog.functions.push_back(funcdef());
    if (prog.functions.empty()) throw SyntaxError(1, "expected at least one 'def'");
    return prog;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  const Token& advance() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  bool at_op(std::string_view op) const { return peek().type == Tok::Op && peek().text == op; }
  bool at_keyword(std::string_view kw) const { return peek().type == Tok::Ident && peek().text == kw; }

  [[noreturn]] void error(const std::string& what) const {
    const Token& t = peek();
    std::string found;
    switch (t.type) {
      case Tok::Newline: found = "end of line"; break;
      case Tok::Indent: found = "indent"; break;
      case Tok::Dedent: found = "dedent"; break;
      case Tok::End: found = "end of input"; break;
      default: found = "'" + t.text + "'";
    }
    throw SyntaxError(t.line, "expected " + what + ", found " + found);
  }

  const Token& expect_op(std::string_view op) {
    if (!at_op(op)) error("'" + std::string(op) + "'");
    return advance();
  }
  const Token& expect(Tok type, const std::string& what) {
    if (peek().type != type) error(what);
    return advance();
  }
  const Token& expect_keyword(std::string_view kw) {
    if (!at_keyword(kw)) error("'" + std::string(kw) + "'");
    return advance();
  }
  const Token& identifier() {
    if (peek().type != Tok::Ident || is_keyword(peek().text)) error("identifier");
    return advance();
  }

  std::string slice(std::size_t begin, std::size_t end) const { return std::string(src_.substr(begin, end - begin)); }
  std::size_t last_end() const { return toks_[pos_ - 1].end; }

  AstNode funcdef() {
    const Token& def = expect_keyword("def");
    AstNode fn{AstKind::FuncDef, "", "", def.line, {}};
    fn.name = identifier().text;
    expect_op("(");
    if (!at_op(")")) {
      for (;;) {
        const Token& p = identifier();
        fn.children.push_back({AstKind::Param, p.text, p.text, p.line, {}});
        if (!at_op(",")) break;
        advance();
      }
    }
    expect_op(")");
    expect_op(":");
    fn.children.push_back(block());
    fn.text = slice(def.begin, block_end_);
    return fn;
  }

  AstNode block() {
    const int line = peek().line;
    expect(Tok::Newline, "end of line after ':'");
    expect(Tok::Indent, "an indented block");
    AstNode blk{AstKind::Block, "", "", line, {}};
    const std::size_t begin = peek().begin;
    std::size_t end = begin;
    while (peek().type != Tok::Dedent && peek().type != Tok::End) {
      blk.children.push_back(statement());
      end = stmt_end_;
    }
    expect(Tok::Dedent, "dedent");
    blk.text = slice(begin, end);
    block_end_ = end;
    stmt_end_ = end;
    return blk;
  }

  AstNode statement() {
    const Token& first = peek();
    if (at_keyword("if") || at_keyword("while")) {
      const bool is_if = first.text == "if";
      advance();
      AstNode node{is_if ? AstKind::If : AstKind::While, "", "", first.line, {}};
      node.children.push_back(expression());
      expect_op(":");
      node.children.push_back(block());
      if (is_if && at_keyword("else")) {
        advance();
        expect_op(":");
        node.children.push_back(block());
      }
      node.text = slice(first.begin, block_end_);
      stmt_end_ = block_end_;
      return node;
    }
    if (at_keyword("else")) error("a statement ('else' without 'if')");
    if (at_keyword("def")) error("a statement (nested 'def' is not supported)");
    AstNode node;
    if (at_keyword("return")) {
      advance();
      node = {AstKind::Return, "", "", first.line, {}};
      if (peek().type != Tok::Newline) node.children.push_back(expression());
    } else if (peek().type == Tok::Ident && !is_keyword(peek().text) && peek(1).type == Tok::Op &&
               peek(1).text == "=") {
      node = {AstKind::Assign, "", identifier().text, first.line, {}};
      advance();
      node.children.push_back(expression());
    } else {
      node = expression();
      if (node.kind != AstKind::Call) throw SyntaxError(first.line, "expression statement must be a call");
    }
    node.text = slice(first.begin, last_end());
    stmt_end_ = last_end();
    expect(Tok::Newline, "end of line");
    return node;
  }

  static int precedence(std::string_view op) {
    if (op == "<" || op == ">" || op == "<=" || op == ">=" || op == "==" || op == "!=") return 1;
    if (op == "+" || op == "-") return 2;
    if (op == "*" || op == "/") return 3;
    return 0;
  }

  AstNode expression(int min_prec = 1) {
    const std::size_t begin = peek().begin;
    AstNode lhs = primary();
    while (peek().type == Tok::Op && precedence(peek().text) >= min_prec) {
      const Token& op = advance();
      const int prec = precedence(op.text);
      AstNode rhs = expression(prec + 1);
      AstNode bin{AstKind::BinOp, slice(begin, last_end()), op.text, op.line, {}};
      bin.children.push_back(std::move(lhs));
      bin.children.push_back(std::move(rhs));
      lhs = std::move(bin);
    }
    return lhs;
  }

  AstNode primary() {
    const Token& t = peek();
    if (t.type == Tok::Number) {
      advance();
      return {AstKind::Number, t.text, t.text, t.line, {}};
    }
    if (t.type == Tok::String) {
      advance();
      return {AstKind::String, t.text, t.text, t.line, {}};
    }
    if (at_op("(")) {
      const std::size_t begin = advance().begin;
      AstNode inner = expression();
      expect_op(")");
      inner.text = slice(begin, last_end());
      return inner;
    }
    if (t.type == Tok::Ident && !is_keyword(t.text)) {
      advance();
      if (!at_op("(")) return {AstKind::Name, t.text, t.text, t.line, {}};
      advance();
      AstNode call{AstKind::Call, "", t.text, t.line, {}};
      if (!at_op(")")) {
        for (;;) {
          call.children.push_back(expression());
          if (!at_op(",")) break;
          advance();
        }
      }
      expect_op(")");
      call.text = slice(t.begin, last_end());
      return call;
    }
    error("an expression");
  }

  std::string_view src_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t block_end_ = 0;
  std::size_t stmt_end_ = 0;
};

}  // namespace

Program parse(std::string_view source) {
  Lexer lexer(source);
  Parser parser(source, lexer.run());
  return parser.program();
}

}  // namespace ttune::cpg
