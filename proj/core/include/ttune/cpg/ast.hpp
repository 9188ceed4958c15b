// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ttune::cpg {

enum class AstKind { FuncDef, Param, Block, Assign, If, While, Call, Return, BinOp, Name, Number, String };

std::string_view ast_kind_name(AstKind kind) noexcept;

/// Syntax tree node. `text` is the exact source slice the node covers.
/// `name` holds the identifier for FuncDef/Param/Assign(target)/Call(callee)/
/// Name, and the operator for BinOp.
///
/// Child layout: FuncDef = Param* Block; If = cond Block [Block];
/// While = cond Block; Assign = value; Return = [value]; Call = args;
/// BinOp = lhs rhs.
struct AstNode {
  AstKind kind = AstKind::Name;
  std::string text;
  std::string name;
  int line = 0;
  std::vector<AstNode> children;
};

struct Program {
  std::vector<AstNode> functions;
};

/// Parses the indentation-based mini-language (four-space indents).
/// Throws SyntaxError with the offending line.
Program parse(std::string_view source);

}  // namespace ttune::cpg
