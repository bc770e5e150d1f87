#pragma once

#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aiwc/error.hpp"

namespace aiwc {

// The 16-opcode kernel IR. A deliberately small, dependency-free stand-in for
// a real portable kernel IR: just enough surface to drive every trace metric
// (opcode mix, SIMD widths, memory addresses, branches, barriers).
enum class Opcode {
  Add,
  Sub,
  Mul,
  Div,
  Mad,
  And,
  Or,
  Xor,
  Shl,
  Cmp,
  Mov,
  Load,
  Store,
  Branch,
  Barrier,
  Halt,
};

inline constexpr int kOpcodeCount = 16;

inline std::string_view opcode_name(Opcode op) {
  switch (op) {
    case Opcode::Add: return "add";
    case Opcode::Sub: return "sub";
    case Opcode::Mul: return "mul";
    case Opcode::Div: return "div";
    case Opcode::Mad: return "mad";
    case Opcode::And: return "and";
    case Opcode::Or: return "or";
    case Opcode::Xor: return "xor";
    case Opcode::Shl: return "shl";
    case Opcode::Cmp: return "cmp";
    case Opcode::Mov: return "mov";
    case Opcode::Load: return "load";
    case Opcode::Store: return "store";
    case Opcode::Branch: return "branch";
    case Opcode::Barrier: return "barrier";
    case Opcode::Halt: return "halt";
  }
  return "?";
}

inline std::optional<Opcode> opcode_from_name(std::string_view name) {
  for (int i = 0; i < kOpcodeCount; ++i) {
    const Opcode op = static_cast<Opcode>(i);
    if (opcode_name(op) == name) return op;
  }
  return std::nullopt;
}

struct Operand {
  enum class Kind { Register, Immediate, GlobalId, LocalId, GroupId, Param };
  Kind kind = Kind::Immediate;
  int index = 0;           // register number, id dimension, or param position
  std::int64_t value = 0;  // immediate payload

  bool operator==(const Operand&) const = default;

  static Operand reg(int r) { return {Kind::Register, r, 0}; }
  static Operand imm(std::int64_t v) { return {Kind::Immediate, 0, v}; }
};

// One summand of an affine address expression: scale * atom.
struct AddrTerm {
  Operand atom;
  std::int64_t scale = 1;
  bool operator==(const AddrTerm&) const = default;
};

// sum(scale_i * atom_i) + bias, evaluated in wrapping 64-bit arithmetic.
struct AddrExpr {
  std::vector<AddrTerm> terms;
  std::int64_t bias = 0;
  bool operator==(const AddrExpr&) const = default;
};

struct Instruction {
  Opcode opcode = Opcode::Halt;
  std::uint32_t width = 1;  // SIMD lanes; always 1 for branch/barrier/halt
  int dst = -1;             // destination register where applicable
  std::vector<Operand> srcs;
  AddrExpr addr;                      // load/store only
  int branch_target = -1;             // branch only: instruction index
  std::optional<Operand> condition;   // branch only; nullopt = always taken
};

struct Kernel {
  std::string name = "kernel";
  std::vector<std::string> params;  // scalar constants bound at execution
  int register_count = 16;
  std::vector<Instruction> instructions;
  std::map<std::string, int> labels;  // label -> instruction index

  void validate() const;
};

namespace detail {

inline bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Single-line scanner with 1-based column reporting.
class LineScanner {
 public:
  LineScanner(std::string_view text, int line) : text_(text), line_(line) {}

  int line() const { return line_; }
  int column() const { return static_cast<int>(pos_) + 1; }

  void skip_ws() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\t'))
      ++pos_;
  }

  // true once only trailing whitespace or a comment remains
  bool at_end() {
    skip_ws();
    return pos_ >= text_.size() || text_[pos_] == '#';
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!consume(c))
      throw ParseError(std::string("expected '") + c + "' " + what, line_,
                       column());
  }

  std::string ident() {
    skip_ws();
    if (pos_ >= text_.size() || !ident_start(text_[pos_]))
      throw ParseError("expected identifier", line_, column());
    std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  bool looks_like_int() {
    skip_ws();
    if (pos_ >= text_.size()) return false;
    char c = text_[pos_];
    if (c == '-') return pos_ + 1 < text_.size() &&
                         std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]));
    return std::isdigit(static_cast<unsigned char>(c));
  }

  std::int64_t integer() {
    skip_ws();
    const int col = column();
    bool neg = false;
    if (pos_ < text_.size() && text_[pos_] == '-') {
      neg = true;
      ++pos_;
    }
    if (pos_ >= text_.size() ||
        !std::isdigit(static_cast<unsigned char>(text_[pos_])))
      throw ParseError("expected integer", line_, col);
    std::uint64_t v = 0;
    if (text_.substr(pos_).starts_with("0x") ||
        text_.substr(pos_).starts_with("0X")) {
      pos_ += 2;
      if (pos_ >= text_.size() ||
          !std::isxdigit(static_cast<unsigned char>(text_[pos_])))
        throw ParseError("expected hex digits", line_, col);
      while (pos_ < text_.size() &&
             std::isxdigit(static_cast<unsigned char>(text_[pos_]))) {
        char c = text_[pos_++];
        int d = c <= '9' ? c - '0' : (c | 0x20) - 'a' + 10;
        v = v * 16 + static_cast<std::uint64_t>(d);
      }
    } else {
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_])))
        v = v * 10 + static_cast<std::uint64_t>(text_[pos_++] - '0');
    }
    const std::int64_t sv = static_cast<std::int64_t>(v);
    return neg ? -sv : sv;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_;
};

}  // namespace detail

// Parses the line-oriented kernel assembly format (see docs/kernel_format.md)
// into a validated Kernel. Every diagnostic carries a line and column.
Kernel parse_kernel(std::string_view text);

inline void Kernel::validate() const {
  if (instructions.empty())
    throw ParseError("program has no instructions");
  if (instructions.back().opcode != Opcode::Halt)
    throw ParseError("program must end with 'halt'");
  for (const auto& [label, index] : labels) {
    if (index < 0 || index >= static_cast<int>(instructions.size()))
      throw ParseError("label '" + label + "' has no following instruction");
  }
  for (std::size_t i = 0; i < instructions.size(); ++i) {
    const Instruction& ins = instructions[i];
    if (ins.width < 1) throw ParseError("width must be at least 1");
    if ((ins.opcode == Opcode::Branch || ins.opcode == Opcode::Barrier ||
         ins.opcode == Opcode::Halt) &&
        ins.width != 1)
      throw ParseError("branch/barrier/halt are width-1 instructions");
    if (ins.opcode == Opcode::Branch &&
        (ins.branch_target < 0 ||
         ins.branch_target >= static_cast<int>(instructions.size())))
      throw ParseError("branch target out of range");
    auto check_reg = [&](int r) {
      if (r < 0 || r >= register_count)
        throw ParseError("register r" + std::to_string(r) + " out of range");
    };
    if (ins.dst >= 0) check_reg(ins.dst);
    auto check_operand = [&](const Operand& o) {
      if (o.kind == Operand::Kind::Register) check_reg(o.index);
      if (o.kind == Operand::Kind::Param &&
          (o.index < 0 || o.index >= static_cast<int>(params.size())))
        throw ParseError("parameter index out of range");
    };
    for (const Operand& o : ins.srcs) check_operand(o);
    if (ins.condition) check_operand(*ins.condition);
    for (const AddrTerm& t : ins.addr.terms) check_operand(t.atom);
  }
}

namespace detail {

struct PendingBranch {
  std::size_t instruction;
  std::string label;
  int line;
  int column;
};

class KernelParser {
 public:
  Kernel parse(std::string_view text) {
    int lineno = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t nl = text.find('\n', start);
      std::string_view line = text.substr(
          start, nl == std::string_view::npos ? text.size() - start
                                              : nl - start);
      ++lineno;
      parse_line(line, lineno);
      if (nl == std::string_view::npos) break;
      start = nl + 1;
    }
    resolve_branches();
    if (kernel_.instructions.empty())
      throw ParseError("program has no instructions", lineno ? lineno : 1, 1);
    if (kernel_.instructions.back().opcode != Opcode::Halt)
      throw ParseError("program must end with 'halt'", last_instruction_line_,
                       1);
    for (const auto& [label, index] : kernel_.labels) {
      if (index >= static_cast<int>(kernel_.instructions.size()))
        throw ParseError("label '" + label + "' has no following instruction",
                         label_lines_[label], 1);
    }
    kernel_.validate();
    return std::move(kernel_);
  }

 private:
  void parse_line(std::string_view line, int lineno) {
    LineScanner s(line, lineno);
    if (s.at_end()) return;

    if (s.peek() == '.') {
      parse_directive(s);
      return;
    }

    // one leading `name:` label is allowed before an instruction
    std::string word = s.ident();
    if (s.consume(':')) {
      if (kernel_.labels.count(word))
        throw ParseError("duplicate label '" + word + "'", lineno, 1);
      kernel_.labels[word] = static_cast<int>(kernel_.instructions.size());
      label_lines_[word] = lineno;
      if (s.at_end()) return;
      word = s.ident();
    }
    parse_instruction(s, word, lineno);
  }

  void parse_directive(LineScanner& s) {
    s.consume('.');
    const int col = s.column();
    std::string name = s.ident();
    if (!kernel_.instructions.empty())
      throw ParseError("directive '." + name + "' must precede instructions",
                       s.line(), col);
    if (name == "kernel") {
      kernel_.name = s.ident();
    } else if (name == "param" || name == "params") {
      do {
        std::string p = s.ident();
        if (is_builtin(p))
          throw ParseError("parameter name '" + p + "' is reserved", s.line(),
                           col);
        for (const auto& existing : kernel_.params)
          if (existing == p)
            throw ParseError("duplicate parameter '" + p + "'", s.line(), col);
        kernel_.params.push_back(std::move(p));
      } while (!s.at_end());
    } else if (name == "registers") {
      const std::int64_t n = s.integer();
      if (n < 1 || n > 4096)
        throw ParseError("register count must be in [1, 4096]", s.line(), col);
      kernel_.register_count = static_cast<int>(n);
    } else {
      throw ParseError("unknown directive '." + name + "'", s.line(), col);
    }
    if (!s.at_end())
      throw ParseError("trailing tokens after directive", s.line(),
                       s.column());
  }

  static bool is_builtin(std::string_view w) {
    return w == "gid0" || w == "gid1" || w == "gid2" || w == "lid0" ||
           w == "lid1" || w == "lid2" || w == "grp0" || w == "grp1" ||
           w == "grp2";
  }

  Operand classify(const std::string& w, int line, int col) {
    if (w.size() >= 2 && w[0] == 'r' &&
        std::isdigit(static_cast<unsigned char>(w[1]))) {
      bool all_digits = true;
      for (std::size_t i = 1; i < w.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(w[i]))) all_digits = false;
      if (all_digits) {
        const int r = std::atoi(w.c_str() + 1);
        if (r >= kernel_.register_count)
          throw ParseError("register r" + std::to_string(r) +
                               " out of range (declared " +
                               std::to_string(kernel_.register_count) + ")",
                           line, col);
        return Operand::reg(r);
      }
    }
    if (is_builtin(w)) {
      const int dim = w.back() - '0';
      Operand::Kind kind = w[0] == 'g' && w[1] == 'i' ? Operand::Kind::GlobalId
                           : w[0] == 'l' ? Operand::Kind::LocalId
                                         : Operand::Kind::GroupId;
      return {kind, dim, 0};
    }
    for (std::size_t i = 0; i < kernel_.params.size(); ++i)
      if (kernel_.params[i] == w)
        return {Operand::Kind::Param, static_cast<int>(i), 0};
    throw ParseError("unknown operand '" + w + "'", line, col);
  }

  Operand parse_operand(LineScanner& s) {
    if (s.looks_like_int()) return Operand::imm(s.integer());
    const int col = s.column();
    return classify(s.ident(), s.line(), col);
  }

  int parse_dst(LineScanner& s) {
    const int col = s.column();
    Operand o = parse_operand(s);
    if (o.kind != Operand::Kind::Register)
      throw ParseError("destination must be a register", s.line(), col);
    return o.index;
  }

  AddrExpr parse_addr(LineScanner& s) {
    s.expect('[', "to open address expression");
    AddrExpr expr;
    std::int64_t sign = 1;
    for (;;) {
      // term := factor ('*' factor)?
      bool have_atom = false;
      Operand atom;
      std::int64_t constant = 1;
      bool have_constant = false;
      auto read_factor = [&](LineScanner& sc) {
        if (sc.looks_like_int()) {
          const std::int64_t v = sc.integer();
          if (have_constant)
            constant *= v;
          else {
            constant = v;
            have_constant = true;
          }
        } else {
          const int col = sc.column();
          Operand o = classify(sc.ident(), sc.line(), col);
          if (have_atom)
            throw ParseError(
                "address expressions are affine; cannot multiply two "
                "non-constant operands",
                sc.line(), col);
          atom = o;
          have_atom = true;
        }
      };
      read_factor(s);
      if (s.consume('*')) read_factor(s);
      if (have_atom)
        expr.terms.push_back({atom, sign * (have_constant ? constant : 1)});
      else
        expr.bias += sign * constant;

      if (s.consume('+')) {
        sign = 1;
      } else if (s.consume('-')) {
        sign = -1;
      } else {
        break;
      }
    }
    s.expect(']', "to close address expression");
    return expr;
  }

  void parse_instruction(LineScanner& s, const std::string& word, int lineno) {
    // split optional ".width" suffix
    std::string mnemonic = word;
    std::uint32_t width = 1;
    bool explicit_width = false;
    if (s.consume('.')) {
      const int col = s.column();
      const std::int64_t w = s.integer();
      if (w < 1)
        throw ParseError("width must be at least 1", lineno, col);
      if (w > 1 << 20)
        throw ParseError("width is implausibly large", lineno, col);
      width = static_cast<std::uint32_t>(w);
      explicit_width = true;
    }

    Instruction ins;
    ins.width = width;
    auto comma = [&] { s.expect(',', "between operands"); };

    if (mnemonic == "add" || mnemonic == "sub" || mnemonic == "mul" ||
        mnemonic == "div" || mnemonic == "and" || mnemonic == "or" ||
        mnemonic == "xor" || mnemonic == "shl" || mnemonic == "cmp") {
      static const std::map<std::string, Opcode> binary = {
          {"add", Opcode::Add}, {"sub", Opcode::Sub}, {"mul", Opcode::Mul},
          {"div", Opcode::Div}, {"and", Opcode::And}, {"or", Opcode::Or},
          {"xor", Opcode::Xor}, {"shl", Opcode::Shl}, {"cmp", Opcode::Cmp}};
      ins.opcode = binary.at(mnemonic);
      ins.dst = parse_dst(s);
      comma();
      ins.srcs.push_back(parse_operand(s));
      comma();
      ins.srcs.push_back(parse_operand(s));
    } else if (mnemonic == "mad") {
      ins.opcode = Opcode::Mad;
      ins.dst = parse_dst(s);
      comma();
      ins.srcs.push_back(parse_operand(s));
      comma();
      ins.srcs.push_back(parse_operand(s));
      comma();
      ins.srcs.push_back(parse_operand(s));
    } else if (mnemonic == "mov") {
      ins.opcode = Opcode::Mov;
      ins.dst = parse_dst(s);
      comma();
      ins.srcs.push_back(parse_operand(s));
    } else if (mnemonic == "ld") {
      ins.opcode = Opcode::Load;
      ins.dst = parse_dst(s);
      comma();
      ins.addr = parse_addr(s);
    } else if (mnemonic == "st") {
      ins.opcode = Opcode::Store;
      ins.addr = parse_addr(s);
      comma();
      ins.srcs.push_back(parse_operand(s));
    } else if (mnemonic == "br") {
      ins.opcode = Opcode::Branch;
      if (explicit_width)
        throw ParseError("branch is a width-1 instruction", lineno, 1);
      const int col = s.column();
      std::string target = s.ident();
      pending_.push_back(
          {kernel_.instructions.size(), std::move(target), lineno, col});
      if (s.consume(',')) ins.condition = parse_operand(s);
    } else if (mnemonic == "bar") {
      ins.opcode = Opcode::Barrier;
      if (explicit_width)
        throw ParseError("barrier is a width-1 instruction", lineno, 1);
    } else if (mnemonic == "halt") {
      ins.opcode = Opcode::Halt;
      if (explicit_width)
        throw ParseError("halt is a width-1 instruction", lineno, 1);
    } else {
      throw ParseError("unknown instruction '" + mnemonic + "'", lineno, 1);
    }

    if (!s.at_end())
      throw ParseError("trailing tokens after instruction", lineno,
                       s.column());
    kernel_.instructions.push_back(std::move(ins));
    last_instruction_line_ = lineno;
  }

  void resolve_branches() {
    for (const PendingBranch& pb : pending_) {
      auto it = kernel_.labels.find(pb.label);
      if (it == kernel_.labels.end())
        throw ParseError("undefined label '" + pb.label + "'", pb.line,
                         pb.column);
      kernel_.instructions[pb.instruction].branch_target = it->second;
    }
  }

  Kernel kernel_;
  std::vector<PendingBranch> pending_;
  std::map<std::string, int> label_lines_;
  int last_instruction_line_ = 1;
};

}  // namespace detail

inline Kernel parse_kernel(std::string_view text) {
  return detail::KernelParser{}.parse(text);
}

}  // namespace aiwc
