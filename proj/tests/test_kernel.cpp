#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "aiwc/kernel.hpp"

using namespace aiwc;

namespace {

std::string samples_dir() {
  const char* env = std::getenv("AIWC_SAMPLES_DIR");
  return env ? env : "samples";
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("minimal two-instruction program", "[kernel]") {
  const Kernel k = parse_kernel("mov r0, gid0\nhalt");
  REQUIRE(k.instructions.size() == 2);
  CHECK(k.instructions[0].opcode == Opcode::Mov);
  CHECK(k.instructions[0].width == 1);
  CHECK(k.instructions[0].dst == 0);
  REQUIRE(k.instructions[0].srcs.size() == 1);
  CHECK(k.instructions[0].srcs[0].kind == Operand::Kind::GlobalId);
  CHECK(k.instructions[1].opcode == Opcode::Halt);
  CHECK(k.name == "kernel");
}

TEST_CASE("undefined branch label is a parse error", "[kernel]") {
  try {
    parse_kernel("br missing_label, r0\nhalt");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("missing_label") != std::string::npos);
    CHECK(e.line() == 1);
  }
}

TEST_CASE("bundled vector_add sample parses to the expected program",
          "[kernel]") {
  const Kernel k = parse_kernel(slurp(samples_dir() + "/vector_add.mk"));
  CHECK(k.name == "vector_add");
  REQUIRE(k.instructions.size() == 5);
  CHECK(k.instructions[0].opcode == Opcode::Load);
  CHECK(k.instructions[1].opcode == Opcode::Load);
  CHECK(k.instructions[2].opcode == Opcode::Add);
  CHECK(k.instructions[2].width == 1);
  CHECK(k.instructions[3].opcode == Opcode::Store);
  CHECK(k.instructions[4].opcode == Opcode::Halt);
  // address expressions are affine in gid0
  CHECK(k.instructions[0].addr.bias == 0);
  REQUIRE(k.instructions[0].addr.terms.size() == 1);
  CHECK(k.instructions[0].addr.terms[0].scale == 8);
  CHECK(k.instructions[1].addr.bias == 4096);
}

TEST_CASE("labels resolve to following instruction", "[kernel]") {
  const Kernel k = parse_kernel(
      "mov r0, 0\n"
      "loop:\n"
      "  add r0, r0, 1\n"
      "  cmp r1, r0, 10\n"
      "  br loop, r1\n"
      "halt\n");
  REQUIRE(k.labels.count("loop") == 1);
  CHECK(k.labels.at("loop") == 1);
  CHECK(k.instructions[3].branch_target == 1);
}

TEST_CASE("parser diagnostics carry line and column", "[kernel]") {
  SECTION("register out of range") {
    try {
      parse_kernel(".registers 4\nmov r9, 1\nhalt");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
      CHECK(std::string(e.what()).find("r9") != std::string::npos);
    }
  }
  SECTION("zero width") {
    CHECK_THROWS_AS(parse_kernel("add.0 r0, r1, r2\nhalt"), ParseError);
  }
  SECTION("width suffix on width-1 instructions") {
    CHECK_THROWS_AS(parse_kernel("halt.4"), ParseError);
    CHECK_THROWS_AS(parse_kernel("bar.2\nhalt"), ParseError);
  }
  SECTION("unknown instruction") {
    try {
      parse_kernel("mov r0, 1\nfrobnicate r1\nhalt");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SECTION("unknown operand") {
    CHECK_THROWS_AS(parse_kernel("mov r0, bogus\nhalt"), ParseError);
  }
  SECTION("non-affine address") {
    CHECK_THROWS_AS(parse_kernel("ld r0, [r1*r2]\nhalt"), ParseError);
  }
  SECTION("missing halt") {
    CHECK_THROWS_AS(parse_kernel("mov r0, 1"), ParseError);
  }
  SECTION("empty program") {
    CHECK_THROWS_AS(parse_kernel("# only a comment\n"), ParseError);
  }
  SECTION("duplicate label") {
    CHECK_THROWS_AS(parse_kernel("x:\nmov r0, 1\nx:\nhalt"), ParseError);
  }
  SECTION("trailing label") {
    CHECK_THROWS_AS(parse_kernel("mov r0, 1\nhalt\nend:\n"), ParseError);
  }
  SECTION("directive after instructions") {
    CHECK_THROWS_AS(parse_kernel("mov r0, 1\n.registers 8\nhalt"), ParseError);
  }
  SECTION("unbound parameter name") {
    CHECK_THROWS_AS(parse_kernel(".param gid0\nhalt"), ParseError);
  }
}

TEST_CASE("width suffixes, immediates and parameters parse", "[kernel]") {
  const Kernel k = parse_kernel(
      ".kernel widths\n"
      ".param n\n"
      ".registers 8\n"
      "add.16 r0, n, -5\n"
      "mad.4 r1, r0, 0x10, lid2\n"
      "st [r1*8 + grp1*64 - 16], r0\n"
      "halt\n");
  CHECK(k.instructions[0].width == 16);
  CHECK(k.instructions[0].srcs[0].kind == Operand::Kind::Param);
  CHECK(k.instructions[0].srcs[1].value == -5);
  CHECK(k.instructions[1].srcs[1].value == 16);
  CHECK(k.instructions[1].srcs[2].kind == Operand::Kind::LocalId);
  CHECK(k.instructions[1].srcs[2].index == 2);
  const AddrExpr& addr = k.instructions[2].addr;
  CHECK(addr.bias == -16);
  REQUIRE(addr.terms.size() == 2);
  CHECK(addr.terms[0].scale == 8);
  CHECK(addr.terms[1].scale == 64);
  CHECK(addr.terms[1].atom.kind == Operand::Kind::GroupId);
}

TEST_CASE("hand-built kernels validate", "[kernel]") {
  Kernel k;
  k.instructions.push_back({Opcode::Halt, 1, -1, {}, {}, -1, {}});
  CHECK_NOTHROW(k.validate());

  Kernel bad = k;
  bad.instructions[0].width = 0;
  CHECK_THROWS_AS(bad.validate(), ParseError);

  Kernel branchy = k;
  Instruction br;
  br.opcode = Opcode::Branch;
  br.branch_target = 99;
  branchy.instructions.insert(branchy.instructions.begin(), br);
  CHECK_THROWS_AS(branchy.validate(), ParseError);
}
