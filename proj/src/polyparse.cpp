#include "nnsos/polyparse.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>

namespace nnsos {

std::string format_double(double x) {
  if (x == 0.0) return "0";  // normalize -0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

struct Parser {
  std::string_view text;
  std::size_t pos = 0;
  VariableSpace& space;
  bool auto_register;

  [[noreturn]] void fail(const std::string& what) const {
    throw Error("polynomial parse error at offset " + std::to_string(pos) +
                ": " + what + " in \"" + std::string(text) + "\"");
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  double parse_number() {
    skip_ws();
    const char* begin = text.data() + pos;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("expected number");
    pos += static_cast<std::size_t>(end - begin);
    return v;
  }

  std::string parse_ident() {
    skip_ws();
    std::size_t start = pos;
    if (pos >= text.size() ||
        !(std::isalpha(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      fail("expected identifier");
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    return std::string(text.substr(start, pos - start));
  }

  std::uint32_t parse_exponent() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
      ++pos;
    if (pos == start) fail("expected integer exponent after '^'");
    std::uint32_t e = 0;
    auto sv = text.substr(start, pos - start);
    std::from_chars(sv.data(), sv.data() + sv.size(), e);
    return e;
  }

  Polynomial parse_primary() {
    char c = peek();
    if (c == '(') {
      ++pos;
      Polynomial p = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return Polynomial(parse_number());
    std::string name = parse_ident();
    std::optional<VarId> v = space.find(name);
    if (!v) {
      if (!auto_register) fail("unknown variable '" + name + "'");
      v = space.add(name);
    }
    return Polynomial::variable(*v);
  }

  Polynomial parse_factor() {
    if (eat('-')) return -parse_factor();
    Polynomial p = parse_primary();
    if (eat('^')) {
      std::uint32_t e = parse_exponent();
      Polynomial out(1.0);
      for (std::uint32_t k = 0; k < e; ++k) out = out * p;
      return out;
    }
    return p;
  }

  Polynomial parse_term() {
    Polynomial p = parse_factor();
    while (eat('*')) p = p * parse_factor();
    return p;
  }

  Polynomial parse_expr() {
    Polynomial p;
    bool neg = false;
    if (eat('-'))
      neg = true;
    else
      eat('+');
    p = parse_term();
    if (neg) p = -p;
    while (true) {
      char c = peek();
      if (c == '+') {
        ++pos;
        p += parse_term();
      } else if (c == '-') {
        ++pos;
        p -= parse_term();
      } else {
        break;
      }
    }
    return p;
  }
};

}  // namespace

Polynomial parse_polynomial(std::string_view text, VariableSpace& space,
                            bool auto_register) {
  Parser p{text, 0, space, auto_register};
  Polynomial out = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  return out;
}

std::string print_polynomial(const Polynomial& p, const VariableSpace& space) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (auto& [m, c] : p.terms()) {
    double coef = c;
    if (first) {
      if (coef < 0) {
        out += "-";
        coef = -coef;
      }
    } else {
      out += coef < 0 ? " - " : " + ";
      coef = std::abs(coef);
    }
    bool need_coef = m.is_one() || coef != 1.0;
    if (need_coef) out += format_double(coef);
    bool first_var = !need_coef;
    for (auto& [var, exp] : m.entries()) {
      if (!first_var) out += "*";
      first_var = false;
      out += space.name(VarId{var});
      if (exp > 1) out += "^" + std::to_string(exp);
    }
    first = false;
  }
  return out;
}

}  // namespace nnsos
