#include "peakon/parse.hpp"

#include <cctype>
#include <charconv>
#include <map>

namespace peakon {

namespace {

const std::map<std::string, JetVar, std::less<>>& jet_identifiers() {
  static const std::map<std::string, JetVar, std::less<>> ids = {
      {"u", JetVar::u()},      {"ux", JetVar::u(1)},    {"m", JetVar::m()},
      {"mx", JetVar::m(1)},    {"mxx", JetVar::m(2)},   {"ut", JetVar::ut()},
      {"utx", JetVar::ut(1)},  {"mt", JetVar::mt()},    {"mtx", JetVar::mt(1)},
      {"mtxx", JetVar::mt(2)}, {"x", JetVar::x()},      {"t", JetVar::t()},
  };
  return ids;
}

const std::map<std::string, Fn, std::less<>>& functions() {
  static const std::map<std::string, Fn, std::less<>> fns = {
      {"exp", Fn::Exp}, {"ln", Fn::Ln},   {"sqrt", Fn::Sqrt},
      {"sin", Fn::Sin}, {"cos", Fn::Cos}, {"arctanh", Fn::Arctanh},
  };
  return fns;
}

class Parser {
 public:
  Parser(std::string_view src, const std::set<std::string>& params) : src_(src), params_(params) {}

  Expr parse_all() {
    Expr e = expr();
    skip_ws();
    if (pos_ < src_.size()) fail(std::string("unexpected '") + src_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }
  [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const { throw ParseError(msg, at); }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= src_.size()) fail(std::string("expected '") + c + "' before end of input");
      fail(std::string("expected '") + c + "'");
    }
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = lhs + term();
      } else if (accept('-')) {
        lhs = lhs - term();
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = lhs * factor();
      } else if (accept('/')) {
        const std::size_t at = pos_;
        Expr rhs = factor();
        if (rhs.is_constant(0.0)) fail_at("division by zero", at);
        lhs = lhs / rhs;
      } else {
        return lhs;
      }
    }
  }

  Expr factor() {
    if (accept('-')) return -factor();
    Expr base = atom();
    if (accept('^')) return Expr::pow(base, signed_rational());
    return base;
  }

  long integer(bool allow_sign) {
    skip_ws();
    const std::size_t start = pos_;
    bool negative = false;
    if (allow_sign && pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) {
      negative = src_[pos_] == '-';
      ++pos_;
      skip_ws();
    }
    const std::size_t digits = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (digits == pos_) fail_at("malformed exponent: expected integer", start);
    if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E'))
      fail_at("malformed exponent: exponents must be integers or (p/q)", start);
    long value = 0;
    auto [ptr, ec] = std::from_chars(src_.data() + digits, src_.data() + pos_, value);
    if (ec != std::errc{}) fail_at("malformed exponent: integer out of range", start);
    return negative ? -value : value;
  }

  Rational signed_rational() {
    skip_ws();
    if (accept('(')) {
      const std::size_t at = pos_;
      long num = integer(true);
      expect('/');
      long den = integer(true);
      expect(')');
      if (den == 0) fail_at("malformed exponent: zero denominator", at);
      return Rational(num, den);
    }
    return Rational(integer(true));
  }

  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }
    if (pos_ == start + 1 && src_[start] == '.') fail_at("malformed number", start);
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_++;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      const std::size_t digits = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (digits == pos_) fail_at("malformed number exponent", save);
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc{} || ptr != src_.data() + pos_) fail_at("malformed number", start);
    return Expr::constant(v);
  }

  Expr atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      const std::string_view id = src_.substr(start, pos_ - start);
      if (auto fn = functions().find(id); fn != functions().end()) {
        if (!accept('(')) fail("expected '(' after function name");
        Expr arg = expr();
        expect(')');
        return Expr::apply(fn->second, arg);
      }
      if (params_.count(std::string(id))) return Expr::param(std::string(id));
      if (auto v = jet_identifiers().find(id); v != jet_identifiers().end())
        return Expr::var(v->second);
      fail_at("undeclared identifier '" + std::string(id) + "'", start);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view src_;
  const std::set<std::string>& params_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view source, const std::set<std::string>& declared_params) {
  for (const auto& p : declared_params) {
    if (jet_identifiers().count(p) || functions().count(p))
      throw ParseError("parameter name '" + p + "' collides with a reserved identifier", 0);
  }
  Parser parser(source, declared_params);
  return parser.parse_all();
}

std::string format_parse_error(std::string_view source, const ParseError& err) {
  std::string out = "parse error at column " + std::to_string(err.position() + 1) + ": " + err.what() + "\n";
  out += "  ";
  out += source;
  out += "\n  ";
  out += std::string(std::min(err.position(), source.size()), ' ');
  out += "^";
  return out;
}

}  // namespace peakon
