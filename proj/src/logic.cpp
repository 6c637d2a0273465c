#include "dpl/logic.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <set>

#include "dpl/error.hpp"

namespace dpl {

const std::string& Rule::field() const {
  return std::visit([](const auto& b) -> const std::string& { return b.field; }, body);
}

const char* field_type_name(FieldType t) {
  switch (t) {
    case FieldType::boolean: return "bool";
    case FieldType::real: return "real";
    case FieldType::key: return "key";
    case FieldType::pairs: return "pairs";
  }
  return "?";
}

std::optional<FieldType> Schema::type_of(const std::string& name) const {
  auto it = fields.find(name);
  if (it == fields.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> Program::learnable_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rules.size(); ++i)
    if (rules[i].weight.is_learnable()) out.push_back(i);
  return out;
}

Program Program::restricted_to_tags(const std::vector<std::string>& tags) const {
  Program p;
  p.schema = schema;
  for (const auto& r : rules) {
    if (r.tag.empty()) {
      p.rules.push_back(r);
      continue;
    }
    for (const auto& t : tags)
      if (r.tag == t) {
        p.rules.push_back(r);
        break;
      }
  }
  return p;
}

namespace {

// Minimal position-tracked scanner over one rule line.
class LineScanner {
 public:
  explicit LineScanner(const std::string& s) : s_(s) {}

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ >= s_.size();
  }

  std::size_t col() const { return pos_ + 1; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(strfmt("col %zu: %s", pos_ + 1, what.c_str()));
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != c) fail(strfmt("expected '%c'", c));
    ++pos_;
  }

  bool try_consume(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::string ident() {
    skip_ws();
    std::size_t start = pos_;
    if (pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      ++pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
    }
    if (pos_ == start) fail("expected identifier");
    return s_.substr(start, pos_ - start);
  }

  double real() {
    skip_ws();
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("expected number");
    // strtod accepts inf/nan spellings; the grammar does not.
    if (!std::isfinite(v)) fail("non-finite weight literal");
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  bool peek_number() {
    skip_ws();
    if (pos_ >= s_.size()) return false;
    char c = s_[pos_];
    return std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

std::string strip_comment(const std::string& line) {
  auto h = line.find('#');
  return h == std::string::npos ? line : line.substr(0, h);
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string format_weight_value(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Rule parse_rule(const std::string& text) {
  std::string line = strip_comment(text);
  LineScanner sc(line);

  Rule rule;
  if (sc.peek_number()) {
    rule.weight = Weight::fixed(sc.real());
  } else {
    std::size_t at = sc.col();
    std::string tok = sc.ident();
    if (tok == "learn") {
      sc.expect('(');
      rule.weight = Weight::learnable(sc.real());
      sc.expect(')');
    } else if (tok == "hard") {
      rule.weight = Weight::hard();
    } else if (tok == "inf" || tok == "nan" || tok == "infinity") {
      throw ConfigError(strfmt("col %zu: non-finite weight literal", at));
    } else {
      throw ConfigError(strfmt("col %zu: unknown weight token '%s'", at, tok.c_str()));
    }
  }
  sc.expect(':');

  std::size_t body_at = sc.col();
  std::string kind = sc.ident();
  sc.expect('(');
  if (kind == "vote") {
    bool positive;
    if (sc.try_consume('+')) {
      positive = true;
    } else if (sc.try_consume('-')) {
      positive = false;
    } else {
      sc.fail("expected '+' or '-' polarity");
    }
    rule.body = Vote{sc.ident(), positive};
  } else if (kind == "at_least_one") {
    rule.body = AtLeastOne{sc.ident()};
  } else if (kind == "agree") {
    rule.body = Agree{sc.ident()};
  } else {
    throw ConfigError(strfmt("col %zu: unknown rule body '%s'", body_at, kind.c_str()));
  }
  sc.expect(')');
  if (!sc.at_end()) sc.fail("trailing characters after rule");
  return rule;
}

std::string render_rule(const Rule& rule) {
  std::string w;
  switch (rule.weight.kind) {
    case Weight::Kind::fixed:
      w = format_weight_value(rule.weight.init);
      break;
    case Weight::Kind::learnable:
      w = "learn(" + format_weight_value(rule.weight.init) + ")";
      break;
    case Weight::Kind::hard:
      w = "hard";
      break;
  }
  std::string body = std::visit(
      [](const auto& b) -> std::string {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, Vote>)
          return std::string("vote(") + (b.positive ? "+" : "-") + b.field + ")";
        else if constexpr (std::is_same_v<T, AtLeastOne>)
          return "at_least_one(" + b.field + ")";
        else
          return "agree(" + b.field + ")";
      },
      rule.body);
  return w + ": " + body;
}

std::vector<Rule> parse_program_text(const std::string& text) {
  std::vector<Rule> rules;
  std::string current_tag;
  std::string pending_name;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    std::string line = text.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
    start = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      std::string body = trim(t.substr(1));
      if (body.rfind("tag:", 0) == 0) current_tag = trim(body.substr(4));
      if (body.rfind("name:", 0) == 0) pending_name = trim(body.substr(5));
      continue;
    }
    Rule r;
    try {
      r = parse_rule(line);
    } catch (const ConfigError& e) {
      throw ConfigError(strfmt("line %zu: %s", line_no, e.what()));
    }
    r.tag = current_tag;
    r.name = pending_name.empty() ? "r" + std::to_string(rules.size() + 1) : pending_name;
    pending_name.clear();
    rules.push_back(std::move(r));
  }
  return rules;
}

Program validate_program(std::vector<Rule> rules, Schema schema) {
  if (schema.feature_dim < 0) throw ConfigError("schema: negative feature dimension");
  std::set<std::string> names;
  for (const auto& r : rules) {
    if (!r.name.empty() && !names.insert(r.name).second)
      throw ConfigError("duplicate rule name: " + r.name);

    FieldType required = std::visit(
        [](const auto& b) {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, Vote>)
            return FieldType::boolean;
          else if constexpr (std::is_same_v<T, AtLeastOne>)
            return FieldType::key;
          else
            return FieldType::pairs;
        },
        r.body);
    auto actual = schema.type_of(r.field());
    if (!actual)
      throw ConfigError(strfmt("rule %s: unknown field '%s'", r.name.c_str(), r.field().c_str()));
    if (*actual != required)
      throw ConfigError(strfmt("rule %s: field '%s' has type %s, needs %s", r.name.c_str(),
                               r.field().c_str(), field_type_name(*actual),
                               field_type_name(required)));
  }
  Program p;
  p.rules = std::move(rules);
  p.schema = std::move(schema);
  return p;
}

}  // namespace dpl
