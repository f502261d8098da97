#include "xlie/parser.hpp"

#include <cctype>
#include <memory>

namespace xlie {

namespace {

bool ident_head(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
}
bool ident_tail(char c) { return ident_head(c) || (c >= '0' && c <= '9'); }

struct Token {
  enum class Kind {
    kIdent, kString, kLBracket, kRBracket, kLParen, kRParen, kComma, kEquals,
    kEnd, kBad
  };
  Kind kind = Kind::kEnd;
  std::string text;       // identifier name or decoded string payload
  std::size_t begin = 0;  // byte offsets in the input
  std::size_t end = 0;
};

class Lexer {
 public:
  Lexer(std::string_view input, std::size_t start)
      : input_(input), pos_(start) {}

  Token next() {
    skip_ws();
    Token token;
    token.begin = pos_;
    if (pos_ >= input_.size()) {
      token.kind = Token::Kind::kEnd;
      token.end = pos_;
      return token;
    }
    char c = input_[pos_];
    switch (c) {
      case '[': token.kind = Token::Kind::kLBracket; ++pos_; break;
      case ']': token.kind = Token::Kind::kRBracket; ++pos_; break;
      case '(': token.kind = Token::Kind::kLParen; ++pos_; break;
      case ')': token.kind = Token::Kind::kRParen; ++pos_; break;
      case ',': token.kind = Token::Kind::kComma; ++pos_; break;
      case '=': token.kind = Token::Kind::kEquals; ++pos_; break;
      case '"':
      case '\'':
        return lex_string();
      default:
        if (ident_head(c)) return lex_ident();
        token.kind = Token::Kind::kBad;
        token.text = std::string(1, c);
        ++pos_;
        break;
    }
    token.end = pos_;
    return token;
  }

 private:
  void skip_ws() {
    while (pos_ < input_.size() &&
           (input_[pos_] == ' ' || input_[pos_] == '\t' ||
            input_[pos_] == '\n' || input_[pos_] == '\r')) {
      ++pos_;
    }
  }

  Token lex_ident() {
    Token token;
    token.kind = Token::Kind::kIdent;
    token.begin = pos_;
    while (pos_ < input_.size() && ident_tail(input_[pos_])) ++pos_;
    token.end = pos_;
    token.text =
        std::string(input_.substr(token.begin, token.end - token.begin));
    return token;
  }

  // Both quote styles accepted; \" \' \\ unescape, any other backslash pair
  // passes through unchanged.
  Token lex_string() {
    Token token;
    token.begin = pos_;
    char delim = input_[pos_];
    ++pos_;
    std::string value;
    while (pos_ < input_.size()) {
      char c = input_[pos_];
      if (c == '\\' && pos_ + 1 < input_.size()) {
        char escaped = input_[pos_ + 1];
        if (escaped == '"' || escaped == '\'' || escaped == '\\') {
          value.push_back(escaped);
        } else {
          value.push_back('\\');
          value.push_back(escaped);
        }
        pos_ += 2;
        continue;
      }
      if (c == delim) {
        ++pos_;
        token.kind = Token::Kind::kString;
        token.text = std::move(value);
        token.end = pos_;
        return token;
      }
      value.push_back(c);
      ++pos_;
    }
    token.kind = Token::Kind::kBad;
    token.text = "unterminated-string";
    token.end = pos_;
    return token;
  }

  std::string_view input_;
  std::size_t pos_ = 0;
};

struct Call;

// Untyped argument value in the parse tree.
struct Value {
  enum class Kind { kString, kCall, kList };
  Kind kind = Kind::kString;
  std::string text;
  const Call* call = nullptr;
  std::vector<Value> items;
};

struct Arg {
  std::string keyword;  // empty = positional
  Value value;
};

struct Call {
  std::string name;
  std::vector<Arg> args;
  std::size_t begin = 0;
  std::size_t end = 0;
};

class FatalParse {
 public:
  explicit FatalParse(std::string reason) : reason_(std::move(reason)) {}
  const std::string& reason() const { return reason_; }

 private:
  std::string reason_;
};

class CompletionParser {
 public:
  struct Element {
    const Call* call = nullptr;
    std::string raw;
    std::string drop_reason;  // set when the element is not a valid call
  };

  CompletionParser(std::string_view input, std::size_t start)
      : input_(input), lexer_(input, start) {}

  // Appends elements to `out` as they complete, so a fatal error still
  // leaves the valid prefix available to the caller.
  void parse_top_list(std::vector<Element>& out) {
    advance();
    expect(Token::Kind::kLBracket, "expected '[' after results =");
    if (current_.kind == Token::Kind::kRBracket) {
      advance();
      return;
    }
    while (true) {
      out.push_back(parse_top_element());
      if (current_.kind == Token::Kind::kComma) {
        advance();
        // Python-style trailing comma.
        if (current_.kind == Token::Kind::kRBracket) {
          advance();
          return;
        }
        continue;
      }
      if (current_.kind == Token::Kind::kRBracket) {
        advance();
        return;
      }
      throw FatalParse(
          current_.kind == Token::Kind::kEnd
              ? "unbalanced-brackets: input ends inside results list"
              : "unexpected-token: '" + current_.text + "' in results list");
    }
  }

 private:
  void advance() {
    current_ = lexer_.next();
    if (current_.kind == Token::Kind::kBad) {
      throw FatalParse(current_.text == "unterminated-string"
                           ? "unbalanced-brackets: unterminated string"
                           : "unexpected-character: '" + current_.text + "'");
    }
  }

  void expect(Token::Kind kind, const std::string& what) {
    if (current_.kind != kind) {
      throw FatalParse(current_.kind == Token::Kind::kEnd
                           ? "unbalanced-brackets: " + what
                           : "unexpected-token: " + what);
    }
    advance();
  }

  Element parse_top_element() {
    std::size_t begin = current_.begin;
    Element element;
    if (current_.kind == Token::Kind::kIdent) {
      Token ident = current_;
      advance();
      element.call = parse_call_after_name(ident, 1);
      element.raw = slice(begin, element.call->end);
      return element;
    }
    // Grammar-violating but balanced elements (bare strings or lists) are
    // skipped, not fatal.
    if (current_.kind == Token::Kind::kString ||
        current_.kind == Token::Kind::kLBracket) {
      parse_value(1);
      element.raw = slice(begin, last_end_);
      element.drop_reason = "not-a-call";
      return element;
    }
    throw FatalParse(
        current_.kind == Token::Kind::kEnd
            ? "unbalanced-brackets: input ends inside results list"
            : "unexpected-token: expected constructor call in results list");
  }

  // Parses `( args... )` for a call whose name token is already consumed.
  const Call* parse_call_after_name(const Token& ident, int depth) {
    if (depth + 1 > kMaxParseDepth) {
      throw FatalParse("depth-limit: nesting deeper than " +
                       std::to_string(kMaxParseDepth));
    }
    auto call = std::make_unique<Call>();
    call->begin = ident.begin;
    call->name = ident.text;
    expect(Token::Kind::kLParen, "expected '(' after class name");
    if (current_.kind != Token::Kind::kRParen) {
      while (true) {
        call->args.push_back(parse_arg(depth + 1));
        if (current_.kind == Token::Kind::kComma) {
          advance();
          if (current_.kind == Token::Kind::kRParen) break;  // trailing comma
          continue;
        }
        if (current_.kind == Token::Kind::kRParen) break;
        throw FatalParse(current_.kind == Token::Kind::kEnd
                             ? "unbalanced-brackets: input ends inside call"
                             : "unexpected-token: '" + current_.text +
                                   "' inside call arguments");
      }
    }
    call->end = current_.end;
    last_end_ = current_.end;
    advance();
    calls_.push_back(std::move(call));
    return calls_.back().get();
  }

  Arg parse_arg(int depth) {
    Arg arg;
    if (current_.kind == Token::Kind::kIdent) {
      Token ident = current_;
      advance();
      if (current_.kind == Token::Kind::kEquals) {
        advance();
        arg.keyword = ident.text;
        arg.value = parse_value_or_call(depth);
        return arg;
      }
      if (current_.kind == Token::Kind::kLParen) {
        arg.value.kind = Value::Kind::kCall;
        arg.value.call = parse_call_after_name(ident, depth);
        return arg;
      }
      throw FatalParse("unexpected-token: bare identifier '" + ident.text +
                       "' as argument");
    }
    arg.value = parse_value(depth);
    return arg;
  }

  Value parse_value_or_call(int depth) {
    if (current_.kind == Token::Kind::kIdent) {
      Token ident = current_;
      advance();
      if (current_.kind != Token::Kind::kLParen) {
        throw FatalParse("unexpected-token: bare identifier '" + ident.text +
                         "'");
      }
      Value value;
      value.kind = Value::Kind::kCall;
      value.call = parse_call_after_name(ident, depth);
      return value;
    }
    return parse_value(depth);
  }

  Value parse_value(int depth) {
    Value value;
    switch (current_.kind) {
      case Token::Kind::kString:
        value.kind = Value::Kind::kString;
        value.text = current_.text;
        last_end_ = current_.end;
        advance();
        return value;
      case Token::Kind::kIdent:
        return parse_value_or_call(depth);
      case Token::Kind::kLBracket: {
        if (depth + 1 > kMaxParseDepth) {
          throw FatalParse("depth-limit: nesting deeper than " +
                           std::to_string(kMaxParseDepth));
        }
        advance();
        value.kind = Value::Kind::kList;
        if (current_.kind == Token::Kind::kRBracket) {
          last_end_ = current_.end;
          advance();
          return value;
        }
        while (true) {
          value.items.push_back(parse_value_or_call(depth + 1));
          if (current_.kind == Token::Kind::kComma) {
            advance();
            if (current_.kind == Token::Kind::kRBracket) {
              last_end_ = current_.end;
              advance();
              return value;
            }
            continue;
          }
          if (current_.kind == Token::Kind::kRBracket) {
            last_end_ = current_.end;
            advance();
            return value;
          }
          throw FatalParse(current_.kind == Token::Kind::kEnd
                               ? "unbalanced-brackets: input ends inside list"
                               : "unexpected-token: '" + current_.text +
                                     "' inside list");
        }
      }
      case Token::Kind::kEnd:
        throw FatalParse(
            "unbalanced-brackets: input ends where a value was expected");
      default:
        throw FatalParse("unexpected-token: '" + current_.text + "'");
    }
  }

  std::string slice(std::size_t begin, std::size_t end) const {
    if (end <= begin || begin >= input_.size()) return {};
    return std::string(
        input_.substr(begin, std::min(end, input_.size()) - begin));
  }

  std::string_view input_;
  Lexer lexer_;
  Token current_;
  std::size_t last_end_ = 0;
  std::vector<std::unique_ptr<Call>> calls_;  // stable addresses for Elements
};

// --- Schema validation: parse tree -> ExtractionInstance -------------------

struct DropError {
  std::string reason;
};

ExtractionInstance instance_from_call(const Call& call,
                                      const Ontology& ontology);

Slot slot_from_value(const Attribute& attribute, const Value& value,
                     const Ontology& ontology) {
  Slot slot;
  slot.name = attribute.name;
  slot.kind = attribute.kind;
  switch (attribute.kind) {
    case SlotKind::kSpan:
      if (value.kind != Value::Kind::kString) {
        throw DropError{"kind-mismatch: " + attribute.name +
                        " expects a string"};
      }
      slot.span.text = value.text;
      return slot;
    case SlotKind::kRef:
      if (value.kind != Value::Kind::kCall) {
        throw DropError{"kind-mismatch: " + attribute.name +
                        " expects a constructor call"};
      }
      slot.children.push_back(instance_from_call(*value.call, ontology));
      return slot;
    case SlotKind::kRefList:
      if (value.kind != Value::Kind::kList) {
        throw DropError{"kind-mismatch: " + attribute.name +
                        " expects a list"};
      }
      for (const Value& item : value.items) {
        if (item.kind != Value::Kind::kCall) {
          throw DropError{"kind-mismatch: list items of " + attribute.name +
                          " must be constructor calls"};
        }
        slot.children.push_back(instance_from_call(*item.call, ontology));
      }
      return slot;
  }
  throw DropError{"kind-mismatch"};
}

ExtractionInstance instance_from_call(const Call& call,
                                      const Ontology& ontology) {
  const Concept* concept_def = ontology.find_concept(call.name);
  if (!concept_def) throw DropError{"unknown-class: " + call.name};

  const std::vector<Attribute>& attributes = concept_def->attributes;
  std::vector<std::optional<Slot>> by_attribute(attributes.size());
  bool seen_keyword = false;
  std::size_t positional_index = 0;
  for (const Arg& arg : call.args) {
    if (arg.keyword.empty()) {
      if (seen_keyword) {
        throw DropError{"positional-after-keyword in " + call.name};
      }
      if (positional_index >= attributes.size()) {
        throw DropError{"wrong-arity: " + call.name + " takes " +
                        std::to_string(attributes.size()) + " arguments"};
      }
      by_attribute[positional_index] =
          slot_from_value(attributes[positional_index], arg.value, ontology);
      ++positional_index;
    } else {
      seen_keyword = true;
      std::size_t index = 0;
      while (index < attributes.size() &&
             attributes[index].name != arg.keyword) {
        ++index;
      }
      if (index == attributes.size()) {
        throw DropError{"unknown-keyword: " + arg.keyword + " in " +
                        call.name};
      }
      if (by_attribute[index].has_value()) {
        throw DropError{"duplicate-slot: " + arg.keyword + " in " + call.name};
      }
      by_attribute[index] =
          slot_from_value(attributes[index], arg.value, ontology);
    }
  }

  // Slots end up in declaration order regardless of keyword order.
  ExtractionInstance instance;
  instance.concept_id = call.name;
  for (auto& slot : by_attribute) {
    if (slot.has_value()) instance.slots.push_back(std::move(*slot));
  }
  return instance;
}

// --- Offset resolution ------------------------------------------------------

class OffsetResolver {
 public:
  explicit OffsetResolver(std::string_view sentence)
      : sentence_(utf8::decode(sentence)) {}

  // Leftmost unused occurrence; falls back to the leftmost occurrence when
  // every one is taken. Absent only when the text does not occur at all.
  std::optional<utf8::Interval> resolve(const std::string& text) {
    std::u32string needle = utf8::decode(text);
    if (needle.empty()) return std::nullopt;
    std::optional<utf8::Interval> first;
    std::size_t from = 0;
    while (auto pos = utf8::find(sentence_, needle, from)) {
      utf8::Interval candidate{*pos, *pos + needle.size()};
      if (!first) first = candidate;
      bool taken = false;
      for (const utf8::Interval& interval : used_) {
        if (interval.overlaps(candidate)) {
          taken = true;
          break;
        }
      }
      if (!taken) {
        used_.push_back(candidate);
        return candidate;
      }
      from = *pos + 1;
    }
    return first;
  }

  void claim(const std::vector<utf8::Interval>& intervals) {
    used_.insert(used_.end(), intervals.begin(), intervals.end());
  }

 private:
  std::u32string sentence_;
  std::vector<utf8::Interval> used_;
};

void resolve_instance_offsets(ExtractionInstance& instance,
                              OffsetResolver& resolver, std::size_t top_index,
                              ParseReport& report) {
  for (Slot& slot : instance.slots) {
    if (slot.kind == SlotKind::kSpan) {
      slot.span.offset = resolver.resolve(slot.span.text);
      if (!slot.span.offset) {
        report.unresolved.push_back(
            UnresolvedSpan{top_index, slot.name, slot.span.text});
      }
    } else {
      for (ExtractionInstance& child : slot.children) {
        resolve_instance_offsets(child, resolver, top_index, report);
      }
    }
  }
}

// Finds `results` as a standalone identifier followed by `=` and `[`;
// returns the position just after the `=`.
std::optional<std::size_t> find_anchor(std::string_view text) {
  std::size_t pos = 0;
  while ((pos = text.find("results", pos)) != std::string_view::npos) {
    bool standalone = (pos == 0 || !ident_tail(text[pos - 1]));
    std::size_t after = pos + 7;
    if (standalone && (after >= text.size() || !ident_tail(text[after]))) {
      std::size_t i = after;
      while (i < text.size() &&
             std::isspace(static_cast<unsigned char>(text[i]))) {
        ++i;
      }
      if (i < text.size() && text[i] == '=') {
        std::size_t j = i + 1;
        while (j < text.size() &&
               std::isspace(static_cast<unsigned char>(text[j]))) {
          ++j;
        }
        if (j < text.size() && text[j] == '[') return i + 1;
      }
    }
    pos = after;
  }
  return std::nullopt;
}

}  // namespace

std::optional<utf8::Interval> resolve_offsets(
    std::string_view span_text, std::string_view sentence,
    const std::vector<utf8::Interval>& used) {
  std::u32string haystack = utf8::decode(sentence);
  std::u32string needle = utf8::decode(span_text);
  if (needle.empty()) return std::nullopt;
  std::size_t from = 0;
  while (auto pos = utf8::find(haystack, needle, from)) {
    utf8::Interval candidate{*pos, *pos + needle.size()};
    bool taken = false;
    for (const utf8::Interval& interval : used) {
      if (interval.overlaps(candidate)) {
        taken = true;
        break;
      }
    }
    if (!taken) return candidate;
    from = *pos + 1;
  }
  return std::nullopt;
}

namespace {

void resolve_slots_in_place(ExtractionInstance& instance,
                            OffsetResolver& resolver) {
  for (Slot& slot : instance.slots) {
    if (slot.kind == SlotKind::kSpan) {
      if (!slot.span.offset) {
        slot.span.offset = resolver.resolve(slot.span.text);
      }
    } else {
      for (ExtractionInstance& child : slot.children) {
        resolve_slots_in_place(child, resolver);
      }
    }
  }
}

void claim_existing(const ExtractionInstance& instance,
                    std::vector<utf8::Interval>& used) {
  for (const Slot& slot : instance.slots) {
    if (slot.kind == SlotKind::kSpan) {
      if (slot.span.offset) used.push_back(*slot.span.offset);
    } else {
      for (const ExtractionInstance& child : slot.children) {
        claim_existing(child, used);
      }
    }
  }
}

}  // namespace

void resolve_sample_offsets(Sample& sample) {
  OffsetResolver resolver(sample.sentence);
  std::vector<utf8::Interval> existing;
  for (const ExtractionInstance& instance : sample.instances) {
    claim_existing(instance, existing);
  }
  resolver.claim(existing);
  for (ExtractionInstance& instance : sample.instances) {
    resolve_slots_in_place(instance, resolver);
  }
}

ParseReport parse_completion(std::string_view text, const Ontology& ontology,
                             std::string_view sentence) {
  ParseReport report;
  auto anchor = find_anchor(text);
  if (!anchor) {
    report.fatal = "no-results-marker: completion lacks `results = [`";
    return report;
  }

  CompletionParser parser(text, *anchor);
  std::vector<CompletionParser::Element> elements;
  try {
    parser.parse_top_list(elements);
  } catch (const FatalParse& fatal) {
    report.fatal = fatal.reason();
    for (const auto& element : elements) {
      report.dropped.push_back(DroppedCall{
          element.raw,
          element.drop_reason.empty() ? "truncated-input"
                                      : element.drop_reason});
    }
    return report;
  }

  OffsetResolver resolver(sentence);
  for (const auto& element : elements) {
    if (element.call == nullptr) {
      report.dropped.push_back(DroppedCall{element.raw, element.drop_reason});
      continue;
    }
    try {
      ExtractionInstance instance = instance_from_call(*element.call, ontology);
      resolve_instance_offsets(instance, resolver, report.instances.size(),
                               report);
      report.instances.push_back(std::move(instance));
    } catch (const DropError& drop) {
      report.dropped.push_back(DroppedCall{element.raw, drop.reason});
    }
  }
  return report;
}

}  // namespace xlie
