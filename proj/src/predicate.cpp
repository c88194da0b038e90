#include "nsbot/predicate.hpp"

#include <algorithm>
#include <cctype>

namespace nsbot {

namespace {

constexpr std::size_t kMaxNesting = 64;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// Characters that end a bare atom.
bool is_delimiter(char c) {
    switch (c) {
        case ',': case '(': case ')': case '[': case ']': case '.':
        case '\n': case '\r':
            return true;
        default:
            return false;
    }
}

bool is_structural(char c) {
    switch (c) {
        case ',': case '(': case ')': case '[': case ']': case '.':
            return true;
        default:
            return false;
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    PredicateSet parse_all() {
        PredicateSet out;
        skip_separators();
        while (!at_end()) {
            out.push_back(parse_predicate());
            skip_inline_space();
            if (at_end()) break;
            char c = peek();
            if (c != ',' && c != '.' && c != '\n' && c != '\r') {
                fail("',', '.' or newline between predicates");
            }
            skip_separators();
        }
        return out;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;

    bool at_end() const { return pos_ >= src_.size(); }
    char peek() const { return src_[pos_]; }

    [[noreturn]] void fail(std::string expected) const { fail_at(pos_, std::move(expected)); }
    [[noreturn]] void fail_at(std::size_t offset, std::string expected) const {
        throw SyntaxError(offset, std::move(expected));
    }

    void skip_space() {
        while (!at_end() && is_space(peek())) ++pos_;
    }
    void skip_inline_space() {
        while (!at_end() && is_space(peek()) && peek() != '\n' && peek() != '\r') ++pos_;
    }
    void skip_separators() {
        while (!at_end() && (is_space(peek()) || peek() == ',' || peek() == '.')) ++pos_;
    }

    std::string read_bare() {
        std::size_t start = pos_;
        while (!at_end() && !is_delimiter(peek())) ++pos_;
        return std::string(trim(src_.substr(start, pos_ - start)));
    }

    Predicate parse_predicate() {
        if (peek() == '\'' || is_delimiter(peek())) fail("functor");
        Predicate pred;
        pred.functor = read_bare();
        if (pred.functor.empty()) fail("functor");
        if (!at_end() && peek() == '(') {
            std::size_t open = pos_++;
            pred.args = parse_sequence(open, ')', 1);
        }
        return pred;
    }

    // Parses `value {, value}` up to `close`; the opener was already consumed.
    std::vector<Value> parse_sequence(std::size_t open, char close, std::size_t depth) {
        if (depth > kMaxNesting) fail_at(open, "nesting depth at most 64");
        std::vector<Value> items;
        skip_space();
        if (at_end()) unclosed(open, close);
        if (peek() == close) {
            ++pos_;
            return items;
        }
        for (;;) {
            items.push_back(parse_value(depth));
            skip_space();
            if (at_end()) unclosed(open, close);
            if (peek() == ',') {
                ++pos_;
                continue;
            }
            if (peek() == close) {
                ++pos_;
                return items;
            }
            fail(std::string("',' or '") + close + "'");
        }
    }

    [[noreturn]] void unclosed(std::size_t open, char close) const {
        fail_at(open, std::string("'") + close + "' to close '" + src_[open] + "'");
    }

    Value parse_value(std::size_t depth) {
        skip_space();
        if (at_end()) fail("value");
        char c = peek();
        if (c == '\'') return Value::atom(read_quoted());
        if (c == '[') {
            std::size_t open = pos_++;
            return Value::list(parse_sequence(open, ']', depth + 1));
        }
        if (is_delimiter(c)) fail("value");
        return Value::atom(read_bare());
    }

    std::string read_quoted() {
        std::size_t open = pos_++;
        std::string out;
        while (!at_end()) {
            char c = src_[pos_++];
            if (c == '\'') return out;
            if (c == '\\') {
                if (at_end()) break;
                out.push_back(src_[pos_++]);
            } else {
                out.push_back(c);
            }
        }
        fail_at(open, "closing quote");
    }
};

void append_quoted(std::string& out, std::string_view text) {
    out.push_back('\'');
    for (char c : text) {
        if (c == '\'' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('\'');
}

void append_value(std::string& out, const Value& v, SerializeStyle style) {
    if (v.is_list()) {
        out.push_back('[');
        bool first = true;
        for (const auto& item : v.items()) {
            if (!first) out.push_back(',');
            first = false;
            append_value(out, item, style);
        }
        out.push_back(']');
        return;
    }
    if (style == SerializeStyle::Concierge || !is_bare_safe(v.text())) {
        append_quoted(out, v.text());
    } else {
        out += v.text();
    }
}

void append_predicate(std::string& out, const Predicate& p, SerializeStyle style) {
    out += p.functor;
    if (p.args.empty()) return;
    out.push_back('(');
    bool first = true;
    for (const auto& arg : p.args) {
        if (!first) out.push_back(',');
        first = false;
        append_value(out, arg, style);
    }
    out.push_back(')');
}

} // namespace

Value Value::atom(std::string text) {
    Value v;
    v.data_ = std::move(text);
    return v;
}

Value Value::list(List items) {
    Value v;
    v.data_ = std::move(items);
    return v;
}

bool operator==(const Value& a, const Value& b) { return a.data_ == b.data_; }

bool operator<(const Value& a, const Value& b) {
    if (a.data_.index() != b.data_.index()) return a.data_.index() < b.data_.index();
    if (a.is_atom()) return a.text() < b.text();
    return std::lexicographical_compare(a.items().begin(), a.items().end(), b.items().begin(),
                                        b.items().end());
}

bool operator<(const Predicate& a, const Predicate& b) {
    if (a.functor != b.functor) return a.functor < b.functor;
    return std::lexicographical_compare(a.args.begin(), a.args.end(), b.args.begin(),
                                        b.args.end());
}

SyntaxError::SyntaxError(std::size_t offset, std::string expected)
    : Error("syntax error at offset " + std::to_string(offset) + ": expected " + expected),
      offset_(offset),
      expected_(std::move(expected)) {}

PredicateSet parse_predicates(std::string_view text) { return Parser(text).parse_all(); }

Predicate parse_predicate(std::string_view text) {
    auto preds = parse_predicates(text);
    if (preds.size() != 1) {
        throw SyntaxError(0, "exactly one predicate, found " + std::to_string(preds.size()));
    }
    return std::move(preds.front());
}

std::string serialize(const Predicate& pred, SerializeStyle style) {
    std::string out;
    append_predicate(out, pred, style);
    return out;
}

std::string serialize(const PredicateSet& preds, SerializeStyle style) {
    std::string out;
    bool first = true;
    for (const auto& p : preds) {
        if (!first) out += style == SerializeStyle::Concierge ? ",\n" : ". ";
        first = false;
        append_predicate(out, p, style);
    }
    if (style == SerializeStyle::Companion && !preds.empty()) out.push_back('.');
    return out;
}

bool is_bare_safe(std::string_view text) {
    if (text.empty() || text.front() == '\'') return false;
    if (is_space(text.front()) || is_space(text.back())) return false;
    return std::none_of(text.begin(), text.end(), is_delimiter);
}

bool is_valid_functor(std::string_view text) { return is_bare_safe(text); }

std::string normalize_whitespace(std::string_view text) {
    std::string collapsed;
    collapsed.reserve(text.size());
    for (char c : trim(text)) {
        if (is_space(c)) {
            if (collapsed.empty() || collapsed.back() != ' ') collapsed.push_back(' ');
        } else {
            collapsed.push_back(c);
        }
    }
    std::string out;
    out.reserve(collapsed.size());
    for (std::size_t i = 0; i < collapsed.size(); ++i) {
        char c = collapsed[i];
        if (c == ' ') {
            bool before = !out.empty() && is_structural(out.back());
            bool after = i + 1 < collapsed.size() && is_structural(collapsed[i + 1]);
            if (before || after) continue;
        }
        out.push_back(c);
    }
    return out;
}

Predicate make_predicate(std::string functor, std::vector<Value> args) {
    if (!is_valid_functor(functor)) throw Error("invalid functor '" + functor + "'");
    return Predicate{std::move(functor), std::move(args)};
}

Value atom(std::string text) { return Value::atom(std::move(text)); }

Value atom_list(const std::vector<std::string>& items) {
    Value::List list;
    list.reserve(items.size());
    for (const auto& s : items) list.push_back(Value::atom(s));
    return Value::list(std::move(list));
}

} // namespace nsbot
