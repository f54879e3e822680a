#pragma once

#include <cctype>
#include <sstream>
#include <string>
#include <vector>

#include "mealy.hpp"

namespace apartlearn {

class DotParseError : public Error {
public:
    DotParseError(std::int32_t line, const std::string& what)
        : Error("dot parse error at line " + std::to_string(line) + ": " + what), line(line) {}
    std::int32_t line;
};

struct DotParseResult {
    MealyMachine machine;
    std::vector<std::string> warnings;
};

namespace detail {

struct DotToken {
    enum Kind { ident, punct, arrow, eof } kind = eof;
    std::string text;
    std::int32_t line = 1;
};

class DotLexer {
public:
    explicit DotLexer(std::string_view text) : text_(text) {}

    DotToken next() {
        skip_space_and_comments();
        DotToken tok;
        tok.line = line_;
        if (pos_ >= text_.size()) return tok;
        char c = text_[pos_];
        if (c == '-' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '>') {
            pos_ += 2;
            tok.kind = DotToken::arrow;
            tok.text = "->";
            return tok;
        }
        if (std::strchr("{}[]=;,", c)) {
            ++pos_;
            tok.kind = DotToken::punct;
            tok.text = std::string(1, c);
            return tok;
        }
        if (c == '"') {
            ++pos_;
            std::string out;
            while (pos_ < text_.size() && text_[pos_] != '"') {
                if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
                    ++pos_;
                    // only quote and backslash escapes collapse; others stay verbatim
                    if (text_[pos_] != '"' && text_[pos_] != '\\') out.push_back('\\');
                }
                if (text_[pos_] == '\n') ++line_;
                out.push_back(text_[pos_++]);
            }
            if (pos_ >= text_.size()) throw DotParseError(tok.line, "unterminated string");
            ++pos_;
            tok.kind = DotToken::ident;
            tok.text = std::move(out);
            return tok;
        }
        if (is_ident_char(c)) {
            std::string out;
            while (pos_ < text_.size() && is_ident_char(text_[pos_])) out.push_back(text_[pos_++]);
            tok.kind = DotToken::ident;
            tok.text = std::move(out);
            return tok;
        }
        throw DotParseError(line_, std::string("unexpected character '") + c + "'");
    }

private:
    static bool is_ident_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-' ||
               c == '+';
    }

    void skip_space_and_comments() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '\n') {
                ++line_;
                ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
                pos_ += 2;
                while (pos_ + 1 < text_.size() && !(text_[pos_] == '*' && text_[pos_ + 1] == '/')) {
                    if (text_[pos_] == '\n') ++line_;
                    ++pos_;
                }
                if (pos_ + 1 >= text_.size()) throw DotParseError(line_, "unterminated comment");
                pos_ += 2;
            } else {
                break;
            }
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::int32_t line_ = 1;
};

inline std::string trim_copy(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline bool dot_name_needs_quotes(const std::string& name) {
    if (name.empty()) return true;
    bool numeral = true;
    for (char c : name)
        if (!std::isdigit(static_cast<unsigned char>(c))) numeral = false;
    if (numeral) return false;
    if (std::isdigit(static_cast<unsigned char>(name[0]))) return true;
    for (char c : name)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return true;
    return false;
}

inline std::string dot_quote(const std::string& name) {
    if (!dot_name_needs_quotes(name)) return name;
    std::string out = "\"";
    for (char c : name) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

} // namespace detail

/// Parses the DOT subset: a `digraph` whose edges carry `label="in/out"`.
/// The initial state is the target of an edge from a `__start*` node when one
/// exists, otherwise the source of the first edge. Node declarations are
/// ignored, labels are split at the first '/', and both halves are trimmed.
/// Unreachable states are dropped with a warning.
inline DotParseResult parse_dot(std::string_view text) {
    using detail::DotToken;
    detail::DotLexer lex(text);
    DotToken tok = lex.next();

    auto expect_ident = [&](const char* what) {
        if (tok.kind != DotToken::ident)
            throw DotParseError(tok.line, std::string("expected ") + what);
        std::string s = std::move(tok.text);
        std::int32_t line = tok.line;
        tok = lex.next();
        return std::pair<std::string, std::int32_t>(std::move(s), line);
    };
    auto expect_punct = [&](char c) {
        if (tok.kind != DotToken::punct || tok.text[0] != c)
            throw DotParseError(tok.line, std::string("expected '") + c + "'");
        tok = lex.next();
    };

    auto [kw, kw_line] = expect_ident("'digraph'");
    if (kw != "digraph") throw DotParseError(kw_line, "expected 'digraph'");
    if (tok.kind == DotToken::ident) tok = lex.next(); // optional graph name
    expect_punct('{');

    struct RawEdge {
        std::string src, dst, label;
        bool has_label = false;
        std::int32_t line;
    };
    std::vector<RawEdge> edges;
    std::vector<std::pair<std::string, std::int32_t>> start_edges;

    while (!(tok.kind == DotToken::punct && tok.text[0] == '}')) {
        if (tok.kind == DotToken::eof) throw DotParseError(tok.line, "missing '}'");
        if (tok.kind == DotToken::punct && tok.text[0] == ';') {
            tok = lex.next();
            continue;
        }
        auto [name, name_line] = expect_ident("a node or edge statement");

        bool is_edge = tok.kind == DotToken::arrow;
        std::string dst;
        if (is_edge) {
            tok = lex.next();
            dst = expect_ident("an edge target").first;
            if (tok.kind == DotToken::arrow)
                throw DotParseError(tok.line, "chained edge statements are not supported");
        }

        std::string label;
        bool has_label = false;
        while (tok.kind == DotToken::punct && tok.text[0] == '[') {
            tok = lex.next();
            while (!(tok.kind == DotToken::punct && tok.text[0] == ']')) {
                auto [key, key_line] = expect_ident("an attribute name");
                expect_punct('=');
                auto [value, value_line] = expect_ident("an attribute value");
                (void)key_line;
                (void)value_line;
                if (key == "label") {
                    label = value;
                    has_label = true;
                }
                if (tok.kind == DotToken::punct && (tok.text[0] == ',' || tok.text[0] == ';'))
                    tok = lex.next();
            }
            tok = lex.next();
        }
        if (tok.kind == DotToken::punct && tok.text[0] == ';') tok = lex.next();

        if (!is_edge) continue; // node declaration
        if (name.rfind("__start", 0) == 0) {
            start_edges.emplace_back(dst, name_line);
            continue;
        }
        edges.push_back({std::move(name), std::move(dst), std::move(label), has_label, name_line});
    }

    if (edges.empty()) throw DotParseError(tok.line, "no states (graph has no labelled edges)");

    Alphabet state_names;
    std::string initial_name = start_edges.empty() ? edges.front().src : start_edges.front().first;
    state_names.intern(initial_name);
    for (const auto& e : edges) {
        state_names.intern(e.src);
        state_names.intern(e.dst);
    }

    Alphabet inputs;
    std::vector<std::tuple<StateId, InputId, std::string, StateId, std::int32_t>> parsed;
    for (const auto& e : edges) {
        if (!e.has_label) throw DotParseError(e.line, "edge is missing a label");
        auto slash = e.label.find('/');
        if (slash == std::string::npos)
            throw DotParseError(e.line, "edge label '" + e.label + "' has no '/' separator");
        std::string in = detail::trim_copy(std::string_view(e.label).substr(0, slash));
        std::string out = detail::trim_copy(std::string_view(e.label).substr(slash + 1));
        if (in.empty()) throw DotParseError(e.line, "empty input symbol in edge label");
        parsed.emplace_back(*state_names.find(e.src), inputs.intern(in), std::move(out),
                            *state_names.find(e.dst), e.line);
    }

    MealyBuilder builder(inputs);
    for (const auto& n : state_names.names()) builder.add_state(n);
    for (auto& [src, in, out, dst, line] : parsed) {
        try {
            builder.add_transition(src, in, builder.intern_output(out), dst);
        } catch (const Error& e) {
            throw DotParseError(line, e.what());
        }
    }
    MealyMachine full = builder.build(*state_names.find(initial_name));

    DotParseResult result{full, {}};
    auto keep = reachable_states(full);
    if (std::find(keep.begin(), keep.end(), false) != keep.end()) {
        MealyBuilder pruned(full.inputs());
        std::vector<StateId> remap(static_cast<size_t>(full.num_states()), NO_STATE);
        for (StateId q = 0; q < full.num_states(); ++q) {
            if (keep[static_cast<size_t>(q)])
                remap[static_cast<size_t>(q)] = pruned.add_state(full.state_name(q));
            else
                result.warnings.push_back("dropping unreachable state '" + full.state_name(q) + "'");
        }
        for (StateId q = 0; q < full.num_states(); ++q) {
            if (!keep[static_cast<size_t>(q)]) continue;
            for (InputId i = 0; i < full.num_inputs(); ++i) {
                auto t = full.transition(q, i);
                if (t.defined())
                    pruned.add_transition(remap[static_cast<size_t>(q)], i,
                                          pruned.intern_output(full.outputs().name(t.output)),
                                          remap[static_cast<size_t>(t.next)]);
            }
        }
        result.machine = pruned.build(remap[static_cast<size_t>(full.initial())]);
    }
    return result;
}

inline std::string render_dot(const MealyMachine& m, const std::string& graph_name = "g") {
    std::ostringstream out;
    out << "digraph " << detail::dot_quote(graph_name) << " {\n";
    out << "  __start0 [label=\"\", shape=none];\n";
    out << "  __start0 -> " << detail::dot_quote(m.state_name(m.initial())) << ";\n";
    for (StateId q = 0; q < m.num_states(); ++q) {
        for (InputId i = 0; i < m.num_inputs(); ++i) {
            auto t = m.transition(q, i);
            if (!t.defined()) continue;
            out << "  " << detail::dot_quote(m.state_name(q)) << " -> "
                << detail::dot_quote(m.state_name(t.next)) << " [label=\""
                << m.inputs().name(i) << "/" << m.outputs().name(t.output) << "\"];\n";
        }
    }
    out << "}\n";
    return out.str();
}

} // namespace apartlearn
