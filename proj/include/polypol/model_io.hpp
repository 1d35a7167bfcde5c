#pragma once

/**
 * @file model_io.hpp
 * @brief Text formats: terms, instantiations, constraints, and JSON models.
 *
 * Term grammar (whitespace is free between tokens):
 *
 *   term     := addend (('+' | '-') addend)*      (a leading sign is allowed)
 *   addend   := rational ('*' ident)? | ident
 *   rational := integer ('/' positive-integer)?
 *
 * Constraint text: one inequality per line, `term rel term` with rel one of
 * `<=`, `<`, `>=`, `>`. Lines starting with `#` are comments, except that a
 * `# parameters: a, b, c` line fixes the parameter order. An empty body is True.
 *
 * Instantiation text: `name=rational` pairs separated by commas or newlines.
 *
 * Models are JSON documents tagged by "type": "pmdp" or "pdwg".
 */

#include "polypol/error.hpp"
#include "polypol/maxplus.hpp"
#include "polypol/mdp.hpp"
#include "polypol/param_core.hpp"
#include "polypol/rational.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_map>
#include <variant>
#include <vector>

namespace polypol {

/// What to do with identifiers that are not yet in the ParameterSet.
enum class UnknownParameters { Reject, Register };

namespace detail {

class TermLexer {
public:
    TermLexer(std::string_view text, std::size_t line, std::size_t column_offset)
        : text_(text), line_(line), offset_(column_offset) {}

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool at_end() {
        skip_space();
        return pos_ >= text_.size();
    }
    char peek() {
        skip_space();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }
    bool accept(char c) {
        if (peek() != c) return false;
        ++pos_;
        return true;
    }

    std::string_view identifier() {
        skip_space();
        std::size_t start = pos_;
        if (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
        }
        return text_.substr(start, pos_ - start);
    }

    std::string_view number() {
        skip_space();
        std::size_t start = pos_;
        auto digits = [this] {
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        };
        digits();
        if (pos_ > start && pos_ < text_.size() && text_[pos_] == '/') {
            ++pos_;
            digits();
        }
        return text_.substr(start, pos_ - start);
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw SyntaxError(message, line_, offset_ + pos_ + 1);
    }

    std::size_t position() const noexcept { return pos_; }

private:
    std::string_view text_;
    std::size_t line_;
    std::size_t offset_;
    std::size_t pos_ = 0;
};

inline LinearTerm parse_term(TermLexer& lex, ParameterSet& params, UnknownParameters unknown) {
    LinearTerm term;
    bool first = true;
    for (;;) {
        Rational sign = 1;
        if (lex.accept('+')) {
        } else if (lex.accept('-')) {
            sign = -1;
        } else if (!first) {
            break;
        }
        first = false;

        char c = lex.peek();
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string_view digits = lex.number();
            auto value = parse_rational(digits);
            if (!value) lex.fail("malformed rational '" + std::string(digits) + "'");
            Rational coefficient = sign * *value;
            if (lex.accept('*')) {
                std::string_view name = lex.identifier();
                if (name.empty()) lex.fail("expected a parameter name after '*'");
                std::optional<ParamId> id = params.find(name);
                if (!id) {
                    if (unknown == UnknownParameters::Reject)
                        lex.fail("undeclared parameter '" + std::string(name) + "'");
                    id = params.intern(std::string(name));
                }
                term += LinearTerm::parameter(*id, coefficient);
            } else {
                term += LinearTerm(coefficient);
            }
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string_view name = lex.identifier();
            std::optional<ParamId> id = params.find(name);
            if (!id) {
                if (unknown == UnknownParameters::Reject) lex.fail("undeclared parameter '" + std::string(name) + "'");
                id = params.intern(std::string(name));
            }
            term += LinearTerm::parameter(*id, sign);
        } else {
            lex.fail(c == '\0' ? "unexpected end of term" : std::string("unexpected character '") + c + "'");
        }
    }
    return term;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (end == text.size()) break;
        start = end + 1;
    }
    return lines;
}

}  // namespace detail

/// Parses one term. Throws SyntaxError (column is 1-based within `text`).
inline LinearTerm parse_term(std::string_view text, ParameterSet& params,
                             UnknownParameters unknown = UnknownParameters::Register) {
    detail::TermLexer lex(text, 1, 0);
    LinearTerm t = detail::parse_term(lex, params, unknown);
    if (!lex.at_end()) lex.fail("trailing input");
    return t;
}

/// Parses `name=value` pairs separated by commas and/or newlines.
inline Instantiation parse_instantiation(std::string_view text, ParameterSet& params,
                                         UnknownParameters unknown = UnknownParameters::Register) {
    Instantiation pi;
    auto lines = detail::split_lines(text);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        std::string_view line = lines[ln];
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t end = line.find(',', start);
            if (end == std::string_view::npos) end = line.size();
            std::string_view item = detail::trim(line.substr(start, end - start));
            if (!item.empty()) {
                auto eq = item.find('=');
                if (eq == std::string_view::npos)
                    throw SyntaxError("expected name=value, got '" + std::string(item) + "'", ln + 1, start + 1);
                std::string name(detail::trim(item.substr(0, eq)));
                std::string_view value_text = detail::trim(item.substr(eq + 1));
                auto value = parse_rational(value_text);
                if (!value) throw SyntaxError("malformed rational '" + std::string(value_text) + "'", ln + 1, start + eq + 2);
                std::optional<ParamId> id = params.find(name);
                if (!id) {
                    if (unknown == UnknownParameters::Reject)
                        throw SyntaxError("unknown parameter '" + name + "'", ln + 1, start + 1);
                    id = params.intern(name);
                }
                if (pi.contains(*id)) throw SyntaxError("parameter '" + name + "' assigned twice", ln + 1, start + 1);
                pi.emplace(*id, *value);
            }
            if (end == line.size()) break;
            start = end + 1;
        }
    }
    return pi;
}

inline std::string render_instantiation(const Instantiation& pi, const ParameterSet& params) {
    std::string out;
    for (const auto& [id, v] : pi) {
        if (!out.empty()) out += ",";
        out += params.name(id) + "=" + to_string(v);
    }
    return out;
}

/// Names of the parameters `pi` leaves unassigned, in id order.
inline std::vector<std::string> unassigned(const ParameterSet& params, const Instantiation& pi) {
    std::vector<std::string> out;
    for (ParamId id = 0; id < params.size(); ++id)
        if (!pi.contains(id)) out.push_back(params.name(id));
    return out;
}

/**
 * Reads constraint text. A `# parameters:` header registers names in order
 * before any inequality is read; other identifiers are registered on first use.
 */
inline Constraint parse_constraint(std::string_view text, ParameterSet& params) {
    std::vector<Inequality> inequalities;
    auto lines = detail::split_lines(text);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        std::string_view line = detail::trim(lines[ln]);
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::string_view body = detail::trim(line.substr(1));
            constexpr std::string_view tag = "parameters:";
            if (body.substr(0, tag.size()) == tag) {
                std::string_view names = body.substr(tag.size());
                std::size_t start = 0;
                while (start <= names.size()) {
                    std::size_t end = names.find(',', start);
                    if (end == std::string_view::npos) end = names.size();
                    std::string_view name = detail::trim(names.substr(start, end - start));
                    if (!name.empty()) params.intern(std::string(name));
                    if (end == names.size()) break;
                    start = end + 1;
                }
            }
            continue;
        }

        std::size_t column = static_cast<std::size_t>(line.data() - lines[ln].data());
        struct Op {
            std::string_view token;
            bool flip;
            Relation relation;
        };
        constexpr Op ops[] = {{"<=", false, Relation::LessEqual},
                              {">=", true, Relation::LessEqual},
                              {"<", false, Relation::Less},
                              {">", true, Relation::Less}};
        std::size_t at = std::string_view::npos;
        const Op* op = nullptr;
        for (const auto& candidate : ops) {
            std::size_t p = line.find(candidate.token);
            if (p != std::string_view::npos && (at == std::string_view::npos || p < at ||
                                                (p == at && candidate.token.size() > op->token.size()))) {
                at = p;
                op = &candidate;
            }
        }
        if (op == nullptr) throw SyntaxError("expected one of <=, <, >=, >", ln + 1, column + 1);

        std::string_view left = line.substr(0, at);
        std::string_view right = line.substr(at + op->token.size());
        detail::TermLexer llex(left, ln + 1, column);
        LinearTerm lhs = detail::parse_term(llex, params, UnknownParameters::Register);
        if (!llex.at_end()) llex.fail("trailing input before relation");
        detail::TermLexer rlex(right, ln + 1, column + at + op->token.size());
        LinearTerm rhs = detail::parse_term(rlex, params, UnknownParameters::Register);
        if (!rlex.at_end()) rlex.fail("trailing input");

        if (op->flip)
            inequalities.push_back(Inequality{std::move(rhs), op->relation, std::move(lhs)});
        else
            inequalities.push_back(Inequality{std::move(lhs), op->relation, std::move(rhs)});
    }
    return simplify(std::span<const Inequality>(inequalities));
}

/// `# parameters:` header, then one canonical inequality per line.
inline std::string render_constraint(const Constraint& k, const ParameterSet& params) {
    std::string out = "# parameters:";
    for (std::size_t i = 0; i < params.size(); ++i) out += (i == 0 ? " " : ", ") + params.name(i);
    out += "\n";
    if (k.is_true()) out += "# true\n";
    for (const auto& iq : k.inequalities()) out += to_string(iq, params) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// JSON models
// ---------------------------------------------------------------------------

struct PmdpDocument {
    ParameterSet parameters;
    Pmdp model;
};

struct PdwgDocument {
    ParameterSet parameters;
    std::vector<std::string> states;
    PMaxPlusMatrix matrix;
};

using ModelDocument = std::variant<PmdpDocument, PdwgDocument>;

namespace detail {

using nlohmann::json;

inline const json& field(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw ValidationError({where + ": expected an object"});
    auto it = obj.find(key);
    if (it == obj.end()) throw ValidationError({where + ": missing field \"" + key + "\""});
    return *it;
}

inline std::string string_field(const json& obj, const char* key, const std::string& where) {
    const json& v = field(obj, key, where);
    if (!v.is_string()) throw ValidationError({where + "." + key + ": expected a string"});
    return v.get<std::string>();
}

inline std::vector<std::string> name_list(const json& obj, const char* key, const std::string& where) {
    const json& v = field(obj, key, where);
    if (!v.is_array()) throw ValidationError({where + "." + key + ": expected an array of names"});
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string())
            throw ValidationError({where + "." + key + "[" + std::to_string(i) + "]: expected a string"});
        std::string name = v[i].get<std::string>();
        if (!seen.insert(name).second) throw ValidationError({where + "." + key + ": duplicate name '" + name + "'"});
        names.push_back(std::move(name));
    }
    return names;
}

inline std::unordered_map<std::string, std::size_t> index_of(const std::vector<std::string>& names) {
    std::unordered_map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < names.size(); ++i) idx.emplace(names[i], i);
    return idx;
}

inline LinearTerm weight_term(const json& v, ParameterSet& params, const std::string& where) {
    std::string text;
    if (v.is_string())
        text = v.get<std::string>();
    else if (v.is_number_integer())
        text = std::to_string(v.get<long long>());
    else
        throw ValidationError({where + ": weight must be a term string"});
    try {
        return parse_term(text, params, UnknownParameters::Reject);
    } catch (const SyntaxError& e) {
        throw ValidationError({where + ": " + e.what()});
    }
}

inline Rational probability(const json& v, const std::string& where) {
    std::string text;
    if (v.is_string())
        text = v.get<std::string>();
    else if (v.is_number_integer())
        text = std::to_string(v.get<long long>());
    else
        throw ValidationError({where + ": probability must be a rational string such as \"4/5\""});
    auto r = parse_rational(detail::trim(text));
    if (!r) throw ValidationError({where + ": malformed rational '" + text + "'"});
    return *r;
}

inline PmdpDocument parse_pmdp(const json& doc) {
    PmdpDocument out;
    out.parameters = ParameterSet(name_list(doc, "parameters", "document"));
    Pmdp& m = out.model;
    for (auto& s : name_list(doc, "states", "document")) m.add_state(std::move(s));
    for (auto& a : name_list(doc, "actions", "document")) m.add_action(std::move(a));
    auto state_idx = index_of(m.states);
    auto action_idx = index_of(m.actions);

    std::string absorbing = string_field(doc, "absorbing", "document");
    auto abs_it = state_idx.find(absorbing);
    if (abs_it == state_idx.end()) throw ValidationError({"absorbing: unknown state '" + absorbing + "'"});
    m.absorbing = abs_it->second;

    const json& transitions = field(doc, "transitions", "document");
    if (!transitions.is_array()) throw ValidationError({"transitions: expected an array"});
    std::vector<std::string> problems;
    for (std::size_t t = 0; t < transitions.size(); ++t) {
        const std::string where = "transitions[" + std::to_string(t) + "]";
        const json& tr = transitions[t];
        std::string from = string_field(tr, "from", where);
        std::string action = string_field(tr, "action", where);
        auto fs = state_idx.find(from);
        auto fa = action_idx.find(action);
        if (fs == state_idx.end()) {
            problems.push_back(where + ".from: unknown state '" + from + "'");
            continue;
        }
        if (fa == action_idx.end()) {
            problems.push_back(where + ".action: unknown action '" + action + "'");
            continue;
        }
        if (m.find_choice(fs->second, fa->second) != nullptr) {
            problems.push_back(where + ": state '" + from + "' lists action '" + action + "' twice");
            continue;
        }
        LinearTerm weight = weight_term(field(tr, "weight", where), out.parameters, where + ".weight");

        const json& to = field(tr, "to", where);
        if (!to.is_array() || to.empty()) {
            problems.push_back(where + ".to: expected a non-empty array");
            continue;
        }
        std::vector<Outcome> outcomes;
        for (std::size_t k = 0; k < to.size(); ++k) {
            const std::string dwhere = where + ".to[" + std::to_string(k) + "]";
            std::string target = string_field(to[k], "state", dwhere);
            auto ts = state_idx.find(target);
            if (ts == state_idx.end()) {
                problems.push_back(dwhere + ".state: unknown state '" + target + "'");
                continue;
            }
            outcomes.push_back(Outcome{ts->second, probability(field(to[k], "prob", dwhere), dwhere + ".prob")});
        }
        m.add_choice(fs->second, fa->second, std::move(weight), std::move(outcomes));
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));
    require_valid(m);
    return out;
}

inline PdwgDocument parse_pdwg(const json& doc) {
    PdwgDocument out;
    out.parameters = ParameterSet(name_list(doc, "parameters", "document"));
    out.states = name_list(doc, "states", "document");
    if (out.states.empty()) throw ValidationError({"states: a graph needs at least one state"});
    auto state_idx = index_of(out.states);
    out.matrix = PMaxPlusMatrix(out.states.size());

    const json& edges = field(doc, "edges", "document");
    if (!edges.is_array()) throw ValidationError({"edges: expected an array"});
    std::vector<std::string> problems;
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const std::string where = "edges[" + std::to_string(e) + "]";
        std::string from = string_field(edges[e], "from", where);
        std::string to = string_field(edges[e], "to", where);
        auto fi = state_idx.find(from);
        auto ti = state_idx.find(to);
        if (fi == state_idx.end() || ti == state_idx.end()) {
            problems.push_back(where + ": unknown state '" + (fi == state_idx.end() ? from : to) + "'");
            continue;
        }
        if (out.matrix.has_edge(fi->second, ti->second)) {
            problems.push_back(where + ": duplicate edge " + from + " -> " + to);
            continue;
        }
        out.matrix.set(fi->second, ti->second, weight_term(field(edges[e], "weight", where), out.parameters,
                                                           where + ".weight"));
    }
    for (std::size_t i = 0; i < out.states.size(); ++i)
        if (out.matrix.successors(i).empty()) problems.push_back("state '" + out.states[i] + "' has no outgoing edge");
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return out;
}

}  // namespace detail

/// Parses and validates a model document. Throws SyntaxError or ValidationError.
inline ModelDocument parse_model(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // Translate the byte offset into line/column.
        std::size_t offset = std::min<std::size_t>(e.byte, text.size());
        std::size_t line = 1, column = 1;
        for (std::size_t i = 0; i + 1 < offset; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw SyntaxError(e.what(), line, column);
    }
    std::string type = detail::string_field(doc, "type", "document");
    if (type == "pmdp") return detail::parse_pmdp(doc);
    if (type == "pdwg") return detail::parse_pdwg(doc);
    throw ValidationError({"type: expected \"pmdp\" or \"pdwg\", got \"" + type + "\""});
}

inline std::string render_model(const PmdpDocument& d) {
    using nlohmann::ordered_json;
    const Pmdp& m = d.model;
    ordered_json doc;
    doc["type"] = "pmdp";
    doc["parameters"] = d.parameters.names();
    doc["states"] = m.states;
    doc["absorbing"] = m.states.at(m.absorbing);
    doc["actions"] = m.actions;
    ordered_json transitions = ordered_json::array();
    for (StateId s = 0; s < m.state_count(); ++s) {
        for (const auto& c : m.choices[s]) {
            ordered_json tr;
            tr["from"] = m.states[s];
            tr["action"] = m.actions[c.action];
            tr["weight"] = to_string(c.weight, d.parameters);
            ordered_json to = ordered_json::array();
            for (const auto& o : c.outcomes)
                to.push_back(ordered_json{{"state", m.states[o.target]}, {"prob", to_string(o.probability)}});
            tr["to"] = std::move(to);
            transitions.push_back(std::move(tr));
        }
    }
    doc["transitions"] = std::move(transitions);
    return doc.dump(2) + "\n";
}

inline std::string render_model(const PdwgDocument& d) {
    using nlohmann::ordered_json;
    ordered_json doc;
    doc["type"] = "pdwg";
    doc["parameters"] = d.parameters.names();
    doc["states"] = d.states;
    ordered_json edges = ordered_json::array();
    for (std::size_t i = 0; i < d.matrix.size(); ++i)
        for (std::size_t j = 0; j < d.matrix.size(); ++j)
            if (d.matrix.has_edge(i, j))
                edges.push_back(ordered_json{{"from", d.states[i]},
                                             {"to", d.states[j]},
                                             {"weight", to_string(d.matrix.weight(i, j), d.parameters)}});
    doc["edges"] = std::move(edges);
    return doc.dump(2) + "\n";
}

/// Matrix dump: one row per line, columns padded, `eps` for no edge.
template <class T>
std::string render_matrix(const MaxPlusMatrix<T>& m, const ParameterSet& params) {
    std::vector<std::vector<std::string>> cells(m.size(), std::vector<std::string>(m.size()));
    std::size_t width = 3;
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m.size(); ++j) {
            if (!m.has_edge(i, j)) {
                cells[i][j] = "eps";
            } else if constexpr (std::is_same_v<T, LinearTerm>) {
                cells[i][j] = to_string(m.weight(i, j), params);
            } else {
                cells[i][j] = to_string(m.weight(i, j));
            }
            width = std::max(width, cells[i][j].size());
        }
    }
    std::string out;
    for (const auto& row : cells) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j > 0) out += "  ";
            out += std::string(width - row[j].size(), ' ') + row[j];
        }
        out += "\n";
    }
    return out;
}

}  // namespace polypol
