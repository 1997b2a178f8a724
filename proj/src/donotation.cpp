#include "sd/donotation.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace sd {

// ---------------------------------------------------------------------------
// Lexer/parser

namespace {

struct Token {
    enum Kind { Ident, LParen, RParen, Comma, Colon, Arrow, Newline, End } kind;
    std::string text;
    int line, col;
};

struct Lexer {
    const std::string& src;
    std::string origin;
    std::size_t pos = 0;
    int line = 1, col = 1;

    [[noreturn]] void fail(const std::string& msg) {
        throw parse_error(origin, line, col, msg);
    }

    void advance(std::size_t n = 1) {
        for (std::size_t i = 0; i < n && pos < src.size(); ++i) {
            if (src[pos] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++pos;
        }
    }

    Token next() {
        while (pos < src.size()) {
            char c = src[pos];
            if (c == '#') {
                while (pos < src.size() && src[pos] != '\n') advance();
                continue;
            }
            if (c == '\n') {
                Token t{Token::Newline, "\n", line, col};
                advance();
                return t;
            }
            if (std::isspace((unsigned char)c)) {
                advance();
                continue;
            }
            Token t{Token::End, "", line, col};
            if (c == '(') {
                t = {Token::LParen, "(", line, col};
                advance();
                return t;
            }
            if (c == ')') {
                t = {Token::RParen, ")", line, col};
                advance();
                return t;
            }
            if (c == ',') {
                t = {Token::Comma, ",", line, col};
                advance();
                return t;
            }
            if (c == ':') {
                t = {Token::Colon, ":", line, col};
                advance();
                return t;
            }
            if (src.compare(pos, 2, "->") == 0) {
                t = {Token::Arrow, "->", line, col};
                advance(2);
                return t;
            }
            if (src.compare(pos, 3, "\xe2\x86\x92") == 0) { // U+2192
                t = {Token::Arrow, "->", line, col};
                advance(3);
                return t;
            }
            if (std::isalpha((unsigned char)c) || c == '_') {
                Token id{Token::Ident, "", line, col};
                std::size_t start = pos;
                while (pos < src.size() &&
                       (std::isalnum((unsigned char)src[pos]) || src[pos] == '_'))
                    advance();
                id.text = src.substr(start, pos - start);
                return id;
            }
            fail(std::string("unexpected character '") + c + "'");
        }
        return {Token::End, "", line, col};
    }
};

struct Parser {
    Lexer lex;
    Token tok;

    explicit Parser(const std::string& src, const std::string& origin)
        : lex{src, origin} {
        tok = lex.next();
    }

    [[noreturn]] void fail(const std::string& msg) {
        throw parse_error(lex.origin, tok.line, tok.col, msg);
    }

    void bump() { tok = lex.next(); }

    void skip_newlines() {
        while (tok.kind == Token::Newline) bump();
    }

    void expect(Token::Kind k, const std::string& what) {
        if (tok.kind != k) fail("expected " + what);
        bump();
    }

    std::string ident(const std::string& what) {
        if (tok.kind != Token::Ident) fail("expected " + what);
        std::string s = tok.text;
        bump();
        return s;
    }

    std::vector<std::string> var_list_paren() {
        expect(Token::LParen, "'('");
        std::vector<std::string> vars;
        if (tok.kind != Token::RParen) {
            vars.push_back(ident("variable"));
            while (tok.kind == Token::Comma) {
                bump();
                vars.push_back(ident("variable"));
            }
        }
        expect(Token::RParen, "')'");
        return vars;
    }

    DoProgram parse() {
        skip_newlines();
        DoProgram p;
        p.name = ident("program name");
        expect(Token::LParen, "'('");
        if (tok.kind != Token::RParen) {
            parse_param(p);
            while (tok.kind == Token::Comma) {
                bump();
                parse_param(p);
            }
        }
        expect(Token::RParen, "')'");
        expect(Token::Colon, "':'");
        skip_newlines();
        while (true) {
            if (tok.kind == Token::End) fail("expected 'return(...)'");
            std::string head = ident("statement");
            if (head == "return") {
                p.returns = var_list_paren();
                skip_newlines();
                if (tok.kind != Token::End) fail("content after return");
                return p;
            }
            Statement s;
            s.generator = head;
            s.args = var_list_paren();
            expect(Token::Arrow, "'->'");
            if (tok.kind == Token::LParen) {
                s.binders = var_list_paren();
            } else {
                s.binders.push_back(ident("binder"));
            }
            p.statements.push_back(std::move(s));
            if (tok.kind != Token::Newline && tok.kind != Token::End)
                fail("expected end of statement");
            skip_newlines();
        }
    }

    void parse_param(DoProgram& p) {
        std::string var = ident("parameter");
        std::string type;
        if (tok.kind == Token::Colon) {
            bump();
            type = ident("type");
        }
        p.params.emplace_back(var, type);
    }
};

} // namespace

DoProgram parse_do(const std::string& text, const std::string& origin) {
    return Parser(text, origin).parse();
}

// ---------------------------------------------------------------------------
// Checking

namespace {

struct VarInfo {
    std::string ssa;
    std::string type;
};

} // namespace

TypedProgram check(const DoProgram& program, PolygraphRef sig) {
    TypedProgram out;
    out.polygraph = sig;
    out.program.name = program.name;

    // live: surface name -> current SSA name. Rebinding a name shadows the
    // previous binding, which must already have been consumed.
    std::map<std::string, std::string> live;
    std::map<std::string, std::string> ssa_type;
    std::map<std::string, std::string> pending_type; // params inferred later
    int ssa_counter = 0;
    auto rename = [&](const std::string& v) {
        return v + "%" + std::to_string(ssa_counter++);
    };

    std::set<std::string> param_names;
    std::vector<std::string> param_ssa;
    for (const auto& [var, type] : program.params) {
        if (!param_names.insert(var).second)
            throw validation_error("parameter '" + var + "' declared twice");
        std::string s = rename(var);
        live[var] = s;
        if (!type.empty()) {
            if (!sig->has_object(type))
                throw validation_error("parameter '" + var +
                                       "' has undeclared type '" + type + "'");
            ssa_type[s] = type;
        } else {
            pending_type[s] = var;
        }
        param_ssa.push_back(s);
        out.program.params.emplace_back(s, type);
    }

    std::set<std::string> consumed;
    auto consume = [&](const std::string& v, const std::string& expected,
                       const std::string& where) -> std::string {
        auto it = live.find(v);
        if (it == live.end()) {
            if (consumed.count(v))
                throw validation_error("variable '" + v + "' used twice (" +
                                       where + ")");
            throw validation_error("variable '" + v + "' is not bound (" + where +
                                   ")");
        }
        consumed.insert(v);
        std::string s = it->second;
        live.erase(it);
        auto ty = ssa_type.find(s);
        if (ty != ssa_type.end()) {
            if (!expected.empty() && ty->second != expected)
                throw validation_error("variable '" + v + "' has type '" +
                                       ty->second + "', expected '" + expected +
                                       "' (" + where + ")");
        } else if (!expected.empty()) {
            ssa_type[s] = expected; // infer a parameter's type from first use
            pending_type.erase(s);
        }
        return s;
    };

    for (std::size_t i = 0; i < program.statements.size(); ++i) {
        const Statement& st = program.statements[i];
        const Generator* g = sig->find(st.generator);
        if (!g)
            throw validation_error("unknown generator '" + st.generator +
                                   "' in statement " + std::to_string(i + 1));
        if (st.args.size() != g->inputs.size())
            throw validation_error("generator '" + st.generator + "' expects " +
                                   std::to_string(g->inputs.size()) +
                                   " arguments, got " +
                                   std::to_string(st.args.size()));
        if (st.binders.size() != g->outputs.size())
            throw validation_error("generator '" + st.generator + "' produces " +
                                   std::to_string(g->outputs.size()) +
                                   " results, got " +
                                   std::to_string(st.binders.size()) + " binders");
        Statement ssa_st;
        ssa_st.generator = st.generator;
        std::string where = "statement " + std::to_string(i + 1);
        for (std::size_t a = 0; a < st.args.size(); ++a)
            ssa_st.args.push_back(consume(st.args[a], g->inputs[a], where));
        std::set<std::string> binder_names;
        for (std::size_t b = 0; b < st.binders.size(); ++b) {
            if (!binder_names.insert(st.binders[b]).second)
                throw validation_error("binder '" + st.binders[b] +
                                       "' repeated in " + where);
            if (live.count(st.binders[b]))
                throw validation_error("variable '" + st.binders[b] +
                                       "' rebound while still unused (" + where +
                                       ")");
            std::string s = rename(st.binders[b]);
            live[st.binders[b]] = s;
            ssa_type[s] = g->outputs[b];
            ssa_st.binders.push_back(s);
        }
        out.program.statements.push_back(std::move(ssa_st));
    }

    for (const auto& v : program.returns)
        out.program.returns.push_back(consume(v, "", "return"));
    if (!live.empty())
        throw validation_error("variable '" + live.begin()->first +
                               "' is bound but never used");
    for (const auto& [s, surface] : pending_type)
        throw validation_error("cannot infer the type of parameter '" + surface +
                               "'; annotate it");

    for (const std::string& s : param_ssa) out.param_types.push_back(ssa_type[s]);
    for (auto& [var, type] : out.program.params)
        if (type.empty()) type = ssa_type[var];
    for (const auto& s : out.program.returns)
        out.return_types.push_back(ssa_type.at(s));
    return out;
}

// ---------------------------------------------------------------------------
// Elaboration

Diagram elaborate(const TypedProgram& program) {
    DiagramBuilder b(program.polygraph);
    std::map<std::string, WireId> env;
    for (std::size_t i = 0; i < program.program.params.size(); ++i)
        env[program.program.params[i].first] = b.add_input(program.param_types[i]);
    for (const Statement& st : program.program.statements) {
        std::vector<WireId> ins;
        for (const auto& a : st.args) ins.push_back(env.at(a));
        std::vector<WireId> outs = b.apply(st.generator, ins);
        for (std::size_t i = 0; i < st.binders.size(); ++i)
            env[st.binders[i]] = outs[i];
    }
    std::vector<WireId> outs;
    for (const auto& r : program.program.returns) outs.push_back(env.at(r));
    return b.finish(outs);
}

BigInt insertion_count(int n, int m) {
    if (n < 0 || m < 0) throw validation_error("insertion_count: negative input");
    if (n == 0) return 1;
    return BigInt(m + 1) * insertion_count(n - 1, m + 1);
}

std::string pretty_print(const DoProgram& program) {
    std::ostringstream out;
    out << program.name << "(";
    for (std::size_t i = 0; i < program.params.size(); ++i) {
        if (i) out << ", ";
        out << program.params[i].first;
        if (!program.params[i].second.empty())
            out << ": " << program.params[i].second;
    }
    out << "):\n";
    for (const Statement& s : program.statements) {
        out << "  " << s.generator << "(";
        for (std::size_t i = 0; i < s.args.size(); ++i)
            out << (i ? ", " : "") << s.args[i];
        out << ") -> (";
        for (std::size_t i = 0; i < s.binders.size(); ++i)
            out << (i ? ", " : "") << s.binders[i];
        out << ")\n";
    }
    out << "  return(";
    for (std::size_t i = 0; i < program.returns.size(); ++i)
        out << (i ? ", " : "") << program.returns[i];
    out << ")\n";
    return out.str();
}

bool independent_statements(const Statement& a, const Statement& b) {
    std::set<std::string> avars(a.args.begin(), a.args.end());
    avars.insert(a.binders.begin(), a.binders.end());
    for (const auto& v : b.args)
        if (avars.count(v)) return false;
    for (const auto& v : b.binders)
        if (avars.count(v)) return false;
    return true;
}

} // namespace sd
