#include "sd/session.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace sd {

namespace {

bool is_send_gen(const Generator& g) {
    return g.name.rfind("send_", 0) == 0 && g.inputs.size() == 2 &&
           g.inputs[0] == kRuntimeObject && g.outputs.size() == 1 &&
           g.outputs[0] == kRuntimeObject;
}

bool is_recv_gen(const Generator& g) {
    return g.name.rfind("recv_", 0) == 0 && g.inputs.size() == 1 &&
           g.inputs[0] == kRuntimeObject && g.outputs.size() == 2 &&
           g.outputs[0] == kRuntimeObject;
}

bool is_event_node(const Diagram& d, const Node& n) {
    const Generator& g = d.polygraph()->at(n.gen);
    return is_send_gen(g) || is_recv_gen(g);
}

struct WireEnds {
    std::vector<int> consumer_node; // -1 for boundary_out
    std::vector<int> producer_node; // -1 for boundary_in
};

WireEnds wire_ends(const Diagram& d) {
    WireEnds e;
    e.consumer_node.assign(d.wire_count(), -2);
    e.producer_node.assign(d.wire_count(), -2);
    for (WireId w : d.boundary_in()) e.producer_node[w] = -1;
    for (WireId w : d.boundary_out()) e.consumer_node[w] = -1;
    for (std::size_t n = 0; n < d.nodes().size(); ++n) {
        for (WireId w : d.nodes()[n].in_wires) e.consumer_node[w] = (int)n;
        for (WireId w : d.nodes()[n].out_wires) e.producer_node[w] = (int)n;
    }
    return e;
}

} // namespace

std::vector<std::size_t> effectful_spine(const Diagram& d) {
    validate(d);
    if (d.boundary_in().empty() ||
        d.wire_types()[d.boundary_in()[0]] != kRuntimeObject)
        throw validation_error("session boundary must start with the runtime wire");
    if (d.boundary_out().empty() ||
        d.wire_types()[d.boundary_out()[0]] != kRuntimeObject)
        throw validation_error("session boundary must end at the runtime wire");
    for (std::size_t i = 1; i < d.boundary_in().size(); ++i)
        if (d.wire_types()[d.boundary_in()[i]] == kRuntimeObject)
            throw validation_error("more than one runtime wire enters the session");
    for (std::size_t i = 1; i < d.boundary_out().size(); ++i)
        if (d.wire_types()[d.boundary_out()[i]] == kRuntimeObject)
            throw validation_error("more than one runtime wire leaves the session");

    WireEnds ends = wire_ends(d);
    std::vector<std::size_t> spine;
    std::set<WireId> r_seen;
    WireId cur = d.boundary_in()[0];
    while (true) {
        r_seen.insert(cur);
        int consumer = ends.consumer_node[cur];
        if (consumer == -1) {
            if (cur != d.boundary_out()[0])
                throw validation_error("runtime wire exits at the wrong position");
            break;
        }
        const Node& n = d.nodes()[consumer];
        if (!is_event_node(d, n))
            throw validation_error("node '" + n.gen +
                                   "' consumes the runtime wire");
        if (n.in_wires[0] != cur)
            throw validation_error("runtime wire enters '" + n.gen +
                                   "' at the wrong port");
        spine.push_back((std::size_t)consumer);
        cur = n.out_wires[0];
    }
    std::size_t r_total = 0, event_total = 0;
    for (std::size_t w = 0; w < d.wire_count(); ++w)
        if (d.wire_types()[w] == kRuntimeObject) ++r_total;
    for (const Node& n : d.nodes())
        if (is_event_node(d, n)) ++event_total;
    if (r_seen.size() != r_total)
        throw validation_error("runtime wires outside the effectful path");
    if (event_total != spine.size())
        throw validation_error("send/receive node off the runtime path");
    return spine;
}

Session make_session(Diagram d) {
    effectful_spine(d);
    Session s;
    std::vector<std::string> dom = d.dom(), cod = d.cod();
    s.dom.assign(dom.begin() + 1, dom.end());
    s.cod.assign(cod.begin() + 1, cod.end());
    s.diagram = std::move(d);
    return s;
}

PolarList events(const Session& s) {
    PolarList out;
    for (std::size_t n : effectful_spine(s.diagram)) {
        const Node& node = s.diagram.nodes()[n];
        const Generator& g = s.diagram.polygraph()->at(node.gen);
        if (is_send_gen(g))
            out.push_back({g.inputs[1], Polarity::Send});
        else
            out.push_back({g.outputs[1], Polarity::Recv});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Combs

Comb to_comb(const Session& s) {
    const Diagram& d = s.diagram;
    std::vector<std::size_t> spine = effectful_spine(d);
    std::size_t n_events = spine.size();
    std::vector<int> event_index(d.nodes().size(), -1);
    for (std::size_t i = 0; i < n_events; ++i) event_index[spine[i]] = (int)i + 1;

    WireEnds ends = wire_ends(d);

    // latest[u]: index of the last event a node depends on (0 if none); the
    // node is placed in that piece.
    std::vector<int> latest(d.nodes().size(), 0);
    for (std::size_t u : topological_order(d)) {
        int m = 0;
        for (WireId w : d.nodes()[u].in_wires) {
            int p = ends.producer_node[w];
            if (p < 0) continue;
            m = std::max(m, event_index[p] >= 0 ? event_index[p] : latest[p]);
        }
        latest[u] = m;
    }

    // Birth/death segment of every non-runtime wire.
    auto segment_of_producer = [&](WireId w) -> int {
        int p = ends.producer_node[w];
        if (p < 0) return 0;
        return event_index[p] >= 0 ? event_index[p] : latest[p];
    };
    auto segment_of_consumer = [&](WireId w) -> int {
        int c = ends.consumer_node[w];
        if (c < 0) return (int)n_events;
        return event_index[c] >= 0 ? event_index[c] : latest[c];
    };

    Comb comb;
    comb.session_polygraph = d.polygraph();
    comb.dom = s.dom;
    comb.cod = s.cod;
    comb.holes = events(s);

    // Residual wires crossing each cut, ascending by wire id; the cut before
    // event i excludes event i's own message wire.
    std::vector<std::vector<WireId>> residual(n_events);
    for (std::size_t w = 0; w < d.wire_count(); ++w) {
        if (d.wire_types()[w] == kRuntimeObject) continue;
        int born = segment_of_producer((WireId)w);
        int dies = segment_of_consumer((WireId)w);
        for (int i = born + 1; i <= dies && i <= (int)n_events; ++i) {
            int c = ends.consumer_node[w];
            bool message_of_i = c >= 0 && event_index[c] == i;
            if (!message_of_i) residual[i - 1].push_back((WireId)w);
        }
    }
    for (auto& r : residual) std::sort(r.begin(), r.end());

    // Pieces.
    std::vector<std::vector<std::size_t>> piece_nodes(n_events + 1);
    for (std::size_t u : topological_order(d))
        if (event_index[u] < 0) piece_nodes[latest[u]].push_back(u);

    for (std::size_t i = 0; i <= n_events; ++i) {
        DiagramBuilder b(d.polygraph());
        std::map<WireId, WireId> wmap;
        std::vector<WireId> ins;
        // Piece inputs: residual at cut i, then the received message.
        std::vector<WireId> in_orig;
        if (i == 0) {
            for (std::size_t k = 1; k < d.boundary_in().size(); ++k)
                in_orig.push_back(d.boundary_in()[k]);
        } else {
            in_orig = residual[i - 1];
            const Node& ev = d.nodes()[spine[i - 1]];
            if (is_recv_gen(d.polygraph()->at(ev.gen)))
                in_orig.push_back(ev.out_wires[1]);
        }
        for (WireId w : in_orig) wmap[w] = b.add_input(d.wire_types()[w]);
        for (std::size_t u : piece_nodes[i]) {
            const Node& node = d.nodes()[u];
            std::vector<WireId> nins;
            for (WireId w : node.in_wires) nins.push_back(wmap.at(w));
            std::vector<WireId> nouts = b.apply(node.gen, nins);
            for (std::size_t k = 0; k < nouts.size(); ++k)
                wmap[node.out_wires[k]] = nouts[k];
        }
        // Piece outputs: residual at cut i+1, then the sent message.
        std::vector<WireId> out_orig;
        if (i == n_events) {
            for (std::size_t k = 1; k < d.boundary_out().size(); ++k)
                out_orig.push_back(d.boundary_out()[k]);
        } else {
            out_orig = residual[i];
            const Node& ev = d.nodes()[spine[i]];
            if (is_send_gen(d.polygraph()->at(ev.gen)))
                out_orig.push_back(ev.in_wires[1]);
        }
        std::vector<WireId> outs;
        for (WireId w : out_orig) outs.push_back(wmap.at(w));
        comb.pieces.push_back(b.finish(outs));
        if (i < n_events) {
            std::vector<std::string> types;
            for (WireId w : residual[i]) types.push_back(d.wire_types()[w]);
            comb.residuals.push_back(std::move(types));
        }
    }
    return comb;
}

Session from_comb(const Comb& c) {
    if (c.pieces.size() != c.holes.size() + 1)
        throw validation_error("comb needs one more piece than holes");
    DiagramBuilder b(c.session_polygraph);
    WireId r = b.add_input(kRuntimeObject);
    std::vector<WireId> carry;
    for (const auto& t : c.dom) carry.push_back(b.add_input(t));
    for (std::size_t i = 0; i < c.pieces.size(); ++i) {
        std::vector<WireId> outs = b.splice(c.pieces[i], carry);
        if (i == c.pieces.size() - 1) {
            carry = outs;
            break;
        }
        const PolarItem& hole = c.holes[i];
        if (hole.pol == Polarity::Send) {
            if (outs.empty())
                throw validation_error("piece " + std::to_string(i) +
                                       " provides no message to send");
            WireId x = outs.back();
            outs.pop_back();
            std::vector<WireId> rr = b.apply(send_name(hole.type), {r, x});
            r = rr[0];
            carry = outs;
        } else {
            std::vector<WireId> rx = b.apply(recv_name(hole.type), {r});
            r = rx[0];
            carry = outs;
            carry.push_back(rx[1]);
        }
    }
    std::vector<WireId> final_out = {r};
    final_out.insert(final_out.end(), carry.begin(), carry.end());
    return make_session(b.finish(final_out));
}

// ---------------------------------------------------------------------------
// Gluing along a polar shuffle

Session glue(const std::vector<Session>& parts, const PolarShuffle& s) {
    if (parts.empty()) throw validation_error("glue requires at least one part");
    if (s.inputs.size() != parts.size())
        throw validation_error("glue: shuffle expects " +
                               std::to_string(s.inputs.size()) + " parts, got " +
                               std::to_string(parts.size()));
    require_valid(s);
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (!parts[i].dom.empty() || !parts[i].cod.empty())
            throw validation_error("glue: part " + std::to_string(i) +
                                   " is not a closed session");
        PolarList ev = events(parts[i]);
        if (ev.size() != s.inputs[i].size())
            throw validation_error("glue: part " + std::to_string(i) + " has " +
                                   std::to_string(ev.size()) +
                                   " events, shuffle expects " +
                                   std::to_string(s.inputs[i].size()));
        for (std::size_t p = 0; p < ev.size(); ++p)
            if (!(ev[p] == s.inputs[i][p]))
                throw validation_error(
                    "glue: part " + std::to_string(i) + " event " +
                    std::to_string(p) + " is " +
                    polarity_mark(ev[p].pol) + ev[p].type +
                    ", shuffle expects " +
                    polarity_mark(s.inputs[i][p].pol) + s.inputs[i][p].type);
    }
    for (std::size_t i = 1; i < parts.size(); ++i)
        if (!(*parts[i].diagram.polygraph() == *parts[0].diagram.polygraph()))
            throw validation_error("glue: parts over different polygraphs");

    std::vector<Comb> combs;
    for (const Session& p : parts) combs.push_back(to_comb(p));

    std::map<PolarPos, PolarPos> partner; // both directions
    for (const auto& [d, c] : s.pairing) {
        partner[d] = c;
        partner[c] = d;
    }

    DiagramBuilder b(parts[0].diagram.polygraph());
    WireId r = b.add_input(kRuntimeObject);
    std::vector<std::size_t> next_piece(parts.size(), 0);
    std::vector<std::vector<WireId>> carry(parts.size());
    std::map<PolarPos, WireId> message; // sent or received message wires

    auto place_piece = [&](std::size_t part) {
        std::size_t idx = next_piece[part]++;
        carry[part] = b.splice(combs[part].pieces[idx], carry[part]);
    };

    for (const PolarPos& pos : topological_positions(s)) {
        if (pos.list != kOutputList) {
            std::size_t part = (std::size_t)pos.list;
            place_piece(part);
            const PolarItem& item = s.inputs[part][pos.pos];
            if (item.pol == Polarity::Send) {
                WireId x = carry[part].back();
                carry[part].pop_back();
                message[pos] = x;
            } else {
                carry[part].push_back(message.at(partner.at(pos)));
            }
        } else {
            const PolarItem& item = s.output[pos.pos];
            if (item.pol == Polarity::Send) {
                WireId x = message.at(partner.at(pos));
                r = b.apply(send_name(item.type), {r, x})[0];
            } else {
                std::vector<WireId> rx = b.apply(recv_name(item.type), {r});
                r = rx[0];
                message[pos] = rx[1];
            }
        }
    }
    for (std::size_t part = 0; part < parts.size(); ++part) {
        place_piece(part);
        if (!carry[part].empty())
            throw error("glue: dangling residual wires (bug)");
    }
    return make_session(b.finish({r}));
}

// ---------------------------------------------------------------------------
// Processes

Session in_proc(const Diagram& pure, PolygraphRef session_poly) {
    DiagramBuilder b(session_poly);
    WireId r = b.add_input(kRuntimeObject);
    std::vector<std::string> dom = pure.dom();
    std::vector<WireId> args(dom.size());
    for (std::size_t k = dom.size(); k-- > 0;) {
        std::vector<WireId> rx = b.apply(recv_name(dom[k]), {r});
        r = rx[0];
        args[k] = rx[1];
    }
    std::vector<WireId> outs = b.splice(pure, args);
    for (WireId x : outs) r = b.apply(send_name(b.type_of(x)), {r, x})[0];
    return make_session(b.finish({r}));
}

bool is_process_shaped(const Session& s) {
    if (!s.dom.empty() || !s.cod.empty()) return false;
    PolarList ev = events(s);
    std::size_t i = 0;
    while (i < ev.size() && ev[i].pol == Polarity::Recv) ++i;
    for (std::size_t j = i; j < ev.size(); ++j)
        if (ev[j].pol == Polarity::Recv) return false;
    return true;
}

std::vector<std::string> proc_dom(const Session& s) {
    PolarList ev = events(s);
    std::vector<std::string> out;
    for (const auto& item : ev)
        if (item.pol == Polarity::Recv) out.push_back(item.type);
    std::reverse(out.begin(), out.end());
    return out;
}

std::vector<std::string> proc_cod(const Session& s) {
    PolarList ev = events(s);
    std::vector<std::string> out;
    for (const auto& item : ev)
        if (item.pol == Polarity::Send) out.push_back(item.type);
    return out;
}

Diagram from_proc(const Session& s, PolygraphRef base) {
    if (!is_process_shaped(s))
        throw validation_error("session is not process-shaped");
    const Diagram& d = s.diagram;
    std::vector<std::size_t> spine = effectful_spine(d);
    WireEnds ends = wire_ends(d);
    std::vector<std::size_t> recvs, sends;
    for (std::size_t n : spine) {
        if (is_recv_gen(d.polygraph()->at(d.nodes()[n].gen)))
            recvs.push_back(n);
        else
            sends.push_back(n);
    }
    DiagramBuilder b(base);
    std::map<WireId, WireId> wmap;
    // Receives arrive in reverse boundary order.
    std::vector<WireId> inputs;
    for (std::size_t k = recvs.size(); k-- > 0;) {
        const Node& ev = d.nodes()[recvs[k]];
        WireId x = ev.out_wires[1];
        inputs.push_back(b.add_input(d.wire_types()[x]));
        wmap[x] = inputs.back();
    }
    std::set<std::size_t> spine_set(spine.begin(), spine.end());
    for (std::size_t u : topological_order(d)) {
        if (spine_set.count(u)) continue;
        const Node& node = d.nodes()[u];
        std::vector<WireId> nins;
        for (WireId w : node.in_wires) nins.push_back(wmap.at(w));
        std::vector<WireId> nouts = b.apply(node.gen, nins);
        for (std::size_t k = 0; k < nouts.size(); ++k)
            wmap[node.out_wires[k]] = nouts[k];
    }
    std::vector<WireId> outs;
    for (std::size_t n : sends) outs.push_back(wmap.at(d.nodes()[n].in_wires[1]));
    return b.finish(outs);
}

namespace {

PolarShuffle proc_compose_shuffle(const PolarList& fe, const PolarList& ge) {
    std::size_t n = 0;
    while (n < fe.size() && fe[n].pol == Polarity::Recv) ++n;
    std::size_t m = fe.size() - n; // middle arity
    std::size_t mg = 0;
    while (mg < ge.size() && ge[mg].pol == Polarity::Recv) ++mg;
    if (mg != m)
        throw validation_error("proc_compose: middle boundary mismatch");
    for (std::size_t j = 0; j < m; ++j)
        if (fe[n + j].type != ge[m - 1 - j].type)
            throw validation_error("proc_compose: middle type mismatch at " +
                                   std::to_string(j));
    PolarShuffle s;
    s.inputs = {fe, ge};
    for (std::size_t k = 0; k < n; ++k) s.output.push_back(fe[k]);
    for (std::size_t t = m; t < ge.size(); ++t) s.output.push_back(ge[t]);
    for (std::size_t k = 0; k < n; ++k)
        s.pairing.emplace_back(PolarPos{kOutputList, (int)k}, PolarPos{0, (int)k});
    for (std::size_t j = 0; j < m; ++j)
        s.pairing.emplace_back(PolarPos{0, (int)(n + j)},
                               PolarPos{1, (int)(m - 1 - j)});
    for (std::size_t t = m; t < ge.size(); ++t)
        s.pairing.emplace_back(PolarPos{1, (int)t},
                               PolarPos{kOutputList, (int)(n + t - m)});
    std::sort(s.pairing.begin(), s.pairing.end());
    require_valid(s);
    return s;
}

PolarShuffle proc_tensor_shuffle(const PolarList& ae, const PolarList& be) {
    std::size_t n = 0;
    while (n < ae.size() && ae[n].pol == Polarity::Recv) ++n;
    std::size_t m = 0;
    while (m < be.size() && be[m].pol == Polarity::Recv) ++m;
    std::size_t p = ae.size() - n, q = be.size() - m;
    PolarShuffle s;
    s.inputs = {ae, be};
    for (std::size_t k = 0; k < m; ++k) s.output.push_back(be[k]);
    for (std::size_t k = 0; k < n; ++k) s.output.push_back(ae[k]);
    for (std::size_t t = 0; t < p; ++t) s.output.push_back(ae[n + t]);
    for (std::size_t t = 0; t < q; ++t) s.output.push_back(be[m + t]);
    for (std::size_t k = 0; k < m; ++k)
        s.pairing.emplace_back(PolarPos{kOutputList, (int)k}, PolarPos{1, (int)k});
    for (std::size_t k = 0; k < n; ++k)
        s.pairing.emplace_back(PolarPos{kOutputList, (int)(m + k)},
                               PolarPos{0, (int)k});
    for (std::size_t t = 0; t < p; ++t)
        s.pairing.emplace_back(PolarPos{0, (int)(n + t)},
                               PolarPos{kOutputList, (int)(m + n + t)});
    for (std::size_t t = 0; t < q; ++t)
        s.pairing.emplace_back(PolarPos{1, (int)(m + t)},
                               PolarPos{kOutputList, (int)(m + n + p + t)});
    std::sort(s.pairing.begin(), s.pairing.end());
    require_valid(s);
    return s;
}

void require_process(const Session& s, const char* who) {
    if (!is_process_shaped(s))
        throw validation_error(std::string(who) +
                               ": input session is not process-shaped");
}

} // namespace

Session proc_compose(const Session& f, const Session& g) {
    require_process(f, "proc_compose");
    require_process(g, "proc_compose");
    return glue({f, g}, proc_compose_shuffle(events(f), events(g)));
}

Session proc_tensor(const Session& f, const Session& g) {
    require_process(f, "proc_tensor");
    require_process(g, "proc_tensor");
    return glue({f, g}, proc_tensor_shuffle(events(f), events(g)));
}

Session proc_id(PolygraphRef session_poly, const std::vector<std::string>& types) {
    return in_proc(identity(session_poly, types), session_poly);
}

Session proc_symmetry(PolygraphRef session_poly,
                      const std::vector<std::string>& left,
                      const std::vector<std::string>& right) {
    return in_proc(symmetry(session_poly, left, right), session_poly);
}

bool session_equal(const Session& a, const Session& b) {
    return a.dom == b.dom && a.cod == b.cod && is_equal(a.diagram, b.diagram);
}

// ---------------------------------------------------------------------------
// Session programs

namespace {

struct SessTokenizer {
    std::string src, origin;
    std::size_t pos = 0;
    int line = 1, col = 1;

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
    [[noreturn]] void fail(const std::string& msg) {
        throw parse_error(origin, line, col, msg);
    }
    void skip_blank(bool newlines) {
        while (pos < src.size()) {
            if (src[pos] == '#') {
                while (pos < src.size() && src[pos] != '\n') advance();
            } else if (std::isspace((unsigned char)src[pos]) &&
                       (newlines || src[pos] != '\n')) {
                advance();
            } else {
                break;
            }
        }
    }
    char peek(bool skip_nl = false) {
        skip_blank(skip_nl);
        return pos < src.size() ? src[pos] : '\0';
    }
    bool accept(char c, bool skip_nl = false) {
        if (peek(skip_nl) == c) {
            advance();
            return true;
        }
        return false;
    }
    void expect(char c, bool skip_nl = false) {
        if (!accept(c, skip_nl))
            fail(std::string("expected '") + c + "'");
    }
    bool accept_arrow() {
        if (peek() == '-' && pos + 1 < src.size() && src[pos + 1] == '>') {
            advance(2);
            return true;
        }
        if (src.compare(pos, 3, "\xe2\x86\x92") == 0) {
            advance(3);
            return true;
        }
        return false;
    }
    std::string ident() {
        skip_blank(false);
        if (pos >= src.size() ||
            !(std::isalpha((unsigned char)src[pos]) || src[pos] == '_'))
            fail("expected identifier");
        std::size_t start = pos;
        while (pos < src.size() &&
               (std::isalnum((unsigned char)src[pos]) || src[pos] == '_'))
            advance();
        return src.substr(start, pos - start);
    }
    void end_statement() {
        skip_blank(false);
        if (pos < src.size() && src[pos] != '\n' && src[pos] != '#')
            fail("expected end of statement");
    }
};

} // namespace

Session parse_session_program(const std::string& text, PolygraphRef base,
                              const std::string& origin) {
    PolygraphRef ext = share(runtime_extend(session_polygraph(*base)));
    SessTokenizer tz{text, origin};
    DiagramBuilder b(ext);
    WireId r = b.add_input(kRuntimeObject);

    std::map<std::string, WireId> live;
    auto bind = [&](const std::string& var, WireId w) {
        if (live.count(var))
            throw validation_error("variable '" + var +
                                   "' rebound while still unused");
        live[var] = w;
    };
    auto consume = [&](const std::string& var) {
        auto it = live.find(var);
        if (it == live.end())
            throw validation_error("variable '" + var + "' is not bound");
        WireId w = it->second;
        live.erase(it);
        return w;
    };

    tz.peek(true); // leading blank lines and comments
    std::string name = tz.ident();
    tz.expect('(');
    if (!tz.accept(')')) {
        while (true) {
            std::string var = tz.ident();
            tz.expect(':');
            std::string type = tz.ident();
            bind(var, b.add_input(type));
            if (tz.accept(')')) break;
            tz.expect(',');
        }
    }
    tz.expect(':');

    while (true) {
        char c = tz.peek(true);
        if (c == '\0') tz.fail("expected 'return(...)'");
        if (c == '!') {
            tz.advance();
            std::string var = tz.ident();
            WireId x = consume(var);
            r = b.apply(send_name(b.type_of(x)), {r, x})[0];
            tz.end_statement();
            continue;
        }
        if (c == '?') {
            tz.advance();
            std::string type = tz.ident();
            if (!base->has_object(type))
                throw validation_error("cannot receive '" + type +
                                       "': not a declared type");
            if (!tz.accept_arrow()) tz.fail("expected '->' after the type");
            std::string var = tz.ident();
            std::vector<WireId> rx = b.apply(recv_name(type), {r});
            r = rx[0];
            bind(var, rx[1]);
            tz.end_statement();
            continue;
        }
        std::string head = tz.ident();
        if (head == "return") {
            std::vector<std::string> vars;
            tz.expect('(');
            if (!tz.accept(')')) {
                while (true) {
                    vars.push_back(tz.ident());
                    if (tz.accept(')')) break;
                    tz.expect(',');
                }
            }
            std::vector<WireId> outs = {r};
            for (const auto& v : vars) outs.push_back(consume(v));
            if (!live.empty())
                throw validation_error("variable '" + live.begin()->first +
                                       "' is bound but never used");
            if (tz.peek(true) != '\0') tz.fail("content after return");
            return make_session(b.finish(outs));
        }
        const Generator* g = base->find(head);
        if (!g) throw validation_error("unknown generator '" + head + "'");
        std::vector<WireId> args;
        tz.expect('(');
        if (!tz.accept(')')) {
            while (true) {
                args.push_back(consume(tz.ident()));
                if (tz.accept(')')) break;
                tz.expect(',');
            }
        }
        if (!tz.accept_arrow()) tz.fail("expected '->'");
        std::vector<std::string> binders;
        if (tz.accept('(')) {
            if (!tz.accept(')')) {
                while (true) {
                    binders.push_back(tz.ident());
                    if (tz.accept(')')) break;
                    tz.expect(',');
                }
            }
        } else {
            binders.push_back(tz.ident());
        }
        if (binders.size() != g->outputs.size())
            throw validation_error("generator '" + head + "' produces " +
                                   std::to_string(g->outputs.size()) +
                                   " results, got " +
                                   std::to_string(binders.size()) + " binders");
        std::vector<WireId> outs = b.apply(head, args);
        for (std::size_t k = 0; k < binders.size(); ++k) bind(binders[k], outs[k]);
        tz.end_statement();
    }
}

} // namespace sd
