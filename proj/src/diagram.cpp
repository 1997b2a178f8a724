#include "sd/diagram.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sd {

using nlohmann::json;

std::vector<std::string> Diagram::dom() const {
    std::vector<std::string> out;
    out.reserve(bin_.size());
    for (WireId w : bin_) out.push_back(wire_types_[w]);
    return out;
}

std::vector<std::string> Diagram::cod() const {
    std::vector<std::string> out;
    out.reserve(bout_.size());
    for (WireId w : bout_) out.push_back(wire_types_[w]);
    return out;
}

// ---------------------------------------------------------------------------
// Builder

DiagramBuilder::DiagramBuilder(PolygraphRef poly) : poly_(std::move(poly)) {
    if (!poly_) throw validation_error("diagram requires a polygraph");
    d_.poly_ = poly_;
}

WireId DiagramBuilder::fresh(const std::string& type) {
    if (!poly_->has_object(type))
        throw validation_error("undeclared type '" + type + "'");
    d_.wire_types_.push_back(type);
    consumed_.push_back(false);
    return static_cast<WireId>(d_.wire_types_.size() - 1);
}

void DiagramBuilder::consume(WireId w) {
    if (w >= consumed_.size())
        throw validation_error("unknown wire id " + std::to_string(w));
    if (consumed_[w])
        throw validation_error("wire " + std::to_string(w) + " used twice");
    consumed_[w] = true;
}

WireId DiagramBuilder::add_input(const std::string& type) {
    WireId w = fresh(type);
    d_.bin_.push_back(w);
    return w;
}

const std::string& DiagramBuilder::type_of(WireId w) const {
    return d_.wire_types_.at(w);
}

std::vector<WireId> DiagramBuilder::apply(const std::string& gen,
                                          const std::vector<WireId>& ins) {
    const Generator& g = poly_->at(gen);
    if (ins.size() != g.inputs.size())
        throw validation_error("generator '" + gen + "' expects " +
                               std::to_string(g.inputs.size()) + " inputs, got " +
                               std::to_string(ins.size()));
    for (std::size_t i = 0; i < ins.size(); ++i) {
        if (type_of(ins[i]) != g.inputs[i])
            throw validation_error("generator '" + gen + "' input " +
                                   std::to_string(i) + ": expected '" +
                                   g.inputs[i] + "', got '" + type_of(ins[i]) + "'");
        consume(ins[i]);
    }
    Node n;
    n.gen = gen;
    n.in_wires = ins;
    for (const auto& t : g.outputs) n.out_wires.push_back(fresh(t));
    d_.nodes_.push_back(n);
    return d_.nodes_.back().out_wires;
}

std::vector<WireId> DiagramBuilder::splice(const Diagram& d,
                                           const std::vector<WireId>& inputs) {
    if (inputs.size() != d.boundary_in().size())
        throw validation_error("splice: boundary arity mismatch");
    std::vector<WireId> map(d.wire_count(), UINT32_MAX);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (type_of(inputs[i]) != d.wire_types()[d.boundary_in()[i]])
            throw validation_error("splice: boundary type mismatch at position " +
                                   std::to_string(i));
        map[d.boundary_in()[i]] = inputs[i];
    }
    for (const Node& n : d.nodes()) {
        Node m;
        m.gen = n.gen;
        for (WireId w : n.in_wires) {
            consume(map[w]);
            m.in_wires.push_back(map[w]);
        }
        for (WireId w : n.out_wires) map[w] = fresh(d.wire_types()[w]);
        for (WireId w : n.out_wires) m.out_wires.push_back(map[w]);
        d_.nodes_.push_back(std::move(m));
    }
    std::vector<WireId> outs;
    for (WireId w : d.boundary_out()) outs.push_back(map[w]);
    return outs;
}

Diagram DiagramBuilder::finish(const std::vector<WireId>& outputs) {
    for (WireId w : outputs) consume(w);
    for (std::size_t w = 0; w < consumed_.size(); ++w)
        if (!consumed_[w])
            throw validation_error("wire " + std::to_string(w) + " of type '" +
                                   d_.wire_types_[w] + "' is never used");
    d_.bout_ = outputs;
    validate(d_);
    return std::move(d_);
}

// ---------------------------------------------------------------------------
// Constructors

Diagram from_generator(PolygraphRef poly, const std::string& gen) {
    DiagramBuilder b(poly);
    const Generator& g = poly->at(gen);
    std::vector<WireId> ins;
    for (const auto& t : g.inputs) ins.push_back(b.add_input(t));
    return b.finish(b.apply(gen, ins));
}

Diagram identity(PolygraphRef poly, const std::vector<std::string>& types) {
    DiagramBuilder b(poly);
    std::vector<WireId> ws;
    for (const auto& t : types) ws.push_back(b.add_input(t));
    return b.finish(ws);
}

Diagram permutation(PolygraphRef poly, const std::vector<std::string>& types,
                    const std::vector<std::size_t>& perm) {
    if (perm.size() != types.size())
        throw validation_error("permutation size mismatch");
    std::vector<bool> seen(perm.size(), false);
    for (std::size_t p : perm) {
        if (p >= perm.size() || seen[p])
            throw validation_error("not a permutation");
        seen[p] = true;
    }
    DiagramBuilder b(poly);
    std::vector<WireId> ws;
    for (const auto& t : types) ws.push_back(b.add_input(t));
    std::vector<WireId> outs;
    for (std::size_t i = 0; i < perm.size(); ++i) outs.push_back(ws[perm[i]]);
    return b.finish(outs);
}

Diagram symmetry(PolygraphRef poly, const std::vector<std::string>& left,
                 const std::vector<std::string>& right) {
    std::vector<std::string> types = left;
    types.insert(types.end(), right.begin(), right.end());
    std::vector<std::size_t> perm;
    for (std::size_t i = 0; i < right.size(); ++i) perm.push_back(left.size() + i);
    for (std::size_t i = 0; i < left.size(); ++i) perm.push_back(i);
    return permutation(std::move(poly), types, perm);
}

static void require_same_polygraph(const Diagram& d1, const Diagram& d2) {
    if (d1.polygraph() != d2.polygraph() && !(*d1.polygraph() == *d2.polygraph()))
        throw validation_error("diagrams belong to different polygraphs");
}

Diagram compose(const Diagram& d1, const Diagram& d2) {
    require_same_polygraph(d1, d2);
    const auto mid1 = d1.cod();
    const auto mid2 = d2.dom();
    if (mid1.size() != mid2.size())
        throw validation_error("compose: boundary arity mismatch (" +
                               std::to_string(mid1.size()) + " vs " +
                               std::to_string(mid2.size()) + ")");
    for (std::size_t i = 0; i < mid1.size(); ++i)
        if (mid1[i] != mid2[i])
            throw validation_error("compose: type mismatch at position " +
                                   std::to_string(i) + " ('" + mid1[i] + "' vs '" +
                                   mid2[i] + "')");
    DiagramBuilder b(d1.polygraph());
    std::vector<WireId> ins;
    for (const auto& t : d1.dom()) ins.push_back(b.add_input(t));
    std::vector<WireId> mid = b.splice(d1, ins);
    return b.finish(b.splice(d2, mid));
}

Diagram tensor(const Diagram& d1, const Diagram& d2) {
    require_same_polygraph(d1, d2);
    DiagramBuilder b(d1.polygraph());
    std::vector<WireId> in1, in2;
    for (const auto& t : d1.dom()) in1.push_back(b.add_input(t));
    for (const auto& t : d2.dom()) in2.push_back(b.add_input(t));
    std::vector<WireId> out = b.splice(d1, in1);
    std::vector<WireId> out2 = b.splice(d2, in2);
    out.insert(out.end(), out2.begin(), out2.end());
    return b.finish(out);
}

// ---------------------------------------------------------------------------
// Validation and topological order

namespace {

struct Endpoints {
    // For every wire, its producer and consumer endpoint:
    // node index (>=0) with port, or boundary (-1) with position.
    struct End {
        int node = -2;
        std::size_t port = 0;
    };
    std::vector<End> producer, consumer;
};

Endpoints endpoints_of(const Diagram& d) {
    Endpoints e;
    e.producer.assign(d.wire_count(), {});
    e.consumer.assign(d.wire_count(), {});
    auto set = [&](std::vector<Endpoints::End>& v, WireId w, int node,
                   std::size_t port, const char* kind) {
        if (w >= d.wire_count())
            throw validation_error("wire id out of range");
        if (v[w].node != -2)
            throw validation_error("wire " + std::to_string(w) +
                                   " has two " + kind + " endpoints");
        v[w] = {node, port};
    };
    for (std::size_t i = 0; i < d.boundary_in().size(); ++i)
        set(e.producer, d.boundary_in()[i], -1, i, "producer");
    for (std::size_t i = 0; i < d.boundary_out().size(); ++i)
        set(e.consumer, d.boundary_out()[i], -1, i, "consumer");
    for (std::size_t n = 0; n < d.nodes().size(); ++n) {
        const Node& node = d.nodes()[n];
        for (std::size_t p = 0; p < node.out_wires.size(); ++p)
            set(e.producer, node.out_wires[p], (int)n, p, "producer");
        for (std::size_t p = 0; p < node.in_wires.size(); ++p)
            set(e.consumer, node.in_wires[p], (int)n, p, "consumer");
    }
    for (std::size_t w = 0; w < d.wire_count(); ++w) {
        if (e.producer[w].node == -2)
            throw validation_error("wire " + std::to_string(w) + " has no producer");
        if (e.consumer[w].node == -2)
            throw validation_error("wire " + std::to_string(w) + " has no consumer");
    }
    return e;
}

std::vector<std::size_t> find_cycle(const Diagram& d, const Endpoints& e,
                                    const std::vector<bool>& alive) {
    // DFS over the remaining nodes; alive nodes all lie on or feed cycles.
    std::vector<int> state(d.nodes().size(), 0);
    std::vector<std::size_t> stack;
    std::vector<std::size_t> cycle;
    std::function<bool(std::size_t)> dfs = [&](std::size_t n) -> bool {
        state[n] = 1;
        stack.push_back(n);
        for (WireId w : d.nodes()[n].out_wires) {
            int m = e.consumer[w].node;
            if (m < 0 || !alive[m]) continue;
            if (state[m] == 1) {
                auto it = std::find(stack.begin(), stack.end(), (std::size_t)m);
                cycle.assign(it, stack.end());
                return true;
            }
            if (state[m] == 0 && dfs(m)) return true;
        }
        stack.pop_back();
        state[n] = 2;
        return false;
    };
    for (std::size_t n = 0; n < d.nodes().size(); ++n)
        if (alive[n] && state[n] == 0 && dfs(n)) return cycle;
    return cycle;
}

// Kahn's algorithm; returns nodes in some topological order or throws with a
// witness cycle. `tie` orders the ready set.
template <typename Tie>
std::vector<std::size_t> kahn(const Diagram& d, const Endpoints& e, Tie tie) {
    std::vector<std::size_t> pending(d.nodes().size(), 0);
    for (std::size_t n = 0; n < d.nodes().size(); ++n)
        for (WireId w : d.nodes()[n].in_wires)
            if (e.producer[w].node >= 0) ++pending[n];
    std::set<std::size_t, Tie> ready(tie);
    for (std::size_t n = 0; n < d.nodes().size(); ++n)
        if (pending[n] == 0) ready.insert(n);
    std::vector<std::size_t> order;
    while (!ready.empty()) {
        std::size_t n = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(n);
        for (WireId w : d.nodes()[n].out_wires) {
            int m = e.consumer[w].node;
            if (m >= 0 && --pending[m] == 0) ready.insert((std::size_t)m);
        }
    }
    if (order.size() != d.nodes().size()) {
        std::vector<bool> alive(d.nodes().size(), true);
        for (std::size_t n : order) alive[n] = false;
        auto cyc = find_cycle(d, e, alive);
        std::string msg = "cycle detected:";
        for (std::size_t n : cyc) msg += " " + d.nodes()[n].gen;
        throw validation_error(msg);
    }
    return order;
}

} // namespace

void validate(const Diagram& d) {
    if (!d.polygraph()) throw validation_error("diagram has no polygraph");
    const Polygraph& poly = *d.polygraph();
    for (const auto& t : d.wire_types())
        if (!poly.has_object(t))
            throw validation_error("undeclared wire type '" + t + "'");
    for (const Node& n : d.nodes()) {
        const Generator& g = poly.at(n.gen);
        if (n.in_wires.size() != g.inputs.size() ||
            n.out_wires.size() != g.outputs.size())
            throw validation_error("node '" + n.gen + "' arity mismatch");
        for (std::size_t i = 0; i < n.in_wires.size(); ++i)
            if (d.wire_types()[n.in_wires[i]] != g.inputs[i])
                throw validation_error("node '" + n.gen + "' input " +
                                       std::to_string(i) + " type mismatch");
        for (std::size_t i = 0; i < n.out_wires.size(); ++i)
            if (d.wire_types()[n.out_wires[i]] != g.outputs[i])
                throw validation_error("node '" + n.gen + "' output " +
                                       std::to_string(i) + " type mismatch");
    }
    Endpoints e = endpoints_of(d);
    kahn(d, e, std::less<std::size_t>());
}

// ---------------------------------------------------------------------------
// Color refinement

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

struct Fnv {
    std::uint64_t h = kFnvOffset;
    void byte(unsigned char b) {
        h ^= b;
        h *= kFnvPrime;
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) byte((unsigned char)(v >> (8 * i)));
    }
    void str(const std::string& s) {
        u64(s.size());
        for (char c : s) byte((unsigned char)c);
    }
};

struct Colors {
    std::vector<std::uint64_t> wire, node;
};

std::vector<int> boundary_distances(const Diagram& d, const Endpoints& e) {
    // Undirected BFS distance from any boundary endpoint, over wires+nodes.
    std::size_t W = d.wire_count(), N = d.nodes().size();
    std::vector<int> dist(W + N, -1);
    std::queue<std::size_t> q;
    for (WireId w : d.boundary_in())
        if (dist[w] < 0) dist[w] = 0, q.push(w);
    for (WireId w : d.boundary_out())
        if (dist[w] < 0) dist[w] = 0, q.push(w);
    auto visit = [&](std::size_t v, int base) {
        if (dist[v] < 0) {
            dist[v] = base + 1;
            q.push(v);
        }
    };
    while (!q.empty()) {
        std::size_t v = q.front();
        q.pop();
        if (v < W) {
            if (e.producer[v].node >= 0) visit(W + e.producer[v].node, dist[v]);
            if (e.consumer[v].node >= 0) visit(W + e.consumer[v].node, dist[v]);
        } else {
            const Node& n = d.nodes()[v - W];
            for (WireId w : n.in_wires) visit(w, dist[v]);
            for (WireId w : n.out_wires) visit(w, dist[v]);
        }
    }
    return dist;
}

Colors initial_colors(const Diagram& d, const Endpoints& e) {
    auto dist = boundary_distances(d, e);
    std::size_t W = d.wire_count();
    Colors c;
    c.wire.resize(W);
    c.node.resize(d.nodes().size());
    for (std::size_t w = 0; w < W; ++w) {
        Fnv f;
        f.byte('W');
        f.str(d.wire_types()[w]);
        f.u64(e.producer[w].node == -1 ? e.producer[w].port + 1 : 0);
        f.u64(e.consumer[w].node == -1 ? e.consumer[w].port + 1 : 0);
        f.u64((std::uint64_t)(dist[w] + 1));
        c.wire[w] = f.h;
    }
    for (std::size_t n = 0; n < d.nodes().size(); ++n) {
        Fnv f;
        f.byte('N');
        f.str(d.nodes()[n].gen);
        f.u64(d.nodes()[n].in_wires.size());
        f.u64(d.nodes()[n].out_wires.size());
        f.u64((std::uint64_t)(dist[W + n] + 1));
        c.node[n] = f.h;
    }
    return c;
}

void refine_round(const Diagram& d, const Endpoints& e, Colors& c) {
    Colors next = c;
    for (std::size_t n = 0; n < d.nodes().size(); ++n) {
        Fnv f;
        f.byte('n');
        f.u64(c.node[n]);
        for (WireId w : d.nodes()[n].in_wires) f.u64(c.wire[w]);
        f.byte('|');
        for (WireId w : d.nodes()[n].out_wires) f.u64(c.wire[w]);
        next.node[n] = f.h;
    }
    for (std::size_t w = 0; w < d.wire_count(); ++w) {
        Fnv f;
        f.byte('w');
        f.u64(c.wire[w]);
        const auto& p = e.producer[w];
        const auto& q = e.consumer[w];
        f.u64(p.node >= 0 ? c.node[p.node] : 0);
        f.u64(p.port);
        f.u64(q.node >= 0 ? c.node[q.node] : 0);
        f.u64(q.port);
        next.wire[w] = f.h;
    }
    c = std::move(next);
}

std::size_t distinct_count(const Colors& c) {
    std::set<std::uint64_t> s(c.wire.begin(), c.wire.end());
    s.insert(c.node.begin(), c.node.end());
    return s.size();
}

Colors refine(const Diagram& d, const Endpoints& e, Colors c) {
    std::size_t prev = distinct_count(c);
    for (std::size_t round = 0; round < d.wire_count() + d.nodes().size() + 1;
         ++round) {
        refine_round(d, e, c);
        std::size_t cur = distinct_count(c);
        if (cur == prev) break;
        prev = cur;
    }
    return c;
}

Colors refined_colors(const Diagram& d, const Endpoints& e) {
    return refine(d, e, initial_colors(d, e));
}

} // namespace

std::vector<std::size_t> topological_order(const Diagram& d) {
    Endpoints e = endpoints_of(d);
    Colors c = refined_colors(d, e);
    auto first_in = [&](std::size_t n) -> std::uint64_t {
        const auto& ins = d.nodes()[n].in_wires;
        return ins.empty() ? UINT64_MAX : ins[0];
    };
    auto tie = [&](std::size_t a, std::size_t b) {
        if (c.node[a] != c.node[b]) return c.node[a] < c.node[b];
        if (first_in(a) != first_in(b)) return first_in(a) < first_in(b);
        return a < b;
    };
    return kahn(d, e, tie);
}

// ---------------------------------------------------------------------------
// Isomorphism

namespace {

bool same_interface(const Diagram& a, const Diagram& b) {
    return a.dom() == b.dom() && a.cod() == b.cod() &&
           a.wire_count() == b.wire_count() && a.nodes().size() == b.nodes().size();
}

struct Matcher {
    const Diagram &a, &b;
    const Endpoints &ea, &eb;
    const Colors &ca, &cb;
    std::vector<int> wmap, wrev; // a-wire -> b-wire and inverse
    std::vector<int> nmap, nrev;

    Matcher(const Diagram& a_, const Diagram& b_, const Endpoints& ea_,
            const Endpoints& eb_, const Colors& ca_, const Colors& cb_)
        : a(a_), b(b_), ea(ea_), eb(eb_), ca(ca_), cb(cb_),
          wmap(a.wire_count(), -1), wrev(b.wire_count(), -1),
          nmap(a.nodes().size(), -1), nrev(b.nodes().size(), -1) {}

    bool bind_wire(WireId x, WireId y, std::vector<WireId>& trail) {
        if (wmap[x] >= 0) return wmap[x] == (int)y;
        if (wrev[y] >= 0) return false;
        if (ca.wire[x] != cb.wire[y]) return false;
        wmap[x] = (int)y;
        wrev[y] = (int)x;
        trail.push_back(x);
        return true;
    }

    void unbind(const std::vector<WireId>& trail) {
        for (WireId x : trail) {
            wrev[wmap[x]] = -1;
            wmap[x] = -1;
        }
    }

    bool try_node(std::size_t x, std::size_t y, std::vector<WireId>& trail) {
        const Node& nx = a.nodes()[x];
        const Node& ny = b.nodes()[y];
        if (nx.gen != ny.gen || ca.node[x] != cb.node[y]) return false;
        for (std::size_t i = 0; i < nx.in_wires.size(); ++i)
            if (!bind_wire(nx.in_wires[i], ny.in_wires[i], trail)) return false;
        for (std::size_t i = 0; i < nx.out_wires.size(); ++i)
            if (!bind_wire(nx.out_wires[i], ny.out_wires[i], trail)) return false;
        return true;
    }

    bool search(const std::vector<std::size_t>& order, std::size_t k) {
        if (k == order.size()) return check_complete();
        std::size_t x = order[k];
        for (std::size_t y = 0; y < b.nodes().size(); ++y) {
            if (nrev[y] >= 0) continue;
            std::vector<WireId> trail;
            if (try_node(x, y, trail)) {
                nmap[x] = (int)y;
                nrev[y] = (int)x;
                if (search(order, k + 1)) return true;
                nmap[x] = -1;
                nrev[y] = -1;
            }
            unbind(trail);
        }
        return false;
    }

    bool check_complete() {
        // Endpoint structure is forced by node and boundary bindings; every
        // wire must be mapped with matching endpoints on both sides.
        for (std::size_t w = 0; w < a.wire_count(); ++w) {
            if (wmap[w] < 0) return false;
            WireId v = (WireId)wmap[w];
            const auto &pa = ea.producer[w], &pb = eb.producer[v];
            const auto &qa = ea.consumer[w], &qb = eb.consumer[v];
            if ((pa.node < 0) != (pb.node < 0) || pa.port != pb.port) return false;
            if (pa.node >= 0 && nmap[pa.node] != pb.node) return false;
            if ((qa.node < 0) != (qb.node < 0) || qa.port != qb.port) return false;
            if (qa.node >= 0 && nmap[qa.node] != qb.node) return false;
        }
        return true;
    }
};

} // namespace

bool is_equal(const Diagram& a, const Diagram& b) {
    require_same_polygraph(a, b);
    if (!same_interface(a, b)) return false;
    Endpoints ea = endpoints_of(a), eb = endpoints_of(b);
    Colors ca = refined_colors(a, ea), cb = refined_colors(b, eb);
    {
        auto wa = ca.wire, wb = cb.wire;
        std::sort(wa.begin(), wa.end());
        std::sort(wb.begin(), wb.end());
        if (wa != wb) return false;
        auto na = ca.node, nb = cb.node;
        std::sort(na.begin(), na.end());
        std::sort(nb.begin(), nb.end());
        if (na != nb) return false;
    }
    Matcher m(a, b, ea, eb, ca, cb);
    std::vector<WireId> boundary_trail;
    for (std::size_t i = 0; i < a.boundary_in().size(); ++i)
        if (!m.bind_wire(a.boundary_in()[i], b.boundary_in()[i], boundary_trail))
            return false;
    for (std::size_t i = 0; i < a.boundary_out().size(); ++i)
        if (!m.bind_wire(a.boundary_out()[i], b.boundary_out()[i], boundary_trail))
            return false;
    // Match rare colors first to keep the search shallow.
    std::map<std::uint64_t, int> freq;
    for (auto c : ca.node) ++freq[c];
    std::vector<std::size_t> order(a.nodes().size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        int fx = freq[ca.node[x]], fy = freq[ca.node[y]];
        if (fx != fy) return fx < fy;
        if (ca.node[x] != ca.node[y]) return ca.node[x] < ca.node[y];
        return x < y;
    });
    return m.search(order, 0);
}

// ---------------------------------------------------------------------------
// Canonical hash

namespace {

struct CanonState {
    const Diagram& d;
    const Endpoints& e;
    std::size_t budget = 1000000;
};

bool discrete(const Colors& c) {
    std::set<std::uint64_t> s(c.wire.begin(), c.wire.end());
    if (s.size() != c.wire.size()) return false;
    std::set<std::uint64_t> t(c.node.begin(), c.node.end());
    return t.size() == c.node.size();
}

std::string certificate(const CanonState& st, const Colors& c) {
    const Diagram& d = st.d;
    std::vector<std::size_t> worder(d.wire_count()), norder(d.nodes().size());
    for (std::size_t i = 0; i < worder.size(); ++i) worder[i] = i;
    for (std::size_t i = 0; i < norder.size(); ++i) norder[i] = i;
    std::sort(worder.begin(), worder.end(),
              [&](std::size_t x, std::size_t y) { return c.wire[x] < c.wire[y]; });
    std::sort(norder.begin(), norder.end(),
              [&](std::size_t x, std::size_t y) { return c.node[x] < c.node[y]; });
    std::vector<std::size_t> wpos(d.wire_count());
    for (std::size_t i = 0; i < worder.size(); ++i) wpos[worder[i]] = i;
    std::ostringstream out;
    for (std::size_t w : worder) out << 'w' << d.wire_types()[w] << ';';
    for (WireId w : d.boundary_in()) out << 'i' << wpos[w] << ';';
    for (WireId w : d.boundary_out()) out << 'o' << wpos[w] << ';';
    for (std::size_t n : norder) {
        out << 'n' << d.nodes()[n].gen << '(';
        for (WireId w : d.nodes()[n].in_wires) out << wpos[w] << ',';
        out << ')';
        for (WireId w : d.nodes()[n].out_wires) out << wpos[w] << ',';
        out << ';';
    }
    return out.str();
}

std::string canonical_certificate(CanonState& st, Colors c) {
    if (st.budget-- == 0)
        throw error("canonical_hash: refinement budget exceeded");
    c = refine(st.d, st.e, std::move(c));
    if (discrete(c)) return certificate(st, c);
    // Individualize each member of the first non-singleton wire class (or
    // node class) and take the lexicographically least certificate.
    std::map<std::uint64_t, std::vector<std::size_t>> wclass, nclass;
    for (std::size_t w = 0; w < c.wire.size(); ++w) wclass[c.wire[w]].push_back(w);
    for (std::size_t n = 0; n < c.node.size(); ++n) nclass[c.node[n]].push_back(n);
    std::string best;
    auto consider = [&](bool is_wire, const std::vector<std::size_t>& members) {
        for (std::size_t v : members) {
            Colors c2 = c;
            Fnv f;
            f.byte('*');
            f.u64(is_wire ? c2.wire[v] : c2.node[v]);
            if (is_wire)
                c2.wire[v] = f.h;
            else
                c2.node[v] = f.h;
            std::string cert = canonical_certificate(st, std::move(c2));
            if (best.empty() || cert < best) best = std::move(cert);
        }
    };
    for (const auto& [col, members] : wclass)
        if (members.size() > 1) {
            consider(true, members);
            return best;
        }
    for (const auto& [col, members] : nclass)
        if (members.size() > 1) {
            consider(false, members);
            return best;
        }
    return certificate(st, c); // unreachable
}

} // namespace

std::uint64_t canonical_hash(const Diagram& d) {
    Endpoints e = endpoints_of(d);
    CanonState st{d, e};
    std::string cert = canonical_certificate(st, initial_colors(d, e));
    Fnv f;
    f.str(cert);
    return f.h;
}

// ---------------------------------------------------------------------------
// Serialization

std::string diagram_to_json(const Diagram& d) {
    json j;
    j["wires"] = json::array();
    for (std::size_t w = 0; w < d.wire_count(); ++w)
        j["wires"].push_back({{"id", w}, {"type", d.wire_types()[w]}});
    j["nodes"] = json::array();
    for (const Node& n : d.nodes())
        j["nodes"].push_back(
            {{"gen", n.gen}, {"in", n.in_wires}, {"out", n.out_wires}});
    j["in"] = d.boundary_in();
    j["out"] = d.boundary_out();
    return j.dump(2) + "\n";
}

Diagram parse_diagram(const std::string& text, PolygraphRef poly,
                      const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw sd::parse_error(origin, 1, 1, e.what());
    }
    std::map<std::uint64_t, std::string> types;
    std::vector<std::uint64_t> order;
    for (const auto& jw : j.at("wires")) {
        std::uint64_t id = jw.at("id").get<std::uint64_t>();
        if (!types.emplace(id, jw.at("type").get<std::string>()).second)
            throw validation_error("duplicate wire id " + std::to_string(id));
        order.push_back(id);
    }
    std::map<std::uint64_t, WireId> renum;
    for (std::uint64_t id : order) renum[id] = (WireId)renum.size();
    auto wire = [&](std::uint64_t id) {
        auto it = renum.find(id);
        if (it == renum.end())
            throw validation_error("unknown wire id " + std::to_string(id));
        return it->second;
    };

    std::vector<std::string> wt(renum.size());
    for (const auto& [id, t] : types) wt[renum[id]] = t;
    std::vector<Node> nodes;
    for (const auto& jn : j.at("nodes")) {
        Node n;
        n.gen = jn.at("gen").get<std::string>();
        for (auto id : jn.at("in")) n.in_wires.push_back(wire(id));
        for (auto id : jn.at("out")) n.out_wires.push_back(wire(id));
        nodes.push_back(std::move(n));
    }
    std::vector<WireId> bin, bout;
    for (auto id : j.at("in")) bin.push_back(wire(id));
    for (auto id : j.at("out")) bout.push_back(wire(id));
    Diagram d;
    d.poly_ = std::move(poly);
    d.wire_types_ = std::move(wt);
    d.nodes_ = std::move(nodes);
    d.bin_ = std::move(bin);
    d.bout_ = std::move(bout);
    validate(d);
    return d;
}

Diagram load_diagram(const std::string& path, PolygraphRef poly) {
    std::ifstream in(path);
    if (!in) throw error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_diagram(ss.str(), std::move(poly), path);
}

void save_diagram(const Diagram& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw error("cannot open '" + path + "' for writing");
    out << diagram_to_json(d);
}

std::string diagram_to_dot(const Diagram& d) {
    Endpoints e = endpoints_of(d);
    std::ostringstream out;
    out << "digraph diagram {\n  rankdir=TB;\n  node [shape=box];\n";
    for (std::size_t n = 0; n < d.nodes().size(); ++n)
        out << "  n" << n << " [label=\"" << d.nodes()[n].gen << "\"];\n";
    for (std::size_t i = 0; i < d.boundary_in().size(); ++i)
        out << "  bin" << i << " [shape=point];\n";
    for (std::size_t i = 0; i < d.boundary_out().size(); ++i)
        out << "  bout" << i << " [shape=point];\n";
    for (std::size_t w = 0; w < d.wire_count(); ++w) {
        std::ostringstream from, to;
        if (e.producer[w].node >= 0)
            from << "n" << e.producer[w].node;
        else
            from << "bin" << e.producer[w].port;
        if (e.consumer[w].node >= 0)
            to << "n" << e.consumer[w].node;
        else
            to << "bout" << e.consumer[w].port;
        out << "  " << from.str() << " -> " << to.str() << " [label=\""
            << d.wire_types()[w] << "\"];\n";
    }
    out << "}\n";
    return out.str();
}

} // namespace sd
