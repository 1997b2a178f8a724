#include "sd/polar.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace sd {

std::size_t PolarShuffle::total_elements() const {
    std::size_t n = output.size();
    for (const auto& l : inputs) n += l.size();
    return n;
}

bool is_domain(const PolarShuffle& s, PolarPos p) {
    bool send = s.item(p).pol == Polarity::Send;
    return p.list == kOutputList ? !send : send;
}

// ---------------------------------------------------------------------------
// Polar list text form

PolarList parse_polar_list(const std::string& text) {
    PolarList out;
    std::string token;
    auto flush = [&]() {
        if (token.empty()) return;
        Polarity pol;
        std::string name;
        if (token.front() == '!' || token.front() == '?') {
            pol = token.front() == '!' ? Polarity::Send : Polarity::Recv;
            name = token.substr(1);
        } else if (token.back() == '!' || token.back() == '?') {
            pol = token.back() == '!' ? Polarity::Send : Polarity::Recv;
            name = token.substr(0, token.size() - 1);
        } else {
            throw validation_error("polar item '" + token +
                                   "' needs a '!' or '?' mark");
        }
        if (!is_identifier(name))
            throw validation_error("invalid type name '" + name + "'");
        out.push_back({name, pol});
        token.clear();
    };
    for (char c : text) {
        if (std::isspace((unsigned char)c) || c == ',')
            flush();
        else
            token.push_back(c);
    }
    flush();
    return out;
}

std::string polar_list_to_string(const PolarList& l) {
    std::string out;
    for (std::size_t i = 0; i < l.size(); ++i) {
        if (i) out += " ";
        out += polarity_mark(l[i].pol);
        out += l[i].type;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

struct Flat {
    const PolarShuffle& s;
    std::vector<int> list_base; // vertex index of each input list start
    int output_base;
    int count;

    explicit Flat(const PolarShuffle& s_) : s(s_) {
        int v = 0;
        for (const auto& l : s.inputs) {
            list_base.push_back(v);
            v += (int)l.size();
        }
        output_base = v;
        count = v + (int)s.output.size();
    }

    int id(PolarPos p) const {
        return p.list == kOutputList ? output_base + p.pos
                                     : list_base[p.list] + p.pos;
    }
    PolarPos pos(int v) const {
        if (v >= output_base) return {kOutputList, v - output_base};
        int list = (int)(std::upper_bound(list_base.begin(), list_base.end(), v) -
                         list_base.begin()) -
                   1;
        return {list, v - list_base[list]};
    }
};

bool in_range(const PolarShuffle& s, PolarPos p) {
    if (p.list == kOutputList) return p.pos >= 0 && p.pos < (int)s.output.size();
    return p.list >= 0 && p.list < (int)s.inputs.size() && p.pos >= 0 &&
           p.pos < (int)s.inputs[p.list].size();
}

std::string pos_name(const PolarShuffle& s, PolarPos p) {
    std::ostringstream out;
    if (p.list == kOutputList)
        out << "output";
    else
        out << "input " << p.list;
    out << "[" << p.pos << "]";
    if (in_range(s, p))
        out << " (" << polarity_mark(s.item(p).pol) << s.item(p).type << ")";
    return out.str();
}

// Adjacency of the induced graph: linear edges within every polar list plus
// one edge per pairing, domain -> codomain.
std::vector<std::vector<int>> induced_graph(const PolarShuffle& s,
                                            const Flat& f) {
    std::vector<std::vector<int>> adj(f.count);
    for (std::size_t i = 0; i < s.inputs.size(); ++i)
        for (std::size_t p = 0; p + 1 < s.inputs[i].size(); ++p)
            adj[f.id({(int)i, (int)p})].push_back(f.id({(int)i, (int)p + 1}));
    for (std::size_t p = 0; p + 1 < s.output.size(); ++p)
        adj[f.id({kOutputList, (int)p})].push_back(f.id({kOutputList, (int)p + 1}));
    for (const auto& [d, c] : s.pairing) {
        adj[f.id(d)].push_back(f.id(c));
    }
    return adj;
}

std::vector<PolarPos> witness_cycle(const PolarShuffle&, const Flat& f,
                                    const std::vector<std::vector<int>>& adj) {
    std::vector<int> state(f.count, 0);
    std::vector<int> stack;
    std::vector<PolarPos> cycle;
    auto dfs = [&](auto&& self, int v) -> bool {
        state[v] = 1;
        stack.push_back(v);
        for (int w : adj[v]) {
            if (state[w] == 1) {
                auto it = std::find(stack.begin(), stack.end(), w);
                for (; it != stack.end(); ++it) cycle.push_back(f.pos(*it));
                return true;
            }
            if (state[w] == 0 && self(self, w)) return true;
        }
        stack.pop_back();
        state[v] = 2;
        return false;
    };
    for (int v = 0; v < f.count; ++v)
        if (state[v] == 0 && dfs(dfs, v)) break;
    return cycle;
}

// Kahn's algorithm with smallest-vertex tie-breaking; returns topological
// positions, or an empty vector when a cycle exists.
std::vector<int> topo_positions(const Flat& f,
                                const std::vector<std::vector<int>>& adj) {
    std::vector<int> indeg(f.count, 0);
    for (int v = 0; v < f.count; ++v)
        for (int w : adj[v]) ++indeg[w];
    std::set<int> ready;
    for (int v = 0; v < f.count; ++v)
        if (indeg[v] == 0) ready.insert(v);
    std::vector<int> pos(f.count, -1);
    int next = 0;
    while (!ready.empty()) {
        int v = *ready.begin();
        ready.erase(ready.begin());
        pos[v] = next++;
        for (int w : adj[v])
            if (--indeg[w] == 0) ready.insert(w);
    }
    if (next != f.count) return {};
    return pos;
}

} // namespace

PolarReport validate(const PolarShuffle& s) {
    PolarReport r;
    auto fail = [&](const std::string& msg) {
        r.ok = false;
        r.message = msg;
        return r;
    };
    Flat f(s);
    std::vector<bool> as_source(f.count, false);
    std::vector<bool> as_target(f.count, false);
    std::size_t domain_count = 0;
    for (std::size_t i = 0; i < s.inputs.size(); ++i)
        for (std::size_t p = 0; p < s.inputs[i].size(); ++p)
            if (is_domain(s, {(int)i, (int)p})) ++domain_count;
    for (std::size_t p = 0; p < s.output.size(); ++p)
        if (is_domain(s, {kOutputList, (int)p})) ++domain_count;
    if (s.pairing.size() != domain_count)
        return fail("pairing has " + std::to_string(s.pairing.size()) +
                    " edges, expected " + std::to_string(domain_count));
    for (const auto& [d, c] : s.pairing) {
        if (!in_range(s, d) || !in_range(s, c))
            return fail("pairing position out of range");
        if (!is_domain(s, d))
            return fail("pairing source " + pos_name(s, d) +
                        " is not a domain position");
        if (is_domain(s, c))
            return fail("pairing target " + pos_name(s, c) +
                        " is not a codomain position");
        if (s.item(d).type != s.item(c).type)
            return fail("type mismatch: " + pos_name(s, d) + " paired with " +
                        pos_name(s, c));
        if (as_source[f.id(d)])
            return fail("position " + pos_name(s, d) + " paired twice");
        if (as_target[f.id(c)])
            return fail("position " + pos_name(s, c) + " paired twice");
        as_source[f.id(d)] = as_target[f.id(c)] = true;
    }
    auto adj = induced_graph(s, f);
    if (f.count > 0 && topo_positions(f, adj).empty()) {
        r.ok = false;
        r.cycle = witness_cycle(s, f, adj);
        std::string msg = "cycle:";
        for (const auto& p : r.cycle) msg += " " + pos_name(s, p);
        r.message = msg;
    }
    return r;
}

void require_valid(const PolarShuffle& s) {
    PolarReport r = validate(s);
    if (!r.ok) throw validation_error("invalid polar shuffle: " + r.message);
}

// ---------------------------------------------------------------------------
// Identity, composition, tensor

PolarShuffle identity_polar(const PolarList& gamma) {
    PolarShuffle s;
    s.inputs = {gamma};
    s.output = gamma;
    for (std::size_t p = 0; p < gamma.size(); ++p) {
        PolarPos in{0, (int)p}, out{kOutputList, (int)p};
        if (gamma[p].pol == Polarity::Send)
            s.pairing.emplace_back(in, out);
        else
            s.pairing.emplace_back(out, in);
    }
    return s;
}

PolarShuffle compose(const PolarShuffle& s, std::size_t position,
                     const PolarShuffle& t) {
    if (position >= t.inputs.size())
        throw validation_error("compose: input position out of range");
    if (s.output != t.inputs[position])
        throw validation_error("compose: border mismatch, s produces [" +
                               polar_list_to_string(s.output) +
                               "] but t expects [" +
                               polar_list_to_string(t.inputs[position]) + "]");

    PolarShuffle r;
    for (std::size_t j = 0; j < position; ++j) r.inputs.push_back(t.inputs[j]);
    for (const auto& l : s.inputs) r.inputs.push_back(l);
    for (std::size_t j = position + 1; j < t.inputs.size(); ++j)
        r.inputs.push_back(t.inputs[j]);
    r.output = t.output;

    // Composite coordinates of non-border positions.
    auto from_s = [&](PolarPos p) -> PolarPos {
        return {(int)position + p.list, p.pos};
    };
    auto from_t = [&](PolarPos p) -> PolarPos {
        if (p.list == kOutputList) return p;
        if (p.list < (int)position) return p;
        return {p.list + (int)s.inputs.size() - 1, p.pos};
    };

    std::map<PolarPos, PolarPos> smap(s.pairing.begin(), s.pairing.end());
    std::map<PolarPos, PolarPos> tmap(t.pairing.begin(), t.pairing.end());

    // Chase a chain through the border. Border positions are s's output list
    // and t's input list `position`; a chain alternates s- and t-edges there.
    auto chase = [&](PolarPos start, bool in_s) -> PolarPos {
        PolarPos cur = start;
        bool side = in_s;
        while (true) {
            PolarPos tgt = side ? smap.at(cur)
                                : tmap.at(cur);
            if (side) {
                if (tgt.list != kOutputList) return from_s(tgt); // s input recv
                // Landed on a border send; continue as t's input send.
                PolarPos border{(int)position, tgt.pos};
                cur = border;
                side = false;
            } else {
                if (tgt.list == kOutputList || tgt.list != (int)position)
                    return from_t(tgt); // t output send or t input recv
                // Landed on a border recv; continue as s's output recv.
                cur = {kOutputList, tgt.pos};
                side = true;
            }
        }
    };

    for (std::size_t i = 0; i < s.inputs.size(); ++i)
        for (std::size_t p = 0; p < s.inputs[i].size(); ++p)
            if (s.inputs[i][p].pol == Polarity::Send) {
                PolarPos d{(int)i, (int)p};
                r.pairing.emplace_back(from_s(d), chase(d, true));
            }
    for (std::size_t j = 0; j < t.inputs.size(); ++j) {
        if (j == position) continue;
        for (std::size_t p = 0; p < t.inputs[j].size(); ++p)
            if (t.inputs[j][p].pol == Polarity::Send) {
                PolarPos d{(int)j, (int)p};
                r.pairing.emplace_back(from_t(d), chase(d, false));
            }
    }
    for (std::size_t p = 0; p < t.output.size(); ++p)
        if (t.output[p].pol == Polarity::Recv) {
            PolarPos d{kOutputList, (int)p};
            r.pairing.emplace_back(d, chase(d, false));
        }

    PolarReport rep = validate(r);
    if (!rep.ok)
        throw error("composite of valid polar shuffles failed validation (bug): " +
                    rep.message);
    return r;
}

PolarShuffle tensor(const PolarShuffle& s, const PolarShuffle& t) {
    if (s.inputs.size() != t.inputs.size())
        throw validation_error("tensor: arity mismatch (" +
                               std::to_string(s.inputs.size()) + " vs " +
                               std::to_string(t.inputs.size()) + ")");
    PolarShuffle r;
    for (std::size_t i = 0; i < s.inputs.size(); ++i) {
        PolarList l = s.inputs[i];
        l.insert(l.end(), t.inputs[i].begin(), t.inputs[i].end());
        r.inputs.push_back(std::move(l));
    }
    r.output = s.output;
    r.output.insert(r.output.end(), t.output.begin(), t.output.end());
    r.pairing = s.pairing;
    auto shift = [&](PolarPos p) -> PolarPos {
        if (p.list == kOutputList)
            return {kOutputList, p.pos + (int)s.output.size()};
        return {p.list, p.pos + (int)s.inputs[p.list].size()};
    };
    for (const auto& [d, c] : t.pairing)
        r.pairing.emplace_back(shift(d), shift(c));
    PolarReport rep = validate(r);
    if (!rep.ok)
        throw error("tensor of valid polar shuffles failed validation (bug): " +
                    rep.message);
    return r;
}

// ---------------------------------------------------------------------------
// Coherence-based inference

std::optional<PolarShuffle> infer(const std::vector<PolarList>& inputs,
                                  const PolarList& output) {
    PolarShuffle s;
    s.inputs = inputs;
    s.output = output;
    std::map<std::string, std::vector<PolarPos>> dom, cod;
    auto classify = [&](PolarPos p) {
        (is_domain(s, p) ? dom : cod)[s.item(p).type].push_back(p);
    };
    for (std::size_t i = 0; i < inputs.size(); ++i)
        for (std::size_t p = 0; p < inputs[i].size(); ++p)
            classify({(int)i, (int)p});
    for (std::size_t p = 0; p < output.size(); ++p)
        classify({kOutputList, (int)p});
    for (const auto& [type, ps] : dom)
        if (ps.size() != 1 || cod[type].size() != 1)
            throw validation_error("not distinctly typed: '" + type + "' occurs " +
                                   std::to_string(ps.size()) +
                                   " time(s) in the domain and " +
                                   std::to_string(cod[type].size()) +
                                   " in the codomain");
    for (const auto& [type, ps] : cod)
        if (dom.find(type) == dom.end())
            throw validation_error("not distinctly typed: '" + type +
                                   "' occurs only in the codomain");
    for (const auto& [type, ps] : dom)
        s.pairing.emplace_back(ps[0], cod[type][0]);
    std::sort(s.pairing.begin(), s.pairing.end());
    if (!validate(s).ok) return std::nullopt;
    return s;
}

// ---------------------------------------------------------------------------
// Builders

namespace {

// 1-input shuffle realizing a permutation of a polar list; perm maps output
// position -> input position.
PolarShuffle reorder_shuffle(const PolarList& list,
                             const std::vector<std::size_t>& perm) {
    PolarShuffle s;
    s.inputs = {list};
    for (std::size_t q = 0; q < perm.size(); ++q) s.output.push_back(list[perm[q]]);
    for (std::size_t q = 0; q < perm.size(); ++q) {
        PolarPos in{0, (int)perm[q]}, out{kOutputList, (int)q};
        if (list[perm[q]].pol == Polarity::Send)
            s.pairing.emplace_back(in, out);
        else
            s.pairing.emplace_back(out, in);
    }
    std::sort(s.pairing.begin(), s.pairing.end());
    require_valid(s);
    return s;
}

PolarList concat(std::initializer_list<PolarList> lists) {
    PolarList out;
    for (const auto& l : lists) out.insert(out.end(), l.begin(), l.end());
    return out;
}

} // namespace

PolarShuffle link_shuffle(const PolarList& gamma, const std::string& type,
                          const PolarList& delta) {
    PolarShuffle s;
    s.inputs = {concat({gamma,
                        {{type, Polarity::Send}, {type, Polarity::Recv}},
                        delta})};
    s.output = concat({gamma, delta});
    int g = (int)gamma.size();
    for (int p = 0; p < g; ++p) {
        PolarPos in{0, p}, out{kOutputList, p};
        if (gamma[p].pol == Polarity::Send)
            s.pairing.emplace_back(in, out);
        else
            s.pairing.emplace_back(out, in);
    }
    s.pairing.emplace_back(PolarPos{0, g}, PolarPos{0, g + 1});
    for (int p = 0; p < (int)delta.size(); ++p) {
        PolarPos in{0, g + 2 + p}, out{kOutputList, g + p};
        if (delta[p].pol == Polarity::Send)
            s.pairing.emplace_back(in, out);
        else
            s.pairing.emplace_back(out, in);
    }
    require_valid(s);
    return s;
}

PolarShuffle spawn_shuffle(const PolarList& gamma, const std::string& type,
                           const PolarList& delta) {
    PolarShuffle s;
    s.inputs = {concat({gamma, delta})};
    s.output = concat({gamma,
                       {{type, Polarity::Recv}, {type, Polarity::Send}},
                       delta});
    int g = (int)gamma.size();
    for (int p = 0; p < g; ++p) {
        PolarPos in{0, p}, out{kOutputList, p};
        if (gamma[p].pol == Polarity::Send)
            s.pairing.emplace_back(in, out);
        else
            s.pairing.emplace_back(out, in);
    }
    s.pairing.emplace_back(PolarPos{kOutputList, g}, PolarPos{kOutputList, g + 1});
    for (int p = 0; p < (int)delta.size(); ++p) {
        PolarPos in{0, g + p}, out{kOutputList, g + 2 + p};
        if (delta[p].pol == Polarity::Send)
            s.pairing.emplace_back(in, out);
        else
            s.pairing.emplace_back(out, in);
    }
    require_valid(s);
    return s;
}

PolarShuffle lift(const Shuffling& plain, const std::vector<PolarList>& lists) {
    if (plain.block_sizes.size() != lists.size())
        throw validation_error("lift: block count mismatch");
    for (std::size_t i = 0; i < lists.size(); ++i)
        if ((std::size_t)plain.block_sizes[i] != lists[i].size())
            throw validation_error("lift: block " + std::to_string(i) +
                                   " size mismatch");
    PolarShuffle s;
    s.inputs = lists;
    std::vector<int> taken(lists.size(), 0);
    for (std::size_t q = 0; q < plain.assignment.size(); ++q) {
        int b = plain.assignment[q];
        int p = taken[b]++;
        s.output.push_back(lists[b][p]);
        PolarPos in{b, p}, out{kOutputList, (int)q};
        if (lists[b][p].pol == Polarity::Send)
            s.pairing.emplace_back(in, out);
        else
            s.pairing.emplace_back(out, in);
    }
    std::sort(s.pairing.begin(), s.pairing.end());
    require_valid(s);
    return s;
}

PolarShuffle wait_shuffle(const PolarList& gamma, const std::string& type,
                          const PolarList& delta, const PolarList& psi) {
    PolarList list = concat({gamma, {{type, Polarity::Send}}, delta, psi});
    std::vector<std::size_t> perm;
    for (std::size_t i = 0; i < gamma.size(); ++i) perm.push_back(i);
    for (std::size_t i = 0; i < delta.size(); ++i)
        perm.push_back(gamma.size() + 1 + i);
    perm.push_back(gamma.size());
    for (std::size_t i = 0; i < psi.size(); ++i)
        perm.push_back(gamma.size() + 1 + delta.size() + i);
    return reorder_shuffle(list, perm);
}

PolarShuffle rush_shuffle(const PolarList& gamma, const std::string& type,
                          const PolarList& delta, const PolarList& psi) {
    PolarList list = concat({gamma, delta, {{type, Polarity::Recv}}, psi});
    std::vector<std::size_t> perm;
    for (std::size_t i = 0; i < gamma.size(); ++i) perm.push_back(i);
    perm.push_back(gamma.size() + delta.size());
    for (std::size_t i = 0; i < delta.size(); ++i) perm.push_back(gamma.size() + i);
    for (std::size_t i = 0; i < psi.size(); ++i)
        perm.push_back(gamma.size() + delta.size() + 1 + i);
    return reorder_shuffle(list, perm);
}

PolarShuffle swap_same_polarity(const PolarList& gamma, const PolarItem& x,
                                const PolarItem& y, const PolarList& delta) {
    if (x.pol != y.pol)
        throw validation_error("swap_same_polarity: polarity mismatch");
    PolarList list = concat({gamma, {x, y}, delta});
    std::vector<std::size_t> perm;
    for (std::size_t i = 0; i < gamma.size(); ++i) perm.push_back(i);
    perm.push_back(gamma.size() + 1);
    perm.push_back(gamma.size());
    for (std::size_t i = 0; i < delta.size(); ++i)
        perm.push_back(gamma.size() + 2 + i);
    return reorder_shuffle(list, perm);
}

// ---------------------------------------------------------------------------
// Factorization

bool reorder_is_wait_rush(const PolarList& list,
                          const std::vector<std::size_t>& perm) {
    // An inversion where a Recv was originally before a Send is a send moved
    // sooner (or a receive moved later): not derivable.
    for (std::size_t q1 = 0; q1 < perm.size(); ++q1)
        for (std::size_t q2 = q1 + 1; q2 < perm.size(); ++q2) {
            std::size_t u = perm[q2], v = perm[q1];
            if (u < v && list[u].pol == Polarity::Recv &&
                list[v].pol == Polarity::Send)
                return false;
        }
    return true;
}

Factorization factor(const PolarShuffle& s) {
    require_valid(s);
    Flat f(s);
    auto topo = topo_positions(f, induced_graph(s, f));

    Factorization out;
    out.inputs = s.inputs;

    struct Token {
        long long major;
        int minor;
        int block;
        PolarPos origin; // input position, or output position for spawns
    };
    std::vector<Token> tokens;

    std::map<PolarPos, PolarPos> pair_of; // both directions
    for (const auto& [d, c] : s.pairing) {
        pair_of[d] = c;
        pair_of[c] = d;
    }

    int n = (int)s.inputs.size();
    std::map<PolarPos, int> link_send_of; // recv input pos -> send vertex topo
    for (const auto& [d, c] : s.pairing) {
        bool d_out = d.list == kOutputList, c_out = c.list == kOutputList;
        if (d_out && c_out) {
            out.spawn_list.push_back({s.item(d).type, d.pos, c.pos});
        } else if (!d_out && !c_out) {
            out.links.emplace_back(d, c);
            link_send_of[c] = topo[f.id(d)];
        }
    }
    int spawn_block = n;
    for (const auto& sp : out.spawn_list) {
        tokens.push_back({topo[f.id({kOutputList, sp.recv_pos})], 0, spawn_block,
                          {kOutputList, sp.recv_pos}});
        tokens.push_back({topo[f.id({kOutputList, sp.send_pos})], 0, spawn_block,
                          {kOutputList, sp.send_pos}});
        ++spawn_block;
    }
    for (int i = 0; i < n; ++i) {
        for (int p = 0; p < (int)s.inputs[i].size(); ++p) {
            PolarPos here{i, p};
            PolarPos partner = pair_of.at(here);
            Token t;
            t.block = i;
            t.origin = here;
            if (partner.list == kOutputList) {
                t.major = topo[f.id(partner)];
                t.minor = 0;
            } else if (s.item(here).pol == Polarity::Send) {
                t.major = topo[f.id(here)]; // link send anchors the pair
                t.minor = 0;
            } else {
                t.major = link_send_of.at(here);
                t.minor = 1;
            }
            tokens.push_back(t);
        }
    }
    std::stable_sort(tokens.begin(), tokens.end(),
                     [](const Token& a, const Token& b) {
                         if (a.major != b.major) return a.major < b.major;
                         return a.minor < b.minor;
                     });

    // Per-input reorders: the order in which each list's elements appear.
    out.internal_reorders.assign(n, {});
    for (const Token& t : tokens)
        if (t.block < n)
            out.internal_reorders[t.block].push_back((std::size_t)t.origin.pos);

    std::vector<int> blocks;
    for (int i = 0; i < n; ++i) blocks.push_back((int)s.inputs[i].size());
    for (std::size_t k = 0; k < out.spawn_list.size(); ++k) blocks.push_back(2);
    std::vector<int> assignment;
    for (const Token& t : tokens) assignment.push_back(t.block);
    out.pure_shuffle = make_shuffling(std::move(blocks), std::move(assignment));
    return out;
}

PolarShuffle recompose(const Factorization& fz) {
    int n = (int)fz.inputs.size();
    struct Token {
        PolarItem item;
        PolarPos origin; // input position; spawns use {kOutputList, spawn idx}
        bool spawn_send = false;
    };
    // Reordered blocks.
    std::vector<std::vector<Token>> block_tokens;
    for (int i = 0; i < n; ++i) {
        if (fz.internal_reorders[i].size() != fz.inputs[i].size())
            throw validation_error("recompose: reorder size mismatch");
        std::vector<Token> b;
        for (std::size_t old : fz.internal_reorders[i])
            b.push_back({fz.inputs[i].at(old), {i, (int)old}, false});
        block_tokens.push_back(std::move(b));
    }
    for (std::size_t k = 0; k < fz.spawn_list.size(); ++k) {
        const auto& sp = fz.spawn_list[k];
        block_tokens.push_back(
            {{{sp.type, Polarity::Recv}, {kOutputList, (int)k}, false},
             {{sp.type, Polarity::Send}, {kOutputList, (int)k}, true}});
    }
    // Interleave per the plain shuffle.
    if (fz.pure_shuffle.block_sizes.size() != block_tokens.size())
        throw validation_error("recompose: block count mismatch");
    std::vector<int> taken(block_tokens.size(), 0);
    std::vector<Token> interleaved;
    for (int b : fz.pure_shuffle.assignment) {
        if (taken[b] >= (int)block_tokens[b].size())
            throw validation_error("recompose: assignment overruns block");
        interleaved.push_back(block_tokens[b][taken[b]++]);
    }
    // Remove linked pairs; they must sit adjacently as send-then-recv.
    std::map<PolarPos, std::size_t> linked; // input position -> link index
    for (std::size_t k = 0; k < fz.links.size(); ++k) {
        linked[fz.links[k].first] = k;
        linked[fz.links[k].second] = k;
    }
    std::vector<Token> remaining;
    for (std::size_t q = 0; q < interleaved.size(); ++q) {
        const Token& t = interleaved[q];
        if (t.origin.list != kOutputList && linked.count(t.origin)) {
            if (t.item.pol != Polarity::Send)
                throw validation_error("recompose: link pair out of order");
            if (q + 1 >= interleaved.size())
                throw validation_error("recompose: link pair not adjacent");
            const Token& u = interleaved[q + 1];
            if (u.origin.list == kOutputList || !linked.count(u.origin) ||
                linked.at(u.origin) != linked.at(t.origin))
                throw validation_error("recompose: link pair not adjacent");
            ++q; // skip the recv
            continue;
        }
        remaining.push_back(t);
    }
    PolarShuffle s;
    s.inputs = fz.inputs;
    std::map<PolarPos, int> spawn_recv_out, spawn_send_out;
    std::map<PolarPos, int> through_out;
    for (std::size_t q = 0; q < remaining.size(); ++q) {
        const Token& t = remaining[q];
        s.output.push_back(t.item);
        if (t.origin.list == kOutputList)
            (t.spawn_send ? spawn_send_out : spawn_recv_out)[t.origin] = (int)q;
        else
            through_out[t.origin] = (int)q;
    }
    for (const auto& [pos, q] : through_out) {
        PolarPos out{kOutputList, q};
        if (s.item(pos).pol == Polarity::Send)
            s.pairing.emplace_back(pos, out);
        else
            s.pairing.emplace_back(out, pos);
    }
    for (std::size_t k = 0; k < fz.spawn_list.size(); ++k) {
        PolarPos key{kOutputList, (int)k};
        s.pairing.emplace_back(PolarPos{kOutputList, spawn_recv_out.at(key)},
                               PolarPos{kOutputList, spawn_send_out.at(key)});
    }
    for (const auto& [send, recv] : fz.links) s.pairing.emplace_back(send, recv);
    std::sort(s.pairing.begin(), s.pairing.end());
    require_valid(s);
    return s;
}

std::vector<PolarPos> topological_positions(const PolarShuffle& s) {
    require_valid(s);
    Flat f(s);
    auto topo = topo_positions(f, induced_graph(s, f));
    std::vector<PolarPos> order(f.count, PolarPos{0, 0});
    for (int v = 0; v < f.count; ++v) order[topo[v]] = f.pos(v);
    return order;
}

// ---------------------------------------------------------------------------
// Session encoding

namespace {

struct EncTokenizer {
    std::string src, origin;
    std::size_t pos = 0;
    int line = 1, col = 1;

    void advance() {
        if (pos < src.size()) {
            if (src[pos] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++pos;
        }
    }
    void skip_ws() {
        while (pos < src.size()) {
            if (src[pos] == '#') {
                while (pos < src.size() && src[pos] != '\n') advance();
            } else if (std::isspace((unsigned char)src[pos])) {
                advance();
            } else {
                break;
            }
        }
    }
    [[noreturn]] void fail(const std::string& msg) {
        throw parse_error(origin, line, col, msg);
    }
    char peek() {
        skip_ws();
        return pos < src.size() ? src[pos] : '\0';
    }
    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        advance();
    }
    bool accept(char c) {
        if (peek() == c) {
            advance();
            return true;
        }
        return false;
    }
    std::string ident() {
        skip_ws();
        if (pos >= src.size() ||
            !(std::isalpha((unsigned char)src[pos]) || src[pos] == '_'))
            fail("expected identifier");
        std::size_t start = pos;
        while (pos < src.size() &&
               (std::isalnum((unsigned char)src[pos]) || src[pos] == '_'))
            advance();
        return src.substr(start, pos - start);
    }
};

struct EdgeUse {
    PolarPos pos;
    bool domain;
};

void parse_polarized_vars(EncTokenizer& tz, int list, PolarList& out,
                          std::map<std::string, std::vector<EdgeUse>>& edges) {
    tz.expect('(');
    if (tz.accept(')')) return;
    while (true) {
        char mark = tz.peek();
        if (mark != '!' && mark != '?') tz.fail("expected '!' or '?'");
        tz.advance();
        std::string name = tz.ident();
        Polarity pol = mark == '!' ? Polarity::Send : Polarity::Recv;
        PolarPos p{list, (int)out.size()};
        out.push_back({kAnyType, pol});
        bool domain = list == kOutputList ? pol == Polarity::Recv
                                          : pol == Polarity::Send;
        edges[name].push_back({p, domain});
        if (tz.accept(')')) return;
        tz.expect(',');
        if (tz.accept(')')) return; // trailing comma
    }
}

} // namespace

Encoding parse_encoding(const std::string& text, const std::string& origin) {
    EncTokenizer tz{text, origin};
    Encoding e;
    std::map<std::string, std::vector<EdgeUse>> edges;
    e.name = tz.ident();
    parse_polarized_vars(tz, kOutputList, e.shuffle.output, edges);
    tz.expect('=');
    tz.expect('{');
    if (!tz.accept('}')) {
        while (true) {
            e.input_names.push_back(tz.ident());
            e.shuffle.inputs.emplace_back();
            parse_polarized_vars(tz, (int)e.shuffle.inputs.size() - 1,
                                 e.shuffle.inputs.back(), edges);
            if (tz.accept('}')) break;
            tz.expect(',');
            if (tz.accept('}')) break; // trailing comma
        }
    }
    if (tz.peek() != '\0') tz.fail("trailing content");

    for (const auto& [name, uses] : edges) {
        if (uses.size() != 2)
            throw validation_error("edge '" + name + "' used " +
                                   std::to_string(uses.size()) +
                                   " time(s); every edge must occur exactly twice");
        const EdgeUse *dom = nullptr, *cod = nullptr;
        for (const EdgeUse& u : uses) (u.domain ? dom : cod) = &u;
        if (!dom || !cod)
            throw validation_error(
                "edge '" + name + "' connects two " +
                std::string(uses[0].domain ? "domain" : "codomain") +
                " occurrences; it must pair an inner '!' or header '?' with a "
                "header '!' or inner '?'");
        e.shuffle.pairing.emplace_back(dom->pos, cod->pos);
    }
    std::sort(e.shuffle.pairing.begin(), e.shuffle.pairing.end());
    PolarReport rep = validate(e.shuffle);
    if (!rep.ok) throw validation_error(rep.message);
    return e;
}

std::string print_encoding(const Encoding& e) {
    std::map<PolarPos, std::string> edge_name;
    int counter = 0;
    for (const auto& [d, c] : e.shuffle.pairing) {
        std::string name = "e" + std::to_string(counter++);
        edge_name[d] = name;
        edge_name[c] = name;
    }
    auto list_text = [&](int list, const PolarList& l) {
        std::string out = "(";
        for (std::size_t p = 0; p < l.size(); ++p) {
            if (p) out += ", ";
            out += polarity_mark(l[p].pol);
            out += edge_name.at({list, (int)p});
        }
        return out + ")";
    };
    std::string out = e.name + list_text(kOutputList, e.shuffle.output) + " = {";
    for (std::size_t i = 0; i < e.shuffle.inputs.size(); ++i) {
        out += i ? ", " : " ";
        std::string nm = i < e.input_names.size() ? e.input_names[i]
                                                  : "f" + std::to_string(i);
        out += nm + list_text((int)i, e.shuffle.inputs[i]);
    }
    return out + " }";
}

PolarShuffle retype(const PolarShuffle& s, const std::vector<PolarList>& inputs) {
    if (inputs.size() != s.inputs.size())
        throw validation_error("retype: arity mismatch");
    PolarShuffle r = s;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].size() != s.inputs[i].size())
            throw validation_error("retype: input " + std::to_string(i) +
                                   " length mismatch");
        for (std::size_t p = 0; p < inputs[i].size(); ++p) {
            if (inputs[i][p].pol != s.inputs[i][p].pol)
                throw validation_error("retype: polarity mismatch at input " +
                                       std::to_string(i) + "[" +
                                       std::to_string(p) + "]");
            const std::string& have = s.inputs[i][p].type;
            if (have != kAnyType && have != inputs[i][p].type)
                throw validation_error("retype: type mismatch at input " +
                                       std::to_string(i) + "[" +
                                       std::to_string(p) + "]");
            r.inputs[i][p].type = inputs[i][p].type;
        }
    }
    // Propagate through the pairing to the output; output-output pairs must
    // agree between their two endpoints, so iterate until settled.
    for (int round = 0; round < 2; ++round)
        for (const auto& [d, c] : r.pairing) {
            const std::string& dt = r.item(d).type;
            const std::string& ct = r.item(c).type;
            if (dt == kAnyType && ct == kAnyType) continue;
            const std::string t = dt == kAnyType ? ct : dt;
            auto set = [&](PolarPos p) {
                if (p.list == kOutputList)
                    r.output[p.pos].type = t;
                else
                    r.inputs[p.list][p.pos].type = t;
            };
            if (dt == kAnyType)
                set(d);
            else if (ct == kAnyType)
                set(c);
            else if (dt != ct)
                throw validation_error("retype: pairing joins '" + dt +
                                       "' with '" + ct + "'");
        }
    for (const auto& item : r.output)
        if (item.type == kAnyType)
            throw validation_error("retype: output type left undetermined");
    require_valid(r);
    return r;
}

} // namespace sd
