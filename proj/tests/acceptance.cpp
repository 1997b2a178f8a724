// Acceptance suite: every checked claim at its pinned tolerance, one
// pass/fail line per criterion. Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "generators.hpp"
#include "sd/demos.hpp"
#include "sd/donotation.hpp"
#include "sd/session.hpp"
#include "sd/shuffle.hpp"
#include "sd/stochastic.hpp"

using namespace sd;

namespace {

std::string g_data;
int g_failures = 0;

void criterion(int n, const std::string& what, const std::function<bool()>& fn) {
    bool ok = false;
    std::string note;
    try {
        ok = fn();
    } catch (const std::exception& e) {
        note = std::string(" (") + e.what() + ")";
    }
    if (!ok) ++g_failures;
    std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << n << ": " << what
              << note << "\n";
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// All type-preserving bijections between the domain and codomain positions of
// an instance, reported through a callback; the brute-force side of the
// coherence check.
void for_each_type_preserving_bijection(
    const std::vector<PolarList>& inputs, const PolarList& output,
    const std::function<void(const PolarShuffle&)>& visit) {
    PolarShuffle base;
    base.inputs = inputs;
    base.output = output;
    std::map<std::string, std::vector<PolarPos>> dom, cod;
    for (int i = 0; i < (int)inputs.size(); ++i)
        for (int p = 0; p < (int)inputs[i].size(); ++p)
            (is_domain(base, {i, p}) ? dom : cod)[base.item({i, p}).type]
                .push_back({i, p});
    for (int p = 0; p < (int)output.size(); ++p)
        (is_domain(base, {kOutputList, p}) ? dom
                                           : cod)[base.item({kOutputList, p}).type]
            .push_back({kOutputList, p});
    for (const auto& [type, ps] : dom)
        if (cod[type].size() != ps.size()) return; // no bijection at all
    for (const auto& [type, ps] : cod)
        if (dom[type].size() != ps.size()) return;

    std::vector<std::string> types;
    for (const auto& [type, ps] : dom) types.push_back(type);
    std::vector<std::vector<std::size_t>> perms(types.size());
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (k == types.size()) {
            PolarShuffle s = base;
            for (std::size_t t = 0; t < types.size(); ++t) {
                const auto& ds = dom[types[t]];
                const auto& cs = cod[types[t]];
                for (std::size_t i = 0; i < ds.size(); ++i)
                    s.pairing.emplace_back(ds[i], cs[perms[t][i]]);
            }
            std::sort(s.pairing.begin(), s.pairing.end());
            visit(s);
            return;
        }
        std::vector<std::size_t> perm(dom[types[k]].size());
        for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        do {
            perms[k] = perm;
            rec(k + 1);
        } while (std::next_permutation(perm.begin(), perm.end()));
    };
    rec(0);
}

} // namespace

int main(int argc, char** argv) {
    g_data = argc > 1 ? argv[1] : "data";

    criterion(1, "shuffle counting: count(1,2,3) = 60 = |enumerate(1,2,3)|", [] {
        return shuffle_count({1, 2, 3}) == 60 &&
               enumerate_shufflings({1, 2, 3}).size() == 60;
    });

    criterion(2, "insertion recurrence equals (m+n)!/m! for all n+m <= 12", [] {
        auto fact = [](int k) {
            BigInt f = 1;
            for (int i = 2; i <= k; ++i) f *= i;
            return f;
        };
        for (int n = 0; n <= 12; ++n)
            for (int m = 0; n + m <= 12; ++m)
                if (insertion_count(n, m) != fact(n + m) / fact(m)) return false;
        return true;
    });

    criterion(3, "coherence: 500 distinctly typed instances have at most one "
                 "valid bijection and infer finds exactly it", [] {
        sdtest::Rng rng(1003);
        for (int it = 0; it < 500; ++it) {
            auto inst = sdtest::random_distinct_instance(rng, 8);
            int valid = 0;
            PolarShuffle found;
            for_each_type_preserving_bijection(
                inst.inputs, inst.output, [&](const PolarShuffle& s) {
                    if (validate(s).ok) {
                        ++valid;
                        found = s;
                    }
                });
            if (valid > 1) return false;
            auto inferred = infer(inst.inputs, inst.output);
            if (inferred.has_value() != (valid == 1)) return false;
            if (inferred) {
                PolarShuffle got = *inferred;
                std::sort(got.pairing.begin(), got.pairing.end());
                if (!(got == found)) return false;
            }
        }
        return true;
    });

    criterion(4, "wait and rush validate; send-sooner and receive-later are "
                 "rejected with a witness cycle", [] {
        PolarList gamma = {{"A", Polarity::Recv}};
        PolarList delta = {{"B", Polarity::Send}, {"C", Polarity::Recv}};
        PolarList psi = {{"D", Polarity::Send}};
        if (!validate(wait_shuffle(gamma, "X", delta, psi)).ok) return false;
        if (!validate(rush_shuffle(gamma, "X", delta, psi)).ok) return false;
        // The same movements in the forbidden direction, as type-forced
        // bijections.
        auto moved = [&](Polarity pol, bool earlier) {
            PolarItem x{"X", pol};
            PolarList from = gamma;
            PolarList to = gamma;
            if (earlier) {
                from.insert(from.end(), delta.begin(), delta.end());
                from.push_back(x);
                to.push_back(x);
                to.insert(to.end(), delta.begin(), delta.end());
            } else {
                from.push_back(x);
                from.insert(from.end(), delta.begin(), delta.end());
                to.insert(to.end(), delta.begin(), delta.end());
                to.push_back(x);
            }
            from.insert(from.end(), psi.begin(), psi.end());
            to.insert(to.end(), psi.begin(), psi.end());
            return infer({from}, to);
        };
        if (moved(Polarity::Send, true)) return false;  // cannot send sooner
        if (moved(Polarity::Recv, false)) return false; // cannot receive later
        if (!moved(Polarity::Send, false)) return false; // can send later
        if (!moved(Polarity::Recv, true)) return false;  // can receive sooner
        // The rejection carries a concrete cycle.
        PolarShuffle bad;
        bad.inputs = {{{"Y", Polarity::Recv}, {"X", Polarity::Send}}};
        bad.output = {{"X", Polarity::Send}, {"Y", Polarity::Recv}};
        bad.pairing = {{{0, 1}, {kOutputList, 0}}, {{kOutputList, 1}, {0, 0}}};
        PolarReport r = validate(bad);
        return !r.ok && r.cycle.size() >= 2;
    });

    criterion(5, "factorization roundtrip on 500 random shuffles (<= 10 "
                 "elements)", [] {
        sdtest::Rng rng(1005);
        int done = 0;
        while (done < 500) {
            PolarShuffle s = sdtest::random_polar_shuffle(rng);
            if (s.total_elements() > 10) continue;
            Factorization f = factor(s);
            PolarShuffle back = recompose(f);
            std::sort(back.pairing.begin(), back.pairing.end());
            PolarShuffle want = s;
            std::sort(want.pairing.begin(), want.pairing.end());
            if (!(back == want)) return false;
            ++done;
        }
        return true;
    });

    criterion(6, "validating a 100000-element identity polar list takes <= 1s",
              [] {
        PolarList big;
        for (int i = 0; i < 100000; ++i)
            big.push_back({"X", i % 2 ? Polarity::Send : Polarity::Recv});
        PolarShuffle s = identity_polar(big);
        auto start = std::chrono::steady_clock::now();
        bool ok = validate(s).ok;
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
        return ok && ms <= 1000;
    });

    criterion(7, "do-notation: both worked programs elaborate; 200 random "
                 "independent-statement swaps preserve the diagram", [] {
        auto mascarpone = share(load_polygraph(g_data + "/mascarpone.json"));
        Diagram crema =
            elaborate(check(parse_do(slurp(g_data + "/crema.do")), mascarpone));
        if (crema.nodes().size() != 6) return false;
        auto xorpoly = share(load_polygraph(g_data + "/xor_swap.json"));
        Diagram xr = elaborate(
            check(parse_do(slurp(g_data + "/xor_exchange.do")), xorpoly));
        if (xr.nodes().size() != 3) return false;

        sdtest::Rng rng(1007);
        auto poly = sdtest::abc_polygraph();
        int done = 0;
        while (done < 200) {
            DoProgram p = sdtest::random_do_program(rng);
            std::vector<std::size_t> sites;
            for (std::size_t i = 0; i + 1 < p.statements.size(); ++i)
                if (independent_statements(p.statements[i], p.statements[i + 1]))
                    sites.push_back(i);
            if (sites.empty()) continue;
            std::size_t i = sites[sdtest::pick(rng, 0, (int)sites.size() - 1)];
            DoProgram q = p;
            std::swap(q.statements[i], q.statements[i + 1]);
            if (!is_equal(elaborate(check(p, poly)), elaborate(check(q, poly))))
                return false;
            ++done;
        }
        return true;
    });

    criterion(8, "xor exchange equals the swap over Z2^n, n in {1,2,3}, "
                 "entrywise <= 1e-12", [] {
        return demo_xor(g_data, 1e-12).pass;
    });

    criterion(9, "one-time pad equals noise (x) identity over Z2 and Z2^2 "
                 "(<= 1e-12); the sabotaged key fails", [] {
        return demo_otp(g_data, 1e-12).pass;
    });

    criterion(10, "newcomb: evidential EU(one-box)=1000 and EU(two-box)=1; "
                  "causal gap is exactly 1 for every p (<= 1e-9)", [] {
        return demo_newcomb(g_data, 1e-9).pass;
    });

    criterion(11, "race conditions: interleavings produce exactly f, g, f;g "
                  "and g;f on a 3-element store", [] {
        return demo_race(g_data, 1e-12).pass;
    });

    criterion(12, "comb/session roundtrip on 200 random sessions (<= 6 events)",
              [] {
        sdtest::Rng rng(1012);
        for (int i = 0; i < 200; ++i) {
            Session s = sdtest::random_session(rng, 6);
            Comb c = to_comb(s);
            if (!(c.holes == events(s))) return false;
            if (!session_equal(from_comb(c), s)) return false;
        }
        return true;
    });

    criterion(13, "glue respects shuffle composition on 100 random instances",
              [] {
        sdtest::Rng rng(1013);
        int done = 0;
        while (done < 100) {
            PolarShuffle s = sdtest::random_polar_shuffle(rng, {}, 3);
            if (s.inputs.empty()) continue;
            PolarList extra = sdtest::random_polar_list(rng, 3);
            std::vector<PolarList> outer_inputs = {s.output, extra};
            PolarShuffle t = sdtest::random_polar_shuffle(rng, outer_inputs, 2);
            std::vector<Session> inner;
            for (const auto& ev : s.inputs)
                inner.push_back(sdtest::random_session_with_events(rng, ev));
            Session extra_part = sdtest::random_session_with_events(rng, extra);
            Session lhs = glue({glue(inner, s), extra_part}, t);
            std::vector<Session> all = inner;
            all.push_back(extra_part);
            Session rhs = glue(all, compose(s, 0, t));
            if (!session_equal(lhs, rhs)) return false;
            ++done;
        }
        return true;
    });

    criterion(14, "process laws: associativity, unitality, interchange and "
                  "symmetry involution up to diagram equality", [] {
        sdtest::Rng rng(1014);
        auto base = sdtest::abc_polygraph();
        auto ext = sdtest::abc_session_polygraph();
        auto rand_pure = [&](const std::vector<std::string>& dom) {
            DiagramBuilder b(base);
            std::vector<WireId> live;
            for (const auto& t : dom) live.push_back(b.add_input(t));
            std::vector<WireId> outs;
            for (WireId w : live) {
                if (b.type_of(w) == "A" && sdtest::chance(rng, 0.5))
                    outs.push_back(b.apply("a2b", {w})[0]);
                else if (sdtest::chance(rng, 0.3))
                    b.apply("use_" + b.type_of(w), {w});
                else
                    outs.push_back(w);
            }
            if (sdtest::chance(rng, 0.5)) outs.push_back(b.apply("mk_C", {})[0]);
            return b.finish(outs);
        };
        for (int i = 0; i < 40; ++i) {
            Diagram f = rand_pure({"A", "B"});
            Diagram g = rand_pure(f.cod());
            Diagram h = rand_pure(g.cod());
            Session sf = in_proc(f, ext), sg = in_proc(g, ext),
                    sh = in_proc(h, ext);
            if (!session_equal(proc_compose(proc_compose(sf, sg), sh),
                               proc_compose(sf, proc_compose(sg, sh))))
                return false;
            if (!session_equal(proc_compose(sf, proc_id(ext, f.cod())), sf))
                return false;
            if (!session_equal(proc_compose(proc_id(ext, f.dom()), sf), sf))
                return false;
            if (!session_equal(proc_compose(sf, sg), in_proc(compose(f, g), ext)))
                return false;
        }
        for (int i = 0; i < 25; ++i) {
            Diagram a = rand_pure({"A"});
            Diagram b = rand_pure({"B"});
            Diagram c = rand_pure(a.cod());
            Diagram d = rand_pure(b.cod());
            Session sa = in_proc(a, ext), sb = in_proc(b, ext),
                    sc = in_proc(c, ext), sd = in_proc(d, ext);
            if (!session_equal(
                    proc_compose(proc_tensor(sa, sb), proc_tensor(sc, sd)),
                    proc_tensor(proc_compose(sa, sc), proc_compose(sb, sd))))
                return false;
        }
        Session sym = proc_symmetry(ext, {"A"}, {"B"});
        Session symback = proc_symmetry(ext, {"B"}, {"A"});
        if (!session_equal(proc_compose(sym, symback), proc_id(ext, {"A", "B"})))
            return false;
        Diagram f0 = from_generator(base, "a2b");
        Diagram g0 = from_generator(base, "b2c");
        Session nat_lhs =
            proc_compose(proc_tensor(in_proc(f0, ext), in_proc(g0, ext)),
                         proc_symmetry(ext, {"B"}, {"C"}));
        Session nat_rhs =
            proc_compose(proc_symmetry(ext, {"A"}, {"B"}),
                         proc_tensor(in_proc(g0, ext), in_proc(f0, ext)));
        return session_equal(nat_lhs, nat_rhs);
    });

    criterion(15, "backend laws: subnormalization closure, Dirac units and "
                  "Frobenius axioms at 1e-12; synthetic Bayes at 1e-9", [] {
        sdtest::Rng rng(1015);
        for (int i = 0; i < 100; ++i) {
            Channel a = sdtest::random_channel(rng, {3}, {2}, false);
            Channel b = sdtest::random_channel(rng, {2}, {4}, false);
            kleisli_compose(a, b); // construction revalidates subnormalization
            tensor(a, b);
            if (!channel_equal(kleisli_compose(identity_channel({3}), a), a,
                               1e-12))
                return false;
            if (!channel_equal(kleisli_compose(a, identity_channel({2})), a,
                               1e-12))
                return false;
        }
        for (int n : {1, 2, 3, 5}) {
            Channel id = identity_channel({n});
            Channel cp = copy_channel({n});
            Channel cm = compare_channel({n});
            Channel swap = function_channel({n, n}, {n, n}, [n](std::size_t i) {
                return (i % (std::size_t)n) * n + i / (std::size_t)n;
            });
            if (!channel_equal(kleisli_compose(cp, tensor(cp, id)),
                               kleisli_compose(cp, tensor(id, cp)), 1e-12))
                return false;
            if (!channel_equal(kleisli_compose(cp, swap), cp, 1e-12))
                return false;
            if (!channel_equal(kleisli_compose(tensor(cm, id), cm),
                               kleisli_compose(tensor(id, cm), cm), 1e-12))
                return false;
            if (!channel_equal(kleisli_compose(swap, cm), cm, 1e-12))
                return false;
            if (!channel_equal(
                    kleisli_compose(cp, tensor(id, discard_channel({n}))), id,
                    1e-12))
                return false;
            Channel frob = kleisli_compose(cm, cp);
            if (!channel_equal(kleisli_compose(tensor(id, cp), tensor(cm, id)),
                               frob, 1e-12))
                return false;
            if (!channel_equal(kleisli_compose(cp, cm), id, 1e-12))
                return false;
        }
        for (int i = 0; i < 100; ++i) {
            int nx = sdtest::pick(rng, 2, 4), ny = sdtest::pick(rng, 2, 4);
            Channel prior = sdtest::random_channel(rng, {}, {nx}, true);
            Channel g = sdtest::random_channel(rng, {nx}, {ny}, true);
            Channel push = kleisli_compose(prior, g);
            int obs = 0;
            for (int y = 0; y < ny; ++y)
                if (push.at(0, y) > push.at(0, obs)) obs = y;
            std::vector<double> acc((std::size_t)ny * ny, 0.0);
            acc[(std::size_t)obs * ny + obs] = 1.0;
            Channel observe = Channel::make({ny}, {ny}, std::move(acc));
            Channel lhs = kleisli_compose(
                kleisli_compose(prior, copy_channel({nx})),
                kleisli_compose(
                    tensor(g, identity_channel({nx})),
                    tensor(kleisli_compose(observe, discard_channel({ny})),
                           identity_channel({nx}))));
            Channel rhs = kleisli_compose(dirac_state(ny, obs),
                                          bayes_invert(g, prior));
            if (!channel_equal_up_to_scalar(lhs, rhs, 1e-9)) return false;
        }
        return true;
    });

    if (g_failures == 0) {
        std::cout << "all 15 criteria passed\n";
        return 0;
    }
    std::cout << g_failures << " criteria FAILED\n";
    return 1;
}
