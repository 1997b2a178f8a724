#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sd/demos.hpp"
#include "sd/donotation.hpp"
#include "sd/session.hpp"
#include "sd/shuffle.hpp"
#include "sd/stochastic.hpp"

using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw sd::error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<int> to_blocks(const std::vector<int>& sizes) {
    for (int b : sizes)
        if (b < 0) throw sd::error("block sizes must be nonnegative");
    return sizes;
}

sd::PolygraphRef load_poly(const std::string& path) {
    return sd::share(sd::load_polygraph(path));
}

void write_or_print(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
    } else {
        std::ofstream out(out_path);
        if (!out) throw sd::error("cannot open '" + out_path + "' for writing");
        out << content;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"string diagrams, polar shuffles and session gluing"};
    app.require_subcommand(1);

    int exit_code = 0;

    // ---- shuffle ----------------------------------------------------------
    auto* shuffle = app.add_subcommand("shuffle", "plain shufflings");
    shuffle->require_subcommand(1);
    {
        static std::vector<int> blocks;
        auto* count = shuffle->add_subcommand("count", "number of shufflings");
        count->add_option("blocks", blocks, "block sizes");
        count->callback([&]() {
            std::cout << sd::shuffle_count(to_blocks(blocks)) << "\n";
        });
        static std::vector<int> eblocks;
        auto* enumerate =
            shuffle->add_subcommand("enumerate", "list all shufflings");
        enumerate->add_option("blocks", eblocks, "block sizes");
        enumerate->callback([&]() {
            for (const auto& s : sd::enumerate_shufflings(to_blocks(eblocks))) {
                for (std::size_t i = 0; i < s.assignment.size(); ++i)
                    std::cout << (i ? " " : "") << s.assignment[i];
                std::cout << "\n";
            }
        });
    }

    // ---- polar ------------------------------------------------------------
    auto* polar = app.add_subcommand("polar", "polar shuffles");
    polar->require_subcommand(1);
    {
        static std::string vfile;
        auto* validate = polar->add_subcommand("validate", "check a .msg file");
        validate->add_option("file", vfile, "session encoding")->required();
        validate->callback([&]() {
            sd::Encoding e = sd::parse_encoding(slurp(vfile), vfile);
            std::cout << "ok: " << e.name << " with "
                      << e.shuffle.inputs.size() << " inner lists, "
                      << e.shuffle.pairing.size() << " edges\n";
        });

        static std::string cs, ct;
        static std::size_t cat = 0;
        auto* comp = polar->add_subcommand("compose", "substitute s into t");
        comp->add_option("s", cs, ".msg of the inner shuffle")->required();
        comp->add_option("t", ct, ".msg of the outer shuffle")->required();
        comp->add_option("--at", cat, "input position of t")->required();
        comp->callback([&]() {
            sd::Encoding es = sd::parse_encoding(slurp(cs), cs);
            sd::Encoding et = sd::parse_encoding(slurp(ct), ct);
            sd::Encoding out;
            out.name = et.name;
            out.shuffle = sd::compose(es.shuffle, cat, et.shuffle);
            std::cout << sd::print_encoding(out) << "\n";
        });

        static std::vector<std::string> iin;
        static std::string iout;
        auto* infer = polar->add_subcommand(
            "infer", "unique shuffle between distinctly typed lists");
        infer->add_option("--in", iin, "input polar list, e.g. '!A ?B'");
        infer->add_option("--out", iout, "output polar list")->required();
        infer->callback([&]() {
            std::vector<sd::PolarList> inputs;
            for (const auto& t : iin) inputs.push_back(sd::parse_polar_list(t));
            auto s = sd::infer(inputs, sd::parse_polar_list(iout));
            if (!s) {
                std::cout << "none: the type-forced pairing is cyclic\n";
                exit_code = 1;
                return;
            }
            sd::Encoding e;
            e.name = "inferred";
            e.shuffle = *s;
            std::cout << sd::print_encoding(e) << "\n";
        });

        static std::string ffile;
        auto* factor = polar->add_subcommand("factor", "factor a .msg shuffle");
        factor->add_option("file", ffile, "session encoding")->required();
        factor->callback([&]() {
            sd::Encoding e = sd::parse_encoding(slurp(ffile), ffile);
            sd::Factorization fz = sd::factor(e.shuffle);
            for (std::size_t i = 0; i < fz.internal_reorders.size(); ++i) {
                std::cout << "reorder input " << i << ":";
                for (std::size_t p : fz.internal_reorders[i])
                    std::cout << " " << p;
                std::cout << "\n";
            }
            for (const auto& sp : fz.spawn_list)
                std::cout << "spawn " << sp.type << " at output ("
                          << sp.recv_pos << ", " << sp.send_pos << ")\n";
            std::cout << "plain shuffle:";
            for (int b : fz.pure_shuffle.assignment) std::cout << " " << b;
            std::cout << "\nlinks:";
            for (const auto& [snd, rcv] : fz.links)
                std::cout << " (" << snd.list << "[" << snd.pos << "] -> "
                          << rcv.list << "[" << rcv.pos << "])";
            std::cout << "\nroundtrip: "
                      << (sd::recompose(fz) == e.shuffle ? "ok" : "MISMATCH")
                      << "\n";
        });
    }

    // ---- do ----------------------------------------------------------------
    auto* dosub = app.add_subcommand("do", "do-notation programs");
    dosub->require_subcommand(1);
    static std::string do_poly;
    {
        static std::string cfile;
        auto* chk = dosub->add_subcommand("check", "type and linearity check");
        chk->add_option("file", cfile, ".do program")->required();
        chk->add_option("--polygraph", do_poly, "signature")->required();
        chk->callback([&]() {
            auto prog = sd::parse_do(slurp(cfile), cfile);
            auto typed = sd::check(prog, load_poly(do_poly));
            std::cout << "ok: " << prog.name << " : (";
            for (std::size_t i = 0; i < typed.param_types.size(); ++i)
                std::cout << (i ? ", " : "") << typed.param_types[i];
            std::cout << ") -> (";
            for (std::size_t i = 0; i < typed.return_types.size(); ++i)
                std::cout << (i ? ", " : "") << typed.return_types[i];
            std::cout << ")\n";
        });

        static std::string efile, eout;
        auto* ela = dosub->add_subcommand("elaborate", "emit the diagram");
        ela->add_option("file", efile, ".do program")->required();
        ela->add_option("--polygraph", do_poly, "signature")->required();
        ela->add_option("--out", eout, "output diagram path");
        ela->callback([&]() {
            auto typed =
                sd::check(sd::parse_do(slurp(efile), efile), load_poly(do_poly));
            write_or_print(eout, sd::diagram_to_json(sd::elaborate(typed)));
        });
    }

    // ---- session ------------------------------------------------------------
    auto* sess = app.add_subcommand("session", "sessions over a base signature");
    sess->require_subcommand(1);
    static std::string sess_poly;
    {
        static std::string evfile;
        auto* ev = sess->add_subcommand("events", "print the event list");
        ev->add_option("file", evfile, ".sdo program")->required();
        ev->add_option("--polygraph", sess_poly, "base signature")->required();
        ev->callback([&]() {
            auto base = load_poly(sess_poly);
            sd::Session s =
                sd::parse_session_program(slurp(evfile), base, evfile);
            std::cout << sd::polar_list_to_string(sd::events(s)) << "\n";
        });

        static std::string gshuffle, gout;
        static std::vector<std::string> gparts;
        auto* gl = sess->add_subcommand("glue", "glue sessions along a shuffle");
        gl->add_option("--shuffle", gshuffle, ".msg encoding")->required();
        gl->add_option("--polygraph", sess_poly, "base signature")->required();
        gl->add_option("--out", gout, "output diagram path");
        gl->add_option("parts", gparts, ".sdo programs in encoding order")
            ->required();
        gl->callback([&]() {
            auto base = load_poly(sess_poly);
            std::vector<sd::Session> parts;
            for (const auto& p : gparts)
                parts.push_back(sd::parse_session_program(slurp(p), base, p));
            sd::Encoding enc = sd::parse_encoding(slurp(gshuffle), gshuffle);
            std::vector<sd::PolarList> evs;
            for (const auto& p : parts) evs.push_back(sd::events(p));
            sd::Session whole = sd::glue(parts, sd::retype(enc.shuffle, evs));
            std::cout << "events: "
                      << sd::polar_list_to_string(sd::events(whole)) << "\n";
            if (!gout.empty()) sd::save_diagram(whole.diagram, gout);
        });

        static std::string qa, qb;
        auto* eq = sess->add_subcommand("eq", "compare two session programs");
        eq->add_option("a", qa, ".sdo program")->required();
        eq->add_option("b", qb, ".sdo program")->required();
        eq->add_option("--polygraph", sess_poly, "base signature")->required();
        eq->callback([&]() {
            auto base = load_poly(sess_poly);
            sd::Session a = sd::parse_session_program(slurp(qa), base, qa);
            sd::Session b = sd::parse_session_program(slurp(qb), base, qb);
            bool equal = sd::session_equal(a, b);
            std::cout << (equal ? "equal\n" : "different\n");
            if (!equal) exit_code = 1;
        });
    }

    // ---- eval ---------------------------------------------------------------
    {
        static std::string poly_path, interp_path, diagram_path;
        auto* ev = app.add_subcommand("eval", "evaluate a diagram as a channel");
        ev->add_option("--polygraph", poly_path, "signature")->required();
        ev->add_option("--interp", interp_path, "interpretation")->required();
        ev->add_option("--diagram", diagram_path, "diagram JSON")->required();
        ev->callback([&]() {
            auto poly = load_poly(poly_path);
            auto interp = sd::load_interpretation(interp_path, poly);
            auto d = sd::load_diagram(diagram_path, poly);
            std::cout << sd::channel_to_string(sd::evaluate(d, interp));
        });
    }

    // ---- eq -----------------------------------------------------------------
    {
        static std::string poly_path, da, db, dot_path;
        auto* eq = app.add_subcommand("eq", "diagram equality up to isomorphism");
        eq->add_option("a", da, "diagram JSON")->required();
        eq->add_option("b", db, "diagram JSON")->required();
        eq->add_option("--polygraph", poly_path, "signature")->required();
        eq->add_option("--dot", dot_path, "write the first diagram as DOT");
        eq->callback([&]() {
            auto poly = load_poly(poly_path);
            sd::Diagram a = sd::load_diagram(da, poly);
            sd::Diagram b = sd::load_diagram(db, poly);
            if (!dot_path.empty())
                write_or_print(dot_path, sd::diagram_to_dot(a));
            bool equal = sd::is_equal(a, b);
            std::cout << (equal ? "equal\n" : "different\n");
            if (!equal) exit_code = 1;
        });
    }

    // ---- demo ---------------------------------------------------------------
    {
        static std::string data_dir = "data";
        static double eps = 0;
        static bool as_json = false;
        static std::uint64_t seed = 0;
        auto* demo = app.add_subcommand("demo", "reproducible case studies");
        demo->require_subcommand(1);
        demo->add_option("--data", data_dir, "directory with the demo files");
        demo->add_option("--eps", eps, "override the comparison tolerance");
        demo->add_option("--seed", seed, "seed recorded in the report");
        demo->add_flag("--json", as_json, "machine-readable report");
        auto run = [&](const std::string& name) {
            sd::DemoReport r;
            if (name == "otp")
                r = sd::demo_otp(data_dir, eps > 0 ? eps : 1e-12);
            else if (name == "newcomb")
                r = sd::demo_newcomb(data_dir, eps > 0 ? eps : 1e-9);
            else if (name == "xor")
                r = sd::demo_xor(data_dir, eps > 0 ? eps : 1e-12);
            else if (name == "race")
                r = sd::demo_race(data_dir, eps > 0 ? eps : 1e-12);
            else
                r = sd::demo_mascarpone(data_dir);
            if (as_json) {
                r.details["demo"] = name;
                r.details["seed"] = seed;
                std::cout << r.details.dump(2) << "\n";
            } else {
                std::cout << r.text;
                std::cout << (r.pass ? "PASS" : "FAIL") << "\n";
            }
            if (!r.pass) exit_code = 1;
        };
        for (const char* name : {"otp", "newcomb", "xor", "race", "mascarpone"}) {
            auto* sub = demo->add_subcommand(name);
            sub->fallthrough();
            sub->callback([&, name]() { run(name); });
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const sd::parse_error& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}
