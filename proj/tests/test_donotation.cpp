#include <doctest.h>

#include <fstream>
#include <sstream>

#include "generators.hpp"
#include "sd/donotation.hpp"

using namespace sd;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PolygraphRef mascarpone() {
    static PolygraphRef p =
        share(load_polygraph(std::string(SD_DATA_DIR) + "/mascarpone.json"));
    return p;
}

PolygraphRef xorpoly() {
    static PolygraphRef p =
        share(load_polygraph(std::string(SD_DATA_DIR) + "/xor_swap.json"));
    return p;
}

// The recipe as printed, shells dropped on the floor.
const char* kRecipeAsPrinted = R"(
cremaDiMascarpone(egg1, egg2, sugar, mascarpone):
  crack(egg1) -> (white1, shell1, yolk1)
  crack(egg2) -> (white2, shell2, yolk2)
  whisk(white1, white2) -> whiskedWhites
  beat(yolk1, yolk2, sugar) -> paste
  stir(paste, mascarpone) -> thickPaste
  fold(whiskedWhites, thickPaste) -> crema
  return(crema)
)";

} // namespace

TEST_CASE("parsing the recipe") {
    DoProgram p = parse_do(kRecipeAsPrinted);
    CHECK(p.name == "cremaDiMascarpone");
    CHECK(p.params.size() == 4);
    CHECK(p.statements.size() == 6);
    CHECK(p.returns.size() == 1);
    CHECK(p.statements[0].generator == "crack");
    CHECK(p.statements[2].binders == std::vector<std::string>{"whiskedWhites"});
}

TEST_CASE("parsing the xor exchange") {
    DoProgram p =
        parse_do(slurp(std::string(SD_DATA_DIR) + "/xor_exchange.do"));
    CHECK(p.name == "xorExchange");
    CHECK(p.params.size() == 2);
    CHECK(p.statements.size() == 3);
    CHECK(p.returns.size() == 2);
}

TEST_CASE("empty program and unicode arrows") {
    DoProgram p = parse_do("f(): return()");
    CHECK(p.params.empty());
    CHECK(p.statements.empty());
    CHECK(p.returns.empty());
    DoProgram q = parse_do("g(x):\n  e(x) \xe2\x86\x92 y\n  return(y)");
    CHECK(q.statements.size() == 1);
    CHECK(q.statements[0].binders == std::vector<std::string>{"y"});
}

TEST_CASE("syntax errors carry a position") {
    try {
        parse_do("f(x):\n  crack(x) ->\n  return()", "prog.do");
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(e.origin == "prog.do");
        CHECK(e.line >= 2);
    }
}

TEST_CASE("checking the recipe") {
    SUBCASE("the shipped file is linear and well-typed") {
        DoProgram p =
            parse_do(slurp(std::string(SD_DATA_DIR) + "/crema.do"));
        TypedProgram t = check(p, mascarpone());
        CHECK(t.param_types ==
              std::vector<std::string>{"egg", "egg", "sugar", "mascarpone"});
        CHECK(t.return_types ==
              std::vector<std::string>{"crema", "shell", "shell"});
    }
    SUBCASE("as printed, the shells violate linearity") {
        CHECK_THROWS_WITH_AS(check(parse_do(kRecipeAsPrinted), mascarpone()),
                             doctest::Contains("shell"), validation_error);
    }
    SUBCASE("reusing a variable is reported by name") {
        const char* twice = R"(
            p(egg1):
              crack(egg1) -> (w, s, y)
              whisk(w, w) -> ww
              return(ww, s, y)
        )";
        CHECK_THROWS_WITH_AS(check(parse_do(twice), mascarpone()),
                             doctest::Contains("'w'"), validation_error);
    }
    SUBCASE("unknown generators are reported") {
        CHECK_THROWS_WITH_AS(
            check(parse_do("p(x): zap(x) -> y\n return(y)"), mascarpone()),
            doctest::Contains("zap"), validation_error);
    }
    SUBCASE("unbound variables are reported") {
        CHECK_THROWS_WITH_AS(
            check(parse_do("p(): whisk(a, b) -> w\n return(w)"), mascarpone()),
            doctest::Contains("'a'"), validation_error);
    }
    SUBCASE("arity mismatches are reported") {
        CHECK_THROWS_AS(
            check(parse_do("p(e): crack(e) -> (w, s)\n return(w, s)"),
                  mascarpone()),
            validation_error);
    }
    SUBCASE("parameters consumed only by return need an annotation") {
        CHECK_THROWS_WITH_AS(check(parse_do("p(x): return(x)"), mascarpone()),
                             doctest::Contains("infer"), validation_error);
        TypedProgram t =
            check(parse_do("p(x: egg): return(x)"), mascarpone());
        CHECK(t.param_types == std::vector<std::string>{"egg"});
    }
}

TEST_CASE("elaboration of the recipe") {
    DoProgram p = parse_do(slurp(std::string(SD_DATA_DIR) + "/crema.do"));
    Diagram d = elaborate(check(p, mascarpone()));
    CHECK(d.nodes().size() == 6);
    CHECK(d.dom() ==
          std::vector<std::string>{"egg", "egg", "sugar", "mascarpone"});
    CHECK(d.cod() == std::vector<std::string>{"crema", "shell", "shell"});

    // Independent adjacent statements commute.
    DoProgram swapped = p;
    std::swap(swapped.statements[2], swapped.statements[3]);
    REQUIRE(independent_statements(p.statements[2], p.statements[3]));
    CHECK(is_equal(d, elaborate(check(swapped, mascarpone()))));
}

TEST_CASE("rebinding in the xor exchange is SSA-renamed") {
    DoProgram p =
        parse_do(slurp(std::string(SD_DATA_DIR) + "/xor_exchange.do"));
    Diagram d = elaborate(check(p, xorpoly()));
    CHECK(d.nodes().size() == 3);
    CHECK(d.dom() == std::vector<std::string>{"X", "X"});
    CHECK(d.cod() == std::vector<std::string>{"X", "X"});
}

TEST_CASE("a permuted return elaborates to the symmetry") {
    auto poly = sdtest::abc_polygraph();
    DoProgram p = parse_do("p(x: A, y: B): return(y, x)");
    CHECK(is_equal(elaborate(check(p, poly)), symmetry(poly, {"A"}, {"B"})));
}

TEST_CASE("exchanging two adjacent parameters pre-composes a symmetry") {
    auto poly = sdtest::abc_polygraph();
    const char* src = R"(
        p(x: A, y: B):
          a2b(x) -> x2
          b2c(y) -> y2
          return(x2, y2)
    )";
    const char* swapped_src = R"(
        p(y: B, x: A):
          a2b(x) -> x2
          b2c(y) -> y2
          return(x2, y2)
    )";
    Diagram orig = elaborate(check(parse_do(src), poly));
    Diagram swapped = elaborate(check(parse_do(swapped_src), poly));
    CHECK(is_equal(swapped, compose(symmetry(poly, {"B"}, {"A"}), orig)));
}

TEST_CASE("insertion counting") {
    // Oracle: enumerate the insertions of n labelled items into a list of m
    // slots, one item at a time, first item choosing among m+1 gaps.
    struct Enum {
        static long count(int n, int m) {
            if (n == 0) return 1;
            long total = 0;
            for (int gap = 0; gap <= m; ++gap) total += count(n - 1, m + 1);
            return total;
        }
    };
    CHECK(insertion_count(0, 5) == 1);
    CHECK(insertion_count(1, 1) == 2);
    CHECK(insertion_count(1, 1) == Enum::count(1, 1));
    CHECK(insertion_count(2, 1) == 6);
    CHECK(insertion_count(2, 1) == Enum::count(2, 1));
    for (int n = 0; n + 1 <= 6; ++n)
        for (int m = 0; n + m <= 6; ++m)
            CHECK(insertion_count(n, m) == Enum::count(n, m));
    // Closed form (m+n)!/m! for all n+m <= 12.
    auto fact = [](int k) {
        BigInt f = 1;
        for (int i = 2; i <= k; ++i) f *= i;
        return f;
    };
    for (int n = 0; n <= 12; ++n)
        for (int m = 0; n + m <= 12; ++m)
            CHECK(insertion_count(n, m) == fact(n + m) / fact(m));
}

TEST_CASE("pretty-print round trip") {
    sdtest::Rng rng(5150);
    for (int i = 0; i < 50; ++i) {
        DoProgram p = sdtest::random_do_program(rng);
        DoProgram q = parse_do(pretty_print(p));
        CHECK(q.name == p.name);
        CHECK(q.statements == p.statements);
        CHECK(q.returns == p.returns);
        CHECK(q.params == p.params);
    }
}

TEST_CASE("renaming variables preserves the elaboration") {
    auto poly = sdtest::abc_polygraph();
    const char* original = R"(
        p(x: A):
          a2b(x) -> y
          b2c(y) -> z
          return(z)
    )";
    const char* renamed = R"(
        p(tomato: A):
          a2b(tomato) -> cucumber
          b2c(cucumber) -> pepper
          return(pepper)
    )";
    CHECK(is_equal(elaborate(check(parse_do(original), poly)),
                   elaborate(check(parse_do(renamed), poly))));
}

TEST_CASE("interchange property on random programs") {
    sdtest::Rng rng(31337);
    auto poly = sdtest::abc_polygraph();
    int done = 0;
    while (done < 60) {
        DoProgram p = sdtest::random_do_program(rng);
        std::vector<std::size_t> sites;
        for (std::size_t i = 0; i + 1 < p.statements.size(); ++i)
            if (independent_statements(p.statements[i], p.statements[i + 1]))
                sites.push_back(i);
        if (sites.empty()) continue;
        std::size_t i = sites[sdtest::pick(rng, 0, (int)sites.size() - 1)];
        DoProgram q = p;
        std::swap(q.statements[i], q.statements[i + 1]);
        CHECK(is_equal(elaborate(check(p, poly)), elaborate(check(q, poly))));
        ++done;
    }
}
