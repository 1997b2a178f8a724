#pragma once

#include <string>
#include <vector>

#include "sd/diagram.hpp"
#include "sd/polar.hpp"
#include "sd/signature.hpp"

namespace sd {

// An effectful diagram threaded by the runtime wire R: boundary R,dom ->
// R,cod with a unique R path through every send_/recv_ node and no other
// node touching R. The diagram lives over runtime_extend(session_polygraph(
// base)) for some pure base.
struct Session {
    Diagram diagram;
    std::vector<std::string> dom, cod;
};

// Checks the R-path invariant and returns the effectful nodes in R order.
std::vector<std::size_t> effectful_spine(const Diagram& d);

Session make_session(Diagram d);

// The send_/recv_ nodes in R order: ! for send_X, ? for recv_X.
PolarList events(const Session& s);

// A session split at each effectful node: n+1 pure pieces joined by residual
// wires, with the event wire appended on the matching side.
struct Comb {
    PolarList holes;
    std::vector<Diagram> pieces;
    std::vector<std::vector<std::string>> residuals; // between consecutive pieces
    PolygraphRef session_polygraph; // the runtime-extended signature
    std::vector<std::string> dom, cod;
};

Comb to_comb(const Session& s);
Session from_comb(const Comb& c);

// Glues closed sessions along a polar shuffle with events(parts[i]) ==
// s.inputs[i]; inner send/receive pairs fuse into plain wires, boundary
// pairings keep their nodes, and a fresh R wire is threaded through the
// surviving events in output order.
Session glue(const std::vector<Session>& parts, const PolarShuffle& s);

// The inclusion of a pure diagram A -> B as the closed session that receives
// the inputs in reverse order and sends the outputs in order.
Session in_proc(const Diagram& pure, PolygraphRef session_poly);

// Inverse view: a process-shaped session (events ?An..?A1 !B1..!Bm) as the
// pure diagram A -> B.
Diagram from_proc(const Session& s, PolygraphRef base);

bool is_process_shaped(const Session& s);
std::vector<std::string> proc_dom(const Session& s);
std::vector<std::string> proc_cod(const Session& s);

Session proc_compose(const Session& f, const Session& g);
Session proc_tensor(const Session& f, const Session& g);
Session proc_id(PolygraphRef session_poly, const std::vector<std::string>& types);
Session proc_symmetry(PolygraphRef session_poly,
                      const std::vector<std::string>& left,
                      const std::vector<std::string>& right);

bool session_equal(const Session& a, const Session& b);

// Do-notation extended with "!x" (send) and "? Type -> x" (receive)
// statements; elaborates over runtime_extend(session_polygraph(base)).
Session parse_session_program(const std::string& text, PolygraphRef base,
                              const std::string& origin = "<string>");

} // namespace sd
