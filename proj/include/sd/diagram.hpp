#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sd/signature.hpp"

namespace sd {

using WireId = std::uint32_t;

struct Node {
    std::string gen;
    std::vector<WireId> in_wires;
    std::vector<WireId> out_wires;
};

// A symmetric string diagram: an acyclic hypergraph with ordered boundaries.
// Wires are typed vertices; nodes are generator occurrences. Each wire has
// exactly one producer endpoint (a node output, or a boundary_in position)
// and one consumer endpoint (a node input, or a boundary_out position).
// Immutable value; wire ids are renumbered on every construction.
class Diagram {
public:
    const PolygraphRef& polygraph() const { return poly_; }
    const std::vector<std::string>& wire_types() const { return wire_types_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<WireId>& boundary_in() const { return bin_; }
    const std::vector<WireId>& boundary_out() const { return bout_; }

    std::vector<std::string> dom() const;
    std::vector<std::string> cod() const;
    std::size_t wire_count() const { return wire_types_.size(); }

    friend class DiagramBuilder;
    friend Diagram parse_diagram(const std::string&, PolygraphRef,
                                 const std::string&);

private:
    PolygraphRef poly_;
    std::vector<std::string> wire_types_;
    std::vector<Node> nodes_;
    std::vector<WireId> bin_, bout_;
};

// Incremental construction: create input wires, apply generators to live
// wires, finish by selecting the output boundary. Validates on finish.
class DiagramBuilder {
public:
    explicit DiagramBuilder(PolygraphRef poly);

    WireId add_input(const std::string& type);
    // Applies the named generator to the given wires; returns its outputs.
    std::vector<WireId> apply(const std::string& gen,
                              const std::vector<WireId>& ins);
    // Splices another diagram in place of fresh nodes; `inputs` are live
    // wires standing for the diagram's boundary_in. Returns the wires at its
    // boundary_out.
    std::vector<WireId> splice(const Diagram& d, const std::vector<WireId>& inputs);
    const std::string& type_of(WireId w) const;
    Diagram finish(const std::vector<WireId>& outputs);

private:
    WireId fresh(const std::string& type);
    void consume(WireId w);

    PolygraphRef poly_;
    Diagram d_;
    std::vector<bool> consumed_;
};

Diagram from_generator(PolygraphRef poly, const std::string& gen);
Diagram identity(PolygraphRef poly, const std::vector<std::string>& types);
Diagram symmetry(PolygraphRef poly, const std::vector<std::string>& left,
                 const std::vector<std::string>& right);
// Boundary rewiring by an arbitrary permutation: output position i carries
// input position perm[i].
Diagram permutation(PolygraphRef poly, const std::vector<std::string>& types,
                    const std::vector<std::size_t>& perm);
Diagram compose(const Diagram& d1, const Diagram& d2);
Diagram tensor(const Diagram& d1, const Diagram& d2);

// Checks the wire endpoint invariant, node typing and acyclicity; throws
// validation_error with the offending wire/node on failure.
void validate(const Diagram& d);

// Deterministic topological order of the nodes. Ties are broken by the
// refined canonical color, then by the lowest wire id of the first input.
// Throws validation_error with a witness cycle on corrupted diagrams.
std::vector<std::size_t> topological_order(const Diagram& d);

// Equality up to hypergraph isomorphism preserving generator labels,
// positional ports and boundary positions.
bool is_equal(const Diagram& d1, const Diagram& d2);

// 64-bit digest of the canonical form; is_equal diagrams hash identically.
std::uint64_t canonical_hash(const Diagram& d);

// JSON: {wires:[{id,type}], nodes:[{gen,in:[id],out:[id]}], in:[id], out:[id]}
std::string diagram_to_json(const Diagram& d);
Diagram parse_diagram(const std::string& text, PolygraphRef poly,
                      const std::string& origin = "<string>");
Diagram load_diagram(const std::string& path, PolygraphRef poly);
void save_diagram(const Diagram& d, const std::string& path);

std::string diagram_to_dot(const Diagram& d);

} // namespace sd
