#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sd/errors.hpp"
#include "sd/shuffle.hpp"
#include "sd/signature.hpp"

namespace sd {

// Artifact-wide convention: Send is written ! (a value leaves its session),
// Recv is written ? (a value enters).
enum class Polarity { Send, Recv };

inline char polarity_mark(Polarity p) { return p == Polarity::Send ? '!' : '?'; }

struct PolarItem {
    std::string type;
    Polarity pol;

    bool operator==(const PolarItem&) const = default;
};

using PolarList = std::vector<PolarItem>;

// The implicit singleton type of untyped polar shuffles.
inline constexpr const char* kAnyType = "_";

PolarList parse_polar_list(const std::string& text); // "!A ?B" / "A! B?" forms
std::string polar_list_to_string(const PolarList& l);

// A position in a polar shuffle: list == kOutputList addresses the output
// polar list, otherwise an input list index.
struct PolarPos {
    int list;
    int pos;

    bool operator==(const PolarPos&) const = default;
    auto operator<=>(const PolarPos&) const = default;
};

inline constexpr int kOutputList = -1;

// A type-preserving bijection from (input sends + output receives) to
// (output sends + input receives) whose induced graph over the lists' linear
// orders is acyclic.
struct PolarShuffle {
    std::vector<PolarList> inputs;
    PolarList output;
    std::vector<std::pair<PolarPos, PolarPos>> pairing; // domain -> codomain

    const PolarItem& item(PolarPos p) const {
        return p.list == kOutputList ? output.at(p.pos)
                                     : inputs.at(p.list).at(p.pos);
    }
    std::size_t total_elements() const;

    bool operator==(const PolarShuffle&) const = default;
};

// True for positions in the bijection's domain: input sends, output receives.
bool is_domain(const PolarShuffle& s, PolarPos p);

struct PolarReport {
    bool ok = true;
    std::string message;
    std::vector<PolarPos> cycle; // witness when acyclicity fails
};

// Linear-time validation: structural well-formedness, type preservation,
// acyclicity via topological sort.
PolarReport validate(const PolarShuffle& s);
void require_valid(const PolarShuffle& s); // throws validation_error

PolarShuffle identity_polar(const PolarList& gamma);

// Substitutes s into input `position` of t; the pairing is composed by
// chasing chains through the border list. A composite of valid shuffles
// failing validation is a bug, not a user error.
PolarShuffle compose(const PolarShuffle& s, std::size_t position,
                     const PolarShuffle& t);

// Pointwise concatenation of inputs and outputs; disjoint union of pairings.
PolarShuffle tensor(const PolarShuffle& s, const PolarShuffle& t);

// The unique type-forced pairing between distinctly typed lists, if acyclic.
std::optional<PolarShuffle> infer(const std::vector<PolarList>& inputs,
                                  const PolarList& output);

// Rule-shaped builders.
PolarShuffle link_shuffle(const PolarList& gamma, const std::string& type,
                          const PolarList& delta);
PolarShuffle spawn_shuffle(const PolarList& gamma, const std::string& type,
                           const PolarList& delta);
PolarShuffle lift(const Shuffling& plain, const std::vector<PolarList>& lists);
PolarShuffle wait_shuffle(const PolarList& gamma, const std::string& type,
                          const PolarList& delta, const PolarList& psi);
PolarShuffle rush_shuffle(const PolarList& gamma, const std::string& type,
                          const PolarList& delta, const PolarList& psi);
PolarShuffle swap_same_polarity(const PolarList& gamma, const PolarItem& x,
                                const PolarItem& y, const PolarList& delta);

// Thm-style factorization: per-input reorders (wait/rush moves only), spawned
// channels, one plain shuffle, final links. recompose() reproduces the
// original shuffle pairing-for-pairing.
struct Factorization {
    std::vector<PolarList> inputs; // original input lists
    // new position -> old position, one permutation per input list
    std::vector<std::vector<std::size_t>> internal_reorders;
    // (type, receive position, send position) in the output list
    struct Spawn {
        std::string type;
        int recv_pos;
        int send_pos;
    };
    std::vector<Spawn> spawn_list;
    Shuffling pure_shuffle; // blocks: reordered inputs, then one 2-block per spawn
    // linked (send, recv) input positions
    std::vector<std::pair<PolarPos, PolarPos>> links;
};

Factorization factor(const PolarShuffle& s);
PolarShuffle recompose(const Factorization& f);

// True when `perm` (new -> old) moves sends only later and receives only
// sooner relative to opposite-polarity elements.
bool reorder_is_wait_rush(const PolarList& list,
                          const std::vector<std::size_t>& perm);

// Session encoding, e.g.  f(?a, !b) = { g(!a), h(?b) }.
// Lists are named; edges are variables occurring exactly twice, once in the
// bijection's domain (inner !, header ?) and once in its codomain (header !,
// inner ?). Untyped: all items carry kAnyType.
struct Encoding {
    std::string name;
    std::vector<std::string> input_names;
    PolarShuffle shuffle;
};

Encoding parse_encoding(const std::string& text,
                        const std::string& origin = "<string>");
std::string print_encoding(const Encoding& e);

// Copies types from the given input lists onto an untyped shuffle (or checks
// them on a typed one) and propagates them to the output through the pairing.
PolarShuffle retype(const PolarShuffle& s, const std::vector<PolarList>& inputs);

// All positions of a valid shuffle in a deterministic topological order of
// the induced graph (position-lexicographic tie-breaking).
std::vector<PolarPos> topological_positions(const PolarShuffle& s);

} // namespace sd
