#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sd/errors.hpp"

namespace sd {

// The runtime object injected by runtime_extend. Reserved: user signatures
// may not declare it.
inline constexpr const char* kRuntimeObject = "R";

bool is_identifier(const std::string& s);

struct Generator {
    std::string name;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    bool effectful = false;

    bool operator==(const Generator&) const = default;
};

// A signature of object names and typed generators. Immutable after
// construction; safe to share across threads.
class Polygraph {
public:
    Polygraph() = default;

    // Validates identifiers, uniqueness and type references; throws
    // validation_error on failure.
    static Polygraph make(std::vector<std::string> objects,
                          std::vector<Generator> generators);

    const std::vector<std::string>& objects() const { return objects_; }
    const std::vector<Generator>& generators() const { return generators_; }

    bool has_object(const std::string& name) const;
    const Generator* find(const std::string& name) const;
    const Generator& at(const std::string& name) const;

    // True when no generator carries the effectful flag.
    bool is_pure() const;

    bool operator==(const Polygraph&) const = default;

private:
    std::vector<std::string> objects_;
    std::vector<Generator> generators_;
};

using PolygraphRef = std::shared_ptr<const Polygraph>;

inline PolygraphRef share(Polygraph p) {
    return std::make_shared<const Polygraph>(std::move(p));
}

// JSON format: { "objects": [string],
//                "generators": [{name, inputs, outputs, effectful}] }.
// Duplicate keys are rejected. parse_polygraph reports line/column.
Polygraph parse_polygraph(const std::string& text,
                          const std::string& origin = "<string>");
Polygraph load_polygraph(const std::string& path);
std::string polygraph_to_json(const Polygraph& p);
void save_polygraph(const Polygraph& p, const std::string& path);

// Adds the runtime object R and threads it through every effectful
// generator: g: A -> B becomes g: R,A -> R,B with the flag cleared.
// Pure generators pass through unchanged; the result is pure.
Polygraph runtime_extend(const Polygraph& p);

// Extends a pure polygraph with effectful generators send_X: X -> I and
// recv_X: I -> X for every object X.
Polygraph session_polygraph(const Polygraph& base);

inline std::string send_name(const std::string& type) { return "send_" + type; }
inline std::string recv_name(const std::string& type) { return "recv_" + type; }

} // namespace sd
