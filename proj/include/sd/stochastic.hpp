#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sd/diagram.hpp"
#include "sd/signature.hpp"

namespace sd {

inline constexpr double kDefaultEps = 1e-9;

// A subnormalized stochastic channel between finite sets: dense row-major
// array indexed (input tuple, output tuple), mixed-radix by shape, every row
// summing to at most one.
class Channel {
public:
    Channel() = default;
    // Validates entries in [0,1] and subnormalized rows.
    static Channel make(std::vector<int> dom_shape, std::vector<int> cod_shape,
                        std::vector<double> entries);
    // Zero-filled channel of the given shape.
    static Channel zeros(std::vector<int> dom_shape, std::vector<int> cod_shape);

    const std::vector<int>& dom_shape() const { return dom_; }
    const std::vector<int>& cod_shape() const { return cod_; }
    const std::vector<double>& entries() const { return e_; }

    std::size_t dom_size() const { return size_of(dom_); }
    std::size_t cod_size() const { return size_of(cod_); }
    double at(std::size_t in, std::size_t out) const {
        return e_[in * cod_size() + out];
    }
    double row_sum(std::size_t in) const;

    static std::size_t size_of(const std::vector<int>& shape);

private:
    std::vector<int> dom_, cod_;
    std::vector<double> e_;
};

Channel kleisli_compose(const Channel& f, const Channel& g);
Channel tensor(const Channel& f, const Channel& g);

Channel identity_channel(std::vector<int> shape);
// Structure channels on a whole shape (treated as the product set).
Channel copy_channel(std::vector<int> shape);    // x -> (x, x)
Channel discard_channel(std::vector<int> shape); // x -> ()
Channel compare_channel(std::vector<int> shape); // (x, y) -> x if x == y
Channel uniform_state(int n);
Channel dirac_state(int n, int x);
// 0/1 channel from an explicit function table over flattened indices.
Channel function_channel(std::vector<int> dom_shape, std::vector<int> cod_shape,
                         const std::function<std::size_t(std::size_t)>& fn);

bool is_deterministic(const Channel& f, double eps = kDefaultEps);
bool is_total(const Channel& f, double eps = kDefaultEps);
bool is_quasitotal(const Channel& f, double eps = kDefaultEps);

// g_f^dagger(x|y) = g(y|x) f(x) / sum_x' g(y|x') f(x'); zero-denominator
// columns become the zero subdistribution.
Channel bayes_invert(const Channel& g, const Channel& f);

bool channel_equal(const Channel& f, const Channel& g, double eps = kDefaultEps);
// True when some lambda > 0 makes f entrywise equal to lambda * g; lambda is
// estimated from the largest-magnitude entry of g. All-zero pairs compare
// equal.
bool channel_equal_up_to_scalar(const Channel& f, const Channel& g,
                                double eps = kDefaultEps);

// Functorial assignment of sizes and channels to a polygraph's objects and
// generators.
struct Interpretation {
    PolygraphRef polygraph;
    std::map<std::string, int> type_sizes;
    std::map<std::string, Channel> gen_channels;

    int size_of_type(const std::string& type) const;
    std::vector<int> shape_of(const std::vector<std::string>& types) const;
};

// JSON: { "sizes": {type: int}, "generators": {name: {"table": [[float]]}} }
Interpretation parse_interpretation(const std::string& text, PolygraphRef poly,
                                    const std::string& origin = "<string>");
Interpretation load_interpretation(const std::string& path, PolygraphRef poly);

// Contracts the diagram's node channels in topological order, keeping the
// frontier marginal as one dense tensor over open wires. Refuses frontiers
// above 2^24 entries.
Channel evaluate(const Diagram& d, const Interpretation& interp);

std::string channel_to_string(const Channel& c);

} // namespace sd
