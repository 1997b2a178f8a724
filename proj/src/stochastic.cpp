#include "sd/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sd {

using nlohmann::json;

constexpr double kSubnormSlack = 1e-9;
constexpr std::size_t kFrontierGuard = std::size_t(1) << 24;

std::size_t Channel::size_of(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int s : shape) n *= (std::size_t)s;
    return n;
}

double Channel::row_sum(std::size_t in) const {
    double s = 0;
    for (std::size_t o = 0; o < cod_size(); ++o) s += at(in, o);
    return s;
}

Channel Channel::make(std::vector<int> dom_shape, std::vector<int> cod_shape,
                      std::vector<double> entries) {
    for (int s : dom_shape)
        if (s <= 0) throw validation_error("channel shapes must be positive");
    for (int s : cod_shape)
        if (s <= 0) throw validation_error("channel shapes must be positive");
    Channel c;
    c.dom_ = std::move(dom_shape);
    c.cod_ = std::move(cod_shape);
    if (entries.size() != c.dom_size() * c.cod_size())
        throw validation_error("channel entry count mismatch: got " +
                               std::to_string(entries.size()) + ", expected " +
                               std::to_string(c.dom_size() * c.cod_size()));
    c.e_ = std::move(entries);
    for (double v : c.e_)
        if (!(v >= -kSubnormSlack && v <= 1 + kSubnormSlack) || std::isnan(v))
            throw validation_error("channel entry " + std::to_string(v) +
                                   " outside [0,1]");
    for (std::size_t i = 0; i < c.dom_size(); ++i)
        if (c.row_sum(i) > 1 + kSubnormSlack)
            throw validation_error("row " + std::to_string(i) +
                                   " sums to " + std::to_string(c.row_sum(i)) +
                                   " > 1: not subnormalized");
    return c;
}

Channel Channel::zeros(std::vector<int> dom_shape, std::vector<int> cod_shape) {
    std::size_t n = size_of(dom_shape) * size_of(cod_shape);
    return make(std::move(dom_shape), std::move(cod_shape),
                std::vector<double>(n, 0.0));
}

Channel kleisli_compose(const Channel& f, const Channel& g) {
    if (f.cod_shape() != g.dom_shape())
        throw validation_error("kleisli_compose: shape mismatch");
    std::size_t X = f.dom_size(), Y = f.cod_size(), Z = g.cod_size();
    std::vector<double> e(X * Z, 0.0);
    for (std::size_t x = 0; x < X; ++x)
        for (std::size_t y = 0; y < Y; ++y) {
            double fy = f.at(x, y);
            if (fy == 0) continue;
            for (std::size_t z = 0; z < Z; ++z) e[x * Z + z] += fy * g.at(y, z);
        }
    return Channel::make(f.dom_shape(), g.cod_shape(), std::move(e));
}

Channel tensor(const Channel& f, const Channel& g) {
    std::vector<int> dom = f.dom_shape(), cod = f.cod_shape();
    dom.insert(dom.end(), g.dom_shape().begin(), g.dom_shape().end());
    cod.insert(cod.end(), g.cod_shape().begin(), g.cod_shape().end());
    std::size_t Xf = f.dom_size(), Xg = g.dom_size();
    std::size_t Yf = f.cod_size(), Yg = g.cod_size();
    std::vector<double> e(Xf * Xg * Yf * Yg);
    for (std::size_t xf = 0; xf < Xf; ++xf)
        for (std::size_t xg = 0; xg < Xg; ++xg)
            for (std::size_t yf = 0; yf < Yf; ++yf)
                for (std::size_t yg = 0; yg < Yg; ++yg)
                    e[(xf * Xg + xg) * (Yf * Yg) + yf * Yg + yg] =
                        f.at(xf, yf) * g.at(xg, yg);
    return Channel::make(std::move(dom), std::move(cod), std::move(e));
}

Channel identity_channel(std::vector<int> shape) {
    std::size_t n = Channel::size_of(shape);
    std::vector<double> e(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) e[i * n + i] = 1.0;
    return Channel::make(shape, shape, std::move(e));
}

Channel copy_channel(std::vector<int> shape) {
    std::size_t n = Channel::size_of(shape);
    std::vector<int> cod = shape;
    cod.insert(cod.end(), shape.begin(), shape.end());
    std::vector<double> e(n * n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) e[i * n * n + i * n + i] = 1.0;
    return Channel::make(std::move(shape), std::move(cod), std::move(e));
}

Channel discard_channel(std::vector<int> shape) {
    std::size_t n = Channel::size_of(shape);
    return Channel::make(std::move(shape), {}, std::vector<double>(n, 1.0));
}

Channel compare_channel(std::vector<int> shape) {
    std::size_t n = Channel::size_of(shape);
    std::vector<int> dom = shape;
    dom.insert(dom.end(), shape.begin(), shape.end());
    std::vector<double> e(n * n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) e[(i * n + i) * n + i] = 1.0;
    return Channel::make(std::move(dom), std::move(shape), std::move(e));
}

Channel uniform_state(int n) {
    if (n <= 0) throw validation_error("uniform_state: empty carrier");
    return Channel::make({}, {n}, std::vector<double>((std::size_t)n, 1.0 / n));
}

Channel dirac_state(int n, int x) {
    if (x < 0 || x >= n)
        throw validation_error("dirac_state: point " + std::to_string(x) +
                               " outside carrier of size " + std::to_string(n));
    std::vector<double> e((std::size_t)n, 0.0);
    e[(std::size_t)x] = 1.0;
    return Channel::make({}, {n}, std::move(e));
}

Channel function_channel(std::vector<int> dom_shape, std::vector<int> cod_shape,
                         const std::function<std::size_t(std::size_t)>& fn) {
    std::size_t X = Channel::size_of(dom_shape), Y = Channel::size_of(cod_shape);
    std::vector<double> e(X * Y, 0.0);
    for (std::size_t x = 0; x < X; ++x) {
        std::size_t y = fn(x);
        if (y >= Y) throw validation_error("function_channel: value out of range");
        e[x * Y + y] = 1.0;
    }
    return Channel::make(std::move(dom_shape), std::move(cod_shape), std::move(e));
}

bool channel_equal(const Channel& f, const Channel& g, double eps) {
    if (f.dom_shape() != g.dom_shape() || f.cod_shape() != g.cod_shape())
        throw validation_error("channel_equal: shape mismatch");
    for (std::size_t i = 0; i < f.entries().size(); ++i)
        if (std::fabs(f.entries()[i] - g.entries()[i]) > eps) return false;
    return true;
}

bool channel_equal_up_to_scalar(const Channel& f, const Channel& g, double eps) {
    if (f.dom_shape() != g.dom_shape() || f.cod_shape() != g.cod_shape())
        throw validation_error("channel_equal_up_to_scalar: shape mismatch");
    std::size_t best = 0;
    double mag = 0;
    for (std::size_t i = 0; i < g.entries().size(); ++i)
        if (std::fabs(g.entries()[i]) > mag) {
            mag = std::fabs(g.entries()[i]);
            best = i;
        }
    if (mag <= eps) {
        for (double v : f.entries())
            if (std::fabs(v) > eps) return false;
        return true;
    }
    double lambda = f.entries()[best] / g.entries()[best];
    if (lambda <= 0) return false;
    for (std::size_t i = 0; i < f.entries().size(); ++i)
        if (std::fabs(f.entries()[i] - lambda * g.entries()[i]) > eps)
            return false;
    return true;
}

bool is_deterministic(const Channel& f, double eps) {
    Channel lhs = kleisli_compose(f, copy_channel(f.cod_shape()));
    Channel rhs = kleisli_compose(copy_channel(f.dom_shape()), tensor(f, f));
    return channel_equal(lhs, rhs, eps);
}

bool is_total(const Channel& f, double eps) {
    Channel lhs = kleisli_compose(f, discard_channel(f.cod_shape()));
    return channel_equal(lhs, discard_channel(f.dom_shape()), eps);
}

bool is_quasitotal(const Channel& f, double eps) {
    Channel copied = copy_channel(f.dom_shape());
    Channel side = kleisli_compose(f, discard_channel(f.cod_shape()));
    Channel rhs = kleisli_compose(copied, tensor(side, f));
    return channel_equal(f, rhs, eps);
}

Channel bayes_invert(const Channel& g, const Channel& f) {
    if (!f.dom_shape().empty())
        throw validation_error("bayes_invert: the prior must be a state");
    if (f.cod_shape() != g.dom_shape())
        throw validation_error("bayes_invert: prior does not match the channel");
    std::size_t X = g.dom_size(), Y = g.cod_size();
    std::vector<double> e(Y * X, 0.0);
    for (std::size_t y = 0; y < Y; ++y) {
        double denom = 0;
        for (std::size_t x = 0; x < X; ++x) denom += g.at(x, y) * f.at(0, x);
        if (denom <= 0) continue; // zero-mass observation: zero subdistribution
        for (std::size_t x = 0; x < X; ++x)
            e[y * X + x] = g.at(x, y) * f.at(0, x) / denom;
    }
    return Channel::make(g.cod_shape(), g.dom_shape(), std::move(e));
}

// ---------------------------------------------------------------------------
// Interpretations

int Interpretation::size_of_type(const std::string& type) const {
    auto it = type_sizes.find(type);
    if (it == type_sizes.end())
        throw validation_error("no size declared for type '" + type + "'");
    return it->second;
}

std::vector<int> Interpretation::shape_of(
    const std::vector<std::string>& types) const {
    std::vector<int> shape;
    for (const auto& t : types) shape.push_back(size_of_type(t));
    return shape;
}

Interpretation parse_interpretation(const std::string& text, PolygraphRef poly,
                                    const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw sd::parse_error(origin, 1, 1, e.what());
    }
    Interpretation interp;
    interp.polygraph = poly;
    for (const auto& [type, size] : j.at("sizes").items()) {
        int n = size.get<int>();
        if (n <= 0)
            throw validation_error("size of '" + type + "' must be positive");
        interp.type_sizes[type] = n;
    }
    for (const auto& [name, spec] : j.at("generators").items()) {
        const Generator& g = poly->at(name);
        std::vector<int> dom = interp.shape_of(g.inputs);
        std::vector<int> cod = interp.shape_of(g.outputs);
        std::vector<double> entries;
        for (const auto& row : spec.at("table"))
            for (const auto& v : row) entries.push_back(v.get<double>());
        interp.gen_channels.emplace(
            name, Channel::make(std::move(dom), std::move(cod), std::move(entries)));
    }
    return interp;
}

Interpretation load_interpretation(const std::string& path, PolygraphRef poly) {
    std::ifstream in(path);
    if (!in) throw error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_interpretation(ss.str(), std::move(poly), path);
}

// ---------------------------------------------------------------------------
// Evaluation

Channel evaluate(const Diagram& d, const Interpretation& interp) {
    // The frontier is a dense tensor over (boundary_in wires, open wires).
    std::vector<int> dom_shape = interp.shape_of(d.dom());
    std::size_t dom_size = Channel::size_of(dom_shape);

    std::vector<WireId> open(d.boundary_in().begin(), d.boundary_in().end());
    std::vector<int> open_shape = dom_shape;
    auto open_size = [&]() { return Channel::size_of(open_shape); };

    if (dom_size * dom_size > kFrontierGuard)
        throw error("evaluate: frontier above 2^24 entries");
    std::vector<double> frontier(dom_size * dom_size, 0.0);
    for (std::size_t x = 0; x < dom_size; ++x) frontier[x * dom_size + x] = 1.0;

    auto wire_size = [&](WireId w) {
        return interp.size_of_type(d.wire_types()[w]);
    };

    for (std::size_t n : topological_order(d)) {
        const Node& node = d.nodes()[n];
        auto it = interp.gen_channels.find(node.gen);
        if (it == interp.gen_channels.end())
            throw validation_error("no interpretation for generator '" +
                                   node.gen + "'");
        const Channel& ch = it->second;
        {
            std::vector<std::string> in_types, out_types;
            for (WireId w : node.in_wires) in_types.push_back(d.wire_types()[w]);
            for (WireId w : node.out_wires) out_types.push_back(d.wire_types()[w]);
            if (ch.dom_shape() != interp.shape_of(in_types) ||
                ch.cod_shape() != interp.shape_of(out_types))
                throw validation_error("interpretation of '" + node.gen +
                                       "' has the wrong shape");
        }
        // Positions of the consumed wires in the open list.
        std::vector<std::size_t> taken;
        for (WireId w : node.in_wires) {
            auto pos = std::find(open.begin(), open.end(), w);
            if (pos == open.end())
                throw error("evaluate: wire not open (bug)");
            taken.push_back((std::size_t)(pos - open.begin()));
        }
        // New open list: untouched wires in order, then the node's outputs.
        std::vector<WireId> next_open;
        std::vector<int> next_shape;
        std::vector<std::size_t> keep;
        for (std::size_t i = 0; i < open.size(); ++i) {
            if (std::find(taken.begin(), taken.end(), i) != taken.end()) continue;
            keep.push_back(i);
            next_open.push_back(open[i]);
            next_shape.push_back(open_shape[i]);
        }
        for (WireId w : node.out_wires) {
            next_open.push_back(w);
            next_shape.push_back(wire_size(w));
        }
        std::size_t next_size = Channel::size_of(next_shape);
        if (dom_size * next_size > kFrontierGuard)
            throw error("evaluate: frontier above 2^24 entries");
        std::vector<double> next(dom_size * next_size, 0.0);

        // Strides of the current open tensor (row-major).
        std::vector<std::size_t> stride(open_shape.size(), 1);
        for (int i = (int)open_shape.size() - 2; i >= 0; --i)
            stride[i] = stride[i + 1] * (std::size_t)open_shape[i + 1];
        std::vector<std::size_t> next_stride(next_shape.size(), 1);
        for (int i = (int)next_shape.size() - 2; i >= 0; --i)
            next_stride[i] = next_stride[i + 1] * (std::size_t)next_shape[i + 1];

        std::size_t cur_size = open_size();
        std::vector<int> digits(open_shape.size(), 0);
        for (std::size_t flat = 0; flat < cur_size; ++flat) {
            // Decode mixed-radix digits of `flat`.
            std::size_t rem = flat;
            for (std::size_t i = 0; i < open_shape.size(); ++i) {
                digits[i] = (int)(rem / stride[i]);
                rem %= stride[i];
            }
            // Node input index.
            std::size_t in_idx = 0;
            for (std::size_t t : taken) in_idx = in_idx * open_shape[t] + digits[t];
            // Base of the untouched part in the next tensor.
            std::size_t base = 0;
            for (std::size_t k = 0; k < keep.size(); ++k)
                base += (std::size_t)digits[keep[k]] * next_stride[k];
            for (std::size_t x = 0; x < dom_size; ++x) {
                double v = frontier[x * cur_size + flat];
                if (v == 0) continue;
                // The node's outputs occupy the low-order digits, so the
                // channel's output index adds directly.
                for (std::size_t out = 0; out < ch.cod_size(); ++out) {
                    double w = ch.at(in_idx, out);
                    if (w == 0) continue;
                    next[x * next_size + base + out] += v * w;
                }
            }
        }
        frontier = std::move(next);
        open = std::move(next_open);
        open_shape = std::move(next_shape);
    }

    // Reorder open wires into boundary_out order.
    std::vector<int> cod_shape = interp.shape_of(d.cod());
    std::size_t cod_size = Channel::size_of(cod_shape);
    std::vector<std::size_t> perm; // boundary position -> open index
    for (WireId w : d.boundary_out()) {
        auto pos = std::find(open.begin(), open.end(), w);
        if (pos == open.end()) throw error("evaluate: output wire not open (bug)");
        perm.push_back((std::size_t)(pos - open.begin()));
    }
    std::vector<std::size_t> stride(open_shape.size(), 1);
    for (int i = (int)open_shape.size() - 2; i >= 0; --i)
        stride[i] = stride[i + 1] * (std::size_t)open_shape[i + 1];
    std::vector<double> entries(dom_size * cod_size, 0.0);
    std::vector<int> digits(open_shape.size(), 0);
    for (std::size_t flat = 0; flat < Channel::size_of(open_shape); ++flat) {
        std::size_t rem = flat;
        for (std::size_t i = 0; i < open_shape.size(); ++i) {
            digits[i] = (int)(rem / stride[i]);
            rem %= stride[i];
        }
        std::size_t out_idx = 0;
        for (std::size_t k = 0; k < perm.size(); ++k)
            out_idx = out_idx * open_shape[perm[k]] + digits[perm[k]];
        for (std::size_t x = 0; x < dom_size; ++x)
            entries[x * cod_size + out_idx] += frontier[x * Channel::size_of(open_shape) + flat];
    }
    return Channel::make(std::move(dom_shape), std::move(cod_shape),
                         std::move(entries));
}

std::string channel_to_string(const Channel& c) {
    std::ostringstream out;
    out << "dom shape (";
    for (std::size_t i = 0; i < c.dom_shape().size(); ++i)
        out << (i ? "," : "") << c.dom_shape()[i];
    out << ") -> cod shape (";
    for (std::size_t i = 0; i < c.cod_shape().size(); ++i)
        out << (i ? "," : "") << c.cod_shape()[i];
    out << ")\n";
    for (std::size_t x = 0; x < c.dom_size(); ++x) {
        out << "  [";
        for (std::size_t y = 0; y < c.cod_size(); ++y) {
            if (y) out << ", ";
            out << c.at(x, y);
        }
        out << "]\n";
    }
    return out.str();
}

} // namespace sd
