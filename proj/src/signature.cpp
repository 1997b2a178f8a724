#include "sd/signature.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sd {

using nlohmann::json;

bool is_identifier(const std::string& s) {
    if (s.empty()) return false;
    auto head = [](char c) { return std::isalpha((unsigned char)c) || c == '_'; };
    auto tail = [&](char c) { return head(c) || std::isdigit((unsigned char)c); };
    if (!head(s[0])) return false;
    return std::all_of(s.begin() + 1, s.end(), tail);
}

Polygraph Polygraph::make(std::vector<std::string> objects,
                          std::vector<Generator> generators) {
    std::set<std::string> objset;
    for (const auto& o : objects) {
        if (!is_identifier(o))
            throw validation_error("invalid object name '" + o + "'");
        if (!objset.insert(o).second)
            throw validation_error("duplicate object '" + o + "'");
    }
    std::set<std::string> genset;
    for (const auto& g : generators) {
        if (!is_identifier(g.name))
            throw validation_error("invalid generator name '" + g.name + "'");
        if (!genset.insert(g.name).second)
            throw validation_error("duplicate generator '" + g.name + "'");
        for (const auto& t : g.inputs)
            if (!objset.count(t))
                throw validation_error("generator '" + g.name +
                                       "' references undeclared type '" + t + "'");
        for (const auto& t : g.outputs)
            if (!objset.count(t))
                throw validation_error("generator '" + g.name +
                                       "' references undeclared type '" + t + "'");
    }
    Polygraph p;
    p.objects_ = std::move(objects);
    p.generators_ = std::move(generators);
    return p;
}

bool Polygraph::has_object(const std::string& name) const {
    return std::find(objects_.begin(), objects_.end(), name) != objects_.end();
}

const Generator* Polygraph::find(const std::string& name) const {
    for (const auto& g : generators_)
        if (g.name == name) return &g;
    return nullptr;
}

const Generator& Polygraph::at(const std::string& name) const {
    if (const Generator* g = find(name)) return *g;
    throw validation_error("unknown generator '" + name + "'");
}

bool Polygraph::is_pure() const {
    return std::none_of(generators_.begin(), generators_.end(),
                        [](const Generator& g) { return g.effectful; });
}

namespace {

// SAX walker that rejects duplicate object keys, which json::parse accepts
// silently.
struct DupKeyCheck : json::json_sax_t {
    std::vector<std::set<std::string>> stack;
    std::string duplicate;

    bool key(string_t& val) override {
        if (!stack.empty() && !stack.back().insert(val).second) {
            duplicate = val;
            return false;
        }
        return true;
    }
    bool start_object(std::size_t) override {
        stack.emplace_back();
        return true;
    }
    bool end_object() override {
        stack.pop_back();
        return true;
    }
    bool null() override { return true; }
    bool boolean(bool) override { return true; }
    bool number_integer(number_integer_t) override { return true; }
    bool number_unsigned(number_unsigned_t) override { return true; }
    bool number_float(number_float_t, const string_t&) override { return true; }
    bool string(string_t&) override { return true; }
    bool binary(binary_t&) override { return true; }
    bool start_array(std::size_t) override { return true; }
    bool end_array() override { return true; }
    bool parse_error(std::size_t, const std::string&,
                     const nlohmann::detail::exception&) override {
        return false;
    }
};

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

json parse_json_strict(const std::string& text, const std::string& origin) {
    try {
        DupKeyCheck check;
        if (!json::sax_parse(text, &check)) {
            if (!check.duplicate.empty())
                throw sd::parse_error(origin, 1, 1,
                                      "duplicate key '" + check.duplicate + "'");
        }
        return json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, col] = line_col(text, e.byte ? e.byte - 1 : 0);
        throw sd::parse_error(origin, line, col, e.what());
    }
}

} // namespace

Polygraph parse_polygraph(const std::string& text, const std::string& origin) {
    json j = parse_json_strict(text, origin);
    if (!j.is_object() || !j.contains("objects") || !j.contains("generators"))
        throw sd::parse_error(origin, 1, 1,
                              "expected an object with 'objects' and 'generators'");
    std::vector<std::string> objects = j.at("objects").get<std::vector<std::string>>();
    std::vector<Generator> gens;
    for (const auto& jg : j.at("generators")) {
        Generator g;
        g.name = jg.at("name").get<std::string>();
        g.inputs = jg.at("inputs").get<std::vector<std::string>>();
        g.outputs = jg.at("outputs").get<std::vector<std::string>>();
        g.effectful = jg.value("effectful", false);
        gens.push_back(std::move(g));
    }
    for (const auto& o : objects)
        if (o == kRuntimeObject)
            throw validation_error("object name 'R' is reserved for the runtime");
    return Polygraph::make(std::move(objects), std::move(gens));
}

Polygraph load_polygraph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_polygraph(ss.str(), path);
}

std::string polygraph_to_json(const Polygraph& p) {
    json j;
    j["objects"] = p.objects();
    j["generators"] = json::array();
    for (const auto& g : p.generators()) {
        json jg;
        jg["name"] = g.name;
        jg["inputs"] = g.inputs;
        jg["outputs"] = g.outputs;
        jg["effectful"] = g.effectful;
        j["generators"].push_back(jg);
    }
    return j.dump(2) + "\n";
}

void save_polygraph(const Polygraph& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw error("cannot open '" + path + "' for writing");
    out << polygraph_to_json(p);
}

Polygraph runtime_extend(const Polygraph& p) {
    std::vector<std::string> objects = p.objects();
    if (std::find(objects.begin(), objects.end(), kRuntimeObject) == objects.end())
        objects.push_back(kRuntimeObject);
    std::vector<Generator> gens;
    for (const auto& g : p.generators()) {
        Generator h = g;
        if (g.effectful) {
            h.inputs.insert(h.inputs.begin(), kRuntimeObject);
            h.outputs.insert(h.outputs.begin(), kRuntimeObject);
            h.effectful = false;
        }
        gens.push_back(std::move(h));
    }
    // R is reserved against user declarations only; make() accepts it here.
    return Polygraph::make(std::move(objects), std::move(gens));
}

Polygraph session_polygraph(const Polygraph& base) {
    if (!base.is_pure())
        throw validation_error("session_polygraph requires a pure base polygraph");
    std::vector<Generator> gens = base.generators();
    for (const auto& x : base.objects()) {
        for (const auto& name : {send_name(x), recv_name(x)})
            if (base.find(name))
                throw validation_error("base polygraph already declares '" + name +
                                       "'");
        gens.push_back(Generator{send_name(x), {x}, {}, true});
        gens.push_back(Generator{recv_name(x), {}, {x}, true});
    }
    return Polygraph::make(base.objects(), std::move(gens));
}

} // namespace sd
