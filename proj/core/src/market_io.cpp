#include "tcdl/market_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "tcdl/error.hpp"

namespace tcdl {

namespace {

using nlohmann::json;

std::string id_string(const json& j, const char* what) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    throw InputError(std::string("market file: ") + what + " must be a string or integer id");
}

double number(const json& j, const std::string& what) {
    if (!j.is_number()) throw InputError("market file: " + what + " must be a number");
    return j.get<double>();
}

std::map<std::string, double> number_map(const json& j, const char* what) {
    if (!j.is_object()) throw InputError(std::string("market file: '") + what + "' must be an object");
    std::map<std::string, double> out;
    for (const auto& [key, value] : j.items()) out[key] = number(value, std::string(what) + "[" + key + "]");
    return out;
}

json parse(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string(what) + ": malformed JSON: " + e.what());
    }
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

MarketModel market_from_json(const std::string& text) {
    const json j = parse(text, "market file");
    if (!j.is_object()) throw InputError("market file: top level must be an object");
    for (const char* key : {"nodes", "prices", "lambda"})
        if (!j.contains(key)) throw InputError(std::string("market file: missing key '") + key + "'");

    TreeDescription desc;
    if (!j["nodes"].is_array()) throw InputError("market file: 'nodes' must be an array");
    for (const auto& node : j["nodes"]) {
        if (!node.is_object() || !node.contains("id")) throw InputError("market file: every node needs an 'id'");
        NodeSpec spec;
        spec.id = id_string(node["id"], "node id");
        if (node.contains("parent") && !node["parent"].is_null()) spec.parent = id_string(node["parent"], "parent");
        if (node.contains("time") && !node["time"].is_null()) {
            if (!node["time"].is_number_integer()) throw InputError("market file: node time must be an integer");
            spec.time = node["time"].get<int>();
        }
        desc.nodes.push_back(std::move(spec));
    }
    if (j.contains("probabilities")) desc.leaf_probabilities = number_map(j["probabilities"], "probabilities");
    if (j.contains("conditional_probabilities"))
        desc.conditional_probabilities = number_map(j["conditional_probabilities"], "conditional_probabilities");

    MarketModel model{ScenarioTree::build(desc), {}, 0.0, {}};
    const auto& tree = model.tree;
    const auto prices = number_map(j["prices"], "prices");
    model.ask.assign(tree.size(), 0.0);
    for (const auto& [id, s] : prices) model.ask[tree.index_of(id)] = s;
    for (NodeIndex n = 0; n < tree.size(); ++n)
        if (!prices.count(tree.id(n))) throw InputError("market file: missing price for node '" + tree.id(n) + "'");
    model.lambda = number(j["lambda"], "lambda");
    model.endowment.assign(tree.leaf_count(), 0.0);
    if (j.contains("endowment")) {
        for (const auto& [id, e] : number_map(j["endowment"], "endowment"))
            model.endowment[tree.leaf_position(tree.index_of(id))] = e;
    }
    return model;
}

MarketModel load_market(const std::filesystem::path& path) { return market_from_json(read_text_file(path)); }

std::string market_to_json(const MarketModel& model) {
    const auto& tree = model.tree;
    json j;
    j["nodes"] = json::array();
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        json node{{"id", tree.id(n)}, {"time", tree.time(n)}};
        const auto parent = tree.parent(n);
        node["parent"] = parent ? json(tree.id(*parent)) : json(nullptr);
        j["nodes"].push_back(std::move(node));
    }
    json prices = json::object();
    for (NodeIndex n = 0; n < tree.size() && n < model.ask.size(); ++n) prices[tree.id(n)] = model.ask[n];
    j["prices"] = std::move(prices);
    j["lambda"] = model.lambda;
    json endowment = json::object();
    json probabilities = json::object();
    for (std::size_t k = 0; k < tree.leaf_count(); ++k) {
        const NodeIndex leaf = tree.leaves()[k];
        if (k < model.endowment.size()) endowment[tree.id(leaf)] = model.endowment[k];
        probabilities[tree.id(leaf)] = tree.prob(leaf);
    }
    j["endowment"] = std::move(endowment);
    j["probabilities"] = std::move(probabilities);
    return j.dump(2);
}

PayoffVector payoff_from_json(const std::string& text, const ScenarioTree& tree) {
    const json j = parse(text, "payoff file");
    if (!j.is_object()) throw InputError("payoff file: top level must be an object of leaf id -> value");
    PayoffVector g;
    g.values.assign(tree.leaf_count(), 0.0);
    std::vector<bool> seen(tree.leaf_count(), false);
    for (const auto& [id, value] : j.items()) {
        const auto node = tree.find(id);
        if (!node || !tree.is_leaf(*node)) throw InputError("payoff file: '" + id + "' is not a leaf");
        const std::size_t k = tree.leaf_position(*node);
        g.values[k] = number(value, "payoff[" + id + "]");
        seen[k] = true;
    }
    for (std::size_t k = 0; k < seen.size(); ++k)
        if (!seen[k]) throw InputError("payoff file: missing leaf '" + tree.id(tree.leaves()[k]) + "'");
    return g;
}

PayoffVector load_payoff(const std::filesystem::path& path, const ScenarioTree& tree) {
    return payoff_from_json(read_text_file(path), tree);
}

}  // namespace tcdl
