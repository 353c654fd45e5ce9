#include "tcdl/market.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "tcdl/error.hpp"
#include "tcdl/market_io.hpp"

namespace tcdl {

namespace {

constexpr NodeIndex kNoParent = static_cast<NodeIndex>(-1);

std::string join(const std::vector<std::string>& parts) {
    std::ostringstream os;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) os << "; ";
        os << parts[i];
    }
    return os.str();
}

}  // namespace

ScenarioTree ScenarioTree::build(const TreeDescription& desc) {
    if (desc.nodes.empty()) throw InputError("tree has no nodes");
    const bool by_leaf = !desc.leaf_probabilities.empty();
    const bool by_cond = !desc.conditional_probabilities.empty();
    if (by_leaf == by_cond) {
        // A single-node tree needs no conditional entries; accept an empty cond map there.
        if (!(desc.nodes.size() == 1 && !by_leaf && !by_cond))
            throw InputError("exactly one of leaf or conditional probabilities must be given");
    }

    // Index raw specs by id.
    std::unordered_map<std::string, std::size_t> raw_index;
    for (std::size_t i = 0; i < desc.nodes.size(); ++i) {
        const auto& id = desc.nodes[i].id;
        if (id.empty()) throw InputError("node with empty id");
        if (!raw_index.emplace(id, i).second) throw InputError("duplicate node id '" + id + "'");
    }

    std::optional<std::size_t> raw_root;
    std::vector<std::vector<std::size_t>> raw_children(desc.nodes.size());
    for (std::size_t i = 0; i < desc.nodes.size(); ++i) {
        const auto& spec = desc.nodes[i];
        if (!spec.parent) {
            if (raw_root) throw InputError("multiple roots: '" + desc.nodes[*raw_root].id + "' and '" + spec.id + "'");
            raw_root = i;
            continue;
        }
        auto it = raw_index.find(*spec.parent);
        if (it == raw_index.end())
            throw InputError("orphan node '" + spec.id + "': unknown parent '" + *spec.parent + "'");
        if (it->second == i) throw InputError("cycle detected: node '" + spec.id + "' is its own parent");
        raw_children[it->second].push_back(i);
    }
    if (!raw_root) throw InputError("cycle detected: no root node");

    // Breadth-first relabelling; nodes unreachable from the root lie on a cycle.
    ScenarioTree tree;
    std::vector<NodeIndex> new_index(desc.nodes.size(), kNoParent);
    std::deque<std::size_t> queue{*raw_root};
    while (!queue.empty()) {
        const std::size_t raw = queue.front();
        queue.pop_front();
        const NodeIndex n = tree.ids_.size();
        new_index[raw] = n;
        tree.ids_.push_back(desc.nodes[raw].id);
        const auto& parent_id = desc.nodes[raw].parent;
        tree.parent_.push_back(parent_id ? new_index[raw_index.at(*parent_id)] : kNoParent);
        for (std::size_t c : raw_children[raw]) queue.push_back(c);
    }
    if (tree.ids_.size() != desc.nodes.size()) {
        for (std::size_t i = 0; i < desc.nodes.size(); ++i)
            if (new_index[i] == kNoParent) throw InputError("cycle detected involving node '" + desc.nodes[i].id + "'");
    }

    const std::size_t n_nodes = tree.ids_.size();
    tree.children_.assign(n_nodes, {});
    tree.times_.assign(n_nodes, 0);
    for (NodeIndex n = 1; n < n_nodes; ++n) {
        tree.children_[tree.parent_[n]].push_back(n);
        tree.times_[n] = tree.times_[tree.parent_[n]] + 1;
    }
    for (std::size_t raw = 0; raw < desc.nodes.size(); ++raw) {
        const auto& t = desc.nodes[raw].time;
        if (t && *t != tree.times_[new_index[raw]]) {
            std::ostringstream os;
            os << "node '" << desc.nodes[raw].id << "' has time " << *t << " but depth "
               << tree.times_[new_index[raw]] << " (children must sit one step after their parent)";
            throw InputError(os.str());
        }
    }
    for (NodeIndex n = 0; n < n_nodes; ++n) {
        tree.lookup_.emplace(tree.ids_[n], n);
        if (tree.children_[n].empty()) tree.leaves_.push_back(n);
    }
    tree.horizon_ = tree.times_[tree.leaves_.front()];
    for (NodeIndex leaf : tree.leaves_) {
        if (tree.times_[leaf] != tree.horizon_)
            throw InputError("leaf '" + tree.ids_[leaf] + "' is not at the horizon T = " + std::to_string(tree.horizon_));
    }
    tree.leaf_pos_.assign(n_nodes, kNoParent);
    for (std::size_t k = 0; k < tree.leaves_.size(); ++k) tree.leaf_pos_[tree.leaves_[k]] = k;

    tree.node_prob_.assign(n_nodes, 0.0);
    tree.cond_prob_.assign(n_nodes, 1.0);
    if (by_cond) {
        for (const auto& [id, p] : desc.conditional_probabilities) {
            auto it = tree.lookup_.find(id);
            if (it == tree.lookup_.end()) throw InputError("conditional probability for unknown node '" + id + "'");
            if (it->second == 0) throw InputError("conditional probability given for the root");
        }
        tree.node_prob_[0] = 1.0;
        for (NodeIndex n = 1; n < n_nodes; ++n) {
            auto it = desc.conditional_probabilities.find(tree.ids_[n]);
            if (it == desc.conditional_probabilities.end())
                throw InputError("missing conditional probability for node '" + tree.ids_[n] + "'");
            if (!(it->second > 0.0) || !std::isfinite(it->second))
                throw InputError("nonpositive probability at node '" + tree.ids_[n] + "'");
            tree.cond_prob_[n] = it->second;
            tree.node_prob_[n] = tree.node_prob_[tree.parent_[n]] * it->second;
        }
        for (NodeIndex n = 0; n < n_nodes; ++n) {
            if (tree.children_[n].empty()) continue;
            double s = 0.0;
            for (NodeIndex c : tree.children_[n]) s += tree.cond_prob_[c];
            if (std::abs(s - 1.0) > kSumTolerance)
                throw InputError("conditional probabilities below node '" + tree.ids_[n] + "' do not sum to 1");
        }
    } else {
        for (const auto& [id, p] : desc.leaf_probabilities) {
            auto it = tree.lookup_.find(id);
            if (it == tree.lookup_.end()) throw InputError("probability for unknown node '" + id + "'");
            if (!tree.children_[it->second].empty()) throw InputError("probability given for non-leaf '" + id + "'");
        }
        double total = 0.0;
        for (NodeIndex leaf : tree.leaves_) {
            auto it = desc.leaf_probabilities.find(tree.ids_[leaf]);
            if (it == desc.leaf_probabilities.end()) {
                if (n_nodes == 1) {
                    tree.node_prob_[leaf] = 1.0;
                    total = 1.0;
                    continue;
                }
                throw InputError("missing probability for leaf '" + tree.ids_[leaf] + "'");
            }
            if (!(it->second > 0.0) || !std::isfinite(it->second))
                throw InputError("nonpositive probability at leaf '" + tree.ids_[leaf] + "'");
            tree.node_prob_[leaf] = it->second;
            total += it->second;
        }
        if (std::abs(total - 1.0) > kSumTolerance) {
            std::ostringstream os;
            os.precision(17);
            os << "probabilities not summing to 1 (sum = " << total << ")";
            throw InputError(os.str());
        }
        // Children follow parents in BFS order, so a reverse sweep accumulates subtree mass.
        for (NodeIndex n = n_nodes; n-- > 1;) tree.node_prob_[tree.parent_[n]] += tree.node_prob_[n];
        for (NodeIndex n = 1; n < n_nodes; ++n) tree.cond_prob_[n] = tree.node_prob_[n] / tree.node_prob_[tree.parent_[n]];
        tree.node_prob_[0] = 1.0;
    }

    // Chain consistency of the two representations.
    for (NodeIndex leaf : tree.leaves_) {
        double chain = 1.0;
        for (NodeIndex n : tree.path(leaf)) chain *= tree.cond_prob_[n];
        if (std::abs(chain - tree.node_prob_[leaf]) > kChainTolerance)
            throw InputError("conditional probabilities inconsistent with leaf probability at '" + tree.ids_[leaf] + "'");
    }
    return tree;
}

std::optional<NodeIndex> ScenarioTree::parent(NodeIndex n) const {
    const NodeIndex p = parent_.at(n);
    if (p == kNoParent) return std::nullopt;
    return p;
}

std::size_t ScenarioTree::leaf_position(NodeIndex n) const {
    const std::size_t k = leaf_pos_.at(n);
    if (k == kNoParent) throw InputError("node '" + ids_[n] + "' is not a leaf");
    return k;
}

std::vector<double> ScenarioTree::leaf_probabilities() const {
    std::vector<double> p;
    p.reserve(leaves_.size());
    for (NodeIndex leaf : leaves_) p.push_back(node_prob_[leaf]);
    return p;
}

std::optional<NodeIndex> ScenarioTree::find(const std::string& id) const {
    auto it = lookup_.find(id);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

NodeIndex ScenarioTree::index_of(const std::string& id) const {
    auto n = find(id);
    if (!n) throw InputError("unknown node id '" + id + "'");
    return *n;
}

std::vector<NodeIndex> ScenarioTree::path(NodeIndex n) const {
    std::vector<NodeIndex> out;
    for (NodeIndex cur = n; cur != kNoParent; cur = parent_.at(cur)) out.push_back(cur);
    std::reverse(out.begin(), out.end());
    return out;
}

TreeDescription ScenarioTree::describe() const {
    TreeDescription desc;
    for (NodeIndex n = 0; n < size(); ++n) {
        NodeSpec spec{ids_[n], std::nullopt, times_[n]};
        if (parent_[n] != kNoParent) spec.parent = ids_[parent_[n]];
        desc.nodes.push_back(std::move(spec));
    }
    for (NodeIndex leaf : leaves_) desc.leaf_probabilities[ids_[leaf]] = node_prob_[leaf];
    return desc;
}

double MarketModel::rho() const {
    double r = 0.0;
    for (double e : endowment) r = std::max(r, std::abs(e));
    return r;
}

ValidationReport validate_market(const MarketModel& model) {
    ValidationReport report;
    auto fail = [&](std::string msg) {
        report.ok = false;
        report.violations.push_back(std::move(msg));
    };
    const auto& tree = model.tree;
    if (model.ask.size() != tree.size()) {
        fail("price vector has " + std::to_string(model.ask.size()) + " entries for " + std::to_string(tree.size()) + " nodes");
    } else {
        for (NodeIndex n = 0; n < tree.size(); ++n) {
            if (!std::isfinite(model.ask[n])) fail("non-finite price at node '" + tree.id(n) + "'");
            else if (model.ask[n] <= 0.0) fail("nonpositive price at node '" + tree.id(n) + "'");
        }
    }
    if (!(model.lambda >= 0.0 && model.lambda < 1.0)) fail("lambda outside [0, 1)");
    if (model.endowment.size() != tree.leaf_count()) {
        fail("endowment has " + std::to_string(model.endowment.size()) + " entries for " +
             std::to_string(tree.leaf_count()) + " leaves");
    } else {
        for (std::size_t k = 0; k < model.endowment.size(); ++k)
            if (!std::isfinite(model.endowment[k])) fail("non-finite endowment at leaf '" + tree.id(tree.leaves()[k]) + "'");
    }
    if (report.ok) report.rho = model.rho();
    return report;
}

void require_valid(const MarketModel& model) {
    auto report = validate_market(model);
    if (!report.ok) throw InputError("invalid market: " + join(report.violations));
}

double expectation(const ScenarioTree& tree, std::span<const double> leaf_values) {
    const auto leaves = tree.leaves();
    if (leaf_values.size() != leaves.size()) throw InputError("leaf vector size mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < leaves.size(); ++k) s += tree.prob(leaves[k]) * leaf_values[k];
    return s;
}

std::string model_hash(const MarketModel& model) {
    const std::string text = market_to_json(model);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace tcdl
