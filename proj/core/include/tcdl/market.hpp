#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace tcdl {

using NodeIndex = std::size_t;

/// One node as written in a tree description. `time` may be omitted and is then derived from depth.
struct NodeSpec {
    std::string id;
    std::optional<std::string> parent;
    std::optional<int> time;
};

/// Raw, unvalidated tree input. Exactly one of the two probability maps must be filled:
/// leaf probabilities (leaf id -> P[leaf]) or conditional probabilities (non-root id -> P[node | parent]).
struct TreeDescription {
    std::vector<NodeSpec> nodes;
    std::map<std::string, double> leaf_probabilities;
    std::map<std::string, double> conditional_probabilities;
};

/// Finite event tree carrying a strictly positive probability on every leaf.
///
/// Nodes are stored in breadth-first order, so a parent always precedes its children and
/// a single forward sweep visits every path prefix before its extensions. Leaves all sit
/// at the horizon T. Immutable once built.
class ScenarioTree {
public:
    static constexpr double kSumTolerance = 1e-12;
    static constexpr double kChainTolerance = 1e-10;

    /// Validates `desc` and derives whichever probability representation was not supplied.
    /// Throws InputError on cycles, orphans, multiple roots, nonpositive or non-normalized probabilities.
    static ScenarioTree build(const TreeDescription& desc);

    std::size_t size() const noexcept { return ids_.size(); }
    NodeIndex root() const noexcept { return 0; }
    const std::string& id(NodeIndex n) const { return ids_.at(n); }
    std::optional<NodeIndex> parent(NodeIndex n) const;
    int time(NodeIndex n) const { return times_.at(n); }
    std::span<const NodeIndex> children(NodeIndex n) const { return children_.at(n); }
    bool is_leaf(NodeIndex n) const { return children_.at(n).empty(); }
    int horizon() const noexcept { return horizon_; }

    /// Leaves in breadth-first order; every per-leaf vector in the library uses this order.
    std::span<const NodeIndex> leaves() const noexcept { return leaves_; }
    std::size_t leaf_count() const noexcept { return leaves_.size(); }
    /// Position of leaf node `n` within leaves(); throws for non-leaves.
    std::size_t leaf_position(NodeIndex n) const;

    /// Unconditional probability of reaching node n (1 at the root).
    double prob(NodeIndex n) const { return node_prob_.at(n); }
    /// P[n | parent(n)]; 1 at the root.
    double cond_prob(NodeIndex n) const { return cond_prob_.at(n); }
    /// Leaf probabilities in leaves() order.
    std::vector<double> leaf_probabilities() const;

    std::optional<NodeIndex> find(const std::string& id) const;
    NodeIndex index_of(const std::string& id) const;

    /// Root-to-node path, root first.
    std::vector<NodeIndex> path(NodeIndex n) const;

    /// Description that rebuilds an identical tree (leaf-probability form).
    TreeDescription describe() const;

    bool operator==(const ScenarioTree& other) const = default;

private:
    std::vector<std::string> ids_;
    std::vector<NodeIndex> parent_;
    std::vector<int> times_;
    std::vector<std::vector<NodeIndex>> children_;
    std::vector<NodeIndex> leaves_;
    std::vector<std::size_t> leaf_pos_;
    std::vector<double> node_prob_;
    std::vector<double> cond_prob_;
    int horizon_ = 0;
    std::unordered_map<std::string, NodeIndex> lookup_;
};

/// Tree plus ask prices, proportional cost level and terminal endowment.
struct MarketModel {
    ScenarioTree tree;
    std::vector<double> ask;        ///< ask price S per node (tree index order)
    double lambda = 0.0;            ///< bid = (1 - lambda) * ask
    std::vector<double> endowment;  ///< e_T per leaf (leaves() order)

    double bid(NodeIndex n) const { return (1.0 - lambda) * ask.at(n); }
    /// rho = max |e_T|.
    double rho() const;
};

struct ValidationReport {
    bool ok = true;
    std::vector<std::string> violations;
    double rho = 0.0;
};

ValidationReport validate_market(const MarketModel& model);

/// Throws InputError carrying every violation if the model is invalid.
void require_valid(const MarketModel& model);

/// E[f] for a leaf-indexed vector.
double expectation(const ScenarioTree& tree, std::span<const double> leaf_values);

/// Stable 64-bit FNV-1a hash of the canonical JSON serialization, as 16 hex digits.
std::string model_hash(const MarketModel& model);

}  // namespace tcdl
