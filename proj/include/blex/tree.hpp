#pragma once

// Exact simulation of the branching Levy genealogy up to a horizon t, plus
// the point measures and diagnostics read off the tree: the extremal measure,
// the all-increments measure, its cut-tree restriction, many-to-one counts
// and the one-large-jump events.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "branching.hpp"
#include "levy_motion.hpp"
#include "point_measure.hpp"
#include "random.hpp"

namespace blex {

inline constexpr std::uint64_t kTreeNodeCap = 16'777'216;

struct ParticleTree {
    static constexpr std::uint32_t npos = 0xffffffffu;

    struct Node {
        std::uint32_t parent = npos;
        std::uint32_t depth = 0;      // branch events along the lineage, n_t^u
        bool first_child = false;
        double birth = 0.0;           // b_u
        double death = 0.0;           // sigma_u (may exceed the horizon)
        double increment = 0.0;       // X_{u,t}, displacement over [b_u, sigma_u ^ t]
        double pos_end = 0.0;         // xi^u at sigma_u ^ t (prefix sum of increments)
    };

    std::vector<Node> nodes;
    double horizon = 0.0;

    bool alive(std::size_t i) const { return nodes[i].death > horizon; }

    std::uint64_t population() const {
        std::uint64_t n = 0;
        for (std::size_t i = 0; i < nodes.size(); ++i) n += alive(i);
        return n;
    }
};

// Breadth-first exact construction. Per node the stream is consumed in a
// fixed order: lifetime, then the motion increment (only when the time span
// is positive), then the offspring count (only when the node dies in [0,t]).
inline ParticleTree simulate_tree(const BranchingConfig& cfg, const MotionSampler& motion,
                                  double t, RandomStream& rng,
                                  std::uint64_t cap = kTreeNodeCap) {
    if (!(t >= 0.0)) throw std::invalid_argument("simulate_tree: t >= 0 required");
    ParticleTree tree;
    tree.horizon = t;
    tree.nodes.reserve(64);
    tree.nodes.push_back({});
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const double birth = tree.nodes[i].birth;
        const double death = birth + rng.exponential(cfg.beta);
        const double tau = std::min(death, t) - birth;
        const double inc = tau > 0.0 ? motion.sample(tau, rng) : 0.0;
        const std::uint32_t parent = tree.nodes[i].parent;
        const double base = parent == ParticleTree::npos ? 0.0 : tree.nodes[parent].pos_end;
        tree.nodes[i].death = death;
        tree.nodes[i].increment = inc;
        tree.nodes[i].pos_end = base + inc;
        if (death <= t) {
            const std::uint32_t k = cfg.offspring.sample(rng);
            const std::uint32_t depth = tree.nodes[i].depth + 1;
            for (std::uint32_t c = 0; c < k; ++c) {
                ParticleTree::Node child;
                child.parent = std::uint32_t(i);
                child.depth = depth;
                child.first_child = c == 0;
                child.birth = death;
                tree.nodes.push_back(child);
                if (tree.nodes.size() > cap)
                    throw std::runtime_error("simulate_tree: node cap exceeded");
            }
        }
    }
    tree.nodes[0].first_child = true; // the root heads its own lineage
    return tree;
}

inline ParticleTree simulate_tree(const BranchingConfig& cfg, const MotionSpec& motion, double t,
                                  RandomStream& rng, std::uint64_t cap = kTreeNodeCap) {
    return simulate_tree(cfg, MotionSampler(motion), t, rng, cap);
}

// N_t scaled by 1/h: one atom per alive particle at h^{-1} xi_t^v.
inline PointMeasure extremal_measure(const ParticleTree& tree, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("extremal_measure: h > 0 required");
    PointMeasure measure;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
        if (tree.alive(i)) measure.add(tree.nodes[i].pos_end / h);
    return measure;
}

// The all-increments companion: for each alive leaf v, one atom at
// h^{-1} X_{u,t} for every u on the root-to-v chain.
inline PointMeasure ancestral_measure(const ParticleTree& tree, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("ancestral_measure: h > 0 required");
    PointMeasure measure;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (!tree.alive(i)) continue;
        for (std::uint32_t u = std::uint32_t(i); u != ParticleTree::npos; u = tree.nodes[u].parent)
            measure.add(tree.nodes[u].increment / h);
    }
    return measure;
}

// Restriction of the all-increments measure to ancestors born after t - s.
inline PointMeasure cut_measure(const ParticleTree& tree, double h, double s) {
    if (!(h > 0.0)) throw std::invalid_argument("cut_measure: h > 0 required");
    if (!(s >= 0.0)) throw std::invalid_argument("cut_measure: s >= 0 required");
    const double cutoff = tree.horizon - s;
    PointMeasure measure;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (!tree.alive(i)) continue;
        for (std::uint32_t u = std::uint32_t(i); u != ParticleTree::npos; u = tree.nodes[u].parent)
            if (tree.nodes[u].birth > cutoff) measure.add(tree.nodes[u].increment / h);
    }
    return measure;
}

// #{v alive at t : b_v <= t - s}: alive particles already born by time t - s.
inline std::uint64_t many_to_one_count(const ParticleTree& tree, double s) {
    const double cutoff = tree.horizon - s;
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
        if (tree.alive(i) && tree.nodes[i].birth <= cutoff) ++n;
    return n;
}

// Same count under the relabeling where a branching particle continues as its
// first child: an alive particle's lineage birth is the birth of the topmost
// ancestor reachable through first-child links.
inline std::uint64_t many_to_one_lineage_count(const ParticleTree& tree, double s) {
    const double cutoff = tree.horizon - s;
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (!tree.alive(i)) continue;
        std::uint32_t u = std::uint32_t(i);
        while (tree.nodes[u].first_child && tree.nodes[u].parent != ParticleTree::npos)
            u = tree.nodes[u].parent;
        if (tree.nodes[u].birth <= cutoff) ++n;
    }
    return n;
}

struct LargeJumpCheck {
    bool a_holds = true; // every alive chain has <= 1 increment above h theta / t
    bool b_holds = true; // every alive particle has depth <= rho t
};

inline LargeJumpCheck one_large_jump_check(const ParticleTree& tree, double h, double t,
                                           double theta, double rho) {
    if (!(h > 0.0 && t > 0.0 && theta > 0.0 && rho > 0.0))
        throw std::invalid_argument("one_large_jump_check: positive h, t, theta, rho required");
    const double threshold = h * theta / t;
    const double max_depth = rho * t;
    std::vector<std::uint32_t> big(tree.nodes.size());
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& node = tree.nodes[i];
        const std::uint32_t inherited = node.parent == ParticleTree::npos ? 0 : big[node.parent];
        big[i] = inherited + (std::fabs(node.increment) > threshold ? 1 : 0);
    }
    LargeJumpCheck check;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        if (!tree.alive(i)) continue;
        if (big[i] > 1) check.a_holds = false;
        if (double(tree.nodes[i].depth) > max_depth) check.b_holds = false;
        if (!check.a_holds && !check.b_holds) break;
    }
    return check;
}

// Smallest rho with rho log(rho/beta) - rho + beta > lambda, floored at beta + 2.
inline double default_rho(const BranchingConfig& cfg) {
    const double beta = cfg.beta;
    const double lambda = cfg.lambda();
    auto gap = [&](double rho) { return rho * std::log(rho / beta) - rho + beta - lambda; };
    double hi = beta + 2.0;
    while (gap(hi) <= 0.0) hi *= 2.0;
    double lo = beta; // gap(beta) = -lambda < 0
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) > 0.0 ? hi : lo) = mid;
    }
    return std::max(beta + 2.0, hi);
}

// One row per node: index, parent (-1 for the root), b_u, sigma_u ("inf" when
// the node outlives the horizon), X_{u,t}. Breadth-first order, so parents
// always precede children and child blocks stay contiguous.
inline std::string dump_tree(const ParticleTree& tree) {
    std::string out = "# horizon=";
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.17g\n", tree.horizon);
    out += buf;
    out += "node,parent,birth,death,increment\n";
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& node = tree.nodes[i];
        if (tree.alive(i))
            std::snprintf(buf, sizeof buf, "%zu,%d,%.17g,inf,%.17g\n", i,
                          node.parent == ParticleTree::npos ? -1 : int(node.parent), node.birth,
                          node.increment);
        else
            std::snprintf(buf, sizeof buf, "%zu,%d,%.17g,%.17g,%.17g\n", i,
                          node.parent == ParticleTree::npos ? -1 : int(node.parent), node.birth,
                          node.death, node.increment);
        out += buf;
    }
    return out;
}

inline ParticleTree parse_tree(const std::string& text) {
    ParticleTree tree;
    std::size_t pos = 0;
    auto next_line = [&](std::string& line) {
        if (pos >= text.size()) return false;
        const std::size_t end = text.find('\n', pos);
        line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        pos = end == std::string::npos ? text.size() : end + 1;
        return true;
    };
    std::string line;
    while (next_line(line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos && line.find("horizon") != std::string::npos)
                tree.horizon = std::strtod(line.c_str() + eq + 1, nullptr);
            continue;
        }
        if (line.rfind("node,", 0) == 0) continue;
        ParticleTree::Node node;
        long index = 0, parent = 0;
        char death_buf[64];
        if (std::sscanf(line.c_str(), "%ld,%ld,%lf,%63[^,],%lf", &index, &parent, &node.birth,
                        death_buf, &node.increment) != 5)
            throw std::invalid_argument("parse_tree: malformed row: " + line);
        node.parent = parent < 0 ? ParticleTree::npos : std::uint32_t(parent);
        node.death = std::strcmp(death_buf, "inf") == 0 ? std::numeric_limits<double>::infinity()
                                                        : std::strtod(death_buf, nullptr);
        if (long(tree.nodes.size()) != index)
            throw std::invalid_argument("parse_tree: rows must be in index order");
        tree.nodes.push_back(node);
    }
    // rebuild derived fields; breadth-first order makes one forward pass enough
    std::vector<std::uint32_t> seen_children(tree.nodes.size(), 0);
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        auto& node = tree.nodes[i];
        if (node.parent == ParticleTree::npos) {
            node.depth = 0;
            node.first_child = true;
            node.pos_end = node.increment;
        } else {
            const auto& par = tree.nodes[node.parent];
            node.depth = par.depth + 1;
            node.first_child = seen_children[node.parent]++ == 0;
            node.pos_end = par.pos_end + node.increment;
        }
    }
    return tree;
}

} // namespace blex
