#include "cdb/scm/graph.hpp"

#include <algorithm>
#include <set>

namespace cdb::scm {

std::optional<std::size_t> FactorSpec::value_index(const std::string& v) const {
    const auto it = std::find(values.begin(), values.end(), v);
    if (it == values.end()) return std::nullopt;
    return static_cast<std::size_t>(it - values.begin());
}

const std::string& FactorAssignment::at(const std::string& factor) const {
    const auto it = values.find(factor);
    if (it == values.end()) throw SchemaError("assignment has no factor '" + factor + "'");
    return it->second;
}

const FactorSpec* CausalGraphSpec::find_factor(const std::string& name) const {
    for (const auto& f : factors)
        if (f.name == name) return &f;
    return nullptr;
}

void CausalGraphSpec::validate() const {
    std::set<std::string> names;
    for (const auto& f : factors) {
        if (f.values.size() < 2)
            throw SchemaError("factor '" + f.name + "' needs >= 2 values");
        if (!names.insert(f.name).second)
            throw SchemaError("duplicate factor name '" + f.name + "'");
    }
    for (const auto& rule : observed_rules) {
        std::set<std::string> rule_factors;
        for (const auto& pred : rule.predicates) {
            const FactorSpec* f = find_factor(pred.factor);
            if (!f) throw SchemaError("rule references unknown factor '" + pred.factor + "'");
            if (pred.values.empty())
                throw SchemaError("rule predicate on '" + pred.factor + "' has no values");
            for (const auto& v : pred.values)
                if (!f->value_index(v))
                    throw SchemaError("rule references unknown value '" + v + "' of factor '" +
                                      pred.factor + "'");
            rule_factors.insert(pred.factor);
        }
        if (rule_factors.size() < 2)
            throw SchemaError("constraint rule must span >= 2 distinct factors (got " +
                              std::to_string(rule_factors.size()) + ")");
    }
}

std::size_t CausalGraphSpec::support_product() const {
    std::size_t prod = 1;
    for (const auto& f : factors) prod *= f.cardinality();
    return prod;
}

namespace {

bool rule_fires(const ConstraintRule& rule, const FactorAssignment& a) {
    for (const auto& pred : rule.predicates) {
        const std::string& v = a.at(pred.factor);
        if (std::find(pred.values.begin(), pred.values.end(), v) == pred.values.end())
            return false;
    }
    return true;  // vacuous conjunction fires
}

}  // namespace

bool check_constraints(const FactorAssignment& assignment, const CausalGraphSpec& graph) {
    for (const auto& f : graph.factors) {
        const std::string& v = assignment.at(f.name);
        if (!f.value_index(v))
            throw SchemaError("unknown value '" + v + "' for factor '" + f.name + "'");
    }
    for (const auto& [name, v] : assignment.values)
        if (!graph.find_factor(name))
            throw SchemaError("assignment has undeclared factor '" + name + "'");
    for (const auto& rule : graph.observed_rules)
        if (rule_fires(rule, assignment)) return false;
    return true;
}

std::vector<FactorAssignment> enumerate_valid_assignments(const CausalGraphSpec& graph,
                                                          std::size_t cap) {
    graph.validate();
    const std::size_t total = graph.support_product();
    if (total > cap)
        throw SizeError("assignment product " + std::to_string(total) +
                        " exceeds enumeration cap " + std::to_string(cap));
    std::vector<FactorAssignment> out;
    std::vector<std::size_t> idx(graph.factors.size(), 0);
    while (true) {
        FactorAssignment a;
        for (std::size_t i = 0; i < graph.factors.size(); ++i)
            a.values[graph.factors[i].name] = graph.factors[i].values[idx[i]];
        if (check_constraints(a, graph)) out.push_back(std::move(a));
        // odometer increment, last factor fastest
        std::size_t pos = graph.factors.size();
        while (pos > 0) {
            --pos;
            if (++idx[pos] < graph.factors[pos].cardinality()) break;
            idx[pos] = 0;
            if (pos == 0) return out;
        }
    }
}

FactorAssignment sample_assignment(const CausalGraphSpec& graph, std::uint64_t& rng_state) {
    graph.validate();
    // Rejection sampling keeps the two-level property: each factor is drawn
    // from its own marginal, dependence enters only through the accept step.
    constexpr int kMaxRejections = 1 << 16;
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
        FactorAssignment a;
        a.seed = rng_state;
        for (const auto& f : graph.factors)
            a.values[f.name] = f.values[next_below(rng_state, f.cardinality())];
        if (check_constraints(a, graph)) return a;
    }
    // Rejection budget exhausted: prove (un)satisfiability by enumeration.
    const auto valid = enumerate_valid_assignments(graph);
    if (valid.empty())
        throw UnsatisfiableGraphError("graph admits no valid assignment");
    FactorAssignment a = valid[next_below(rng_state, valid.size())];
    a.seed = rng_state;
    return a;
}

std::uint64_t next_random(std::uint64_t& state) {
    // splitmix64 (Steele, Lea, Flood 2014)
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t next_below(std::uint64_t& state, std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("next_below: bound 0");
    // Rejection to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
        r = next_random(state);
    } while (r >= limit);
    return r % bound;
}

double next_unit(std::uint64_t& state) {
    return static_cast<double>(next_random(state) >> 11) * 0x1.0p-53;
}

}  // namespace cdb::scm
