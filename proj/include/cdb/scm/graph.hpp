#pragma once

// Two-level causal generative process: confounders -> generative factors ->
// image. Observed confounding is represented extensionally as constraint
// rules over factor values; unobserved confounding as named nuisance
// processes handled entirely inside renderers (never labeled).

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdb::scm {

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsatisfiableGraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FactorSpec {
    std::string name;
    std::vector<std::string> values;  // ordered, |values| >= 2

    std::size_t cardinality() const { return values.size(); }
    std::optional<std::size_t> value_index(const std::string& v) const;
};

// Conjunction of per-factor value-subset predicates. The rule "fires" (the
// combination is forbidden) when every predicate matches the assignment.
// Must span >= 2 distinct factors: a one-factor rule is a value removal,
// not confounding.
struct ConstraintRule {
    struct Predicate {
        std::string factor;
        std::vector<std::string> values;  // assignment value must be in this set
    };
    std::vector<Predicate> predicates;
    std::string reason;
};

struct NuisanceSpec {
    std::string name;
    std::string effect;  // renderer-level perturbation id
};

struct FactorAssignment {
    std::map<std::string, std::string> values;
    std::uint64_t seed = 0;

    const std::string& at(const std::string& factor) const;
};

struct CausalGraphSpec {
    std::vector<FactorSpec> factors;
    std::vector<ConstraintRule> observed_rules;
    std::vector<NuisanceSpec> nuisance;
    std::uint64_t seed = 0;

    const FactorSpec* find_factor(const std::string& name) const;
    // Throws SchemaError on duplicate factor names, cardinality < 2, or
    // rules referencing unknown factors/values or fewer than 2 factors.
    void validate() const;
    std::size_t support_product() const;
};

// True iff no rule's conjunction is fully satisfied by the assignment.
// Throws SchemaError when the assignment misses a factor or carries an
// undeclared factor/value.
bool check_constraints(const FactorAssignment& assignment, const CausalGraphSpec& graph);

inline constexpr std::size_t kDefaultEnumerationCap = 10'000'000;

// Deterministic lexicographic order over the declared factor/value order.
std::vector<FactorAssignment> enumerate_valid_assignments(
    const CausalGraphSpec& graph, std::size_t cap = kDefaultEnumerationCap);

// Uniform over the constrained support via rejection sampling. rng_state is
// caller-owned; same state -> same draw.
FactorAssignment sample_assignment(const CausalGraphSpec& graph, std::uint64_t& rng_state);

// splitmix64; the single RNG primitive used across the project so that
// (graph, seed) fully determines all sampled artifacts.
std::uint64_t next_random(std::uint64_t& state);
// Uniform draw in [0, bound).
std::uint64_t next_below(std::uint64_t& state, std::uint64_t bound);
double next_unit(std::uint64_t& state);  // [0, 1)

}  // namespace cdb::scm
