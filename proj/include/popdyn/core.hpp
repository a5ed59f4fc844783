#pragma once

// Shared domain types for the popularity-biased market model.
//
// Items are identified by their quality rank 1..N (1 = lowest quality).
// Every probability vector in this library is indexed by item id, never by
// popularity rank; rank only enters through the selection law.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace popdyn {

/// Error carrying a short machine-readable code next to the message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

inline constexpr double kProbSumTolerance = 1e-9;
inline constexpr double kNormalizeTolerance = 1e-12;
inline constexpr double kTieTolerance = 1e-12;

enum class RepetitionMode { WithRepetition, WithoutRepetition };

std::string to_string(RepetitionMode mode);
/// Accepts "with-repetition"/"with-rep" and "without-repetition"/"without-rep".
RepetitionMode parse_repetition_mode(const std::string& text);

/// Popularity ordering of the N items. `order` lists item ids by increasing
/// popularity, so order.back() is the most popular item and the identity is
/// the natural permutation.
class Permutation {
public:
    Permutation() = default;
    explicit Permutation(std::vector<int> order);

    static Permutation identity(int n);
    /// Natural order with the two highest-quality items swapped: 1,...,N,N-1.
    static Permutation critical(int n);
    /// Builds from a most-popular-first listing.
    static Permutation from_most_popular_first(std::vector<int> order);

    int size() const noexcept { return static_cast<int>(order_.size()); }
    const std::vector<int>& order() const noexcept { return order_; }
    std::vector<int> most_popular_first() const;
    int most_popular() const { return order_.back(); }

    /// Popularity rank of item `item` (1 = most popular).
    int rank_of(int item) const;
    /// rank[i-1] = popularity rank of item i.
    std::vector<int> ranks() const;

    bool is_natural() const noexcept;
    std::string to_string(char sep = ',') const;

    friend bool operator==(const Permutation&, const Permutation&) = default;
    friend auto operator<=>(const Permutation& a, const Permutation& b) { return a.order_ <=> b.order_; }

private:
    std::vector<int> order_;
};

struct WeightVector {
    std::vector<double> weights;
    std::uint64_t round = 0;

    int size() const noexcept { return static_cast<int>(weights.size()); }
    /// w / sum(w); throws if any weight is not positive.
    WeightVector normalized() const;
};

struct RankVector {
    std::vector<int> ranks;  // ranks[i-1] = r_i, 1 = most popular

    int size() const noexcept { return static_cast<int>(ranks.size()); }
    /// True when the ranks form a permutation of 1..N.
    bool is_strict() const;
    /// Inverse image of a strict rank vector.
    Permutation to_permutation() const;
};

struct WinProbVector {
    std::vector<double> probs;  // probs[i-1] = b_i

    int size() const noexcept { return static_cast<int>(probs.size()); }
    double operator[](int item) const { return probs.at(static_cast<std::size_t>(item - 1)); }
    /// Throws unless entries are non-negative and sum to 1 within kProbSumTolerance.
    void check() const;
};

/// One user class: its probability and its perceived quality order
/// (item ids listed from lowest to highest perceived quality).
struct UserClass {
    double probability = 1.0;
    std::vector<int> quality_order;
};

/// Discrete law over the discrimination parameter; probs[k-1] = p_k.
struct KDistribution {
    std::vector<double> probs;

    int max_k() const noexcept { return static_cast<int>(probs.size()); }
    double p(int k) const { return (k >= 1 && k <= max_k()) ? probs[static_cast<std::size_t>(k - 1)] : 0.0; }
    static KDistribution degenerate(int k);
};

using Discrimination = std::variant<int, KDistribution>;

struct MarketConfig {
    int n_items = 0;
    double alpha = 0.0;
    Discrimination discrimination = 1;
    RepetitionMode repetition_mode = RepetitionMode::WithoutRepetition;
    double naive_fraction = 0.0;
    std::vector<UserClass> classes;        // empty means one identity class
    std::vector<std::int64_t> initial_weights;  // empty means all ones

    bool has_fixed_k() const noexcept { return std::holds_alternative<int>(discrimination); }
    int fixed_k() const { return std::get<int>(discrimination); }
    /// The K law, with a fixed K expressed as a degenerate distribution.
    KDistribution k_distribution() const;

    /// Classes with the implicit identity class materialised.
    std::vector<UserClass> effective_classes() const;
    std::vector<std::int64_t> effective_initial_weights() const;

    /// Convenience builder for the single-class, fixed-K setting.
    static MarketConfig basic(int n, int k, double alpha, RepetitionMode mode);
};

/// Returns cfg unchanged when every invariant holds, otherwise throws an
/// Error with code "invalid_config" naming the first violated invariant.
const MarketConfig& validate_config(const MarketConfig& cfg);

/// r_i = |{j : w_j >= w_i}|. Tied items share the largest rank of their block.
RankVector compute_ranks(const WeightVector& w);

/// Strict order by descending weight with ties broken by ascending item id.
/// The result uses the Permutation convention (increasing popularity).
Permutation rank_with_tiebreak(std::span<const double> weights);
inline Permutation rank_with_tiebreak(const WeightVector& w) { return rank_with_tiebreak(w.weights); }

/// Lexicographic index <-> permutation (Lehmer code), used by the
/// exhaustive scans. Valid for N <= 20.
std::uint64_t factorial(int n);
std::uint64_t permutation_index(const Permutation& perm);
Permutation permutation_at(int n, std::uint64_t index);

}  // namespace popdyn
