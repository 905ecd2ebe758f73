#pragma once

/// @file pareto.hpp
/// Dominance, bounded Pareto fronts, 2-D hypervolume and crowding distance.
/// All objectives follow the maximization convention.

#include <cstddef>
#include <concepts>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace moqd {

/// Objective scores of one solution. Values must be finite.
class ObjectiveVector {
public:
    ObjectiveVector() = default;
    ObjectiveVector(std::initializer_list<double> values);
    explicit ObjectiveVector(std::vector<double> values);

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const ObjectiveVector&, const ObjectiveVector&) = default;

private:
    std::vector<double> values_;
};

/// True iff `a` is no worse than `b` everywhere and strictly better somewhere.
/// Throws std::invalid_argument on length mismatch.
[[nodiscard]] bool dominates(const ObjectiveVector& a, const ObjectiveVector& b);

/// Exact area dominated by `front` relative to `ref`. Points are clipped to the
/// reference first, so anything below it contributes nothing.
/// Throws std::domain_error unless every vector has two objectives.
[[nodiscard]] double hypervolume2d(std::span<const ObjectiveVector> front, const ObjectiveVector& ref);

/// NSGA-II crowding distance normalized by the front's own per-objective range.
/// Extremes of every objective get +infinity.
[[nodiscard]] std::vector<double> crowding_distances(std::span<const ObjectiveVector> front);

/// Mutually non-dominated subset of `points` (first occurrence kept for duplicates),
/// in input order.
[[nodiscard]] std::vector<std::size_t> non_dominated_indices(std::span<const ObjectiveVector> points);

inline const ObjectiveVector& objectives_of(const ObjectiveVector& v) noexcept { return v; }

template <typename T>
concept HasObjectives = requires(const T& t) {
    { objectives_of(t) } -> std::convertible_to<const ObjectiveVector&>;
};

struct InsertOutcome {
    enum class Kind : std::uint8_t { Added, AddedWithEviction, Discarded };

    Kind kind = Kind::Discarded;
    /// Insertion sequence number of the evicted member, when kind == AddedWithEviction.
    std::uint64_t evicted_sequence = 0;

    [[nodiscard]] bool stored() const noexcept { return kind != Kind::Discarded; }
};

/// Bounded set of mutually non-dominated entries. Members are kept in insertion
/// order; when the bound is exceeded the member with the smallest crowding
/// distance is evicted, earliest insertion first on ties.
template <HasObjectives T>
class ParetoFront {
public:
    explicit ParetoFront(std::size_t max_size) : max_size_(max_size)
    {
        if (max_size_ == 0)
            throw std::invalid_argument("ParetoFront: max_size must be positive");
    }

    InsertOutcome insert(T candidate)
    {
        const ObjectiveVector& c = objectives_of(candidate);
        for (const auto& m : members_) {
            const ObjectiveVector& o = objectives_of(m.value);
            if (o == c || dominates(o, c))
                return {InsertOutcome::Kind::Discarded, 0};
        }
        std::erase_if(members_, [&](const Member& m) { return dominates(c, objectives_of(m.value)); });
        const std::uint64_t seq = next_sequence_++;
        members_.push_back(Member{std::move(candidate), seq});

        if (members_.size() <= max_size_)
            return {InsertOutcome::Kind::Added, 0};

        const std::size_t victim = eviction_index();
        const std::uint64_t evicted = members_[victim].sequence;
        members_.erase(members_.begin() + static_cast<std::ptrdiff_t>(victim));
        if (evicted == seq)
            return {InsertOutcome::Kind::Discarded, 0};
        return {InsertOutcome::Kind::AddedWithEviction, evicted};
    }

    [[nodiscard]] std::size_t size() const noexcept { return members_.size(); }
    [[nodiscard]] bool empty() const noexcept { return members_.empty(); }
    [[nodiscard]] std::size_t max_size() const noexcept { return max_size_; }
    [[nodiscard]] const T& operator[](std::size_t i) const { return members_[i].value; }
    [[nodiscard]] std::uint64_t sequence(std::size_t i) const { return members_[i].sequence; }

    [[nodiscard]] std::vector<ObjectiveVector> objectives() const
    {
        std::vector<ObjectiveVector> out;
        out.reserve(members_.size());
        for (const auto& m : members_)
            out.push_back(objectives_of(m.value));
        return out;
    }

    template <typename F>
    void for_each(F&& f) const
    {
        for (const auto& m : members_)
            f(m.value);
    }

private:
    struct Member {
        T value;
        std::uint64_t sequence;
    };

    [[nodiscard]] std::size_t eviction_index() const
    {
        const auto objs = objectives();
        const auto dist = crowding_distances(objs);
        std::size_t best = 0;
        // members_ is in insertion order, so strict < keeps the earliest on ties
        for (std::size_t i = 1; i < dist.size(); ++i)
            if (dist[i] < dist[best])
                best = i;
        return best;
    }

    std::vector<Member> members_;
    std::size_t max_size_;
    std::uint64_t next_sequence_ = 0;
};

} // namespace moqd
