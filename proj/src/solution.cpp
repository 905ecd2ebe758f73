#include "moqd/solution.hpp"

#include <algorithm>
#include <stdexcept>

namespace moqd {

FeatureVector FeatureVector::clamp(std::array<double, 2> raw, const FeatureBounds& bounds)
{
    FeatureVector f;
    for (std::size_t i = 0; i < 2; ++i) {
        f.values[i] = std::clamp(raw[i], bounds.lo[i], bounds.hi[i]);
        if (f.values[i] != raw[i])
            f.clamped = true;
    }
    return f;
}

std::string_view to_string(VariationOperator op)
{
    switch (op) {
    case VariationOperator::Initialization:
        return "init";
    case VariationOperator::Strain:
        return "strain";
    case VariationOperator::Permutation:
        return "permutation";
    }
    return "unknown";
}

VariationOperator parse_operator(std::string_view text)
{
    if (text == "init")
        return VariationOperator::Initialization;
    if (text == "strain")
        return VariationOperator::Strain;
    if (text == "permutation")
        return VariationOperator::Permutation;
    throw std::invalid_argument("unknown variation operator '" + std::string(text) + "'");
}

} // namespace moqd
