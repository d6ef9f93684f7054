#pragma once

#include "ancient/geometry.hpp"

#include <cstddef>
#include <vector>

namespace ancient {

/// Real values on every node of a SpaceTimeGrid, stored row-major as
/// (time, x0, x1[, x2]).
struct SampledField {
    SpaceTimeGrid grid;
    std::vector<double> values;

    explicit SampledField(SpaceTimeGrid g);
    SampledField(SpaceTimeGrid g, std::vector<double> v);

    std::size_t index(int k, int i, int j, int l = 0) const noexcept {
        const std::size_t n1 = static_cast<std::size_t>(grid.n_cross(0));
        const std::size_t n2 = grid.domain().n() == 2 ? static_cast<std::size_t>(grid.n_cross(1)) : 1;
        return ((static_cast<std::size_t>(k) * static_cast<std::size_t>(grid.n0()) + static_cast<std::size_t>(i)) * n1 +
                static_cast<std::size_t>(j)) * n2 + static_cast<std::size_t>(l);
    }
    double at(int k, int i, int j, int l = 0) const noexcept { return values[index(k, i, j, l)]; }
    double& at(int k, int i, int j, int l = 0) noexcept { return values[index(k, i, j, l)]; }
    int n2() const noexcept { return grid.domain().n() == 2 ? grid.n_cross(1) : 1; }
    SpacePoint point(int i, int j, int l = 0) const;
};

} // namespace ancient
