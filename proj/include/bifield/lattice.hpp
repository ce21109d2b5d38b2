// Integer lattice vectors and periodic torus geometry.  Sites of the torus
// (side L in each of d axes) are addressed by a flat index in [0, L^d),
// axis 0 fastest.  Coordinates live in [0, L).
#pragma once

#include <cstdint>
#include <vector>

#include "bifield/errors.hpp"

namespace bifield {

using IntVec = std::vector<int>;

inline bool is_zero_vec(const IntVec& v) {
    for (int c : v)
        if (c != 0) return false;
    return true;
}

inline IntVec negated(const IntVec& v) {
    IntVec out(v);
    for (int& c : out) c = -c;
    return out;
}

class TorusGeometry {
  public:
    TorusGeometry(int dimension, int side) : dim_(dimension), side_(side) {
        if (dimension < 1 || dimension > 3)
            throw Error(ErrorKind::validation_error, "torus dimension must be 1, 2 or 3");
        if (side < 2)
            throw Error(ErrorKind::validation_error, "torus side must be at least 2");
        volume_ = 1;
        for (int a = 0; a < dim_; ++a) volume_ *= static_cast<std::int64_t>(side_);
    }

    int dimension() const noexcept { return dim_; }
    int side() const noexcept { return side_; }
    std::int64_t volume() const noexcept { return volume_; }

    // Reduce an arbitrary integer coordinate to [0, side).
    int wrap_coord(long long c) const noexcept {
        long long r = c % side_;
        if (r < 0) r += side_;
        return static_cast<int>(r);
    }

    std::int64_t encode(const IntVec& coords) const {
        std::int64_t idx = 0, stride = 1;
        for (int a = 0; a < dim_; ++a) {
            idx += stride * wrap_coord(coords[a]);
            stride *= side_;
        }
        return idx;
    }

    IntVec decode(std::int64_t idx) const {
        IntVec coords(dim_);
        for (int a = 0; a < dim_; ++a) {
            coords[a] = static_cast<int>(idx % side_);
            idx /= side_;
        }
        return coords;
    }

    // Flat index of site + displacement (with wrap-around).
    std::int64_t displaced(std::int64_t idx, const IntVec& disp) const {
        std::int64_t out = 0, stride = 1;
        for (int a = 0; a < dim_; ++a) {
            int c = static_cast<int>(idx % side_);
            idx /= side_;
            out += stride * wrap_coord(static_cast<long long>(c) + disp[a]);
            stride *= side_;
        }
        return out;
    }

    // Flat index of the difference x - y (component-wise, wrapped).
    std::int64_t subtract(std::int64_t x, std::int64_t y) const {
        std::int64_t out = 0, stride = 1;
        for (int a = 0; a < dim_; ++a) {
            int cx = static_cast<int>(x % side_);
            int cy = static_cast<int>(y % side_);
            x /= side_;
            y /= side_;
            out += stride * wrap_coord(static_cast<long long>(cx) - cy);
            stride *= side_;
        }
        return out;
    }

    bool operator==(const TorusGeometry& o) const noexcept {
        return dim_ == o.dim_ && side_ == o.side_;
    }

  private:
    int dim_;
    int side_;
    std::int64_t volume_;
};

}  // namespace bifield
