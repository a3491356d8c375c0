#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <functional>

#include "pam/errors.hpp"

namespace pam {

inline constexpr int kMaxDim = 8;

// A lattice point / offset in Z^d, d <= kMaxDim. Unused coordinates are 0.
struct Site {
    std::array<std::int32_t, kMaxDim> c{};

    std::int32_t& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
    std::int32_t operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

    bool operator==(const Site&) const = default;

    Site operator+(const Site& o) const {
        Site r;
        for (int i = 0; i < kMaxDim; ++i) r.c[i] = c[i] + o.c[i];
        return r;
    }
    Site operator-(const Site& o) const {
        Site r;
        for (int i = 0; i < kMaxDim; ++i) r.c[i] = c[i] - o.c[i];
        return r;
    }
    Site operator-() const {
        Site r;
        for (int i = 0; i < kMaxDim; ++i) r.c[i] = -c[i];
        return r;
    }
};

struct SiteHash {
    std::size_t operator()(const Site& s) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (int i = 0; i < kMaxDim; ++i) {
            h ^= static_cast<std::uint32_t>(s.c[i]);
            h *= 0x100000001b3ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

inline Site make_site(std::initializer_list<std::int32_t> coords) {
    Site s;
    int i = 0;
    for (auto v : coords) s[i++] = v;
    return s;
}

// Periodic box of even side L in dimension d; finite proxy for Z^d.
class Torus {
public:
    Torus(int side, int dim) : side_(side), dim_(dim) {
        if (dim < 1 || dim > kMaxDim) throw InvalidDimension("torus dimension out of range");
        if (side < 4 || side % 2 != 0) throw ConfigError("torus side must be even and >= 4");
        site_count_ = 1;
        for (int i = 0; i < dim; ++i) {
            site_count_ *= static_cast<std::int64_t>(side);
            if (site_count_ > (std::int64_t{1} << 34))
                throw ConfigError("torus site count exceeds addressable budget");
        }
    }

    int side() const { return side_; }
    int dim() const { return dim_; }
    std::int64_t site_count() const { return site_count_; }

    std::int32_t wrap(std::int64_t x) const {
        std::int64_t m = x % side_;
        return static_cast<std::int32_t>(m < 0 ? m + side_ : m);
    }

    std::int64_t index(const Site& s) const {
        std::int64_t idx = 0;
        for (int i = dim_ - 1; i >= 0; --i) idx = idx * side_ + wrap(s[i]);
        return idx;
    }

    Site site_at(std::int64_t idx) const {
        Site s;
        for (int i = 0; i < dim_; ++i) {
            s[i] = static_cast<std::int32_t>(idx % side_);
            idx /= side_;
        }
        return s;
    }

    std::int64_t add_offset(std::int64_t idx, const Site& z) const {
        Site s = site_at(idx);
        for (int i = 0; i < dim_; ++i) s[i] = wrap(static_cast<std::int64_t>(s[i]) + z[i]);
        return index(s);
    }

private:
    int side_;
    int dim_;
    std::int64_t site_count_;
};

}  // namespace pam
