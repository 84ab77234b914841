#pragma once

#include "snse/lattice.hpp"

#include <complex>

namespace snse {

using Coeffs = Eigen::ArrayXcd;
using Complex = std::complex<double>;

// Three-component Fourier coefficient array on a ModeLattice: the state u,
// the cascade pieces v^(k), and every forcing/noise column share this shape.
// Fields are mean-free by construction (zero mode pinned to 0); `solenoidal`
// records whether the field is known divergence-free.
struct SpectralField {
    LatticePtr lattice;
    std::array<Coeffs, 3> c;
    bool solenoidal = false;

    SpectralField() = default;

    explicit SpectralField(LatticePtr lat, bool solenoidal_flag = false)
        : lattice(std::move(lat)), solenoidal(solenoidal_flag) {
        for (auto& comp : c)
            comp = Coeffs::Zero(lattice->size());
    }

    static SpectralField zero(LatticePtr lat) { return SpectralField(std::move(lat), true); }

    Eigen::Index size() const { return lattice ? lattice->size() : 0; }

    void set_zero() {
        for (auto& comp : c)
            comp.setZero();
    }

    void enforce_mean_free() {
        const Eigen::Index z = lattice->zero_index();
        for (auto& comp : c)
            comp[z] = Complex(0.0, 0.0);
    }

    void enforce_nyquist_free() {
        const auto& ny = lattice->nyquist_mask();
        for (auto& comp : c)
            comp = ny.select(Complex(0.0, 0.0), comp);
    }

    SpectralField& operator+=(const SpectralField& other) {
        for (int j = 0; j < 3; ++j)
            c[j] += other.c[j];
        solenoidal = solenoidal && other.solenoidal;
        return *this;
    }

    SpectralField& operator-=(const SpectralField& other) {
        for (int j = 0; j < 3; ++j)
            c[j] -= other.c[j];
        solenoidal = solenoidal && other.solenoidal;
        return *this;
    }

    SpectralField& operator*=(double s) {
        for (auto& comp : c)
            comp *= s;
        return *this;
    }
};

inline SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
inline SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
inline SpectralField operator*(double s, SpectralField f) { return f *= s; }

inline void check_same_lattice(const SpectralField& a, const SpectralField& b) {
    if (a.lattice.get() != b.lattice.get() &&
        (!a.lattice || !b.lattice || a.lattice->n() != b.lattice->n()))
        throw std::invalid_argument("fields live on different lattices");
}

} // namespace snse
