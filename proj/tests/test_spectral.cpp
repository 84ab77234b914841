#include <doctest.h>

#include "snse/field_io.hpp"
#include "support.hpp"

#include <filesystem>

using namespace snse;
using test::convective_oracle;
using test::direct_sobolev_norm;
using test::grid_l2_norm;

namespace {

SpectralField gradient_field(const LatticePtr& lat, Rng& rng) {
    // f = grad g for a random scalar g: coefficients i n_j g-hat(n).
    SpectralField f(lat);
    const int h = lat->half();
    for (int k = -h; k <= h; ++k)
        for (int j = -h; j <= h; ++j)
            for (int i = -h; i <= h; ++i) {
                if (std::abs(i) == h || std::abs(j) == h || std::abs(k) == h)
                    continue;
                if (i == 0 && j == 0 && k == 0)
                    continue;
                if (k < 0 || (k == 0 && (j < 0 || (j == 0 && i < 0))))
                    continue;
                const Complex g(rng.next_normal(), rng.next_normal());
                const Eigen::Index idx = lat->index(i, j, k);
                const Eigen::Index cidx = lat->index(-i, -j, -k);
                const Complex iu(0.0, 1.0);
                f.c[0][idx] = iu * double(i) * g;
                f.c[1][idx] = iu * double(j) * g;
                f.c[2][idx] = iu * double(k) * g;
                f.c[0][cidx] = std::conj(f.c[0][idx]);
                f.c[1][cidx] = std::conj(f.c[1][idx]);
                f.c[2][cidx] = std::conj(f.c[2][idx]);
            }
    return f;
}

double rel_l2_diff(const SpectralField& a, const SpectralField& b) {
    SpectralField d = a;
    d -= b;
    const double scale = std::max(sobolev_norm(a, SobolevExponent::l2()),
                                  sobolev_norm(b, SobolevExponent::l2()));
    return scale > 0.0 ? sobolev_norm(d, SobolevExponent::l2()) / scale : 0.0;
}

} // namespace

TEST_CASE("leray annihilates gradients and fixes solenoidal fields") {
    auto lat = ModeLattice::make(8);
    Rng rng(7);
    const SpectralField grad = gradient_field(lat, rng);
    const SpectralField pg = leray_project(grad);
    CHECK(sobolev_norm(pg, SobolevExponent::l2()) <=
          1e-13 * sobolev_norm(grad, SobolevExponent::l2()));

    const SpectralField sol = random_solenoidal_field(lat, rng, 1.0);
    const SpectralField ps = leray_project(sol);
    CHECK(rel_l2_diff(sol, ps) <= 1e-13);
}

TEST_CASE("leray is idempotent and self-adjoint") {
    auto lat = ModeLattice::make(8);
    Rng rng(11);
    SpectralField f(lat);
    for (int c = 0; c < 3; ++c)
        for (Eigen::Index i = 0; i < lat->size(); ++i)
            f.c[c][i] = Complex(rng.next_normal(), rng.next_normal());
    f.enforce_mean_free();
    f.enforce_nyquist_free();

    const SpectralField pf = leray_project(f);
    const SpectralField ppf = leray_project(pf);
    CHECK(rel_l2_diff(ppf, pf) <= 1e-12);

    SpectralField g(lat);
    for (int c = 0; c < 3; ++c)
        for (Eigen::Index i = 0; i < lat->size(); ++i)
            g.c[c][i] = Complex(rng.next_normal(), rng.next_normal());
    g.enforce_mean_free();
    g.enforce_nyquist_free();
    const double lhs = inner_product(pf, g);
    const double rhs = inner_product(f, leray_project(g));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
}

TEST_CASE("sobolev norm: single mode closed form and Parseval") {
    auto lat = ModeLattice::make(8);
    SpectralField f(lat);
    f.c[0][lat->index(1, 0, 0)] = Complex(1.0, 0.0);
    f.c[0][lat->index(-1, 0, 0)] = Complex(1.0, 0.0);
    for (double alpha : {-0.5, 0.0, 0.5, 0.75, 1.5}) {
        const double expected = std::sqrt(2.0 * std::pow(2.0, alpha));
        CHECK(sobolev_norm(f, SobolevExponent(alpha)) == doctest::Approx(expected).epsilon(1e-14));
    }

    Rng rng(3);
    const SpectralField r = random_solenoidal_field(lat, rng, 2.5);
    FourierTransform xf(lat);
    CHECK(sobolev_norm(r, SobolevExponent::l2()) ==
          doctest::Approx(grid_l2_norm(r, xf)).epsilon(1e-12));
    CHECK(sobolev_norm(r, SobolevExponent(0.37)) ==
          doctest::Approx(direct_sobolev_norm(r, 0.37)).epsilon(1e-13));
}

TEST_CASE("sobolev norm: interpolation bound, monotonicity, lambda shift") {
    auto lat = ModeLattice::make(8);
    Rng rng(5);
    const SpectralField f = random_solenoidal_field(lat, rng, 1.0);

    const double h_half_sq = sobolev_norm_sq(f, SobolevExponent(0.5));
    const double l2 = sobolev_norm(f, SobolevExponent(0.0));
    const double h1 = sobolev_norm(f, SobolevExponent(1.0));
    CHECK(h_half_sq <= l2 * h1 * (1.0 + 1e-12));

    double prev = sobolev_norm(f, SobolevExponent(-0.5));
    for (double a : {0.0, 0.25, 0.5, 1.0, 1.5}) {
        const double cur = sobolev_norm(f, SobolevExponent(a));
        CHECK(cur >= prev);
        prev = cur;
    }

    const SpectralField shifted = lambda_shift(f, 0.7);
    CHECK(sobolev_norm(shifted, SobolevExponent(0.3)) ==
          doctest::Approx(sobolev_norm(f, SobolevExponent(1.0))).epsilon(1e-13));
}

TEST_CASE("poincare margin on mean-free fields") {
    auto lat = ModeLattice::make(8);
    Rng rng(17);
    const SpectralField f = random_solenoidal_field(lat, rng, 1.0);
    // (1+|n|^2) >= 2 off the zero mode, so ||f||_{H^a} <= ||f||_{H^{a+1}} / sqrt(2).
    CHECK(sobolev_norm(f, SobolevExponent(0.5)) <=
          sobolev_norm(f, SobolevExponent(1.5)) / std::sqrt(2.0) * (1.0 + 1e-12));
}

TEST_CASE("transform round trip is exact on band-limited fields") {
    auto lat = ModeLattice::make(16);
    FourierTransform xf(lat);
    Rng rng(23);
    const SpectralField f = random_solenoidal_field(lat, rng, 1.0);

    std::array<Eigen::ArrayXd, 3> grids;
    xf.field_to_grid(f, grids);
    SpectralField back(lat);
    for (int c = 0; c < 3; ++c)
        xf.to_cube(grids[c], back.c[c]);
    CHECK(rel_l2_diff(f, back) <= 1e-12);

    // and real -> spectral -> real
    Eigen::ArrayXd again;
    xf.to_grid(back.c[0], again);
    CHECK((again - grids[0]).abs().maxCoeff() <= 1e-12 * grids[0].abs().maxCoeff());
}

TEST_CASE("advective term: zero inputs and solenoidal rejection") {
    auto lat = ModeLattice::make(8);
    FourierTransform xf(lat);
    Rng rng(29);
    const SpectralField z = SpectralField::zero(lat);
    const SpectralField u = random_solenoidal_field(lat, rng, 1.0);
    CHECK(sobolev_norm(advective_term(u, z, xf), SobolevExponent::l2()) <= 1e-16);
    CHECK(sobolev_norm(advective_term(z, u, xf), SobolevExponent::l2()) <= 1e-16);

    const SpectralField grad = gradient_field(lat, rng);
    CHECK_THROWS_AS((void)advective_term(grad, u, xf), std::invalid_argument);
}

TEST_CASE("divergence form equals convective form after dealiasing") {
    auto lat = ModeLattice::make(16);
    FourierTransform xf(lat);
    Rng rng(31);

    SUBCASE("taylor-green pair") {
        const SpectralField u = taylor_green_field(lat, 1.0);
        const SpectralField w = random_solenoidal_field(lat, rng, 1.0);
        const SpectralField a = advective_term(u, w, xf);
        const SpectralField b = convective_oracle(u, w, xf);
        CHECK(rel_l2_diff(a, b) <= 1e-10);
    }
    SUBCASE("random solenoidal pair") {
        const SpectralField u = random_solenoidal_field(lat, rng, 0.7);
        const SpectralField w = random_solenoidal_field(lat, rng, 1.3);
        CHECK(rel_l2_diff(advective_term(u, w, xf), convective_oracle(u, w, xf)) <= 1e-10);
    }
}

TEST_CASE("advection is skew-symmetric: <P(u.grad u), u> = 0") {
    auto lat = ModeLattice::make(16);
    FourierTransform xf(lat);
    Rng rng(37);
    for (int rep = 0; rep < 3; ++rep) {
        const SpectralField u = random_solenoidal_field(lat, rng, 1.0 + rep);
        const SpectralField adv = advective_term(u, u, xf);
        const double ip = inner_product(adv, u);
        const double scale = sobolev_norm(adv, SobolevExponent::l2()) *
                             sobolev_norm(u, SobolevExponent::l2());
        CHECK(std::abs(ip) <= 1e-10 * std::max(scale, 1e-30));
    }
}

TEST_CASE("advective term output stays solenoidal and dealiased") {
    auto lat = ModeLattice::make(16);
    FourierTransform xf(lat);
    Rng rng(41);
    const SpectralField u = random_solenoidal_field(lat, rng, 1.0);
    const SpectralField adv = advective_term(u, u, xf);
    CHECK(relative_divergence(adv) <= 1e-12);
    for (int c = 0; c < 3; ++c) {
        const Coeffs outside = lat->dealias_mask().select(Complex(0.0, 0.0), adv.c[c]);
        CHECK(outside.abs().maxCoeff() == 0.0);
    }
}

TEST_CASE("product inequality: trivial, single-mode closed form, ensemble max") {
    auto lat = ModeLattice::make(16);
    FourierTransform xfp(lat, 2);

    const SpectralField z = SpectralField::zero(lat);
    const auto zero_rep = verify_product_inequality(z, z, SobolevExponent(0.0), xfp);
    CHECK(zero_rep.ratio == 0.0);

    // single mode n = (2,1,0), coefficient orthogonal to n (solenoidal)
    SpectralField v(lat, true);
    const Eigen::Index idx = lat->index(2, 1, 0);
    const Eigen::Index cidx = lat->index(-2, -1, 0);
    const std::array<Complex, 3> cvec = {Complex(1.0, 0.5), Complex(-2.0, -1.0),
                                         Complex(0.5, 0.0)};
    for (int c = 0; c < 3; ++c) {
        v.c[c][idx] = cvec[size_t(c)];
        v.c[c][cidx] = std::conj(cvec[size_t(c)]);
    }

    const double a = 0.25;
    const auto rep = verify_product_inequality(v, v, SobolevExponent(a), xfp);

    // closed form: the tensor spectrum sits at 0 and +-2n
    const double nsq = 5.0;
    double lhs_sq = 0.0;
    for (int m = 0; m < 3; ++m)
        for (int j = 0; j < 3; ++j) {
            const Complex at2n = cvec[size_t(m)] * cvec[size_t(j)];
            const double at0 = 2.0 * (cvec[size_t(m)] * std::conj(cvec[size_t(j)])).real();
            lhs_sq += std::pow(1.0 + 4.0 * nsq, 0.5 + a) * 2.0 * std::norm(at2n);
            lhs_sq += at0 * at0;
        }
    double csq = 0.0;
    for (const auto& cc : cvec)
        csq += std::norm(cc);
    const double v_lo = std::sqrt(2.0 * std::pow(1.0 + nsq, 0.5 + a) * csq);
    const double v_hi = std::sqrt(2.0 * std::pow(1.0 + nsq, 1.5 + a) * csq);
    const double rhs = std::pow(v_lo, 1.0 + a) * std::pow(v_hi, 1.0 - a);
    CHECK(rep.lhs == doctest::Approx(std::sqrt(lhs_sq)).epsilon(1e-10));
    CHECK(rep.rhs_core == doctest::Approx(rhs).epsilon(1e-12));

    // ensemble max ratio at alpha = 0 stays bounded (resolution constant C_N)
    Rng rng(43);
    double max_ratio = 0.0;
    for (int i = 0; i < 50; ++i) {
        const SpectralField f = random_solenoidal_field(lat, rng, 1.0);
        const SpectralField g = random_solenoidal_field(lat, rng, 1.0);
        max_ratio = std::max(max_ratio,
                             verify_product_inequality(f, g, SobolevExponent(0.0), xfp).ratio);
    }
    CHECK(max_ratio > 0.0);
    CHECK(max_ratio <= 2.0); // calibrated C_N margin at N = 16
}

TEST_CASE("field snapshot round-trips bit-exactly") {
    auto lat = ModeLattice::make(8);
    Rng rng(47);
    const SpectralField f = random_solenoidal_field(lat, rng, 0.123456789);
    const auto j1 = field_to_json(f, 0.25);
    double delta = 0.0;
    const SpectralField g = field_from_json(j1, &delta);
    CHECK(delta == 0.25);
    const auto j2 = field_to_json(g, delta);
    CHECK(j1.dump() == j2.dump());
    for (int c = 0; c < 3; ++c)
        CHECK((f.c[c] == g.c[c]).all());

    const std::string path = (std::filesystem::temp_directory_path() / "snse_field.json").string();
    save_field(f, 0.25, path);
    const SpectralField h = load_field(path);
    CHECK(field_to_json(h, 0.25).dump() == j1.dump());
    std::filesystem::remove(path);
}

TEST_CASE("lattice invariants: closure, zero mode, dealias radius") {
    auto lat = ModeLattice::make(16);
    CHECK(lat->dealias_radius() == 5);
    CHECK(lat->size() == 17 * 17 * 17);
    const int h = lat->half();
    for (int i = -h; i <= h; i += 3)
        for (int j = -h; j <= h; j += 5) {
            CHECK(lat->index(i, j, 0) >= 0);
            CHECK(lat->index(-i, -j, 0) >= 0);
        }
    CHECK(lat->n_sq()[lat->zero_index()] == 0.0);
    // 3 kd < N keeps quadratic products of masked fields alias-free
    CHECK(3 * lat->dealias_radius() < lat->n());
}
