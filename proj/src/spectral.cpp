#include "snse/spectral.hpp"

#include "snse/rng.hpp"

namespace snse {

void leray_project_in_place(SpectralField& f) {
    const auto& lat = *f.lattice;
    const Eigen::ArrayXd n1 = lat.n1().cast<double>();
    const Eigen::ArrayXd n2 = lat.n2().cast<double>();
    const Eigen::ArrayXd n3 = lat.n3().cast<double>();

    Coeffs dot = n1 * f.c[0] + n2 * f.c[1] + n3 * f.c[2];
    Eigen::ArrayXd inv_nsq = lat.n_sq();
    inv_nsq[lat.zero_index()] = 1.0;
    dot /= inv_nsq;

    f.c[0] -= n1 * dot;
    f.c[1] -= n2 * dot;
    f.c[2] -= n3 * dot;
    f.enforce_mean_free();
    f.solenoidal = true;
}

SpectralField leray_project(const SpectralField& f) {
    SpectralField out = f;
    leray_project_in_place(out);
    return out;
}

double sobolev_norm_sq(const SpectralField& f, SobolevExponent alpha) {
    const auto& w = f.lattice->sobolev_weights(alpha.value);
    double sum = 0.0;
    for (int j = 0; j < 3; ++j)
        sum += (w * f.c[j].abs2()).sum();
    return sum;
}

double sobolev_norm(const SpectralField& f, SobolevExponent alpha) {
    return std::sqrt(sobolev_norm_sq(f, alpha));
}

double grad_norm_sq(const SpectralField& f) {
    const auto& nsq = f.lattice->n_sq();
    double sum = 0.0;
    for (int j = 0; j < 3; ++j)
        sum += (nsq * f.c[j].abs2()).sum();
    return sum;
}

SpectralField lambda_shift(const SpectralField& f, double beta) {
    SpectralField out = f;
    const Eigen::ArrayXd w = (1.0 + f.lattice->n_sq()).pow(beta / 2.0);
    for (int j = 0; j < 3; ++j)
        out.c[j] *= w;
    return out;
}

double inner_product(const SpectralField& a, const SpectralField& b) {
    check_same_lattice(a, b);
    double sum = 0.0;
    for (int j = 0; j < 3; ++j)
        sum += (a.c[j] * b.c[j].conjugate()).real().sum();
    return sum;
}

double relative_divergence(const SpectralField& f) {
    const auto& lat = *f.lattice;
    const Coeffs dot = lat.n1().cast<double>() * f.c[0] + lat.n2().cast<double>() * f.c[1] +
                       lat.n3().cast<double>() * f.c[2];
    double max_div = 0.0;
    double max_coef = 0.0;
    for (int j = 0; j < 3; ++j)
        max_coef = std::max(max_coef, f.c[j].abs().maxCoeff());
    max_div = dot.abs().maxCoeff();
    if (max_coef == 0.0)
        return 0.0;
    return max_div / (max_coef * std::sqrt(lat.n_sq().maxCoeff()));
}

void apply_dealias_mask(SpectralField& f) {
    const auto& mask = f.lattice->dealias_mask();
    for (int j = 0; j < 3; ++j)
        f.c[j] = mask.select(f.c[j], Complex(0.0, 0.0));
}

SpectralField advective_term(const SpectralField& u, const SpectralField& w, FourierTransform& xf) {
    check_same_lattice(u, w);
    if (!u.solenoidal && relative_divergence(u) > 1e-10)
        throw std::invalid_argument("advective_term: transport field must be solenoidal");

    SpectralField ut = u;
    apply_dealias_mask(ut);
    std::array<Eigen::ArrayXd, 3> ug;
    xf.field_to_grid(ut, ug);

    std::array<Eigen::ArrayXd, 3> wg;
    if (&w == &u) {
        wg = ug;
    } else {
        SpectralField wt = w;
        apply_dealias_mask(wt);
        xf.field_to_grid(wt, wg);
    }

    const auto& lat = *u.lattice;
    const Eigen::ArrayXd n1 = lat.n1().cast<double>();
    const Eigen::ArrayXd n2 = lat.n2().cast<double>();
    const Eigen::ArrayXd n3 = lat.n3().cast<double>();
    const Complex iunit(0.0, 1.0);

    SpectralField out(u.lattice);
    Eigen::ArrayXd prod;
    Coeffs that;
    for (int j = 0; j < 3; ++j) {
        Coeffs div = Coeffs::Zero(lat.size());
        for (int m = 0; m < 3; ++m) {
            prod = ug[m] * wg[j];
            xf.to_cube(prod, that);
            const Eigen::ArrayXd& nm = (m == 0) ? n1 : (m == 1) ? n2 : n3;
            div += iunit * nm * that;
        }
        out.c[j] = div;
    }
    apply_dealias_mask(out);
    leray_project_in_place(out);
    return out;
}

InequalityReport verify_product_inequality(const SpectralField& v, const SpectralField& w,
                                           SobolevExponent alpha, FourierTransform& xf_padded) {
    check_same_lattice(v, w);
    const double a = alpha.value;

    std::array<Eigen::ArrayXd, 3> vg, wg;
    xf_padded.field_to_grid(v, vg);
    if (&w == &v)
        wg = vg;
    else
        xf_padded.field_to_grid(w, wg);

    double lhs_sq = 0.0;
    Eigen::ArrayXd prod;
    for (int m = 0; m < 3; ++m)
        for (int j = 0; j < 3; ++j) {
            prod = vg[m] * wg[j];
            lhs_sq += xf_padded.spectrum_norm_sq(prod, 0.5 + a);
        }

    const double v_lo = sobolev_norm(v, SobolevExponent(0.5 + a));
    const double v_hi = sobolev_norm(v, SobolevExponent(1.5 + a));
    const double w_lo = sobolev_norm(w, SobolevExponent(0.5 + a));
    const double w_hi = sobolev_norm(w, SobolevExponent(1.5 + a));

    InequalityReport rep;
    rep.lhs = std::sqrt(lhs_sq);
    rep.rhs_core = std::pow(v_lo, (1.0 + a) / 2.0) * std::pow(v_hi, (1.0 - a) / 2.0) *
                   std::pow(w_lo, (1.0 + a) / 2.0) * std::pow(w_hi, (1.0 - a) / 2.0);
    rep.ratio = rep.rhs_core > 0.0 ? rep.lhs / rep.rhs_core : 0.0;
    return rep;
}

SpectralField random_solenoidal_field(const LatticePtr& lattice, Rng& rng, double h_half_norm,
                                      double min_nsq, double max_nsq) {
    const auto& lat = *lattice;
    const int kd = lat.dealias_radius();
    if (max_nsq < 0.0)
        max_nsq = double(kd) * kd;

    SpectralField f(lattice);
    const int h = lat.half();
    // Fill a Hermitian half-space and mirror, so the field is real-valued.
    for (int k = -h; k <= h; ++k)
        for (int j = -h; j <= h; ++j)
            for (int i = -h; i <= h; ++i) {
                if (std::abs(i) > kd || std::abs(j) > kd || std::abs(k) > kd)
                    continue;
                const double nsq = double(i) * i + double(j) * j + double(k) * k;
                if (nsq <= min_nsq || nsq > max_nsq)
                    continue;
                // half-space selector: first nonzero of (k, j, i) positive
                if (k < 0 || (k == 0 && (j < 0 || (j == 0 && i < 0))))
                    continue;
                const Eigen::Index idx = lat.index(i, j, k);
                const Eigen::Index cidx = lat.index(-i, -j, -k);
                for (int comp = 0; comp < 3; ++comp) {
                    const Complex z(rng.next_normal(), rng.next_normal());
                    f.c[comp][idx] = z;
                    f.c[comp][cidx] = std::conj(z);
                }
            }
    f.enforce_mean_free();
    leray_project_in_place(f);

    const double norm = sobolev_norm(f, SobolevExponent::critical());
    if (norm > 0.0 && h_half_norm > 0.0)
        f *= h_half_norm / norm;
    else if (h_half_norm == 0.0)
        f.set_zero();
    return f;
}

SpectralField taylor_green_field(const LatticePtr& lattice, double amplitude) {
    // u = A (cos x sin y sin z, -sin x cos y sin z, 0), divergence-free.
    SpectralField f(lattice, true);
    const double a = amplitude / 8.0;
    // cos x sin y sin z = sum over sign choices; coefficients are +-a/8 here
    // with i-factors from the two sines absorbed as real signs (i * -i = 1 etc).
    for (int s1 : {-1, 1})
        for (int s2 : {-1, 1})
            for (int s3 : {-1, 1}) {
                const Eigen::Index idx = lattice->index(s1, s2, s3);
                // cos sin sin: (1/2)(1/2i)(1/2i) e^{i(s1 x + s2 y + s3 z)} * s2*s3 * (-1)
                f.c[0][idx] += Complex(-a * s2 * s3, 0.0);
                // -sin cos sin: -(1/2i)(1/2)(1/2i) ... = +a * s1*s3
                f.c[1][idx] += Complex(a * s1 * s3, 0.0);
            }
    f.enforce_mean_free();
    return f;
}

} // namespace snse
