#include "snse/noise.hpp"

namespace snse {

NoiseCoefficient::NoiseCoefficient(LatticePtr lattice, NoiseKind kind, double eps_sigma, int k,
                                   double delta)
    : lattice_(std::move(lattice)), kind_(kind), eps_sigma_(eps_sigma), k_(k) {
    if (eps_sigma_ < 0.0)
        throw std::invalid_argument("eps_sigma must be >= 0");
    if (k_ <= 0)
        throw std::invalid_argument("noise truncation K must be positive");
    validate_delta(delta);

    const auto& lat = *lattice_;
    const double nn = double(lat.n()) * lat.n();
    kernel_ = (-lat.n_sq() / nn).exp();

    // Deterministic partition of the dealiased, nonzero modes into K groups.
    group_ = Eigen::ArrayXi::Constant(lat.size(), -1);
    const auto& mask = lat.dealias_mask();
    for (Eigen::Index idx = 0; idx < lat.size(); ++idx) {
        if (!mask[idx] || idx == lat.zero_index())
            continue;
        int a, b, c;
        lat.flat_to_mode(idx, a, b, c);
        const std::uint64_t key = (std::uint64_t(std::uint32_t(a + 512)) << 40) ^
                                  (std::uint64_t(std::uint32_t(b + 512)) << 20) ^
                                  std::uint64_t(std::uint32_t(c + 512));
        group_[idx] = int(mix_seed(0x5eed5eedull, key) % std::uint64_t(k_));
    }

    prefactor_ = Eigen::ArrayXd::Zero(lat.size());
    if (kind_ == NoiseKind::Zero || eps_sigma_ == 0.0)
        return;

    // Brute-force Lipschitz calibration. Single-mode solenoidal probes are
    // extremal because the operator is diagonal in n, but we scan every mode
    // and both Sobolev levels rather than assume it.
    double worst = 0.0;
    for (double alpha : {0.0, delta}) {
        (void)alpha; // ratio of shared (1+|n|^2)^alpha weights cancels per mode
        for (Eigen::Index idx = 0; idx < lat.size(); ++idx) {
            if (group_[idx] < 0)
                continue;
            worst = std::max(worst, kernel_[idx]);
        }
    }
    c_sigma_ = worst > 0.0 ? worst * (1.0 + 1e-12) : 1.0;

    for (Eigen::Index idx = 0; idx < lat.size(); ++idx)
        if (group_[idx] >= 0)
            prefactor_[idx] = eps_sigma_ / c_sigma_ * kernel_[idx];
}

std::vector<SpectralField> NoiseCoefficient::columns(double, const SpectralField& u) const {
    if (u.lattice->n() != lattice_->n())
        throw std::invalid_argument("sigma: field lattice mismatch");
    SpectralField pu = u.solenoidal ? u : leray_project(u);
    std::vector<SpectralField> cols;
    cols.reserve(size_t(k_));
    for (int col = 0; col < k_; ++col)
        cols.emplace_back(lattice_, true);
    if (kind_ == NoiseKind::Zero || eps_sigma_ == 0.0)
        return cols;
    for (Eigen::Index idx = 0; idx < lattice_->size(); ++idx) {
        const int g = group_[idx];
        if (g < 0)
            continue;
        const double p = prefactor_[idx];
        for (int j = 0; j < 3; ++j)
            cols[size_t(g)].c[j][idx] = p * pu.c[j][idx];
    }
    return cols;
}

void NoiseCoefficient::apply_increment(double, const SpectralField& u, const Eigen::ArrayXd& dw,
                                       SpectralField& out) const {
    out.set_zero();
    out.solenoidal = true;
    if (kind_ == NoiseKind::Zero || eps_sigma_ == 0.0)
        return;
    const SpectralField* pu = &u;
    SpectralField projected;
    if (!u.solenoidal) {
        projected = leray_project(u);
        pu = &projected;
    }
    for (Eigen::Index idx = 0; idx < lattice_->size(); ++idx) {
        const int g = group_[idx];
        if (g < 0)
            continue;
        const double p = prefactor_[idx] * dw[g];
        for (int j = 0; j < 3; ++j)
            out.c[j][idx] = p * pu->c[j][idx];
    }
}

double NoiseCoefficient::hs_norm_sq(double, const SpectralField& u, SobolevExponent alpha) const {
    if (kind_ == NoiseKind::Zero || eps_sigma_ == 0.0)
        return 0.0;
    const SpectralField* pu = &u;
    SpectralField projected;
    if (!u.solenoidal) {
        projected = leray_project(u);
        pu = &projected;
    }
    const auto& w = lattice_->sobolev_weights(alpha.value);
    double sum = 0.0;
    for (int j = 0; j < 3; ++j)
        sum += (w * prefactor_.square() * pu->c[j].abs2()).sum();
    return sum;
}

double hs_norm(const std::vector<SpectralField>& columns, SobolevExponent alpha) {
    double sum = 0.0;
    for (const auto& col : columns)
        sum += sobolev_norm_sq(col, alpha);
    return std::sqrt(sum);
}

IsometryReport ito_integral_check(const std::vector<SpectralField>& columns, double horizon,
                                  int paths, int steps_per_path, std::uint64_t seed) {
    if (paths < 100)
        throw std::invalid_argument("ito_integral_check: need at least 100 paths");
    if (columns.empty())
        throw std::invalid_argument("ito_integral_check: empty operator");

    const LatticePtr lattice = columns.front().lattice;
    const int k = int(columns.size());
    const double dt = horizon / steps_per_path;

    double hs_sq = 0.0;
    for (const auto& col : columns)
        hs_sq += sobolev_norm_sq(col, SobolevExponent::l2());

    double sum = 0.0, sum_sq = 0.0, sup_sum = 0.0;
    SpectralField integral(lattice);
    for (int p = 0; p < paths; ++p) {
        WienerBasis basis(k, mix_seed(seed, std::uint64_t(p)));
        integral.set_zero();
        double sup_l2 = 0.0;
        for (int s = 0; s < steps_per_path; ++s) {
            const Eigen::ArrayXd dw = basis.sample_increment(dt);
            for (int c = 0; c < k; ++c)
                for (int j = 0; j < 3; ++j)
                    integral.c[j] += dw[c] * columns[size_t(c)].c[j];
            sup_l2 = std::max(sup_l2, sobolev_norm(integral, SobolevExponent::l2()));
        }
        const double val = sobolev_norm_sq(integral, SobolevExponent::l2());
        sum += val;
        sum_sq += val * val;
        sup_sum += sup_l2;
    }

    IsometryReport rep;
    rep.paths = paths;
    rep.mc_estimate = sum / paths;
    rep.exact = horizon * hs_sq;
    const double var = std::max(0.0, sum_sq / paths - rep.mc_estimate * rep.mc_estimate);
    rep.std_error = std::sqrt(var / paths);
    rep.z_score = rep.std_error > 0.0 ? (rep.mc_estimate - rep.exact) / rep.std_error : 0.0;
    rep.bdg_ratio = rep.exact > 0.0 ? (sup_sum / paths) / std::sqrt(rep.exact) : 0.0;
    return rep;
}

} // namespace snse
