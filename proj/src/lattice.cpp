#include "snse/lattice.hpp"

namespace snse {

ModeLattice::ModeLattice(int n) : n_(n) {
    if (n < 4 || n % 2 != 0)
        throw std::invalid_argument("lattice resolution must be an even integer >= 4");
    side_ = n_ + 1;
    kd_ = (n_ - 1) / 3;
    size_ = static_cast<Eigen::Index>(side_) * side_ * side_;
    zero_index_ = index(0, 0, 0);

    n1_.resize(size_);
    n2_.resize(size_);
    n3_.resize(size_);
    n_sq_.resize(size_);
    dealias_.resize(size_);
    nyquist_.resize(size_);

    const int h = half();
    Eigen::Index idx = 0;
    for (int k = -h; k <= h; ++k)
        for (int j = -h; j <= h; ++j)
            for (int i = -h; i <= h; ++i, ++idx) {
                n1_[idx] = i;
                n2_[idx] = j;
                n3_[idx] = k;
                n_sq_[idx] = double(i) * i + double(j) * j + double(k) * k;
                dealias_[idx] = std::abs(i) <= kd_ && std::abs(j) <= kd_ && std::abs(k) <= kd_;
                nyquist_[idx] = std::abs(i) == h || std::abs(j) == h || std::abs(k) == h;
            }
}

const Eigen::ArrayXd& ModeLattice::sobolev_weights(double alpha) const {
    std::lock_guard<std::mutex> lock(weight_mutex_);
    auto it = weight_cache_.find(alpha);
    if (it != weight_cache_.end())
        return it->second;
    Eigen::ArrayXd w = (1.0 + n_sq_).pow(alpha);
    return weight_cache_.emplace(alpha, std::move(w)).first->second;
}

} // namespace snse
