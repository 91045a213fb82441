#pragma once
// Periodic angular grid: FFT-based spectral derivatives and cosine transforms.

#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace hsks {

class AngularTransform {
public:
    explicit AngularTransform(int n_phi) : n_(n_phi) {
        if (n_phi < 4 || n_phi % 2 != 0)
            throw std::invalid_argument("AngularTransform: n_phi must be even and >= 4");
        in_.resize(n_);
        spec_.resize(n_);
        table_.resize(n_);
        for (int m = 0; m < n_; ++m) table_[m] = std::cos(2.0 * std::numbers::pi * m / n_);
    }

    int size() const { return n_; }
    int max_mode() const { return n_ / 2; }
    double node(int j) const { return 2.0 * std::numbers::pi * j / n_; }
    double weight() const { return 2.0 * std::numbers::pi / n_; }

    /// Cosine coefficients a_0..a_{n/2} with f_j = sum_k a_k cos(k phi_j). Sine content is discarded.
    std::vector<double> cosine_coefficients(std::span<const double> f) {
        forward(f);
        std::vector<double> a(n_ / 2 + 1);
        a[0] = spec_[0].real() / n_;
        for (int k = 1; k < n_ / 2; ++k) a[k] = 2.0 * spec_[k].real() / n_;
        a[n_ / 2] = spec_[n_ / 2].real() / n_;
        return a;
    }

    /// Samples of sum_k a_k cos(k phi) on the grid; coefficients beyond n/2 are ignored.
    std::vector<double> from_cosine(std::span<const double> a) const {
        std::vector<double> f(n_, 0.0);
        const int kmax = std::min<int>(static_cast<int>(a.size()) - 1, n_ / 2);
        for (int j = 0; j < n_; ++j) {
            double s = 0.0;
            for (int k = 0; k <= kmax; ++k) {
                // cos(k * 2 pi j / n) via index arithmetic keeps exact symmetry
                s += a[k] * cos_table(k * j);
            }
            f[j] = s;
        }
        return f;
    }

    /// p-th spectral derivative of real periodic samples.
    void derivative(std::span<const double> f, std::span<double> out, int order) {
        forward(f);
        const std::complex<double> I(0.0, 1.0);
        for (int k = 0; k < n_; ++k) {
            const int wave = (k <= n_ / 2) ? k : k - n_;
            if (k == n_ / 2 && order % 2 == 1) {
                spec_[k] = 0.0;
                continue;
            }
            std::complex<double> factor = 1.0;
            for (int p = 0; p < order; ++p) factor *= I * static_cast<double>(wave);
            spec_[k] *= factor;
        }
        inverse(out);
    }

    std::vector<double> derivative(std::span<const double> f, int order) {
        std::vector<double> out(n_);
        derivative(f, out, order);
        return out;
    }

    /// Zero Fourier content above max_keep (both cos and sin parts).
    void truncate(std::span<double> f, int max_keep) {
        forward(f);
        for (int k = 0; k < n_; ++k) {
            const int wave = (k <= n_ / 2) ? k : n_ - k;
            if (wave > max_keep) spec_[k] = 0.0;
        }
        inverse(f);
    }

    /// Replace samples by their even part f(phi) <- (f(phi) + f(-phi)) / 2.
    static void symmetrize(std::span<double> f) {
        const int n = static_cast<int>(f.size());
        for (int j = 1; j < n / 2; ++j) {
            const double avg = 0.5 * (f[j] + f[n - j]);
            f[j] = avg;
            f[n - j] = avg;
        }
    }

    /// Trapezoid (spectrally exact) integral over [0, 2 pi).
    double integrate(std::span<const double> f) const {
        double s = 0.0;
        for (double v : f) s += v;
        return s * weight();
    }

private:
    double cos_table(int kj) const { return table_[kj % n_]; }

    void forward(std::span<const double> f) {
        if (static_cast<int>(f.size()) != n_) throw std::invalid_argument("AngularTransform: size mismatch");
        in_.assign(f.begin(), f.end());
        fft_.fwd(spec_, in_);
    }

    void inverse(std::span<double> out) {
        fft_.inv(back_, spec_);
        for (int j = 0; j < n_; ++j) out[j] = back_[j].real();
    }

    int n_;
    Eigen::FFT<double> fft_;
    std::vector<double> in_;
    std::vector<std::complex<double>> spec_;
    std::vector<std::complex<double>> back_;
    std::vector<double> table_;
};

}  // namespace hsks
