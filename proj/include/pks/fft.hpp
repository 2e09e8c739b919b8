#pragma once

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include <fftw3.h>

namespace pks {

/// Real-to-complex 2D transform of an n x n row-major array (y slow, x fast).
/// Plans are created once per size under a lock; execution uses the new-array
/// interface, which FFTW documents as thread safe.
class Fft2D {
public:
    explicit Fft2D(std::size_t n) : n_(n) {
        std::vector<double> re(n * n);
        std::vector<std::complex<double>> co(n * (n / 2 + 1));
        std::lock_guard<std::mutex> lock(planner_mutex());
        const int ni = static_cast<int>(n);
        forward_ = fftw_plan_dft_r2c_2d(ni, ni, re.data(), reinterpret_cast<fftw_complex*>(co.data()),
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
        inverse_ = fftw_plan_dft_c2r_2d(ni, ni, reinterpret_cast<fftw_complex*>(co.data()), re.data(),
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    Fft2D(const Fft2D&) = delete;
    Fft2D& operator=(const Fft2D&) = delete;
    ~Fft2D() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
    }

    std::size_t n() const { return n_; }
    std::size_t spectrum_size() const { return n_ * (n_ / 2 + 1); }
    std::size_t half() const { return n_ / 2 + 1; }

    std::vector<std::complex<double>> forward(std::vector<double> in) const {
        std::vector<std::complex<double>> out(spectrum_size());
        fftw_execute_dft_r2c(forward_, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
        return out;
    }

    /// Normalised inverse: inverse(forward(f)) == f.
    std::vector<double> inverse(std::vector<std::complex<double>> in) const {
        std::vector<double> out(n_ * n_);
        fftw_execute_dft_c2r(inverse_, reinterpret_cast<fftw_complex*>(in.data()), out.data());
        const double scale = 1.0 / static_cast<double>(n_ * n_);
        for (double& x : out) x *= scale;
        return out;
    }

    /// Signed integer wavenumber index for row/column j of the spectrum.
    long wave_index(std::size_t j) const {
        return j <= n_ / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(n_);
    }

    static std::shared_ptr<const Fft2D> shared(std::size_t n) {
        static std::mutex m;
        static std::map<std::size_t, std::shared_ptr<const Fft2D>> cache;
        std::lock_guard<std::mutex> lock(m);
        auto& slot = cache[n];
        if (!slot) slot = std::make_shared<const Fft2D>(n);
        return slot;
    }

private:
    static std::mutex& planner_mutex() {
        static auto* m = new std::mutex;  // outlives the static plan cache
        return *m;
    }

    std::size_t n_;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

}  // namespace pks
