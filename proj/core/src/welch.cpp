#include "nvicore/welch.hpp"

#include <cmath>
#include <complex>
#include <string>

#include "nvicore/errors.hpp"

namespace nvi {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Iterative radix-2 Cooley-Tukey, in place. n must be a power of two.
void fft(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

} // namespace

PsdEstimate welch_psd(std::span<const double> x, double fs, std::size_t nperseg) {
    if (fs <= 0.0) throw ParamError("welch_psd: fs must be > 0");
    const std::size_t n = x.size();
    if (n < 8) throw DataError("welch_psd: need >= 8 samples, got " + std::to_string(n));
    if (nperseg == 0 || nperseg > n) nperseg = n;
    if (nperseg < 8) nperseg = 8;

    const std::size_t step = std::max<std::size_t>(1, nperseg / 2);
    const std::size_t nfft = next_pow2(nperseg);
    const std::size_t nbins = nfft / 2 + 1;

    std::vector<double> window(nperseg);
    double win_power = 0.0;
    for (std::size_t i = 0; i < nperseg; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) /
                                          static_cast<double>(nperseg)));
        win_power += window[i] * window[i];
    }

    PsdEstimate psd;
    psd.df_hz = fs / static_cast<double>(nfft);
    psd.freqs_hz.resize(nbins);
    for (std::size_t k = 0; k < nbins; ++k) psd.freqs_hz[k] = psd.df_hz * static_cast<double>(k);
    psd.power.assign(nbins, 0.0);

    std::vector<std::complex<double>> buf(nfft);
    std::size_t segments = 0;
    for (std::size_t start = 0; start + nperseg <= n; start += step) {
        double seg_mean = 0.0;
        for (std::size_t i = 0; i < nperseg; ++i) seg_mean += x[start + i];
        seg_mean /= static_cast<double>(nperseg);

        for (std::size_t i = 0; i < nperseg; ++i) {
            buf[i] = std::complex<double>((x[start + i] - seg_mean) * window[i], 0.0);
        }
        for (std::size_t i = nperseg; i < nfft; ++i) buf[i] = {0.0, 0.0};
        fft(buf);

        for (std::size_t k = 0; k < nbins; ++k) {
            double p = std::norm(buf[k]) / (fs * win_power);
            if (k != 0 && k != nfft / 2) p *= 2.0;  // fold negative frequencies
            psd.power[k] += p;
        }
        ++segments;
    }
    for (double& p : psd.power) p /= static_cast<double>(segments);
    return psd;
}

double band_power(const PsdEstimate& psd, double lo_hz, double hi_hz) {
    if (!(lo_hz < hi_hz)) throw ParamError("band_power: need lo < hi");
    double total = 0.0;
    for (std::size_t k = 0; k < psd.size(); ++k) {
        if (psd.freqs_hz[k] >= lo_hz && psd.freqs_hz[k] < hi_hz) total += psd.power[k];
    }
    return total * psd.df_hz;
}

} // namespace nvi
