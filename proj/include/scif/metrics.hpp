#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "scif/error.hpp"
#include "scif/image.hpp"
#include "scif/representation.hpp"

namespace scif {

struct MetricReport {
  double psnr = 0.0;  // +infinity for identical images
  double ssim = 0.0;
  double sparsity = 0.0;
};

namespace detail {

inline void require_same_shape(const RasterImage& a, const RasterImage& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels())
    throw InvalidArgument("image dimensions differ: " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                          "x" + std::to_string(a.channels()) + " vs " + std::to_string(b.width()) + "x" +
                          std::to_string(b.height()) + "x" + std::to_string(b.channels()));
}

}  // namespace detail

/// Peak signal-to-noise ratio with peak 1, over every stored value.
inline double psnr(const RasterImage& a, const RasterImage& b) {
  detail::require_same_shape(a, b);
  const auto da = a.data(), db = b.data();
  double sse = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double d = double(da[i]) - db[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(da.size()) / sse);
}

struct SsimOptions {
  /// Average per-channel SSIM; when false, compare luminance only.
  bool channel_average = true;
};

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Gaussian-windowed SSIM (11x11, sigma 1.5, K1 0.01, K2 0.03, L 1) over
/// windows lying fully inside the image, averaged over windows then channels.
inline double ssim(const RasterImage& a, const RasterImage& b, const SsimOptions& options = {}) {
  detail::require_same_shape(a, b);
  if (a.width() < kSsimWindow || a.height() < kSsimWindow)
    throw InvalidArgument("image smaller than the 11x11 SSIM window");
  if (!options.channel_average && a.channels() == 3) return ssim(to_luminance(a), to_luminance(b), options);

  std::vector<double> g(kSsimWindow);
  double gsum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) gsum += g[i] = std::exp(-0.5 * (i - 5) * (i - 5) / (kSsimSigma * kSsimSigma));
  for (auto& v : g) v /= gsum;

  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
  const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  const std::uint32_t w = a.width(), h = a.height();
  const std::uint32_t ow = w - kSsimWindow + 1, oh = h - kSsimWindow + 1;

  double total = 0.0;
  for (std::uint32_t c = 0; c < a.channels(); ++c) {
    const auto pa = a.plane(c), pb = b.plane(c);
    double channel_sum = 0.0;
    for (std::uint32_t y = 0; y < oh; ++y)
      for (std::uint32_t x = 0; x < ow; ++x) {
        double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int j = 0; j < kSsimWindow; ++j)
          for (int i = 0; i < kSsimWindow; ++i) {
            const double wt = g[i] * g[j];
            const std::size_t k = std::size_t(y + j) * w + (x + i);
            ma += wt * pa[k];
            mb += wt * pb[k];
            saa += wt * pa[k] * pa[k];
            sbb += wt * pb[k] * pb[k];
            sab += wt * pa[k] * pb[k];
          }
        const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
        channel_sum += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      }
    total += channel_sum / (double(ow) * oh);
  }
  return total / a.channels();
}

inline MetricReport measure(const RasterImage& reference, const RasterImage& test, const SparseRepresentation* r = nullptr) {
  return MetricReport{psnr(reference, test), ssim(reference, test), r ? sparsity(*r) : 0.0};
}

/// Spearman rank correlation with average ranks for ties; 0 when either
/// sequence is constant.
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidArgument("spearman needs two equal-length sequences");
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * (double(i) + double(j)) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace scif
