#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "scif/features.hpp"
#include "scif/metrics.hpp"
#include "scif/parallel.hpp"
#include "scif/reconstruct.hpp"

namespace scif {

struct SweepRow {
  double target_sparsity = 0.0;
  double achieved_sparsity = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  std::size_t iterations = 0;  // summed over channels

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

/// Encode + reconstruct + measure at each target. Targets run concurrently
/// (SCIF_THREADS), each solve single-threaded; rows come back sorted by target.
inline std::vector<SweepRow> sweep(const RasterImage& image, std::vector<double> targets, const EncodeConfig& config,
                                   const SolverConfig& solver) {
  if (targets.empty()) throw InvalidArgument("sweep needs at least one target");
  for (double t : targets)
    if (!(t > 0.0 && t <= 0.5)) throw InvalidArgument("sweep targets must lie in (0, 0.5]");
  std::sort(targets.begin(), targets.end());

  std::vector<SweepRow> rows(targets.size());
  const unsigned workers = solver.threads ? solver.threads : thread_limit();
  parallel_for(targets.size(), workers, [&](std::size_t i) {
    EncodeConfig cfg = config;
    cfg.target_sparsity = targets[i];
    const auto repr = encode(image, cfg);
    SolverConfig sc = solver;
    sc.threads = 1;
    const auto rec = reconstruct(repr, sc);
    SweepRow row{targets[i], sparsity(repr), psnr(image, rec.image), ssim(image, rec.image), 0};
    for (const auto& s : rec.stats) row.iterations += s.iterations;
    rows[i] = row;
  });
  return rows;
}

inline std::string format_g6(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

/// CSV: `target,achieved,psnr,ssim,iterations`, 6 significant digits.
inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "target,achieved,psnr,ssim,iterations\n";
  for (const auto& r : rows)
    os << format_g6(r.target_sparsity) << ',' << format_g6(r.achieved_sparsity) << ',' << format_g6(r.psnr) << ','
       << format_g6(r.ssim) << ',' << r.iterations << '\n';
}

}  // namespace scif
