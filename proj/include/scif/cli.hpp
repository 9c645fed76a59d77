#pragma once

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "scif/codec.hpp"
#include "scif/edit.hpp"
#include "scif/edit_script.hpp"
#include "scif/features.hpp"
#include "scif/image_io.hpp"
#include "scif/metrics.hpp"
#include "scif/reconstruct.hpp"
#include "scif/service.hpp"
#include "scif/sweep.hpp"

namespace scif::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kIo = 2, kSolver = 3, kMalformedScif = 4 };

struct EncodeCmd {
  std::string input, output;
  double sparsity = 0.06;
  FeatureKind kind = FeatureKind::kGradient;
  bool quantized = false;
  std::size_t min_length = 10;
  double sigma = 1.0;
  double offset = 1.5;
  std::string mask;  // optional external edge mask
};

struct DecodeCmd {
  std::string input, output;
  double tolerance = 1e-6;
  std::size_t max_iters = 10000;
  double lambda = 1e4;
};

struct EditCmd {
  std::string input, script, output;
  std::size_t min_length = 10;
};

struct MetricsCmd {
  std::string image_a, image_b;
};

struct SweepCmd {
  std::string image, csv;
  std::vector<double> targets{0.03, 0.05, 0.07, 0.10, 0.15};
  FeatureKind kind = FeatureKind::kGradient;
  double tolerance = 1e-6;
};

struct ServeCmd {
  int port = 8080;
  std::string session_dir = "sessions";
  std::string ui_dir;
};

using Command = std::variant<EncodeCmd, DecodeCmd, EditCmd, MetricsCmd, SweepCmd, ServeCmd>;

/// Usage problems; carries the text to print and the exit code (0 for --help).
class UsageError : public Error {
 public:
  UsageError(const std::string& what, int code = kUsage) : Error(what), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

namespace detail {

inline std::vector<double> parse_targets(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw UsageError("bad --targets value '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--targets is empty");
  return out;
}

}  // namespace detail

inline Command parse_args(const std::vector<std::string>& argv) {
  CLI::App app{"Sparse contour image codec and editor", "scif"};
  app.require_subcommand(1);

  EncodeCmd enc;
  std::string enc_kind = "gradient";
  auto* encode = app.add_subcommand("encode", "Encode an image into a .scif representation");
  encode->add_option("input", enc.input, "Source image (PGM/PPM/PNG)")->required();
  encode->add_option("output", enc.output, "Output .scif file")->required();
  encode->add_option("--sparsity", enc.sparsity, "Target fraction of contour pixels");
  encode->add_option("--kind", enc_kind, "Feature kind")->check(CLI::IsMember({"color", "gradient"}));
  encode->add_flag("--quantized", enc.quantized, "Store features as 8-bit per record range");
  encode->add_option("--min-length", enc.min_length, "Shortest contour kept");
  encode->add_option("--sigma", enc.sigma, "Gaussian presmoothing sigma");
  encode->add_option("--offset", enc.offset, "Color sampling distance from the contour");
  encode->add_option("--mask", enc.mask, "Use this edge mask (pixel > 127 = edge) instead of the detector");

  DecodeCmd dec;
  auto* decode = app.add_subcommand("decode", "Reconstruct an image from a .scif file");
  decode->add_option("input", dec.input, "Input .scif file")->required();
  decode->add_option("output", dec.output, "Output image (.png, else PGM/PPM)")->required();
  decode->add_option("--tolerance", dec.tolerance, "Relative residual tolerance");
  decode->add_option("--max-iters", dec.max_iters, "Iteration cap per channel");
  decode->add_option("--lambda", dec.lambda, "Contour weight for gradient features");

  EditCmd ed;
  auto* edit = app.add_subcommand("edit", "Apply an edit script to a .scif file");
  edit->add_option("input", ed.input, "Input .scif")->required();
  edit->add_option("script", ed.script, "Edit script file")->required();
  edit->add_option("output", ed.output, "Output .scif")->required();
  edit->add_option("--min-length", ed.min_length, "Shortest contour kept after an edit");

  MetricsCmd met;
  auto* metrics = app.add_subcommand("metrics", "PSNR and SSIM between two images");
  metrics->add_option("image_a", met.image_a)->required();
  metrics->add_option("image_b", met.image_b)->required();

  SweepCmd sw;
  std::string targets, sw_kind = "gradient";
  auto* sweep_cmd = app.add_subcommand("sweep", "Fidelity as a function of target sparsity");
  sweep_cmd->add_option("image", sw.image)->required();
  sweep_cmd->add_option("csv", sw.csv, "Write the table here as well");
  sweep_cmd->add_option("--targets", targets, "Comma-separated target sparsities");
  sweep_cmd->add_option("--kind", sw_kind)->check(CLI::IsMember({"color", "gradient"}));
  sweep_cmd->add_option("--tolerance", sw.tolerance);

  ServeCmd srv;
  auto* serve = app.add_subcommand("serve", "Run the editing service");
  serve->add_option("--port", srv.port)->check(CLI::Range(1, 65535));
  serve->add_option("--session-dir", srv.session_dir);
  serve->add_option("--ui-dir", srv.ui_dir, "Serve editor assets from here under /ui/");

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  if (!args.empty()) args.pop_back();  // program name
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    throw UsageError(app.help(), kOk);
  } catch (const CLI::CallForAllHelp&) {
    throw UsageError(app.help(), kOk);
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\n" + app.help());
  }

  if (encode->parsed()) {
    enc.kind = parse_feature_kind(enc_kind);
    return enc;
  }
  if (decode->parsed()) return dec;
  if (edit->parsed()) return ed;
  if (metrics->parsed()) return met;
  if (sweep_cmd->parsed()) {
    if (!targets.empty()) sw.targets = detail::parse_targets(targets);
    sw.kind = parse_feature_kind(sw_kind);
    return sw;
  }
  return srv;
}

namespace detail {

inline void require_input(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw ImageError(ImageError::Code::kUnreadable, "no such file: " + path);
}

inline void require_output_dir(const std::string& path) {
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent))
    throw ImageError(ImageError::Code::kUnwritable, "output directory does not exist: " + parent.string());
}

inline int run_encode(const EncodeCmd& c, std::ostream& err) {
  require_input(c.input);
  if (!c.mask.empty()) require_input(c.mask);
  require_output_dir(c.output);
  EncodeConfig cfg{c.sparsity, c.min_length, c.kind, c.sigma, c.offset};
  cfg.validate();
  const auto image = read_image(c.input);
  EncodeResult result;
  if (c.mask.empty()) {
    result = encode_detailed(image, cfg);
  } else {
    result = encode_from_mask(image, read_mask(c.mask), cfg);
  }
  write_scif(result.representation, c.output, c.quantized);
  const auto& d = result.diagnostics;
  err << "contours: " << d.contours_kept << " kept of " << d.contours_traced << " traced\n"
      << "sparsity: " << sparsity(result.representation) << " (mask " << d.mask_sparsity << ")\n";
  if (d.ceiling_hit)
    err << "note: only " << d.nms_sparsity << " of pixels survive suppression; target " << c.sparsity
        << " is above that ceiling\n";
  return kOk;
}

inline int run_decode(const DecodeCmd& c, std::ostream& err) {
  require_input(c.input);
  require_output_dir(c.output);
  SolverConfig sc;
  sc.tolerance = c.tolerance;
  sc.max_iterations = c.max_iters;
  sc.constraint_weight = c.lambda;
  sc.validate();
  const auto repr = read_scif(c.input);
  const auto result = reconstruct(repr, sc);
  write_image(result.image, c.output);
  for (std::size_t ch = 0; ch < result.stats.size(); ++ch)
    err << "channel " << ch << ": " << result.stats[ch].iterations << " iterations, residual "
        << result.stats[ch].final_relative_residual << "\n";
  return kOk;
}

inline int run_edit(const EditCmd& c, std::ostream&) {
  require_input(c.input);
  require_input(c.script);
  require_output_dir(c.output);
  const auto repr = read_scif(c.input);
  const auto script_bytes = read_file_bytes(c.script);
  const std::string text(script_bytes.begin(), script_bytes.end());
  const auto script_dir = std::filesystem::path(c.script).parent_path();
  const auto script = parse_edit_script(text, [&](const std::string& src) {
    std::filesystem::path p(src);
    if (p.is_relative() && !std::filesystem::exists(p)) p = script_dir / p;
    return std::make_shared<const SparseRepresentation>(read_scif(p));
  });
  write_scif(apply_edit(repr, script, EditOptions{c.min_length}), c.output);
  return kOk;
}

inline int run_metrics(const MetricsCmd& c, std::ostream& out) {
  require_input(c.image_a);
  require_input(c.image_b);
  const auto a = read_image(c.image_a), b = read_image(c.image_b);
  const double p = psnr(a, b);
  out << "psnr," << format_g6(p) << "\nssim," << format_g6(ssim(a, b)) << "\n";
  return kOk;
}

inline int run_sweep(const SweepCmd& c, std::ostream& out) {
  require_input(c.image);
  if (!c.csv.empty()) require_output_dir(c.csv);
  EncodeConfig cfg;
  cfg.kind = c.kind;
  SolverConfig sc;
  sc.tolerance = c.tolerance;
  const auto rows = sweep(read_image(c.image), c.targets, cfg, sc);
  write_sweep_csv(out, rows);
  if (!c.csv.empty()) {
    std::ofstream f(c.csv);
    if (!f) throw ImageError(ImageError::Code::kUnwritable, "cannot write " + c.csv);
    write_sweep_csv(f, rows);
  }
  return kOk;
}

inline int run_serve(const ServeCmd& c, std::ostream& err) {
  SessionService service(c.session_dir);
  httplib::Server server;
  service.mount(server, c.ui_dir);
  err << "serving on http://0.0.0.0:" << c.port << " (" << service.session_count() << " sessions recovered)\n";
  if (!server.listen("0.0.0.0", c.port)) {
    err << "cannot listen on port " << c.port << "\n";
    return kIo;
  }
  return kOk;
}

}  // namespace detail

/// Maps failures onto exit codes: 1 usage, 2 I/O, 3 solver, 4 malformed .scif.
inline int run(const Command& command, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    return std::visit(
        [&](const auto& c) -> int {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, EncodeCmd>) return detail::run_encode(c, err);
          else if constexpr (std::is_same_v<T, DecodeCmd>) return detail::run_decode(c, err);
          else if constexpr (std::is_same_v<T, EditCmd>) return detail::run_edit(c, err);
          else if constexpr (std::is_same_v<T, MetricsCmd>) return detail::run_metrics(c, out);
          else if constexpr (std::is_same_v<T, SweepCmd>) return detail::run_sweep(c, out);
          else return detail::run_serve(c, err);
        },
        command);
  } catch (const CodecError& e) {
    err << "error: malformed .scif: " << e.what() << "\n";
    return kMalformedScif;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kSolver;
  } catch (const ImageError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    // Invalid arguments, dimension mismatches, edit script problems.
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

inline int main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args(argv, argv + argc);
  try {
    return run(parse_args(args), out, err);
  } catch (const UsageError& e) {
    (e.code() == kOk ? out : err) << e.what() << "\n";
    return e.code();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace scif::cli
