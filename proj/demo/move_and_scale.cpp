// Encode an image, shift every contour inside a box, enlarge another region,
// and write the reconstruction next to the unedited one.
//
//   scif_demo input.ppm out_dir [edits.txt]

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "scif/scif.hpp"

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: scif_demo input out_dir [edits.txt]\n";
    return 1;
  }
  namespace fs = std::filesystem;
  try {
    const auto image = scif::read_image(argv[1]);
    const fs::path out = argv[2];
    fs::create_directories(out);

    const auto repr = scif::encode(image);
    std::cerr << repr.contours.contours.size() << " contours, sparsity " << scif::sparsity(repr) << "\n";

    const auto plain = scif::reconstruct(repr);
    const auto m = scif::measure(image, plain.image, &repr);
    std::cout << "unedited: psnr " << m.psnr << " dB, ssim " << m.ssim << "\n";
    scif::write_image(plain.image, out / "unedited.png");

    scif::EditScript script;
    if (argc > 3) {
      std::ifstream f(argv[3]);
      std::stringstream text;
      text << f.rdbuf();
      script = scif::parse_edit_script(text.str());
    } else {
      const auto w = std::int32_t(image.width()), h = std::int32_t(image.height());
      script.push_back(scif::Translate{scif::Selection::of_box({0, 0, w / 2, h / 2}), double(w) / 8, 0.0});
      script.push_back(scif::Scale{scif::Selection::of_box({w / 2, h / 2, w - 1, h - 1}), 0.75 * w, 0.75 * h, 1.25, 1.25});
    }
    std::cerr << scif::edit_script_to_text(script);

    const auto edited = scif::apply_edit(repr, script);
    scif::write_scif(edited, out / "edited.scif");
    scif::write_image(scif::reconstruct(edited).image, out / "edited.png");
    std::cout << "wrote " << (out / "edited.png").string() << "\n";
  } catch (const scif::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
