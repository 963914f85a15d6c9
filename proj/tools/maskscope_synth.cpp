// Writes the synthetic two-class street-scene fixture used by the tests, for
// trying the pipeline without an exported dataset.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "maskscope/synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic Grad-CAM dataset (tensors, segmentation, images, manifest)"};
    std::string out;
    maskscope::synthetic::Spec spec;
    app.add_option("--out", out, "Output directory")->required();
    app.add_option("--images-per-class", spec.images_per_class)->capture_default_str();
    app.add_option("--image-size", spec.image_size)->capture_default_str();
    app.add_option("--seed", spec.seed)->capture_default_str();
    bool no_images = false;
    app.add_flag("--no-images", no_images, "Omit RGB images (manifest image = null)");
    CLI11_PARSE(app, argc, argv);
    spec.with_images = !no_images;

    try {
        std::cout << maskscope::synthetic::write_dataset(out, spec).string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return EXIT_FAILURE;
    }
    return EXIT_SUCCESS;
}
