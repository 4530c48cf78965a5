#include "facegen/refine/scorers.hpp"

#include "facegen/core/error.hpp"

#include <cmath>

namespace facegen {

namespace {

using L = TextureLayout::Label;

void reset(RgbImage* grad, const RgbImage& image) {
    if (grad) *grad = RgbImage(image.width, image.height);
}

void check(const RgbImage& image, const PixelLabels& labels) {
    if (labels.size() != image.pixel_count()) throw ArgumentError("pixel labels do not match the image");
}

}  // namespace

double MakeupScorer::score(const RgbImage& image, const PixelLabels& labels, const std::string&,
                           RgbImage* grad) const {
    check(image, labels);
    std::size_t n_lip = 0, n_lid = 0;
    for (auto l : labels) {
        n_lip += l == L::lips;
        n_lid += l == L::eyelids;
    }
    double red = 0.0, dark = 0.0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        const double r = image.data[3 * k], g = image.data[3 * k + 1], b = image.data[3 * k + 2];
        if (labels[k] == L::lips) red += (r - 0.5 * (g + b)) / static_cast<double>(n_lip);
        if (labels[k] == L::eyelids) dark += (1.0 - luminance(r, g, b)) / static_cast<double>(n_lid);
    }
    const double x = red + 0.5 * dark;
    const double th = std::tanh(3.0 * (x - 0.4));
    reset(grad, image);
    if (grad) {
        const double d = 0.5 * 3.0 * (1.0 - th * th);
        for (std::size_t k = 0; k < labels.size(); ++k) {
            if (labels[k] == L::lips) {
                const double w = d / static_cast<double>(n_lip);
                grad->data[3 * k] += w;
                grad->data[3 * k + 1] -= 0.5 * w;
                grad->data[3 * k + 2] -= 0.5 * w;
            }
            if (labels[k] == L::eyelids) {
                const double w = -0.5 * d / static_cast<double>(n_lid);
                grad->data[3 * k] += w * 0.2126;
                grad->data[3 * k + 1] += w * 0.7152;
                grad->data[3 * k + 2] += w * 0.0722;
            }
        }
    }
    return 0.5 * (1.0 + th);
}

double AgingScorer::score(const RgbImage& image, const PixelLabels& labels, const std::string&,
                          RgbImage* grad) const {
    check(image, labels);
    std::vector<std::size_t> skin;
    for (std::size_t k = 0; k < labels.size(); ++k)
        if (labels[k] == L::skin) skin.push_back(k);
    reset(grad, image);
    if (skin.size() < 2) return 0.0;
    const double n = static_cast<double>(skin.size());
    std::vector<double> lum(skin.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < skin.size(); ++i) {
        const auto k = skin[i];
        lum[i] = luminance(image.data[3 * k], image.data[3 * k + 1], image.data[3 * k + 2]);
        mean += lum[i] / n;
    }
    double var = 0.0;
    for (double l : lum) var += (l - mean) * (l - mean) / n;
    const double th = std::tanh(50.0 * var);
    if (grad) {
        const double d = 50.0 * (1.0 - th * th);
        for (std::size_t i = 0; i < skin.size(); ++i) {
            const double g = d * 2.0 * (lum[i] - mean) / n;
            grad->data[3 * skin[i]] += g * 0.2126;
            grad->data[3 * skin[i] + 1] += g * 0.7152;
            grad->data[3 * skin[i] + 2] += g * 0.0722;
        }
    }
    return th;
}

double BrightnessScorer::score(const RgbImage& image, const PixelLabels& labels, const std::string&,
                               RgbImage* grad) const {
    check(image, labels);
    std::size_t n = 0;
    for (auto l : labels) n += l != L::back;
    reset(grad, image);
    if (n == 0) return 0.0;
    double s = 0.0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k] == L::back) continue;
        s += luminance(image.data[3 * k], image.data[3 * k + 1], image.data[3 * k + 2]);
        if (grad) {
            grad->data[3 * k] = 0.2126 / static_cast<double>(n);
            grad->data[3 * k + 1] = 0.7152 / static_cast<double>(n);
            grad->data[3 * k + 2] = 0.0722 / static_cast<double>(n);
        }
    }
    return s / static_cast<double>(n);
}

double ConstantScorer::score(const RgbImage& image, const PixelLabels& labels, const std::string&,
                             RgbImage* grad) const {
    check(image, labels);
    reset(grad, image);
    return value_;
}

std::vector<std::string> builtin_scorer_names() { return {"makeup", "aging", "brightness"}; }

std::unique_ptr<PromptScorer> make_scorer(const std::string& name) {
    if (name == "makeup") return std::make_unique<MakeupScorer>();
    if (name == "aging") return std::make_unique<AgingScorer>();
    if (name == "brightness") return std::make_unique<BrightnessScorer>();
    if (name == "constant") return std::make_unique<ConstantScorer>();
    throw ArgumentError("unknown scorer '" + name + "' (expected makeup, aging, brightness or constant)");
}

}  // namespace facegen
