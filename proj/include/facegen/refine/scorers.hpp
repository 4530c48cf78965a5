#pragma once

#include "facegen/core/face_template.hpp"
#include "facegen/core/mesh.hpp"

#include <memory>
#include <string>
#include <vector>

namespace facegen {

using PixelLabels = std::vector<TextureLayout::Label>;

// Scores how well a rendered image matches a prompt (higher is better,
// roughly in [0, 1]) and reports d score / d pixel.
class PromptScorer {
   public:
    virtual ~PromptScorer() = default;
    virtual std::string name() const = 0;
    virtual double score(const RgbImage& image, const PixelLabels& labels, const std::string& prompt,
                         RgbImage* grad) const = 0;
};

// Lip redness R - (G + B) / 2 plus eyelid darkness, squashed by tanh.
class MakeupScorer : public PromptScorer {
   public:
    std::string name() const override { return "makeup"; }
    double score(const RgbImage& image, const PixelLabels& labels, const std::string& prompt,
                 RgbImage* grad) const override;
};

// Variance of skin luminance (a wrinkle proxy), squashed by tanh.
class AgingScorer : public PromptScorer {
   public:
    std::string name() const override { return "aging"; }
    double score(const RgbImage& image, const PixelLabels& labels, const std::string& prompt,
                 RgbImage* grad) const override;
};

// Mean luminance of the covered pixels.
class BrightnessScorer : public PromptScorer {
   public:
    std::string name() const override { return "brightness"; }
    double score(const RgbImage& image, const PixelLabels& labels, const std::string& prompt,
                 RgbImage* grad) const override;
};

class ConstantScorer : public PromptScorer {
   public:
    explicit ConstantScorer(double value = 0.5) : value_(value) {}
    std::string name() const override { return "constant"; }
    double score(const RgbImage& image, const PixelLabels& labels, const std::string& prompt,
                 RgbImage* grad) const override;

   private:
    double value_;
};

std::vector<std::string> builtin_scorer_names();  // makeup, aging, brightness
// Also accepts "constant". Throws ArgumentError for unknown names.
std::unique_ptr<PromptScorer> make_scorer(const std::string& name);

}  // namespace facegen
