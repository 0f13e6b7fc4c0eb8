#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "crossview/core/errors.hpp"
#include "crossview/core/tensor3.hpp"

namespace crossview {

// One detected hand instance in a frame.
struct Detection {
  double x = 0.0;
  double y = 0.0;
  double width = 0.0;
  double height = 0.0;
  double confidence = 0.0;
};

// Interface for a hand detector backend. The score of a frame is the
// confidence of its strongest detection (0 when nothing is found).
class HandDetector {
 public:
  virtual ~HandDetector() = default;
  virtual std::vector<Detection> detect(const Frame& frame) const = 0;
  virtual std::string name() const = 0;
};

// Mean over frames of the top detection confidence per frame.
inline double feasibility(const std::vector<Frame>& frames, const HandDetector& detector) {
  if (frames.empty()) throw InputDomainError("feasibility: empty frame list");
  double total = 0.0;
  for (const auto& frame : frames) {
    const auto detections = detector.detect(frame);
    double best = 0.0;
    for (const auto& d : detections) best = std::max(best, d.confidence);
    total += best;
  }
  return total / static_cast<double>(frames.size());
}

// Fixed-response detector for wiring tests and as a stand-in backend.
// Successive calls walk the confidence sequence; past the end the last
// entry repeats. A confidence of 0 means "nothing detected".
class ConstantDetector final : public HandDetector {
 public:
  explicit ConstantDetector(std::vector<double> confidences)
      : confidences_(std::move(confidences)) {}

  std::vector<Detection> detect(const Frame& /*frame*/) const override {
    std::vector<Detection> out;
    if (confidences_.empty()) return out;
    const std::size_t i = std::min(cursor_, confidences_.size() - 1);
    ++cursor_;
    const double c = confidences_[i];
    if (c > 0.0) out.push_back(Detection{0.25, 0.25, 0.5, 0.5, c});
    return out;
  }

  std::string name() const override { return "constant"; }

 private:
  std::vector<double> confidences_;
  mutable std::size_t cursor_ = 0;
};

}  // namespace crossview
