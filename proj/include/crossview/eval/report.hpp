#pragma once

#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "crossview/core/errors.hpp"
#include "crossview/core/tensor3.hpp"
#include "crossview/eval/feasibility.hpp"
#include "crossview/eval/fid.hpp"
#include "crossview/eval/metrics.hpp"
#include "crossview/eval/perceptual.hpp"

namespace crossview {

// One evaluation run over a set of predicted frames vs. ground truth.
struct MetricReport {
  std::string dataset;
  std::string split;
  int frames = 0;
  double ssim = 0.0;
  double psnr = 0.0;
  double fid = 0.0;
  // (extractor name, mean perceptual distance), in extractor registration order.
  std::vector<std::pair<std::string, double>> perceptual;
  std::optional<double> feasibility;
};

inline nlohmann::json report_to_json(const MetricReport& r) {
  nlohmann::json j;
  j["dataset"] = r.dataset;
  j["split"] = r.split;
  j["frames"] = r.frames;
  j["ssim"] = r.ssim;
  j["psnr"] = r.psnr;
  j["fid"] = r.fid;
  nlohmann::json percept = nlohmann::json::object();
  for (const auto& [name, value] : r.perceptual) percept[name] = value;
  j["perceptual"] = percept;
  if (r.feasibility.has_value()) j["feasibility"] = *r.feasibility;
  return j;
}

inline MetricReport report_from_json(const nlohmann::json& j) {
  MetricReport r;
  r.dataset = j.at("dataset").get<std::string>();
  r.split = j.at("split").get<std::string>();
  r.frames = j.at("frames").get<int>();
  r.ssim = j.at("ssim").get<double>();
  r.psnr = j.at("psnr").get<double>();
  r.fid = j.at("fid").get<double>();
  if (j.contains("perceptual")) {
    for (const auto& [name, value] : j.at("perceptual").items()) {
      r.perceptual.emplace_back(name, value.get<double>());
    }
  }
  if (j.contains("feasibility")) r.feasibility = j.at("feasibility").get<double>();
  return r;
}

namespace detail {

inline std::string format_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace detail

// Fixed-width table, one metric per column. Arrows mark the preferred
// direction; absent feasibility renders as "-".
inline std::string report_table(const MetricReport& r) {
  std::vector<std::pair<std::string, std::string>> columns;
  columns.emplace_back("SSIM\xE2\x86\x91", detail::format_cell(r.ssim));
  columns.emplace_back("PSNR\xE2\x86\x91", detail::format_cell(r.psnr));
  columns.emplace_back("FID\xE2\x86\x93", detail::format_cell(r.fid));
  for (const auto& [name, value] : r.perceptual) {
    columns.emplace_back("P_" + name + "\xE2\x86\x93", detail::format_cell(value));
  }
  columns.emplace_back("Feasi.\xE2\x86\x91",
                       r.feasibility ? detail::format_cell(*r.feasibility) : "-");

  // UTF-8 arrows occupy 3 bytes but render one column wide; pad by display
  // width so the header and value rows line up in a terminal.
  auto display_width = [](const std::string& s) {
    std::size_t w = 0;
    for (std::size_t i = 0; i < s.size();) {
      const unsigned char c = static_cast<unsigned char>(s[i]);
      i += (c >= 0xF0) ? 4 : (c >= 0xE0) ? 3 : (c >= 0xC0) ? 2 : 1;
      ++w;
    }
    return w;
  };

  std::string header;
  std::string values;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const auto& [title, cell] = columns[i];
    const std::size_t width = std::max(display_width(title), display_width(cell));
    auto pad = [&](const std::string& s) {
      return s + std::string(width - display_width(s), ' ');
    };
    if (i > 0) {
      header += "  ";
      values += "  ";
    }
    header += pad(title);
    values += pad(cell);
  }
  while (!header.empty() && header.back() == ' ') header.pop_back();
  while (!values.empty() && values.back() == ' ') values.pop_back();
  return header + "\n" + values + "\n";
}

// Computes every metric over aligned predicted/ground-truth frame sets.
// FID uses the first registered extractor; perceptual distance is reported
// per extractor as a mean over frame pairs. The detector is optional — when
// absent the feasibility column stays empty.
inline MetricReport evaluate(const std::vector<Frame>& predicted,
                             const std::vector<Frame>& ground_truth,
                             const std::vector<std::shared_ptr<FeatureExtractor>>& extractors,
                             const HandDetector* detector,
                             const std::string& dataset = "",
                             const std::string& split = "") {
  if (predicted.empty()) throw InputDomainError("evaluate: empty prediction set");
  if (predicted.size() != ground_truth.size()) {
    throw InputDomainError("evaluate: prediction/ground-truth count mismatch (" +
                           std::to_string(predicted.size()) + " vs " +
                           std::to_string(ground_truth.size()) + ")");
  }
  if (extractors.empty()) throw ConfigError("evaluate: no feature extractors registered");
  for (const auto& e : extractors) {
    if (!e) throw ConfigError("evaluate: null feature extractor");
  }

  MetricReport r;
  r.dataset = dataset;
  r.split = split;
  r.frames = static_cast<int>(predicted.size());

  double ssim_total = 0.0;
  double psnr_total = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    ssim_total += ssim(predicted[i], ground_truth[i]);
    psnr_total += psnr(predicted[i], ground_truth[i]);
  }
  r.ssim = ssim_total / static_cast<double>(predicted.size());
  r.psnr = psnr_total / static_cast<double>(predicted.size());

  r.fid = fid(predicted, ground_truth, *extractors.front());

  for (const auto& extractor : extractors) {
    double total = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      total += perceptual_distance(predicted[i], ground_truth[i], *extractor);
    }
    r.perceptual.emplace_back(extractor->name(),
                              total / static_cast<double>(predicted.size()));
  }

  if (detector != nullptr) {
    r.feasibility = feasibility(predicted, *detector);
  }
  return r;
}

}  // namespace crossview
