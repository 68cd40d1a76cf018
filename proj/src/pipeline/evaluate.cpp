#include "qe/pipeline/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "qe/weights.hpp"

namespace qe {

namespace fs = std::filesystem;

std::vector<Plane> to_planes(const FrameSequence& seq) {
  std::vector<Plane> out;
  out.reserve(seq.size());
  for (const auto& f : seq.frames) out.push_back(to_plane(f));
  return out;
}

EvalReport evaluate(const std::vector<SequenceTriple>& triples) {
  std::vector<std::future<SequenceReport>> jobs;
  for (const SequenceTriple& s : triples) {
    jobs.push_back(std::async(std::launch::async, [&s] {
      return delta_metrics(s.truth.name, to_planes(s.compressed), to_planes(s.enhanced), to_planes(s.truth));
    }));
  }
  std::vector<SequenceReport> reports;
  for (auto& j : jobs) reports.push_back(j.get());
  return aggregate_report(std::move(reports));
}

EvalReport evaluate_dirs(const fs::path& compressed, const fs::path& enhanced, const fs::path& truth) {
  // Driven by the enhanced side so that a subset of a dataset can be scored.
  const auto enhanced_dirs = list_sequences(enhanced);
  const bool single = enhanced_dirs.size() == 1 && enhanced_dirs[0] == enhanced;
  std::vector<SequenceTriple> triples;
  std::string weights_hash, config_hash;
  for (const fs::path& dir : enhanced_dirs) {
    const fs::path c = single ? compressed : compressed / dir.filename();
    const fs::path g = single ? truth : truth / dir.filename();
    SequenceTriple t{load_sequence(c), load_sequence(dir), load_sequence(g)};
    if (t.compressed.size() != t.truth.size() || t.enhanced.size() != t.truth.size()) {
      throw DataError("sequence '" + dir.filename().string() + "' has different frame counts across the three inputs");
    }
    if (auto it = t.enhanced.provenance.find("weights_hash"); it != t.enhanced.provenance.end()) weights_hash = it->second;
    if (auto it = t.enhanced.provenance.find("config_hash"); it != t.enhanced.provenance.end()) config_hash = it->second;
    triples.push_back(std::move(t));
  }
  EvalReport report = evaluate(triples);
  report.weights_hash = weights_hash;
  report.config_hash = config_hash;
  return report;
}

std::string render_curve_svg(const SequenceReport& seq) {
  const double width = 640, height = 360, left = 60, right = 20, top = 30, bottom = 45;
  const auto& a = seq.psnr_compressed;
  const auto& b = seq.psnr_enhanced;
  double lo = 1e300, hi = -1e300;
  for (double v : a) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : b) lo = std::min(lo, v), hi = std::max(hi, v);
  if (a.empty() && b.empty()) lo = 0, hi = 1;
  if (hi - lo < 1e-9) lo -= 0.5, hi += 0.5;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const std::size_t n = std::max(a.size(), b.size());
  auto px = [&](std::size_t i) {
    return left + (n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.5) * (width - left - right);
  };
  auto py = [&](double v) { return top + (hi - v) / (hi - lo) * (height - top - bottom); };
  auto polyline = [&](const std::vector<double>& ys, const char* color) {
    std::ostringstream os;
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < ys.size(); ++i) os << (i ? " " : "") << px(i) << ',' << py(ys[i]);
    os << "\"/>\n";
    return os.str();
  };

  std::ostringstream svg;
  svg.precision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\" viewBox=\"0 0 "
      << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" << seq.name
      << " PSNR per frame (dB)</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right << "\" y2=\""
      << height - bottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << height - bottom
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    svg << "<text x=\"" << left - 6 << "\" y=\"" << py(v) + 4 << "\" font-family=\"sans-serif\" font-size=\"10\" "
        << "text-anchor=\"end\">" << std::round(v * 100.0) / 100.0 << "</text>\n";
  }
  svg << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 10
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">frame</text>\n";
  svg << polyline(a, "#c0392b") << polyline(b, "#2471a3");
  svg << "<text x=\"" << width - right - 150 << "\" y=\"" << top + 12
      << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#c0392b\">compressed PVD " << seq.compressed_stats.pvd
      << "</text>\n";
  svg << "<text x=\"" << width - right - 150 << "\" y=\"" << top + 26
      << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#2471a3\">enhanced PVD " << seq.enhanced_stats.pvd
      << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

std::vector<fs::path> plot_curves(const EvalReport& report, const fs::path& out) {
  fs::create_directories(out);
  std::vector<fs::path> written;
  for (const SequenceReport& s : report.sequences) {
    const fs::path file = out / (s.name + "_psnr.svg");
    write_text_atomic(file, render_curve_svg(s));
    written.push_back(file);
  }
  return written;
}

}  // namespace qe
