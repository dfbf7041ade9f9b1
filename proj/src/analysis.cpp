#include "guard/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "httplib.h"
#include "json.hpp"

#include "guard/answer.hpp"
#include "guard/errors.hpp"
#include "guard/text.hpp"

namespace guard {

using nlohmann::json;

std::vector<Segment> segment_trajectory(const std::string& text) {
  static const std::string kDelim = "\n\n";
  std::vector<Segment> segments;
  size_t content_start = 0;
  size_t pending_begin = 0;  // leading delimiter chars attach to the first segment
  bool has_pending = false;
  size_t i = 0;
  for (;;) {
    const size_t d = text.find(kDelim, i);
    const size_t content_end = d == std::string::npos ? text.size() : d;
    const std::string content = text.substr(content_start, content_end - content_start);
    const size_t char_end = d == std::string::npos ? text.size() : d + kDelim.size();
    if (!content.empty()) {
      Segment seg;
      seg.index = static_cast<int>(segments.size()) + 1;
      seg.text = content;
      seg.char_begin = has_pending ? pending_begin : content_start;
      seg.char_end = char_end;
      segments.push_back(std::move(seg));
      has_pending = false;
    } else if (!segments.empty()) {
      segments.back().char_end = char_end;  // doubled/trailing delimiter
    } else if (!has_pending) {
      has_pending = true;
      pending_begin = content_start;
    }
    if (d == std::string::npos) break;
    i = d + kDelim.size();
    content_start = i;
  }
  return segments;
}

namespace {

// Character offset of each token's text within decoded_text, accounting for
// injected steering text recorded in branch-selected events.
std::vector<size_t> token_offsets(const TrajectoryRecord& rec) {
  std::vector<size_t> offsets(rec.tokens.size(), 0);
  size_t off = 0;
  size_t ei = 0;
  auto consume_injections_at = [&](int64_t position) {
    while (ei < rec.events.size() && rec.events[ei].position <= position) {
      const InterventionEvent& ev = rec.events[ei];
      // Terminal selections never emit their steering text.
      if (ev.kind == EventKind::BranchSelected && ev.position == position &&
          !ev.terminal_branch && !ev.injected_text.empty()) {
        if (off + ev.injected_text.size() > rec.decoded_text.size() ||
            rec.decoded_text.compare(off, ev.injected_text.size(), ev.injected_text) != 0)
          throw AlignmentError("injected text does not match decoded_text", off);
        off += ev.injected_text.size();
      }
      ++ei;
    }
  };

  for (size_t t = 0; t < rec.tokens.size(); ++t) {
    consume_injections_at(static_cast<int64_t>(t));
    const std::string& tok = rec.tokens[t];
    if (off + tok.size() > rec.decoded_text.size() ||
        rec.decoded_text.compare(off, tok.size(), tok) != 0)
      throw AlignmentError("token text does not match decoded_text", off);
    offsets[t] = off;
    off += tok.size();
  }
  consume_injections_at(static_cast<int64_t>(rec.tokens.size()));
  if (off != rec.decoded_text.size())
    throw AlignmentError("decoded_text extends past the token sequence", off);
  return offsets;
}

}  // namespace

void align_segments_to_tokens(const TrajectoryRecord& rec, std::vector<Segment>& segments) {
  // Segments must partition the decoded text.
  size_t expect = 0;
  for (const Segment& s : segments) {
    if (s.char_begin != expect)
      throw AlignmentError("segments do not partition the decoded text", s.char_begin);
    expect = s.char_end;
  }
  if (expect != rec.decoded_text.size())
    throw AlignmentError("segments do not cover the decoded text", expect);
  if (segments.empty()) {
    if (!rec.tokens.empty())
      throw AlignmentError("tokens present but no segments to hold them", 0);
    return;
  }

  const std::vector<size_t> offsets = token_offsets(rec);
  size_t s = 0;
  for (size_t t = 0; t < offsets.size(); ++t) {
    while (s < segments.size() && offsets[t] >= segments[s].char_end) ++s;
    if (s >= segments.size())
      throw AlignmentError("token starts past the last segment", offsets[t]);
    Segment& seg = segments[s];
    if (seg.span_begin == 0) seg.span_begin = static_cast<int64_t>(t) + 1;
    seg.span_end = static_cast<int64_t>(t) + 1;
  }
}

void segment_entropy_profile(const TrajectoryRecord& rec, std::vector<Segment>& segments) {
  for (Segment& seg : segments) {
    if (seg.span_begin < 1 || seg.span_end < seg.span_begin)
      throw DomainError("segment " + std::to_string(seg.index) + " spans no tokens");
    const auto begin = static_cast<size_t>(seg.span_begin - 1);
    const auto count = static_cast<size_t>(seg.span_end - seg.span_begin + 1);
    seg.mean_entropy =
        mean_entropy(std::span<const double>(rec.entropies).subspan(begin, count));
  }
}

MarkerOracle::MarkerOracle(std::vector<std::string> markers) : markers_(std::move(markers)) {
  if (markers_.empty()) throw DomainError("marker oracle needs at least one marker");
}

std::vector<int> MarkerOracle::label(const std::string&, const std::vector<Segment>& segments) {
  std::vector<int> labels;
  labels.reserve(segments.size());
  for (const Segment& s : segments) {
    bool invalid = false;
    for (const auto& m : markers_) {
      if (!m.empty() && s.text.find(m) != std::string::npos) {
        invalid = true;
        break;
      }
    }
    labels.push_back(invalid ? 0 : 1);
  }
  return labels;
}

RemoteJudgeOracle::RemoteJudgeOracle(std::string endpoint, std::string path, std::string api_key)
    : endpoint_(std::move(endpoint)), path_(std::move(path)), api_key_(std::move(api_key)) {
  if (endpoint_.empty()) throw ValidationError("judge oracle requires an endpoint");
}

std::vector<int> RemoteJudgeOracle::label(const std::string& problem,
                                          const std::vector<Segment>& segments) {
  json req;
  req["problem"] = problem;
  req["criterion"] =
      "A segment is invalid if it introduces an error that prevents reaching the correct final "
      "answer. Label each segment 1 (valid) or 0 (invalid) given the problem and the preceding "
      "segments.";
  json segs = json::array();
  for (const Segment& s : segments) segs.push_back(s.text);
  req["segments"] = segs;

  httplib::Client client(endpoint_);
  if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);
  auto res = client.Post(path_, req.dump(), "application/json");
  if (!res || res->status != 200)
    throw TransportError("judge request failed: " +
                         (res ? "http status " + std::to_string(res->status)
                              : httplib::to_string(res.error())));
  json doc;
  try {
    doc = json::parse(res->body);
  } catch (const json::exception& e) {
    throw ParseError(std::string("judge response is not JSON: ") + e.what());
  }
  if (!doc.contains("labels") || !doc["labels"].is_array())
    throw ParseError("judge response lacks a labels array");

  // Gaps stay explicit: anything missing or non-binary is -1.
  std::vector<int> labels(segments.size(), -1);
  for (size_t i = 0; i < segments.size() && i < doc["labels"].size(); ++i) {
    const json& v = doc["labels"][i];
    if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1))
      labels[i] = v.get<int>();
  }
  return labels;
}

std::vector<int> detect_onsets(std::span<const int> labels) {
  if (labels.empty()) throw DomainError("onset detection over empty labels");
  std::vector<int> onsets;
  for (size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] != 0 && labels[k] != 1)
      throw DomainError("labels must be binary; found a gap at segment " + std::to_string(k + 1));
    const bool prev_valid = k == 0 || labels[k - 1] == 1;  // empty prefix is vacuously valid
    if (labels[k] == 0 && prev_valid) onsets.push_back(static_cast<int>(k) + 1);
  }
  return onsets;
}

OnsetStatistics onset_statistics(const std::vector<TrajectoryDigest>& corpus, int bins,
                                 double early_cutoff) {
  if (corpus.empty()) throw DomainError("onset statistics over an empty corpus");
  if (bins < 1) throw DomainError("histogram needs at least one bin");

  OnsetStatistics stats;
  stats.trajectories = static_cast<int64_t>(corpus.size());
  int64_t single_invalid = 0;
  int64_t any_invalid = 0;
  for (const TrajectoryDigest& d : corpus) {
    const int correctness = d.correct.has_value() ? (*d.correct ? 0 : 1) : 2;
    stats.segment_count_distribution[d.segment_count][static_cast<size_t>(correctness)] += 1;
    if (d.invalid_count > 0) {
      ++any_invalid;
      stats.invalid_count_distribution[d.invalid_count] += 1;
      if (d.invalid_count == 1) ++single_invalid;
    }
    if (!d.onsets.empty()) {
      ++stats.trajectories_with_onsets;
      if (d.segment_count < 1) throw DomainError("digest with onsets but no segments");
      stats.first_onset_positions.push_back(static_cast<double>(d.onsets.front()) /
                                            static_cast<double>(d.segment_count));
    }
  }

  stats.position_histogram.resize(static_cast<size_t>(bins));
  for (int b = 0; b < bins; ++b) {
    stats.position_histogram[static_cast<size_t>(b)].lo = static_cast<double>(b) / bins;
    stats.position_histogram[static_cast<size_t>(b)].hi = static_cast<double>(b + 1) / bins;
  }
  int64_t early = 0;
  for (double pos : stats.first_onset_positions) {
    // Positions lie in (0,1]; the bin owning pos is the one with lo < pos <= hi.
    int b = static_cast<int>(std::ceil(pos * bins)) - 1;
    b = std::clamp(b, 0, bins - 1);
    stats.position_histogram[static_cast<size_t>(b)].count += 1;
    if (pos <= early_cutoff) ++early;
  }
  const auto n_pos = static_cast<double>(stats.first_onset_positions.size());
  for (auto& bin : stats.position_histogram)
    bin.fraction = n_pos > 0 ? static_cast<double>(bin.count) / n_pos : 0.0;
  stats.early_fraction = n_pos > 0 ? static_cast<double>(early) / n_pos : 0.0;
  stats.single_invalid_fraction =
      any_invalid > 0 ? static_cast<double>(single_invalid) / static_cast<double>(any_invalid)
                      : 0.0;
  return stats;
}

Kde2dGrid kde2d_silverman(std::span<const std::pair<double, double>> points, int grid_x,
                          int grid_y, double pad_sigmas) {
  const size_t n = points.size();
  if (n < 2) throw DomainError("KDE requires at least 2 points");
  if (grid_x < 2 || grid_y < 2) throw DomainError("KDE grid needs at least 2 nodes per axis");

  double mean_x = 0.0, mean_y = 0.0;
  for (const auto& [px, py] : points) {
    mean_x += px;
    mean_y += py;
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);
  double var_x = 0.0, var_y = 0.0;
  for (const auto& [px, py] : points) {
    var_x += (px - mean_x) * (px - mean_x);
    var_y += (py - mean_y) * (py - mean_y);
  }
  var_x /= static_cast<double>(n - 1);
  var_y /= static_cast<double>(n - 1);

  constexpr int d = 2;
  constexpr double kBandwidthFloor = 1e-3;
  const double factor =
      std::pow(4.0 / (d + 2), 1.0 / (d + 4)) * std::pow(static_cast<double>(n), -1.0 / (d + 4));
  Kde2dGrid grid;
  grid.bandwidth_x = std::max(std::sqrt(var_x) * factor, kBandwidthFloor);
  grid.bandwidth_y = std::max(std::sqrt(var_y) * factor, kBandwidthFloor);

  auto linspace = [](double lo, double hi, int count) {
    std::vector<double> v(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i)
      v[static_cast<size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
    return v;
  };
  double min_x = points[0].first, max_x = points[0].first;
  double min_y = points[0].second, max_y = points[0].second;
  for (const auto& [px, py] : points) {
    min_x = std::min(min_x, px);
    max_x = std::max(max_x, px);
    min_y = std::min(min_y, py);
    max_y = std::max(max_y, py);
  }
  grid.x = linspace(min_x - pad_sigmas * grid.bandwidth_x, max_x + pad_sigmas * grid.bandwidth_x,
                    grid_x);
  grid.y = linspace(min_y - pad_sigmas * grid.bandwidth_y, max_y + pad_sigmas * grid.bandwidth_y,
                    grid_y);

  // Separable product kernel: precompute the per-axis factors, then combine.
  std::vector<double> kx(static_cast<size_t>(grid_x) * n);
  std::vector<double> ky(static_cast<size_t>(grid_y) * n);
  for (int ix = 0; ix < grid_x; ++ix) {
    for (size_t s = 0; s < n; ++s) {
      const double z = (grid.x[static_cast<size_t>(ix)] - points[s].first) / grid.bandwidth_x;
      kx[static_cast<size_t>(ix) * n + s] = std::exp(-0.5 * z * z);
    }
  }
  for (int iy = 0; iy < grid_y; ++iy) {
    for (size_t s = 0; s < n; ++s) {
      const double z = (grid.y[static_cast<size_t>(iy)] - points[s].second) / grid.bandwidth_y;
      ky[static_cast<size_t>(iy) * n + s] = std::exp(-0.5 * z * z);
    }
  }
  const double norm = 1.0 / (static_cast<double>(n) * 2.0 * M_PI * grid.bandwidth_x *
                             grid.bandwidth_y);
  grid.density.assign(static_cast<size_t>(grid_x) * static_cast<size_t>(grid_y), 0.0);
  for (int iy = 0; iy < grid_y; ++iy) {
    for (int ix = 0; ix < grid_x; ++ix) {
      double acc = 0.0;
      for (size_t s = 0; s < n; ++s)
        acc += kx[static_cast<size_t>(ix) * n + s] * ky[static_cast<size_t>(iy) * n + s];
      grid.density[static_cast<size_t>(iy) * static_cast<size_t>(grid_x) +
                   static_cast<size_t>(ix)] = acc * norm;
    }
  }
  return grid;
}

RecoverabilityReport recoverability_probe(const TrajectoryRecord& rec, int onset_k,
                                          Backend& backend, const ProbeConfig& cfg) {
  if (onset_k < 1) throw DomainError("onset index must be >= 1");
  if (cfg.num_samples < 1) throw DomainError("probe needs at least one sample");
  if (rec.gold.empty()) throw DomainError("recoverability probe requires a gold answer");

  std::vector<Segment> segments = segment_trajectory(rec.decoded_text);
  if (onset_k > static_cast<int>(segments.size()))
    throw DomainError("onset index exceeds the segment count");

  size_t anchor_off = 0;
  int64_t used_at_anchor = 0;
  if (onset_k > 1) {
    align_segments_to_tokens(rec, segments);
    const Segment& anchor = segments[static_cast<size_t>(onset_k - 2)];
    anchor_off = anchor.char_end;
    used_at_anchor = anchor.span_end;
  }
  const std::string anchor_generated = rec.decoded_text.substr(0, anchor_off);

  int64_t per_sample = cfg.max_tokens_per_sample;
  if (per_sample <= 0) per_sample = rec.budget.max_tokens - used_at_anchor;
  if (per_sample < 1) throw DomainError("no remaining budget at the anchor");

  RecoverabilityReport report;
  report.trajectory_id = rec.prompt_index;
  report.onset_index = onset_k;
  report.anchor_index = onset_k - 1;

  const Prefix anchor_prefix{rec.prompt, anchor_generated};
  for (int i = 0; i < cfg.num_samples; ++i) {
    DecodePolicy policy;
    policy.temperature = cfg.temperature;
    policy.top_p = cfg.top_p;
    policy.seed = mix64(cfg.seed, static_cast<uint64_t>(i));
    SpanResult span;
    try {
      span = backend.generate_span(anchor_prefix, "", static_cast<int>(per_sample), policy);
    } catch (const TransportError& e) {
      report.complete = false;
      report.error_detail = e.what();
      break;
    }
    ++report.num_samples;
    const auto answer = extract_boxed_answer(anchor_generated + span.text);
    if (answer && check_answer(*answer, rec.gold)) ++report.num_correct;
  }
  report.recoverable = report.num_correct >= 1;
  return report;
}

}  // namespace guard
